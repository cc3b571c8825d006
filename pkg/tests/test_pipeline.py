import numpy as np
import pytest

from cwseg.errors import ConvergenceError, PreconditionError
from cwseg.evaluation import evaluate, pixel_accuracy, segment_image
from cwseg.image_io import write_image
from cwseg.mlp import save_model
from cwseg.nn_baseline import NNModel
from cwseg.pipeline import build_classifier, default_layers, format_sweep, run_window_sweep
from cwseg.sampler import sample_dataset
from cwseg.schemas import ClassifierKind, LayerSpec, Split, TrainConfig
from cwseg.synthetic import two_texture_image


def test_default_layers_follow_window():
    assert default_layers(9).sizes == [81, 18, 10, 2]
    assert default_layers(5, channels=3).sizes == [75, 18, 10, 2]


def test_build_nn_uses_train_split(texture_pair):
    image, mask = texture_pair
    ds = sample_dataset([(image, mask, "t")], window=3, total=100)
    built = build_classifier(ClassifierKind.NN, ds)
    assert isinstance(built.classifier, NNModel)
    assert built.training is None
    assert built.classifier.features.shape == (70, 9)


def test_build_rejects_mismatched_layers_and_gabor(texture_pair):
    image, mask = texture_pair
    ds = sample_dataset([(image, mask, "t")], window=3, total=100)
    with pytest.raises(PreconditionError):
        build_classifier(ClassifierKind.MLP, ds, LayerSpec(sizes=[25, 4, 3, 2]))
    with pytest.raises(PreconditionError):
        build_classifier(ClassifierKind.GABOR, ds)


def test_small_pipeline_is_deterministic(tmp_path, texture_pair):
    image, mask = texture_pair
    outputs = []
    for run in ("a", "b"):
        ds = sample_dataset([(image, mask, "t")], window=3, total=200, seed=4)
        built = build_classifier(ClassifierKind.MLP, ds, config=TrainConfig(max_epochs=40, seed=4))
        seg = segment_image(built.classifier, image, 3)
        save_model(built.classifier, tmp_path / f"{run}.txt")
        write_image(seg.mask_image, tmp_path / f"{run}.pgm")
        rep = evaluate(built.classifier, ds.test, Split.TEST)
        outputs.append(rep.line())
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()
    assert outputs[0] == outputs[1]


def test_small_sweep_table(texture_pair):
    image, mask = texture_pair
    rows = run_window_sweep(
        [(image, mask, "t")], windows=(3, 5), kinds=(ClassifierKind.MLP, ClassifierKind.NN),
        total=100, config=TrainConfig(max_epochs=10),
    )
    assert [(r.window, r.classifier) for r in rows] == [
        (3, ClassifierKind.MLP), (3, ClassifierKind.NN), (5, ClassifierKind.MLP), (5, ClassifierKind.NN),
    ]
    assert rows[0].layers == "9-18-10-2"
    assert rows[1].layers is None
    lines = format_sweep(rows).splitlines()
    assert lines[0] == "window,classifier,train_total,train_correct,train_efficiency,test_total,test_correct,test_efficiency"
    assert len(lines) == 5
    assert lines[1].startswith("3,mlp,70,")
    # a 1-NN model recalls its own training samples
    assert rows[1].train.efficiency == 100.0


@pytest.mark.slow
def test_two_texture_segmentation_end_to_end():
    image, mask = two_texture_image(128, seed=0)
    ds = sample_dataset([(image, mask, "two-texture")], window=9, total=1000, seed=0)
    assert (len(ds.train), len(ds.test)) == (700, 300)
    try:
        model = build_classifier(ClassifierKind.MLP, ds, default_layers(9), TrainConfig(seed=0)).classifier
    except ConvergenceError as e:
        model = e.result.model
    test = evaluate(model, ds.test, Split.TEST)
    assert test.efficiency >= 95.0
    seg = segment_image(model, image, 9)
    assert pixel_accuracy(seg.mask, mask).efficiency >= 90.0


@pytest.mark.slow
def test_window_sweep_emits_one_row_per_window():
    image, mask = two_texture_image(128, seed=0)
    rows = run_window_sweep([(image, mask, "two-texture")], windows=(5, 7, 9, 11),
                            kinds=(ClassifierKind.MLP,), config=TrainConfig(max_epochs=100))
    assert [r.window for r in rows] == [5, 7, 9, 11]
    assert all(r.test.total == 300 for r in rows)
    assert len(format_sweep(rows).splitlines()) == 5
    assert np.isfinite([r.test.efficiency for r in rows]).all()
