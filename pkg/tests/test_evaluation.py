import numpy as np
import pytest

from cwseg.context import extract_window
from cwseg.errors import PreconditionError
from cwseg.evaluation import (
    classify_image,
    efficiency,
    evaluate,
    format_reports,
    pixel_accuracy,
    render,
    segment_image,
)
from cwseg.image_io import GroundTruthMask, RasterImage
from cwseg.mlp import unpack_params
from cwseg.nn_baseline import NNModel
from cwseg.sampler import LabeledSample
from cwseg.schemas import Label, LayerSpec, SampleCategory, Split


@pytest.mark.parametrize(
    "correct, total, expected",
    [
        (549, 700, 78.43),
        (241, 300, 80.33),
        (520, 700, 74.29),
        (212, 300, 70.67),
        (530, 700, 75.71),
        (209, 300, 69.67),
        (699, 700, 99.86),
        (261, 300, 87.00),
        (550, 700, 78.57),
        (225, 300, 75.00),
    ],
)
def test_reported_percentages(correct, total, expected):
    assert efficiency(correct, total) == expected


def test_half_rounds_away_from_zero():
    # 100 / 32 = 3.125
    assert efficiency(1, 32) == 3.13
    assert efficiency(0, 5) == 0.0
    assert efficiency(5, 5) == 100.0


@pytest.mark.parametrize("correct, total", [(1, 0), (-1, 5), (6, 5)])
def test_efficiency_preconditions(correct, total):
    with pytest.raises(PreconditionError):
        efficiency(correct, total)


class _CenterThreshold:
    """Labels OBJECT when the window's center feature is bright."""

    def __init__(self, width):
        self.width = width

    @property
    def input_width(self):
        return self.width

    def predict(self, features):
        return np.asarray(features)[:, self.width // 2] > 0.0


def _sample(value, label, width=9):
    return LabeledSample(np.full(width, value), label, SampleCategory.INTERIOR, "s", (0, 0))


def test_evaluate_counts_correct_samples():
    samples = [
        _sample(0.5, Label.OBJECT),
        _sample(-0.5, Label.BACKGROUND),
        _sample(0.5, Label.BACKGROUND),
        _sample(-0.2, Label.OBJECT),
    ]
    rep = evaluate(_CenterThreshold(9), samples, Split.TEST)
    assert (rep.total, rep.correct, rep.efficiency) == (4, 2, 50.0)
    assert rep.line() == "test,4,2,50.00"


def test_evaluate_rejects_empty_split_and_width_mismatch():
    with pytest.raises(PreconditionError):
        evaluate(_CenterThreshold(9), [], Split.TRAIN)
    with pytest.raises(PreconditionError):
        evaluate(_CenterThreshold(25), [_sample(0.1, Label.OBJECT)], Split.TRAIN)


def test_classify_image_agrees_with_pixelwise_prediction(gray_image):
    nn = NNModel(np.random.default_rng(0).uniform(-1, 1, (15, 9)), np.arange(15) % 2 == 0)
    mask = classify_image(nn, gray_image, 3)

    for y in range(gray_image.height):
        for x in range(gray_image.width):
            expected = nn.predict(extract_window(gray_image, (x, y), 3).features[None, :])[0]
            assert mask.labels[y, x] == expected


def test_segment_outputs_mask_and_gray_masked():
    pixels = np.array([[10, 200, 30], [220, 5, 250]], dtype=np.uint8)[:, :, None]
    image = RasterImage(pixels)
    result = segment_image(_CenterThreshold(9), image, 3)
    assert result.mask.labels.tolist() == [[False, True, False], [True, False, True]]
    assert result.mask_image.data.tolist() == [0, 255, 0, 255, 0, 255]
    assert result.gray_masked.data.tolist() == [0, 200, 0, 220, 0, 250]


def test_color_image_with_gray_sized_classifier_is_converted(color_image):
    mask = classify_image(_CenterThreshold(9), color_image, 3)
    assert mask.labels.shape == (color_image.height, color_image.width)
    result = render(mask, color_image)
    assert result.gray_masked.channels == 1
    with pytest.raises(PreconditionError):
        classify_image(_CenterThreshold(10), color_image, 3)


def test_pixel_accuracy():
    truth = GroundTruthMask(np.array([[True, False], [False, False]]))
    predicted = GroundTruthMask(np.array([[True, True], [False, False]]))
    rep = pixel_accuracy(predicted, truth)
    assert rep.split == Split.IMAGE
    assert rep.efficiency == 75.0
    with pytest.raises(PreconditionError):
        pixel_accuracy(GroundTruthMask(np.zeros((3, 2), dtype=bool)), truth)


def test_format_reports_lines():
    text = format_reports([pixel_accuracy(GroundTruthMask(np.ones((1, 3), dtype=bool)),
                                          GroundTruthMask(np.ones((1, 3), dtype=bool)))])
    assert text == "split,total,correct,efficiency\nimage,3,3,100.00\n"


def test_all_zero_network_scores_half_on_a_balanced_split():
    spec = LayerSpec(sizes=[9, 18, 10, 2])
    zero = unpack_params(spec, np.zeros(spec.n_params))
    rng = np.random.default_rng(6)
    samples = [
        LabeledSample(rng.uniform(-1, 1, 9), label, SampleCategory.INTERIOR, "s", (i, 0))
        for i, label in enumerate([Label.OBJECT, Label.BACKGROUND] * 150)
    ]
    rep = evaluate(zero, samples, Split.TEST)
    assert rep.line() == "test,300,150,50.00"


class _AlwaysObject:
    input_width = 9

    def predict(self, features):
        return np.ones(len(features), dtype=bool)


def test_always_object_keeps_every_gray_value(gray_image):
    result = segment_image(_AlwaysObject(), gray_image, 3)
    assert np.all(result.mask_image.pixels == 255)
    assert np.array_equal(result.gray_masked.pixels, gray_image.pixels)


def test_lookup_classifier_reproduces_the_known_mask(square_mask):
    # OBJECT pixels are the only bright ones, so the window center identifies the label
    image = RasterImage(np.where(square_mask.labels, 210, 40).astype(np.uint8)[:, :, None])
    result = segment_image(_CenterThreshold(25), image, 5)
    assert np.array_equal(result.mask.labels, square_mask.labels)
    assert np.array_equal(result.mask_image.pixels[:, :, 0], np.where(square_mask.labels, 255, 0))
