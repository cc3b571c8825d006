"""
The sample -> train -> evaluate protocol, shared by the CLI and tests.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from cwseg.context import window_length
from cwseg.errors import ConvergenceError, PreconditionError
from cwseg.evaluation import PixelClassifier, evaluate
from cwseg.image_io import GroundTruthMask, RasterImage
from cwseg.mlp import TrainResult, init_weights, train_gd, train_lm
from cwseg.nn_baseline import NNModel
from cwseg.sampler import Dataset, sample_dataset
from cwseg.schemas import ClassifierKind, LayerSpec, Split, SweepRow, TrainConfig

logger = logging.getLogger(__name__)

ImageSet = Sequence[Tuple[RasterImage, GroundTruthMask, str]]


@dataclass
class BuiltClassifier:
    classifier: PixelClassifier
    training: Optional[TrainResult] = None


def default_layers(window: int, channels: int = 1) -> LayerSpec:
    return LayerSpec(sizes=[window_length(window, channels), 18, 10, 2])


def build_classifier(
    kind: ClassifierKind,
    dataset: Dataset,
    layers: Optional[LayerSpec] = None,
    config: Optional[TrainConfig] = None,
    trainer: str = "lm",
) -> BuiltClassifier:
    if kind == ClassifierKind.NN:
        return BuiltClassifier(NNModel.from_dataset(dataset))
    if kind != ClassifierKind.MLP:
        raise PreconditionError(f"{kind.value} is not a trainable classifier")

    config = config or TrainConfig()
    layers = layers or LayerSpec(sizes=[dataset.width, 18, 10, 2])
    if layers.n_in != dataset.width:
        raise PreconditionError(
            f"dataset width {dataset.width} does not match network input {layers.n_in}"
        )
    model = init_weights(layers, config.seed)
    train = train_lm if trainer == "lm" else train_gd
    result = train(model, dataset, config)
    return BuiltClassifier(result.model, result)


def run_window_sweep(
    images: ImageSet,
    windows: Sequence[int] = (5, 7, 9, 11),
    kinds: Sequence[ClassifierKind] = (ClassifierKind.MLP, ClassifierKind.NN),
    total: int = 1000,
    band: int = 4,
    seed: int = 0,
    config: Optional[TrainConfig] = None,
) -> List[SweepRow]:
    rows: List[SweepRow] = []
    channels = images[0][0].channels
    for window in windows:
        dataset = sample_dataset(images, window, total=total, band=band, seed=seed)
        for kind in kinds:
            layers = default_layers(window, channels) if kind == ClassifierKind.MLP else None
            logger.info(f"[sweep] window={window} classifier={kind.value}")
            try:
                built = build_classifier(kind, dataset, layers, config)
            except ConvergenceError as e:
                logger.warning(f"[sweep] {e}; evaluating best model reached")
                built = BuiltClassifier(e.result.model, e.result)
            rows.append(SweepRow(
                window=window,
                classifier=kind,
                layers=str(layers) if layers else None,
                train=evaluate(built.classifier, dataset.train, Split.TRAIN),
                test=evaluate(built.classifier, dataset.test, Split.TEST),
            ))
    return rows


def format_sweep(rows: Sequence[SweepRow]) -> str:
    lines = ["window,classifier,train_total,train_correct,train_efficiency,test_total,test_correct,test_efficiency"]
    for r in rows:
        lines.append(
            f"{r.window},{r.classifier.value},"
            f"{r.train.total},{r.train.correct},{r.train.efficiency:.2f},"
            f"{r.test.total},{r.test.correct},{r.test.efficiency:.2f}"
        )
    return "\n".join(lines) + "\n"
