"""
Classification efficiency, whole-image accuracy and segmentation rendering.
"""
import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Protocol, Sequence

import numpy as np

from cwseg.context import iter_row_windows, window_length
from cwseg.errors import PreconditionError
from cwseg.image_io import GroundTruthMask, RasterImage, rgb_to_gray
from cwseg.sampler import LabeledSample, as_arrays
from cwseg.schemas import EfficiencyReport, Split

logger = logging.getLogger(__name__)


class PixelClassifier(Protocol):
    """Anything that maps (N, K) window features to N booleans (True = OBJECT)."""

    @property
    def input_width(self) -> int: ...

    def predict(self, features: np.ndarray) -> np.ndarray: ...


@dataclass
class SegmentationResult:
    mask: GroundTruthMask
    mask_image: RasterImage  # OBJECT -> 255, BACKGROUND -> 0
    gray_masked: RasterImage  # gray value on OBJECT, 0 on BACKGROUND


def efficiency(correct: int, total: int) -> float:
    """100 * correct / total, rounded half away from zero to 2 decimals."""
    if total < 1:
        raise PreconditionError("total must be >= 1")
    if not 0 <= correct <= total:
        raise PreconditionError(f"correct={correct} outside [0, {total}]")
    value = (Decimal(100 * correct) / Decimal(total)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return float(value)


def report(split: Split, correct: int, total: int) -> EfficiencyReport:
    return EfficiencyReport(split=split, total=total, correct=correct, efficiency=efficiency(correct, total))


def evaluate(classifier: PixelClassifier, samples: Sequence[LabeledSample], split: Split = Split.TEST) -> EfficiencyReport:
    if not samples:
        raise PreconditionError(f"{split.value} split is empty")
    X, y = as_arrays(samples)
    if X.shape[1] != classifier.input_width:
        raise PreconditionError(
            f"sample width {X.shape[1]} does not match classifier width {classifier.input_width}"
        )
    predicted = np.asarray(classifier.predict(X), dtype=bool)
    correct = int((predicted == y).sum())
    result = report(split, correct, len(samples))
    logger.info(f"[eval] {result.line()}")
    return result


def _features_image(classifier: PixelClassifier, image: RasterImage, window: int) -> RasterImage:
    if classifier.input_width == window_length(window, image.channels):
        return image
    if image.channels == 3 and classifier.input_width == window_length(window, 1):
        return rgb_to_gray(image)
    raise PreconditionError(
        f"classifier width {classifier.input_width} does not fit a {window}x{window} window "
        f"on a {image.channels}-channel image"
    )


def classify_image(classifier: PixelClassifier, image: RasterImage, window: int) -> GroundTruthMask:
    source = _features_image(classifier, image, window)
    labels = np.empty((image.height, image.width), dtype=bool)
    for y0, features in iter_row_windows(source, window):
        block = np.asarray(classifier.predict(features), dtype=bool)
        rows = block.reshape(-1, image.width)
        labels[y0:y0 + rows.shape[0]] = rows
    return GroundTruthMask(labels)


def render(mask: GroundTruthMask, image: RasterImage) -> SegmentationResult:
    gray = image if image.channels == 1 else rgb_to_gray(image)
    masked = np.where(mask.labels[:, :, None], gray.pixels, 0).astype(np.uint8)
    return SegmentationResult(mask=mask, mask_image=mask.to_image(), gray_masked=RasterImage(masked))


def segment_image(classifier: PixelClassifier, image: RasterImage, window: int) -> SegmentationResult:
    mask = classify_image(classifier, image, window)
    result = render(mask, image)
    logger.info(f"[segment] {image.width}x{image.height}, window={window}, object fraction={mask.labels.mean():.3f}")
    return result


def pixel_accuracy(predicted: GroundTruthMask, truth: GroundTruthMask) -> EfficiencyReport:
    if predicted.labels.shape != truth.labels.shape:
        raise PreconditionError("predicted and ground-truth masks differ in size")
    correct = int((predicted.labels == truth.labels).sum())
    return report(Split.IMAGE, correct, truth.labels.size)


def format_reports(reports: Iterable[EfficiencyReport]) -> str:
    return "\n".join(["split,total,correct,efficiency"] + [r.line() for r in reports]) + "\n"
