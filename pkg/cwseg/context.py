"""
Context-window (CW) extraction.

A pixel's feature vector is its size x size neighborhood flattened
row-major over pixels, channel-minor, with out-of-frame positions filled by
replicating the nearest edge pixel. Intensities v map to v / 127.5 - 1.
"""
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from cwseg.errors import PreconditionError
from cwseg.image_io import RasterImage

Coord = Tuple[int, int]


@dataclass(frozen=True)
class ContextWindow:
    center: Coord
    size: int
    channels: int
    features: np.ndarray


def _check_size(size: int) -> None:
    if size < 3 or size % 2 == 0:
        raise PreconditionError(f"window size must be odd and >= 3, got {size}")


def window_length(size: int, channels: int = 1) -> int:
    if size < 1 or size % 2 == 0:
        raise PreconditionError(f"window size must be odd, got {size}")
    return size * size * channels


def normalize(values: np.ndarray) -> np.ndarray:
    return values.astype(np.float64) / 127.5 - 1.0


def _padded(image: RasterImage, size: int) -> np.ndarray:
    r = size // 2
    return np.pad(image.pixels, ((r, r), (r, r), (0, 0)), mode="edge")


def extract_window(image: RasterImage, center: Coord, size: int) -> ContextWindow:
    _check_size(size)
    x, y = center
    if not (0 <= x < image.width and 0 <= y < image.height):
        raise PreconditionError(
            f"center {center} outside {image.width}x{image.height} image"
        )
    r = size // 2
    xs = np.clip(np.arange(x - r, x + r + 1), 0, image.width - 1)
    ys = np.clip(np.arange(y - r, y + r + 1), 0, image.height - 1)
    patch = image.pixels[np.ix_(ys, xs)]
    return ContextWindow(
        center=(x, y),
        size=size,
        channels=image.channels,
        features=normalize(patch.reshape(-1)),
    )


def extract_windows(image: RasterImage, coords: Sequence[Coord], size: int) -> np.ndarray:
    """Feature matrix (len(coords), size²·channels) for the given centers."""
    _check_size(size)
    if len(coords) == 0:
        return np.empty((0, window_length(size, image.channels)))
    xy = np.asarray(coords, dtype=np.int64)
    xs, ys = xy[:, 0], xy[:, 1]
    if (xs < 0).any() or (xs >= image.width).any() or (ys < 0).any() or (ys >= image.height).any():
        raise PreconditionError("window center outside image bounds")
    views = _window_view(image, size)
    return normalize(views[ys, xs].reshape(len(xy), -1))


def _window_view(image: RasterImage, size: int) -> np.ndarray:
    # (h, w, c, size, size) -> (h, w, size, size, c)
    view = sliding_window_view(_padded(image, size), (size, size), axis=(0, 1))
    return view.transpose(0, 1, 3, 4, 2)


def iter_row_windows(image: RasterImage, size: int, rows_per_block: int = 16) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (first row, features) blocks covering the whole image in row order."""
    _check_size(size)
    views = _window_view(image, size)
    k = window_length(size, image.channels)
    for y0 in range(0, image.height, rows_per_block):
        block = views[y0:y0 + rows_per_block]
        yield y0, normalize(block.reshape(-1, k))


def unflatten(features: np.ndarray, size: int, channels: int) -> np.ndarray:
    return np.asarray(features).reshape(size, size, channels)
