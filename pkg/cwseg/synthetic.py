"""
Procedural images with known masks, used for demos and the acceptance runs.
"""
from typing import Tuple

import numpy as np
from scipy import ndimage as ndi

from cwseg.context import normalize
from cwseg.image_io import GroundTruthMask, RasterImage


def _ellipse(size: int) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    cy, cx = (size - 1) / 2.0, (size - 1) / 2.0
    ry, rx = size * 0.32, size * 0.26
    return ((ys - cy) / ry) ** 2 + ((xs - cx) / rx) ** 2 <= 1.0


def two_texture_image(size: int = 128, seed: int = 0, color: bool = False) -> Tuple[RasterImage, GroundTruthMask]:
    """Bright striped OBJECT ellipse on a dark, smooth-noise BACKGROUND."""
    rng = np.random.default_rng(seed)
    inside = _ellipse(size)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)

    stripes = 190.0 + 30.0 * np.sin(2.0 * np.pi * (xs + ys) / 6.0) + rng.normal(0.0, 6.0, (size, size))
    smooth = ndi.gaussian_filter(rng.normal(0.0, 1.0, (size, size)), 3.0)
    smooth = 70.0 + 25.0 * smooth / (np.abs(smooth).max() or 1.0) + rng.normal(0.0, 3.0, (size, size))

    gray = np.clip(np.where(inside, stripes, smooth), 0, 255)
    if not color:
        pixels = np.rint(gray).astype(np.uint8)[:, :, None]
    else:
        r = np.where(inside, gray, gray * 0.6)
        g = np.where(inside, gray * 0.8, gray)
        b = np.where(inside, gray * 0.6, gray * 1.2)
        pixels = np.rint(np.clip(np.stack([r, g, b], axis=2), 0, 255)).astype(np.uint8)
    return RasterImage(pixels), GroundTruthMask(inside)


def stripes_vs_uniform(size: int = 128, period: float = 8.0, amplitude: float = 100.0) -> Tuple[RasterImage, GroundTruthMask]:
    """Vertical sinusoidal stripes on the left half (OBJECT), flat gray on the right."""
    xs = np.arange(size, dtype=np.float64)[None, :].repeat(size, axis=0)
    left = xs < size // 2
    values = np.where(left, 128.0 + amplitude * np.sin(2.0 * np.pi * xs / period), 128.0)
    pixels = np.rint(np.clip(values, 0, 255)).astype(np.uint8)[:, :, None]
    return RasterImage(pixels), GroundTruthMask(left)


def gaussian_texture_windows(n: int, size: int = 3, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """n normalized window vectors from two Gaussian texture classes, balanced; labels True = OBJECT."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2 == 0
    means = np.where(labels, 180.0, 80.0)[:, None]
    raw = np.clip(rng.normal(means, 20.0, (n, size * size)), 0, 255)
    order = rng.permutation(n)
    return normalize(np.rint(raw))[order], labels[order]
