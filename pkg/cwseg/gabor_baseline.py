"""
Unsupervised Gabor filter-bank segmentation used as a comparison baseline.

Even-symmetric, DC-corrected kernels; |tanh(alpha * response)| energy;
Gaussian smoothing; per-channel standardization; 2-means clustering. The
cluster with the higher mean energy is labeled OBJECT.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage as ndi

from cwseg.errors import PreconditionError
from cwseg.image_io import GroundTruthMask, RasterImage
from cwseg.schemas import GaborSpec

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_DEGENERATE = "degenerate"

_CONSTANT_CHANNEL_RTOL = 1e-6


@dataclass
class FeatureStack:
    features: np.ndarray  # (height, width, n_filters)
    energy: np.ndarray  # (height, width) summed smoothed energy before standardization


@dataclass
class GaborResult:
    mask: GroundTruthMask
    status: str = STATUS_OK
    objective: List[float] = field(default_factory=list)
    iterations: int = 0


def gabor_kernel(frequency: float, orientation_deg: float, sigma: float, radius: int) -> np.ndarray:
    """exp(-(x'^2 + y'^2) / (2 sigma^2)) * cos(2 pi f x'), minus its mean."""
    if radius < 1:
        raise PreconditionError("kernel radius must be >= 1")
    theta = np.deg2rad(orientation_deg)
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    x_rot = xs * np.cos(theta) + ys * np.sin(theta)
    y_rot = -xs * np.sin(theta) + ys * np.cos(theta)
    kernel = np.exp(-(x_rot ** 2 + y_rot ** 2) / (2.0 * sigma ** 2)) * np.cos(2.0 * np.pi * frequency * x_rot)
    return kernel - kernel.mean()


def filter_bank(spec: GaborSpec) -> List[Tuple[float, float, float, np.ndarray]]:
    """(frequency, orientation, sigma, kernel) for every filter in the bank."""
    bank = []
    for f in spec.radial_frequencies:
        sigma = spec.sigma_for(f)
        for angle in spec.orientations:
            bank.append((f, angle, sigma, gabor_kernel(f, angle, sigma, spec.radius_for(f))))
    return bank


def filter_responses(image: RasterImage, spec: GaborSpec) -> np.ndarray:
    """Raw responses (height, width, n_filters) with replicate padding."""
    if image.channels != 1:
        raise PreconditionError("Gabor segmentation needs a gray image")
    gray = image.pixels[:, :, 0].astype(np.float64)
    gray = (gray - gray.mean()) / 255.0  # exactly zero on a constant image
    bank = filter_bank(spec)
    out = np.empty(gray.shape + (len(bank),))
    for i, (_, _, _, kernel) in enumerate(bank):
        out[:, :, i] = ndi.convolve(gray, kernel, mode="nearest")
    return out


def feature_stack(image: RasterImage, spec: GaborSpec) -> FeatureStack:
    responses = filter_responses(image, spec)
    bank = filter_bank(spec)
    smoothed = np.empty_like(responses)
    for i, (_, _, sigma, _) in enumerate(bank):
        energy = np.abs(np.tanh(spec.nonlinearity_alpha * responses[:, :, i]))
        smoothed[:, :, i] = ndi.gaussian_filter(energy, spec.smoothing_factor * sigma, mode="nearest")
    return FeatureStack(features=smoothed, energy=smoothed.sum(axis=2))


def standardize(features: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per channel; (near-)constant channels become 0."""
    flat = features.reshape(-1, features.shape[-1])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    scale = std.max() if std.size else 0.0
    live = std > max(scale * _CONSTANT_CHANNEL_RTOL, 0.0)
    out = np.zeros_like(flat)
    out[:, live] = (flat[:, live] - mean[live]) / std[live]
    return out


def _sse(points: np.ndarray, centers: np.ndarray, assign: np.ndarray) -> float:
    return float(((points - centers[assign]) ** 2).sum())


def two_means(points: np.ndarray, seed: int = 0, max_iterations: int = 100) -> Tuple[np.ndarray, List[float], int]:
    """Lloyd iterations with k=2. Returns (assignments, objective per iteration, iterations)."""
    rng = np.random.default_rng(seed)
    first = points[rng.integers(points.shape[0])]
    far = points[int(np.argmax(((points - first) ** 2).sum(axis=1)))]
    centers = np.vstack([first, far])

    assign = np.full(points.shape[0], -1)
    objective: List[float] = []
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for k in range(2):
            members = points[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)
        objective.append(_sse(points, centers, assign))
    return assign, objective, iterations


def segment_gabor(image: RasterImage, spec: Optional[GaborSpec] = None) -> GaborResult:
    spec = spec or GaborSpec()
    if image.channels != 1:
        raise PreconditionError("Gabor segmentation needs a gray image")
    stack = feature_stack(image, spec)
    points = standardize(stack.features)
    h, w = image.height, image.width

    if not np.any(points):
        logger.warning("[gabor] no texture contrast in image, labeling everything BACKGROUND")
        return GaborResult(GroundTruthMask(np.zeros((h, w), dtype=bool)), STATUS_DEGENERATE)

    assign, objective, iterations = two_means(points, spec.seed, spec.max_iterations)
    energy = stack.energy.reshape(-1)
    sizes = [int((assign == k).sum()) for k in range(2)]
    if min(sizes) == 0:
        logger.warning("[gabor] clustering collapsed to one cluster, labeling everything BACKGROUND")
        return GaborResult(GroundTruthMask(np.zeros((h, w), dtype=bool)), STATUS_DEGENERATE, objective, iterations)

    means = [energy[assign == k].mean() for k in range(2)]
    object_cluster = int(np.argmax(means))
    labels = (assign == object_cluster).reshape(h, w)
    logger.info(f"[gabor] {len(filter_bank(spec))} filters, {iterations} iterations, object fraction={labels.mean():.3f}")
    return GaborResult(GroundTruthMask(labels), STATUS_OK, objective, iterations)
