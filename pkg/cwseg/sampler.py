"""
Training/testing pixel selection.

Pixels are categorized into the five context categories, drawn balanced
between OBJECT and BACKGROUND, spread over categories and source images,
then split into train/test.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage as ndi

from cwseg.context import extract_windows
from cwseg.errors import CapacityError, FormatError, LabelCoverageError, PreconditionError
from cwseg.image_io import GroundTruthMask, PathLike, RasterImage
from cwseg.schemas import Label, SampleCategory

logger = logging.getLogger(__name__)

Coord = Tuple[int, int]

CATEGORY_ORDER = [
    SampleCategory.INTERIOR,
    SampleCategory.NEAR_EDGE_INSIDE,
    SampleCategory.BORDER,
    SampleCategory.NEAR_EDGE_OUTSIDE,
    SampleCategory.NEAR_FRAME_EDGE,
]
_CATEGORY_CODE = {cat: i for i, cat in enumerate(CATEGORY_ORDER)}


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    label: Label
    category: SampleCategory
    source: str
    coord: Coord


@dataclass
class Dataset:
    train: List[LabeledSample]
    test: List[LabeledSample]
    seed: int = 0

    @property
    def width(self) -> int:
        first = (self.train or self.test)[0]
        return int(first.features.shape[0])


@dataclass
class SourceImage:
    image: RasterImage
    mask: GroundTruthMask
    source: str
    categories: Optional[np.ndarray] = field(default=None, repr=False)


# ===== Categorization =====

def _opposite_distance(mask: GroundTruthMask) -> np.ndarray:
    """Chebyshev distance from each pixel to the nearest opposite-label pixel (inf if none)."""
    labels = mask.labels
    dist = np.full(labels.shape, np.inf)
    if labels.all() or not labels.any():
        return dist
    # distance_transform_cdt measures non-zero pixels to the nearest zero pixel
    to_background = ndi.distance_transform_cdt(labels, metric="chessboard")
    to_object = ndi.distance_transform_cdt(~labels, metric="chessboard")
    dist[labels] = to_background[labels]
    dist[~labels] = to_object[~labels]
    return dist


def _frame_distance(height: int, width: int) -> np.ndarray:
    ys = np.arange(height)[:, None]
    xs = np.arange(width)[None, :]
    return np.minimum(np.minimum(xs, width - 1 - xs), np.minimum(ys, height - 1 - ys))


def categorize_mask(mask: GroundTruthMask, band: int) -> np.ndarray:
    """Category code (index into CATEGORY_ORDER) for every pixel."""
    if band < 1:
        raise PreconditionError("band must be >= 1")
    d = _opposite_distance(mask)
    f = _frame_distance(mask.height, mask.width)
    obj = mask.labels
    codes = np.full(obj.shape, _CATEGORY_CODE[SampleCategory.INTERIOR], dtype=np.int8)
    near = d <= band
    codes[near & ~obj] = _CATEGORY_CODE[SampleCategory.NEAR_EDGE_OUTSIDE]
    codes[near & obj] = _CATEGORY_CODE[SampleCategory.NEAR_EDGE_INSIDE]
    codes[d == 1] = _CATEGORY_CODE[SampleCategory.BORDER]
    codes[f < band] = _CATEGORY_CODE[SampleCategory.NEAR_FRAME_EDGE]
    return codes


def categorize_pixel(mask: GroundTruthMask, coord: Coord, band: int) -> SampleCategory:
    x, y = coord
    if not (0 <= x < mask.width and 0 <= y < mask.height):
        raise PreconditionError(f"coordinate {coord} outside {mask.width}x{mask.height} mask")
    return CATEGORY_ORDER[int(categorize_mask(mask, band)[y, x])]


# ===== Sampling =====

def _split_evenly(n: int, parts: int) -> List[int]:
    base, rem = divmod(n, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _round_robin(pools: List[List[Tuple[int, Coord]]], quota: int,
                 cursor: int) -> Tuple[List[Tuple[int, Coord]], int]:
    """Take up to `quota` items cycling over pools from `cursor`; consumes from the pools.

    Returns the items and the pool index the next draw should start at.
    """
    taken: List[Tuple[int, Coord]] = []
    n = len(pools)
    while len(taken) < quota and any(pools):
        pool = pools[cursor]
        cursor = (cursor + 1) % n
        if pool:
            taken.append(pool.pop())
    return taken, cursor


def _draw_class(sources: List[SourceImage], is_object: bool, quota: int, cursor: int,
                rng: np.random.Generator) -> Tuple[List[Tuple[int, Coord, SampleCategory]], int]:
    # pools[category][source] -> shuffled list of (source index, coord)
    pools: Dict[SampleCategory, List[List[Tuple[int, Coord]]]] = {c: [] for c in CATEGORY_ORDER}
    for s_idx, src in enumerate(sources):
        labels = src.mask.labels
        for cat in CATEGORY_ORDER:
            ys, xs = np.nonzero((labels == is_object) & (src.categories == _CATEGORY_CODE[cat]))
            order = rng.permutation(len(xs))
            pools[cat].append([(s_idx, (int(xs[i]), int(ys[i]))) for i in order])

    chosen: List[Tuple[int, Coord, SampleCategory]] = []
    deficit = 0
    for cat, q in zip(CATEGORY_ORDER, _split_evenly(quota, len(CATEGORY_ORDER))):
        got, cursor = _round_robin(pools[cat], q, cursor)
        chosen.extend((s, c, cat) for s, c in got)
        deficit += q - len(got)

    backfill = [SampleCategory.INTERIOR] + CATEGORY_ORDER
    for cat in backfill:
        if not deficit:
            break
        got, cursor = _round_robin(pools[cat], deficit, cursor)
        chosen.extend((s, c, cat) for s, c in got)
        deficit -= len(got)
    return chosen, cursor


def sample_dataset(
    images: Sequence[Tuple[RasterImage, GroundTruthMask, str]],
    window: int,
    total: int = 1000,
    band: int = 4,
    seed: int = 0,
    train_fraction: float = 0.7,
) -> Dataset:
    if total < 10:
        raise PreconditionError("total must be >= 10")
    if not images:
        raise PreconditionError("at least one image is required")

    sources: List[SourceImage] = []
    for image, mask, source in images:
        if (image.width, image.height) != (mask.width, mask.height):
            raise PreconditionError(
                f"{source}: mask {mask.width}x{mask.height} does not match image {image.width}x{image.height}"
            )
        if any(ch in source for ch in ",\r\n"):
            raise PreconditionError(f"source id {source!r} may not contain commas or line breaks")
        sources.append(SourceImage(image, mask, source, categorize_mask(mask, band)))
    channels = {s.image.channels for s in sources}
    if len(channels) > 1:
        raise PreconditionError(f"images mix channel counts {sorted(channels)}; convert them to one format")

    n_object_px = sum(int(s.mask.labels.sum()) for s in sources)
    n_background_px = sum(s.mask.labels.size for s in sources) - n_object_px
    n_object = total - total // 2
    n_background = total // 2
    if n_object_px == 0:
        raise LabelCoverageError("no OBJECT pixels in any mask")
    if n_background_px == 0:
        raise LabelCoverageError("no BACKGROUND pixels in any mask")
    if n_object_px < n_object or n_background_px < n_background:
        raise CapacityError(
            f"requested {n_object} OBJECT / {n_background} BACKGROUND samples, "
            f"available {n_object_px} / {n_background_px}"
        )

    rng = np.random.default_rng(seed)
    logger.info(f"[sample] drawing {total} samples from {len(sources)} image(s), seed={seed}")

    by_class: Dict[Label, List[LabeledSample]] = {}
    cursor = 0
    for label, quota in ((Label.OBJECT, n_object), (Label.BACKGROUND, n_background)):
        picks, cursor = _draw_class(sources, label == Label.OBJECT, quota, cursor, rng)
        samples: List[LabeledSample] = []
        for s_idx in range(len(sources)):
            mine = [(c, cat) for s, c, cat in picks if s == s_idx]
            if not mine:
                continue
            feats = extract_windows(sources[s_idx].image, [c for c, _ in mine], window)
            for (coord, cat), vec in zip(mine, feats):
                samples.append(LabeledSample(vec, label, cat, sources[s_idx].source, coord))
        by_class[label] = [samples[i] for i in rng.permutation(len(samples))]

    n_train = int(total * train_fraction + 0.5)
    train_obj = n_train - n_train // 2
    train_bg = n_train // 2
    objects, backgrounds = by_class[Label.OBJECT], by_class[Label.BACKGROUND]
    train = objects[:train_obj] + backgrounds[:train_bg]
    test = objects[train_obj:] + backgrounds[train_bg:]
    train = [train[i] for i in rng.permutation(len(train))]
    test = [test[i] for i in rng.permutation(len(test))]

    counts = {cat.value: sum(1 for s in train + test if s.category == cat) for cat in CATEGORY_ORDER}
    logger.info(f"[sample] train={len(train)} test={len(test)} categories={counts}")
    return Dataset(train=train, test=test, seed=seed)


# ===== Text format =====

def write_dataset(dataset: Dataset, path: PathLike) -> None:
    k = dataset.width
    lines = [
        f"# seed={dataset.seed}",
        f"# train={len(dataset.train)}",
        f"# test={len(dataset.test)}",
        "label,category,source,x,y," + ",".join(f"f{i}" for i in range(1, k + 1)),
    ]
    for s in dataset.train + dataset.test:
        if any(ch in s.source for ch in ",\r\n"):
            raise PreconditionError(f"source id {s.source!r} may not contain commas or line breaks")
        feats = ",".join(format(float(v), ".9g") for v in s.features)
        lines.append(f"{s.label.value},{s.category.value},{s.source},{s.coord[0]},{s.coord[1]},{feats}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dataset(path: PathLike) -> Dataset:
    meta: Dict[str, int] = {}
    header: Optional[List[str]] = None
    rows: List[LabeledSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if value:
                    try:
                        meta[key.strip()] = int(value)
                    except ValueError:
                        raise FormatError(f"{path}:{lineno}: bad metadata line {line!r}")
                continue
            parts = line.split(",")
            if header is None:
                if parts[:5] != ["label", "category", "source", "x", "y"]:
                    raise FormatError(f"{path}:{lineno}: unexpected header")
                header = parts
                continue
            if len(parts) != len(header):
                raise FormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, found {len(parts)}"
                )
            try:
                rows.append(LabeledSample(
                    features=np.array([float(v) for v in parts[5:]]),
                    label=Label(parts[0]),
                    category=SampleCategory(parts[1]),
                    source=parts[2],
                    coord=(int(parts[3]), int(parts[4])),
                ))
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: {e}")
    if header is None:
        raise FormatError(f"{path}: missing header line")
    n_train = meta.get("train", len(rows))
    n_test = meta.get("test", len(rows) - n_train)
    if n_train + n_test != len(rows):
        raise FormatError(
            f"{path}: header declares {n_train}+{n_test} rows, found {len(rows)}"
        )
    return Dataset(train=rows[:n_train], test=rows[n_train:], seed=meta.get("seed", 0))


def as_arrays(samples: Sequence[LabeledSample]) -> Tuple[np.ndarray, np.ndarray]:
    """(features (N, K), labels (N,) bool with True = OBJECT)."""
    if not samples:
        raise PreconditionError("empty sample list")
    X = np.vstack([s.features for s in samples])
    y = np.array([s.label == Label.OBJECT for s in samples])
    return X, y
