"""
Binary PGM (P5) / PPM (P6) reading and writing, ground-truth masks and
color to gray conversion.

Only maxval 255 is accepted. Header tokens are whitespace separated and
'#' comments may appear anywhere before maxval.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from cwseg.errors import FormatError, MaskFormatError, PreconditionError
from cwseg.schemas import Label

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_MAGIC_CHANNELS = {b"P5": 1, b"P6": 3}
_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True)
class RasterImage:
    """8-bit raster held as a (height, width, channels) uint8 array."""
    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise PreconditionError(f"pixels must have shape (h, w, 1|3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise PreconditionError("image must be at least 1x1")
        if px.dtype != np.uint8:
            raise PreconditionError(f"pixels must be uint8, got {px.dtype}")
        px.setflags(write=False)

    @classmethod
    def from_data(cls, width: int, height: int, channels: int, data) -> "RasterImage":
        arr = np.asarray(data)
        if arr.size != width * height * channels:
            raise PreconditionError(
                f"data length {arr.size} != {width}x{height}x{channels}"
            )
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise PreconditionError("intensities must lie in [0, 255]")
        return cls(arr.astype(np.uint8).reshape(height, width, channels).copy())

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def data(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True)
class GroundTruthMask:
    """Per-pixel labels as a (height, width) bool array, True = OBJECT."""
    labels: np.ndarray

    def __post_init__(self):
        if self.labels.ndim != 2 or self.labels.dtype != np.bool_:
            raise PreconditionError("mask labels must be a 2-D bool array")
        self.labels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def label_at(self, x: int, y: int) -> Label:
        return Label.OBJECT if self.labels[y, x] else Label.BACKGROUND

    def to_image(self) -> RasterImage:
        return RasterImage((self.labels.astype(np.uint8) * 255)[:, :, None])

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroundTruthMask):
            return NotImplemented
        return bool(np.array_equal(self.labels, other.labels))

    __hash__ = None


def _parse_header(raw: bytes, path: PathLike) -> Tuple[int, int, int, int]:
    """Return (channels, width, height, payload offset)."""
    tokens: List[bytes] = []
    pos = 0
    n = len(raw)
    while len(tokens) < 4:
        while pos < n and raw[pos] in _WHITESPACE:
            pos += 1
        if pos < n and raw[pos:pos + 1] == b"#":
            while pos < n and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            field = ("magic number", "width", "height", "maxval")[len(tokens)]
            raise FormatError(f"{path}: truncated header, missing {field}")
        start = pos
        while pos < n and raw[pos] not in _WHITESPACE and raw[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(raw[start:pos])

    magic, w_tok, h_tok, max_tok = tokens
    if magic not in _MAGIC_CHANNELS:
        raise FormatError(f"{path}: unsupported magic number {magic!r} (expected P5 or P6)")
    try:
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise FormatError(f"{path}: non-numeric width/height/maxval in header")
    if width < 1:
        raise FormatError(f"{path}: invalid width {width}")
    if height < 1:
        raise FormatError(f"{path}: invalid height {height}")
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} not supported (must be 255)")
    if pos >= n or raw[pos] not in _WHITESPACE:
        raise FormatError(f"{path}: missing whitespace after maxval")
    return _MAGIC_CHANNELS[magic], width, height, pos + 1


def read_image(path: PathLike) -> RasterImage:
    raw = Path(path).read_bytes()
    channels, width, height, offset = _parse_header(raw, path)
    expected = width * height * channels
    payload = raw[offset:offset + expected]
    if len(payload) < expected:
        raise FormatError(
            f"{path}: truncated payload, expected {expected} bytes, found {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels).copy()
    return RasterImage(pixels)


def write_image(image: RasterImage, path: PathLike) -> None:
    magic = "P5" if image.channels == 1 else "P6"
    header = f"{magic}\n{image.width} {image.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.pixels.tobytes())
    logger.debug(f"wrote {magic} {image.width}x{image.height} to {path}")


def rgb_to_gray(image: RasterImage) -> RasterImage:
    """BT.601 luminance, rounded half away from zero."""
    if image.channels != 3:
        raise PreconditionError(f"rgb_to_gray needs 3 channels, got {image.channels}")
    px = image.pixels.astype(np.int64)
    weighted = 299 * px[:, :, 0] + 587 * px[:, :, 1] + 114 * px[:, :, 2]
    gray = np.clip((weighted + 500) // 1000, 0, 255).astype(np.uint8)
    return RasterImage(gray[:, :, None])


def to_gray(image: RasterImage) -> RasterImage:
    return image if image.channels == 1 else rgb_to_gray(image)


def read_mask(path: PathLike) -> GroundTruthMask:
    image = read_image(path)
    if image.channels != 1:
        raise MaskFormatError(f"{path}: mask must be a P5 (gray) image")
    values = image.pixels[:, :, 0]
    bad = np.argwhere((values != 0) & (values != 255))
    if bad.size:
        y, x = (int(v) for v in bad[0])
        raise MaskFormatError(
            f"{path}: mask pixel at (x={x}, y={y}) has value {values[y, x]}, expected 0 or 255",
            coord=(x, y),
        )
    return GroundTruthMask(values == 255)


def write_mask(mask: GroundTruthMask, path: PathLike) -> None:
    write_image(mask.to_image(), path)
