import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cwseg.errors import FormatError, MaskFormatError, PreconditionError
from cwseg.image_io import (
    GroundTruthMask,
    RasterImage,
    read_image,
    read_mask,
    rgb_to_gray,
    write_image,
    write_mask,
)
from cwseg.schemas import Label


def _pixels(channels):
    return st.tuples(st.integers(1, 12), st.integers(1, 12)).flatmap(
        lambda hw: arrays(np.uint8, (hw[0], hw[1], channels))
    )


@given(_pixels(1))
def test_gray_write_then_read_is_identity(tmp_path_factory, pixels):
    path = tmp_path_factory.mktemp("pgm") / "img.pgm"
    image = RasterImage(pixels)
    write_image(image, path)
    assert read_image(path) == image


def test_color_image_keeps_channel_order(tmp_path, color_image):
    path = tmp_path / "img.ppm"
    write_image(color_image, path)
    raw = path.read_bytes()
    assert raw.startswith(b"P6\n7 4\n255\n")
    back = read_image(path)
    assert back.channels == 3
    assert back.pixels[0, 0].tolist() == color_image.pixels[0, 0].tolist()
    assert back == color_image


def test_header_with_comments_and_odd_whitespace(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5 # made by hand\n# another\n3\t2\n# maxval next\n255\n" + bytes(range(6)))
    image = read_image(path)
    assert (image.width, image.height, image.channels) == (3, 2, 1)
    assert image.data.tolist() == [0, 1, 2, 3, 4, 5]
    # (x, y) = (column, row)
    assert int(image.pixels[1, 2, 0]) == 5


@pytest.mark.parametrize(
    "content, field",
    [
        (b"P3\n2 2\n255\n" + bytes(4), "magic"),
        (b"P5\n0 2\n255\n", "width"),
        (b"P5\n2 0\n255\n", "height"),
        (b"P5\n2 2\n65535\n" + bytes(8), "maxval"),
        (b"P5\n2 2\n255\n" + bytes(3), "truncated payload"),
        (b"P5\n2", "height"),
    ],
)
def test_bad_headers_name_the_field(tmp_path, content, field):
    path = tmp_path / "bad.pgm"
    path.write_bytes(content)
    with pytest.raises(FormatError, match=field):
        read_image(path)


def test_trailing_bytes_are_ignored(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n2 1\n255\n\x01\x02extra")
    assert read_image(path).data.tolist() == [1, 2]


def test_from_data_validates_length_and_range():
    image = RasterImage.from_data(2, 1, 3, [1, 2, 3, 4, 5, 6])
    assert image.pixels.shape == (1, 2, 3)
    with pytest.raises(PreconditionError):
        RasterImage.from_data(2, 2, 1, [0, 0, 0])
    with pytest.raises(PreconditionError):
        RasterImage.from_data(1, 1, 1, [256])


def test_rgb_to_gray_known_values():
    image = RasterImage.from_data(
        5, 1, 3,
        [255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255, 10, 20, 30],
    )
    gray = rgb_to_gray(image)
    assert gray.channels == 1
    # 0.299*10 + 0.587*20 + 0.114*30 = 18.15
    assert gray.data.tolist() == [76, 150, 29, 255, 18]


@given(arrays(np.uint8, (3, 4, 3)))
def test_rgb_to_gray_matches_rounded_formula(pixels):
    gray = rgb_to_gray(RasterImage(pixels)).pixels[:, :, 0]
    p = pixels.astype(np.float64)
    exact = 0.299 * p[:, :, 0] + 0.587 * p[:, :, 1] + 0.114 * p[:, :, 2]
    expected = np.floor(exact + 0.5 + 1e-9)
    assert np.array_equal(gray, expected.astype(np.uint8))


def test_rgb_to_gray_rejects_gray(gray_image):
    with pytest.raises(PreconditionError):
        rgb_to_gray(gray_image)


def test_mask_round_trip_and_labels(tmp_path, square_mask):
    path = tmp_path / "m.pgm"
    write_mask(square_mask, path)
    mask = read_mask(path)
    assert mask == square_mask
    assert mask.label_at(6, 6) == Label.OBJECT
    assert mask.label_at(0, 0) == Label.BACKGROUND


def test_mask_with_intermediate_value_reports_coordinate(tmp_path):
    pixels = np.zeros((3, 4, 1), dtype=np.uint8)
    pixels[2, 1, 0] = 128
    path = tmp_path / "m.pgm"
    write_image(RasterImage(pixels), path)
    with pytest.raises(MaskFormatError) as info:
        read_mask(path)
    assert info.value.coord == (1, 2)


def test_color_mask_is_rejected(tmp_path, color_image):
    path = tmp_path / "m.ppm"
    write_image(color_image, path)
    with pytest.raises(MaskFormatError):
        read_mask(path)


def test_mask_to_image_is_binary():
    mask = GroundTruthMask(np.array([[True, False]]))
    assert mask.to_image().data.tolist() == [255, 0]
