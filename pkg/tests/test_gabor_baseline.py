import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cwseg.errors import PreconditionError
from cwseg.evaluation import pixel_accuracy
from cwseg.gabor_baseline import (
    STATUS_DEGENERATE,
    STATUS_OK,
    filter_bank,
    filter_responses,
    gabor_kernel,
    segment_gabor,
    standardize,
    two_means,
)
from cwseg.image_io import RasterImage
from cwseg.schemas import GaborSpec


@given(st.integers(0, 255))
def test_constant_image_has_zero_response(value):
    image = RasterImage(np.full((24, 24, 1), value, dtype=np.uint8))
    responses = filter_responses(image, GaborSpec())
    assert np.all(responses == 0.0)


def test_constant_image_is_degenerate():
    image = RasterImage(np.full((32, 32, 1), 90, dtype=np.uint8))
    result = segment_gabor(image)
    assert result.status == STATUS_DEGENERATE
    assert not result.mask.labels.any()


@pytest.mark.parametrize("frequency", [0.0625, 0.125, 0.25, 0.4])
@pytest.mark.parametrize("angle", [0.0, 30.0, 90.0])
def test_kernels_have_no_dc_component(frequency, angle):
    spec = GaborSpec(radial_frequencies=[frequency], orientations=[angle])
    kernel = gabor_kernel(frequency, angle, spec.sigma_for(frequency), spec.radius_for(frequency))
    assert abs(kernel.sum()) < 1e-9
    assert kernel.shape[0] == kernel.shape[1] == 2 * spec.radius_for(frequency) + 1


@pytest.mark.parametrize("frequency, sigma, radius", [(0.125, 4.48, 14), (0.25, 2.24, 7), (0.3, 1.5, 3)])
def test_horizontal_kernel_is_mirror_symmetric_with_known_center(frequency, sigma, radius):
    kernel = gabor_kernel(frequency, 0.0, sigma, radius)
    assert np.allclose(kernel, kernel[::-1, :], atol=1e-15)
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    raw = np.exp(-(xs ** 2 + ys ** 2) / (2 * sigma ** 2)) * np.cos(2 * np.pi * frequency * xs)
    assert kernel[radius, radius] == pytest.approx(1.0 - raw.mean(), abs=1e-12)


def test_default_bank_size():
    assert len(filter_bank(GaborSpec())) == 8


def test_spec_rejects_bad_parameters():
    with pytest.raises(ValueError):
        GaborSpec(orientations=[0, 180])
    with pytest.raises(ValueError):
        GaborSpec(radial_frequencies=[0.5])


@pytest.mark.parametrize("seed", range(10))
def test_two_means_objective_never_increases(seed):
    rng = np.random.default_rng(seed)
    points = np.vstack([rng.normal(0, 1, (80, 3)), rng.normal(2.5, 1, (60, 3))])
    assign, objective, iterations = two_means(points, seed=seed)
    assert iterations >= 1
    assert all(b <= a + 1e-9 for a, b in zip(objective, objective[1:]))
    assert set(np.unique(assign)) <= {0, 1}


def test_standardize_zeroes_constant_channels():
    features = np.stack([np.arange(12.0).reshape(3, 4), np.full((3, 4), 5.0)], axis=2)
    out = standardize(features)
    assert np.allclose(out[:, 1], 0.0)
    assert out[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
    assert out[:, 0].std() == pytest.approx(1.0)


def test_stripes_versus_uniform_layout(stripes_pair):
    image, truth = stripes_pair
    result = segment_gabor(image)
    assert result.status == STATUS_OK
    assert pixel_accuracy(result.mask, truth).efficiency >= 90.0


def test_color_input_is_rejected(color_image):
    with pytest.raises(PreconditionError):
        segment_gabor(color_image)


def test_global_intensity_shift_keeps_labels(texture_pair):
    image, _ = texture_pair
    base = image.pixels // 2 + 40
    plain = segment_gabor(RasterImage(base))
    shifted = segment_gabor(RasterImage(base + 60))
    assert plain.status == shifted.status
    assert np.array_equal(plain.mask.labels, shifted.mask.labels)


def test_same_image_and_seed_give_same_labels(texture_pair):
    image, _ = texture_pair
    spec = GaborSpec(seed=4)
    first = segment_gabor(image, spec)
    second = segment_gabor(image, spec)
    assert np.array_equal(first.mask.labels, second.mask.labels)
    assert first.objective == second.objective


def test_spec_rejects_bad_bank_scales():
    with pytest.raises(ValueError):
        GaborSpec(kernel_radius=0)
    with pytest.raises(ValueError):
        GaborSpec(nonlinearity_alpha=0.0)
    with pytest.raises(ValueError):
        GaborSpec(smoothing_factor=-1.0)
    with pytest.raises(ValueError):
        GaborSpec(max_iterations=0)
