from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pcsi.image_model import (
    Image,
    ImageError,
    dequantize_channel,
    quantize_channel,
    quantized_reference,
    rgb_to_ycbcr,
    ycbcr_to_rgb,
)

channel = st.integers(0, 255)


def _exact_ycbcr(r, g, b):
    # independent rational evaluation of the T.871 forward transform
    f = Fraction
    y = f(299, 1000) * r + f(587, 1000) * g + f(114, 1000) * b
    cb = 128 - f(168736, 10**6) * r - f(331264, 10**6) * g + f(1, 2) * b
    cr = 128 + f(1, 2) * r - f(418688, 10**6) * g - f(81312, 10**6) * b
    return tuple(max(0, min(255, math.floor(v + f(1, 2)))) for v in (y, cb, cr))


@pytest.mark.parametrize("rgb, ycc", [
    ((0, 0, 0), (0, 128, 128)),
    ((255, 255, 255), (255, 128, 128)),
    ((255, 0, 0), (76, 85, 255)),
])
def test_rgb_to_ycbcr_examples(rgb, ycc):
    assert rgb_to_ycbcr(*rgb) == ycc


@given(channel, channel, channel)
def test_rgb_to_ycbcr_matches_rational_oracle(r, g, b):
    assert rgb_to_ycbcr(r, g, b) == _exact_ycbcr(r, g, b)


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(3)
    px = rng.integers(0, 256, size=(500, 3))
    y, cb, cr = rgb_to_ycbcr(px[:, 0], px[:, 1], px[:, 2])
    for i in range(0, 500, 37):
        assert (y[i], cb[i], cr[i]) == rgb_to_ycbcr(*px[i].tolist())


@pytest.mark.parametrize("ycc, rgb", [
    ((255, 128, 128), (255, 255, 255)),
    ((0, 128, 128), (0, 0, 0)),
])
def test_ycbcr_to_rgb_examples(ycc, rgb):
    assert ycbcr_to_rgb(*ycc) == rgb


def test_color_round_trip_lattice():
    v = (np.arange(32) * 255) // 31
    r, g, b = (a.ravel() for a in np.meshgrid(v, v, v, indexing="ij"))
    back = ycbcr_to_rgb(*rgb_to_ycbcr(r, g, b))
    err = max(np.abs(x - y).max() for x, y in zip(back, (r, g, b)))
    assert err <= 1


@given(channel, channel, channel, st.sampled_from([0, 1, 2]), st.integers(1, 255))
def test_luma_monotone(r, g, b, which, bump):
    rgb = [r, g, b]
    more = list(rgb)
    more[which] = min(255, more[which] + bump)
    assert rgb_to_ycbcr(*more)[0] >= rgb_to_ycbcr(*rgb)[0]


def test_quantize_examples():
    assert quantize_channel(200, 4) == 12
    assert quantize_channel(128, 1) == 1
    for b in range(1, 9):
        assert quantize_channel(0, b) == 0
        assert quantize_channel(255, b) == (1 << b) - 1


def test_dequantize_examples():
    assert dequantize_channel(12, 4) == 204
    assert all(dequantize_channel(0, b) == 0 for b in range(1, 9))


def test_quantize_dequantize_identity_exhaustive():
    for b in range(1, 9):
        for q in range(1 << b):
            assert quantize_channel(dequantize_channel(q, b), b) == q


def test_quantize_matches_half_up_rounding():
    for b in range(1, 9):
        m = (1 << b) - 1
        for v in range(256):
            assert quantize_channel(v, b) == math.floor(Fraction(v * m, 255) + Fraction(1, 2))


def test_quantize_rejects_bad_depth():
    with pytest.raises(ValueError):
        quantize_channel(10, 0)
    with pytest.raises(ValueError):
        dequantize_channel(1, 9)


@pytest.mark.parametrize("shape", [(15, 16, 3), (16, 24, 3), (4096, 16, 3), (16, 16), (0, 16, 3)])
def test_image_rejects_bad_dimensions(shape):
    with pytest.raises(ImageError):
        Image(np.zeros(shape, np.uint8))


def test_image_accepts_limits():
    assert Image(np.zeros((4080, 16, 3), np.uint8)).height == 4080
    assert Image(np.zeros((16, 16, 3), np.uint8)).width == 16


def test_image_is_immutable():
    img = Image(np.zeros((16, 16, 3), np.uint8))
    with pytest.raises(ValueError):
        img.pixels[0, 0, 0] = 1


def test_quantized_reference_is_idempotent_at_full_depth(pattern64):
    ref = quantized_reference(pattern64, 8)
    diff = np.abs(ref.pixels.astype(int) - pattern64.pixels.astype(int))
    assert diff.max() <= 1
