"""Image container, YCbCr conversion (ITU-T T.871) and bit-depth quantization.

All conversions use exact integer arithmetic with round-half-up so that
sender and receiver agree bit for bit regardless of platform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_DIM = 16
MAX_DIM = 255 * 16  # uint8 header field times 16

# T.871 coefficients scaled by 1e6
_SCALE = 1_000_000
_Y = (299_000, 587_000, 114_000)
_CB = (-168_736, -331_264, 500_000)
_CR = (500_000, -418_688, -81_312)
_R_CR = 1_402_000
_G_CB = -344_136
_G_CR = -714_136
_B_CB = 1_772_000


class ImageError(ValueError):
    pass


def _round_half_up(num, den):
    # floor(num/den + 1/2), valid for negative numerators too
    return (2 * num + den) // (2 * den)


def _clamp(v, lo=0, hi=255):
    return np.clip(v, lo, hi) if isinstance(v, np.ndarray) else max(lo, min(hi, v))


def check_dimensions(width: int, height: int) -> None:
    for name, v in (("width", width), ("height", height)):
        if v % 16 or not MIN_DIM <= v <= MAX_DIM:
            raise ImageError(
                f"{name}={v} must be a multiple of 16 in [{MIN_DIM}, {MAX_DIM}]"
            )


@dataclass(frozen=True, eq=False)
class Image:
    """An RGB raster, ``pixels`` has shape (height, width, 3) and dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ImageError(f"expected (height, width, 3) array, got {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ImageError("channel values must be in [0, 255]")
            px = px.astype(np.uint8)
        check_dimensions(px.shape[1], px.shape[0])
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


def rgb_to_ycbcr(r, g, b):
    """Convert RGB to full-range YCbCr.

    Works on Python ints or integer numpy arrays. Returns ``(y, cb, cr)``.
    """
    args = [np.asarray(c, dtype=np.int64) if isinstance(c, np.ndarray) else int(c)
            for c in (r, g, b)]
    r, g, b = args
    y = _round_half_up(_Y[0] * r + _Y[1] * g + _Y[2] * b, _SCALE)
    cb = _round_half_up(128 * _SCALE + _CB[0] * r + _CB[1] * g + _CB[2] * b, _SCALE)
    cr = _round_half_up(128 * _SCALE + _CR[0] * r + _CR[1] * g + _CR[2] * b, _SCALE)
    return _clamp(y), _clamp(cb), _clamp(cr)


def ycbcr_to_rgb(y, cb, cr):
    args = [np.asarray(c, dtype=np.int64) if isinstance(c, np.ndarray) else int(c)
            for c in (y, cb, cr)]
    y, cb, cr = args
    cb = cb - 128
    cr = cr - 128
    r = _round_half_up(y * _SCALE + _R_CR * cr, _SCALE)
    g = _round_half_up(y * _SCALE + _G_CB * cb + _G_CR * cr, _SCALE)
    b = _round_half_up(y * _SCALE + _B_CB * cb, _SCALE)
    return _clamp(r), _clamp(g), _clamp(b)


def _check_bits(bits):
    if not 1 <= bits <= 8:
        raise ValueError(f"bits per channel must be in [1, 8], got {bits}")


def quantize_channel(v, bits: int):
    """Map a 0..255 sample to ``bits`` bits: round(v / 255 * (2**bits - 1))."""
    _check_bits(bits)
    m = (1 << bits) - 1
    if isinstance(v, np.ndarray):
        v = v.astype(np.int64)
    return _round_half_up(v * m, 255)


def dequantize_channel(q, bits: int):
    _check_bits(bits)
    m = (1 << bits) - 1
    if isinstance(q, np.ndarray):
        q = q.astype(np.int64)
    return _round_half_up(q * 255, m)


def image_to_ycbcr(image: Image) -> np.ndarray:
    """Return an int64 (height, width, 3) array of Y, Cb, Cr planes."""
    px = image.pixels.astype(np.int64)
    return np.stack(rgb_to_ycbcr(px[..., 0], px[..., 1], px[..., 2]), axis=-1)


def ycbcr_to_image(planes: np.ndarray) -> Image:
    planes = np.asarray(planes)
    if planes.dtype.kind == "f":
        planes = np.floor(planes + 0.5)
    planes = np.clip(planes, 0, 255).astype(np.int64)
    rgb = ycbcr_to_rgb(planes[..., 0], planes[..., 1], planes[..., 2])
    return Image(np.stack(rgb, axis=-1).astype(np.uint8))


def quantized_reference(image: Image, bits: int) -> Image:
    """The best image a receiver can hope for at ``bits`` per channel.

    Every pixel goes through YCbCr conversion, quantization and back, with
    no samples missing.
    """
    planes = image_to_ycbcr(image)
    planes = dequantize_channel(quantize_channel(planes, bits), bits)
    return ycbcr_to_image(planes)
