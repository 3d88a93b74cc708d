"""Deterministic synthetic images for demos and tests."""
import numpy as np

from .image_model import Image


def test_pattern(height: int = 64, width: int = 64) -> Image:
    """Smooth colour gradients with one hard-edged disc."""
    r, c = np.mgrid[0:height, 0:width]
    r = r / height
    c = c / width
    red = 128 + 100 * np.sin(2 * np.pi * r) * np.cos(np.pi * c)
    green = 60 + 150 * c
    blue = 200 - 120 * r * c
    px = np.stack([red, green, blue], axis=-1)
    px[(r - 0.5) ** 2 + (c - 0.6) ** 2 < 0.04] = (230, 200, 40)
    return Image(np.clip(np.floor(px + 0.5), 0, 255).astype(np.uint8))


test_pattern.__test__ = False  # keep pytest from collecting it
