"""PNG I/O: 8-bit files <-> float arrays in [0, 1].

Conversion is exact division by 255 on load and round(value * 255) on save,
so a save/load round trip is idempotent on already-quantized data.
"""

from __future__ import annotations

import numpy as np
from PIL import Image


def save_image(path, pixels: np.ndarray) -> None:
    """Write an (H, W, 3) float array in [0, 1] as an 8-bit RGB PNG."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    quant = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(quant, mode="RGB").save(path, format="PNG")


def load_image(path) -> np.ndarray:
    """Read an RGB PNG as an (H, W, 3) float64 array in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_mask(path, mask: np.ndarray) -> None:
    """Write an (H, W) binary mask as a single-channel PNG with values {0, 255}."""
    arr = np.asarray(mask, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected (H, W) mask, got shape {arr.shape}")
    Image.fromarray((arr > 0.5).astype(np.uint8) * 255, mode="L").save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Read a single-channel {0, 255} PNG as an (H, W) float64 array of {0.0, 1.0}."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr > 127).astype(np.float64)
