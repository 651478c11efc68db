"""Raster file loading/saving (PNG, JPEG, BMP) via Pillow."""

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import IoError


def load_raster(path) -> np.ndarray:
    """Load an image as an (H, W, 3) uint8 RGB array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise IoError(f"cannot load image {path}: {exc}") from exc


def save_raster(img: np.ndarray, path):
    """Save an (H, W, 3) uint8 array; format follows the file extension.

    PNG/BMP are lossless; watermarked outputs must not pass through a
    lossy save or the embedded bits are destroyed before verification.
    """
    try:
        Image.fromarray(np.asarray(img, dtype=np.uint8), mode="RGB").save(path)
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot save image {path}: {exc}") from exc
