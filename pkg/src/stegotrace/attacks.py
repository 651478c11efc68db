"""Post-distribution distortions: Gaussian blur, JPEG recompression, resize.

These model what platforms do to an image between embedding and
verification. The JPEG step deliberately uses a third-party conformant
codec (Pillow): the attack represents platform behavior, so bit-exactness
across codec implementations is not part of the contract.
"""

import io
from dataclasses import dataclass
from math import ceil

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from .errors import CarrierTooSmall
from .signals import require_raster, round_half_away, to_raster

ATTACK_KINDS = ("none", "gaussian_blur", "jpeg", "resize")


@dataclass(frozen=True)
class AttackSpec:
    kind: str = "none"
    blur_sigma: float = 0.5
    jpeg_quality: int = 50
    resize_factor: float = 0.8

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.blur_sigma <= 0:
            raise ValueError("blur_sigma must be positive")
        if not (1 <= self.jpeg_quality <= 100):
            raise ValueError("jpeg_quality must lie in [1, 100]")
        if not (0 < self.resize_factor < 1):
            raise ValueError("resize_factor must lie in (0, 1)")

    @property
    def label(self) -> str:
        return self.kind


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps truncated at radius ceil(3*sigma)."""
    radius = ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def gaussian_blur_plane(plane, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a float plane, clamp-to-edge boundaries.

    Kept separate from apply_attack so linearity can be checked before
    quantization to pixels.
    """
    kernel = gaussian_kernel(sigma)
    blurred = correlate1d(np.asarray(plane, dtype=np.float64), kernel, axis=0, mode="nearest")
    return correlate1d(blurred, kernel, axis=1, mode="nearest")


def _blur(img, sigma):
    out = np.empty_like(img)
    for ch in range(3):
        out[:, :, ch] = to_raster(gaussian_blur_plane(img[:, :, ch], sigma))
    return out


def _jpeg(img, quality):
    buf = io.BytesIO()
    # subsampling=2 selects 4:2:0 chroma subsampling in Pillow
    Image.fromarray(img, mode="RGB").save(buf, format="JPEG", quality=quality, subsampling=2)
    buf.seek(0)
    return np.asarray(Image.open(buf).convert("RGB"))


def _resize(img, factor):
    h, w = img.shape[:2]
    down_w = int(round_half_away(factor * w))
    down_h = int(round_half_away(factor * h))
    if down_w < 2 or down_h < 2:
        raise CarrierTooSmall(f"downscale to {down_w}x{down_h} is below 2x2")
    pil = Image.fromarray(img, mode="RGB")
    down = pil.resize((down_w, down_h), Image.BILINEAR)
    return np.asarray(down.resize((w, h), Image.BILINEAR))


def apply_attack(img, spec: AttackSpec):
    """Return the distorted raster; dimensions always match the input."""
    img = require_raster(img, min_side=2)
    if spec.kind == "none":
        return img.copy()
    if spec.kind == "gaussian_blur":
        return _blur(img, spec.blur_sigma)
    if spec.kind == "jpeg":
        return _jpeg(img, spec.jpeg_quality)
    return _resize(img, spec.resize_factor)


def attack_suite() -> list:
    """Clean baseline plus the three distortions, in fixed report order."""
    return [
        AttackSpec("none"),
        AttackSpec("gaussian_blur", blur_sigma=0.5),
        AttackSpec("jpeg", jpeg_quality=50),
        AttackSpec("resize", resize_factor=0.8),
    ]


def attacked_dir_name(base_dir: str, kind: str) -> str:
    """Parallel-folder naming for persisted attacked images."""
    return f"{base_dir}_attacked_{kind}"
