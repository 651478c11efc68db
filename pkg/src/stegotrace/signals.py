"""Deterministic signal primitives shared by every watermark codec.

Conventions used throughout the package:

* a *raster* is a numpy array of shape (height, width, 3), dtype uint8,
  channel order RGB;
* a *plane* is a 2-D float64 array holding one channel or its transform
  coefficients.

All transforms are orthonormal so that energy checks are exact and the
parity-quantization codecs are scale-stable. Regions that do not fill a
full transform unit (8x8 block for the DCT, 2x2 cell for the Haar DWT)
are left untouched by the codecs rather than padded.
"""

import numpy as np
from scipy.fft import dctn, idctn

from .errors import CarrierTooSmall, EmptyRequest, ShapeError

BLOCK = 8

# SplitMix64 constants; embedder and detector must share this generator
# bit-exactly, so it is pinned here rather than delegated to numpy's RNG.
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_MASK64 = 0xFFFFFFFFFFFFFFFF


def require_raster(img, min_side=16):
    """Validate the (H, W, 3) uint8 raster convention; returns the array."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"expected (H, W, 3) raster, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ShapeError(f"expected uint8 raster, got dtype {img.dtype}")
    if img.shape[0] < min_side or img.shape[1] < min_side:
        raise CarrierTooSmall(
            f"carrier {img.shape[1]}x{img.shape[0]} below minimum {min_side}x{min_side}"
        )
    return img


def _as_plane(plane):
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ShapeError(f"expected 2-D plane, got shape {plane.shape}")
    return plane


def _block_view(plane, block):
    """Reshape the full-block region of a plane to (nby, block, nbx, block)."""
    h, w = plane.shape
    hb, wb = h - h % block, w - w % block
    return plane[:hb, :wb].reshape(hb // block, block, wb // block, block), hb, wb


def block_dct_forward(plane, block=BLOCK):
    """Type-II orthonormal DCT applied independently to each full block.

    Trailing rows/columns that do not fill a block are copied unchanged,
    so the output has the same shape as the input.
    """
    plane = _as_plane(plane)
    h, w = plane.shape
    if h < block or w < block:
        raise CarrierTooSmall(f"plane {w}x{h} smaller than one {block}x{block} block")
    out = plane.copy()
    view, hb, wb = _block_view(plane, block)
    coeffs = dctn(view, type=2, norm="ortho", axes=(1, 3))
    out[:hb, :wb] = coeffs.reshape(hb, wb)
    return out


def block_dct_inverse(coeffs, block=BLOCK):
    """Inverse of block_dct_forward; values stay floating point."""
    coeffs = _as_plane(coeffs)
    h, w = coeffs.shape
    if h < block or w < block:
        raise ShapeError(f"coefficient plane {w}x{h} smaller than one block")
    out = coeffs.copy()
    view, hb, wb = _block_view(coeffs, block)
    samples = idctn(view, type=2, norm="ortho", axes=(1, 3))
    out[:hb, :wb] = samples.reshape(hb, wb)
    return out


def haar_dwt_forward(plane):
    """One-level orthonormal Haar decomposition into (LL, LH, HL, HH).

    Requires even dimensions; callers embed an odd trailing row/column by
    cropping to the even region and passing the remainder through unchanged.
    """
    plane = _as_plane(plane)
    h, w = plane.shape
    if h < 2 or w < 2:
        raise CarrierTooSmall(f"plane {w}x{h} smaller than one 2x2 cell")
    if h % 2 or w % 2:
        raise ShapeError(f"Haar decomposition requires even dimensions, got {w}x{h}")
    a = plane[0::2, 0::2]
    b = plane[0::2, 1::2]
    c = plane[1::2, 0::2]
    d = plane[1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    lh = (a - b + c - d) / 2.0
    hl = (a + b - c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return ll, lh, hl, hh


def haar_dwt_inverse(ll, lh, hl, hh):
    """Reconstruct a plane from one-level Haar subbands (exact inverse)."""
    subbands = [_as_plane(s) for s in (ll, lh, hl, hh)]
    if len({s.shape for s in subbands}) != 1:
        raise ShapeError("subbands must share one shape")
    ll, lh, hl, hh = subbands
    sh, sw = ll.shape
    out = np.empty((2 * sh, 2 * sw), dtype=np.float64)
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 0::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return out


def prn_generate(seed, length):
    """Keyed bipolar noise: SplitMix64 stream, sign taken from the top bit.

    Pure function of (seed, length); element i is mix(seed + (i+1)*golden),
    mapped to +1.0 when bit 63 is set, else -1.0.
    """
    if length <= 0:
        raise EmptyRequest("requested an empty noise sequence")
    idx = np.arange(1, length + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK64) + idx * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    z ^= z >> np.uint64(31)
    return np.where(z >> np.uint64(63), 1.0, -1.0)


def round_half_away(x):
    """Round to nearest integer, halves away from zero (float result)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_raster(plane):
    """Quantize a float plane to uint8: round half away from zero, clamp [0, 255]."""
    return np.clip(round_half_away(plane), 0.0, 255.0).astype(np.uint8)
