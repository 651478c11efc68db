"""Shared fixtures: synthetic carriers, desk corpus, keys, embeddings."""

from pathlib import Path

import numpy as np
import pytest

from stegotrace.codec_spread import SpreadParams
from stegotrace.detector import EmbeddingPair
from stegotrace.payload import (
    PayloadSpec,
    derive_fingerprint,
    generate_payload,
    keypair_load_or_generate,
    prn_seed_from_public_key,
    sign_payload,
)
from stegotrace.raster_io import save_raster

TESTKEY_DIR = Path(__file__).parent / "data" / "testkey"

# Mixed shapes, odd dimensions included to exercise the pass-through edges.
CORPUS_SHAPES = [
    (384, 384), (416, 448), (448, 448), (384, 512),
    (449, 512), (512, 512), (512, 417), (448, 576),
]


def synth_scene(seed, height, width, texture=1.5):
    """Photo-plausible carrier: soft tonal ramps, smooth blobs, light grain.

    Locally smooth content is the regime where a blind mean-removed
    correlation detector operates; heavily textured carriers drown the
    mark in host noise for any imperceptible strength.
    """
    rng = np.random.default_rng(seed)
    img = np.zeros((height, width, 3), dtype=np.float64)
    for c in range(3):
        top, bottom = rng.uniform(50, 205, 2)
        img[:, :, c] = np.linspace(top, bottom, height)[:, None]
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(4):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        radius = rng.uniform(height / 5, height / 2)
        blob = rng.uniform(-35, 35) * np.exp(
            -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius**2)
        )
        img += blob[:, :, None] * rng.uniform(0.4, 1.0, 3)
    img += rng.normal(0, texture, (height, width, 3))
    return np.clip(img, 3, 252).astype(np.uint8)


@pytest.fixture(scope="session")
def scene():
    return synth_scene


@pytest.fixture(scope="session")
def keypair():
    """Checked-in test key: detection thresholds and golden outputs depend
    on the PRN seed derived from the public key, so the suite pins one."""
    return keypair_load_or_generate(TESTKEY_DIR)


@pytest.fixture(scope="session")
def signed_payload(keypair):
    spec = PayloadSpec("alice", rules_version=1, timestamp=1_700_000_000)
    return sign_payload(keypair, generate_payload(spec), "alice")


@pytest.fixture(scope="session")
def fingerprint(signed_payload):
    return derive_fingerprint(signed_payload)


@pytest.fixture(scope="session")
def spread_params(keypair):
    return SpreadParams(prn_seed=prn_seed_from_public_key(keypair.public_key))


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """50-image desk corpus, mixed PNG/BMP, deterministic content."""
    root = tmp_path_factory.mktemp("corpus")
    for i in range(50):
        h, w = CORPUS_SHAPES[i % len(CORPUS_SHAPES)]
        img = synth_scene(1000 + i, h, w)
        ext = "png" if i % 2 == 0 else "bmp"
        save_raster(img, root / f"img_{i:03d}.{ext}")
    return root


def synth_embedding_pairs(n_per_class, dim, seed, noise=0.08):
    """Two separable clusters: harmful pairs have anti-aligned text.

    Raw embeddings carry random positive scales so the classifier's
    normalization invariance is exercised incidentally.
    """
    rng = np.random.default_rng(seed)
    anchor = rng.normal(size=dim)
    anchor /= np.linalg.norm(anchor)
    pairs = []
    for label in (0, 1):
        for k in range(n_per_class):
            scale_i, scale_t = rng.uniform(0.5, 3.0, 2)
            e_img = scale_i * (anchor + rng.normal(0, noise, dim))
            sign = 1.0 if label == 0 else -1.0
            e_txt = scale_t * (sign * anchor + rng.normal(0, noise, dim))
            pairs.append(EmbeddingPair(
                id=f"syn_{label}_{k}", e_img=e_img, e_txt=e_txt,
                dim=dim, label=label,
            ))
    return pairs
