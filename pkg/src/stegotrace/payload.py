"""Signed identity payloads: RSA-1024 keys, payload serialization, fingerprints.

The identity layer is shared by every watermark scheme. Bit-level codecs
carry the full 128-byte signature; spread-spectrum codecs carry a 32-bit
fingerprint derived from SHA-256 of that signature. PKCS#1 v1.5 with a
SHA-256 digest is used because its signatures are deterministic, which
keeps embedded bitstreams byte-identical across repeated runs.
"""

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.exceptions import InvalidSignature

from .errors import InvalidIdentity, KeyStoreError

RSA_BITS = 1024
SIGNATURE_BYTES = RSA_BITS // 8
FINGERPRINT_BITS = 32
DEFAULT_CORR_THRESHOLD = 0.5

PRIVATE_PEM = "rsa_private.pem"
PUBLIC_PEM = "rsa_public.pem"


@dataclass(frozen=True)
class KeyPair:
    private_key: rsa.RSAPrivateKey
    public_key: rsa.RSAPublicKey
    key_id: str


@dataclass(frozen=True)
class PayloadSpec:
    """Identity fields serialized into the signable payload."""

    user_id: str
    rules_version: int = 1
    timestamp: int = 0


@dataclass(frozen=True)
class SignedPayload:
    payload_bytes: bytes
    signature: bytes
    bit_length: int
    plaintext_label: str


@dataclass(frozen=True)
class Fingerprint32:
    """32 bits (MSB-first from SHA-256 of the signature) plus bipolar view."""

    bits: tuple

    def __post_init__(self):
        if len(self.bits) != FINGERPRINT_BITS or any(b not in (0, 1) for b in self.bits):
            raise ValueError("fingerprint must be exactly 32 bits of 0/1")

    @property
    def bipolar(self):
        return np.array([2 * b - 1 for b in self.bits], dtype=np.float64)


class FingerprintMatch(NamedTuple):
    correlation: float
    ber: float
    valid: bool


def _public_key_der(public_key):
    return public_key.public_bytes(
        encoding=serialization.Encoding.DER,
        format=serialization.PublicFormat.SubjectPublicKeyInfo,
    )


def key_id_of(public_key) -> str:
    """Hex SHA-256 digest of the DER-encoded public key."""
    return hashlib.sha256(_public_key_der(public_key)).hexdigest()


def prn_seed_from_public_key(public_key) -> int:
    """Keyed-noise seed: first 8 bytes of SHA-256(public key DER), big-endian.

    A detector holding only the public key can regenerate the carrier noise.
    """
    digest = hashlib.sha256(_public_key_der(public_key)).digest()
    return int.from_bytes(digest[:8], "big")


def keypair_generate() -> KeyPair:
    private_key = rsa.generate_private_key(public_exponent=65537, key_size=RSA_BITS)
    public_key = private_key.public_key()
    return KeyPair(private_key, public_key, key_id_of(public_key))


def keypair_load_or_generate(store_path) -> KeyPair:
    """Return the key pair stored under store_path, generating one if absent.

    A present-but-unreadable key file raises KeyStoreError; it is never
    silently regenerated.
    """
    store = Path(store_path)
    priv_path = store / PRIVATE_PEM
    pub_path = store / PUBLIC_PEM
    if priv_path.exists():
        try:
            private_key = serialization.load_pem_private_key(
                priv_path.read_bytes(), password=None
            )
        except (ValueError, TypeError, OSError) as exc:
            raise KeyStoreError(f"cannot load private key {priv_path}: {exc}") from exc
        if not isinstance(private_key, rsa.RSAPrivateKey):
            raise KeyStoreError(f"{priv_path} does not hold an RSA private key")
        public_key = private_key.public_key()
        return KeyPair(private_key, public_key, key_id_of(public_key))

    store.mkdir(parents=True, exist_ok=True)
    kp = keypair_generate()
    priv_path.write_bytes(
        kp.private_key.private_bytes(
            encoding=serialization.Encoding.PEM,
            format=serialization.PrivateFormat.PKCS8,
            encryption_algorithm=serialization.NoEncryption(),
        )
    )
    pub_path.write_bytes(
        kp.public_key.public_bytes(
            encoding=serialization.Encoding.PEM,
            format=serialization.PublicFormat.SubjectPublicKeyInfo,
        )
    )
    return kp


def load_public_key(store_path):
    pub_path = Path(store_path) / PUBLIC_PEM
    try:
        public_key = serialization.load_pem_public_key(pub_path.read_bytes())
    except (ValueError, OSError) as exc:
        raise KeyStoreError(f"cannot load public key {pub_path}: {exc}") from exc
    if not isinstance(public_key, rsa.RSAPublicKey):
        raise KeyStoreError(f"{pub_path} does not hold an RSA public key")
    return public_key


def generate_payload(spec: PayloadSpec) -> bytes:
    """Serialize identity fields as UTF-8 ``v<rules>|<user>|<timestamp>``."""
    if not spec.user_id:
        raise InvalidIdentity("user_id must be non-empty")
    if "|" in spec.user_id:
        raise InvalidIdentity("user_id must not contain the '|' delimiter")
    return f"v{spec.rules_version}|{spec.user_id}|{spec.timestamp}".encode("utf-8")


def parse_payload(payload: bytes) -> PayloadSpec:
    """Inverse of generate_payload; raises InvalidIdentity on malformed input."""
    try:
        text = payload.decode("utf-8")
        version_part, user_id, timestamp_part = text.split("|")
        if not version_part.startswith("v"):
            raise ValueError("missing version prefix")
        spec = PayloadSpec(user_id, int(version_part[1:]), int(timestamp_part))
    except (ValueError, UnicodeDecodeError) as exc:
        raise InvalidIdentity(f"malformed payload: {exc}") from exc
    if not spec.user_id:
        raise InvalidIdentity("user_id must be non-empty")
    return spec


def sign_payload(kp: KeyPair, payload: bytes, label: str = "") -> SignedPayload:
    """Sign payload bytes; PKCS#1 v1.5 keeps the signature deterministic."""
    signature = kp.private_key.sign(payload, padding.PKCS1v15(), hashes.SHA256())
    assert len(signature) == SIGNATURE_BYTES
    return SignedPayload(payload, signature, 8 * len(signature), label)


def verify_signature(public_key, payload: bytes, candidate_signature: bytes) -> bool:
    """True iff candidate_signature is valid for payload under public_key.

    Any malformed candidate (wrong length, decoder garbage) is simply False.
    """
    if len(candidate_signature) != SIGNATURE_BYTES:
        return False
    try:
        public_key.verify(candidate_signature, payload, padding.PKCS1v15(), hashes.SHA256())
        return True
    except InvalidSignature:
        return False


def derive_fingerprint(sp: SignedPayload) -> Fingerprint32:
    """First 32 bits, MSB-first, of SHA-256 over the signature bytes."""
    return fingerprint_from_signature(sp.signature)


def fingerprint_from_signature(signature: bytes) -> Fingerprint32:
    digest = hashlib.sha256(signature).digest()
    bits = np.unpackbits(np.frombuffer(digest[:4], dtype=np.uint8))
    return Fingerprint32(tuple(int(b) for b in bits))


def fingerprint_match(
    recovered: Fingerprint32,
    expected: Fingerprint32,
    corr_threshold: float = DEFAULT_CORR_THRESHOLD,
) -> FingerprintMatch:
    """Bipolar correlation and bit error rate between two fingerprints.

    Computed from the integer match count so that correlation == 1 - 2*ber
    holds exactly (both are multiples of 1/32, exact in binary floating
    point).
    """
    matches = sum(r == e for r, e in zip(recovered.bits, expected.bits))
    ber = (FINGERPRINT_BITS - matches) / FINGERPRINT_BITS
    correlation = (2 * matches - FINGERPRINT_BITS) / FINGERPRINT_BITS
    return FingerprintMatch(correlation, ber, correlation >= corr_threshold)
