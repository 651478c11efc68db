"""End-to-end orchestration: embed -> classify -> (if harmful) verify identity.

Two entry points mirror the two halves of the workflow:

* process_single_image embeds one carrier with all five schemes, decodes
  each result, and verifies it, writing encoded/decoded/comparison files
  plus one summary CSV row;
* trace classifies an (image, caption-embedding) pair and, only when the
  pair is flagged harmful, attempts all five decoders against the
  registered signed payload to produce an attribution report.

Harm detection gates attribution: a benign decision never triggers
decoding and the report then carries no verification section.
"""

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import codec_bitlevel as bitlevel
from . import codec_spread as spread
from .codec_bitlevel import BitCodecParams
from .codec_spread import SpreadParams
from .detector import DetectorModel, EmbeddingPair, classify
from .errors import KeyStoreError, ShapeError, StegotraceError
from .payload import (
    SignedPayload,
    derive_fingerprint,
    parse_payload,
    verify_signature,
)
from .raster_io import save_raster

SCHEMES = ("lsb", "dct", "dwt", "ss", "dwt_ss")
SCHEME_FILE_LABELS = {"lsb": "LSB", "dct": "DCT", "dwt": "DWT", "ss": "SS", "dwt_ss": "DWT-SS"}
BIT_SCHEMES = ("lsb", "dct", "dwt")
SUMMARY_HEADER = "image,v_lsb,v_dct,v_dwt,v_ss,v_dwt_ss"
PSNR_IDENTICAL = float("inf")


@dataclass
class VerificationResult:
    """Per-scheme validity flags, each backed by a diagnostic record."""

    flags: dict
    diagnostics: dict

    def __post_init__(self):
        if set(self.flags) != set(SCHEMES) or set(self.diagnostics) != set(SCHEMES):
            raise ValueError("verification must cover exactly the five schemes")

    def to_dict(self) -> dict:
        return {
            "flags": {m: self.flags[m] for m in SCHEMES},
            "diagnostics": {m: self.diagnostics[m] for m in SCHEMES},
        }


@dataclass
class AttributionReport:
    sample_id: str
    harmful_probability: float
    decision: int
    key_id: str
    verification: VerificationResult | None = None
    recovered_identity: dict | None = None

    def to_json(self) -> str:
        doc = {
            "sample_id": self.sample_id,
            "harmful_probability": self.harmful_probability,
            "decision": self.decision,
            "key_id": self.key_id,
            "verification": self.verification.to_dict() if self.verification else None,
            "recovered_identity": self.recovered_identity,
        }
        return json.dumps(doc, sort_keys=True, indent=2)


def _encoders(sp: SignedPayload, spread_params: SpreadParams, bit_params: BitCodecParams):
    fp = derive_fingerprint(sp)
    return {
        "lsb": lambda img: bitlevel.encode_lsb(img, sp),
        "dct": lambda img: bitlevel.encode_dct(img, sp, bit_params),
        "dwt": lambda img: bitlevel.encode_dwt(img, sp, bit_params),
        "ss": lambda img: spread.encode_ss(img, fp, spread_params),
        "dwt_ss": lambda img: spread.encode_dwtss(img, fp, spread_params),
    }


def verify_scheme(img, scheme: str, sp: SignedPayload, public_key,
                  spread_params: SpreadParams,
                  bit_params: BitCodecParams = BitCodecParams()):
    """Decode one scheme from an image and verify it; (flag, diagnostics).

    Capacity/shape failures are recorded as an invalid flag with a reason
    rather than raised.
    """
    try:
        if scheme in BIT_SCHEMES:
            recovered = {
                "lsb": lambda: bitlevel.decode_lsb(img, sp.bit_length),
                "dct": lambda: bitlevel.decode_dct(img, sp.bit_length, bit_params),
                "dwt": lambda: bitlevel.decode_dwt(img, sp.bit_length, bit_params),
            }[scheme]()
            ok = verify_signature(public_key, sp.payload_bytes, recovered)
            return ok, {"signature_verified": ok}
        detect = spread.detect_ss if scheme == "ss" else spread.detect_dwtss
        result = detect(img, derive_fingerprint(sp), spread_params)
        return result.valid, {"correlation": result.correlation, "ber": result.ber}
    except StegotraceError as exc:
        return False, {"error": str(exc)}


def verify_image(img, sp: SignedPayload, public_key,
                 spread_params: SpreadParams,
                 bit_params: BitCodecParams = BitCodecParams()) -> VerificationResult:
    """Run all five decoders on one image against a registered payload."""
    flags, diags = {}, {}
    for scheme in SCHEMES:
        flags[scheme], diags[scheme] = verify_scheme(
            img, scheme, sp, public_key, spread_params, bit_params
        )
    return VerificationResult(flags, diags)


def quality_report(original, watermarked) -> dict:
    """PSNR (peak 255, all channels) and absolute-difference statistics."""
    original = np.asarray(original)
    watermarked = np.asarray(watermarked)
    if original.shape != watermarked.shape:
        raise ShapeError(f"shape mismatch {original.shape} vs {watermarked.shape}")
    diff = watermarked.astype(np.float64) - original.astype(np.float64)
    mse = float(np.mean(diff**2))
    psnr = PSNR_IDENTICAL if mse == 0.0 else 10.0 * np.log10(255.0**2 / mse)
    return {
        "psnr_db": float(psnr),
        "max_abs_diff": float(np.max(np.abs(diff))),
        "mean_abs_diff": float(np.mean(np.abs(diff))),
    }


def _amplified_diff(original, watermarked, gain=8):
    diff = np.abs(watermarked.astype(np.int16) - original.astype(np.int16)) * gain
    return np.clip(diff, 0, 255).astype(np.uint8)


def process_single_image(img, image_name: str, sp: SignedPayload, public_key,
                         out_root, spread_params: SpreadParams,
                         bit_params: BitCodecParams = BitCodecParams(),
                         write_outputs: bool = True):
    """Embed, decode, and verify one carrier with all five schemes in order.

    Returns (encoded images by scheme, VerificationResult) and appends one
    row to out_root/summary.csv. Capacity failures leave the flag false
    with a reason instead of aborting the run.
    """
    encoded, flags, diags = {}, {}, {}
    for scheme, encode in _encoders(sp, spread_params, bit_params).items():
        try:
            marked = encode(img)
        except StegotraceError as exc:
            flags[scheme] = False
            diags[scheme] = {"error": str(exc)}
            continue
        encoded[scheme] = marked
        flags[scheme], diags[scheme] = verify_scheme(
            marked, scheme, sp, public_key, spread_params, bit_params
        )
    result = VerificationResult(flags, diags)

    if write_outputs:
        _write_outputs(img, image_name, encoded, result, sp, out_root,
                       spread_params, bit_params)
    return encoded, result


def _write_outputs(img, image_name, encoded, result, sp, out_root,
                   spread_params, bit_params):
    base = Path(out_root) / image_name
    enc_dir = base / "Encoded_image"
    dec_dir = base / "Decoded_output"
    cmp_dir = base / "Comparison"
    sp_enc = base / "Spatial_encoded"
    sp_dec = base / "Spatial_decoded"
    sp_cmp = base / "Spread_comparison"
    for d in (enc_dir, dec_dir, cmp_dir, sp_enc, sp_dec, sp_cmp):
        d.mkdir(parents=True, exist_ok=True)

    for scheme, marked in encoded.items():
        label = SCHEME_FILE_LABELS[scheme]
        if scheme in BIT_SCHEMES:
            save_raster(marked, enc_dir / f"{label}.png")
            save_raster(_amplified_diff(img, marked), cmp_dir / f"{label}_diff.png")
            recovered = {
                "lsb": bitlevel.decode_lsb,
                "dct": lambda im, n: bitlevel.decode_dct(im, n, bit_params),
                "dwt": lambda im, n: bitlevel.decode_dwt(im, n, bit_params),
            }[scheme](marked, sp.bit_length)
            (dec_dir / f"{label}_signature.hex").write_text(recovered.hex() + "\n")
        else:
            save_raster(marked, sp_enc / f"{label}.png")
            save_raster(_amplified_diff(img, marked), sp_cmp / f"{label}_diff.png")
            (sp_dec / f"{label}_detection.json").write_text(
                json.dumps(result.diagnostics[scheme], sort_keys=True) + "\n"
            )

    append_summary_row(Path(out_root) / "summary.csv", image_name, result)


def append_summary_row(csv_path, image_name: str, result: VerificationResult):
    csv_path = Path(csv_path)
    line = ",".join([image_name] + [str(int(result.flags[m])) for m in SCHEMES])
    if not csv_path.exists():
        csv_path.write_text(SUMMARY_HEADER + "\n" + line + "\n")
    else:
        with open(csv_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def trace(img, pair: EmbeddingPair, model: DetectorModel, public_key,
          registered: SignedPayload, spread_params: SpreadParams,
          bit_params: BitCodecParams = BitCodecParams(),
          key_id: str = "") -> AttributionReport:
    """Classify the pair; decode and verify identity only if flagged harmful.

    Identity is surfaced from the first verifying bit-level scheme
    (lsb > dct > dwt); when only spread-spectrum flags verify, the report
    carries fingerprint-match evidence instead of decoded identity fields.
    """
    if public_key is None:
        raise KeyStoreError("tracing requires the issuing public key")
    p, decision = classify(model, pair)
    report = AttributionReport(
        sample_id=pair.id,
        harmful_probability=p,
        decision=decision,
        key_id=key_id,
    )
    if decision == 0:
        return report

    result = verify_image(img, registered, public_key, spread_params, bit_params)
    report.verification = result
    for scheme in BIT_SCHEMES:
        if result.flags[scheme]:
            spec = parse_payload(registered.payload_bytes)
            report.recovered_identity = {
                "user_id": spec.user_id,
                "rules_version": spec.rules_version,
                "timestamp": spec.timestamp,
                "source_scheme": scheme,
            }
            break
    else:
        ss_valid = [m for m in ("ss", "dwt_ss") if result.flags[m]]
        if ss_valid:
            report.recovered_identity = {
                "fingerprint_evidence": {
                    m: result.diagnostics[m] for m in ss_valid
                },
                "label": registered.plaintext_label,
            }
    return report


# --- issued-payload registry (desk-scale stand-in for a platform DB) -------


def registry_register(path, key_id: str, sp: SignedPayload):
    path = Path(path)
    registry = {}
    if path.exists():
        registry = json.loads(path.read_text(encoding="utf-8"))
    registry[key_id] = {
        "payload": base64.b64encode(sp.payload_bytes).decode("ascii"),
        "signature": base64.b64encode(sp.signature).decode("ascii"),
        "bit_length": sp.bit_length,
        "label": sp.plaintext_label,
    }
    path.write_text(json.dumps(registry, sort_keys=True, indent=2), encoding="utf-8")


def registry_lookup(path, key_id: str) -> SignedPayload:
    path = Path(path)
    if not path.exists():
        raise KeyStoreError(f"payload registry {path} not found")
    registry = json.loads(path.read_text(encoding="utf-8"))
    if key_id not in registry:
        raise KeyStoreError(f"no payload registered under key id {key_id[:12]}...")
    rec = registry[key_id]
    return SignedPayload(
        payload_bytes=base64.b64decode(rec["payload"]),
        signature=base64.b64decode(rec["signature"]),
        bit_length=int(rec["bit_length"]),
        plaintext_label=rec.get("label", ""),
    )
