"""Robustness benchmark: every scheme x every attack over an image corpus.

Each cell counts verification successes per run (bit-level: RSA verify of
the decoded signature; spread spectrum: fingerprint correlation >= the
threshold). Runs differ only through run-seeded payload timestamps, so
fresh signatures/fingerprints are embedded each run while everything else
stays fixed; deterministic cells therefore report a standard deviation of
exactly zero.
"""

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attacks import apply_attack, attack_suite
from .codec_bitlevel import BitCodecParams
from .codec_spread import SpreadParams
from .errors import IoError, StegotraceError
from .payload import (
    KeyPair,
    PayloadSpec,
    derive_fingerprint,
    generate_payload,
    prn_seed_from_public_key,
    sign_payload,
)
from .pipeline import SCHEMES, verify_scheme
from .raster_io import load_raster

CSV_HEADER = "scheme,attack,total,success_avg,success_std,success_rate_pct,failure_avg,failure_std"
CORPUS_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass
class BenchConfig:
    corpus_dir: str
    runs: int = 10
    schemes: tuple = SCHEMES
    attacks: tuple = field(default_factory=lambda: tuple(attack_suite()))
    rng_base_seed: int = 0
    spread_params: SpreadParams | None = None
    bit_params: BitCodecParams = field(default_factory=BitCodecParams)

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")


@dataclass
class CellStats:
    total: int
    success_avg: float
    success_std: float
    success_rate_pct: float
    failure_avg: float
    failure_std: float


@dataclass
class BenchReport:
    cells: dict  # (scheme, attack_kind) -> CellStats
    corpus_size: int
    schemes: tuple
    attack_kinds: tuple
    runs: int


def _load_corpus(corpus_dir):
    paths = sorted(
        p for p in Path(corpus_dir).iterdir()
        if p.suffix.lower() in CORPUS_EXTENSIONS
    )
    images = []
    for path in paths:
        try:
            images.append((path.name, load_raster(path)))
        except IoError as exc:
            print(f"[bench] skipping unreadable image: {exc}", file=sys.stderr)
    if not images:
        raise IoError(f"no readable corpus images under {corpus_dir}")
    return images


def run_bench(cfg: BenchConfig, kp: KeyPair) -> BenchReport:
    """Embed -> attack -> decode -> verify over the corpus, cfg.runs times."""
    images = _load_corpus(cfg.corpus_dir)
    spread_params = cfg.spread_params or SpreadParams(
        prn_seed=prn_seed_from_public_key(kp.public_key)
    )
    attack_kinds = tuple(a.kind for a in cfg.attacks)
    counts = {
        (scheme, kind): np.zeros(cfg.runs, dtype=np.int64)
        for scheme in cfg.schemes
        for kind in attack_kinds
    }

    for run in range(cfg.runs):
        timestamp = cfg.rng_base_seed + run
        sp = sign_payload(
            kp, generate_payload(PayloadSpec("bench", 1, timestamp)), "bench"
        )
        fp = derive_fingerprint(sp)
        for name, img in images:
            for scheme in cfg.schemes:
                try:
                    marked = _encode(img, scheme, sp, fp, spread_params, cfg.bit_params)
                except StegotraceError as exc:
                    print(f"[bench] {name}/{scheme}: {exc}", file=sys.stderr)
                    continue
                for attack in cfg.attacks:
                    hit = apply_attack(marked, attack)
                    ok, _ = verify_scheme(hit, scheme, sp, kp.public_key,
                                          spread_params, cfg.bit_params)
                    counts[(scheme, attack.kind)][run] += ok
        print(f"[bench] run {run + 1}/{cfg.runs} complete", file=sys.stderr)

    total = len(images)
    cells = {}
    for key, succ in counts.items():
        fail = total - succ
        cells[key] = CellStats(
            total=total,
            success_avg=float(succ.mean()),
            success_std=float(succ.std()),
            success_rate_pct=float(100.0 * succ.mean() / total),
            failure_avg=float(fail.mean()),
            failure_std=float(fail.std()),
        )
    return BenchReport(cells, total, tuple(cfg.schemes), attack_kinds, cfg.runs)


def _encode(img, scheme, sp, fp, spread_params, bit_params):
    from . import codec_bitlevel as bitlevel
    from . import codec_spread as spread

    if scheme == "lsb":
        return bitlevel.encode_lsb(img, sp)
    if scheme == "dct":
        return bitlevel.encode_dct(img, sp, bit_params)
    if scheme == "dwt":
        return bitlevel.encode_dwt(img, sp, bit_params)
    if scheme == "ss":
        return spread.encode_ss(img, fp, spread_params)
    return spread.encode_dwtss(img, fp, spread_params)


def write_report(report: BenchReport, path):
    """Scheme-major CSV with the fixed attack order; floats via repr so a
    parse/re-serialize round trip is byte-identical."""
    lines = [CSV_HEADER]
    for scheme in report.schemes:
        for kind in report.attack_kinds:
            c = report.cells[(scheme, kind)]
            lines.append(",".join([
                scheme, kind, str(c.total),
                repr(c.success_avg), repr(c.success_std),
                repr(c.success_rate_pct),
                repr(c.failure_avg), repr(c.failure_std),
            ]))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report {path}: {exc}") from exc


def parse_report(path) -> BenchReport:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read report {path}: {exc}") from exc
    if not lines or lines[0] != CSV_HEADER:
        raise IoError(f"unrecognized report header in {path}")
    cells = {}
    schemes, kinds = [], []
    total = 0
    for line in lines[1:]:
        scheme, kind, tot, s_avg, s_std, rate, f_avg, f_std = line.split(",")
        total = int(tot)
        if scheme not in schemes:
            schemes.append(scheme)
        if kind not in kinds:
            kinds.append(kind)
        cells[(scheme, kind)] = CellStats(
            total=total,
            success_avg=float(s_avg), success_std=float(s_std),
            success_rate_pct=float(rate),
            failure_avg=float(f_avg), failure_std=float(f_std),
        )
    return BenchReport(cells, total, tuple(schemes), tuple(kinds), runs=0)
