"""Command-line surface: keys, embedding, decoding, attacks, bench, detector.

Machine-readable results (JSON/CSV) go to stdout; progress and logs go to
stderr. Exit status: 0 on success (a failed verification is a result, not
an error), 1 on domain errors, 2 on usage errors.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from . import bench as bench_mod
from . import codec_bitlevel as bitlevel
from . import codec_spread as spread
from . import detector, pipeline
from .attacks import ATTACK_KINDS, AttackSpec, apply_attack, attacked_dir_name
from .codec_bitlevel import BitCodecParams
from .codec_spread import SpreadParams
from .errors import StegotraceError
from .payload import (
    PayloadSpec,
    derive_fingerprint,
    generate_payload,
    key_id_of,
    keypair_load_or_generate,
    load_public_key,
    prn_seed_from_public_key,
    sign_payload,
)
from .raster_io import load_raster, save_raster

REGISTRY_FILE = "payload_registry.json"


def _log(msg):
    print(msg, file=sys.stderr)


def _load_config(args) -> dict:
    if not args.config:
        return {}
    return json.loads(Path(args.config).read_text(encoding="utf-8"))


def _setting(args, config, name, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


def _spread_params(config, public_key, strength=None, corr_threshold=None) -> SpreadParams:
    overrides = config.get("spread", {})
    return SpreadParams(
        strength=strength if strength is not None else overrides.get("strength", 12.0),
        corr_threshold=(corr_threshold if corr_threshold is not None
                        else overrides.get("corr_threshold", 0.5)),
        prn_seed=overrides.get("prn_seed", prn_seed_from_public_key(public_key)),
    )


def _bit_params(config) -> BitCodecParams:
    overrides = config.get("bit", {})
    return BitCodecParams(
        dct_coeff_pos=tuple(overrides.get("dct_coeff_pos", (6, 2))),
        dct_quant_step=overrides.get("dct_quant_step", 16.0),
        dwt_quant_step=overrides.get("dwt_quant_step", 8.0),
    )


def _registry_path(key_dir) -> Path:
    return Path(key_dir) / REGISTRY_FILE


def cmd_keygen(args):
    config = _load_config(args)
    key_dir = _setting(args, config, "key_dir", "keys")
    kp = keypair_load_or_generate(key_dir)
    print(json.dumps({"key_id": kp.key_id, "key_dir": str(key_dir)}, sort_keys=True))
    return 0


def cmd_embed(args):
    config = _load_config(args)
    key_dir = _setting(args, config, "key_dir", "keys")
    out_root = Path(_setting(args, config, "out", "."))
    kp = keypair_load_or_generate(key_dir)
    timestamp = args.timestamp if args.timestamp is not None else int(time.time())
    spec = PayloadSpec(args.user_id, args.rules_version, timestamp)
    sp = sign_payload(kp, generate_payload(spec), args.user_id)
    pipeline.registry_register(_registry_path(key_dir), kp.key_id, sp)

    img = load_raster(args.image)
    name = Path(args.image).stem
    spread_params = _spread_params(config, kp.public_key, args.strength)
    bit_params = _bit_params(config)

    if args.scheme == "all":
        _, result = pipeline.process_single_image(
            img, name, sp, kp.public_key, out_root, spread_params, bit_params
        )
        print(json.dumps(
            {"image": name, "key_id": kp.key_id,
             "flags": {m: result.flags[m] for m in pipeline.SCHEMES}},
            sort_keys=True,
        ))
        return 0

    encoder = {
        "lsb": lambda: bitlevel.encode_lsb(img, sp),
        "dct": lambda: bitlevel.encode_dct(img, sp, bit_params),
        "dwt": lambda: bitlevel.encode_dwt(img, sp, bit_params),
        "ss": lambda: spread.encode_ss(img, derive_fingerprint(sp), spread_params),
        "dwt_ss": lambda: spread.encode_dwtss(img, derive_fingerprint(sp), spread_params),
    }[args.scheme]
    marked = encoder()
    out_root.mkdir(parents=True, exist_ok=True)
    label = pipeline.SCHEME_FILE_LABELS[args.scheme]
    out_path = out_root / f"{name}_{label}.png"
    save_raster(marked, out_path)
    quality = pipeline.quality_report(img, marked)
    quality["psnr_db"] = repr(quality["psnr_db"])
    print(json.dumps(
        {"image": name, "scheme": args.scheme, "output": str(out_path),
         "key_id": kp.key_id, "quality": quality},
        sort_keys=True,
    ))
    return 0


def _registered_payload(args, config):
    key_dir = _setting(args, config, "key_dir", "keys")
    public_key = load_public_key(key_dir)
    key_id = key_id_of(public_key)
    sp = pipeline.registry_lookup(_registry_path(key_dir), key_id)
    return public_key, key_id, sp


def cmd_decode(args):
    config = _load_config(args)
    public_key, key_id, sp = _registered_payload(args, config)
    img = load_raster(args.image)
    spread_params = _spread_params(config, public_key, args.strength)
    bit_params = _bit_params(config)

    result = pipeline.verify_image(img, sp, public_key, spread_params, bit_params)
    scheme = args.scheme
    doc = {
        "image": Path(args.image).name,
        "scheme": scheme,
        "key_id": key_id,
        "verdict": "VALID" if result.flags[scheme] else "INVALID",
        "diagnostics": result.diagnostics[scheme],
    }
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_verify(args):
    config = _load_config(args)
    public_key, key_id, sp = _registered_payload(args, config)
    img = load_raster(args.image)
    spread_params = _spread_params(config, public_key, args.strength)
    result = pipeline.verify_image(img, sp, public_key, spread_params, _bit_params(config))
    print(json.dumps(
        {"image": Path(args.image).name, "key_id": key_id, **result.to_dict()},
        sort_keys=True,
    ))
    return 0


def cmd_attack(args):
    config = _load_config(args)
    spec = AttackSpec(
        kind=args.kind,
        blur_sigma=args.sigma if args.sigma is not None else 0.5,
        jpeg_quality=args.quality if args.quality is not None else 50,
        resize_factor=args.factor if args.factor is not None else 0.8,
    )
    img = load_raster(args.image)
    hit = apply_attack(img, spec)
    src = Path(args.image)
    out = _setting(args, config, "out")
    if args.out_file:
        out_path = Path(args.out_file)
    elif out:
        out_dir = Path(attacked_dir_name(str(Path(out) / src.parent.name), spec.kind))
        out_dir.mkdir(parents=True, exist_ok=True)
        out_path = out_dir / f"{src.stem}.png"
    else:
        out_path = src.parent / f"{src.stem}_attacked_{spec.kind}.png"
    save_raster(hit, out_path)
    print(json.dumps({"attack": spec.kind, "output": str(out_path)}, sort_keys=True))
    return 0


def cmd_bench(args):
    config = _load_config(args)
    key_dir = _setting(args, config, "key_dir", "keys")
    kp = keypair_load_or_generate(key_dir)
    spread_params = _spread_params(config, kp.public_key, args.strength)
    cfg = bench_mod.BenchConfig(
        corpus_dir=args.corpus,
        runs=args.runs,
        rng_base_seed=args.seed if args.seed is not None else 0,
        spread_params=spread_params,
        bit_params=_bit_params(config),
    )
    report = bench_mod.run_bench(cfg, kp)
    if args.report_file:
        bench_mod.write_report(report, args.report_file)
        _log(f"[bench] report written to {args.report_file}")
    else:
        tmp = []
        for scheme in report.schemes:
            for kind in report.attack_kinds:
                c = report.cells[(scheme, kind)]
                tmp.append(",".join([
                    scheme, kind, str(c.total), repr(c.success_avg),
                    repr(c.success_std), repr(c.success_rate_pct),
                    repr(c.failure_avg), repr(c.failure_std),
                ]))
        print(bench_mod.CSV_HEADER)
        print("\n".join(tmp))
    return 0


def cmd_train(args):
    config = _load_config(args)
    dataset = detector.load_jsonl_dataset(args.dataset)
    cfg = detector.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        rng_seed=args.seed if args.seed is not None else 0,
        validation_fraction=args.val_fraction,
    )
    threshold = config.get("threshold", 0.5)
    model, history = detector.train(dataset, cfg, threshold=threshold)
    detector.save_checkpoint(model, args.checkpoint)
    _log(f"[train] checkpoint written to {args.checkpoint}")
    lines = ["epoch,train_loss,train_acc,val_loss,val_acc"]
    lines += [
        f"{h['epoch']},{repr(h['train_loss'])},{repr(h['train_acc'])},"
        f"{repr(h['val_loss'])},{repr(h['val_acc'])}"
        for h in history
    ]
    if args.history_file:
        Path(args.history_file).write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        print("\n".join(lines))
    return 0


def cmd_classify(args):
    model = detector.load_checkpoint(args.checkpoint)
    dataset = detector.load_jsonl_dataset(args.dataset)
    print("id,probability,decision")
    for pair in dataset:
        p, decision = detector.classify(model, pair)
        print(f"{pair.id},{repr(p)},{decision}")
    labeled = [p for p in dataset if p.label is not None]
    if len(labeled) >= 4:
        try:
            metrics = detector.evaluate(model, labeled)
            _log(f"[classify] metrics: {json.dumps(metrics, sort_keys=True)}")
        except StegotraceError:
            pass
    return 0


def cmd_trace(args):
    config = _load_config(args)
    public_key, key_id, sp = _registered_payload(args, config)
    model = detector.load_checkpoint(args.checkpoint)
    dataset = detector.load_jsonl_dataset(args.record)
    if args.sample_id:
        matches = [p for p in dataset if p.id == args.sample_id]
        if not matches:
            raise StegotraceError(f"no record with id {args.sample_id!r} in {args.record}")
        pair = matches[0]
    else:
        pair = dataset[0]
    img = load_raster(args.image)
    spread_params = _spread_params(config, public_key, args.strength)
    report = pipeline.trace(img, pair, model, public_key, sp,
                            spread_params, _bit_params(config), key_id)
    print(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--key-dir", dest="key_dir", help="key store directory")
    common.add_argument("--out", help="output root directory")
    common.add_argument("--seed", type=int, help="seed for seeded operations")
    common.add_argument("--config", help="JSON config file with overrides")
    common.add_argument("--strength", type=float, help="spread-spectrum strength override")

    parser = argparse.ArgumentParser(
        prog="stegotrace",
        description="Watermark-based identity embedding, harm gating, and tracing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", parents=[common], help="create or load the RSA key pair")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed", parents=[common], help="sign identity and embed watermark(s)")
    p.add_argument("--image", required=True)
    p.add_argument("--user-id", required=True)
    p.add_argument("--scheme", default="all",
                   choices=["all", *pipeline.SCHEMES])
    p.add_argument("--timestamp", type=int, help="payload timestamp (fixed for reproducible runs)")
    p.add_argument("--rules-version", type=int, default=1)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("decode", parents=[common], help="decode one scheme and report the verdict")
    p.add_argument("--image", required=True)
    p.add_argument("--scheme", required=True, choices=list(pipeline.SCHEMES))
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", parents=[common], help="run all five decoders on an image")
    p.add_argument("--image", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack", parents=[common], help="apply a post-distribution distortion")
    p.add_argument("--image", required=True)
    p.add_argument("--kind", required=True, choices=list(ATTACK_KINDS))
    p.add_argument("--sigma", type=float, help="gaussian blur sigma")
    p.add_argument("--quality", type=int, help="jpeg quality factor")
    p.add_argument("--factor", type=float, help="resize factor")
    p.add_argument("--out-file", help="explicit output path")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", parents=[common], help="scheme x attack robustness benchmark")
    p.add_argument("--corpus", required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--report-file", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train", parents=[common], help="train the fusion classifier")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--history-file", help="write history CSV here instead of stdout")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", parents=[common], help="score embedding records")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("trace", parents=[common],
                       help="classify a pair and attribute identity if harmful")
    p.add_argument("--image", required=True)
    p.add_argument("--record", required=True, help="JSONL file with the embedding record")
    p.add_argument("--sample-id", help="record id to trace (default: first record)")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StegotraceError as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
