"""Command-line entry point: phantom-gen, train, infer, eval, ablate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .aadt import read_tensor_file, write_tensor_file
from .ablation import run_ablation
from .attention import AdConfig
from .checkpoint import canonical_json, load_checkpoint
from .data import load_manifest, load_sample
from .errors import AadganError, InvalidConfig
from .generator import GeneratorConfig
from .metrics import evaluate
from .phantom import generate_phantom_dataset
from .schemas import validate_report, validate_run_config
from .training import Runtime, TrainConfig, infer_with_map, train


def _load_run_config(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise InvalidConfig(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"config {path} is not valid JSON: {e}") from e
    validate_run_config(doc)
    return doc


def _train_config(doc: dict) -> TrainConfig:
    cfg = TrainConfig(
        target_phase=doc["phase"],
        lr=doc["lr"],
        beta1=doc["beta1"],
        beta2=doc["beta2"],
        epochs=doc["epochs"],
        batch_size=doc["batch_size"],
        lambda_l1=doc["lambda_l1"],
        ensemble=doc["ensemble"],
        seed=doc["seed"],
        generator=GeneratorConfig.from_dict(doc["generator"]),
        ad=AdConfig.from_dict(doc["ad"]),
        infer_refinements=doc.get("infer_refinements", 1),
        adc=doc.get("adc", "on"),
    )
    cfg.validate()
    return cfg


def _resolve_out(args, doc: dict | None = None) -> Path:
    out = args.out or (doc or {}).get("out")
    if not out:
        raise InvalidConfig("no output directory: pass --out or set 'out' in the config")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_phantom_gen(args) -> int:
    out = _resolve_out(args)
    manifest = generate_phantom_dataset(
        out, args.seed, args.n, (args.hw, args.hw), (args.roi, args.roi), split=args.split
    )
    path = manifest.root / "manifest.json"
    print(path)
    return 0


def cmd_train(args) -> int:
    doc = _load_run_config(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = _train_config(doc)
    out = _resolve_out(args, doc)
    manifest = load_manifest(doc["train_manifest"])
    echo = cfg.to_dict()
    echo["geometry"] = dict(manifest.geometry)
    with open(out / "stats.log", "w") as logf:
        logf.write(f"# config={canonical_json(echo)}\n")

        def log_fn(stats):
            logf.write(
                f"step={stats['step']} d_loss={stats['d_loss']!r} "
                f"g_adv={stats['g_adv']!r} g_l1={stats['g_l1']!r} "
                f"mean_mx={stats['mean_mx']!r}\n"
            )

        train(
            cfg,
            manifest,
            out_dir=out,
            log_fn=log_fn,
            checkpoint_every=doc.get("checkpoint_every", 10),
        )
    print(out / "checkpoint.aadc")
    return 0


def cmd_infer(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    manifest = load_manifest(args.manifest)
    out = _resolve_out(args)
    rt = Runtime(ckpt)
    k = args.k if args.k is not None else rt.cfg.infer_refinements
    phase = rt.cfg.target_phase
    index = {"config": ckpt.config, "k": k, "samples": []}
    for sid in manifest.ids:
        s = load_sample(manifest, sid)
        y_hat, m_x = infer_with_map(rt, s.x, s.roi, k)
        err = np.abs(y_hat - s.target(phase))
        entry = {"id": sid}
        for key, arr in (("pred", y_hat), ("mx", m_x), ("err", err)):
            rel = f"{sid}_{key}.aadt"
            write_tensor_file(arr, out / rel)
            entry[key] = rel
        index["samples"].append(entry)
    (out / "predictions.json").write_text(canonical_json(index))
    print(out / "predictions.json")
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    manifest = load_manifest(args.manifest)
    out = _resolve_out(args)
    predict_fn = None
    if args.pred:
        pred_dir = Path(args.pred)
        try:
            index = json.loads((pred_dir / "predictions.json").read_text())
        except OSError as e:
            raise InvalidConfig(f"cannot read predictions index: {e}") from e
        paths = {rec["id"]: rec["pred"] for rec in index["samples"]}

        def predict_fn(s):
            if s.id not in paths:
                raise InvalidConfig(f"no prediction for sample {s.id!r} in {pred_dir}")
            return read_tensor_file(pred_dir / paths[s.id])

    report = evaluate(ckpt, manifest, k=args.k, predict_fn=predict_fn)
    validate_report(report)
    path = out / "report.json"
    path.write_text(canonical_json(report))
    print(path)
    return 0


def cmd_ablate(args) -> int:
    doc = _load_run_config(args.config)
    if "val_manifest" not in doc:
        raise InvalidConfig("ablate needs 'val_manifest' in the config")
    base = _train_config(doc)
    out = _resolve_out(args, doc)
    train_manifest = load_manifest(doc["train_manifest"])
    val_manifest = load_manifest(doc["val_manifest"])
    report = run_ablation(
        base, doc.get("ablate", {}), train_manifest, val_manifest, out, config_echo=doc
    )
    for row in report["rows"]:
        print(
            f"ensemble={row['ensemble']} adc={row['adc']} arch={row['arch']} "
            f"ssim={row['ssim']['mean']:.4f}+/-{row['ssim']['std']:.4f} "
            f"psnr={row['psnr']['mean']} mae={row['mae']['mean']}"
        )
    if report["failed"]:
        for f in report["failed"]:
            print(f"failed cell {f['cell']}: {f['error']}", file=sys.stderr)
        return 1
    print(out / "ablation_report.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aadgan",
        description="Attention-guided adversarial synthesis of contrast-response images",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config JSON path")
    common.add_argument("--seed", type=int, default=None, help="seed override")
    common.add_argument("--out", help="output directory")

    p = sub.add_parser("phantom-gen", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--hw", type=int, required=True, help="image side length")
    p.add_argument("--roi", type=int, required=True, help="ROI side length")
    p.add_argument("--split", default="train", choices=["train", "val"])
    p.set_defaults(func=cmd_phantom_gen)

    p = sub.add_parser("train", parents=[common], help="train a model from a config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", parents=[common], help="write predictions for a manifest")
    p.add_argument("--ckpt", required=True, help="checkpoint path")
    p.add_argument("--manifest", required=True, help="manifest path")
    p.add_argument("--k", type=int, default=None, help="refinement count")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", parents=[common], help="metric report for a manifest")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--pred", help="directory of previously written predictions")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", parents=[common], help="run the declared ablation grid")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("train", "ablate") and not args.config:
        parser.error(f"{args.command} requires --config")
    if args.command == "phantom-gen" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except AadganError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
