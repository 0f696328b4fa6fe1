"""Declarative ablation grid: ensemble modes x ADC x generator arch x seeds."""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np

from .checkpoint import canonical_json
from .data import DatasetManifest
from .errors import InvalidConfig
from .metrics import evaluate
from .training import TrainConfig, train


def cell_name(ensemble: str, adc: str, arch: str, seed: int) -> str:
    return f"ens-{ensemble}_adc-{adc}_arch-{arch}_seed-{seed}"


def _aggregate(rows: list[dict]) -> dict:
    out = {}
    for metric in ("psnr", "ssim", "mae"):
        vals = [r[metric] for r in rows if r[metric] is not None]
        if vals:
            arr = np.asarray(vals, dtype=np.float64)
            out[metric] = {"mean": float(arr.mean()), "std": float(arr.std())}
        else:
            out[metric] = {"mean": None, "std": None}
    return out


def run_ablation(
    base_cfg: TrainConfig,
    axes: dict,
    train_manifest: DatasetManifest,
    val_manifest: DatasetManifest,
    out_dir: str | Path,
    config_echo: dict | None = None,
    log=print,
) -> dict:
    """Train and evaluate every cell of the grid; returns the report document.

    axes may hold "ensembles", "adc", "generators", "seeds" lists; absent
    axes default to the base config's single value. Per-cell results are
    flushed to ablation_report.json as they finish; failed cells are
    recorded and do not stop the remaining grid.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ensembles = axes.get("ensembles", [base_cfg.ensemble])
    adcs = axes.get("adc", [base_cfg.adc])
    archs = axes.get("generators", [base_cfg.generator.arch])
    seeds = axes.get("seeds", [base_cfg.seed])
    if not (ensembles and adcs and archs and seeds):
        raise InvalidConfig("every declared ablation axis needs at least one value")

    cells: dict[tuple, list[dict]] = {}
    failed: list[dict] = []
    report_path = out / "ablation_report.json"

    def flush():
        rows = []
        for (e, a, g), results in sorted(cells.items()):
            rows.append(
                {
                    "ensemble": e,
                    "adc": a,
                    "arch": g,
                    "seeds": [r["seed"] for r in results],
                    **_aggregate(results),
                    "runs": [r["dir"] for r in results],
                }
            )
        doc = {"rows": rows, "failed": failed}
        if config_echo is not None:
            doc["config"] = config_echo
        report_path.write_text(canonical_json(doc))
        return doc

    for e, a, g, s in itertools.product(ensembles, adcs, archs, seeds):
        name = cell_name(e, a, g, s)
        cfg = TrainConfig.from_dict(base_cfg.to_dict())
        cfg.ensemble, cfg.adc, cfg.seed = e, a, s
        cfg.generator.arch = g
        cell_dir = out / name
        try:
            ckpt = train(cfg, train_manifest, out_dir=cell_dir)
            rep = evaluate(ckpt, val_manifest)
            (cell_dir / "report.json").write_text(canonical_json(rep))
            cells.setdefault((e, a, g), []).append(
                {
                    "seed": s,
                    "dir": str(cell_dir),
                    "psnr": rep["psnr"]["mean"],
                    "ssim": rep["ssim"]["mean"],
                    "mae": rep["mae"]["mean"],
                }
            )
            log(f"[cell {name}] ssim={rep['ssim']['mean']:.4f} psnr={rep['psnr']['mean']}")
        except Exception as exc:  # keep the rest of the grid running
            failed.append({"cell": name, "error": f"{type(exc).__name__}: {exc}"})
            log(f"[cell {name}] FAILED: {type(exc).__name__}: {exc}")
        flush()
    doc = flush()
    return doc
