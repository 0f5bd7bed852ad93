"""Evaluation reports: versioned JSON, comparison tables, CSV, static plots.

Schema documented in docs/report.md. Aggregates are always recomputable from
the embedded per-episode records; multi-seed summaries report the mean with
a normal-approximation 95% confidence interval.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 2


@dataclass
class EvalReport:
    label: str
    suite: dict
    metrics: dict
    records: list
    checkpoint_hash: str = ""
    schema_version: int = SCHEMA_VERSION

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.suite, sort_keys=True).encode()).hexdigest()[:12]

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "label": self.label,
            "suite": self.suite,
            "config_hash": self.config_hash(),
            "checkpoint_hash": self.checkpoint_hash,
            "metrics": self.metrics,
            "records": self.records,
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        d = json.loads(Path(path).read_text())
        if d["schema_version"] != SCHEMA_VERSION:
            raise SchemaMismatch([d["schema_version"], SCHEMA_VERSION])
        return cls(label=d["label"], suite=d["suite"], metrics=d["metrics"],
                   records=d["records"], checkpoint_hash=d["checkpoint_hash"],
                   schema_version=d["schema_version"])

    @classmethod
    def from_eval(cls, label: str, suite, result: dict,
                  checkpoint_hash: str = "") -> "EvalReport":
        metrics = {k: v for k, v in result.items()
                   if k not in ("records", "speed_log", "dist_log", "live_log")}
        return cls(label=label,
                   suite={"task": suite.task, "n_configs": suite.n_configs,
                          "seed": suite.seed, "distribution": suite.distribution,
                          "perturbation": suite.perturbation},
                   metrics=metrics, records=result["records"],
                   checkpoint_hash=checkpoint_hash)


class SchemaMismatch(ValueError):
    def __init__(self, versions):
        super().__init__(f"report schema versions differ: {versions}")
        self.versions = versions


def recompute_metrics(report: EvalReport) -> dict:
    """Aggregates recomputed from per-episode records (integrity check)."""
    records = report.records
    out: dict = {"n": len(records)}
    statuses = [r["status"] for r in records]
    out["success_rate"] = statuses.count("success") / len(records) if records else None
    errs = [r["min_gated_error"] for r in records if r.get("min_gated_error") is not None]
    if errs:
        cm = np.array(errs) * 100.0
        out["error_cm_mean"] = float(cm.mean())
        out["error_cm_std"] = float(cm.std())
        out["error_cm_median"] = float(np.median(cm))
    return out


def mean_ci95(values) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width over seed-level values."""
    v = np.asarray(values, dtype=np.float64)
    if v.size <= 1:
        return float(v.mean()) if v.size else float("nan"), 0.0
    half = 1.96 * v.std(ddof=1) / np.sqrt(v.size)
    return float(v.mean()), float(half)


def bootstrap_ci95(values, n_boot: int = 4000, seed: int = 0) -> tuple[float, float]:
    """Bootstrap cross-check of the normal approximation."""
    v = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(np.uint64(seed))
    means = rng.choice(v, size=(n_boot, v.size), replace=True).mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(v.mean()), float((hi - lo) / 2)


def comparison_table(reports: list[EvalReport]) -> str:
    """Fixed-width text table across reports (one row per report)."""
    versions = {r.schema_version for r in reports}
    if len(versions) > 1:
        raise SchemaMismatch(sorted(versions))
    cols = ["label", "task", "dist", "perturb", "n", "success", "err_cm"]
    rows = []
    for r in reports:
        pert = r.suite.get("perturbation") or {}
        pert_s = (f"d={pert.get('delay_max', 0)},n={pert.get('vel_noise_amp', 0)}"
                  if pert else "-")
        err = r.metrics.get("error_cm_mean")
        err_s = (f"{err:.1f}±{r.metrics.get('error_cm_std', 0):.1f}"
                 if err is not None else "-")
        succ = r.metrics.get("success_rate")
        rows.append([r.label, r.suite["task"], r.suite["distribution"], pert_s,
                     str(r.metrics.get("n", len(r.records))),
                     f"{succ:.1%}" if succ is not None else "-", err_s])
    widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def write_report_csv(reports: list[EvalReport], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["label", "task", "distribution", "perturbed", "n",
                    "success_rate", "error_cm_mean", "error_cm_std"])
        for r in reports:
            w.writerow([r.label, r.suite["task"], r.suite["distribution"],
                        bool(r.suite.get("perturbation")),
                        r.metrics.get("n"), r.metrics.get("success_rate"),
                        r.metrics.get("error_cm_mean"), r.metrics.get("error_cm_std")])


def plot_reports(reports: list[EvalReport], path: str | Path) -> bool:
    """Static PNG bar chart; returns False when matplotlib is unavailable."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    labels = [r.label for r in reports]
    succ = [(r.metrics.get("success_rate") or 0.0) * 100 for r in reports]
    errs = [r.metrics.get("error_cm_mean") or 0.0 for r in reports]
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.2))
    axes[0].bar(labels, succ, color="#4682c8")
    axes[0].set_ylabel("success %")
    axes[1].bar(labels, errs, color="#e08030")
    axes[1].set_ylabel("position error (cm)")
    for ax in axes:
        ax.tick_params(axis="x", rotation=30, labelsize=7)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return True
