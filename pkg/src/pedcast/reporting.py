"""Run-report assembly: canonical JSON, summary tables and plot files.

Reports are a pure function of the stored artifacts: serialization is
canonical (sorted keys, fixed indentation, shortest-roundtrip floats), so
regenerating a report from the same inputs is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "config", "seeds"],
    "properties": {
        "schema_version": {"const": 1},
        "config": {"type": "object"},
        "seeds": {
            "type": "object",
            "required": ["master"],
            "properties": {"master": {"type": "integer"}},
        },
        "contingency": {
            "type": "object",
            "required": ["counts", "chi2", "dof", "log10_p", "significant", "alpha"],
            "properties": {
                "counts": {"type": "array"},
                "chi2": {"type": "number"},
                "dof": {"type": "integer", "minimum": 1},
                "log10_p": {"type": "number", "maximum": 0},
                "significant": {"type": "boolean"},
                "alpha": {"type": "number"},
            },
        },
        "cv": {
            "type": "object",
            "required": ["rotations", "mean_test_acc", "mean_test_kappa"],
        },
        "ablation": {
            "type": "object",
            "required": ["metrics_without_wt", "metrics_with_wt", "relative", "significance"],
            "properties": {
                "metrics_without_wt": {"$ref": "#/$defs/metrics"},
                "metrics_with_wt": {"$ref": "#/$defs/metrics"},
                "relative": {"type": "object"},
                "significance": {"type": "object"},
            },
        },
    },
    "$defs": {
        "metrics": {
            "type": "object",
            "required": ["ade", "fde", "acc", "kappa", "n_samples"],
            "properties": {
                "ade": {"type": "number", "minimum": 0},
                "fde": {"type": "number", "minimum": 0},
                "acc": {"type": "number", "minimum": 0, "maximum": 1},
                "kappa": {"type": "number", "maximum": 1},
                "n_samples": {"type": "integer", "minimum": 1},
            },
        },
    },
}


def canonical_json(obj) -> str:
    """Deterministic JSON text for byte-identical regeneration."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def validate_report(report: dict) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)


def write_report(path: str | Path, report: dict) -> None:
    validate_report(report)
    Path(path).write_text(canonical_json(report))


def format_comparison_table(report: dict) -> str:
    """Text table comparing the two ablation settings, with relative rows."""
    ab = report["ablation"]
    a, b, rel = ab["metrics_without_wt"], ab["metrics_with_wt"], ab["relative"]
    lines = [
        f"{'metric':<12}{'without WT':>14}{'with WT':>14}{'relative':>12}",
        "-" * 52,
        f"{'ACC (%)':<12}{a['acc'] * 100:>14.2f}{b['acc'] * 100:>14.2f}{rel['r_acc']:>11.2f}%",
        f"{'kappa (%)':<12}{a['kappa'] * 100:>14.2f}{b['kappa'] * 100:>14.2f}{rel['r_kappa']:>11.2f}%",
        f"{'ADE (m)':<12}{a['ade']:>14.4f}{b['ade']:>14.4f}{rel['r_ade']:>11.2f}%",
        f"{'FDE (m)':<12}{a['fde']:>14.4f}{b['fde']:>14.4f}{rel['r_fde']:>11.2f}%",
    ]
    sig = ab["significance"]
    lines.append("")
    lines.append(f"McNemar p = {sig['mcnemar_p']:.4g} "
                 f"({'significant' if sig['mcnemar_significant'] else 'not significant'})")
    infl = sig.get("influenced", {})
    if "mann_whitney_ade_p" in infl:
        lines.append(
            f"influenced samples: {sig['n_influenced']} of {sig['n_samples']}; "
            f"ADE {infl['mean_ade_without_wt']:.3f} -> {infl['mean_ade_with_wt']:.3f} m "
            f"(p = {infl['mann_whitney_ade_p']:.4g}), "
            f"FDE {infl['mean_fde_without_wt']:.3f} -> {infl['mean_fde_with_wt']:.3f} m "
            f"(p = {infl['mann_whitney_fde_p']:.4g})"
        )
    return "\n".join(lines) + "\n"


def format_contingency_table(counts, chi2: float, dof: int, log10_p: float) -> str:
    """Text rendering of a destination-by-condition contingency table."""
    counts = [list(map(int, row)) for row in counts]
    C = len(counts[0])
    col_tot = [sum(row[c] for row in counts) for c in range(C)]
    header = f"{'class':<8}" + "".join(f"{('cond ' + str(c)):>10}" for c in range(C)) + f"{'total':>10}"
    lines = [header, "-" * len(header)]
    for k, row in enumerate(counts):
        lines.append(f"{k:<8}" + "".join(f"{v:>10}" for v in row) + f"{sum(row):>10}")
    lines.append(f"{'total':<8}" + "".join(f"{v:>10}" for v in col_tot) + f"{sum(col_tot):>10}")
    lines.append(f"chi2 = {chi2:.2f}  dof = {dof}  log10 p = {log10_p:.4f}")
    return "\n".join(lines) + "\n"


def plot_learning_curves(path: str | Path, cv: dict) -> None:
    """Validation-accuracy curves per rotation."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for rot in cv["rotations"]:
        acc = rot.get("val_accuracy", [])
        ax.plot(range(1, len(acc) + 1), acc, label=f"rotation {rot['rotation']}")
        ax.axvline(rot["best_epoch"] + 1, color="grey", alpha=0.2, linestyle=":")
    ax.set_xlabel("epoch")
    ax.set_ylabel("validation accuracy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_displacement_comparison(path: str | Path, significance: dict) -> None:
    """Bar chart of ADE/FDE for the influenced subset under both settings."""
    infl = significance.get("influenced", {})
    fig, ax = plt.subplots(figsize=(6, 4))
    if "mean_ade_without_wt" in infl:
        groups = ["ADE", "FDE"]
        without = [infl["mean_ade_without_wt"], infl["mean_fde_without_wt"]]
        with_wt = [infl["mean_ade_with_wt"], infl["mean_fde_with_wt"]]
        xs = range(len(groups))
        ax.bar([x - 0.17 for x in xs], without, width=0.34, label="without WT")
        ax.bar([x + 0.17 for x in xs], with_wt, width=0.34, label="with WT")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(groups)
        ax.set_ylabel("metres")
        ax.set_title(f"influenced samples: {significance['n_influenced']}"
                     f" of {significance['n_samples']}")
        ax.legend()
    else:
        ax.text(0.5, 0.5, "no influenced samples", ha="center", va="center")
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
