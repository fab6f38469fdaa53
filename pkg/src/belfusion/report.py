"""Rendering of fusion results: delimited tables, record dumps, figures.

Tables use tab-separated values with fixed 4-decimal formatting so that a
fixed seed reproduces the emitted report byte for byte.  Figures are rendered
next to the tables with matplotlib's Agg backend; they are a convenience view
and are not part of the byte-stability contract.
"""

from __future__ import annotations

import json
from pathlib import Path

from .bba import MassFunction
from .decision import credibility, pignistic, plausibility
from .frame import MAX_ENUMERATION_ATOMS, LatticeElement, enumerate_dsm_lattice, top
from .harness import FusionReport

__all__ = [
    "render_divergence_table",
    "render_accuracy_table",
    "render_summary",
    "render_records",
    "render_functional_table",
    "write_report",
]


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def render_divergence_table(report: FusionReport) -> str:
    """Tab-separated matrix of decision divergences (%), rules on both axes."""
    lines = ["rule\t" + "\t".join(report.rule_labels)]
    for label, row in zip(report.rule_labels, report.divergence):
        lines.append(label + "\t" + "\t".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def render_accuracy_table(report: FusionReport) -> str:
    """Tab-separated good-classification rates (%) with confidence bounds."""
    if report.accuracy is None:
        return "rule\trate\tci_low\tci_high\n"
    lines = ["rule\trate\tci_low\tci_high"]
    for label in report.rule_labels:
        rate, lo, hi = report.accuracy[label]
        lines.append(f"{label}\t{_fmt(rate)}\t{_fmt(lo)}\t{_fmt(hi)}")
    return "\n".join(lines) + "\n"


def render_summary(report: FusionReport) -> str:
    lines = [
        f"classes\t{','.join(report.classes)}",
        f"model\t{report.model_label}",
        f"rules\t{','.join(report.rule_labels)}",
        f"decision\t{report.policy_label}",
        f"instances\t{len(report.instance_ids)}",
        f"sources\t{','.join(report.sources)}",
        f"mean_total_conflict\t{_fmt(report.mean_conflict)}",
    ]
    for source in report.sources:
        lines.append(f"auto_conflict[{source}]\t{_fmt(report.auto_conflicts[source])}")
    if report.accuracy is not None:
        lines.append(f"trials\t{report.metadata.get('trials')}")
        lines.append(f"ci_method\t{report.metadata.get('ci_method')}")
    return "\n".join(lines) + "\n"


def render_records(report: FusionReport) -> str:
    """Full structured dump of the run as deterministic JSON."""
    payload = {
        "config": report.config,
        "classes": list(report.classes),
        "model": report.model_label,
        "rules": list(report.rule_labels),
        "decision_policy": report.policy_label,
        "sources": list(report.sources),
        "metadata": report.metadata,
        "mean_total_conflict": report.mean_conflict,
        "auto_conflicts": report.auto_conflicts,
        "divergence_percent": report.divergence,
        "accuracy": (
            {label: {"rate": rate, "ci": [lo, hi]}
             for label, (rate, lo, hi) in report.accuracy.items()}
            if report.accuracy is not None else None
        ),
        "instances": [
            {
                "id": instance_id,
                "total_conflict": conflict,
                "fused": {label: [[expr, mass] for expr, mass in masses]
                          for label, masses in fused.items()},
                "decisions": {label: report.decisions[label][i]
                              for label in report.rule_labels},
            }
            for i, (instance_id, fused, conflict) in enumerate(
                zip(report.instance_ids, report.fused, report.conflicts))
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_functional_table(m: MassFunction, rows: list[LatticeElement] | None = None) -> str:
    """Mass / credibility / plausibility / pignistic table for one result."""
    model = m.model
    if rows is None:
        if m.frame.n <= MAX_ENUMERATION_ATOMS:
            unique: dict[LatticeElement, None] = {}
            for e in enumerate_dsm_lattice(m.frame):
                unique.setdefault(model.canonicalize(e))
            rows = sorted(unique, key=LatticeElement.canonical_key)
        else:
            seen: dict[LatticeElement, None] = {}
            for e, _ in m.items():
                seen.setdefault(e)
            seen.setdefault(top(m.frame))
            rows = sorted(seen, key=LatticeElement.canonical_key)
    lines = ["element\tmass\tbel\tpl\tbetp"]
    for element in rows:
        if model.is_empty(element):
            if m[element] > 0.0 or element.bits == 0:
                lines.append(f"{element.expression}\t{_fmt(m[element])}\t"
                             f"{_fmt(0.0)}\t{_fmt(0.0)}\t-")
            continue
        lines.append("\t".join([
            element.expression,
            _fmt(m[element]),
            _fmt(credibility(m, element)),
            _fmt(plausibility(m, element)),
            _fmt(pignistic(m, element)),
        ]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def _save_divergence_figure(report: FusionReport, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = list(report.rule_labels)
    fig, ax = plt.subplots(figsize=(1.1 * len(labels) + 2.5, 1.0 * len(labels) + 2.0))
    image = ax.imshow(report.divergence, cmap="viridis")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels)
    for i in range(len(labels)):
        for j in range(len(labels)):
            ax.text(j, i, f"{report.divergence[i][j]:.2f}",
                    ha="center", va="center", fontsize=8,
                    color="white" if report.divergence[i][j] < max(map(max, report.divergence)) / 2 else "black")
    ax.set_title("Decision divergence between rules (%)")
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _save_accuracy_figure(report: FusionReport, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = list(report.rule_labels)
    rates = [report.accuracy[label][0] for label in labels]
    lows = [rates[i] - report.accuracy[label][1] for i, label in enumerate(labels)]
    highs = [report.accuracy[label][2] - rates[i] for i, label in enumerate(labels)]
    fig, ax = plt.subplots(figsize=(1.0 * len(labels) + 2.5, 4.0))
    ax.errorbar(range(len(labels)), rates, yerr=[lows, highs],
                fmt="o", capsize=4, color="tab:blue")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_ylabel("good-classification rate (%)")
    ax.set_title("Per-rule accuracy with 95% intervals")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _save_conflict_figure(report: FusionReport, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.hist(report.conflicts, bins=30, color="tab:orange", alpha=0.8)
    ax.axvline(report.mean_conflict, color="black", linestyle="--",
               label=f"mean = {report.mean_conflict:.4f}")
    ax.set_xlabel("total conflict per instance")
    ax.set_ylabel("count")
    ax.set_title("Conflict distribution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(report: FusionReport, outdir: str | Path, *, figures: bool = True) -> list[Path]:
    """Write the delimited tables, the record dump, and (optionally) figures.

    Returns the list of files written.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, text: str) -> None:
        path = out / name
        path.write_text(text)
        written.append(path)

    emit("summary.txt", render_summary(report))
    emit("divergence.tsv", render_divergence_table(report))
    if report.accuracy is not None:
        emit("accuracy.tsv", render_accuracy_table(report))
    emit("records.json", render_records(report))

    if figures:
        figure_path = out / "divergence_matrix.png"
        _save_divergence_figure(report, figure_path)
        written.append(figure_path)
        conflict_path = out / "conflict_distribution.png"
        _save_conflict_figure(report, conflict_path)
        written.append(conflict_path)
        if report.accuracy is not None:
            accuracy_path = out / "accuracy_intervals.png"
            _save_accuracy_figure(report, accuracy_path)
            written.append(accuracy_path)
    return written
