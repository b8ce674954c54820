"""Rendering of run results: text table, CSV twin, and accuracy figure."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first

REPORT_COLUMNS = (
    "run_id",
    "model",
    "samples",
    "depth",
    "temperature",
    "problem_lang",
    "reasoning_lang",
    "translate_first",
    "instruction",
    "polite",
    "few_shot",
    "correct",
    "total",
    "accuracy",
)


def report_row(report: Mapping) -> dict[str, str]:
    """Flatten one ScoreReport-shaped mapping into table cells."""
    config = report.get("config", {})
    return {
        "run_id": str(report.get("run_id", "")),
        "model": str(config.get("model_name", "")),
        "samples": str(config.get("samples_n", "")),
        "depth": str(config.get("depth_d", "")),
        "temperature": str(config.get("temperature", "")),
        "problem_lang": str(config.get("problem_language", "")),
        "reasoning_lang": str(config.get("reasoning_language", "")),
        "translate_first": str(bool(config.get("translate_first", False))).lower(),
        "instruction": str(config.get("instruction_mode", "")),
        "polite": str(bool(config.get("polite", False))).lower(),
        "few_shot": str(config.get("few_shot_count", "")),
        "correct": str(report.get("correct_count", "")),
        "total": str(report.get("total", "")),
        "accuracy": f"{float(report.get('accuracy', 0.0)):.3f}",
    }


def report_table(reports: Sequence[Mapping]) -> str:
    """Aligned text table, one row per report, fixed column order."""
    rows = [report_row(r) for r in reports]
    widths = {
        column: max([len(column)] + [len(row[column]) for row in rows])
        for column in REPORT_COLUMNS
    }
    header = "  ".join(column.ljust(widths[column]) for column in REPORT_COLUMNS)
    rule = "  ".join("-" * widths[column] for column in REPORT_COLUMNS)
    lines = [header.rstrip(), rule.rstrip()]
    for row in rows:
        lines.append(
            "  ".join(row[column].ljust(widths[column]) for column in REPORT_COLUMNS).rstrip()
        )
    return "\n".join(lines) + "\n"


def report_csv(reports: Sequence[Mapping]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(REPORT_COLUMNS), lineterminator="\n")
    writer.writeheader()
    for report in reports:
        writer.writerow(report_row(report))
    return buffer.getvalue()


def render_accuracy_figure(reports: Sequence[Mapping], path: str | Path) -> None:
    """Horizontal bar chart of accuracy per run."""
    rows = [report_row(r) for r in reports]
    labels = [
        f"{row['run_id']} {row['model']} n={row['samples']} d={row['depth']}".strip()
        for row in rows
    ]
    values = [float(row["accuracy"]) for row in rows]
    height = max(2.0, 0.5 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(9, height))
    positions = range(len(rows))
    ax.barh(positions, values, color="#4878a8")
    ax.set_yticks(positions)
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("accuracy")
    ax.set_title("Run accuracy")
    ax.grid(axis="x", linestyle=":", alpha=0.6)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report_bundle(reports: Sequence[Mapping], out_dir: str | Path) -> dict[str, Path]:
    """Write the table, its CSV twin, and the accuracy figure side by side."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "table": out / "report_table.txt",
        "csv": out / "report_table.csv",
        "figure": out / "report_accuracy.png",
    }
    paths["table"].write_text(report_table(reports), encoding="utf-8")
    paths["csv"].write_text(report_csv(reports), encoding="utf-8")
    render_accuracy_figure(reports, paths["figure"])
    return paths
