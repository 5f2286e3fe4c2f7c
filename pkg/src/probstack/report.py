"""Human-readable run reports: a delimited results table plus rendered
figures (metric bars and the test confusion matrix).

The main table has one row per base model and one row for the chosen
ensemble, all four metrics at 3 decimals.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import ValidationError
from .pipeline import RunResult

META_DISPLAY = {
    "logreg": "Logistic Regression classifier",
    "linear_svm": "Linear SVC classifier",
    "voting": "Voting classifier",
    "ovr_logreg": "OneVsRest classifier",
    "ovr_linear_svm": "OneVsRest classifier",
    "ecoc_logreg": "ECOC classifier",
    "ecoc_linear_svm": "ECOC classifier",
}

FUSION_SYMBOL = {"concat": "P^C", "average": "P^A"}

TABLE_COLUMNS = ("Model", "Acc", "F_macro", "Prec", "Rec")


def meta_display_name(meta: str) -> str:
    try:
        return META_DISPLAY[meta]
    except KeyError:
        raise ValidationError(f"unknown meta-classifier kind {meta!r}") from None


def fusion_symbol(fusion: str) -> str:
    try:
        return FUSION_SYMBOL[fusion]
    except KeyError:
        raise ValidationError(f"unknown fusion strategy {fusion!r}") from None


def ensemble_row_label(fusion: str, meta: str) -> str:
    return f"Ensemble with {meta_display_name(meta)} ({fusion_symbol(fusion)} as a input feature)"


def _metric_cells(report) -> list[str]:
    return [f"{v:.3f}" for v in (report.acc, report.f_macro, report.prec, report.rec)]


def table_rows(result: RunResult) -> list[tuple[str, list[str]]]:
    """(row label, formatted metric cells) per table row, base models first."""
    rows = [(name, _metric_cells(report)) for name, report in result.base_model_reports]
    rows.append(
        (ensemble_row_label(result.chosen.fusion, result.chosen.meta), _metric_cells(result.test_report))
    )
    return rows


def format_report_table(result: RunResult) -> str:
    lines = ["\t".join(TABLE_COLUMNS)]
    for label, cells in table_rows(result):
        lines.append("\t".join([label] + cells))
    return "\n".join(lines) + "\n"


def format_grid_table(result: RunResult) -> str:
    lines = ["\t".join(("Fusion", "Meta", "Acc", "F_macro", "Prec", "Rec", "Chosen"))]
    for entry in result.grid:
        chosen = "*" if (entry.fusion, entry.meta) == (result.chosen.fusion, result.chosen.meta) else ""
        lines.append("\t".join([entry.fusion, entry.meta] + _metric_cells(entry.val_report) + [chosen]))
    return "\n".join(lines) + "\n"


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_metrics_figure(result: RunResult, path) -> None:
    """Grouped bars: the four test metrics for every base model and the
    chosen ensemble."""
    plt = _pyplot()
    labels = [name for name, _ in result.base_model_reports]
    labels.append(ensemble_row_label(result.chosen.fusion, result.chosen.meta))
    reports = [report for _, report in result.base_model_reports] + [result.test_report]
    metric_names = ("Acc", "F_macro", "Prec", "Rec")
    values = np.array([[r.acc, r.f_macro, r.prec, r.rec] for r in reports])

    x = np.arange(len(labels))
    width = 0.2
    fig, ax = plt.subplots(figsize=(max(7.0, 1.6 * len(labels)), 4.5))
    for j, metric in enumerate(metric_names):
        ax.bar(x + (j - 1.5) * width, values[:, j], width, label=metric)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("score")
    ax.set_title(f"{result.task}: test metrics per model")
    ax.legend(ncol=4, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_confusion_figure(result: RunResult, path) -> None:
    """Heatmap of the chosen configuration's test confusion matrix."""
    plt = _pyplot()
    counts = result.test_report.confusion.counts
    k = counts.shape[0]
    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * k, 0.8 + 0.9 * k))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(k))
    ax.set_yticks(range(k))
    ax.set_xticklabels(result.class_names, rotation=45, ha="right")
    ax.set_yticklabels(result.class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"{result.task}: test confusion")
    cutoff = counts.max() / 2.0
    for t in range(k):
        for p in range(k):
            color = "white" if counts[t, p] > cutoff else "black"
            ax.text(p, t, str(int(counts[t, p])), ha="center", va="center", color=color, fontsize=8)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report_files(result: RunResult, out_dir) -> dict[str, Path]:
    """Write report.tsv, val_grid.tsv, and both figures into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out_dir / "report.tsv",
        "val_grid": out_dir / "val_grid.tsv",
        "metrics_figure": out_dir / "metrics.png",
        "confusion_figure": out_dir / "confusion.png",
    }
    paths["report"].write_text(format_report_table(result), encoding="utf-8")
    paths["val_grid"].write_text(format_grid_table(result), encoding="utf-8")
    render_metrics_figure(result, paths["metrics_figure"])
    render_confusion_figure(result, paths["confusion_figure"])
    return paths
