"""Figure and table rendering for training runs and evaluation reports.

Figures are written next to the delimited (TSV / key-value) outputs so a run
directory is self-describing. matplotlib is imported lazily with the Agg
backend; nothing here opens a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

from .evaluation import EvalReport


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_history_tsv(history: Sequence[dict], path: Union[str, Path]) -> None:
    columns = ("epoch", "train_loss", "dev_elas_exact", "dev_elas_coarse")
    lines = ["\t".join(columns)]
    for row in history:
        lines.append("\t".join(
            str(row["epoch"]) if col == "epoch" else f"{row[col]:.6f}" for col in columns))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_training_curves(history: Sequence[dict], path: Union[str, Path]) -> None:
    """Two-panel figure: training loss and dev ELAS per epoch."""
    plt = _pyplot()
    epochs = [row["epoch"] for row in history]
    fig, (ax_loss, ax_elas) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax_loss.plot(epochs, [row["train_loss"] for row in history], color="tab:red")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("training loss")
    ax_elas.plot(epochs, [row["dev_elas_exact"] for row in history], label="exact", color="tab:blue")
    ax_elas.plot(epochs, [row["dev_elas_coarse"] for row in history], label="coarse", color="tab:green")
    ax_elas.set_xlabel("epoch")
    ax_elas.set_ylabel("dev ELAS")
    ax_elas.set_ylim(-0.02, 1.02)
    ax_elas.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_per_sentence_tsv(report: EvalReport, path: Union[str, Path]) -> None:
    lines = ["sentence\texact_f1\tcoarse_f1\tgold_edges\tsys_edges\tmatched"]
    for s in report.per_sentence:
        lines.append(f"{s.index}\t{s.exact.f1:.4f}\t{s.coarse.f1:.4f}\t{s.gold_edges}\t{s.sys_edges}\t{s.matched}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_eval_summary(report: EvalReport, path: Union[str, Path]) -> None:
    """Bar chart of corpus metrics plus a per-sentence exact-F1 histogram."""
    plt = _pyplot()
    fig, (ax_bars, ax_hist) = plt.subplots(1, 2, figsize=(9, 3.2))
    names = ["P", "R", "F1"]
    exact = [report.elas_exact.precision, report.elas_exact.recall, report.elas_exact.f1]
    coarse = [report.elas_coarse.precision, report.elas_coarse.recall, report.elas_coarse.f1]
    xs = range(len(names))
    ax_bars.bar([x - 0.2 for x in xs], exact, width=0.4, label="exact", color="tab:blue")
    ax_bars.bar([x + 0.2 for x in xs], coarse, width=0.4, label="coarse", color="tab:green")
    ax_bars.set_xticks(list(xs), names)
    ax_bars.set_ylim(0, 1.05)
    ax_bars.set_ylabel("ELAS")
    ax_bars.legend(frameon=False)
    ax_hist.hist([s.exact.f1 for s in report.per_sentence], bins=20, range=(0.0, 1.0), color="tab:gray")
    ax_hist.set_xlabel("per-sentence exact F1")
    ax_hist.set_ylabel("sentences")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
