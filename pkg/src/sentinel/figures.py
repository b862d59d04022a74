"""Figure rendering for evaluation reports.

Every writer in `evaluation` has a matching renderer here that draws the same
data to an image file, so a report directory carries both the delimited text
and a picture of it.  Uses the Agg backend; no display is required.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ConfusionMatrix, ErrorHistogram
from .mlp import TrainReport


def render_confusion(cm: ConfusionMatrix, path):
    if cm.mode == "argmax":
        _render_argmax_confusion(cm, path)
    else:
        _render_threshold_confusion(cm, path)


def _render_argmax_confusion(cm: ConfusionMatrix, path):
    n = cm.counts.shape[0]
    pct = cm.percentages
    fig, ax = plt.subplots(figsize=(1.1 * n + 2.0, 1.1 * n + 2.0))
    # green diagonal, red off-diagonal cells that are non-empty
    colors = np.empty((n, n, 3))
    for i in range(n):
        for j in range(n):
            if i == j:
                colors[i, j] = (0.65, 0.85, 0.65)
            elif cm.counts[i, j]:
                colors[i, j] = (0.92, 0.68, 0.68)
            else:
                colors[i, j] = (0.96, 0.96, 0.96)
    ax.imshow(colors, interpolation="nearest")
    for i in range(n):
        for j in range(n):
            ax.text(j, i, f"{cm.counts[i, j]}\n{pct[i, j]:.1f}%",
                    ha="center", va="center", fontsize=9)
    ax.set_xticks(range(n), [str(j + 1) for j in range(n)])
    ax.set_yticks(range(n), [str(i + 1) for i in range(n)])
    ax.set_xlabel("target class")
    ax.set_ylabel("output class")
    acc = 100.0 * np.trace(cm.counts) / cm.n_records
    ax.set_title(f"test confusion matrix ({cm.n_records} records, {acc:.1f}% on the diagonal)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _render_threshold_confusion(cm: ConfusionMatrix, path):
    n = cm.counts.shape[0]
    fig, axes = plt.subplots(1, n, figsize=(2.2 * n, 2.8), squeeze=False)
    for v in range(n):
        ax = axes[0, v]
        ax.imshow(np.full((2, 2, 3), 0.95), interpolation="nearest")
        for a in (0, 1):
            for p in (0, 1):
                ax.text(p, a, str(cm.counts[v, a, p]), ha="center", va="center")
        ax.set_xticks([0, 1], ["benign", "hostile"], fontsize=8)
        ax.set_yticks([0, 1], ["benign", "hostile"], fontsize=8)
        ax.set_xlabel("predicted", fontsize=8)
        if v == 0:
            ax.set_ylabel("actual", fontsize=8)
        ax.set_title(f"object {v + 1}", fontsize=9)
    fig.suptitle(f"per-object confusion, threshold {cm.threshold}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_histogram(hist: ErrorHistogram, path):
    centers = (hist.bin_edges[:-1] + hist.bin_edges[1:]) / 2.0
    width = hist.bin_edges[1] - hist.bin_edges[0]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(centers, hist.counts, width=width * 0.92, color="#4878a8")
    ax.set_xlabel("|output - target|")
    ax.set_ylabel("instances")
    ax.set_title(f"error histogram ({hist.total} outputs)")
    ax.set_xlim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_training_curve(report: TrainReport, path):
    epochs = np.arange(1, len(report.train_mse) + 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(epochs, report.train_mse, label="train")
    ax.semilogy(epochs, report.validation_mse, label="validation")
    ax.axvline(report.best_epoch, color="grey", linestyle=":", linewidth=1,
               label=f"best epoch {report.best_epoch}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean squared error")
    ax.set_title("training performance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
