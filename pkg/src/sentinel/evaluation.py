"""Post-training diagnostics: confusion matrices and error histograms.

Two confusion modes are supported.  Argmax mode treats each record as a
single-class problem (which object is the hostile one) and requires exactly
one 1.0 target per record.  Threshold mode keeps a 2x2 matrix per object slot
and handles records with zero or several hostile objects; an output exactly
equal to the threshold counts as hostile, biasing ties toward an alarm.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DatasetMeta
from .mlp import Network, TrainReport, forward_batch, model_inputs

DEFAULT_THRESHOLD = 0.5


class EvaluationError(Exception):
    pass


class MultiHostileError(EvaluationError):
    """Argmax mode hit a record without exactly one hostile target."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Prediction/target counts.

    In argmax mode ``counts[i, j]`` is the number of records predicted as
    class i+1 whose true class is j+1 (classes are object indices).  In
    threshold mode ``counts[v, a, p]`` counts records where object v+1 has
    actual label a and predicted label p (0 = benign, 1 = hostile).
    """

    mode: str
    counts: np.ndarray
    n_records: int
    threshold: float | None = None

    @property
    def percentages(self) -> np.ndarray:
        total = self.counts.sum()
        return self.counts * (100.0 / total) if total else self.counts.astype(float)

    def diagonal_accuracy(self) -> float:
        """Fraction of records on the diagonal (argmax mode only)."""
        if self.mode != "argmax":
            raise EvaluationError("diagonal accuracy is defined for argmax mode")
        return float(np.trace(self.counts)) / self.n_records


@dataclass(frozen=True)
class ErrorHistogram:
    """Histogram of absolute output errors across every record and object."""

    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def modal_bin(self) -> tuple[float, float]:
        i = int(np.argmax(self.counts))
        return float(self.bin_edges[i]), float(self.bin_edges[i + 1])


def _predictions(net: Network, records, meta: DatasetMeta):
    if not records:
        raise EvaluationError("no records to evaluate")
    X = np.vstack([model_inputs(obs.locations, meta) for obs in records])
    Y = np.array([obs.hostility for obs in records], dtype=float)
    return forward_batch(net, X), Y


def confusion(net: Network, records, meta: DatasetMeta, mode: str = "argmax",
              threshold: float = DEFAULT_THRESHOLD) -> ConfusionMatrix:
    """Confusion matrix of the network's outputs against the record targets."""
    outputs, targets = _predictions(net, records, meta)
    n = net.config.n_objects
    if mode == "argmax":
        hostile_counts = np.sum(targets == 1.0, axis=1)
        bad = np.flatnonzero(hostile_counts != 1)
        if bad.size:
            raise MultiHostileError(
                f"record {bad[0] + 1} has {int(hostile_counts[bad[0]])} hostile targets; "
                "argmax mode needs exactly one; use threshold mode for multi-hostile data"
            )
        predicted = np.argmax(outputs, axis=1)  # ties resolve to the lowest index
        actual = np.argmax(targets, axis=1)
        counts = np.zeros((n, n), dtype=int)
        np.add.at(counts, (predicted, actual), 1)
        return ConfusionMatrix(mode="argmax", counts=counts, n_records=len(records))
    if mode == "threshold":
        predicted = (outputs >= threshold).astype(int)
        actual = (targets >= 0.5).astype(int)
        counts = np.zeros((n, 2, 2), dtype=int)
        for v in range(n):
            np.add.at(counts[v], (actual[:, v], predicted[:, v]), 1)
        return ConfusionMatrix(mode="threshold", counts=counts, n_records=len(records), threshold=threshold)
    raise EvaluationError(f"unknown confusion mode {mode!r}")


def error_histogram(net: Network, records, meta: DatasetMeta, bins: int = 20) -> ErrorHistogram:
    """Histogram of |output - target| over all outputs, bins covering [0, 1]."""
    outputs, targets = _predictions(net, records, meta)
    errors = np.abs(outputs - targets).ravel()
    counts, edges = np.histogram(errors, bins=bins, range=(0.0, 1.0))
    return ErrorHistogram(bin_edges=edges, counts=counts)


# ---------------------------------------------------------------------------
# Emission: human-readable tables and tab-separated files (documented in
# docs/formats.md) that the figure renderers and external tooling consume.
# ---------------------------------------------------------------------------

def format_confusion(cm: ConfusionMatrix) -> str:
    pct = cm.percentages
    lines = []
    if cm.mode == "argmax":
        n = cm.counts.shape[0]
        lines.append(f"confusion matrix (argmax over {cm.n_records} records)")
        header = "output\\target" + "".join(f"{j + 1:>12}" for j in range(n))
        lines.append(header)
        for i in range(n):
            cells = "".join(f"{cm.counts[i, j]:>6} {pct[i, j]:4.1f}%" for j in range(n))
            lines.append(f"{i + 1:>13}{cells}")
        correct = np.trace(cm.counts)
        lines.append(f"diagonal: {correct}/{cm.n_records} ({100.0 * correct / cm.n_records:.1f}%)")
    else:
        lines.append(
            f"per-object confusion (threshold {cm.threshold}, {cm.n_records} records)"
        )
        lines.append("object  benign->benign  benign->hostile  hostile->benign  hostile->hostile")
        for v in range(cm.counts.shape[0]):
            c = cm.counts[v]
            lines.append(f"{v + 1:>6}  {c[0, 0]:>14}  {c[0, 1]:>15}  {c[1, 0]:>15}  {c[1, 1]:>16}")
    return "\n".join(lines) + "\n"


def write_confusion(cm: ConfusionMatrix, path):
    """Tab-separated dump: one header line, then one line per matrix cell."""
    lines = [f"mode\t{cm.mode}\trecords\t{cm.n_records}\tthreshold\t{'' if cm.threshold is None else repr(cm.threshold)}"]
    if cm.mode == "argmax":
        lines.append("predicted\tactual\tcount")
        n = cm.counts.shape[0]
        for i in range(n):
            for j in range(n):
                lines.append(f"{i + 1}\t{j + 1}\t{cm.counts[i, j]}")
    else:
        lines.append("object\tactual\tpredicted\tcount")
        for v in range(cm.counts.shape[0]):
            for a in (0, 1):
                for p in (0, 1):
                    lines.append(f"{v + 1}\t{a}\t{p}\t{cm.counts[v, a, p]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_histogram(hist: ErrorHistogram) -> str:
    lines = [f"error histogram ({hist.total} outputs)"]
    peak = hist.counts.max() if hist.total else 1
    for i, count in enumerate(hist.counts):
        lo, hi = hist.bin_edges[i], hist.bin_edges[i + 1]
        bar = "#" * int(round(40.0 * count / peak)) if peak else ""
        lines.append(f"[{lo:5.3f}, {hi:5.3f})  {count:>8}  {bar}")
    return "\n".join(lines) + "\n"


def write_histogram(hist: ErrorHistogram, path):
    lines = ["bin_lo\tbin_hi\tcount"]
    for i, count in enumerate(hist.counts):
        lines.append(f"{repr(float(hist.bin_edges[i]))}\t{repr(float(hist.bin_edges[i + 1]))}\t{count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_training_curve(report: TrainReport, path):
    lines = ["epoch\ttrain_mse\tvalidation_mse"]
    for epoch, (tr, va) in enumerate(zip(report.train_mse, report.validation_mse), start=1):
        lines.append(f"{epoch}\t{repr(tr)}\t{repr(va)}")
    lines.append(f"# best_epoch\t{report.best_epoch}\tbest_validation_mse\t{repr(report.best_validation_mse)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
