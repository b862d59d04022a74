"""A small feedforward network scoring per-object hostility.

The network takes the 2N unit-scaled coordinates of the N objects currently
in the area of observation and emits N probabilities, one per object.  Both
the hidden and the output layer are sigmoid-activated; training is plain
per-record gradient descent on half the sum of squared output errors, with
early stopping driven by the validation slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import (
    UNIT_SCALE,
    DatasetMeta,
    Location,
    SplitAssignment,
    to_arrays,
)

MODEL_HEADER = "sentinel-model v1"


class MlpError(Exception):
    """Base class for network construction and training failures."""


class ArityError(MlpError, ValueError):
    """An input, target or location vector has the wrong length."""


class TrainingDivergedError(MlpError):
    """Loss went non-finite; try a lower learning rate."""


class ModelFormatError(MlpError):
    """Malformed model file."""


def sigmoid(x):
    """Logistic activation 1 / (1 + e^-x); saturates instead of overflowing."""
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


@dataclass(frozen=True)
class NetworkConfig:
    """Shape of a hostility network for a fixed object count.

    Inputs are the interleaved x/y coordinates (2 per object), outputs one
    hostility per object.  The hidden width defaults to the input width.
    """

    n_objects: int
    hidden_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_objects < 1:
            raise MlpError(f"n_objects must be >= 1, got {self.n_objects}")
        if self.hidden_size is None:
            object.__setattr__(self, "hidden_size", 2 * self.n_objects)
        if self.hidden_size < 1:
            raise MlpError(f"hidden_size must be >= 1, got {self.hidden_size}")

    @property
    def input_size(self) -> int:
        return 2 * self.n_objects

    @property
    def output_size(self) -> int:
        return self.n_objects


@dataclass
class Network:
    """Weights and biases of the two weight layers."""

    hidden_weights: np.ndarray  # (hidden_size, input_size)
    hidden_bias: np.ndarray     # (hidden_size,)
    output_weights: np.ndarray  # (output_size, hidden_size)
    output_bias: np.ndarray     # (output_size,)
    config: NetworkConfig

    def __post_init__(self):
        c = self.config
        shapes = {
            "hidden_weights": (self.hidden_weights.shape, (c.hidden_size, c.input_size)),
            "hidden_bias": (self.hidden_bias.shape, (c.hidden_size,)),
            "output_weights": (self.output_weights.shape, (c.output_size, c.hidden_size)),
            "output_bias": (self.output_bias.shape, (c.output_size,)),
        }
        for name, (got, want) in shapes.items():
            if got != want:
                raise MlpError(f"{name} has shape {got}, expected {want}")
        for name in ("hidden_weights", "hidden_bias", "output_weights", "output_bias"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise MlpError(f"{name} contains non-finite entries")

    def copy(self) -> "Network":
        return Network(
            hidden_weights=self.hidden_weights.copy(),
            hidden_bias=self.hidden_bias.copy(),
            output_weights=self.output_weights.copy(),
            output_bias=self.output_bias.copy(),
            config=self.config,
        )

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.config == other.config
            and np.array_equal(self.hidden_weights, other.hidden_weights)
            and np.array_equal(self.hidden_bias, other.hidden_bias)
            and np.array_equal(self.output_weights, other.output_weights)
            and np.array_equal(self.output_bias, other.output_bias)
        )


@dataclass(frozen=True)
class Gradients:
    """Loss gradients, shaped exactly like the network they came from."""

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    momentum: float = 0.0
    max_epochs: int = 500
    patience: int = 6
    shuffle_seed: int = 0

    def __post_init__(self):
        # learning_rate 0 is allowed as an explicit no-op (degenerate but useful
        # for exercising the stopping rule); negative rates are rejected.
        if self.learning_rate < 0:
            raise MlpError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.patience < 1:
            raise MlpError(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs < 1:
            raise MlpError(f"max_epochs must be >= 1, got {self.max_epochs}")


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch error curves and where early stopping landed."""

    train_mse: tuple[float, ...]
    validation_mse: tuple[float, ...]
    stop_epoch: int
    best_epoch: int
    best_validation_mse: float


def init(config: NetworkConfig, seed: int | None = None) -> Network:
    """Fresh network: weights uniform in +-1/sqrt(fan_in), biases zero."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    bound_h = 1.0 / math.sqrt(config.input_size)
    bound_o = 1.0 / math.sqrt(config.hidden_size)
    return Network(
        hidden_weights=rng.uniform(-bound_h, bound_h, (config.hidden_size, config.input_size)),
        hidden_bias=np.zeros(config.hidden_size),
        output_weights=rng.uniform(-bound_o, bound_o, (config.output_size, config.hidden_size)),
        output_bias=np.zeros(config.output_size),
        config=config,
    )


def forward(net: Network, inputs) -> np.ndarray:
    """One forward pass over a single 2N-vector of unit-scaled coordinates."""
    x = np.asarray(inputs, dtype=float)
    if x.shape != (net.config.input_size,):
        raise ArityError(f"input has shape {x.shape}, expected ({net.config.input_size},)")
    hidden = sigmoid(net.hidden_weights @ x + net.hidden_bias)
    return sigmoid(net.output_weights @ hidden + net.output_bias)


def forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Forward pass over rows of X, shape (records, 2N) -> (records, N)."""
    if X.ndim != 2 or X.shape[1] != net.config.input_size:
        raise ArityError(f"input batch has shape {X.shape}, expected (*, {net.config.input_size})")
    hidden = sigmoid(X @ net.hidden_weights.T + net.hidden_bias)
    return sigmoid(hidden @ net.output_weights.T + net.output_bias)


def gradients(net: Network, inputs, target) -> Gradients:
    """Exact gradients of 0.5 * sum_j (y_j - t_j)^2 for one record."""
    x = np.asarray(inputs, dtype=float)
    t = np.asarray(target, dtype=float)
    if x.shape != (net.config.input_size,):
        raise ArityError(f"input has shape {x.shape}, expected ({net.config.input_size},)")
    if t.shape != (net.config.output_size,):
        raise ArityError(f"target has shape {t.shape}, expected ({net.config.output_size},)")
    hidden = sigmoid(net.hidden_weights @ x + net.hidden_bias)
    out = sigmoid(net.output_weights @ hidden + net.output_bias)
    delta_out = (out - t) * out * (1.0 - out)
    delta_hidden = (net.output_weights.T @ delta_out) * hidden * (1.0 - hidden)
    return Gradients(
        hidden_weights=np.outer(delta_hidden, x),
        hidden_bias=delta_hidden,
        output_weights=np.outer(delta_out, hidden),
        output_bias=delta_out,
    )


def mse(net: Network, X: np.ndarray, Y: np.ndarray) -> float:
    """Mean squared error over all records and outputs."""
    diff = forward_batch(net, X) - Y
    return float(np.mean(diff * diff))


def train_arrays(net: Network, X_train, Y_train, X_val, Y_val, tc: TrainConfig = TrainConfig()):
    """Core training loop over prepared arrays; returns (best net, report).

    Each epoch shuffles the training records with the configured seed stream,
    applies one gradient step per record, then measures train and validation
    MSE.  Training stops once the validation error has not improved for
    ``patience`` consecutive epochs (or at ``max_epochs``) and the snapshot
    from the best epoch is returned.
    """
    if len(X_train) == 0:
        raise MlpError("training slice is empty")
    if len(X_val) == 0:
        raise MlpError("validation slice is empty")

    work = net.copy()
    W1, b1 = work.hidden_weights, work.hidden_bias
    W2, b2 = work.output_weights, work.output_bias
    use_momentum = tc.momentum != 0.0
    if use_momentum:
        vW1, vb1 = np.zeros_like(W1), np.zeros_like(b1)
        vW2, vb2 = np.zeros_like(W2), np.zeros_like(b2)

    rng = np.random.default_rng(tc.shuffle_seed)
    lr = tc.learning_rate
    train_curve: list[float] = []
    val_curve: list[float] = []
    best_epoch = 0
    best_val = math.inf
    best_net = work.copy()
    since_best = 0
    stop_epoch = tc.max_epochs

    for epoch in range(1, tc.max_epochs + 1):
        for i in rng.permutation(len(X_train)):
            x = X_train[i]
            t = Y_train[i]
            hidden = sigmoid(W1 @ x + b1)
            out = sigmoid(W2 @ hidden + b2)
            delta_out = (out - t) * out * (1.0 - out)
            delta_hidden = (W2.T @ delta_out) * hidden * (1.0 - hidden)
            if use_momentum:
                vW2 *= tc.momentum
                vW2 -= lr * np.outer(delta_out, hidden)
                vb2 *= tc.momentum
                vb2 -= lr * delta_out
                vW1 *= tc.momentum
                vW1 -= lr * np.outer(delta_hidden, x)
                vb1 *= tc.momentum
                vb1 -= lr * delta_hidden
                W2 += vW2
                b2 += vb2
                W1 += vW1
                b1 += vb1
            else:
                W2 -= lr * np.outer(delta_out, hidden)
                b2 -= lr * delta_out
                W1 -= lr * np.outer(delta_hidden, x)
                b1 -= lr * delta_hidden

        train_err = mse(work, X_train, Y_train)
        val_err = mse(work, X_val, Y_val)
        if not (math.isfinite(train_err) and math.isfinite(val_err)):
            raise TrainingDivergedError(
                f"loss went non-finite at epoch {epoch}; try a learning rate below {lr}"
            )
        train_curve.append(train_err)
        val_curve.append(val_err)

        if val_err < best_val:
            best_val = val_err
            best_epoch = epoch
            best_net = work.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= tc.patience:
                stop_epoch = epoch
                break
    else:
        stop_epoch = tc.max_epochs

    report = TrainReport(
        train_mse=tuple(train_curve),
        validation_mse=tuple(val_curve),
        stop_epoch=stop_epoch,
        best_epoch=best_epoch,
        best_validation_mse=best_val,
    )
    return best_net, report


def train_early_stop(net: Network, ds, assignment: SplitAssignment, tc: TrainConfig = TrainConfig()):
    """Train on a scaled, split dataset; returns (best net, report)."""
    if ds.meta.coordinate_scale != UNIT_SCALE:
        raise MlpError("training data must be scaled to the unit interval first (scale_coordinates)")
    if 2 * ds.n_objects != net.config.input_size:
        raise ArityError(
            f"dataset has {ds.n_objects} objects but the network expects {net.config.input_size} inputs"
        )
    X_train, Y_train = to_arrays(ds, assignment, "train")
    X_val, Y_val = to_arrays(ds, assignment, "validation")
    return train_arrays(net, X_train, Y_train, X_val, Y_val, tc)


def model_inputs(locations, meta: DatasetMeta) -> np.ndarray:
    """Map N locations in the meta's coordinate domain to a unit 2N-vector."""
    lo_x, lo_y, hi_x, hi_y = meta.coordinate_domain()
    x = np.empty(2 * len(locations))
    for v, loc in enumerate(locations):
        if not (lo_x <= loc.x <= hi_x and lo_y <= loc.y <= hi_y):
            raise MlpError(
                f"location ({loc.x}, {loc.y}) outside the declared domain ({lo_x}, {lo_y}, {hi_x}, {hi_y})"
            )
        x[2 * v] = loc.x
        x[2 * v + 1] = loc.y
    if meta.coordinate_scale != UNIT_SCALE:
        min_x, min_y, max_x, max_y = meta.area_bounds
        x[0::2] = (x[0::2] - min_x) / (max_x - min_x)
        x[1::2] = (x[1::2] - min_y) / (max_y - min_y)
    return x


def predict(net: Network, locations, meta: DatasetMeta) -> np.ndarray:
    """Hostility probabilities for one snapshot of N object locations.

    Locations are interpreted in the meta's coordinate domain and scaled to
    the unit interval before the forward pass.  Pure function.
    """
    if len(locations) != net.config.n_objects:
        raise ArityError(
            f"{len(locations)} locations given but the network serves {net.config.n_objects} objects"
        )
    return forward(net, model_inputs(locations, meta))


# ---------------------------------------------------------------------------
# Model file format (see docs/formats.md): a plain-text header, one config
# line, then each weight/bias block as repr()-formatted rows, so a save/load
# round trip reproduces every float bit-for-bit.
# ---------------------------------------------------------------------------

def save_model(net: Network, path):
    c = net.config
    lines = [
        MODEL_HEADER,
        f"config n_objects={c.n_objects} input_size={c.input_size} "
        f"hidden_size={c.hidden_size} output_size={c.output_size} seed={c.seed}",
    ]

    def block(name, arr):
        arr = np.atleast_2d(arr)
        lines.append(f"{name} {arr.shape[0]} {arr.shape[1]}")
        for row in arr:
            lines.append(" ".join(repr(float(v)) for v in row))

    block("hidden_weights", net.hidden_weights)
    block("hidden_bias", net.hidden_bias)
    block("output_weights", net.output_weights)
    block("output_bias", net.output_bias)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> Network:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise ModelFormatError(f"{path}: missing '{MODEL_HEADER}' header")
    tokens = lines[1].split() if len(lines) > 1 else []
    if len(tokens) != 6 or tokens[0] != "config":
        raise ModelFormatError(f"{path}: malformed config line")
    fields = {}
    for token in tokens[1:]:
        key, _, value = token.partition("=")
        try:
            fields[key] = int(value)
        except ValueError:
            raise ModelFormatError(f"{path}: bad config entry {token!r}") from None
    try:
        config = NetworkConfig(
            n_objects=fields["n_objects"],
            hidden_size=fields["hidden_size"],
            seed=fields["seed"],
        )
    except KeyError as exc:
        raise ModelFormatError(f"{path}: config missing {exc}") from None
    if fields.get("input_size") != config.input_size or fields.get("output_size") != config.output_size:
        raise ModelFormatError(f"{path}: config sizes do not match n_objects={config.n_objects}")

    cursor = 2
    blocks = {}
    for name in ("hidden_weights", "hidden_bias", "output_weights", "output_bias"):
        if cursor >= len(lines):
            raise ModelFormatError(f"{path}: missing block {name}")
        head = lines[cursor].split()
        if len(head) != 3 or head[0] != name:
            raise ModelFormatError(f"{path}: expected block header for {name}, got {lines[cursor]!r}")
        rows, cols = int(head[1]), int(head[2])
        cursor += 1
        data = np.empty((rows, cols))
        for r in range(rows):
            if cursor >= len(lines):
                raise ModelFormatError(f"{path}: block {name} truncated at row {r + 1}")
            values = lines[cursor].split()
            if len(values) != cols:
                raise ModelFormatError(f"{path}: block {name} row {r + 1} has {len(values)} values, expected {cols}")
            data[r] = [float(v) for v in values]
            cursor += 1
        blocks[name] = data
    return Network(
        hidden_weights=blocks["hidden_weights"],
        hidden_bias=blocks["hidden_bias"][0],
        output_weights=blocks["output_weights"],
        output_bias=blocks["output_bias"][0],
        config=config,
    )
