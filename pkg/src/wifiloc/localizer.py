"""MLP position regressor: forward pass, backprop, Adam, training loop.

The network maps a vector of per-AP signal strengths to an (x, y) position:
hidden layers of 256, 128 and 32 ReLU units and a 2-unit linear output
(positions are relative to the map origin and may be negative). Training
minimizes mean squared error with Adam on shuffled mini-batches, monitors a
held-out validation split, and stops early once the validation loss stops
improving, keeping the best-epoch parameters.

Features are standardized with the training split's mean/stddev; the
vectors are stored in the model so online inference is self-contained.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FingerprintDataset, WifiScan, parse_ap_id
from .dataset_io import DEFAULT_FILL_DBM, impute

HIDDEN_DIMS = (256, 128, 32)
OUTPUT_DIM = 2


class NumericError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass
class MlpModel:
    """Feed-forward network parameters plus the input binding.

    weights[k] has shape (layer_dims[k], layer_dims[k+1]); activations has
    one tag per layer, "relu" or "linear". ap_columns binds feature slots
    to APs; feat_mean/feat_std standardize raw dBm features.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...]
    ap_columns: tuple[str, ...] = ()
    feat_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    feat_std: np.ndarray = field(default_factory=lambda: np.ones(0))

    def __post_init__(self) -> None:
        dims = self.layer_dims
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("parameter count does not match layer_dims")
        if len(self.activations) != len(dims) - 1:
            raise ValueError("need one activation tag per layer")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[k], dims[k + 1]):
                raise ValueError(f"weight {k} shape {w.shape} != {(dims[k], dims[k + 1])}")
            if b.shape != (dims[k + 1],):
                raise ValueError(f"bias {k} shape {b.shape} != {(dims[k + 1],)}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {k} has non-finite parameters")
        for a in self.activations:
            if a not in ("relu", "linear"):
                raise ValueError(f"unknown activation {a!r}")
        if self.ap_columns and len(self.ap_columns) != dims[0]:
            raise ValueError("ap_columns length must equal the input dimension")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the network description."""

    epochs_max: int = 100
    batch_size: int = 32
    patience: int = 5
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    val_fraction: float = 0.2
    rng_seed: int = 0
    loss: str = "mse"

    def __post_init__(self) -> None:
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.patience < 1 or self.batch_size < 1 or self.epochs_max < 1:
            raise ValueError("patience, batch_size and epochs_max must be >= 1")
        if self.loss != "mse":
            raise ValueError("only mse loss is supported")


@dataclass(frozen=True)
class TrainingReport:
    """Per-epoch loss curves plus where early stopping landed."""

    train_losses: tuple[float, ...]
    val_losses: tuple[float, ...]
    best_epoch: int
    epochs_run: int


def init(
    input_dim: int,
    seed: int,
    hidden_dims: tuple[int, ...] = HIDDEN_DIMS,
    ap_columns: tuple[str, ...] = (),
) -> MlpModel:
    """He-initialized network: N(0, 2/fan_in) for ReLU layers, N(0, 1/fan_in)
    for the linear output, zero biases. Deterministic per seed."""
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    dims = (input_dim, *hidden_dims, OUTPUT_DIM)
    activations = tuple(["relu"] * len(hidden_dims) + ["linear"])
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for k in range(len(dims) - 1):
        fan_in = dims[k]
        variance = 2.0 / fan_in if activations[k] == "relu" else 1.0 / fan_in
        weights.append(rng.normal(0.0, math.sqrt(variance), size=(dims[k], dims[k + 1])))
        biases.append(np.zeros(dims[k + 1]))
    return MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        activations=activations,
        ap_columns=tuple(ap_columns),
    )


def _forward_layers(m: MlpModel, features: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """All pre-activations and activations, for backprop."""
    pre: list[np.ndarray] = []
    act: list[np.ndarray] = [features]
    for w, b, tag in zip(m.weights, m.biases, m.activations):
        z = act[-1] @ w + b
        pre.append(z)
        act.append(np.maximum(z, 0.0) if tag == "relu" else z)
    return pre, act


def forward(m: MlpModel, features: np.ndarray) -> np.ndarray:
    """Network output for a (rows x input_dim) feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != m.input_dim:
        raise ValueError(
            f"feature dimension mismatch: got {features.shape}, expected (*, {m.input_dim})"
        )
    if not np.isfinite(features).all():
        raise ValueError("features must be finite")
    _, act = _forward_layers(m, features)
    return act[-1]


def loss_and_grads(
    m: MlpModel, features: np.ndarray, targets: np.ndarray
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean squared error over every output element, with backprop grads.

    Returns (loss, [(dW, db) per layer]).
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if features.shape[0] == 0:
        raise ValueError("empty batch")
    if features.shape[0] != targets.shape[0]:
        raise ValueError("features and targets row counts differ")

    pre, act = _forward_layers(m, features)
    diff = act[-1] - targets
    loss = float(np.mean(diff * diff))

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(m.weights)  # type: ignore[list-item]
    delta = 2.0 * diff / diff.size
    for k in range(len(m.weights) - 1, -1, -1):
        if m.activations[k] == "relu":
            delta = delta * (pre[k] > 0)
        grads[k] = (act[k].T @ delta, delta.sum(axis=0))
        if k > 0:
            delta = delta @ m.weights[k].T
    return loss, grads


class _Adam:
    """Standard Adam with bias correction over a flat parameter list."""

    def __init__(self, m: MlpModel, cfg: TrainConfig):
        self.cfg = cfg
        self.step = 0
        self.m_w = [np.zeros_like(w) for w in m.weights]
        self.v_w = [np.zeros_like(w) for w in m.weights]
        self.m_b = [np.zeros_like(b) for b in m.biases]
        self.v_b = [np.zeros_like(b) for b in m.biases]

    def update(self, model: MlpModel, grads: list[tuple[np.ndarray, np.ndarray]]) -> None:
        cfg = self.cfg
        self.step += 1
        c1 = 1.0 - cfg.adam_beta1 ** self.step
        c2 = 1.0 - cfg.adam_beta2 ** self.step
        for k, (dw, db) in enumerate(grads):
            self.m_w[k] = cfg.adam_beta1 * self.m_w[k] + (1 - cfg.adam_beta1) * dw
            self.v_w[k] = cfg.adam_beta2 * self.v_w[k] + (1 - cfg.adam_beta2) * dw * dw
            self.m_b[k] = cfg.adam_beta1 * self.m_b[k] + (1 - cfg.adam_beta1) * db
            self.v_b[k] = cfg.adam_beta2 * self.v_b[k] + (1 - cfg.adam_beta2) * db * db
            model.weights[k] -= cfg.learning_rate * (self.m_w[k] / c1) / (
                np.sqrt(self.v_w[k] / c2) + cfg.adam_eps
            )
            model.biases[k] -= cfg.learning_rate * (self.m_b[k] / c1) / (
                np.sqrt(self.v_b[k] / c2) + cfg.adam_eps
            )


def train(ds: FingerprintDataset, cfg: TrainConfig) -> tuple[MlpModel, TrainingReport]:
    """Train the regressor on a fingerprint dataset.

    Pipeline: impute missing RSSI with the standard fill, shuffle (seeded),
    split off a validation fraction, standardize features with train-split
    statistics, then run Adam mini-batch epochs with early stopping on the
    validation loss (an improvement must beat the best loss by at least
    1e-6). The returned model carries the best-validation-epoch parameters.
    """
    if len(ds.rows) < 10:
        raise ValueError("need at least 10 rows to train")
    features, targets = impute(ds)

    rng = np.random.default_rng(cfg.rng_seed)
    order = rng.permutation(len(ds.rows))
    n_val = max(1, int(round(len(order) * cfg.val_fraction)))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if len(train_idx) < cfg.batch_size:
        raise ValueError("insufficient data: training split smaller than batch_size")

    x_train, y_train = features[train_idx], targets[train_idx]
    x_val, y_val = features[val_idx], targets[val_idx]

    feat_mean = x_train.mean(axis=0)
    feat_std = x_train.std(axis=0)
    feat_std[feat_std == 0.0] = 1.0
    x_train = (x_train - feat_mean) / feat_std
    x_val = (x_val - feat_mean) / feat_std

    model = init(features.shape[1], seed=cfg.rng_seed, ap_columns=ds.ap_columns)
    model.feat_mean = feat_mean
    model.feat_std = feat_std
    # Warm-start the output bias at the mean target so the early epochs fit
    # spatial structure instead of the position offset.
    model.biases[-1][:] = y_train.mean(axis=0)
    optimizer = _Adam(model, cfg)

    def mse(x: np.ndarray, y: np.ndarray) -> float:
        diff = forward(model, x) - y
        return float(np.mean(diff * diff))

    train_losses: list[float] = []
    val_losses: list[float] = []
    best_val = math.inf
    best_epoch = -1
    best_params: tuple[list[np.ndarray], list[np.ndarray]] | None = None
    epochs_since_best = 0

    for epoch in range(cfg.epochs_max):
        batch_order = rng.permutation(len(train_idx))
        for start in range(0, len(batch_order), cfg.batch_size):
            batch = batch_order[start : start + cfg.batch_size]
            loss, grads = loss_and_grads(model, x_train[batch], y_train[batch])
            if not math.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            optimizer.update(model, grads)

        train_losses.append(mse(x_train, y_train))
        val_losses.append(mse(x_val, y_val))
        if not math.isfinite(val_losses[-1]):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")

        if val_losses[-1] <= best_val - 1e-6:
            best_val = val_losses[-1]
            best_epoch = epoch
            best_params = (copy.deepcopy(model.weights), copy.deepcopy(model.biases))
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.patience:
                break

    if best_params is not None:
        model.weights, model.biases = best_params
    report = TrainingReport(
        train_losses=tuple(train_losses),
        val_losses=tuple(val_losses),
        best_epoch=best_epoch if best_epoch >= 0 else 0,
        epochs_run=len(train_losses),
    )
    return model, report


def _standardize(m: MlpModel, features: np.ndarray) -> np.ndarray:
    if m.feat_mean.size != m.input_dim:
        return features
    return (features - m.feat_mean) / m.feat_std


def features_from_scan(m: MlpModel, scan: WifiScan) -> np.ndarray:
    """Raw feature vector for one scan, in the model's AP column order.

    Model APs missing from the scan read as the standard fill; APs the
    model does not know are ignored.
    """
    feat = np.full(m.input_dim, DEFAULT_FILL_DBM, dtype=np.float64)
    for k, ap in enumerate(m.ap_columns):
        if ap in scan.readings:
            feat[k] = scan.readings[ap]
    return feat


def predict(m: MlpModel, scan: WifiScan) -> tuple[float, float]:
    """Estimate the (x, y) position for one live scan."""
    feat = _standardize(m, features_from_scan(m, scan)[None, :])
    out = forward(m, feat)
    return float(out[0, 0]), float(out[0, 1])


def predict_dataset(m: MlpModel, ds: FingerprintDataset) -> np.ndarray:
    """Predictions (rows x 2) for every dataset row.

    The dataset's columns are remapped onto the model's AP order; columns
    the model does not know are dropped and model APs absent from the
    dataset read as the standard fill.
    """
    if len(ds.rows) == 0:
        raise ValueError("empty dataset")
    features = np.full((len(ds.rows), m.input_dim), DEFAULT_FILL_DBM, dtype=np.float64)
    ds_index = {ap: i for i, ap in enumerate(ds.ap_columns)}
    for k, ap in enumerate(m.ap_columns):
        src = ds_index.get(ap)
        if src is None:
            continue
        for r, row in enumerate(ds.rows):
            v = row.rssi[src]
            if v is not None:
                features[r, k] = v
    return forward(m, _standardize(m, features))


def model_save(m: MlpModel, sink: str | Path) -> None:
    """Persist the model as a JSON document (full float precision)."""
    doc = {
        "layer_dims": list(m.layer_dims),
        "activations": list(m.activations),
        "weights": [w.tolist() for w in m.weights],
        "biases": [b.tolist() for b in m.biases],
        "ap_columns": list(m.ap_columns),
        "feat_mean": m.feat_mean.tolist(),
        "feat_std": m.feat_std.tolist(),
    }
    Path(sink).write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )


def model_load(source: str | Path) -> MlpModel:
    """Load a model saved by model_save; validates shape consistency."""
    try:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid model file: {exc}") from None
    required = {"layer_dims", "activations", "weights", "biases", "ap_columns", "feat_mean", "feat_std"}
    if not isinstance(doc, dict) or not required.issubset(doc):
        raise ValueError("invalid model file: missing fields")
    try:
        model = MlpModel(
            layer_dims=tuple(int(d) for d in doc["layer_dims"]),
            weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            activations=tuple(doc["activations"]),
            ap_columns=tuple(parse_ap_id(ap) for ap in doc["ap_columns"]),
            feat_mean=np.asarray(doc["feat_mean"], dtype=np.float64),
            feat_std=np.asarray(doc["feat_std"], dtype=np.float64),
        )
    except ValueError as exc:
        raise ValueError(f"invalid model file: {exc}") from None
    # Empty standardization vectors mean "not standardized" (untrained model).
    if model.feat_mean.size or model.feat_std.size:
        if model.feat_mean.shape != (model.input_dim,) or model.feat_std.shape != (model.input_dim,):
            raise ValueError("invalid model file: standardization vectors do not match input size")
    return model
