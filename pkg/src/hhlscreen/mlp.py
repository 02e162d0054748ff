"""Binary MLP classifier trained with momentum SGD and an adaptive learning rate.

Architecture is fixed: five ReLU hidden layers (512, then four of 256) into a
single logistic output.  Inputs pass through a signed log1p compression (the
catalog mixes order-one statistics with condition numbers spanning three
decades) and are then z-scored with statistics fit on the training set; both
steps live on the model, so callers always pass raw feature vectors.
Training follows validation loss: fifteen consecutive epochs without
meaningful improvement divide the learning rate by five, and the run stops
once the rate decays below 1e-6 (or at the epoch cap).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

HIDDEN_DIMS = (512, 256, 256, 256, 256)
SCHEMA_VERSION = 1
_LOGIT_CLAMP = 30.0
_STD_FLOOR = 1e-12


@dataclass
class TrainConfig:
    lr0: float = 0.01
    momentum: float = 0.9
    patience: int = 15
    lr_decay_divisor: float = 5.0
    max_epochs: int = 500
    batch_size: int = 64
    # small enough that slow-but-real validation progress keeps the schedule
    # alive; 1e-4 was found to cut training off before near-tied feature
    # variants separate
    early_stop_tolerance: float = 1e-5
    min_lr: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    threshold: float = 0.5
    train_meta: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


def init_model(input_dim: int, seed: int = 0) -> MlpModel:
    """Variance-scaled uniform initialization, deterministic per seed."""
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    rng = np.random.default_rng(seed)
    dims = [input_dim, *HIDDEN_DIMS, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases,
                    scaler_mean=np.zeros(input_dim), scaler_std=np.ones(input_dim))


def _compress(x: np.ndarray) -> np.ndarray:
    """Signed log1p: tames features spanning decades (condition numbers, norms)."""
    return np.sign(x) * np.log1p(np.abs(x))


def _standardize(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return (_compress(x) - model.scaler_mean) / model.scaler_std


def _forward_pass(model: MlpModel, x_std: np.ndarray):
    """Returns (logits, activations per layer) on standardized input."""
    acts = [x_std]
    h = x_std
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if i < last:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            z = np.clip(z, -_LOGIT_CLAMP, _LOGIT_CLAMP)
            return z[:, 0], acts
    raise AssertionError("unreachable")


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Confidence scores in (0, 1); accepts one raw feature vector or a batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.input_dim:
        raise ValueError(f"expected {model.input_dim} features, got {x.shape[1]}")
    logits, _ = _forward_pass(model, _standardize(model, x))
    scores = 1.0 / (1.0 + np.exp(-logits))
    return scores[0] if single else scores


def bce_loss(scores: np.ndarray, labels: np.ndarray) -> float:
    eps = 1e-12
    s = np.clip(scores, eps, 1.0 - eps)
    return float(-np.mean(labels * np.log(s) + (1 - labels) * np.log(1 - s)))


def _gradients(model: MlpModel, x_std: np.ndarray, y: np.ndarray):
    """Analytic batch-mean gradients of the cross-entropy for every layer."""
    logits, acts = _forward_pass(model, x_std)
    scores = 1.0 / (1.0 + np.exp(-logits))
    delta = ((scores - y) / len(y))[:, None]
    grads_w, grads_b = [], []
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w.append(acts[i].T @ delta)
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0.0)
    grads_w.reverse()
    grads_b.reverse()
    return grads_w, grads_b, scores


def train(model: MlpModel, train_xy, val_xy, cfg: TrainConfig) -> MlpModel:
    """Momentum SGD on binary cross-entropy with the adaptive LR schedule.

    Mutates and returns the model; the scaler is fit on the training features
    only.  Raises on exploding (non-finite) loss.
    """
    x_train, y_train = np.asarray(train_xy[0], float), np.asarray(train_xy[1], float)
    x_val, y_val = np.asarray(val_xy[0], float), np.asarray(val_xy[1], float)
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("training and validation sets must be non-empty")
    if len(np.unique(y_train)) < 2:
        raise ValueError("training set must contain both classes")

    compressed = _compress(x_train)
    model.scaler_mean = compressed.mean(axis=0)
    model.scaler_std = np.maximum(compressed.std(axis=0), _STD_FLOOR)
    xs = _standardize(model, x_train)
    vs = _standardize(model, x_val)

    rng = np.random.default_rng(cfg.seed)
    velocity_w = [np.zeros_like(w) for w in model.weights]
    velocity_b = [np.zeros_like(b) for b in model.biases]
    lr = cfg.lr0
    best_val = math.inf
    stagnant = 0
    history = []
    n = len(xs)
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            grads_w, grads_b, scores = _gradients(model, xs[idx], y_train[idx])
            if not np.all(np.isfinite(scores)):
                raise FloatingPointError(
                    f"non-finite scores at epoch {epoch} (lr={lr}); training aborted")
            for i in range(len(model.weights)):
                velocity_w[i] = cfg.momentum * velocity_w[i] - lr * grads_w[i]
                velocity_b[i] = cfg.momentum * velocity_b[i] - lr * grads_b[i]
                model.weights[i] += velocity_w[i]
                model.biases[i] += velocity_b[i]
        val_logits, _ = _forward_pass(model, vs)
        val_scores = 1.0 / (1.0 + np.exp(-val_logits))
        val_loss = bce_loss(val_scores, y_val)
        if not math.isfinite(val_loss):
            raise FloatingPointError(f"non-finite validation loss at epoch {epoch}")
        history.append({"epoch": epoch, "val_loss": val_loss, "lr": lr})
        if val_loss < best_val - cfg.early_stop_tolerance:
            best_val = val_loss
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= cfg.patience:
                lr /= cfg.lr_decay_divisor
                stagnant = 0
                if lr < cfg.min_lr:
                    break
    model.train_meta = {
        "preprocess": "signed_log1p_then_zscore",
        "epochs_run": len(history),
        "final_lr": lr,
        "best_val_loss": best_val if math.isfinite(best_val) else None,
        "history": history,
        "config": {
            "lr0": cfg.lr0, "momentum": cfg.momentum, "patience": cfg.patience,
            "lr_decay_divisor": cfg.lr_decay_divisor, "max_epochs": cfg.max_epochs,
            "batch_size": cfg.batch_size,
            "early_stop_tolerance": cfg.early_stop_tolerance,
            "min_lr": cfg.min_lr, "seed": cfg.seed,
        },
    }
    return model


def balanced_accuracy_at(scores: np.ndarray, labels: np.ndarray, threshold: float) -> float:
    preds = scores > threshold
    pos = labels == 1
    neg = ~pos
    recall = preds[pos].mean() if pos.any() else 0.0
    specificity = (~preds[neg]).mean() if neg.any() else 0.0
    return float((recall + specificity) / 2.0)


def best_balanced_threshold(scores: np.ndarray, labels: np.ndarray) -> float:
    """Balanced-accuracy-maximizing threshold over score midpoints.

    Candidates are the midpoints of consecutive sorted unique scores (plus
    the 0.5 default); ties break toward the smallest candidate.
    """
    scores = np.atleast_1d(np.asarray(scores, dtype=float))
    labels = np.asarray(labels, dtype=int)
    uniq = np.unique(scores)
    candidates = sorted(set((uniq[:-1] + uniq[1:]) / 2.0) | {0.5})
    return float(max(candidates,
                     key=lambda t: (balanced_accuracy_at(scores, labels, t), -t)))


def tune_threshold(model: MlpModel, val_xy) -> float:
    """Tune and store the model's decision threshold on validation scores."""
    x_val, y_val = np.asarray(val_xy[0], float), np.asarray(val_xy[1], int)
    if len(np.unique(y_val)) < 2:
        raise ValueError("threshold tuning needs both classes in validation")
    model.threshold = best_balanced_threshold(forward(model, x_val), y_val)
    return model.threshold


def predict(model: MlpModel, x: np.ndarray) -> np.ndarray | int:
    """Hard labels: score strictly above the stored threshold means well suited."""
    scores = forward(model, x)
    if np.isscalar(scores) or scores.ndim == 0:
        return int(scores > model.threshold)
    return (scores > model.threshold).astype(int)


def save_model(model: MlpModel, path):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "input_dim": model.input_dim,
        "layer_dims": model.layer_dims,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "scaler_mean": model.scaler_mean.tolist(),
        "scaler_std": model.scaler_std.tolist(),
        "threshold": model.threshold,
        "train_meta": model.train_meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> MlpModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {version!r}")
    model = MlpModel(
        weights=[np.array(w, dtype=float) for w in payload["weights"]],
        biases=[np.array(b, dtype=float) for b in payload["biases"]],
        scaler_mean=np.array(payload["scaler_mean"], dtype=float),
        scaler_std=np.array(payload["scaler_std"], dtype=float),
        threshold=float(payload["threshold"]),
        train_meta=payload.get("train_meta", {}),
    )
    if model.layer_dims != payload["layer_dims"]:
        raise ValueError("model file layer_dims do not match stored tensors")
    return model
