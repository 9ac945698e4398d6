"""Two-layer graph convolutional classifier with hand-derived gradients.

``logits = A_hat @ relu(A_hat @ X @ W1) @ W2`` with ``A_hat`` the
self-loop-augmented, symmetrically normalized adjacency.  Training is
full-batch gradient descent on the mean cross-entropy of the training nodes.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InputError, NumericalError, ParameterError


@dataclass(frozen=True)
class GcnParams:
    W1: np.ndarray
    W2: np.ndarray

    @property
    def hidden(self):
        return self.W1.shape[1]

    @property
    def classes(self):
        return self.W2.shape[1]

    def copy(self):
        return GcnParams(self.W1.copy(), self.W2.copy())


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 250
    hidden: int = 16
    patience: int = 30
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ParameterError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.hidden < 1:
            raise ParameterError(f"hidden must be >= 1, got {self.hidden}")
        if self.patience < 1:
            raise ParameterError(f"patience must be >= 1, got {self.patience}")


@dataclass(frozen=True)
class LabelVector:
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    num_classes: int = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        masks = [np.asarray(m, dtype=bool) for m in (self.train_mask, self.val_mask, self.test_mask)]
        for m in masks:
            if m.shape != labels.shape:
                raise DimensionError(f"mask shape {m.shape} does not match labels {labels.shape}")
        if np.any(masks[0] & masks[1]) or np.any(masks[0] & masks[2]) or np.any(masks[1] & masks[2]):
            raise InputError("train/val/test masks overlap")
        C = self.num_classes
        if C is None:
            C = int(labels.max()) + 1 if labels.size else 0
        if labels.size and (labels.min() < 0 or labels.max() >= C):
            raise InputError(f"labels must lie in [0, {C})")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "train_mask", masks[0])
        object.__setattr__(self, "val_mask", masks[1])
        object.__setattr__(self, "test_mask", masks[2])
        object.__setattr__(self, "num_classes", C)

    def permuted(self, perm):
        perm = np.asarray(perm)
        return LabelVector(self.labels[perm], self.train_mask[perm], self.val_mask[perm],
                           self.test_mask[perm], self.num_classes)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    stopped_early: bool = False


def normalize_adjacency(A):
    """``D^-1/2 (A + I) D^-1/2`` with ``D`` the degrees of ``A + I``."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"adjacency must be square, got shape {A.shape}")
    At = A + np.eye(A.shape[0])
    s = 1.0 / np.sqrt(At.sum(axis=1))
    return s[:, None] * At * s[None, :]


def init_params(d, hidden, classes, rng):
    """Uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` per layer."""
    b1 = 1.0 / np.sqrt(d)
    b2 = 1.0 / np.sqrt(hidden)
    W1 = rng.uniform(-b1, b1, size=(d, hidden))
    W2 = rng.uniform(-b2, b2, size=(hidden, classes))
    return GcnParams(W1, W2)


def _check_shapes(params, A_hat, X):
    n, d = X.shape
    if A_hat.shape != (n, n):
        raise DimensionError(f"normalized adjacency has shape {A_hat.shape}, expected {(n, n)}")
    if params.W1.shape[0] != d:
        raise DimensionError(f"W1 has {params.W1.shape[0]} rows but features have {d} columns")
    if params.W2.shape[0] != params.W1.shape[1]:
        raise DimensionError("W1 and W2 hidden widths disagree")


def forward(params, A_hat, X):
    X = np.asarray(X, dtype=np.float64)
    A_hat = np.asarray(A_hat, dtype=np.float64)
    _check_shapes(params, A_hat, X)
    H = A_hat @ (X @ params.W1)
    return A_hat @ (np.maximum(H, 0.0) @ params.W2)


def _log_softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _labels_and_mask(labels, mask):
    if isinstance(labels, LabelVector):
        y = labels.labels
        if mask is None:
            mask = labels.train_mask
    else:
        y = np.asarray(labels, dtype=np.int64)
    if mask is None:
        raise InputError("a node mask is required")
    return y, np.asarray(mask, dtype=bool)


def loss_and_grads(params, A_hat, X, labels, mask=None, AX=None):
    """Mean cross-entropy over masked nodes and its exact gradients.

    ``AX`` may carry a precomputed ``A_hat @ X``.
    """
    y, mask = _labels_and_mask(labels, mask)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise InputError("training mask is empty")
    X = np.asarray(X, dtype=np.float64)
    A_hat = np.asarray(A_hat, dtype=np.float64)
    _check_shapes(params, A_hat, X)
    if AX is None:
        AX = A_hat @ X

    H = AX @ params.W1
    Z = np.maximum(H, 0.0)
    AZ = A_hat @ Z
    logits = AZ @ params.W2
    logp = _log_softmax(logits[idx])
    loss = -float(np.mean(logp[np.arange(idx.size), y[idx]]))

    dlogits = np.zeros_like(logits)
    probs = np.exp(logp)
    probs[np.arange(idx.size), y[idx]] -= 1.0
    dlogits[idx] = probs / idx.size
    dW2 = AZ.T @ dlogits
    dH = (A_hat.T @ (dlogits @ params.W2.T)) * (H > 0)
    dW1 = AX.T @ dH
    return loss, GcnParams(dW1, dW2)


def evaluate(params, A_hat, X, labels, mask=None):
    """Fraction of masked nodes whose arg-max logit equals the label.

    Ties go to the lowest class index.
    """
    y, mask = _labels_and_mask(labels, mask)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise InputError("evaluation mask is empty")
    pred = np.argmax(forward(params, A_hat, X)[idx], axis=1)
    return float(np.mean(pred == y[idx]))


def train(A_star, X, labels, cfg=None):
    """Full-batch gradient descent with early stopping on validation loss.

    Returns the parameters from the epoch with the lowest validation loss (or
    training loss when there is no validation node) and the per-epoch
    history.
    """
    cfg = cfg or TrainConfig()
    if not isinstance(labels, LabelVector):
        raise InputError("train() needs a LabelVector with masks")
    X = np.asarray(X, dtype=np.float64)
    A_hat = normalize_adjacency(A_star)
    AX = A_hat @ X
    rng = np.random.default_rng(cfg.seed)
    params = init_params(X.shape[1], cfg.hidden, labels.num_classes, rng)
    has_val = bool(labels.val_mask.any())

    hist = TrainHistory()
    best = params.copy()
    best_loss = np.inf
    since_best = 0
    for epoch in range(cfg.epochs):
        loss, grads = loss_and_grads(params, A_hat, X, labels, labels.train_mask, AX=AX)
        if not np.isfinite(loss):
            raise NumericalError("training loss is not finite", iteration=epoch)
        hist.train_loss.append(loss)
        hist.train_acc.append(evaluate(params, A_hat, X, labels, labels.train_mask))
        if has_val:
            val_loss, _ = loss_and_grads(params, A_hat, X, labels, labels.val_mask, AX=AX)
            hist.val_loss.append(val_loss)
            hist.val_acc.append(evaluate(params, A_hat, X, labels, labels.val_mask))
        else:
            val_loss = loss
        if val_loss < best_loss:
            best_loss = val_loss
            best = params.copy()
            hist.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
        hist.epochs_run = epoch + 1
        if since_best >= cfg.patience:
            hist.stopped_early = True
            break
        params = GcnParams(params.W1 - cfg.learning_rate * grads.W1,
                           params.W2 - cfg.learning_rate * grads.W2)
    return best, hist
