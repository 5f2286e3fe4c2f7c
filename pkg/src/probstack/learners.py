"""Constituent classifiers: logistic regression, Gaussian naive Bayes,
random forest, linear SVM.

All four are deterministic functions of (X, y, cfg): logistic regression is
convex with zero initialization, naive Bayes is closed-form, and the forest
and SVM draw every random decision from seeds derived from cfg.seed. Labels
are integer class indices in [0, k).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import ValidationError, spawn_seed
from .forest import ForestModel, train_random_forest  # noqa: F401  (re-export)

KIND_SOFTMAX_LR = "softmax_lr"
KIND_SVM_BINARY = "linear_svm_binary"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for all constituent learners."""

    seed: int = 0
    lr_step: float = 1.0
    lr_l2: float = 1e-4
    lr_max_iters: int = 1000
    lr_tol: float = 1e-6
    svm_c: float = 1.0
    svm_epochs: int = 50
    rf_trees: int = 100
    rf_max_features: str = "sqrt"
    rf_bootstrap: bool = True
    nb_var_smoothing: float = 1e-9

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        for name in ("lr_step", "svm_c", "nb_var_smoothing"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("lr_l2",):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative, got {getattr(self, name)}")
        for name in ("lr_max_iters", "lr_tol", "svm_epochs", "rf_trees"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.rf_max_features not in ("sqrt", "all"):
            raise ValidationError(f"rf_max_features must be 'sqrt' or 'all', got {self.rf_max_features!r}")

    def reseeded(self, *keys) -> "TrainConfig":
        """Copy with a child seed derived from (seed, *keys)."""
        return dataclasses.replace(self, seed=spawn_seed(self.seed, *keys))


def _check_training_data(X, y, k: int) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("training set is empty")
    if y.shape != (X.shape[0],):
        raise ValidationError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain non-finite values")
    if y.min() < 0 or y.max() >= k:
        raise ValidationError(f"labels outside [0, {k})")
    if np.unique(y).size < 2:
        raise ValidationError("training data contains a single class")
    return X, y


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(Z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # stable on both tails
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class LinearModel:
    """Linear classifier: softmax logistic regression or a binary SVM.

    For the SVM, ``platt`` holds the (slope, intercept) of the logistic fit
    mapping training margins to positive-class probability.
    """

    weights: np.ndarray  # (k', d)
    bias: np.ndarray  # (k',)
    kind: str
    platt: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in (KIND_SOFTMAX_LR, KIND_SVM_BINARY):
            raise ValidationError(f"unknown linear model kind {self.kind!r}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValidationError("model parameters must be finite")
        if self.kind == KIND_SVM_BINARY and self.weights.shape[0] != 1:
            raise ValidationError("binary SVM expects a single weight row")

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def _check_X(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValidationError(f"expected (n, {self.n_features}) features, got {X.shape}")
        return X

    def binary_margin(self, X) -> np.ndarray:
        """Real-valued decision value of the positive class (binary models)."""
        X = self._check_X(X)
        if self.kind == KIND_SVM_BINARY:
            return X @ self.weights[0] + self.bias[0]
        if self.weights.shape[0] != 2:
            raise ValidationError("binary_margin needs a 2-class model")
        return X @ (self.weights[1] - self.weights[0]) + (self.bias[1] - self.bias[0])

    def positive_proba(self, X) -> np.ndarray:
        """P(class 1) for binary models."""
        if self.kind == KIND_SVM_BINARY:
            a, c = self.platt
            return _sigmoid(a * self.binary_margin(X) + c)
        return self.predict_proba(X)[:, 1]

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_X(X)
        if self.kind == KIND_SOFTMAX_LR:
            return _softmax(X @ self.weights.T + self.bias)
        p1 = self.positive_proba(X)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        if self.kind == KIND_SVM_BINARY:
            # margin exactly 0 falls to class 0 (lowest-index tie rule)
            return (self.binary_margin(X) > 0).astype(np.int64)
        return np.argmax(self.predict_proba(X), axis=1)


def logreg_loss_grad(W, b, X, Y, l2: float):
    """L2-regularized mean cross-entropy and its gradient.

    Y is one-hot (n, k'); the bias is not regularized.
    """
    n = X.shape[0]
    Z = X @ W.T + b
    Zs = Z - Z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(Zs).sum(axis=1, keepdims=True))
    log_p = Zs - log_norm
    loss = -(Y * log_p).sum() / n + 0.5 * l2 * (W * W).sum()
    G = (np.exp(log_p) - Y) / n
    grad_W = G.T @ X + l2 * W
    grad_b = G.sum(axis=0)
    return loss, grad_W, grad_b


def train_logreg(X, y, k: int, cfg: TrainConfig) -> LinearModel:
    """Full-batch gradient descent on the softmax cross-entropy.

    Zero initialization (the objective is convex, so the optimum does not
    depend on it) and backtracking halving whenever a step would increase the
    loss, so the accepted-loss sequence is non-increasing.
    """
    X, y = _check_training_data(X, y, k)
    n = X.shape[0]
    W = np.zeros((k, X.shape[1]))
    b = np.zeros(k)
    Y = np.zeros((n, k))
    Y[np.arange(n), y] = 1.0

    step = cfg.lr_step
    loss, gW, gb = logreg_loss_grad(W, b, X, Y, cfg.lr_l2)
    for _ in range(cfg.lr_max_iters):
        if max(np.abs(gW).max(), np.abs(gb).max()) < cfg.lr_tol:
            break
        while True:
            W2 = W - step * gW
            b2 = b - step * gb
            loss2, gW2, gb2 = logreg_loss_grad(W2, b2, X, Y, cfg.lr_l2)
            if loss2 <= loss:
                break
            step *= 0.5
            if step < 1e-18:
                return LinearModel(W, b, KIND_SOFTMAX_LR)
        W, b, loss, gW, gb = W2, b2, loss2, gW2, gb2
        step = min(step * 2.0, cfg.lr_step)
    return LinearModel(W, b, KIND_SOFTMAX_LR)


@dataclass(frozen=True)
class GaussianNBModel:
    class_priors: np.ndarray  # (k',)
    means: np.ndarray  # (k', d)
    variances: np.ndarray  # (k', d), floored strictly above zero

    def __post_init__(self):
        if abs(float(self.class_priors.sum()) - 1.0) > 1e-9:
            raise ValidationError("class priors must sum to 1")
        if np.any(self.variances <= 0):
            raise ValidationError("variances must be strictly positive")

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def _log_joint(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValidationError(f"expected (n, {self.n_features}) features, got {X.shape}")
        k = self.means.shape[0]
        out = np.empty((X.shape[0], k))
        for c in range(k):
            var = self.variances[c]
            diff = X - self.means[c]
            out[:, c] = np.log(self.class_priors[c]) - 0.5 * np.sum(
                np.log(2.0 * np.pi * var) + diff * diff / var, axis=1
            )
        return out

    def predict_proba(self, X) -> np.ndarray:
        lj = self._log_joint(X)
        lj -= lj.max(axis=1, keepdims=True)
        p = np.exp(lj)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self._log_joint(X), axis=1)


def train_gaussian_nb(X, y, k: int, cfg: TrainConfig) -> GaussianNBModel:
    """Per-class feature means and variances with a shared variance floor."""
    X, y = _check_training_data(X, y, k)
    counts = np.bincount(y, minlength=k)
    if np.any(counts == 0):
        empty = [c for c in range(k) if counts[c] == 0]
        raise ValidationError(f"classes {empty} have no training rows")
    max_var = float(X.var(axis=0).max())
    # all-constant inputs would make the relative floor zero
    floor = cfg.nb_var_smoothing * max_var if max_var > 0 else cfg.nb_var_smoothing
    means = np.stack([X[y == c].mean(axis=0) for c in range(k)])
    variances = np.stack([np.maximum(X[y == c].var(axis=0), floor) for c in range(k)])
    priors = counts / counts.sum()
    return GaussianNBModel(priors, means, variances)


@njit(cache=True)
def _pegasos(X, y_signed, lam, epochs, seed):
    n, d = X.shape
    np.random.seed(seed)
    w = np.zeros(d)
    b = 0.0
    order = np.arange(n)
    t = 0
    for _ in range(epochs):
        for j in range(n - 1, 0, -1):
            r = np.random.randint(0, j + 1)
            tmp = order[j]
            order[j] = order[r]
            order[r] = tmp
        for jj in range(n):
            i = order[jj]
            t += 1
            eta = 1.0 / (lam * t)
            margin = y_signed[i] * ((X[i] @ w) + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += (eta * y_signed[i]) * X[i]
                b += eta * y_signed[i]
    return w, b


def fit_platt(margins, targets01):
    """Logistic fit p = sigmoid(a*m + c) of margins to binary targets.

    Uses smoothed targets so separable data keeps the optimum finite, and a
    damped Newton iteration; deterministic.
    """
    margins = np.asarray(margins, dtype=np.float64)
    z = np.asarray(targets01, dtype=np.float64)
    n_pos = float(z.sum())
    n_neg = float(z.size - z.sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("Platt fit needs both classes among the targets")
    t = np.where(z > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def objective(a, c):
        u = a * margins + c
        # -sum t*log(p) + (1-t)*log(1-p), stable
        return float(np.sum(np.logaddexp(0.0, -u) + (1.0 - t) * u))

    a, c = 0.0, float(np.log((n_pos + 1.0) / (n_neg + 1.0)))
    obj = objective(a, c)
    for _ in range(100):
        p = _sigmoid(a * margins + c)
        d1 = p - t
        g_a = float(np.sum(d1 * margins))
        g_c = float(np.sum(d1))
        if max(abs(g_a), abs(g_c)) < 1e-10:
            break
        d2 = p * (1.0 - p)
        h_aa = float(np.sum(d2 * margins * margins)) + 1e-12
        h_ac = float(np.sum(d2 * margins))
        h_cc = float(np.sum(d2)) + 1e-12
        det = h_aa * h_cc - h_ac * h_ac
        if det <= 0:
            break
        da = (h_cc * g_a - h_ac * g_c) / det
        dc = (h_aa * g_c - h_ac * g_a) / det
        scale = 1.0
        for _ in range(30):
            obj2 = objective(a - scale * da, c - scale * dc)
            if obj2 <= obj:
                break
            scale *= 0.5
        else:
            break
        a, c, obj = a - scale * da, c - scale * dc, obj2
    return float(a), float(c)


@dataclass(frozen=True)
class LinearSVMOvR:
    """One-vs-rest bundle of binary SVMs; prediction by highest margin."""

    models: tuple[LinearModel, ...]

    @property
    def n_features(self) -> int:
        return self.models[0].n_features

    def margins(self, X) -> np.ndarray:
        return np.column_stack([m.binary_margin(X) for m in self.models])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.margins(X), axis=1)

    def predict_proba(self, X) -> np.ndarray:
        p = np.column_stack([m.positive_proba(X) for m in self.models])
        return p / p.sum(axis=1, keepdims=True)


def _train_svm_binary(X, y01, cfg: TrainConfig, seed: int) -> LinearModel:
    n = X.shape[0]
    y_signed = np.where(y01 > 0, 1.0, -1.0)
    lam = 1.0 / (cfg.svm_c * n)
    w, b = _pegasos(X, y_signed, lam, cfg.svm_epochs, seed)
    model = LinearModel(w[None, :], np.array([b]), KIND_SVM_BINARY, platt=(0.0, 0.0))
    platt = fit_platt(model.binary_margin(X), y01)
    return LinearModel(w[None, :], np.array([b]), KIND_SVM_BINARY, platt=platt)


def train_linear_svm(X, y, k: int, cfg: TrainConfig):
    """Hinge loss + L2 by epoch-based Pegasos subgradient descent.

    The shuffle sequence is fixed by cfg.seed. Binary problems return a
    single LinearModel; k > 2 trains one binary SVM per class and predicts
    the highest margin.
    """
    X, y = _check_training_data(X, y, k)
    if k == 2:
        return _train_svm_binary(X, (y == 1).astype(np.int64), cfg, spawn_seed(cfg.seed, "svm", 0))
    present = np.bincount(y, minlength=k)
    if np.any(present == 0):
        raise ValidationError(f"classes {[c for c in range(k) if present[c] == 0]} have no training rows")
    models = tuple(
        _train_svm_binary(X, (y == c).astype(np.int64), cfg, spawn_seed(cfg.seed, "svm", c))
        for c in range(k)
    )
    return LinearSVMOvR(models)
