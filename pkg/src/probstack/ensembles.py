"""Meta-classifier wrappers over the constituent learners: soft voting,
one-vs-rest, and error-correcting output codes.

Every wrapper exposes predict(X) on integer class indices and is a
deterministic function of (X, y, cfg). Binary subproblems (OvR classes, ECOC
columns) are assembled in fixed index order, so any parallel training
schedule would give the same result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ValidationError, spawn_rng
from .learners import (
    LinearModel,
    TrainConfig,
    train_gaussian_nb,
    train_linear_svm,
    train_logreg,
    train_random_forest,
)

BASE_KINDS = ("logreg", "linear_svm")

META_KINDS = (
    "logreg",
    "linear_svm",
    "voting",
    "ovr_logreg",
    "ovr_linear_svm",
    "ecoc_logreg",
    "ecoc_linear_svm",
)


def _train_binary(base_kind: str, X, y01, cfg: TrainConfig) -> LinearModel:
    if base_kind == "logreg":
        return train_logreg(X, y01, 2, cfg)
    if base_kind == "linear_svm":
        model = train_linear_svm(X, y01, 2, cfg)
        assert isinstance(model, LinearModel)
        return model
    raise ValidationError(f"unknown base kind {base_kind!r} (allowed: {list(BASE_KINDS)})")


def _check_all_classes_present(y: np.ndarray, k: int) -> None:
    counts = np.bincount(y, minlength=k)
    missing = [c for c in range(k) if counts[c] == 0]
    if missing:
        raise ValidationError(f"classes {missing} have no training rows")


@dataclass(frozen=True)
class VotingModel:
    """Soft vote of LR, RF, NB, and SVM trained on the same data."""

    lr: object
    rf: object
    nb: object
    svm: object

    @property
    def constituents(self) -> tuple:
        return (self.lr, self.rf, self.nb, self.svm)

    def predict_proba(self, X) -> np.ndarray:
        total = None
        for model in self.constituents:
            p = model.predict_proba(X)
            total = p if total is None else total + p
        return total / len(self.constituents)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def train_voting(X, y, k: int, cfg: TrainConfig) -> VotingModel:
    """Train all four constituents on (X, y); prediction is the argmax of
    their mean predicted distribution."""
    return VotingModel(
        lr=train_logreg(X, y, k, cfg.reseeded("voting", "lr")),
        rf=train_random_forest(X, y, k, cfg.reseeded("voting", "rf")),
        nb=train_gaussian_nb(X, y, k, cfg.reseeded("voting", "nb")),
        svm=train_linear_svm(X, y, k, cfg.reseeded("voting", "svm")),
    )


@dataclass(frozen=True)
class OvRModel:
    """One binary model per class; prediction by highest positive score."""

    base_kind: str
    models: tuple[LinearModel, ...]

    def scores(self, X) -> np.ndarray:
        """Per-class positive-class probability, shape (n, k')."""
        return np.column_stack([m.positive_proba(X) for m in self.models])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.scores(X), axis=1)


def train_ovr(X, y, k: int, cfg: TrainConfig, base_kind: str = "logreg") -> OvRModel:
    """Class-vs-rest decomposition; every class must appear in y."""
    y = np.asarray(y, dtype=np.int64)
    _check_all_classes_present(y, k)
    models = tuple(
        _train_binary(base_kind, X, (y == c).astype(np.int64), cfg.reseeded("ovr", c))
        for c in range(k)
    )
    return OvRModel(base_kind, models)


def default_code_length(k: int) -> int:
    return math.ceil(1.5 * k)


def validate_code_matrix(code, k: int) -> np.ndarray:
    code = np.asarray(code)
    if code.ndim != 2 or code.shape[0] != k or code.shape[1] < 1:
        raise ValidationError(f"code matrix must be ({k}, L>=1), got {code.shape}")
    if not np.all(np.isin(code, (-1, 1))):
        raise ValidationError("code matrix entries must be -1 or +1")
    rows = {tuple(row) for row in code.tolist()}
    if len(rows) != k:
        raise ValidationError("code matrix rows must be pairwise distinct")
    constant = [l for l in range(code.shape[1]) if np.all(code[:, l] == code[0, l])]
    if constant:
        raise ValidationError(f"code matrix columns {constant} are constant")
    return code.astype(np.int8)


def generate_code_matrix(k: int, length: int, seed: int) -> np.ndarray:
    """Uniform random {-1,+1} matrix, resampled until rows are distinct and
    no column is constant. Requires length >= ceil(1.5 * k)."""
    if length < default_code_length(k):
        raise ValidationError(
            f"code length {length} below minimum {default_code_length(k)} for {k} classes"
        )
    rng = spawn_rng(seed, "ecoc-code")
    for _ in range(1000):
        code = (rng.integers(0, 2, size=(k, length)) * 2 - 1).astype(np.int8)
        try:
            return validate_code_matrix(code, k)
        except ValidationError:
            continue
    raise ValidationError(f"no valid {k} x {length} code matrix found in 1000 draws")


def identity_code(k: int) -> np.ndarray:
    """Code with column c positive exactly for class c (the OvR relabeling)."""
    return (2 * np.eye(k, dtype=np.int8) - 1).astype(np.int8)


@dataclass(frozen=True)
class ECOCModel:
    """L binary models defined by a (k', L) sign matrix; loss-based decoding."""

    base_kind: str
    code: np.ndarray
    models: tuple[LinearModel, ...]

    def margins(self, X) -> np.ndarray:
        return np.column_stack([m.binary_margin(X) for m in self.models])

    def predict(self, X) -> np.ndarray:
        return decode_ecoc(self, X)


def train_ecoc(
    X,
    y,
    k: int,
    cfg: TrainConfig,
    base_kind: str = "logreg",
    code=None,
    code_length: int | None = None,
) -> ECOCModel:
    """One binary model per code column, labels relabeled by the column's
    sign assignment.

    Without an explicit code, a random matrix of length ceil(1.5 * k') is
    generated from cfg.seed. Explicit matrices only need distinct rows and
    non-constant columns, which admits identity coding and single columns.
    """
    y = np.asarray(y, dtype=np.int64)
    _check_all_classes_present(y, k)
    if code is not None:
        if code_length is not None and code_length != np.asarray(code).shape[1]:
            raise ValidationError("code_length conflicts with the explicit code matrix")
        code = validate_code_matrix(code, k)
    else:
        code = generate_code_matrix(k, code_length or default_code_length(k), cfg.seed)
    models = tuple(
        _train_binary(base_kind, X, (code[y, l] == 1).astype(np.int64), cfg.reseeded("ecoc", l))
        for l in range(code.shape[1])
    )
    return ECOCModel(base_kind, code, models)


def decode_losses(code: np.ndarray, margins: np.ndarray) -> np.ndarray:
    """Per-row hinge decoding loss: loss[i, r] = sum_l max(0, 1 - code[r,l] * m[i,l])."""
    margins = np.asarray(margins, dtype=np.float64)
    if margins.ndim != 2 or margins.shape[1] != code.shape[1]:
        raise ValidationError(f"margins shape {margins.shape} does not match code length {code.shape[1]}")
    return np.maximum(0.0, 1.0 - code[None, :, :] * margins[:, None, :]).sum(axis=2)


def decode_ecoc(model: ECOCModel, X) -> np.ndarray:
    """Class whose codeword row minimizes the hinge loss; ties take the
    lowest index."""
    return np.argmin(decode_losses(model.code, model.margins(X)), axis=1)


def train_meta(kind: str, X, y, k: int, cfg: TrainConfig):
    """Train one meta-classifier of the named kind on fused features."""
    if kind == "logreg":
        return train_logreg(X, y, k, cfg)
    if kind == "linear_svm":
        return train_linear_svm(X, y, k, cfg)
    if kind == "voting":
        return train_voting(X, y, k, cfg)
    if kind.startswith("ovr_"):
        return train_ovr(X, y, k, cfg, base_kind=kind[len("ovr_"):])
    if kind.startswith("ecoc_"):
        return train_ecoc(X, y, k, cfg, base_kind=kind[len("ecoc_"):])
    raise ValidationError(f"unknown meta-classifier kind {kind!r} (allowed: {list(META_KINDS)})")
