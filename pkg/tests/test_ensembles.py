from __future__ import annotations

import numpy as np
import pytest

from probstack.core import ValidationError
from probstack.ensembles import (
    META_KINDS,
    ECOCModel,
    OvRModel,
    VotingModel,
    decode_ecoc,
    decode_losses,
    default_code_length,
    generate_code_matrix,
    identity_code,
    train_ecoc,
    train_meta,
    train_ovr,
    train_voting,
    validate_code_matrix,
)
from probstack.learners import TrainConfig, train_logreg

from conftest import gaussian_blobs, noisy_labels

CFG = TrainConfig(seed=7)


class FixedProba:
    """Stands in for a trained constituent: always predicts the same row."""

    def __init__(self, row):
        self.row = np.asarray(row, dtype=np.float64)

    def predict_proba(self, X):
        return np.tile(self.row, (len(X), 1))


# ---------------------------------------------------------------- voting


def test_voting_is_plain_mean():
    strong = FixedProba([0.9, 0.1])
    weak = FixedProba([0.4, 0.6])
    model = VotingModel(lr=strong, rf=strong, nb=strong, svm=weak)
    got = model.predict_proba(np.zeros((3, 2)))
    np.testing.assert_allclose(got, np.tile([0.775, 0.225], (3, 1)))
    assert list(model.predict(np.zeros((3, 2)))) == [0, 0, 0]


def test_voting_mean_is_order_free():
    rows = [[0.2, 0.8], [0.5, 0.5], [0.9, 0.1], [0.3, 0.7]]
    stubs = [FixedProba(r) for r in rows]
    a = VotingModel(*stubs).predict_proba(np.zeros((1, 1)))
    b = VotingModel(*stubs[::-1]).predict_proba(np.zeros((1, 1)))
    np.testing.assert_allclose(a, b)
    np.testing.assert_allclose(a[0], np.mean(rows, axis=0))


def test_voting_on_separated_blobs(rng):
    X, y = gaussian_blobs(rng, 3, 20, d=3, sep=6.0)
    model = train_voting(X, y, 3, CFG)
    assert len(model.constituents) == 4
    assert np.mean(model.predict(X) == y) >= 0.95
    probs = model.predict_proba(X)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(probs >= 0)


def test_voting_deterministic(rng):
    X, y = gaussian_blobs(rng, 2, 15)
    a = train_voting(X, y, 2, CFG)
    b = train_voting(X, y, 2, CFG)
    np.testing.assert_array_equal(a.lr.weights, b.lr.weights)
    assert a.rf.tree_seeds == b.rf.tree_seeds
    np.testing.assert_array_equal(a.svm.weights, b.svm.weights)


# ---------------------------------------------------------------- one-vs-rest


def test_ovr_binary_scores_mirror(rng):
    X, y = noisy_labels(rng, 2, 40)
    model = train_ovr(X, y, 2, CFG)
    scores = model.scores(X)
    assert scores.shape == (40, 2)
    # column c is P(class c) from the c-vs-rest model; the two relabelings
    # are complements, so the trained models disagree only through their
    # own calibrations. Predictions must match the score argmax.
    np.testing.assert_array_equal(model.predict(X), np.argmax(scores, axis=1))


def test_ovr_three_class_blobs(rng):
    X, y = gaussian_blobs(rng, 3, 20, d=3, sep=6.0)
    model = train_ovr(X, y, 3, CFG)
    assert len(model.models) == 3
    assert np.mean(model.predict(X) == y) >= 0.95


def test_ovr_svm_base(rng):
    X, y = gaussian_blobs(rng, 3, 20, d=3, sep=6.0)
    model = train_ovr(X, y, 3, CFG, base_kind="linear_svm")
    assert model.base_kind == "linear_svm"
    assert np.mean(model.predict(X) == y) >= 0.95


def test_ovr_missing_class_rejected():
    X = np.eye(4)
    with pytest.raises(ValidationError, match=r"classes \[2\] have no training rows"):
        train_ovr(X, np.array([0, 1, 0, 1]), 3, CFG)


# ---------------------------------------------------------------- code matrices


def test_identity_code_values():
    code = identity_code(3)
    np.testing.assert_array_equal(code, [[1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
    validate_code_matrix(code, 3)


def test_default_code_length():
    assert default_code_length(2) == 3
    assert default_code_length(3) == 5
    assert default_code_length(6) == 9


def test_validate_code_matrix_rules():
    ok = np.array([[1, 1, -1], [1, -1, 1], [-1, 1, 1]])
    validate_code_matrix(ok, 3)
    with pytest.raises(ValidationError, match="-1 or \\+1"):
        validate_code_matrix(np.array([[1, 0], [0, 1]]), 2)
    with pytest.raises(ValidationError, match="distinct"):
        validate_code_matrix(np.array([[1, -1], [1, -1]]), 2)
    with pytest.raises(ValidationError, match="constant"):
        validate_code_matrix(np.array([[1, 1], [1, -1]]), 2)
    with pytest.raises(ValidationError, match="code matrix must be"):
        validate_code_matrix(np.array([[1, -1], [-1, 1]]), 3)


def test_generate_code_matrix_contract():
    code = generate_code_matrix(4, 6, seed=3)
    assert code.shape == (4, 6)
    validate_code_matrix(code, 4)
    np.testing.assert_array_equal(code, generate_code_matrix(4, 6, seed=3))
    assert not np.array_equal(code, generate_code_matrix(4, 6, seed=4))
    with pytest.raises(ValidationError, match="below minimum"):
        generate_code_matrix(4, 5, seed=3)


# ---------------------------------------------------------------- ECOC


def brute_force_decode(code, margins):
    k, L = code.shape
    out = []
    for m in margins:
        losses = []
        for r in range(k):
            losses.append(sum(max(0.0, 1.0 - code[r, l] * m[l]) for l in range(L)))
        best = min(range(k), key=lambda r: (losses[r], r))
        out.append(best)
    return np.array(out)


def test_decode_matches_brute_force(rng):
    code = generate_code_matrix(3, 5, seed=1)
    margins = rng.uniform(-3, 3, size=(50, 5))
    losses = decode_losses(code, margins)
    for i in range(50):
        for r in range(3):
            want = sum(max(0.0, 1.0 - code[r, l] * margins[i, l]) for l in range(5))
            assert losses[i, r] == pytest.approx(want, abs=1e-12)
    np.testing.assert_array_equal(np.argmin(losses, axis=1), brute_force_decode(code, margins))


def test_decode_ties_take_lowest_index():
    code = np.array([[1, -1], [-1, 1]], dtype=np.int8)
    # zero margins give every row the same loss
    losses = decode_losses(code, np.zeros((4, 2)))
    np.testing.assert_array_equal(np.argmin(losses, axis=1), [0, 0, 0, 0])


def test_saturated_margins_give_hamming_decoding(rng):
    code = generate_code_matrix(4, 6, seed=2)
    # margins exactly +-1: agreement costs 0, disagreement costs 2
    signs = rng.choice([-1.0, 1.0], size=(30, 6))
    losses = decode_losses(code, signs)
    hamming = (signs[:, None, :] != code[None, :, :]).sum(axis=2)
    np.testing.assert_allclose(losses, 2.0 * hamming)


def test_decode_shape_mismatch_rejected():
    code = identity_code(3)
    with pytest.raises(ValidationError, match="does not match code length"):
        decode_losses(code, np.zeros((5, 4)))


def test_ecoc_on_blobs(rng):
    X, y = gaussian_blobs(rng, 3, 20, d=3, sep=6.0)
    model = train_ecoc(X, y, 3, CFG)
    assert model.code.shape == (3, 5)
    assert np.mean(model.predict(X) == y) >= 0.95


def test_ecoc_explicit_code_roundtrip(rng):
    X, y = gaussian_blobs(rng, 3, 15, d=3)
    code = generate_code_matrix(3, 5, seed=9)
    model = train_ecoc(X, y, 3, CFG, code=code)
    np.testing.assert_array_equal(model.code, code)
    with pytest.raises(ValidationError, match="conflicts with the explicit code"):
        train_ecoc(X, y, 3, CFG, code=code, code_length=7)


def test_ecoc_identity_code_matches_ovr(rng):
    # with identity coding each column solves the same one-vs-rest
    # subproblem, and the hinge decoding loss is a strictly decreasing
    # transform of each margin, so the argmin must agree with the
    # score argmax whenever the base models are shared
    for trial in range(10):
        X, y = noisy_labels(rng, 3, 45, shift=0.8)
        cfg = TrainConfig(seed=trial)
        ecoc = train_ecoc(X, y, 3, cfg, base_kind="logreg", code=identity_code(3))
        ovr = train_ovr(X, y, 3, cfg, base_kind="logreg")
        X_eval = rng.standard_normal((80, X.shape[1]))
        np.testing.assert_array_equal(ecoc.predict(X_eval), ovr.predict(X_eval))


def test_ecoc_single_column_is_one_binary_model(rng):
    X, y = noisy_labels(rng, 2, 40)
    code = np.array([[-1], [1]], dtype=np.int8)
    ecoc = train_ecoc(X, y, 2, CFG, code=code)
    binary = train_logreg(X, y, 2, CFG.reseeded("ecoc", 0))
    X_eval = rng.standard_normal((60, X.shape[1]))
    np.testing.assert_array_equal(ecoc.predict(X_eval), binary.predict(X_eval))


def test_ecoc_missing_class_rejected():
    with pytest.raises(ValidationError, match="have no training rows"):
        train_ecoc(np.eye(4), np.array([0, 1, 1, 0]), 3, CFG)


# ---------------------------------------------------------------- dispatch


def test_train_meta_covers_every_kind(rng):
    X, y = gaussian_blobs(rng, 3, 12, d=3, sep=5.0)
    for kind in META_KINDS:
        model = train_meta(kind, X, y, 3, CFG)
        preds = model.predict(X)
        assert preds.shape == (36,)
        assert np.all((preds >= 0) & (preds < 3))
        if kind.startswith("ovr_"):
            assert isinstance(model, OvRModel)
        if kind.startswith("ecoc_"):
            assert isinstance(model, ECOCModel)
        if kind == "voting":
            assert isinstance(model, VotingModel)


def test_train_meta_unknown_kind():
    with pytest.raises(ValidationError, match="unknown meta-classifier kind"):
        train_meta("bagging", np.eye(2), np.array([0, 1]), 2, CFG)
