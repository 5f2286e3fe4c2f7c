"""End-to-end checks of the engine's load-bearing guarantees.

Each test covers one numbered guarantee and prints a matching PASS line;
run with -v for the per-test verdicts.
"""

from __future__ import annotations

import json
import re
import time

import numpy as np
import pytest

from probstack.cli import main
from probstack.ensembles import identity_code, train_ecoc, train_ovr
from probstack.learners import TrainConfig, logreg_loss_grad
from probstack.metrics import evaluate
from probstack.pipeline import ExperimentManifest, run_loaded
from probstack.synth import SynthSpec, generate_synthetic_task

from conftest import noisy_labels

BINARY_SPEC = dict(
    k=2,
    n_train=4000,
    n_test=2000,
    accuracies=(0.61, 0.64, 0.67, 0.61, 0.62),
    hard_fraction=0.3,
    hard_penalty=0.15,
    confidence=(0.75, 0.90),
    task="binary-demo",
)

MULTI_SPEC = dict(
    k=6,
    n_train=4000,
    n_test=2000,
    accuracies=(0.45, 0.50, 0.55, 0.45, 0.48),
    hard_fraction=0.3,
    hard_penalty=0.15,
    task="multi-demo",
)


def manifest_for(spec: SynthSpec, **overrides) -> ExperimentManifest:
    kwargs = dict(
        task=spec.task,
        label_space=spec.label_space,
        model_order=spec.model_names,
        probability_paths={m: f"{m}.jsonl" for m in spec.model_names},
        labels_path="labels.jsonl",
        seed=spec.seed,
    )
    kwargs.update(overrides)
    return ExperimentManifest(**kwargs)


def ensemble_margin(seed: int, spec_kwargs: dict) -> tuple[float, float]:
    """(chosen ensemble test f_macro - best base test f_macro, seconds)."""
    started = time.perf_counter()
    spec = SynthSpec(seed=seed, **spec_kwargs)
    sets, dataset = generate_synthetic_task(spec)
    result = run_loaded(manifest_for(spec), sets, dataset)
    elapsed = time.perf_counter() - started
    best_single = max(report.f_macro for _, report in result.base_model_reports)
    return result.test_report.f_macro - best_single, elapsed


def brute_force_report(y_true, y_pred, k):
    counts = [[0] * k for _ in range(k)]
    for t, p in zip(y_true, y_pred):
        counts[t][p] += 1
    precs, recs, f1s = [], [], []
    for c in range(k):
        tp = counts[c][c]
        pred_c = sum(counts[r][c] for r in range(k))
        true_c = sum(counts[c])
        prec = tp / pred_c if pred_c else 0.0
        rec = tp / true_c if true_c else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        precs.append(prec)
        recs.append(rec)
        f1s.append(f1)
    acc = sum(counts[c][c] for c in range(k)) / len(y_true)
    return counts, acc, sum(f1s) / k, sum(precs) / k, sum(recs) / k


def test_criterion_01_metric_oracle_equivalence():
    rng = np.random.default_rng(42)
    started = time.perf_counter()
    for trial in range(1000):
        k = 2 if trial % 2 == 0 else 6
        n = int(rng.integers(1, 201))
        y_true = rng.integers(0, k, n)
        y_pred = rng.integers(0, k, n)
        report = evaluate(y_true, y_pred, k)
        counts, acc, f_macro, prec, rec = brute_force_report(y_true.tolist(), y_pred.tolist(), k)
        assert report.confusion.counts.tolist() == counts
        assert abs(report.acc - acc) < 1e-12
        assert abs(report.f_macro - f_macro) < 1e-12
        assert abs(report.prec - prec) < 1e-12
        assert abs(report.rec - rec) < 1e-12
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    print(f"[criterion 1] PASS: 1000 instances matched the brute-force oracle in {elapsed:.2f}s")


def test_criterion_02_ecoc_identity_equals_ovr():
    rng = np.random.default_rng(7)
    mismatches = 0
    for trial in range(100):
        k = 2 + trial % 5
        X, y = noisy_labels(rng, k, 60, shift=0.8)
        cfg = TrainConfig(seed=trial)
        ecoc = train_ecoc(X, y, k, cfg, base_kind="logreg", code=identity_code(k))
        ovr = train_ovr(X, y, k, cfg, base_kind="logreg")
        X_eval = np.vstack([X, rng.standard_normal((60, X.shape[1]))])
        mismatches += int(np.sum(ecoc.predict(X_eval) != ovr.predict(X_eval)))
    assert mismatches == 0
    print("[criterion 2] PASS: identity-coded decoding matched one-vs-rest on all 100 datasets")


def test_criterion_03_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    n, d, k = 30, 4, 3
    X = rng.standard_normal((n, d))
    y = rng.integers(0, k, n)
    Y = np.zeros((n, k))
    Y[np.arange(n), y] = 1.0
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        W = rng.standard_normal((k, d))
        b = rng.standard_normal(k)
        _, gW, gb = logreg_loss_grad(W, b, X, Y, 1e-4)
        for arr, grad in ((W, gW), (b, gb)):
            flat = arr.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up, _, _ = logreg_loss_grad(W, b, X, Y, 1e-4)
                flat[i] = orig - h
                dn, _, _ = logreg_loss_grad(W, b, X, Y, 1e-4)
                flat[i] = orig
                worst = max(worst, abs((up - dn) / (2 * h) - grad.reshape(-1)[i]))
    assert worst < 1e-5
    print(f"[criterion 3] PASS: max gradient error {worst:.2e} across 20 parameter points")


def test_criterion_04_binary_ensemble_beats_best_single():
    margins = []
    for seed in (101, 102, 103, 104, 105):
        margin, elapsed = ensemble_margin(seed, BINARY_SPEC)
        assert elapsed < 60.0, f"seed {seed} took {elapsed:.1f}s"
        margins.append(margin)
    wins = sum(m >= 0.02 for m in margins)
    assert wins >= 4, f"margins {margins}"
    print(
        "[criterion 4] PASS: binary margins "
        + ", ".join(f"{m:+.4f}" for m in margins)
        + f" ({wins}/5 at or above +0.02)"
    )


def test_criterion_05_multiclass_ensemble_beats_best_single():
    margins = []
    for seed in (201, 202, 203, 204, 205):
        margin, elapsed = ensemble_margin(seed, MULTI_SPEC)
        assert elapsed < 60.0, f"seed {seed} took {elapsed:.1f}s"
        margins.append(margin)
    wins = sum(m >= 0.0 for m in margins)
    assert wins >= 4, f"margins {margins}"
    print(
        "[criterion 5] PASS: 6-class margins "
        + ", ".join(f"{m:+.4f}" for m in margins)
        + f" ({wins}/5 at or above +0.00)"
    )


def test_criterion_06_runs_are_byte_identical(tmp_path, capsys):
    spec_doc = {
        "task": "determinism",
        "k": 2,
        "n_train": 400,
        "n_test": 200,
        "accuracies": [0.61, 0.64, 0.67, 0.61, 0.62],
        "hard_fraction": 0.3,
        "hard_penalty": 0.15,
        "seed": 17,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec_doc))
    task_dir = tmp_path / "task"
    assert main(["simulate", "--spec", str(spec_path), "--out", str(task_dir)]) == 0

    manifest = str(task_dir / "manifest.json")
    assert main(["run", "--manifest", manifest, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--manifest", manifest, "--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    a = (tmp_path / "a" / "result.json").read_bytes()
    b = (tmp_path / "b" / "result.json").read_bytes()
    assert a == b
    assert (tmp_path / "a" / "model.json").read_bytes() == (
        tmp_path / "b" / "model.json"
    ).read_bytes()
    print(f"[criterion 6] PASS: repeated runs wrote byte-identical result.json ({len(a)} bytes)")


def test_criterion_07_label_access_respects_protocol():
    spec = SynthSpec(
        k=2, n_train=300, n_test=150, accuracies=(0.65, 0.75), seed=23, task="protocol"
    )
    sets, dataset = generate_synthetic_task(spec)
    manifest = manifest_for(spec, metas=("logreg", "linear_svm"))
    result = run_loaded(manifest, sets, dataset)

    reads = {phase: frozenset() for phase, _ in result.label_access}
    for phase, ids in result.label_access:
        reads[phase] = reads[phase] | ids
    val_ids = reads["select"]
    test_ids = frozenset(dataset.ids_for("test"))
    train_ids = reads["fit"]

    # the split phase reads the file-level train labels to stratify; the
    # val subset only exists once that carve-out is made, so the exclusivity
    # guarantee applies to every phase after it
    assert reads["split"] == train_ids | val_ids
    for phase, ids in result.label_access:
        if phase != "split" and ids & val_ids:
            assert phase in ("select", "refit"), f"val labels read during {phase}"
        if ids & test_ids:
            assert phase == "final", f"test labels read during {phase}"
    assert not train_ids & val_ids
    assert reads["final"] == test_ids
    # the winner is refit on exactly the union of the carve-out halves
    assert result.refit_ids == train_ids | val_ids
    assert result.refit_ids == frozenset(dataset.ids_for("train"))
    assert reads["refit"] == result.refit_ids
    print(
        "[criterion 7] PASS: val labels surfaced only in selection and refit, "
        "test labels only in the final phase, refit used exactly train + val "
        f"({len(result.refit_ids)} ids)"
    )


def test_criterion_08_report_layout(tmp_path):
    from probstack.report import format_report_table

    spec = SynthSpec(
        k=2, n_train=200, n_test=100, accuracies=(0.65, 0.7, 0.75), seed=31, task="layout"
    )
    sets, dataset = generate_synthetic_task(spec)
    result = run_loaded(manifest_for(spec), sets, dataset)
    lines = format_report_table(result).splitlines()

    assert lines[0] == "Model\tAcc\tF_macro\tPrec\tRec"
    assert len(lines) == 1 + len(spec.model_names) + 1
    for line, name in zip(lines[1:], spec.model_names):
        assert line.split("\t")[0] == name
    ensemble = lines[-1].split("\t")
    assert re.fullmatch(
        r"Ensemble with (Voting|OneVsRest|ECOC|Linear SVC|Logistic Regression) classifier "
        r"\(P\^(C|A) as a input feature\)",
        ensemble[0],
    )
    for line in lines[1:]:
        cells = line.split("\t")[1:]
        assert len(cells) == 4
        for cell in cells:
            assert re.fullmatch(r"\d\.\d{3}", cell)
    print(
        "[criterion 8] PASS: report has one row per base model plus the ensemble row, "
        "all metrics at 3 decimals"
    )
