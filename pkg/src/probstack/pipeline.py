"""Experiment protocol: stratified validation carve-out, grid over
(fusion x meta-classifier), selection on validation macro-F1,
merge-and-retrain of the winner, final test evaluation.

Label reads go through a phase gate that only exposes the split each phase
is entitled to (train for fitting, val for selection, train+val for the
refit, test for the final evaluation) and records every access, so a run
can prove it never peeked ahead.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    LabeledDataset,
    LabelSpace,
    ProbabilitySet,
    ValidationError,
    check_seed,
    spawn_rng,
    spawn_seed,
)
from .dataio import dump_pretty, load_labels_file, load_probability_file, save_meta_model
from .ensembles import META_KINDS, train_meta
from .fusion import STRATEGIES, fuse
from .learners import TrainConfig
from .metrics import EvalReport, evaluate

PHASES = ("split", "fit", "select", "refit", "final")


class PhaseError(ValidationError):
    """A label access outside the current phase's entitlement."""


class PhasedLabels:
    """Phase gate over a LabeledDataset.

    Starts in the split phase, where only the file-level train split is
    visible (the carve-out does not exist yet). After set_partition, each
    later phase sees exactly its own ids. Every read lands in access_log as
    (phase, ids) for post-hoc audit.
    """

    def __init__(self, dataset: LabeledDataset):
        self._dataset = dataset
        self._phase = "split"
        self._file_train = frozenset(dataset.ids_for("train"))
        self._test = frozenset(dataset.ids_for("test"))
        self._train: frozenset | None = None
        self._val: frozenset | None = None
        self.access_log: list[tuple[str, frozenset]] = []

    @property
    def phase(self) -> str:
        return self._phase

    @property
    def file_train_ids(self) -> frozenset:
        return self._file_train

    @property
    def train_ids(self) -> frozenset:
        return self._train

    @property
    def val_ids(self) -> frozenset:
        return self._val

    @property
    def test_ids(self) -> frozenset:
        return self._test

    def set_partition(self, train_ids, val_ids) -> None:
        if self._phase != "split":
            raise PhaseError(f"partition can only be set in the split phase, not {self._phase!r}")
        train_ids = frozenset(train_ids)
        val_ids = frozenset(val_ids)
        if train_ids & val_ids:
            raise PhaseError("train and val carve-out overlap")
        if train_ids | val_ids != self._file_train:
            raise PhaseError("carve-out does not partition the train split")
        self._train = train_ids
        self._val = val_ids

    def advance(self, phase: str) -> None:
        if phase not in PHASES:
            raise PhaseError(f"unknown phase {phase!r}")
        if PHASES.index(phase) <= PHASES.index(self._phase):
            raise PhaseError(f"phases only move forward, {self._phase!r} -> {phase!r}")
        if self._train is None:
            raise PhaseError("cannot leave the split phase before set_partition")
        self._phase = phase

    def _entitled(self) -> frozenset:
        if self._phase == "split":
            return self._file_train
        if self._phase == "fit":
            return self._train
        if self._phase == "select":
            return self._val
        if self._phase == "refit":
            return self._train | self._val
        return self._test

    def labels_for(self, ids) -> np.ndarray:
        ids = list(ids)
        entitled = self._entitled()
        outside = [i for i in ids if i not in entitled]
        if outside:
            raise PhaseError(
                f"phase {self._phase!r} may not read labels of {sorted(outside)[:5]}"
            )
        unlabeled = [i for i in ids if i not in self._dataset.labels]
        if unlabeled:
            raise ValidationError(f"examples {sorted(unlabeled)[:5]} are unlabeled")
        self.access_log.append((self._phase, frozenset(ids)))
        return np.array([self._dataset.labels[i] for i in ids], dtype=np.int64)


@dataclass(frozen=True)
class ExperimentManifest:
    """Everything one run needs: file locations, grid, seed, carve-out size."""

    task: str
    label_space: LabelSpace
    model_order: tuple[str, ...]
    probability_paths: dict[str, str]
    labels_path: str
    fusions: tuple[str, ...] = STRATEGIES
    metas: tuple[str, ...] = META_KINDS
    seed: int = 0
    val_fraction: float = 0.2
    train_cfg: TrainConfig = TrainConfig()
    manifest_hash: str | None = None

    def __post_init__(self):
        check_seed(self.seed)
        if not self.task:
            raise ValidationError("task name must be non-empty")
        if not self.model_order:
            raise ValidationError("need at least one base model")
        if len(set(self.model_order)) != len(self.model_order):
            raise ValidationError(f"duplicate model names: {list(self.model_order)}")
        missing = [m for m in self.model_order if m not in self.probability_paths]
        if missing:
            raise ValidationError(f"no probability file for models {missing}")
        if not self.fusions or not set(self.fusions) <= set(STRATEGIES):
            raise ValidationError(f"fusions must be a non-empty subset of {list(STRATEGIES)}")
        if not self.metas or not set(self.metas) <= set(META_KINDS):
            raise ValidationError(f"metas must be a non-empty subset of {list(META_KINDS)}")
        if len(set(self.fusions)) != len(self.fusions) or len(set(self.metas)) != len(self.metas):
            raise ValidationError("fusions and metas must not repeat")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValidationError(f"val_fraction {self.val_fraction} outside (0, 1)")

    def configs(self) -> list[tuple[str, str]]:
        """Grid in manifest order: fusions outer, metas inner."""
        return [(f, m) for f in self.fusions for m in self.metas]


def load_manifest(path) -> ExperimentManifest:
    """Read a manifest JSON file; relative paths resolve against its
    directory; the raw bytes are hashed for provenance."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ValidationError(f"{path}: manifest is not valid JSON ({err})") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: manifest must be a JSON object")

    def need(key):
        if key not in doc:
            raise ValidationError(f"{path}: manifest missing key {key!r}")
        return doc[key]

    classes = need("classes")
    models = need("models")
    if not isinstance(models, list) or not all(
        isinstance(m, dict) and isinstance(m.get("name"), str) and isinstance(m.get("path"), str)
        for m in models
    ):
        raise ValidationError(f"{path}: models must be a list of {{name, path}} objects")
    base = path.parent
    overrides = doc.get("train", {})
    if not isinstance(overrides, dict):
        raise ValidationError(f"{path}: train overrides must be an object")
    if "seed" in overrides:
        raise ValidationError(f"{path}: the training seed is derived from the manifest seed")
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ValidationError(f"{path}: unknown train override keys {unknown}")
    return ExperimentManifest(
        task=need("task"),
        label_space=LabelSpace(classes),
        model_order=tuple(m["name"] for m in models),
        probability_paths={m["name"]: str(base / m["path"]) for m in models},
        labels_path=str(base / need("labels")),
        fusions=tuple(doc.get("fusions", STRATEGIES)),
        metas=tuple(doc.get("metas", META_KINDS)),
        seed=need("seed"),
        val_fraction=float(doc.get("val_fraction", 0.2)),
        train_cfg=dataclasses.replace(TrainConfig(), **overrides),
        manifest_hash=hashlib.sha256(raw).hexdigest(),
    )


def save_manifest(manifest: ExperimentManifest, path) -> None:
    path = Path(path)
    doc = {
        "task": manifest.task,
        "classes": list(manifest.label_space.names),
        "models": [
            {"name": name, "path": str(Path(manifest.probability_paths[name]).name)}
            for name in manifest.model_order
        ],
        "labels": str(Path(manifest.labels_path).name),
        "fusions": list(manifest.fusions),
        "metas": list(manifest.metas),
        "seed": manifest.seed,
        "val_fraction": manifest.val_fraction,
    }
    overrides = {
        f.name: getattr(manifest.train_cfg, f.name)
        for f in dataclasses.fields(TrainConfig)
        if f.name != "seed" and getattr(manifest.train_cfg, f.name) != f.default
    }
    if overrides:
        doc["train"] = overrides
    path.write_text(dump_pretty(doc), encoding="utf-8")


def _stratified_split(ids, y, space: LabelSpace, fraction: float, seed: int):
    rng = spawn_rng(seed, "split")
    val: list[str] = []
    for c in range(space.k):
        class_ids = [i for i, label in zip(ids, y) if label == c]
        if len(class_ids) < 2:
            raise ValidationError(
                f"class {space.name(c)!r} has {len(class_ids)} training examples, "
                "need at least 2 to stratify"
            )
        want = int(np.floor(fraction * len(class_ids) + 0.5))
        want = min(max(want, 1), len(class_ids) - 1)
        perm = rng.permutation(len(class_ids))
        val.extend(class_ids[j] for j in perm[:want])
    val_set = set(val)
    return sorted(set(ids) - val_set), sorted(val_set)


def split_train_val(dataset: LabeledDataset, fraction: float, seed: int):
    """Stratified carve-out of the train split; per-class validation count is
    round(fraction * class size), at least 1, leaving at least 1 for training."""
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"fraction {fraction} outside (0, 1)")
    ids = dataset.ids_for("train")
    if not ids:
        raise ValidationError("dataset has no train split")
    y = np.array([dataset.labels[i] for i in ids], dtype=np.int64)
    return _stratified_split(ids, y, dataset.label_space, fraction, seed)


@dataclass(frozen=True)
class GridEntry:
    fusion: str
    meta: str
    val_report: EvalReport


@dataclass(frozen=True)
class RunResult:
    task: str
    seed: int
    class_names: tuple[str, ...]
    grid: tuple[GridEntry, ...]
    chosen: GridEntry
    test_report: EvalReport
    base_model_reports: tuple[tuple[str, EvalReport], ...]
    model: object
    refit_ids: frozenset
    label_access: tuple[tuple[str, frozenset], ...]
    manifest_hash: str | None

    def to_doc(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "configs": [
                {"fusion": g.fusion, "meta": g.meta, "val": g.val_report.summary()}
                for g in self.grid
            ],
            "chosen": {
                "fusion": self.chosen.fusion,
                "meta": self.chosen.meta,
                "val": self.chosen.val_report.summary(),
            },
            "test": self.test_report.summary(),
            "base_models": [
                {"model": name, **report.summary()} for name, report in self.base_model_reports
            ],
        }


def _check_coverage(sets: list[ProbabilitySet], dataset: LabeledDataset) -> None:
    label_ids = set(dataset.splits)
    for pset in sets:
        if not pset.ids_for("train") or not pset.ids_for("test"):
            raise ValidationError(
                f"probability file for {pset.model_name!r} must cover train and test splits"
            )
        if set(pset.rows) != label_ids:
            no_probs = sorted(label_ids - set(pset.rows))[:5]
            no_label = sorted(set(pset.rows) - label_ids)[:5]
            raise ValidationError(
                f"ids differ between labels file and {pset.model_name!r}: "
                f"missing probability rows {no_probs}, missing labels {no_label}"
            )
        mismatched = [i for i in pset.split_tags if pset.split_tags[i] != dataset.splits[i]]
        if mismatched:
            raise ValidationError(
                f"split tags differ between labels file and {pset.model_name!r} "
                f"for ids {sorted(mismatched)[:5]}"
            )


def run_loaded(
    manifest: ExperimentManifest,
    sets: list[ProbabilitySet],
    dataset: LabeledDataset,
) -> RunResult:
    """Run the full protocol on already-loaded structures."""
    space = manifest.label_space
    k = space.k
    if dataset.label_space != space:
        raise ValidationError("labels file label space differs from manifest classes")
    _check_coverage(sets, dataset)
    test_ids = dataset.ids_for("test")
    if not dataset.has_labels(test_ids):
        raise ValidationError("test split is unlabeled, final evaluation is impossible")

    gate = PhasedLabels(dataset)
    file_train = sorted(gate.file_train_ids)
    y_file_train = gate.labels_for(file_train)
    train_ids, val_ids = _stratified_split(
        file_train, y_file_train, space, manifest.val_fraction, manifest.seed
    )
    gate.set_partition(train_ids, val_ids)

    fused = {strategy: fuse(strategy, sets, manifest.model_order) for strategy in manifest.fusions}

    def cfg_for(fusion: str, meta: str) -> TrainConfig:
        return dataclasses.replace(
            manifest.train_cfg, seed=spawn_seed(manifest.seed, "meta", fusion, meta)
        )

    gate.advance("fit")
    y_train = gate.labels_for(train_ids)
    models = {}
    for fusion, meta in manifest.configs():
        X_train = fused[fusion].matrix(train_ids)
        models[fusion, meta] = train_meta(meta, X_train, y_train, k, cfg_for(fusion, meta))

    gate.advance("select")
    y_val = gate.labels_for(val_ids)
    grid = []
    for fusion, meta in manifest.configs():
        preds = models[fusion, meta].predict(fused[fusion].matrix(val_ids))
        grid.append(GridEntry(fusion, meta, evaluate(y_val, preds, k, f"{fusion}/{meta}")))
    chosen = max(grid, key=lambda g: g.val_report.f_macro)  # max() keeps the first on ties

    gate.advance("refit")
    merged_ids = sorted(set(train_ids) | set(val_ids))
    y_merged = gate.labels_for(merged_ids)
    final_model = train_meta(
        chosen.meta,
        fused[chosen.fusion].matrix(merged_ids),
        y_merged,
        k,
        cfg_for(chosen.fusion, chosen.meta),
    )

    gate.advance("final")
    y_test = gate.labels_for(test_ids)
    test_preds = final_model.predict(fused[chosen.fusion].matrix(test_ids))
    test_report = evaluate(y_test, test_preds, k, f"{chosen.fusion}/{chosen.meta}")
    base_reports = []
    for pset in sets:
        preds = np.argmax(pset.matrix(test_ids), axis=1)
        base_reports.append((pset.model_name, evaluate(y_test, preds, k, pset.model_name)))

    return RunResult(
        task=manifest.task,
        seed=manifest.seed,
        class_names=space.names,
        grid=tuple(grid),
        chosen=chosen,
        test_report=test_report,
        base_model_reports=tuple(base_reports),
        model=final_model,
        refit_ids=frozenset(merged_ids),
        label_access=tuple(gate.access_log),
        manifest_hash=manifest.manifest_hash,
    )


def _load_inputs(manifest: ExperimentManifest):
    sets = [
        load_probability_file(manifest.probability_paths[name], manifest.label_space)
        for name in manifest.model_order
    ]
    dataset = load_labels_file(manifest.labels_path, manifest.label_space)
    return sets, dataset


def run_experiment(manifest: ExperimentManifest) -> RunResult:
    """Load the manifest's files and run the full protocol."""
    sets, dataset = _load_inputs(manifest)
    return run_loaded(manifest, sets, dataset)


def evaluate_base_models(manifest: ExperimentManifest) -> list[tuple[str, EvalReport]]:
    """Per-base-model test evaluation (argmax of each model's own rows)."""
    sets, dataset = _load_inputs(manifest)
    _check_coverage(sets, dataset)
    test_ids = dataset.ids_for("test")
    if not dataset.has_labels(test_ids):
        raise ValidationError("test split is unlabeled, evaluation is impossible")
    k = manifest.label_space.k
    y_test = np.array([dataset.labels[i] for i in test_ids], dtype=np.int64)
    out = []
    for pset in sets:
        preds = np.argmax(pset.matrix(test_ids), axis=1)
        out.append((pset.model_name, evaluate(y_test, preds, k, pset.model_name)))
    return out


def write_run_outputs(result: RunResult, out_dir) -> dict[str, Path]:
    """Write result.json, provenance.json, and the refit model document."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "result": out_dir / "result.json",
        "provenance": out_dir / "provenance.json",
        "model": out_dir / "model.json",
    }
    paths["result"].write_text(dump_pretty(result.to_doc()), encoding="utf-8")
    provenance = {
        "seed": result.seed,
        "manifest_sha256": result.manifest_hash,
        "n_refit_examples": len(result.refit_ids),
        "label_reads_by_phase": _access_counts(result.label_access),
    }
    paths["provenance"].write_text(dump_pretty(provenance), encoding="utf-8")
    save_meta_model(result.model, paths["model"])
    return paths


def _access_counts(log) -> dict[str, int]:
    counts: dict[str, int] = {}
    for phase, _ in log:
        counts[phase] = counts.get(phase, 0) + 1
    return counts
