"""File formats: probability sets and labels as JSONL, trained models as
versioned JSON documents.

Loading is total validation (anything accepted satisfies every in-memory
invariant) and every error names the offending line. Serialization is
canonical: sorted keys, compact separators, one trailing newline, so equal
inputs give byte-identical files and save(load(save(m))) == save(m).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    ROW_SUM_TOL,
    LabeledDataset,
    LabelSpace,
    ProbabilitySet,
    ValidationError,
)
from .ensembles import ECOCModel, OvRModel, VotingModel, validate_code_matrix
from .forest import ForestModel, Tree
from .learners import GaussianNBModel, LinearModel, LinearSVMOvR

MODEL_SCHEMA_VERSION = 1

FILE_SPLITS = ("train", "test")


class MalformedLineError(ValidationError):
    """A line is not valid JSON or violates the row schema."""


class ClassOrderMismatchError(ValidationError):
    """Header classes differ from the expected label space (order-sensitive)."""


class DuplicateIdError(ValidationError):
    """The same example id appears on two lines."""


class RowSumError(ValidationError):
    """A probability row sums outside the tolerance around 1."""


class SchemaError(ValidationError):
    """A model document is truncated, malformed, or has the wrong version."""


def dump_canonical(obj) -> str:
    """Compact, key-sorted JSON with a trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def dump_pretty(obj) -> str:
    """Key-sorted, 2-space-indented JSON with a trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _parse_line(path, lineno: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as err:
        raise MalformedLineError(f"{path}:{lineno}: invalid JSON ({err.msg})") from None
    if not isinstance(obj, dict):
        raise MalformedLineError(f"{path}:{lineno}: expected a JSON object")
    return obj


def _require(obj: dict, key: str, path, lineno: int):
    if key not in obj:
        raise MalformedLineError(f"{path}:{lineno}: missing key {key!r}")
    return obj[key]


def _check_file_split(value, path, lineno: int) -> str:
    if value not in FILE_SPLITS:
        raise MalformedLineError(
            f"{path}:{lineno}: split must be one of {list(FILE_SPLITS)}, got {value!r}"
        )
    return value


def _nonblank_lines(path):
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield lineno, line


def load_probability_file(path, expected: LabelSpace) -> ProbabilitySet:
    """Read one model's probability JSONL and validate it against the
    expected label space. Class order must match exactly; probability
    columns are never reordered."""
    lines = iter(_nonblank_lines(path))
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise MalformedLineError(f"{path}:1: empty file, expected a header line") from None
    header = _parse_line(path, lineno, line)
    model = _require(header, "model", path, lineno)
    classes = _require(header, "classes", path, lineno)
    if not isinstance(model, str) or not model:
        raise MalformedLineError(f"{path}:{lineno}: model must be a non-empty string")
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise MalformedLineError(f"{path}:{lineno}: classes must be a list of strings")
    if tuple(classes) != expected.names:
        raise ClassOrderMismatchError(
            f"{path}:{lineno}: file classes {classes} do not match expected "
            f"{list(expected.names)} (column order is meaningful, reorder is refused)"
        )

    k = expected.k
    rows: dict[str, np.ndarray] = {}
    splits: dict[str, str] = {}
    for lineno, line in lines:
        obj = _parse_line(path, lineno, line)
        ex_id = _require(obj, "id", path, lineno)
        if not isinstance(ex_id, str) or not ex_id:
            raise MalformedLineError(f"{path}:{lineno}: id must be a non-empty string")
        if ex_id in rows:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate example id {ex_id!r}")
        split = _check_file_split(_require(obj, "split", path, lineno), path, lineno)
        probs = _require(obj, "probs", path, lineno)
        if not isinstance(probs, list) or len(probs) != k:
            raise MalformedLineError(f"{path}:{lineno}: probs must be a list of {k} numbers")
        try:
            row = np.asarray(probs, dtype=np.float64)
        except (TypeError, ValueError):
            raise MalformedLineError(f"{path}:{lineno}: probs must be numeric") from None
        if not np.all(np.isfinite(row)):
            raise MalformedLineError(f"{path}:{lineno}: probs contain non-finite values")
        if np.any(row < 0.0) or np.any(row > 1.0):
            raise MalformedLineError(f"{path}:{lineno}: probs outside [0, 1]")
        total = float(row.sum())
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise RowSumError(f"{path}:{lineno}: probs sum to {total!r}, outside 1 +/- {ROW_SUM_TOL}")
        rows[ex_id] = row
        splits[ex_id] = split
    if not rows:
        raise MalformedLineError(f"{path}:{lineno}: file has a header but no probability rows")
    return ProbabilitySet(model, expected, rows, splits)


def save_probability_file(pset: ProbabilitySet, path) -> None:
    """Write a ProbabilitySet as JSONL (header, then rows sorted by id)."""
    out = [dump_canonical({"model": pset.model_name, "classes": list(pset.label_space.names)})]
    for ex_id in sorted(pset.rows):
        out.append(
            dump_canonical(
                {"id": ex_id, "split": pset.split_tags[ex_id], "probs": pset.rows[ex_id].tolist()}
            )
        )
    Path(path).write_text("".join(out), encoding="utf-8")


def load_labels_file(path, space: LabelSpace) -> LabeledDataset:
    """Read a labels JSONL; null labels are allowed only in the test split."""
    labels: dict[str, int] = {}
    splits: dict[str, str] = {}
    for lineno, line in _nonblank_lines(path):
        obj = _parse_line(path, lineno, line)
        ex_id = _require(obj, "id", path, lineno)
        if not isinstance(ex_id, str) or not ex_id:
            raise MalformedLineError(f"{path}:{lineno}: id must be a non-empty string")
        if ex_id in splits:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate example id {ex_id!r}")
        split = _check_file_split(_require(obj, "split", path, lineno), path, lineno)
        label = _require(obj, "label", path, lineno)
        splits[ex_id] = split
        if label is None:
            if split != "test":
                raise MalformedLineError(
                    f"{path}:{lineno}: unlabeled example {ex_id!r} outside the test split"
                )
            continue
        if not isinstance(label, str):
            raise MalformedLineError(f"{path}:{lineno}: label must be a string or null")
        try:
            labels[ex_id] = space.index(label)
        except ValidationError:
            raise MalformedLineError(
                f"{path}:{lineno}: unknown class {label!r} (classes: {list(space.names)})"
            ) from None
    if not splits:
        raise MalformedLineError(f"{path}:1: empty labels file")
    return LabeledDataset(space, labels, splits)


def save_labels_file(dataset: LabeledDataset, path) -> None:
    out = []
    for ex_id in sorted(dataset.splits):
        label = dataset.labels.get(ex_id)
        out.append(
            dump_canonical(
                {
                    "id": ex_id,
                    "split": dataset.splits[ex_id],
                    "label": None if label is None else dataset.label_space.name(label),
                }
            )
        )
    Path(path).write_text("".join(out), encoding="utf-8")


def _floats(arr) -> list:
    return np.asarray(arr, dtype=np.float64).tolist()


def _ints(arr) -> list:
    return np.asarray(arr, dtype=np.int64).tolist()


def model_to_doc(model) -> dict:
    """Recursive plain-JSON form of any trained model."""
    if isinstance(model, LinearModel):
        return {
            "kind": "linear",
            "linear_kind": model.kind,
            "weights": _floats(model.weights),
            "bias": _floats(model.bias),
            "platt": None if model.platt is None else [float(model.platt[0]), float(model.platt[1])],
        }
    if isinstance(model, GaussianNBModel):
        return {
            "kind": "gaussian_nb",
            "priors": _floats(model.class_priors),
            "means": _floats(model.means),
            "variances": _floats(model.variances),
        }
    if isinstance(model, ForestModel):
        return {
            "kind": "random_forest",
            "n_features": model.n_features,
            "n_classes": model.n_classes,
            "tree_seeds": list(model.tree_seeds),
            "trees": [
                {
                    "feature": _ints(t.feature),
                    "threshold": _floats(t.threshold),
                    "left": _ints(t.left),
                    "right": _ints(t.right),
                    "counts": _ints(t.counts),
                }
                for t in model.trees
            ],
        }
    if isinstance(model, LinearSVMOvR):
        return {"kind": "linear_svm_ovr", "models": [model_to_doc(m) for m in model.models]}
    if isinstance(model, VotingModel):
        return {
            "kind": "voting",
            "lr": model_to_doc(model.lr),
            "rf": model_to_doc(model.rf),
            "nb": model_to_doc(model.nb),
            "svm": model_to_doc(model.svm),
        }
    if isinstance(model, OvRModel):
        return {
            "kind": "ovr",
            "base_kind": model.base_kind,
            "models": [model_to_doc(m) for m in model.models],
        }
    if isinstance(model, ECOCModel):
        return {
            "kind": "ecoc",
            "base_kind": model.base_kind,
            "code": _ints(model.code),
            "models": [model_to_doc(m) for m in model.models],
        }
    raise SchemaError(f"cannot serialize model of type {type(model).__name__}")


def _doc_get(doc: dict, key: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"model document missing key {key!r}")
    return doc[key]


def model_from_doc(doc: dict):
    kind = _doc_get(doc, "kind")
    try:
        if kind == "linear":
            platt = doc.get("platt")
            return LinearModel(
                weights=np.asarray(_doc_get(doc, "weights"), dtype=np.float64),
                bias=np.asarray(_doc_get(doc, "bias"), dtype=np.float64),
                kind=_doc_get(doc, "linear_kind"),
                platt=None if platt is None else (float(platt[0]), float(platt[1])),
            )
        if kind == "gaussian_nb":
            return GaussianNBModel(
                class_priors=np.asarray(_doc_get(doc, "priors"), dtype=np.float64),
                means=np.asarray(_doc_get(doc, "means"), dtype=np.float64),
                variances=np.asarray(_doc_get(doc, "variances"), dtype=np.float64),
            )
        if kind == "random_forest":
            trees = tuple(
                Tree(
                    feature=np.asarray(_doc_get(t, "feature"), dtype=np.int64),
                    threshold=np.asarray(_doc_get(t, "threshold"), dtype=np.float64),
                    left=np.asarray(_doc_get(t, "left"), dtype=np.int64),
                    right=np.asarray(_doc_get(t, "right"), dtype=np.int64),
                    counts=np.asarray(_doc_get(t, "counts"), dtype=np.int64),
                )
                for t in _doc_get(doc, "trees")
            )
            return ForestModel(
                trees=trees,
                tree_seeds=tuple(int(s) for s in _doc_get(doc, "tree_seeds")),
                n_features=int(_doc_get(doc, "n_features")),
                n_classes=int(_doc_get(doc, "n_classes")),
            )
        if kind == "linear_svm_ovr":
            return LinearSVMOvR(tuple(model_from_doc(m) for m in _doc_get(doc, "models")))
        if kind == "voting":
            return VotingModel(
                lr=model_from_doc(_doc_get(doc, "lr")),
                rf=model_from_doc(_doc_get(doc, "rf")),
                nb=model_from_doc(_doc_get(doc, "nb")),
                svm=model_from_doc(_doc_get(doc, "svm")),
            )
        if kind == "ovr":
            models = tuple(model_from_doc(m) for m in _doc_get(doc, "models"))
            return OvRModel(_doc_get(doc, "base_kind"), models)
        if kind == "ecoc":
            models = tuple(model_from_doc(m) for m in _doc_get(doc, "models"))
            code = validate_code_matrix(np.asarray(_doc_get(doc, "code")), len(_doc_get(doc, "code")))
            return ECOCModel(_doc_get(doc, "base_kind"), code, models)
    except (TypeError, ValueError, IndexError) as err:
        raise SchemaError(f"model document malformed: {err}") from None
    raise SchemaError(f"unknown model kind {kind!r}")


def save_meta_model(model, path) -> None:
    doc = {"schema_version": MODEL_SCHEMA_VERSION, "model": model_to_doc(model)}
    Path(path).write_text(dump_canonical(doc), encoding="utf-8")


def load_meta_model(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: invalid JSON ({err.msg})") from None
    version = _doc_get(doc, "schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema version {version!r} not supported (expected {MODEL_SCHEMA_VERSION})"
        )
    return model_from_doc(_doc_get(doc, "model"))
