"""Labeled text corpus I/O.

One JSON object per line with keys `id`, `split` ("train"/"test"),
`label` (a class name, or null for unlabeled test rows), and `text`.
This is a strict superset of the engine's labels file format, so the same
corpus file can be handed to the engine as its labels path unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .config import SPLITS, ValidationError


class MalformedLineError(ValidationError):
    """A corpus line that cannot be used, with its location."""


@dataclass(frozen=True)
class Corpus:
    classes: tuple[str, ...]
    texts: dict[str, str]
    splits: dict[str, str]
    labels: dict[str, int]  # by class index; unlabeled test rows are absent

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError(f"duplicate class names: {list(self.classes)}")

    @property
    def ids(self) -> list[str]:
        return sorted(self.texts)

    def ids_for(self, split: str) -> list[str]:
        return sorted(i for i, s in self.splits.items() if s == split)

    def label_name(self, ex_id: str) -> str:
        return self.classes[self.labels[ex_id]]


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


def load_corpus(path, classes: tuple[str, ...]) -> Corpus:
    """Read a corpus JSONL and validate it against the task's class names."""
    path = Path(path)
    index = {name: i for i, name in enumerate(classes)}
    texts: dict[str, str] = {}
    splits: dict[str, str] = {}
    labels: dict[str, int] = {}
    lineno = 0
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        obj = _parse_line(path, lineno, line)
        ex_id = _require(obj, "id", path, lineno)
        if not isinstance(ex_id, str) or not ex_id:
            raise MalformedLineError(f"{path}:{lineno}: id must be a non-empty string")
        if ex_id in texts:
            raise MalformedLineError(f"{path}:{lineno}: duplicate example id {ex_id!r}")
        split = _require(obj, "split", path, lineno)
        if split not in SPLITS:
            raise MalformedLineError(
                f"{path}:{lineno}: split must be one of {list(SPLITS)}, got {split!r}"
            )
        text = _require(obj, "text", path, lineno)
        if not isinstance(text, str) or not text.strip():
            raise MalformedLineError(f"{path}:{lineno}: text must be a non-empty string")
        label = _require(obj, "label", path, lineno)
        if label is None:
            if split != "test":
                raise MalformedLineError(
                    f"{path}:{lineno}: unlabeled example {ex_id!r} outside the test split"
                )
        elif not isinstance(label, str) or label not in index:
            raise MalformedLineError(
                f"{path}:{lineno}: unknown class {label!r} (classes: {list(classes)})"
            )
        else:
            labels[ex_id] = index[label]
        texts[ex_id] = text
        splits[ex_id] = split
    if not texts:
        raise MalformedLineError(f"{path}:1: empty corpus file")
    return Corpus(tuple(classes), texts, splits, labels)


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus as JSONL, rows sorted by id."""
    out = []
    for ex_id in corpus.ids:
        label = corpus.labels.get(ex_id)
        out.append(
            json.dumps(
                {
                    "id": ex_id,
                    "label": None if label is None else corpus.classes[label],
                    "split": corpus.splits[ex_id],
                    "text": corpus.texts[ex_id],
                },
                sort_keys=True,
                separators=(",", ":"),
            )
            + "\n"
        )
    Path(path).write_text("".join(out), encoding="utf-8")
