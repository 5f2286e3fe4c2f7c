"""Write per-example class probabilities as JSONL.

The output is exactly what the ensemble engine ingests: a header line
naming the model and the class order, then one row per example with its
id, split, and probability vector. The header also carries the training
provenance (config, seed, starting-checkpoint digest), which the engine
ignores but humans and audits do not.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import ValidationError
from .corpus import Corpus
from .finetune import FineTunedClassifier


def dump_canonical(obj) -> str:
    """Compact, key-sorted JSON with a trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def export_probabilities(classifier: FineTunedClassifier, corpus: Corpus, out_path,
                         model_name: str | None = None) -> Path:
    """Score every corpus example and write the probability file.

    Rows are sorted by id and cover the whole corpus, train and test
    alike; the engine decides later which splits it reads.
    """
    if tuple(corpus.classes) != tuple(classifier.classes):
        raise ValidationError(
            f"label mismatch: corpus has classes {list(corpus.classes)} "
            f"but the classifier was trained on {list(classifier.classes)}"
        )
    if model_name is None:
        model_name = Path(str(classifier.provenance.get("checkpoint", "model"))).name
    if not model_name:
        raise ValidationError("model name must be non-empty")

    ids = corpus.ids
    probs = classifier.predict_proba([corpus.texts[ex] for ex in ids])
    lines = [
        dump_canonical(
            {
                "model": model_name,
                "classes": list(classifier.classes),
                "provenance": classifier.provenance,
            }
        )
    ]
    for ex_id, row in zip(ids, probs):
        lines.append(
            dump_canonical({"id": ex_id, "split": corpus.splits[ex_id], "probs": row.tolist()})
        )
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("".join(lines), encoding="utf-8")
    return out_path
