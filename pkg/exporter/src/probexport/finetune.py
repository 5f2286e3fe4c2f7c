"""Fine-tune a pretrained encoder as a sequence classifier.

The training loop is deliberately plain: AdamW at a constant learning
rate, full shuffling each epoch, no warmup, no decay, no early stopping.
Everything that varies between runs is pinned to the config seed, so the
same config on the same corpus reproduces the same weights and the same
exported probabilities.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .config import FineTuneConfig, ValidationError
from .corpus import Corpus

WEIGHT_FILES = ("model.safetensors", "pytorch_model.bin")
RECORD_NAME = "finetune.json"
PREDICT_BATCH = 64


def checkpoint_sha256(checkpoint: str) -> str | None:
    """Digest of the starting weights, when the checkpoint is a local directory."""
    root = Path(checkpoint)
    for name in WEIGHT_FILES:
        candidate = root / name
        if candidate.is_file():
            return hashlib.sha256(candidate.read_bytes()).hexdigest()
    return None


def _load_pretrained(checkpoint: str, classes: tuple[str, ...]):
    try:
        tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        model = AutoModelForSequenceClassification.from_pretrained(
            checkpoint,
            num_labels=len(classes),
            id2label=dict(enumerate(classes)),
            label2id={name: i for i, name in enumerate(classes)},
            ignore_mismatched_sizes=True,
        )
    except (OSError, EnvironmentError, ValueError) as err:
        raise ValidationError(f"checkpoint {checkpoint!r} unavailable: {err}") from err
    return tokenizer, model


class FineTunedClassifier:
    """A fine-tuned model plus everything needed to reproduce and reuse it."""

    def __init__(self, model, tokenizer, classes: tuple[str, ...], provenance: dict,
                 losses: list[float]):
        self.model = model
        self.tokenizer = tokenizer
        self.classes = tuple(classes)
        self.provenance = provenance
        self.losses = losses

    def _encode(self, texts: list[str], max_seq_len: int):
        return self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=max_seq_len,
            return_tensors="pt",
        )

    def predict_proba(self, texts: list[str]) -> np.ndarray:
        """Class probabilities for each text, softmaxed in float64."""
        max_seq_len = int(self.provenance["max_seq_len"])
        self.model.eval()
        chunks = []
        with torch.no_grad():
            for start in range(0, len(texts), PREDICT_BATCH):
                enc = self._encode(texts[start:start + PREDICT_BATCH], max_seq_len)
                logits = self.model(**enc).logits
                chunks.append(logits.double().numpy())
        logits = np.concatenate(chunks, axis=0)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd / expd.sum(axis=1, keepdims=True)

    def save(self, out_dir) -> Path:
        """Write model, tokenizer, and the training record to a directory."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.model.save_pretrained(out)
        self.tokenizer.save_pretrained(out)
        record = {
            "classes": list(self.classes),
            "losses": self.losses,
            "provenance": self.provenance,
        }
        (out / RECORD_NAME).write_text(
            json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return out

    @classmethod
    def load(cls, model_dir) -> "FineTunedClassifier":
        model_dir = Path(model_dir)
        record_path = model_dir / RECORD_NAME
        if not record_path.is_file():
            raise ValidationError(
                f"{model_dir} is not a fine-tuned model directory (no {RECORD_NAME})"
            )
        record = json.loads(record_path.read_text(encoding="utf-8"))
        tokenizer, model = _load_pretrained(str(model_dir), tuple(record["classes"]))
        model.eval()
        return cls(model, tokenizer, tuple(record["classes"]), record["provenance"],
                   list(record["losses"]))


def fine_tune(corpus: Corpus, cfg: FineTuneConfig) -> FineTunedClassifier:
    """Train a classifier head (and the encoder under it) on the corpus train split."""
    if tuple(corpus.classes) != tuple(cfg.classes):
        raise ValidationError(
            f"label mismatch: corpus has classes {list(corpus.classes)} "
            f"but task {cfg.task!r} expects {list(cfg.classes)}"
        )
    train_ids = corpus.ids_for("train")
    if not train_ids:
        raise ValidationError("corpus has no train examples")
    missing = [corpus.classes[i] for i in range(len(corpus.classes))
               if i not in {corpus.labels[ex] for ex in train_ids}]
    if missing:
        raise ValidationError(f"classes with no train examples: {missing}")

    # Seed before loading so the fresh classifier head is initialized
    # reproducibly; the epoch shuffles draw from their own generator below.
    torch.manual_seed(cfg.seed)
    tokenizer, model = _load_pretrained(cfg.checkpoint, cfg.classes)

    texts = [corpus.texts[ex] for ex in train_ids]
    y = torch.tensor([corpus.labels[ex] for ex in train_ids])
    enc = tokenizer(texts, padding=True, truncation=True, max_length=cfg.max_seq_len,
                    return_tensors="pt")
    input_ids = enc["input_ids"]
    attention_mask = enc["attention_mask"]

    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    shuffler = torch.Generator().manual_seed(cfg.seed)
    n = len(train_ids)
    losses: list[float] = []
    model.train()
    for _ in range(cfg.epochs):
        order = torch.randperm(n, generator=shuffler)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            out = model(input_ids=input_ids[idx], attention_mask=attention_mask[idx],
                        labels=y[idx])
            optimizer.zero_grad()
            out.loss.backward()
            optimizer.step()
            losses.append(out.loss.item())
    model.eval()

    provenance = cfg.provenance()
    provenance["checkpoint_sha256"] = checkpoint_sha256(cfg.checkpoint)
    return FineTunedClassifier(model, tokenizer, cfg.classes, provenance, losses)
