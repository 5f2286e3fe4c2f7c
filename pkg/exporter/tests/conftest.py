import json
import random
from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

from probexport import BINARY_CLASSES, FineTuneConfig, fine_tune, load_corpus

# Desk-scale training knobs. The shipping defaults (batch 128, lr 3e-5) are
# sized for real encoders on real corpora; on a 200-example toy corpus they
# give two noisy steps per epoch and a randomly initialized miniature model
# barely moves. These settings train the same code path to convergence in
# seconds instead.
QUICK = dict(batch_size=16, learning_rate=5e-3)

NATURE = ("alpha", "beta", "gamma", "maple")
METAL = ("delta", "orbit", "quartz", "copper")
VOCAB = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]") + NATURE + METAL


def build_tiny_checkpoint(out_dir: Path, seed: int) -> Path:
    """A saved BERT encoder small enough to fine-tune in seconds."""
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_path = out_dir / "vocab.txt"
    vocab_path.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_path))
    tokenizer.save_pretrained(out_dir)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(out_dir)
    return out_dir


def write_binary_corpus(path: Path, n_train: int = 120, n_test: int = 80,
                        seed: int = 5) -> Path:
    """200 eight-word texts, class separable by vocabulary."""
    rng = random.Random(seed)
    rows = [("train", i) for i in range(n_train)] + [("test", i) for i in range(n_test)]
    lines = []
    for split, i in rows:
        label = BINARY_CLASSES[i % 2]
        words = NATURE if label == "human" else METAL
        text = " ".join(rng.choice(words) for _ in range(8))
        lines.append(
            json.dumps(
                {"id": f"{split}-{i:03d}", "label": label, "split": split, "text": text},
                sort_keys=True,
            )
            + "\n"
        )
    path.write_text("".join(lines), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def tiny_checkpoints(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("checkpoints")
    return {
        "tiny-a": build_tiny_checkpoint(root / "tiny-a", seed=11),
        "tiny-b": build_tiny_checkpoint(root / "tiny-b", seed=23),
    }


@pytest.fixture(scope="session")
def binary_corpus_path(tmp_path_factory) -> Path:
    return write_binary_corpus(tmp_path_factory.mktemp("corpus") / "corpus.jsonl")


@pytest.fixture(scope="session")
def binary_corpus(binary_corpus_path):
    return load_corpus(binary_corpus_path, BINARY_CLASSES)


@pytest.fixture(scope="session")
def tuned_a(tiny_checkpoints, binary_corpus):
    """One fine-tuned classifier shared by the read-only tests."""
    cfg = FineTuneConfig(str(tiny_checkpoints["tiny-a"]), "binary", epochs=3, seed=7, **QUICK)
    return fine_tune(binary_corpus, cfg)
