"""Command-line interface.

Two subcommands: `finetune` trains a classifier from a pretrained
checkpoint on a labeled corpus and saves it, `export` scores a corpus
with a saved classifier and writes the probability JSONL the ensemble
engine reads.

Exit codes: 0 success, 2 invalid inputs, 1 internal errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import TASKS, FineTuneConfig, ValidationError, task_classes
from .corpus import load_corpus
from .export import export_probabilities
from .finetune import FineTunedClassifier, fine_tune

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probexport",
        description="Fine-tune text classifiers and export their class probabilities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ft = sub.add_parser("finetune", help="fine-tune a checkpoint on a labeled corpus")
    ft.add_argument("--checkpoint", required=True, help="checkpoint directory or hub name")
    ft.add_argument("--data", required=True, help="corpus JSONL path")
    ft.add_argument("--task", required=True, choices=TASKS, help="classification task")
    ft.add_argument("--out", required=True, help="directory to save the tuned model")
    ft.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    ft.add_argument("--epochs", type=int, default=None, help="override the task default")
    ft.add_argument("--batch-size", type=int, default=128)
    ft.add_argument("--learning-rate", type=float, default=3e-5)
    ft.add_argument("--max-seq-len", type=int, default=128)

    ex = sub.add_parser("export", help="write a probability JSONL for a corpus")
    ex.add_argument("--model", required=True, help="saved fine-tuned model directory")
    ex.add_argument("--data", required=True, help="corpus JSONL path")
    ex.add_argument("--out", required=True, help="output probability file")
    ex.add_argument("--name", default=None, help="model name for the file header")

    return parser


def _cmd_finetune(args) -> int:
    cfg = FineTuneConfig(
        checkpoint=args.checkpoint,
        task=args.task,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        max_seq_len=args.max_seq_len,
        epochs=args.epochs,
        seed=args.seed,
    )
    corpus = load_corpus(args.data, task_classes(args.task))
    classifier = fine_tune(corpus, cfg)
    out = classifier.save(args.out)
    first, last = classifier.losses[0], classifier.losses[-1]
    print(f"trained {cfg.epochs} epochs, loss {first:.4f} -> {last:.4f}")
    print(f"wrote model: {out}")
    return EXIT_OK


def _cmd_export(args) -> int:
    classifier = FineTunedClassifier.load(args.model)
    corpus = load_corpus(args.data, classifier.classes)
    out = export_probabilities(classifier, corpus, args.out, model_name=args.name)
    print(f"wrote probabilities: {out} ({len(corpus.ids)} rows)")
    return EXIT_OK


def _silence_library_noise() -> None:
    # Load reports and progress bars belong in notebooks, not in piped output.
    import transformers

    transformers.utils.logging.set_verbosity_error()
    transformers.utils.logging.disable_progress_bar()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _silence_library_noise()
    handlers = {"finetune": _cmd_finetune, "export": _cmd_export}
    try:
        return handlers[args.command](args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
