"""Command-line interface.

Three subcommands: `simulate` writes a synthetic task (probability files,
labels, manifest), `run` executes the full experiment protocol and writes
result + report files, `evaluate` prints the base-model table only.

Exit codes: 0 success, 2 invalid inputs, 1 internal errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .core import ValidationError, check_seed
from .metrics import EvalReport
from .pipeline import evaluate_base_models, load_manifest, run_experiment, write_run_outputs
from .report import format_report_table, write_report_files
from .synth import spec_from_doc, write_synthetic_task

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probstack",
        description="Stacked-ensemble engine over base-model class probabilities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full protocol and write result + report files")
    run.add_argument("--manifest", required=True, help="manifest JSON path")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the manifest seed")

    ev = sub.add_parser("evaluate", help="print the base-model test table only")
    ev.add_argument("--manifest", required=True, help="manifest JSON path")

    sim = sub.add_parser("simulate", help="generate a synthetic task ready for `run`")
    sim.add_argument("--spec", required=True, help="synthetic spec JSON path")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override the spec seed")

    return parser


def _base_table(reports: list[tuple[str, EvalReport]]) -> str:
    lines = ["\t".join(("Model", "Acc", "F_macro", "Prec", "Rec"))]
    for name, report in reports:
        cells = [f"{v:.3f}" for v in (report.acc, report.f_macro, report.prec, report.rec)]
        lines.append("\t".join([name] + cells))
    return "\n".join(lines) + "\n"


def _cmd_run(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.seed is not None:
        manifest = dataclasses.replace(manifest, seed=check_seed(args.seed))
    result = run_experiment(manifest)
    paths = write_run_outputs(result, args.out)
    paths.update(write_report_files(result, args.out))
    print(
        f"chosen: {result.chosen.meta} on {result.chosen.fusion} "
        f"(val F_macro {result.chosen.val_report.f_macro:.3f}, "
        f"test F_macro {result.test_report.f_macro:.3f})"
    )
    print(format_report_table(result), end="")
    for name in ("result", "report", "metrics_figure", "confusion_figure"):
        print(f"wrote {paths[name]}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    print(_base_table(evaluate_base_models(manifest)), end="")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    path = Path(args.spec)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ValidationError(f"cannot read spec {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: spec is not valid JSON ({err.msg})") from None
    spec = spec_from_doc(doc)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=check_seed(args.seed))
    paths = write_synthetic_task(spec, args.out, manifest_doc=doc)
    for name, out_path in paths.items():
        print(f"wrote {name}: {out_path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "evaluate": _cmd_evaluate, "simulate": _cmd_simulate}
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
