"""Command-line interface.

Subcommands map onto pipeline stages: `run` executes the whole experiment,
the stage commands (`synth`, `train-gan`, `generate`, `train-clf`,
`evaluate`) run the pipeline up to that stage, and `ingest`/`report` are
standalone utilities. Exit code 0 on success; stage failures exit nonzero
after printing the stage name.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError
from .data import ingest
from .evaluation import TransferMatrix, render_report
from .ioutil import atomic_write_text
from .pipeline import ExperimentConfig, StageError, run_experiment

logger = logging.getLogger("styleshift")


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_file(Path(args.config))
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.deterministic:
        config.deterministic = True
    if getattr(args, "epoch", None) is not None:
        config.checkpoint_epoch = args.epoch
    if getattr(args, "output", None):
        config.output_root = args.output
    config.validate()
    return config


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="override experiment seed")
    parser.add_argument(
        "--deterministic", action="store_true", help="force deterministic single-worker mode"
    )
    parser.add_argument("--output", help="override the experiment output root")


def _add_stage_command(sub, name: str, upto: str, description: str):
    parser = sub.add_parser(name, help=description)
    _add_common(parser)
    if upto in ("gan", "generate", "classifiers", "evaluate"):
        parser.add_argument(
            "--epoch", type=int, default=None, help="GAN checkpoint epoch used for generation"
        )
    parser.set_defaults(upto=upto)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="styleshift",
        description="Stochastic style transfer GAN + self-ensembling domain adaptation",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="build a manifest from a root/<class>/<image> tree")
    p_ingest.add_argument("--root", required=True)
    p_ingest.add_argument("--domain", required=True, choices=("source", "target"))
    p_ingest.add_argument("--dataset-id", default="")
    p_ingest.add_argument("--out", required=True, help="manifest output path (.tsv)")

    _add_stage_command(sub, "synth", "data", "materialize datasets and split manifests")
    _add_stage_command(sub, "train-gan", "gan", "train the style transfer GAN")
    _add_stage_command(sub, "generate", "generate", "materialize style-adapted datasets")
    _add_stage_command(sub, "train-clf", "classifiers", "train the classifier roster")
    _add_stage_command(sub, "evaluate", "evaluate", "evaluate models and emit the matrix")
    p_run = _add_stage_command(sub, "run", "evaluate", "run the full pipeline")
    p_run.set_defaults(upto="evaluate")

    p_report = sub.add_parser("report", help="render a transfer matrix to csv or markdown")
    p_report.add_argument("--matrix", required=True, help="path to matrix.json")
    p_report.add_argument("--format", required=True, choices=("csv", "markdown"))
    p_report.add_argument("--out", help="output file (default: stdout)")

    return parser


def _cmd_ingest(args) -> int:
    manifest = ingest(Path(args.root), args.domain, args.dataset_id)
    manifest.save(Path(args.out))
    print(f"wrote manifest with {len(manifest)} records, k={manifest.k} -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    matrix = TransferMatrix.load(Path(args.matrix))
    text = render_report(matrix, args.format)
    if args.out:
        atomic_write_text(Path(args.out), text)
        print(f"wrote {args.format} report -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_stage(args) -> int:
    config = _load_config(args)
    matrix = run_experiment(config, upto=args.upto)
    if matrix is not None:
        print(f"transfer matrix: {Path(config.output_root) / 'matrix.json'}")
        sys.stdout.write(render_report(matrix, "markdown"))
    else:
        print(f"completed stages through {args.upto!r} in {config.output_root}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "report":
            return _cmd_report(args)
        return _cmd_stage(args)
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
