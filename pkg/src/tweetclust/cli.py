"""Command-line front end: one subcommand per pipeline stage plus ``run``.

Exit codes: 0 success, 1 usage/configuration error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import STAGES, PipelineConfig, StageError, run_pipeline

USAGE_ERROR = 1
STAGE_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="tweetclust",
        description="Semantic tweet clustering and topic discovery pipeline",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="YAML pipeline configuration")
        p.add_argument("--output-dir", help="override the configured output directory")
        p.add_argument("--seed", type=int, help="override the configured global seed")
        p.add_argument("--force", action="store_true",
                       help="re-run even when artifacts are up to date")

    run = sub.add_parser("run", help="run all stages (or a subset)")
    add_common(run)
    run.add_argument("--stages", help="comma-separated subset of stages to run")

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run only the {stage} stage")
        add_common(p)
    return parser


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_yaml(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _load_config(args)
    except (OSError, ValueError) as exc:
        print(f"tweetclust: configuration error: {exc}", file=sys.stderr)
        return USAGE_ERROR

    if args.command == "run":
        stages = None
        if args.stages:
            stages = [s.strip() for s in args.stages.split(",") if s.strip()]
            bad = [s for s in stages if s not in STAGES]
            if bad:
                print(
                    f"tweetclust: unknown stages {bad}; valid: {', '.join(STAGES)}",
                    file=sys.stderr,
                )
                return USAGE_ERROR
    else:
        stages = [args.command]

    try:
        results = run_pipeline(cfg, stages=stages, force=args.force)
    except StageError as exc:
        print(f"tweetclust: {exc}", file=sys.stderr)
        return STAGE_FAILURE
    for res in results:
        status = "ran" if res.executed else "up to date"
        print(f"{res.stage:<18} {status:<10} {res.path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
