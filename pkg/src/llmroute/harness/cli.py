"""Command-line entry point: ``llmroute-harness {beta-sweep,weight-study,live-run}``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..config import load_structured
from ..core import RoutingError
from .experiments import (
    BETA_SWEEP_COLUMNS,
    WEIGHT_STUDY_COLUMNS,
    run_beta_sweep,
    run_weight_study,
    write_csv,
)
from .live import LIVE_RUN_COLUMNS, run_live
from .spec import (
    COST_WEIGHTS,
    ExperimentSpec,
    default_beta_sweep_spec,
    default_weight_study_spec,
    spec_from_dict,
)

log = logging.getLogger("llmroute.harness")


def _load_spec(args, default) -> ExperimentSpec:
    spec = spec_from_dict(load_structured(args.spec)) if args.spec else default()
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    return spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llmroute-harness", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("beta-sweep", "convergence speed and reward across SLA learning rates"),
        ("weight-study", "per-round cost/latency of each policy under one weight setting"),
        ("live-run", "sessions over a dataset against live chat-completion backends"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--spec", help="experiment spec file (YAML or JSON)")
        p.add_argument("--out", help="CSV output path (stdout if omitted)")
        p.add_argument("--seed", type=int, help="replace the seeds from --spec with one base seed")
        p.add_argument("--parallel", type=int, default=1, help="worker processes")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "beta-sweep":
            spec = _load_spec(args, default_beta_sweep_spec)
            text = write_csv(run_beta_sweep(spec, args.parallel), BETA_SWEEP_COLUMNS, args.out)
        elif args.command == "weight-study":
            spec = _load_spec(args, lambda: default_weight_study_spec(COST_WEIGHTS))
            text = write_csv(run_weight_study(spec, args.parallel), WEIGHT_STUDY_COLUMNS, args.out)
        else:
            if not args.spec:
                raise RoutingError("live-run requires --spec")
            spec = _load_spec(args, lambda: None)
            text = write_csv(run_live(spec), LIVE_RUN_COLUMNS, args.out)
    except (RoutingError, FileNotFoundError, ValueError) as exc:
        print(f"llmroute-harness: error: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
