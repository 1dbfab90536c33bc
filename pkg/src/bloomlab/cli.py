"""Command-line experiment runner.

Verbs: bloom-upper, bloom-failure, embedding, necessity, decompose,
diagnose-weight.  Exit code 0 iff every inequality the experiment asserts
holds.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig
from .experiments import (
    run_bloom_failure,
    run_bloom_upper,
    run_decomposition_suite,
    run_embedding,
    run_necessity,
    run_weight_diagnostics,
)

RUNNERS = {
    "bloom-upper": run_bloom_upper,
    "bloom-failure": run_bloom_failure,
    "embedding": run_embedding,
    "necessity": run_necessity,
    "decompose": run_decomposition_suite,
    "diagnose-weight": run_weight_diagnostics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bloomlab",
        description="weighted-BMO / sparse-operator / commutator experiment runner",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in RUNNERS:
        sp = sub.add_parser(verb)
        sp.add_argument("--config", type=str, default=None, help="key=value config file")
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    updates = {"experiment": args.verb}
    if args.out is not None:
        updates["out"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    cfg = cfg.with_updates(**updates)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcome = RUNNERS[args.verb](cfg, out_dir)
    for msg in outcome.messages:
        print(msg)
    print(("OK" if outcome.ok else "FAILED") + f"  (outputs in {out_dir})")
    return 0 if outcome.ok else 1


if __name__ == "__main__":
    sys.exit(main())
