"""Command line entry point: ``shiftlab <command> --config PATH``.

Exit status is 0 when every embedded verification passes, 2 when one fails
and 1 for usage or configuration errors.  A numerical breakdown (no clear
rank gap, inseparable eigenvalue clusters) counts as a failed verification.
The only environment variable read is ``SHIFTLAB_THREADS``, which caps the
BLAS/LAPACK thread pool.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, load_config
from .commutant import CommutantError
from .experiments import RUNNERS
from .lattice import LatticeError
from .spaces import DomainError
from .report import dumps, write_atomic

THREADS_ENV = "SHIFTLAB_THREADS"


def _u64(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shiftlab", description="Reducing subspaces of weighted shift powers.")
    p.add_argument("command", choices=sorted(RUNNERS))
    p.add_argument("--config", required=True, help="TOML experiment configuration")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=_u64, default=None, help="override the config seed")
    p.add_argument("--emit-matrices", action="store_true", help="also write operator and projection CSVs")
    return p


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = load_config(args.config, seed=args.seed)
        threads = _thread_limit()
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 1

    runner = RUNNERS[args.command]
    try:
        if threads is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                outcome = runner(cfg, emit_matrices=args.emit_matrices)
        else:
            outcome = runner(cfg, emit_matrices=args.emit_matrices)
    except DomainError as exc:
        # parameters outside what the configured space supports
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 1
    except (CommutantError, LatticeError) as exc:
        print(f"{args.command}: computation failed: {exc}", file=sys.stderr)
        return 2

    for name, text in sorted(outcome.side_files.items()):
        write_atomic(os.path.join(args.out, name), text)
    write_atomic(os.path.join(args.out, "timings.json"),
                 json.dumps(outcome.timings, indent=2, sort_keys=True) + "\n")
    write_atomic(os.path.join(args.out, "report.json"), dumps(outcome.report))

    failed = [c["name"] for c in outcome.report["verifications"] if not c["passed"]]
    if failed:
        print(f"{args.command}: verification failed: {', '.join(failed)}", file=sys.stderr)
        return 2
    print(f"{args.command}: all {len(outcome.report['verifications'])} verifications passed")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
