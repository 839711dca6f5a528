"""Command-line interface: ``bgkmg run`` and ``bgkmg check``."""

from __future__ import annotations

import argparse
import os
import sys


def _cap_threads() -> None:
    """BGK_THREADS caps BLAS/OpenMP parallelism; must run before numpy loads."""
    threads = os.environ.get("BGK_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bgkmg",
        description="Full-grid and rank-adaptive low-rank solvers for the "
                    "linear BGK equation in multiplicative form.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment preset")
    run.add_argument("--preset", default=None,
                     help="plane1d, plane1d-small, plane2d, plane2d-small, "
                          "beam2d, beam2d-small or custom")
    run.add_argument("--config", default=None, help="flat key = value config file")
    run.add_argument("--scheme", default=None,
                     help="full_stable, full_naive, dlra_2r or dlra_4r")
    run.add_argument("--nx", type=int, default=None, help="spatial points per axis")
    run.add_argument("--nv", type=int, default=None, help="velocity nodes per axis")
    run.add_argument("--sigma", type=float, default=None, help="collisionality")
    run.add_argument("--cfl", type=float, default=None, help="CFL number")
    run.add_argument("--tend", type=float, default=None, help="final time")
    run.add_argument("--theta", type=float, default=None,
                     help="truncation tolerance coefficient")
    run.add_argument("--rmax", type=int, default=None, help="maximal rank")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="RNG seed")
    run.add_argument("--snapshots", default=None,
                     help="comma-separated snapshot times, e.g. 0,2,4,6")

    sub.add_parser("check", help="run the numerical assertion suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    _cap_threads()
    args = build_parser().parse_args(argv)

    if args.command == "check":
        from .checks import run_all_checks

        results = run_all_checks()
        failed = 0
        for res in results:
            tag = "PASS" if res.passed else "FAIL"
            print(f"[{tag}] {res.name}: {res.detail}")
            failed += 0 if res.passed else 1
        if failed:
            print(f"{failed} of {len(results)} checks failed", file=sys.stderr)
            return 1
        print(f"all {len(results)} checks passed")
        return 0

    from .config import ConfigError, load_config
    from .runner import run_experiment

    overrides = {
        "preset": args.preset, "scheme": args.scheme, "nx": args.nx,
        "nv": args.nv, "sigma": args.sigma, "cfl": args.cfl,
        "tend": args.tend, "theta": args.theta, "rmax": args.rmax,
        "out": args.out, "seed": args.seed, "snapshots": args.snapshots,
    }
    try:
        config = load_config(file=args.config, **overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    status = run_experiment(config)
    if status != 0:
        print("run aborted; partial outputs flushed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
