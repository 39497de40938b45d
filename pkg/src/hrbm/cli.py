"""Command-line interface.

Subcommands: fisher, bias, plan, simulate, estimate, check.
Exit codes: 0 success, 1 input error, 2 numeric failure, 3 invariant-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .asymptotics import LimitPair, bias_A, predict
from .errors import InputError, NumericError
from .finite_m import plan_blocks
from .harness import ExperimentConfig, check_invariants, estimate_from_file, run_experiment
from .hr_model import fisher_information

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2
EXIT_INVARIANT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrbm",
        description="Husler-Reiss dependence estimation under block maxima",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fisher", help="Fisher information at a dependence value")
    p.add_argument("--lambda", dest="lam", type=float, required=True)

    p = sub.add_parser("bias", help="asymptotic bias functional A and I^-1*A")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--l1", type=float, required=True)
    p.add_argument("--l2", type=float, required=True)

    p = sub.add_parser("plan", help="block scheme for a target sample size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0)

    p = sub.add_parser("simulate", help="run the replication experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("estimate", help="estimate lambda from a two-column CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int, required=True)

    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("--full", action="store_true")

    return parser


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "fisher":
            info = fisher_information(args.lam)
            _emit({"lambda": args.lam, "fisher_information": info, "inverse": 1.0 / info})
        elif args.command == "bias":
            limits = LimitPair(l1=args.l1, l2=args.l2)
            a_val = bias_A(args.lam, limits)
            pred = predict(args.lam, limits)
            _emit({
                "lambda": args.lam,
                "l1": args.l1,
                "l2": args.l2,
                "A": a_val,
                "mean": pred.mean,
                "variance": pred.variance,
            })
        elif args.command == "plan":
            scheme = plan_blocks(args.n, args.lam, args.c)
            _emit({
                "n_target": scheme.n_target,
                "m": scheme.m,
                "k": scheme.k,
                "mk": scheme.m * scheme.k,
                "b_m": scheme.b_m,
                "rho_m": scheme.rho_m,
                "lambda": scheme.lam,
                "c": scheme.c,
            })
        elif args.command == "simulate":
            config = ExperimentConfig.from_json(args.config)
            report = run_experiment(config, workers=args.workers)
            _emit(report.aggregate_dict())
        elif args.command == "estimate":
            report = estimate_from_file(args.input, args.m)
            _emit({
                "lambda_hat": report.result.lambda_hat,
                "status": report.result.status,
                "converged": report.result.converged,
                "log_lik": report.result.log_lik,
                "m": report.m,
                "k": report.k,
                "b_m": report.b_m,
                "rows_used": report.n_rows_used,
                "rows_dropped": report.n_rows_dropped,
                "ci_low": report.ci_low,
                "ci_high": report.ci_high,
            })
        elif args.command == "check":
            report = check_invariants("full" if args.full else "quick")
            print(report.summary())
            if not report.all_passed:
                return EXIT_INVARIANT
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
