"""Command-line surface: scenario runs, bounds, grids, Monte Carlo, case study, overhead."""
from __future__ import annotations

import argparse
import dataclasses
import os
import random
import sys
from importlib import resources
from typing import Optional, Sequence

from . import analysis
from .analysis import TailBoundViolation
from .config import load_config
from .runner import run_scenario

DEFAULT_FIXTURE = "sandwich_profits_usd.csv"


def _fixture_path() -> str:
    return str(resources.files("pi3sim").joinpath("data", DEFAULT_FIXTURE))


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pi3sim",
        description="Simulate and analyze commit-reveal randomized transaction ordering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config and emit the JSON report")
    p_run.add_argument("config", help="TOML scenario file")
    p_run.add_argument("--out", help="write the report here instead of stdout")

    p_bound = sub.add_parser("bound", help="closed-form withholding bound and equilibrium slack")
    p_bound.add_argument("--m", type=int, required=True)
    p_bound.add_argument("--k", type=int, required=True)
    p_bound.add_argument("--lambda", dest="lam", type=float, required=True)
    p_bound.add_argument("--w", type=float, required=True)
    p_bound.add_argument("--q", type=float, default=0.0)
    p_bound.add_argument("--leaders", type=int, default=10)
    p_bound.add_argument("--Lambda", dest="big_lambda", type=float)

    p_grid = sub.add_parser("grid", help="bound table over (m, k, lambda), CSV")
    p_grid.add_argument("--out", required=True)
    p_grid.add_argument("--lambdas", type=_float_list, default=[109.0, 6.37])
    p_grid.add_argument("--ks", type=_int_list, default=[1, 2, 3, 5])
    p_grid.add_argument("--m-max", type=int, default=50)
    p_grid.add_argument("--w", type=float, default=2.0)
    p_grid.add_argument("--q", type=float, default=0.0)
    p_grid.add_argument("--leaders", type=int, default=10)

    p_mc = sub.add_parser("montecarlo", help="Monte Carlo check of the withholding bound")
    p_mc.add_argument("--m", type=int, required=True)
    p_mc.add_argument("--k", type=int, required=True)
    p_mc.add_argument("--lambda", dest="lam", type=float, required=True)
    p_mc.add_argument("--w", type=float, required=True)
    p_mc.add_argument("--trials", type=int, default=10_000)
    p_mc.add_argument("--seed", type=int, default=1)

    p_case = sub.add_parser("casestudy", help="profit percentiles from a CSV of attack profits")
    p_case.add_argument("csv", nargs="?", help="profit CSV (USD per row); bundled sample when omitted")
    p_case.add_argument("--rate", type=float, default=analysis.DEFAULT_ETH_USD, help="USD per ETH")

    p_over = sub.add_parser("overhead", help="per-block space overhead of the wrapper")
    p_over.add_argument("--leaders", type=int, required=True)

    return parser


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    env_seed = os.environ.get("PI3_SEED")
    if env_seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=int(env_seed))
    report = run_scenario(cfg)
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if not report.ok:
        failed = [name for name, ok in report.assertions.items() if not ok]
        print(f"FAILED assertions: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    p = analysis.p_k_lambda(args.m, args.k, args.w, args.lam, args.q, args.leaders)
    print(f"p_k_lambda = {p:.6f}")
    if args.big_lambda is not None:
        eps = analysis.epsilon_equilibrium(args.lam, args.big_lambda, args.leaders, p)
        print(f"epsilon = {eps:.6f}")
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    rows = analysis.probability_grid(
        args.lambdas, args.ks, range(1, args.m_max + 1), args.w, args.q, args.leaders
    )
    analysis.write_grid_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_montecarlo(args: argparse.Namespace) -> int:
    rng = random.Random(args.seed)
    try:
        est = analysis.montecarlo_tail(args.m, args.k, args.w, args.lam, args.trials, rng)
    except TailBoundViolation as exc:
        print(f"BOUND VIOLATION: {exc}", file=sys.stderr)
        return 1
    print(
        f"m={est.m} k={est.k} lambda={est.lam} w={est.w} trials={est.trials}\n"
        f"empirical = {est.estimate:.6f} +/- {est.ci95:.6f} (95% CI)\n"
        f"bound     = {est.bound:.6f}\n"
        f"within bound: {est.within_bound}"
    )
    return 0


def cmd_casestudy(args: argparse.Namespace) -> int:
    path = args.csv or _fixture_path()
    data = analysis.ingest_profit_csv(path, args.rate)
    p9997 = analysis.percentile(data, 99.97)
    top = data.max_eth()
    print(f"records = {len(data.profits_usd)}")
    print(f"p99.97 = {p9997:.2f} ETH ({p9997 * data.eth_usd:.2f} USD)")
    print(f"max    = {top:.2f} ETH ({top * data.eth_usd:.2f} USD)")
    return 0


def cmd_overhead(args: argparse.Namespace) -> int:
    breakdown = analysis.overhead_breakdown(args.leaders)
    for key, value in breakdown.items():
        print(f"{key} = {value}")
    print(f"total_kb = {breakdown['total_bits'] / 8 / 1024:.3f}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "bound": cmd_bound,
    "grid": cmd_grid,
    "montecarlo": cmd_montecarlo,
    "casestudy": cmd_casestudy,
    "overhead": cmd_overhead,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
