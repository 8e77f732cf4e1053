#!/usr/bin/env python3
"""Heuristic-vs-LP gap distribution over seeded regression fleets.

Solves every (fleet size, seed) pair with both methods and prints the
relative cost and peak gap percentiles per fleet size. Pass --json to
also dump the raw runs.
"""

import argparse
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from depotplan.lp import InfeasibleProblem, build_lp, solve_lp
from depotplan.presets import regression_instance
from depotplan.seqdp import NoFeasibleTariff, plan_month


def one_run(k: int, seed: int, n_days: int) -> dict:
    instance, _ = regression_instance(k, seed, n_days=n_days)
    exact = solve_lp(build_lp(instance), instance)
    if isinstance(exact, InfeasibleProblem):
        raise SystemExit(f"K={k} seed={seed}: LP infeasible ({exact.reason})")
    result = plan_month(instance)
    if isinstance(result, NoFeasibleTariff):
        raise SystemExit(f"K={k} seed={seed}: {result.reason}")
    return dict(
        n_vehicles=k,
        seed=seed,
        cost_gap=(result.best.total_cost - exact.total_cost) / exact.total_cost,
        peak_gap=(result.best.p_max_tariff_kw - exact.p_max_tariff_kw)
        / exact.p_max_tariff_kw,
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[3, 10, 20, 30])
    ap.add_argument("--seeds", type=int, default=15)
    ap.add_argument("--days", type=int, default=14)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--json", help="also write the raw runs to this file")
    args = ap.parse_args()

    tasks = [(k, s) for k in args.sizes for s in range(args.seeds)]
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        runs = list(pool.map(lambda ks: one_run(ks[0], ks[1], args.days), tasks))

    print(f"{'K':>4}{'median cost gap':>17}{'max cost gap':>14}{'median peak gap':>17}{'max peak gap':>14}")
    for k in args.sizes:
        cost = [r["cost_gap"] for r in runs if r["n_vehicles"] == k]
        peak = [r["peak_gap"] for r in runs if r["n_vehicles"] == k]
        print(
            f"{k:>4}"
            f"{np.median(cost) * 100:>16.2f}%"
            f"{np.max(cost) * 100:>13.2f}%"
            f"{np.median(peak) * 100:>16.2f}%"
            f"{np.max(peak) * 100:>13.2f}%"
        )

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(runs, fh, indent=1)
        print(f"-> {args.json}")


if __name__ == "__main__":
    main()
