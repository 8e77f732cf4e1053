#!/usr/bin/env python3
"""Runtime scaling of the LP benchmark and the candidate-cap sweep.

Times both methods on regression fleets of increasing size and prints
the per-size minima over a few repeats plus the LP-to-heuristic ratio.
"""

import argparse
import time

from depotplan.lp import InfeasibleProblem, build_lp, solve_lp
from depotplan.presets import regression_instance
from depotplan.seqdp import NoFeasibleTariff, plan_month


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 30, 50])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print(f"{'K':>4}{'lp [s]':>10}{'seqdp [s]':>12}{'lp/seqdp':>11}")
    for k in args.sizes:
        instance, _ = regression_instance(k, args.seed)
        lp_times, dp_times = [], []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            exact = solve_lp(build_lp(instance), instance)
            lp_times.append(time.perf_counter() - t0)
            if isinstance(exact, InfeasibleProblem):
                raise SystemExit(f"K={k}: LP infeasible ({exact.reason})")
            t0 = time.perf_counter()
            result = plan_month(instance)
            dp_times.append(time.perf_counter() - t0)
            if isinstance(result, NoFeasibleTariff):
                raise SystemExit(f"K={k}: {result.reason}")
        lp_t, dp_t = min(lp_times), min(dp_times)
        print(f"{k:>4}{lp_t:>10.3f}{dp_t:>12.3f}{lp_t / dp_t:>11.3f}")


if __name__ == "__main__":
    main()
