#!/usr/bin/env python3
"""Plan the three-shuttle depot with both methods and print reductions.

Each requested month is solved with the candidate-cap sweep and with the
LP benchmark, then compared against the uncontrolled baseline that the
preset's session detector produces.
"""

import argparse
import time

from depotplan.lp import InfeasibleProblem, build_lp, solve_lp
from depotplan.presets import three_shuttle_preset
from depotplan.reporting import baseline_report, compare, lp_report, seqdp_report
from depotplan.seqdp import NoFeasibleTariff, plan_month


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--year", type=int, default=2022)
    ap.add_argument("--months", type=int, nargs="+", default=[6, 7, 8])
    args = ap.parse_args()

    header = (
        f"{'month':<9}{'uncontrolled':>14}{'seqdp':>10}{'lp':>10}"
        f"{'dp cost red':>13}{'dp peak red':>13}{'lp cost red':>13}{'lp peak red':>13}"
    )
    print(header)
    for month in args.months:
        preset = three_shuttle_preset(args.year, month)
        instance = preset.instance

        result = plan_month(instance)
        if isinstance(result, NoFeasibleTariff):
            raise SystemExit(f"{instance.grid.month_id}: {result.reason}")
        t0 = time.perf_counter()
        exact = solve_lp(build_lp(instance), instance)
        lp_runtime = time.perf_counter() - t0
        if isinstance(exact, InfeasibleProblem):
            raise SystemExit(f"{instance.grid.month_id}: {exact.reason}")

        baseline = baseline_report(preset.baseline, instance.prices)
        summary = compare(
            seqdp=seqdp_report(result, instance),
            lp=lp_report(exact, instance, runtime_seconds=lp_runtime),
            uncontrolled=baseline,
        )
        print(
            f"{instance.grid.month_id:<9}"
            f"{baseline.total_cost:>14.2f}"
            f"{result.best.total_cost:>10.2f}"
            f"{exact.total_cost:>10.2f}"
            f"{summary.seqdp_cost_reduction * 100:>12.1f}%"
            f"{summary.seqdp_peak_reduction * 100:>12.1f}%"
            f"{summary.lp_cost_reduction * 100:>12.1f}%"
            f"{summary.lp_peak_reduction * 100:>12.1f}%"
        )


if __name__ == "__main__":
    main()
