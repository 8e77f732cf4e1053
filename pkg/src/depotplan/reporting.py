"""Month-level result reports and cross-method gap summaries.

A report is a flat, serialization-friendly snapshot of one month solved by
one method: cost split, billed peak, the aggregate power series with
matching prices, and per-vehicle SoC trajectories.  ``compare`` derives
relative gaps between methods; the cost gap of the heuristic against the
exact benchmark must never be negative, so a materially negative value is
treated as an internal error rather than a result.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime

import numpy as np

from .ingest import BaselineResult
from .lp import LpSolution
from .model import FleetInstance, InputError, SpotPriceSeries, aggregate_power
from .seqdp import SeqDpResult

METHODS = ("seqdp", "lp", "uncontrolled")

# Cost gaps below this (relative) are float noise; below the negative of it
# the heuristic "beat" the exact benchmark, which can only be a bug.
COST_GAP_TOL = 1e-7


@dataclass(frozen=True)
class MonthReport:
    month_id: str
    method: str
    energy_cost: float
    demand_cost: float
    total_cost: float
    peak_kw: float
    step_starts: tuple[datetime, ...]
    step_durations_h: tuple[float, ...]
    aggregate_kw: tuple[float, ...]
    prices: tuple[float, ...]
    soc_by_vehicle: dict[str, tuple[float, ...]]
    runtime_seconds: float
    cost_gap_vs_lp: float | None = None
    peak_gap_vs_lp: float | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise InputError(f"unknown report method {self.method!r}")
        n = len(self.step_starts)
        if not len(self.step_durations_h) == len(self.aggregate_kw) == len(self.prices) == n:
            raise InputError("report series must share one length")
        if abs(self.total_cost - (self.energy_cost + self.demand_cost)) > 1e-6:
            raise InputError("total cost must equal energy cost plus demand cost")
        if self.runtime_seconds < 0.0:
            raise InputError("runtime cannot be negative")
        for vid, soc in self.soc_by_vehicle.items():
            if len(soc) != n + 1:
                raise InputError(f"SoC trajectory of {vid!r} must have one entry per step edge")

    @property
    def n_steps(self) -> int:
        return len(self.step_starts)


def _series(instance: FleetInstance, plans) -> dict:
    grid = instance.grid
    return dict(
        step_starts=tuple(grid.starts),
        step_durations_h=tuple(float(d) for d in grid.durations_h),
        aggregate_kw=tuple(float(v) for v in aggregate_power(plans, grid.n_steps)),
        prices=tuple(float(v) for v in instance.prices.for_grid(grid)),
        soc_by_vehicle={
            plan.vehicle_id: tuple(float(s) for s in plan.soc) for plan in plans
        },
    )


def seqdp_report(result: SeqDpResult, instance: FleetInstance) -> MonthReport:
    """Report for the winning tariff candidate; the peak billed is the cap."""
    best = result.best
    return MonthReport(
        month_id=result.month_id,
        method="seqdp",
        energy_cost=best.energy_cost,
        demand_cost=best.demand_cost,
        total_cost=best.total_cost,
        peak_kw=best.p_max_tariff_kw,
        runtime_seconds=result.runtime_seconds,
        **_series(instance, best.plans),
    )


def lp_report(
    solution: LpSolution, instance: FleetInstance, runtime_seconds: float
) -> MonthReport:
    return MonthReport(
        month_id=instance.grid.month_id,
        method="lp",
        energy_cost=solution.energy_cost,
        demand_cost=solution.demand_cost,
        total_cost=solution.total_cost,
        peak_kw=solution.p_max_tariff_kw,
        runtime_seconds=runtime_seconds,
        **_series(instance, solution.plans),
    )


def baseline_report(
    baseline: BaselineResult, prices: SpotPriceSeries, runtime_seconds: float = 0.0
) -> MonthReport:
    """Report for uncontrolled charging on its session-refined grid.

    SoC trajectories are not reconstructed here; the baseline is derived
    from sessions alone, so the dict stays empty.
    """
    grid = baseline.grid
    total = np.zeros(grid.n_steps)
    for powers in baseline.power_by_vehicle.values():
        total += powers
    return MonthReport(
        month_id=grid.month_id,
        method="uncontrolled",
        energy_cost=baseline.energy_cost,
        demand_cost=baseline.demand_cost,
        total_cost=baseline.total_cost,
        peak_kw=baseline.peak_kw,
        step_starts=tuple(grid.starts),
        step_durations_h=tuple(float(d) for d in grid.durations_h),
        aggregate_kw=tuple(float(v) for v in total),
        prices=tuple(float(v) for v in prices.for_grid(grid)),
        soc_by_vehicle={},
        runtime_seconds=runtime_seconds,
    )


@dataclass(frozen=True)
class GapSummary:
    """Relative gaps and reductions between methods for one month."""

    month_id: str
    cost_gap_vs_lp: float | None = None
    peak_gap_vs_lp: float | None = None
    seqdp_cost_reduction: float | None = None
    seqdp_peak_reduction: float | None = None
    lp_cost_reduction: float | None = None
    lp_peak_reduction: float | None = None


def _expect_method(report: MonthReport | None, method: str) -> None:
    if report is not None and report.method != method:
        raise InputError(f"expected a {method!r} report, got {report.method!r}")


def compare(
    seqdp: MonthReport | None = None,
    lp: MonthReport | None = None,
    uncontrolled: MonthReport | None = None,
) -> GapSummary:
    """Gap summary across however many of the three methods are present.

    All reports must describe the same month.  The heuristic-vs-exact cost
    gap is guaranteed non-negative by construction of the two methods, so
    a materially negative gap raises RuntimeError instead of being
    reported as a (bogus) win.
    """
    _expect_method(seqdp, "seqdp")
    _expect_method(lp, "lp")
    _expect_method(uncontrolled, "uncontrolled")
    present = [r for r in (seqdp, lp, uncontrolled) if r is not None]
    if not present:
        raise InputError("compare needs at least one report")
    months = {r.month_id for r in present}
    if len(months) > 1:
        raise InputError(f"reports describe different months: {sorted(months)}")
    if seqdp is not None and lp is not None:
        if seqdp.step_starts != lp.step_starts:
            raise InputError("seqdp and lp reports are not on the same grid")

    summary = GapSummary(month_id=present[0].month_id)
    if seqdp is not None and lp is not None:
        cost_gap = (seqdp.total_cost - lp.total_cost) / lp.total_cost
        if cost_gap < -COST_GAP_TOL:
            raise RuntimeError(
                "heuristic total undercuts the exact benchmark "
                f"({seqdp.total_cost} < {lp.total_cost}); this is a bug"
            )
        peak_gap = (seqdp.peak_kw - lp.peak_kw) / lp.peak_kw
        summary = replace(summary, cost_gap_vs_lp=cost_gap, peak_gap_vs_lp=peak_gap)
    if uncontrolled is not None:
        base = uncontrolled
        if seqdp is not None:
            summary = replace(
                summary,
                seqdp_cost_reduction=1.0 - seqdp.total_cost / base.total_cost,
                seqdp_peak_reduction=1.0 - seqdp.peak_kw / base.peak_kw,
            )
        if lp is not None:
            summary = replace(
                summary,
                lp_cost_reduction=1.0 - lp.total_cost / base.total_cost,
                lp_peak_reduction=1.0 - lp.peak_kw / base.peak_kw,
            )
    return summary


def with_lp_gaps(report: MonthReport, lp: MonthReport) -> MonthReport:
    """Copy of a seqdp report with its gap fields filled in."""
    summary = compare(seqdp=report, lp=lp)
    return replace(
        report,
        cost_gap_vs_lp=summary.cost_gap_vs_lp,
        peak_gap_vs_lp=summary.peak_gap_vs_lp,
    )
