"""Sequential heuristic fleet planner.

For each candidate peak cap in the tariff's window, vehicles are planned
one at a time in descending order of energy requirement, each against the
grid capacity left over by the vehicles before it.  The candidate's total
cost is the summed spot cost of the plans plus the demand charge priced at
the candidate cap itself (the cap is what the tariff would bill if the
month realizes it); the cheapest feasible candidate wins.  A candidate
where some vehicle has no feasible schedule is discarded whole.

This trades optimality for speed: each per-vehicle subproblem is a small
DP, and the coupling between vehicles is carried only through the residual
capacity.  The exact LP benchmark bounds the gap from below.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dp import DpConfig, Infeasible, solve_vehicle
from .model import (
    ChargingPlan,
    FleetInstance,
    InputError,
    VehicleProfile,
    aggregate_power,
    energy_cost,
)

# Residual capacity below this is treated as an accounting fault, not noise.
RESIDUAL_NEG_TOL = 1e-9


def order_vehicles(profiles: Sequence[VehicleProfile]) -> list[VehicleProfile]:
    """Vehicles by descending energy requirement; ties by id, ascending."""
    return sorted(
        profiles, key=lambda p: (-p.energy_requirement_kwh(), p.vehicle_id)
    )


def residual_capacity(
    prior_plans: Sequence[ChargingPlan], p_max_tariff_kw: float, n_steps: int
) -> np.ndarray:
    """Per-step capacity left under a candidate cap after earlier vehicles."""
    used = aggregate_power(prior_plans, n_steps)
    residual = p_max_tariff_kw - used
    if np.any(residual < -RESIDUAL_NEG_TOL):
        worst = float(np.min(residual))
        raise RuntimeError(
            f"prior plans exceed the candidate cap by {-worst:.3e} kW;"
            " residual accounting is broken"
        )
    return np.maximum(residual, 0.0)


@dataclass(frozen=True)
class TariffCandidateResult:
    """Outcome of planning the fleet under one candidate peak cap."""

    p_max_tariff_kw: float
    feasible: bool
    energy_cost: float | None
    demand_cost: float
    total_cost: float | None
    plans: tuple[ChargingPlan, ...] | None
    infeasible_vehicle: str | None = None


@dataclass(frozen=True)
class SeqDpResult:
    """Winning candidate plus the full sweep for reporting."""

    month_id: str
    best: TariffCandidateResult
    candidates: tuple[TariffCandidateResult, ...]
    vehicle_order: tuple[str, ...]
    realized_peak_kw: float
    runtime_seconds: float


@dataclass(frozen=True)
class NoFeasibleTariff:
    """Every candidate cap in the window failed for this month."""

    month_id: str
    candidates: tuple[TariffCandidateResult, ...]
    vehicle_order: tuple[str, ...]

    @property
    def reason(self) -> str:
        return (
            f"no feasible candidate peak cap for month {self.month_id};"
            f" window [{self.candidates[0].p_max_tariff_kw},"
            f" {self.candidates[-1].p_max_tariff_kw}] kW"
        )


def _plan_candidate(
    instance: FleetInstance,
    ordered: Sequence[VehicleProfile],
    cap_kw: float,
    cfg: DpConfig,
    cache: dict | None,
) -> TariffCandidateResult:
    grid = instance.grid
    n_steps = grid.n_steps
    residual = np.full(n_steps, float(cap_kw))
    plans: list[ChargingPlan] = []
    energy = 0.0
    demand = instance.tariff.peak_price_per_kw * cap_kw
    for profile in ordered:
        if cache is not None:
            key = (profile.vehicle_id, np.minimum(residual, profile.charger_max_kw).tobytes())
            result = cache.get(key)
            if result is None:
                result = solve_vehicle(profile, grid, instance.prices, residual, cfg)
                cache[key] = result
        else:
            result = solve_vehicle(profile, grid, instance.prices, residual, cfg)
        if isinstance(result, Infeasible):
            return TariffCandidateResult(
                p_max_tariff_kw=cap_kw,
                feasible=False,
                energy_cost=None,
                demand_cost=demand,
                total_cost=None,
                plans=None,
                infeasible_vehicle=profile.vehicle_id,
            )
        plans.append(result)
        residual = residual - result.power_kw
        if np.any(residual < -RESIDUAL_NEG_TOL):
            raise RuntimeError("vehicle plan exceeded its residual capacity")
        residual = np.maximum(residual, 0.0)
        energy += energy_cost(result, instance.prices, grid)
    return TariffCandidateResult(
        p_max_tariff_kw=cap_kw,
        feasible=True,
        energy_cost=energy,
        demand_cost=demand,
        total_cost=energy + demand,
        plans=tuple(plans),
    )


def plan_month(
    instance: FleetInstance,
    cfg: DpConfig = DpConfig(),
    memoize: bool = True,
) -> SeqDpResult | NoFeasibleTariff:
    """Sweep the candidate window and keep the cheapest feasible cap.

    Candidates are evaluated independently (the sweep is trivially
    parallelizable); the sequential vehicle loop inside each candidate is
    the coupling that makes this a heuristic.  ``memoize`` reuses vehicle
    solves across candidates when the effective per-step caps coincide,
    which is common for wide candidate windows; it does not change results.
    """
    candidates = instance.tariff.candidates()
    if any(cap > instance.tariff.grid_cap_kw + 1e-9 for cap in candidates):
        raise InputError("candidate window exceeds the grid connection cap")
    ordered = order_vehicles(instance.profiles)
    cache: dict | None = {} if memoize else None

    start = time.perf_counter()
    results: list[TariffCandidateResult] = []
    best: TariffCandidateResult | None = None
    for cap in candidates:
        outcome = _plan_candidate(instance, ordered, float(cap), cfg, cache)
        results.append(outcome)
        if outcome.feasible and (best is None or outcome.total_cost < best.total_cost):
            best = outcome
    runtime = time.perf_counter() - start

    order_ids = tuple(p.vehicle_id for p in ordered)
    if best is None:
        return NoFeasibleTariff(
            month_id=instance.grid.month_id,
            candidates=tuple(results),
            vehicle_order=order_ids,
        )
    peak = float(np.max(aggregate_power(best.plans, instance.grid.n_steps)))
    return SeqDpResult(
        month_id=instance.grid.month_id,
        best=best,
        candidates=tuple(results),
        vehicle_order=order_ids,
        realized_peak_kw=peak,
        runtime_seconds=runtime,
    )
