"""Single-vehicle charging optimizer.

Backward induction over a discretized SoC grid computes, per time step and
SoC level, the minimal attainable future energy cost under per-step power
caps; values at off-grid SoC are linearly interpolated between the two
neighbouring levels, and a level pair with an unreachable neighbour is
treated as unreachable itself (no interpolation across the feasibility
boundary).  A forward sweep then recovers the cheapest feasible charging
sequence while tracking the continuous (non-snapped) SoC, breaking cost
ties toward the smaller charging power.

The terminal condition admits every SoC level within ``epsilon`` of the
target at zero cost; everything else is unreachable.  Charging actions are
the multiples of ``power_step_kw`` from zero up to the smaller of the
charger rating and the step's external cap.  Steps that are unavailable
(operating, or inside a short idle window) force zero power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ChargingPlan,
    InputError,
    SpotPriceSeries,
    TimeGrid,
    VehicleProfile,
    build_plan,
    soc_gain_percent,
)

# Fraction of one SoC grid step within which a value counts as on-grid.
GRID_SNAP = 1e-7

# Slack when comparing powers against caps (kW).
POWER_ATOL = 1e-9


@dataclass(frozen=True)
class DpConfig:
    """Resolution of the SoC state grid and of the charging action set."""

    soc_step: float = 1.0        # percent per SoC level
    power_step_kw: float = 1.0   # spacing of charging actions

    def __post_init__(self) -> None:
        if self.soc_step <= 0.0:
            raise InputError("SoC step must be positive")
        if self.power_step_kw <= 0.0:
            raise InputError("power step must be positive")


@dataclass(frozen=True)
class Infeasible:
    """No admissible charging sequence reaches the terminal SoC set."""

    vehicle_id: str
    reason: str


@dataclass(frozen=True)
class CostToGo:
    """Minimal future cost per (step, SoC level); +inf marks unreachable states."""

    values: np.ndarray      # shape (n_steps + 1, n_levels)
    soc_levels: np.ndarray  # ascending, evenly spaced

    def initial_cost(self, soc: float) -> float:
        return float(interpolate_row(self.values[0], self.soc_levels, np.asarray([soc]))[0])


def interpolate_row(row: np.ndarray, levels: np.ndarray, soc) -> np.ndarray:
    """Linearly interpolate cost values at arbitrary SoC points.

    Points outside the level range are unreachable (+inf).  Points that land
    on a level (within ``GRID_SNAP`` of it) take that level's value even if
    the other neighbour is unreachable; strictly interior points require
    both neighbours to be finite.
    """
    soc = np.asarray(soc, dtype=float)
    n = len(levels)
    step = float(levels[1] - levels[0]) if n > 1 else 1.0
    pos = (soc - float(levels[0])) / step
    inside = (pos >= -GRID_SNAP) & (pos <= n - 1 + GRID_SNAP)
    clipped = np.clip(pos, 0.0, n - 1)
    lo = np.minimum(np.floor(clipped).astype(int), max(n - 2, 0))
    frac = clipped - lo
    hi = np.minimum(lo + 1, n - 1)
    low_val = row[lo]
    high_val = row[hi]
    both_finite = np.isfinite(low_val) & np.isfinite(high_val)
    safe_lo = np.where(both_finite, low_val, 0.0)
    safe_hi = np.where(both_finite, high_val, 0.0)
    blended = np.where(both_finite, (1.0 - frac) * safe_lo + frac * safe_hi, np.inf)
    out = np.where(frac <= GRID_SNAP, low_val, np.where(frac >= 1.0 - GRID_SNAP, high_val, blended))
    return np.where(inside, out, np.inf)


def _soc_levels(profile: VehicleProfile, cfg: DpConfig) -> np.ndarray:
    b = profile.battery
    span = b.soc_max - b.soc_min
    n = span / cfg.soc_step
    if abs(n - round(n)) > 1e-9:
        raise InputError(
            f"SoC band [{b.soc_min}, {b.soc_max}] is not a whole number of"
            f" {cfg.soc_step}-point grid steps"
        )
    return b.soc_min + cfg.soc_step * np.arange(int(round(n)) + 1)


def _actions(profile: VehicleProfile, cfg: DpConfig) -> np.ndarray:
    n = profile.charger_max_kw / cfg.power_step_kw
    if abs(n - round(n)) > 1e-9:
        raise InputError(
            f"charger rating {profile.charger_max_kw} kW is not a whole number of"
            f" {cfg.power_step_kw} kW action steps"
        )
    return cfg.power_step_kw * np.arange(int(round(n)) + 1)


def _check_alignment(profile: VehicleProfile, grid: TimeGrid, caps_kw) -> np.ndarray:
    caps = np.asarray(caps_kw, dtype=float)
    if caps.ndim == 0:
        caps = np.full(grid.n_steps, float(caps))
    if len(caps) != grid.n_steps or profile.n_steps != grid.n_steps:
        raise InputError("profile, grid, and caps must share one length")
    if np.any(caps < -POWER_ATOL):
        raise InputError("per-step caps must be non-negative")
    return np.maximum(caps, 0.0)


def backward_pass(
    profile: VehicleProfile,
    grid: TimeGrid,
    prices: SpotPriceSeries,
    caps_kw,
    cfg: DpConfig = DpConfig(),
) -> CostToGo:
    """Value iteration from the terminal SoC set back to the first step."""
    caps = _check_alignment(profile, grid, caps_kw)
    levels = _soc_levels(profile, cfg)
    actions = _actions(profile, cfg)
    b = profile.battery
    step_prices = prices.for_grid(grid)
    durations = grid.durations_h
    n_steps = grid.n_steps

    values = np.full((n_steps + 1, len(levels)), np.inf)
    terminal = np.abs(levels - b.soc_target) <= b.epsilon + 1e-12
    if not np.any(terminal):
        raise InputError(
            "no SoC level lies within epsilon of the target;"
            " widen epsilon or refine the SoC grid"
        )
    values[n_steps, terminal] = 0.0

    for t in range(n_steps - 1, -1, -1):
        nxt = values[t + 1]
        if profile.available[t]:
            acts = actions[actions <= caps[t] + POWER_ATOL]
            gains = soc_gain_percent(acts, float(durations[t]), b.capacity_kwh)
            landing = levels[:, None] + gains[None, :]
            future = interpolate_row(nxt, levels, landing)
            stage = acts * (step_prices[t] * durations[t])
            values[t] = np.min(stage[None, :] + future, axis=1)
        else:
            landing = levels - profile.delta_soc_op[t]
            values[t] = interpolate_row(nxt, levels, landing)
    return CostToGo(values=values, soc_levels=levels)


def forward_pass(
    cost_to_go: CostToGo,
    profile: VehicleProfile,
    grid: TimeGrid,
    prices: SpotPriceSeries,
    caps_kw,
    cfg: DpConfig = DpConfig(),
) -> ChargingPlan | Infeasible:
    """Recover the cheapest plan, tracking continuous SoC between grid levels."""
    caps = _check_alignment(profile, grid, caps_kw)
    levels = cost_to_go.soc_levels
    actions = _actions(profile, cfg)
    b = profile.battery
    step_prices = prices.for_grid(grid)
    durations = grid.durations_h

    if not np.isfinite(cost_to_go.initial_cost(b.soc_init)):
        return Infeasible(profile.vehicle_id, "no feasible charging sequence from the initial SoC")

    soc = float(b.soc_init)
    powers = np.zeros(grid.n_steps)
    for t in range(grid.n_steps):
        if profile.available[t]:
            acts = actions[actions <= caps[t] + POWER_ATOL]
            gains = soc_gain_percent(acts, float(durations[t]), b.capacity_kwh)
            landing = soc + gains
            future = interpolate_row(cost_to_go.values[t + 1], levels, landing)
            total = acts * (step_prices[t] * durations[t]) + future
            # np.argmin returns the first minimum; actions ascend, so exact
            # cost ties resolve toward the smaller power.
            best = int(np.argmin(total))
            if not np.isfinite(total[best]):
                return Infeasible(
                    profile.vehicle_id,
                    f"forward pass stranded at step {t} (interpolated cost-to-go unreachable)",
                )
            powers[t] = acts[best]
            soc = float(landing[best])
        else:
            soc -= float(profile.delta_soc_op[t])
            if soc < b.soc_min - cfg.soc_step * GRID_SNAP - 1e-9:
                return Infeasible(
                    profile.vehicle_id,
                    f"operating depletion pushes SoC below the floor at step {t}",
                )
    return build_plan(profile, grid, powers)


def solve_vehicle(
    profile: VehicleProfile,
    grid: TimeGrid,
    prices: SpotPriceSeries,
    caps_kw,
    cfg: DpConfig = DpConfig(),
) -> ChargingPlan | Infeasible:
    """Cheapest feasible single-vehicle plan under per-step power caps."""
    ctg = backward_pass(profile, grid, prices, caps_kw, cfg)
    return forward_pass(ctg, profile, grid, prices, caps_kw, cfg)
