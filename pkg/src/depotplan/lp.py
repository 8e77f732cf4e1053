"""Exact fleet benchmark: linear program and brute-force joint oracle.

The joint charging problem is linear once the monthly peak enters as a
decision variable ``PeakCap``: per-step aggregate rows tie it to the fleet
load, and per-vehicle cumulative-energy rows express the SoC band and the
terminal requirement as running sums of charging power.  The resulting LP
is solved as a continuous relaxation of the discrete planning problem, so
its optimum is a lower bound for any discrete schedule.

``joint_bruteforce`` enumerates the discrete joint action space outright
and is the independent oracle the solvers are tested against; it is only
usable when the action-space product is small.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import (
    ChargingPlan,
    FleetInstance,
    InputError,
    build_plan,
    energy_cost,
    soc_gain_percent,
)

# Primal feasibility residuals above this fail the solve as unreliable.
RESIDUAL_TOL = 1e-7


@dataclass(frozen=True)
class LpProblem:
    """Sparse inequality form ``minimize c @ x  s.t.  a_ub @ x <= b_ub, lb <= x <= ub``.

    Variables are the per-vehicle, per-step charging powers in vehicle-major
    order, followed by the fleet peak variable.  ``row_labels`` names each
    row's constraint family for diagnostics and text export.
    """

    c: np.ndarray
    a_ub: sp.csr_matrix
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    row_labels: tuple[str, ...]
    vehicle_ids: tuple[str, ...]
    n_steps: int

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicle_ids)

    def variable_names(self) -> list[str]:
        names = [
            f"P_{k}_{t}" for k in range(self.n_vehicles) for t in range(self.n_steps)
        ]
        names.append("PeakCap")
        return names


@dataclass(frozen=True)
class LpSolution:
    """Optimal continuous plans plus the peak variable and cost split."""

    plans: tuple[ChargingPlan, ...]
    p_max_tariff_kw: float
    energy_cost: float
    demand_cost: float
    total_cost: float
    residual_max: float


@dataclass(frozen=True)
class InfeasibleProblem:
    """The joint problem admits no feasible schedule."""

    reason: str


def build_lp(instance: FleetInstance) -> LpProblem:
    """Assemble the benchmark LP for one month.

    Row layout: one aggregate row per step, then per vehicle the cumulative
    SoC ceiling and floor rows for every step, then the two-sided terminal
    rows per vehicle.  Cumulative rows are materialized explicitly (the row
    for step t sums every power variable up to t), which keeps the matrix
    quadratic in the horizon; it is stored sparse.
    """
    grid = instance.grid
    n_steps = grid.n_steps
    n_veh = instance.n_vehicles
    n_var = n_veh * n_steps + 1
    peak_col = n_var - 1
    durations = grid.durations_h
    step_prices = instance.prices.for_grid(grid)

    c = np.zeros(n_var)
    for k in range(n_veh):
        c[k * n_steps : (k + 1) * n_steps] = step_prices * durations
    c[peak_col] = instance.tariff.peak_price_per_kw

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    data: list[np.ndarray] = []
    b_ub: list[float] = []
    labels: list[str] = []
    row_at = 0

    # Aggregate load may never exceed the peak variable.
    for t in range(n_steps):
        veh_cols = np.arange(n_veh) * n_steps + t
        rows.append(np.full(n_veh + 1, row_at))
        cols.append(np.append(veh_cols, peak_col))
        data.append(np.append(np.ones(n_veh), -1.0))
        b_ub.append(0.0)
        labels.append(f"aggregate_{t}")
        row_at += 1

    tri_rows, tri_cols = np.tril_indices(n_steps)
    for k, profile in enumerate(instance.profiles):
        b = profile.battery
        gain = soc_gain_percent(1.0, durations, b.capacity_kwh)  # SoC points per kW
        cum_dep = np.cumsum(profile.delta_soc_op)
        var_base = k * n_steps

        # SoC after step t stays at or below the ceiling.
        rows.append(row_at + tri_rows)
        cols.append(var_base + tri_cols)
        data.append(gain[tri_cols])
        b_ub.extend(b.soc_max - b.soc_init + cum_dep)
        labels.extend(f"socmax_{k}_{t}" for t in range(n_steps))
        row_at += n_steps

        # ... and at or above the floor.
        rows.append(row_at + tri_rows)
        cols.append(var_base + tri_cols)
        data.append(-gain[tri_cols])
        b_ub.extend(b.soc_init - b.soc_min - cum_dep)
        labels.extend(f"socmin_{k}_{t}" for t in range(n_steps))
        row_at += n_steps

    for k, profile in enumerate(instance.profiles):
        b = profile.battery
        gain = soc_gain_percent(1.0, durations, b.capacity_kwh)
        total_dep = float(np.sum(profile.delta_soc_op))
        var_cols = k * n_steps + np.arange(n_steps)

        rows.append(np.full(n_steps, row_at))
        cols.append(var_cols)
        data.append(gain.copy())
        b_ub.append(b.soc_target + b.epsilon - b.soc_init + total_dep)
        labels.append(f"termhi_{k}")
        row_at += 1

        rows.append(np.full(n_steps, row_at))
        cols.append(var_cols)
        data.append(-gain)
        b_ub.append(-(b.soc_target - b.epsilon - b.soc_init + total_dep))
        labels.append(f"termlo_{k}")
        row_at += 1

    a_ub = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(row_at, n_var),
    )

    lb = np.zeros(n_var)
    ub = np.empty(n_var)
    for k, profile in enumerate(instance.profiles):
        per_step = np.where(profile.available, profile.charger_max_kw, 0.0)
        ub[k * n_steps : (k + 1) * n_steps] = per_step
    ub[peak_col] = instance.tariff.grid_cap_kw

    return LpProblem(
        c=c,
        a_ub=a_ub,
        b_ub=np.asarray(b_ub, dtype=float),
        lb=lb,
        ub=ub,
        row_labels=tuple(labels),
        vehicle_ids=tuple(p.vehicle_id for p in instance.profiles),
        n_steps=n_steps,
    )


def _infeasibility_hint(instance: FleetInstance) -> str:
    """Name the constraint family that makes the instance infeasible, if one stands out.

    A max-charge sweep dominates every feasible trajectory pointwise, so a
    floor dip or a terminal miss under it is conclusive for that vehicle.
    """
    grid = instance.grid
    for profile in instance.profiles:
        b = profile.battery
        soc = b.soc_init
        for t in range(grid.n_steps):
            if profile.available[t]:
                gain = soc_gain_percent(
                    profile.charger_max_kw, float(grid.durations_h[t]), b.capacity_kwh
                )
                soc = min(b.soc_max, soc + gain)
            soc -= float(profile.delta_soc_op[t])
            if soc < b.soc_min - 1e-9:
                return (
                    f"SoC floor unavoidable for vehicle {profile.vehicle_id!r} around"
                    f" step {t}: operating depletion outruns chargeable energy"
                )
        if soc < b.soc_target - b.epsilon - 1e-9:
            return (
                f"terminal target unreachable for vehicle {profile.vehicle_id!r}"
                " under its availability and charger rating"
            )
    need = sum(p.energy_requirement_kwh() for p in instance.profiles)
    deliverable = instance.tariff.grid_cap_kw * float(np.sum(grid.durations_h))
    if need > deliverable + 1e-9:
        return (
            f"grid connection capacity too small for the fleet: {need:.3f} kWh needed,"
            f" at most {deliverable:.3f} kWh deliverable"
        )
    return "no single binding constraint family identified"


def solve_lp(problem: LpProblem, instance: FleetInstance) -> LpSolution | InfeasibleProblem:
    """Solve the benchmark LP and rebuild per-vehicle plans from the optimum.

    The solution is accepted only if primal feasibility residuals stay
    within ``RESIDUAL_TOL``; anything else raises, because a silently
    inaccurate benchmark would poison every gap measurement downstream.
    """
    res = linprog(
        problem.c,
        A_ub=problem.a_ub,
        b_ub=problem.b_ub,
        bounds=np.column_stack([problem.lb, problem.ub]),
        method="highs",
    )
    if res.status == 2:
        return InfeasibleProblem(reason=_infeasibility_hint(instance))
    if res.status != 0:
        raise RuntimeError(f"LP solve failed with status {res.status}: {res.message}")

    x = np.clip(res.x, problem.lb, problem.ub)
    residual = float(np.max(problem.a_ub @ x - problem.b_ub, initial=0.0))
    bound_shift = float(np.max(np.abs(x - res.x), initial=0.0))
    residual_max = max(residual, bound_shift)
    if residual_max > RESIDUAL_TOL:
        raise RuntimeError(f"LP solution residual {residual_max:.3e} exceeds {RESIDUAL_TOL}")

    n_steps = problem.n_steps
    peak = float(x[-1])
    plans = tuple(
        build_plan(profile, instance.grid, x[k * n_steps : (k + 1) * n_steps])
        for k, profile in enumerate(instance.profiles)
    )
    energy = float(sum(energy_cost(plan, instance.prices, instance.grid) for plan in plans))
    demand = instance.tariff.peak_price_per_kw * peak
    return LpSolution(
        plans=plans,
        p_max_tariff_kw=peak,
        energy_cost=energy,
        demand_cost=demand,
        total_cost=energy + demand,
        residual_max=residual_max,
    )


def benchmark(instance: FleetInstance) -> LpSolution | InfeasibleProblem:
    """Build and solve the benchmark LP for one instance."""
    return solve_lp(build_lp(instance), instance)


@dataclass(frozen=True)
class BruteForceResult:
    """Exact optimum over the discrete joint action space."""

    plans: tuple[ChargingPlan, ...]
    energy_cost: float
    demand_cost: float
    total_cost: float
    peak_kw: float


def _vehicle_sequences(profile, grid, actions, soc_atol):
    """All per-vehicle power sequences satisfying the SoC band and terminal set."""
    b = profile.battery
    per_step = [
        actions if profile.available[t] else np.array([0.0]) for t in range(grid.n_steps)
    ]
    feasible: list[np.ndarray] = []
    for combo in itertools.product(*per_step):
        soc = b.soc_init
        ok = True
        for t, p in enumerate(combo):
            soc += soc_gain_percent(p, float(grid.durations_h[t]), b.capacity_kwh)
            soc -= float(profile.delta_soc_op[t])
            if soc < b.soc_min - soc_atol or soc > b.soc_max + soc_atol:
                ok = False
                break
        if ok and abs(soc - b.soc_target) <= b.epsilon + soc_atol:
            feasible.append(np.array(combo))
    return feasible


def joint_bruteforce(
    instance: FleetInstance,
    power_step_kw: float = 1.0,
    enumeration_cap: int = 10_000_000,
    soc_atol: float = 1e-9,
) -> BruteForceResult | InfeasibleProblem:
    """Exhaustive discrete optimum, demand charge priced at the realized peak.

    Only intended as a desk-scale oracle: the product of per-step action
    counts across the fleet must stay within ``enumeration_cap``.
    """
    grid = instance.grid
    combos = 1.0
    per_vehicle_actions = []
    for profile in instance.profiles:
        n = profile.charger_max_kw / power_step_kw
        if abs(n - round(n)) > 1e-9:
            raise InputError("charger rating must be a whole number of power steps")
        actions = power_step_kw * np.arange(int(round(n)) + 1)
        per_vehicle_actions.append(actions)
        for t in range(grid.n_steps):
            combos *= len(actions) if profile.available[t] else 1
    if combos > enumeration_cap:
        raise InputError(
            f"joint action space has {combos:.3g} sequences,"
            f" beyond the enumeration guard of {enumeration_cap:g}"
        )

    sequences: list[list[np.ndarray]] = []
    for profile, actions in zip(instance.profiles, per_vehicle_actions):
        seqs = _vehicle_sequences(profile, grid, actions, soc_atol)
        if not seqs:
            return InfeasibleProblem(
                reason=f"vehicle {profile.vehicle_id!r} has no feasible discrete schedule"
            )
        sequences.append(seqs)

    cap = instance.tariff.grid_cap_kw + 1e-9
    durations = grid.durations_h
    step_prices = instance.prices.for_grid(grid)

    # Fold vehicles in one by one, pruning partial aggregates that already
    # break the grid cap (powers only add up, so pruning is safe).
    agg = np.stack(sequences[0])
    cost = agg @ (step_prices * durations)
    index = np.arange(len(sequences[0]))[:, None]
    keep = np.max(agg, axis=1) <= cap
    agg, cost, index = agg[keep], cost[keep], index[keep]
    for seqs in sequences[1:]:
        block = np.stack(seqs)
        block_cost = block @ (step_prices * durations)
        n_prev, n_new = len(agg), len(block)
        agg = (agg[:, None, :] + block[None, :, :]).reshape(n_prev * n_new, -1)
        cost = (cost[:, None] + block_cost[None, :]).reshape(-1)
        index = np.concatenate(
            [
                np.repeat(index, n_new, axis=0),
                np.tile(np.arange(n_new)[:, None], (n_prev, 1)),
            ],
            axis=1,
        )
        keep = np.max(agg, axis=1) <= cap
        agg, cost, index = agg[keep], cost[keep], index[keep]
        if len(agg) == 0:
            return InfeasibleProblem(
                reason="no joint schedule satisfies the grid connection cap"
            )

    peaks = np.max(agg, axis=1)
    totals = cost + instance.tariff.peak_price_per_kw * peaks
    best = int(np.argmin(totals))
    chosen = index[best]
    plans = tuple(
        build_plan(profile, grid, sequences[k][chosen[k]])
        for k, profile in enumerate(instance.profiles)
    )
    return BruteForceResult(
        plans=plans,
        energy_cost=float(cost[best]),
        demand_cost=float(instance.tariff.peak_price_per_kw * peaks[best]),
        total_cost=float(totals[best]),
        peak_kw=float(peaks[best]),
    )


def lp_text(problem: LpProblem) -> str:
    """Serialize the LP in the plain fixed-format text used by desktop solvers.

    Grammar: a ``Minimize`` section with one objective row, a ``Subject To``
    section with one named row per inequality, a ``Bounds`` section with one
    line per variable, and a closing ``End``.  Coefficients are written in
    full precision, joined by explicit signs.
    """
    names = problem.variable_names()

    def terms(cols: np.ndarray, coefs: np.ndarray) -> str:
        parts = []
        for col, coef in zip(cols, coefs):
            sign = "-" if coef < 0 else "+"
            parts.append(f"{sign} {abs(coef):.12g} {names[col]}")
        joined = " ".join(parts)
        return joined[2:] if joined.startswith("+ ") else joined

    lines = [f"\\ depot charging benchmark: {problem.n_vehicles} vehicles, {problem.n_steps} steps"]
    obj_cols = np.nonzero(problem.c)[0]
    lines.append("Minimize")
    lines.append(f" obj: {terms(obj_cols, problem.c[obj_cols])}")
    lines.append("Subject To")
    a_csr = problem.a_ub
    for r, label in enumerate(problem.row_labels):
        start, stop = a_csr.indptr[r], a_csr.indptr[r + 1]
        row_terms = terms(a_csr.indices[start:stop], a_csr.data[start:stop])
        lines.append(f" {label}: {row_terms} <= {problem.b_ub[r]:.12g}")
    lines.append("Bounds")
    for i, name in enumerate(names):
        lines.append(f" {problem.lb[i]:.12g} <= {name} <= {problem.ub[i]:.12g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
