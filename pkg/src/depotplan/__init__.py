"""Depot-charging planning toolkit: sequential DP planner, LP benchmark, ingestion, synthesis."""

from .dp import DpConfig, Infeasible, solve_vehicle
from .ingest import (
    BaselineResult,
    ChargingSession,
    DataInconsistencyError,
    LogSample,
    Operation,
    OperationLog,
    build_profile,
    detect_sessions,
    uncontrolled_baseline,
)
from .lp import InfeasibleProblem, LpSolution, build_lp, joint_bruteforce, solve_lp
from .model import (
    BatteryParams,
    ChargingPlan,
    FleetCost,
    FleetInstance,
    InputError,
    SpotPriceSeries,
    TariffModel,
    TimeGrid,
    VehicleProfile,
    Violation,
    aggregate_power,
    build_plan,
    build_time_grid,
    energy_cost,
    fleet_total_cost,
    soc_trajectory,
    validate_plan,
)
from .presets import ShuttlePreset, regression_instance, three_shuttle_preset
from .reporting import (
    GapSummary,
    MonthReport,
    baseline_report,
    compare,
    lp_report,
    seqdp_report,
)
from .seqdp import NoFeasibleTariff, SeqDpResult, TariffCandidateResult, plan_month
from .synth import SynthConfig, SynthResult, synthesize_fleet

__all__ = [
    "BaselineResult",
    "BatteryParams",
    "ChargingPlan",
    "ChargingSession",
    "DataInconsistencyError",
    "DpConfig",
    "FleetCost",
    "FleetInstance",
    "GapSummary",
    "Infeasible",
    "InfeasibleProblem",
    "InputError",
    "LogSample",
    "LpSolution",
    "MonthReport",
    "NoFeasibleTariff",
    "Operation",
    "OperationLog",
    "SeqDpResult",
    "ShuttlePreset",
    "SpotPriceSeries",
    "SynthConfig",
    "SynthResult",
    "TariffCandidateResult",
    "TariffModel",
    "TimeGrid",
    "VehicleProfile",
    "Violation",
    "aggregate_power",
    "baseline_report",
    "build_lp",
    "build_plan",
    "build_profile",
    "build_time_grid",
    "compare",
    "detect_sessions",
    "energy_cost",
    "fleet_total_cost",
    "joint_bruteforce",
    "lp_report",
    "plan_month",
    "regression_instance",
    "seqdp_report",
    "soc_trajectory",
    "solve_lp",
    "solve_vehicle",
    "synthesize_fleet",
    "three_shuttle_preset",
    "uncontrolled_baseline",
    "validate_plan",
]
