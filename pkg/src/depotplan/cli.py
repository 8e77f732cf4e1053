"""Command-line entry point.

Verbs:
  ingest    operation logs + prices -> fleet instance JSON + sessions JSON
  synth     ready-made preset -> fleet instance JSON (+ sessions for the
            shuttle depot)
  plan      fleet instance(s) -> per-month report JSON + series CSV
  compare   report files -> gap summary JSON
  sweep     regression fleets across sizes and seeds -> gap distribution

Every verb takes a single declarative JSON config via -c; `--seed`
overrides the config's seed, `-o` (or the DEPOTPLAN_OUT environment
variable) overrides the output directory.  Exit codes: 0 success, 2 bad
input, 3 infeasible problem.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime
from pathlib import Path

import numpy as np

from .dp import DpConfig
from .fileio import (
    read_instance_json,
    read_log_csv,
    read_price_csv,
    read_report_json,
    read_sessions_json,
    write_instance_json,
    write_report_json,
    write_sessions_json,
    write_series_csv,
)
from .ingest import build_profile, detect_sessions, uncontrolled_baseline
from .lp import InfeasibleProblem, build_lp, solve_lp
from .model import (
    BatteryParams,
    FleetInstance,
    InputError,
    TariffModel,
    build_time_grid,
)
from .presets import regression_instance, three_shuttle_preset
from .reporting import (
    MonthReport,
    baseline_report,
    compare,
    lp_report,
    seqdp_report,
    with_lp_gaps,
)
from .seqdp import NoFeasibleTariff, plan_month

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


class InfeasibleError(RuntimeError):
    """Raised internally to funnel infeasible outcomes to exit code 3."""


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return data


def _need(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise InputError(f"{where}: missing config field {key!r}")
    return cfg[key]


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("DEPOTPLAN_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_when(text: str, where: str) -> datetime:
    try:
        return datetime.fromisoformat(str(text))
    except ValueError as exc:
        raise InputError(f"{where}: bad timestamp {text!r}") from exc


def _write_report(report: MonthReport, out: Path) -> None:
    stem = f"{report.month_id}_{report.method}"
    write_report_json(report, out / f"{stem}.report.json")
    write_series_csv(report, out / f"{stem}.series.csv")


def _print_report(report: MonthReport) -> None:
    line = (
        f"{report.month_id} {report.method}: total {report.total_cost:.2f} "
        f"(energy {report.energy_cost:.2f}, demand {report.demand_cost:.2f}), "
        f"peak {report.peak_kw:.2f} kW, runtime {report.runtime_seconds:.2f} s"
    )
    print(line)


# --- ingest ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = _load_config(args.config)
    where = args.config
    out = _out_dir(args)

    span_start = _parse_when(_need(cfg, "span_start", where), where)
    span_end = _parse_when(_need(cfg, "span_end", where), where)
    month_id = str(_need(cfg, "month_id", where))
    battery = BatteryParams(**_need(cfg, "battery", where))
    tariff = TariffModel(**_need(cfg, "tariff", where))
    charger_kw = float(_need(cfg, "charger_max_kw", where))
    session_kw = float(cfg.get("session_power_kw", 5.0))

    prices = read_price_csv(_need(cfg, "prices", where))
    grid = build_time_grid(span_start, span_end, month_id)

    profiles = []
    sessions = []
    for log_path in _need(cfg, "logs", where):
        log = read_log_csv(log_path)
        profiles.append(build_profile(log, grid, battery, charger_kw))
        sessions.extend(
            detect_sessions(log, capacity_kwh=battery.capacity_kwh, power_kw=session_kw)
        )

    instance = FleetInstance(grid=grid, prices=prices, tariff=tariff, profiles=tuple(profiles))
    write_instance_json(instance, out / "instance.json")
    write_sessions_json(sessions, out / "sessions.json")
    print(
        f"{month_id}: ingested {len(profiles)} vehicles, "
        f"{len(sessions)} sessions -> {out / 'instance.json'}"
    )
    return EXIT_OK


# --- synth ---------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = _load_config(args.config)
    where = args.config
    out = _out_dir(args)
    preset = str(_need(cfg, "preset", where))

    if preset == "three_shuttle":
        year = int(_need(cfg, "year", where))
        month = int(_need(cfg, "month", where))
        bundle = three_shuttle_preset(year, month)
        write_instance_json(bundle.instance, out / "instance.json")
        write_sessions_json(bundle.sessions, out / "sessions.json")
        print(
            f"{bundle.instance.grid.month_id}: three-shuttle preset -> "
            f"{out / 'instance.json'}"
        )
        return EXIT_OK
    if preset == "regression":
        seed = int(cfg.get("seed", 0)) if args.seed is None else args.seed
        kwargs = {}
        if "n_days" in cfg:
            kwargs["n_days"] = int(cfg["n_days"])
        if "span_start" in cfg:
            kwargs["span_start"] = _parse_when(cfg["span_start"], where)
        instance, _ = regression_instance(int(_need(cfg, "n_vehicles", where)), seed, **kwargs)
        write_instance_json(instance, out / "instance.json")
        print(
            f"{instance.grid.month_id}: regression fleet of {len(instance.profiles)} "
            f"(seed {seed}) -> {out / 'instance.json'}"
        )
        return EXIT_OK
    raise InputError(f"{where}: unknown preset {preset!r}")


# --- plan ----------------------------------------------------------------


def _chained(instance: FleetInstance, terminal_soc: dict[str, float]) -> FleetInstance:
    """Instance whose initial SoCs continue from the previous month's end."""
    profiles = []
    for p in instance.profiles:
        if p.vehicle_id in terminal_soc:
            battery = replace(p.battery, soc_init=terminal_soc[p.vehicle_id])
            profiles.append(replace(p, battery=battery))
        else:
            profiles.append(p)
    return replace(instance, profiles=tuple(profiles))


def _plan_seqdp(instance: FleetInstance) -> tuple[MonthReport, dict[str, float]]:
    result = plan_month(instance, DpConfig())
    if isinstance(result, NoFeasibleTariff):
        raise InfeasibleError(result.reason)
    report = seqdp_report(result, instance)
    terminal = {p.vehicle_id: float(p.soc[-1]) for p in result.best.plans}
    return report, terminal


def _plan_lp(instance: FleetInstance) -> tuple[MonthReport, dict[str, float]]:
    t0 = time.perf_counter()
    solution = solve_lp(build_lp(instance), instance)
    runtime = time.perf_counter() - t0
    if isinstance(solution, InfeasibleProblem):
        raise InfeasibleError(solution.reason)
    report = lp_report(solution, instance, runtime_seconds=runtime)
    terminal = {p.vehicle_id: float(p.soc[-1]) for p in solution.plans}
    return report, terminal


def _plan_uncontrolled(instance: FleetInstance, sessions_path: str) -> MonthReport:
    sessions = read_sessions_json(sessions_path)
    span_start, span_end = instance.grid.span
    baseline = uncontrolled_baseline(
        sessions, span_start, span_end, instance.prices,
        instance.tariff, instance.grid.month_id,
    )
    return baseline_report(baseline, instance.prices)


def cmd_plan(args) -> int:
    cfg = _load_config(args.config)
    where = args.config
    out = _out_dir(args)
    method = str(_need(cfg, "method", where))
    if method not in ("seqdp", "lp", "both", "uncontrolled"):
        raise InputError(f"{where}: unknown method {method!r}")
    instance_paths = _need(cfg, "instances", where)
    chain = bool(cfg.get("chain_months", False))
    sessions_paths = cfg.get("sessions", [])
    if method == "uncontrolled" and len(sessions_paths) != len(instance_paths):
        raise InputError(f"{where}: 'uncontrolled' needs one sessions file per instance")

    carry: dict[str, dict[str, float]] = {"seqdp": {}, "lp": {}}
    for i, path in enumerate(instance_paths):
        instance = read_instance_json(path)
        if method in ("seqdp", "both"):
            inst = _chained(instance, carry["seqdp"]) if chain else instance
            dp_rep, terminal = _plan_seqdp(inst)
            carry["seqdp"] = terminal
        if method in ("lp", "both"):
            inst = _chained(instance, carry["lp"]) if chain else instance
            lp_rep, terminal = _plan_lp(inst)
            carry["lp"] = terminal
        if method == "uncontrolled":
            un_rep = _plan_uncontrolled(instance, sessions_paths[i])
            _write_report(un_rep, out)
            _print_report(un_rep)
            continue

        if method == "both":
            dp_rep = with_lp_gaps(dp_rep, lp_rep)
            summary = compare(seqdp=dp_rep, lp=lp_rep)
            print(
                f"{dp_rep.month_id} gaps: cost {summary.cost_gap_vs_lp * 100:.2f}%"
                f", peak {summary.peak_gap_vs_lp * 100:.2f}%"
            )
        if method in ("seqdp", "both"):
            _write_report(dp_rep, out)
            _print_report(dp_rep)
        if method in ("lp", "both"):
            _write_report(lp_rep, out)
            _print_report(lp_rep)
    return EXIT_OK


# --- compare ---------------------------------------------------------------


def cmd_compare(args) -> int:
    out = _out_dir(args)
    by_method: dict[str, MonthReport] = {}
    for path in args.reports:
        report = read_report_json(path)
        if report.method in by_method:
            raise InputError(f"{path}: duplicate {report.method!r} report")
        by_method[report.method] = report
    summary = compare(
        seqdp=by_method.get("seqdp"),
        lp=by_method.get("lp"),
        uncontrolled=by_method.get("uncontrolled"),
    )
    payload = {
        "month_id": summary.month_id,
        "cost_gap_vs_lp": summary.cost_gap_vs_lp,
        "peak_gap_vs_lp": summary.peak_gap_vs_lp,
        "seqdp_cost_reduction": summary.seqdp_cost_reduction,
        "seqdp_peak_reduction": summary.seqdp_peak_reduction,
        "lp_cost_reduction": summary.lp_cost_reduction,
        "lp_peak_reduction": summary.lp_peak_reduction,
    }
    target = out / f"{summary.month_id}_gaps.json"
    target.write_text(json.dumps(payload, indent=1))
    for key, value in payload.items():
        if isinstance(value, float):
            print(f"{key}: {value * 100:.2f}%")
    print(f"-> {target}")
    return EXIT_OK


# --- sweep -----------------------------------------------------------------


def _sweep_one(k: int, seed: int, n_days: int) -> dict:
    instance, _ = regression_instance(k, seed, n_days=n_days)
    t0 = time.perf_counter()
    lp = solve_lp(build_lp(instance), instance)
    lp_runtime = time.perf_counter() - t0
    if isinstance(lp, InfeasibleProblem):
        raise InfeasibleError(f"K={k} seed={seed}: {lp.reason}")
    result = plan_month(instance)
    if isinstance(result, NoFeasibleTariff):
        raise InfeasibleError(f"K={k} seed={seed}: {result.reason}")
    return dict(
        n_vehicles=k,
        seed=seed,
        lp_total=lp.total_cost,
        seqdp_total=result.best.total_cost,
        lp_peak_kw=lp.p_max_tariff_kw,
        seqdp_cap_kw=result.best.p_max_tariff_kw,
        cost_gap=(result.best.total_cost - lp.total_cost) / lp.total_cost,
        peak_gap=(result.best.p_max_tariff_kw - lp.p_max_tariff_kw) / lp.p_max_tariff_kw,
        lp_runtime_seconds=lp_runtime,
        seqdp_runtime_seconds=result.runtime_seconds,
    )


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    where = args.config
    out = _out_dir(args)
    sizes = [int(k) for k in _need(cfg, "fleet_sizes", where)]
    n_seeds = int(cfg.get("n_seeds", 15))
    seed_base = int(cfg.get("seed_base", 0)) if args.seed is None else args.seed
    n_days = int(cfg.get("n_days", 14))
    workers = int(cfg.get("workers", 0)) or min(4, os.cpu_count() or 1)

    tasks = [(k, seed_base + s) for k in sizes for s in range(n_seeds)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        runs = list(pool.map(lambda ks: _sweep_one(*ks, n_days), tasks))

    summary: dict[str, dict] = {}
    for k in sizes:
        rows = [r for r in runs if r["n_vehicles"] == k]
        cost_gaps = [r["cost_gap"] for r in rows]
        peak_gaps = [r["peak_gap"] for r in rows]
        summary[str(k)] = dict(
            runs=rows,
            median_cost_gap=float(np.median(cost_gaps)),
            max_cost_gap=float(np.max(cost_gaps)),
            median_peak_gap=float(np.median(peak_gaps)),
            max_peak_gap=float(np.max(peak_gaps)),
        )
        print(
            f"K={k}: median cost gap {np.median(cost_gaps) * 100:.2f}%, "
            f"max {np.max(cost_gaps) * 100:.2f}%, "
            f"median peak gap {np.median(peak_gaps) * 100:.2f}%"
        )
    target = out / "sweep_summary.json"
    target.write_text(json.dumps(summary, indent=1))
    print(f"-> {target}")
    return EXIT_OK


# --- entry -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depotplan",
        description="Depot charging planner: ingest, synthesize, plan, compare.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p: argparse.ArgumentParser, config: bool = True) -> None:
        if config:
            p.add_argument("-c", "--config", required=True, help="JSON config file")
        p.add_argument("-o", "--out", help="output directory (or set DEPOTPLAN_OUT)")
        p.add_argument("--seed", type=int, help="override the config seed")

    common(sub.add_parser("ingest", help="logs + prices -> instance JSON"))
    common(sub.add_parser("synth", help="preset -> instance JSON"))
    common(sub.add_parser("plan", help="instance JSON -> reports"))
    compare_p = sub.add_parser("compare", help="report files -> gap summary")
    compare_p.add_argument("reports", nargs="+", help="report JSON files (1-3 methods)")
    common(compare_p, config=False)
    common(sub.add_parser("sweep", help="regression gap sweep across sizes and seeds"))
    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "plan": cmd_plan,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
