"""CSV and JSON readers/writers for every artifact the toolkit exchanges.

Formats:
  spot prices     CSV ``hour_start_iso8601,price``
  operation log   CSV ``timestamp_iso8601,soc_percent,state``
  fleet instance  JSON (grid, prices, tariff, vehicle step records)
  month report    JSON (round-trips exactly)
  power series    CSV ``t_start,duration_h,aggregate_kw,price``

All timestamps are naive ISO 8601.  Malformed input raises InputError
naming the file and the offending field or row.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime
from pathlib import Path

import numpy as np

from .ingest import ChargingSession, LogSample, OperationLog
from .model import (
    BatteryParams,
    FleetInstance,
    InputError,
    SpotPriceSeries,
    TariffModel,
    TimeGrid,
    VehicleProfile,
)
from .reporting import MonthReport

PRICE_HEADER = ["hour_start_iso8601", "price"]
LOG_HEADER = ["timestamp_iso8601", "soc_percent", "state"]
SERIES_HEADER = ["t_start", "duration_h", "aggregate_kw", "price"]


def _parse_iso(text: str, path: Path, field: str, row: int) -> datetime:
    try:
        return datetime.fromisoformat(text)
    except ValueError as exc:
        raise InputError(f"{path}: row {row}: bad {field} {text!r}") from exc


def _parse_float(text: str, path: Path, field: str, row: int) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise InputError(f"{path}: row {row}: bad {field} {text!r}") from exc


def _open_csv(path: Path, expected_header: list[str]):
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    reader = csv.reader(handle)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != expected_header:
        handle.close()
        raise InputError(
            f"{path}: expected header {','.join(expected_header)!r}, got {header!r}"
        )
    return handle, reader


def write_price_csv(prices: SpotPriceSeries, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(PRICE_HEADER)
        for hour in sorted(prices.hourly):
            writer.writerow([hour.isoformat(), repr(prices.hourly[hour])])


def read_price_csv(path: str | Path) -> SpotPriceSeries:
    path = Path(path)
    handle, reader = _open_csv(path, PRICE_HEADER)
    hourly: dict[datetime, float] = {}
    with handle:
        for i, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise InputError(f"{path}: row {i}: expected 2 columns, got {len(row)}")
            hour = _parse_iso(row[0], path, "hour_start_iso8601", i)
            hourly[hour] = _parse_float(row[1], path, "price", i)
    if not hourly:
        raise InputError(f"{path}: no price rows")
    return SpotPriceSeries(hourly)


def write_log_csv(log: OperationLog, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOG_HEADER)
        for s in log.samples:
            writer.writerow([s.timestamp.isoformat(), repr(s.soc_percent), s.state])


def read_log_csv(path: str | Path, vehicle_id: str | None = None) -> OperationLog:
    """Read one vehicle's log; the id defaults to the file's stem."""
    path = Path(path)
    handle, reader = _open_csv(path, LOG_HEADER)
    samples: list[LogSample] = []
    with handle:
        for i, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise InputError(f"{path}: row {i}: expected 3 columns, got {len(row)}")
            samples.append(
                LogSample(
                    timestamp=_parse_iso(row[0], path, "timestamp_iso8601", i),
                    soc_percent=_parse_float(row[1], path, "soc_percent", i),
                    state=row[2].strip(),
                )
            )
    if not samples:
        raise InputError(f"{path}: no log rows")
    return OperationLog(vehicle_id=vehicle_id or path.stem, samples=tuple(samples))


# --- fleet instance JSON ---------------------------------------------------


def _battery_to_dict(b: BatteryParams) -> dict:
    return dict(
        capacity_kwh=b.capacity_kwh,
        soc_min=b.soc_min,
        soc_max=b.soc_max,
        soc_init=b.soc_init,
        soc_target=b.soc_target,
        epsilon=b.epsilon,
    )


def instance_to_dict(instance: FleetInstance) -> dict:
    grid = instance.grid
    t = instance.tariff
    return dict(
        month_id=grid.month_id,
        grid=dict(
            starts=[s.isoformat() for s in grid.starts],
            durations_h=[float(d) for d in grid.durations_h],
        ),
        prices=dict(
            currency=instance.prices.currency,
            hourly={h.isoformat(): p for h, p in sorted(instance.prices.hourly.items())},
        ),
        tariff=dict(
            peak_price_per_kw=t.peak_price_per_kw,
            grid_cap_kw=t.grid_cap_kw,
            candidate_lo_kw=t.candidate_lo_kw,
            candidate_hi_kw=t.candidate_hi_kw,
            candidate_step_kw=t.candidate_step_kw,
        ),
        vehicles=[
            dict(
                vehicle_id=p.vehicle_id,
                charger_max_kw=p.charger_max_kw,
                battery=_battery_to_dict(p.battery),
                delta_soc_op=[float(v) for v in p.delta_soc_op],
                idle_window_h=[float(v) for v in p.idle_window_h],
                available=[bool(v) for v in p.available],
            )
            for p in instance.profiles
        ],
    )


def _require(mapping: dict, key: str, where: str) -> object:
    if key not in mapping:
        raise InputError(f"{where}: missing field {key!r}")
    return mapping[key]


def instance_from_dict(data: dict, where: str = "instance") -> FleetInstance:
    grid_d = _require(data, "grid", where)
    grid = TimeGrid(
        starts=tuple(
            datetime.fromisoformat(s) for s in _require(grid_d, "starts", f"{where}.grid")
        ),
        durations_h=np.asarray(_require(grid_d, "durations_h", f"{where}.grid"), dtype=float),
        month_id=str(_require(data, "month_id", where)),
    )
    prices_d = _require(data, "prices", where)
    prices = SpotPriceSeries(
        hourly={
            datetime.fromisoformat(h): float(p)
            for h, p in _require(prices_d, "hourly", f"{where}.prices").items()
        },
        currency=str(prices_d.get("currency", "EUR")),
    )
    tariff = TariffModel(**_require(data, "tariff", where))
    profiles = []
    for i, v in enumerate(_require(data, "vehicles", where)):
        label = f"{where}.vehicles[{i}]"
        profiles.append(
            VehicleProfile(
                vehicle_id=str(_require(v, "vehicle_id", label)),
                battery=BatteryParams(**_require(v, "battery", label)),
                charger_max_kw=float(_require(v, "charger_max_kw", label)),
                delta_soc_op=np.asarray(_require(v, "delta_soc_op", label), dtype=float),
                idle_window_h=np.asarray(_require(v, "idle_window_h", label), dtype=float),
                available=np.asarray(_require(v, "available", label), dtype=bool),
            )
        )
    return FleetInstance(grid=grid, prices=prices, tariff=tariff, profiles=tuple(profiles))


def write_instance_json(instance: FleetInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1))


def read_instance_json(path: str | Path) -> FleetInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data, where=str(path))


# --- reconstructed session JSON ---------------------------------------------


def write_sessions_json(sessions, path: str | Path) -> None:
    rows = [
        dict(
            vehicle_id=s.vehicle_id,
            start=s.start.isoformat(),
            duration_h=s.duration_h,
            power_kw=s.power_kw,
            energy_kwh=s.energy_kwh,
            clipped=s.clipped,
        )
        for s in sessions
    ]
    Path(path).write_text(json.dumps(rows, indent=1))


def read_sessions_json(path: str | Path) -> tuple[ChargingSession, ...]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a list of sessions")
    sessions = []
    for i, row in enumerate(data):
        label = f"{path}[{i}]"
        sessions.append(
            ChargingSession(
                vehicle_id=str(_require(row, "vehicle_id", label)),
                start=datetime.fromisoformat(str(_require(row, "start", label))),
                duration_h=float(_require(row, "duration_h", label)),
                power_kw=float(_require(row, "power_kw", label)),
                energy_kwh=float(_require(row, "energy_kwh", label)),
                clipped=bool(row.get("clipped", False)),
            )
        )
    return tuple(sessions)


# --- month report JSON -----------------------------------------------------


def report_to_dict(report: MonthReport) -> dict:
    return dict(
        month_id=report.month_id,
        method=report.method,
        energy_cost=report.energy_cost,
        demand_cost=report.demand_cost,
        total_cost=report.total_cost,
        peak_kw=report.peak_kw,
        step_starts=[s.isoformat() for s in report.step_starts],
        step_durations_h=list(report.step_durations_h),
        aggregate_kw=list(report.aggregate_kw),
        prices=list(report.prices),
        soc_by_vehicle={k: list(v) for k, v in sorted(report.soc_by_vehicle.items())},
        runtime_seconds=report.runtime_seconds,
        cost_gap_vs_lp=report.cost_gap_vs_lp,
        peak_gap_vs_lp=report.peak_gap_vs_lp,
    )


def report_from_dict(data: dict, where: str = "report") -> MonthReport:
    return MonthReport(
        month_id=str(_require(data, "month_id", where)),
        method=str(_require(data, "method", where)),
        energy_cost=float(_require(data, "energy_cost", where)),
        demand_cost=float(_require(data, "demand_cost", where)),
        total_cost=float(_require(data, "total_cost", where)),
        peak_kw=float(_require(data, "peak_kw", where)),
        step_starts=tuple(
            datetime.fromisoformat(s) for s in _require(data, "step_starts", where)
        ),
        step_durations_h=tuple(_require(data, "step_durations_h", where)),
        aggregate_kw=tuple(_require(data, "aggregate_kw", where)),
        prices=tuple(_require(data, "prices", where)),
        soc_by_vehicle={
            k: tuple(v) for k, v in _require(data, "soc_by_vehicle", where).items()
        },
        runtime_seconds=float(_require(data, "runtime_seconds", where)),
        cost_gap_vs_lp=data.get("cost_gap_vs_lp"),
        peak_gap_vs_lp=data.get("peak_gap_vs_lp"),
    )


def write_report_json(report: MonthReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=1))


def read_report_json(path: str | Path) -> MonthReport:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    return report_from_dict(data, where=str(path))


def write_series_csv(report: MonthReport, path: str | Path) -> None:
    """Plot-ready aggregate power series with stable column order."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SERIES_HEADER)
        rows = zip(
            report.step_starts, report.step_durations_h, report.aggregate_kw, report.prices
        )
        for start, dur, agg, price in rows:
            writer.writerow([start.isoformat(), repr(dur), repr(agg), repr(price)])
