import json
from datetime import datetime, timedelta

import numpy as np
import pytest

from depotplan.cli import main
from depotplan.fileio import (
    read_instance_json,
    read_report_json,
    write_instance_json,
    write_log_csv,
    write_price_csv,
)
from depotplan.ingest import LogSample, OperationLog
from depotplan.model import (
    BatteryParams,
    FleetInstance,
    SpotPriceSeries,
    TariffModel,
    VehicleProfile,
    build_time_grid,
)
from depotplan.presets import regression_instance, synthetic_price_series


def write_config(tmp_path, name, payload) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture()
def small_instance_path(tmp_path):
    instance, _ = regression_instance(2, seed=1, n_days=2)
    path = tmp_path / "instance.json"
    write_instance_json(instance, path)
    return str(path)


def test_plan_both_writes_reports_and_gaps(tmp_path, small_instance_path, capsys):
    cfg = write_config(
        tmp_path, "plan.json", {"method": "both", "instances": [small_instance_path]}
    )
    assert main(["plan", "-c", cfg, "-o", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "gaps: cost" in out

    dp = read_report_json(tmp_path / "out" / "2022-06_seqdp.report.json")
    lp = read_report_json(tmp_path / "out" / "2022-06_lp.report.json")
    assert dp.cost_gap_vs_lp is not None and dp.cost_gap_vs_lp >= 0.0
    assert lp.cost_gap_vs_lp is None
    assert (tmp_path / "out" / "2022-06_seqdp.series.csv").exists()
    assert (tmp_path / "out" / "2022-06_lp.series.csv").exists()


def test_plan_seqdp_only_omits_gaps(tmp_path, small_instance_path):
    cfg = write_config(
        tmp_path, "plan.json", {"method": "seqdp", "instances": [small_instance_path]}
    )
    assert main(["plan", "-c", cfg, "-o", str(tmp_path / "out")]) == 0
    dp = read_report_json(tmp_path / "out" / "2022-06_seqdp.report.json")
    assert dp.cost_gap_vs_lp is None
    assert not (tmp_path / "out" / "2022-06_lp.report.json").exists()


def test_plan_chains_months(tmp_path):
    paths = []
    for month, start in ((6, datetime(2022, 6, 1)), (7, datetime(2022, 7, 1))):
        instance, _ = regression_instance(2, seed=2, n_days=2, span_start=start)
        path = tmp_path / f"instance_{month}.json"
        write_instance_json(instance, path)
        paths.append(str(path))
    cfg = write_config(
        tmp_path,
        "plan.json",
        {"method": "seqdp", "instances": paths, "chain_months": True},
    )
    assert main(["plan", "-c", cfg, "-o", str(tmp_path / "out")]) == 0
    june = read_report_json(tmp_path / "out" / "2022-06_seqdp.report.json")
    july = read_report_json(tmp_path / "out" / "2022-07_seqdp.report.json")
    for vid, soc in july.soc_by_vehicle.items():
        assert soc[0] == pytest.approx(june.soc_by_vehicle[vid][-1])


def test_compare_verb_writes_summary(tmp_path, small_instance_path, capsys):
    cfg = write_config(
        tmp_path, "plan.json", {"method": "both", "instances": [small_instance_path]}
    )
    out = tmp_path / "out"
    assert main(["plan", "-c", cfg, "-o", str(out)]) == 0
    assert (
        main(
            [
                "compare",
                str(out / "2022-06_seqdp.report.json"),
                str(out / "2022-06_lp.report.json"),
                "-o",
                str(out),
            ]
        )
        == 0
    )
    summary = json.loads((out / "2022-06_gaps.json").read_text())
    assert summary["cost_gap_vs_lp"] >= 0.0
    assert summary["seqdp_cost_reduction"] is None  # no uncontrolled report given


def test_ingest_builds_instance_and_sessions(tmp_path):
    span_start = datetime(2022, 6, 1)
    log = OperationLog(
        vehicle_id="busA",
        samples=(
            LogSample(span_start, 100.0, "operating"),
            LogSample(span_start + timedelta(hours=2), 90.0, "operating"),
            LogSample(span_start + timedelta(hours=2.5), 90.0, "idle"),
            LogSample(span_start + timedelta(hours=4), 90.0, "operating"),
            LogSample(span_start + timedelta(hours=5), 85.0, "operating"),
            LogSample(span_start + timedelta(hours=6), 95.0, "idle"),
        ),
    )
    log_path = tmp_path / "busA.csv"
    write_log_csv(log, log_path)
    prices = synthetic_price_series(span_start, span_start + timedelta(hours=8), seed=1)
    price_path = tmp_path / "prices.csv"
    write_price_csv(prices, price_path)

    cfg = write_config(
        tmp_path,
        "ingest.json",
        {
            "logs": [str(log_path)],
            "prices": str(price_path),
            "span_start": "2022-06-01T00:00:00",
            "span_end": "2022-06-01T08:00:00",
            "month_id": "2022-06",
            "battery": {
                "capacity_kwh": 20.0,
                "soc_min": 20.0,
                "soc_max": 100.0,
                "soc_init": 100.0,
                "soc_target": 90.0,
                "epsilon": 1.0,
            },
            "charger_max_kw": 11.0,
            "tariff": {
                "peak_price_per_kw": 4.0,
                "grid_cap_kw": 15.0,
                "candidate_lo_kw": 0.0,
                "candidate_hi_kw": 15.0,
                "candidate_step_kw": 1.0,
            },
        },
    )
    out = tmp_path / "out"
    assert main(["ingest", "-c", cfg, "-o", str(out)]) == 0

    instance = read_instance_json(out / "instance.json")
    assert [p.vehicle_id for p in instance.profiles] == ["busA"]
    assert instance.grid.n_steps == 8
    sessions = json.loads((out / "sessions.json").read_text())
    assert len(sessions) == 1
    assert sessions[0]["energy_kwh"] == pytest.approx(2.0)  # 10 points on 20 kWh

    # uncontrolled planning runs off the emitted files
    plan_cfg = write_config(
        tmp_path,
        "plan_unc.json",
        {
            "method": "uncontrolled",
            "instances": [str(out / "instance.json")],
            "sessions": [str(out / "sessions.json")],
        },
    )
    assert main(["plan", "-c", plan_cfg, "-o", str(out)]) == 0
    report = read_report_json(out / "2022-06_uncontrolled.report.json")
    assert report.peak_kw == pytest.approx(5.0)


def test_synth_seed_override_changes_fleet(tmp_path):
    cfg = write_config(
        tmp_path,
        "synth.json",
        {"preset": "regression", "n_vehicles": 3, "seed": 0, "n_days": 2},
    )
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["synth", "-c", cfg, "-o", str(out_a)]) == 0
    assert main(["synth", "-c", cfg, "-o", str(out_b), "--seed", "5"]) == 0
    a = read_instance_json(out_a / "instance.json")
    b = read_instance_json(out_b / "instance.json")
    assert any(
        not np.array_equal(pa.delta_soc_op, pb.delta_soc_op)
        for pa, pb in zip(a.profiles, b.profiles)
    )


def test_synth_three_shuttle_emits_sessions(tmp_path):
    cfg = write_config(
        tmp_path, "synth.json", {"preset": "three_shuttle", "year": 2022, "month": 6}
    )
    out = tmp_path / "out"
    assert main(["synth", "-c", cfg, "-o", str(out)]) == 0
    assert (out / "instance.json").exists()
    sessions = json.loads((out / "sessions.json").read_text())
    assert len(sessions) == 90


def test_output_dir_env_var(tmp_path, monkeypatch):
    cfg = write_config(
        tmp_path,
        "synth.json",
        {"preset": "regression", "n_vehicles": 2, "seed": 0, "n_days": 2},
    )
    target = tmp_path / "envout"
    monkeypatch.setenv("DEPOTPLAN_OUT", str(target))
    assert main(["synth", "-c", cfg]) == 0
    assert (target / "instance.json").exists()


def test_missing_config_field_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.json", {"method": "both"})
    assert main(["plan", "-c", cfg, "-o", str(tmp_path)]) == 2
    assert "instances" in capsys.readouterr().err


def test_unreadable_config_exits_two(tmp_path):
    assert main(["plan", "-c", str(tmp_path / "nope.json"), "-o", str(tmp_path)]) == 2


def test_infeasible_instance_exits_three(tmp_path, capsys):
    start = datetime(2022, 6, 1)
    grid = build_time_grid(start, start + timedelta(hours=2), "2022-06")
    battery = BatteryParams(
        capacity_kwh=50.0, soc_min=0.0, soc_max=100.0,
        soc_init=0.0, soc_target=100.0, epsilon=1.0,
    )
    profile = VehicleProfile(
        vehicle_id="v0",
        battery=battery,
        charger_max_kw=11.0,
        delta_soc_op=np.zeros(2),
        idle_window_h=np.full(2, 2.0),
        available=np.ones(2, dtype=bool),
    )
    prices = SpotPriceSeries({start: 0.1, start + timedelta(hours=1): 0.1})
    tariff = TariffModel(
        peak_price_per_kw=4.0, grid_cap_kw=15.0,
        candidate_lo_kw=0.0, candidate_hi_kw=15.0, candidate_step_kw=1.0,
    )
    instance = FleetInstance(grid=grid, prices=prices, tariff=tariff, profiles=(profile,))
    path = tmp_path / "instance.json"
    write_instance_json(instance, path)
    cfg = write_config(
        tmp_path, "plan.json", {"method": "seqdp", "instances": [str(path)]}
    )
    assert main(["plan", "-c", cfg, "-o", str(tmp_path)]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_sweep_writes_distribution_summary(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        "sweep.json",
        {"fleet_sizes": [2], "n_seeds": 2, "n_days": 2, "workers": 1},
    )
    out = tmp_path / "out"
    assert main(["sweep", "-c", cfg, "-o", str(out)]) == 0
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert set(summary) == {"2"}
    assert len(summary["2"]["runs"]) == 2
    assert summary["2"]["median_cost_gap"] >= 0.0
    assert "median cost gap" in capsys.readouterr().out
