import csv
from datetime import datetime

import numpy as np
import pytest

from depotplan.fileio import (
    read_instance_json,
    read_log_csv,
    read_price_csv,
    read_report_json,
    report_from_dict,
    report_to_dict,
    write_instance_json,
    write_log_csv,
    write_price_csv,
    write_report_json,
    write_series_csv,
)
from depotplan.ingest import LogSample, OperationLog
from depotplan.lp import build_lp, solve_lp
from depotplan.model import InputError
from depotplan.presets import regression_instance, synthetic_price_series
from depotplan.reporting import lp_report


def test_price_csv_round_trip(tmp_path):
    start = datetime(2022, 6, 1)
    prices = synthetic_price_series(start, datetime(2022, 6, 3), seed=5)
    path = tmp_path / "prices.csv"
    write_price_csv(prices, path)
    back = read_price_csv(path)
    assert back.hourly == prices.hourly


def test_price_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("hour,price\n2022-06-01T00:00:00,0.1\n")
    with pytest.raises(InputError, match="header"):
        read_price_csv(path)


def test_price_csv_rejects_bad_value(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("hour_start_iso8601,price\n2022-06-01T00:00:00,cheap\n")
    with pytest.raises(InputError, match="row 2"):
        read_price_csv(path)


def test_log_csv_round_trip(tmp_path):
    log = OperationLog(
        vehicle_id="bus7",
        samples=(
            LogSample(datetime(2022, 6, 1, 7), 100.0, "operating"),
            LogSample(datetime(2022, 6, 1, 9, 30), 87.5, "operating"),
            LogSample(datetime(2022, 6, 1, 10), 87.5, "idle"),
        ),
    )
    path = tmp_path / "bus7.csv"
    write_log_csv(log, path)
    back = read_log_csv(path)
    assert back.vehicle_id == "bus7"  # from the file stem
    assert back.samples == log.samples
    named = read_log_csv(path, vehicle_id="other")
    assert named.vehicle_id == "other"


def test_log_csv_rejects_missing_column(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("timestamp_iso8601,soc_percent,state\n2022-06-01T07:00:00,100\n")
    with pytest.raises(InputError, match="3 columns"):
        read_log_csv(path)


def test_instance_json_round_trip(tmp_path):
    instance, _ = regression_instance(3, seed=4, n_days=2)
    path = tmp_path / "instance.json"
    write_instance_json(instance, path)
    back = read_instance_json(path)
    assert back.grid.starts == instance.grid.starts
    assert back.grid.month_id == instance.grid.month_id
    assert back.prices.hourly == instance.prices.hourly
    assert back.tariff == instance.tariff
    assert len(back.profiles) == len(instance.profiles)
    for a, b in zip(back.profiles, instance.profiles):
        assert a.vehicle_id == b.vehicle_id
        assert a.battery == b.battery
        assert np.array_equal(a.delta_soc_op, b.delta_soc_op)
        assert np.array_equal(a.idle_window_h, b.idle_window_h)
        assert np.array_equal(a.available, b.available)


def test_instance_json_names_missing_field(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"month_id": "2022-06"}')
    with pytest.raises(InputError, match="grid"):
        read_instance_json(path)


@pytest.fixture(scope="module")
def small_report():
    instance, _ = regression_instance(2, seed=1, n_days=2)
    lp = solve_lp(build_lp(instance), instance)
    return lp_report(lp, instance, runtime_seconds=0.25)


def test_report_json_round_trip(tmp_path, small_report):
    path = tmp_path / "report.json"
    write_report_json(small_report, path)
    back = read_report_json(path)
    assert back == small_report
    # parse -> serialize -> parse is identity
    assert report_from_dict(report_to_dict(back)) == back


def test_series_csv_columns_and_values(tmp_path, small_report):
    path = tmp_path / "series.csv"
    write_series_csv(small_report, path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["t_start", "duration_h", "aggregate_kw", "price"]
    assert len(rows) == small_report.n_steps + 1
    assert rows[1][0] == small_report.step_starts[0].isoformat()
    assert float(rows[1][2]) == small_report.aggregate_kw[0]
    assert float(rows[-1][3]) == small_report.prices[-1]
