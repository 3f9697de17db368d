import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshroute.scenario import (COLUMNS, DeviceSpec, ScenarioConfig, ScenarioError, SchemaError,
                                default_suite, generate_scenario, load_scenario, load_suite,
                                save_scenario, save_suite, scenario_filename, scenario_to_csv)

SAMPLE_ROW = ("1,271.513599,327.777799,0.433033,0.784336,0.483582,phone,"
              "0.673843,30,0.846589")


def _write(tmp_path, text, name="devices_scenario_1.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_header_order():
    assert ",".join(COLUMNS) == ("device_id,x_position,y_position,battery_level,signal_quality,"
                                 "success_rate,device_type,priority_tolerance,buffer_capacity,"
                                 "uptime_ratio")


def test_sample_row_parses_exactly(tmp_path):
    s = load_scenario(_write(tmp_path, ",".join(COLUMNS) + "\n" + SAMPLE_ROW + "\n"))
    assert s.devices == [DeviceSpec(device_id=1, x_position=271.513599, y_position=327.777799,
                                    battery_level=0.433033, signal_quality=0.784336,
                                    success_rate=0.483582, device_type="phone",
                                    priority_tolerance=0.673843, buffer_capacity=30,
                                    uptime_ratio=0.846589)]


def test_generation_is_deterministic():
    cfg = ScenarioConfig(seed=99, node_count=30)
    assert scenario_to_csv(generate_scenario(cfg)) == scenario_to_csv(generate_scenario(cfg))
    other = generate_scenario(ScenarioConfig(seed=100, node_count=30))
    assert scenario_to_csv(other) != scenario_to_csv(generate_scenario(cfg))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), n=st.integers(2, 80),
       lo=st.integers(1, 10), extra=st.integers(0, 30))
def test_generated_fields_in_range(seed, n, lo, extra):
    cfg = ScenarioConfig(seed=seed, node_count=n, buffer_capacity_range=(lo, lo + extra))
    s = generate_scenario(cfg)
    assert [d.device_id for d in s.devices] == list(range(1, n + 1))
    for d in s.devices:
        d.validate()
        assert 0 <= d.x_position <= cfg.area_width and 0 <= d.y_position <= cfg.area_height
        assert lo <= d.buffer_capacity <= lo + extra
        assert d.device_type in ("phone", "sensor", "relay")


def test_type_mix_is_respected_roughly():
    s = generate_scenario(ScenarioConfig(seed=5, node_count=4000))
    types = [d.device_type for d in s.devices]
    frac = {t: types.count(t) / len(types) for t in ("phone", "sensor", "relay")}
    assert abs(frac["phone"] - 0.5) < 0.03
    assert abs(frac["sensor"] - 0.3) < 0.03
    assert abs(frac["relay"] - 0.2) < 0.03


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**9), n=st.integers(2, 50))
def test_csv_round_trip_is_exact(tmp_path_factory, seed, n):
    s = generate_scenario(ScenarioConfig(seed=seed, node_count=n), scenario_id=4)
    p = tmp_path_factory.mktemp("rt") / scenario_filename(4)
    save_scenario(s, p)
    back = load_scenario(p)
    assert back.scenario_id == 4
    assert back.devices == s.devices
    assert scenario_to_csv(back) == p.read_text(encoding="utf-8")


def test_missing_column_is_named(tmp_path):
    cols = [c for c in COLUMNS if c != "uptime_ratio"]
    row = SAMPLE_ROW.rsplit(",", 1)[0]
    with pytest.raises(SchemaError, match="uptime_ratio"):
        load_scenario(_write(tmp_path, ",".join(cols) + "\n" + row + "\n"))


def test_out_of_range_value_reports_row(tmp_path):
    bad = SAMPLE_ROW.replace("0.433033", "1.5")
    text = ",".join(COLUMNS) + "\n" + SAMPLE_ROW + "\n" + bad.replace("1,", "2,", 1) + "\n"
    with pytest.raises(ScenarioError, match="row 2"):
        load_scenario(_write(tmp_path, text))


@pytest.mark.parametrize("text", ["", ",".join(COLUMNS) + "\n"])
def test_empty_files_rejected(tmp_path, text):
    with pytest.raises(ScenarioError):
        load_scenario(_write(tmp_path, text))


def test_duplicate_ids_rejected(tmp_path):
    text = ",".join(COLUMNS) + "\n" + SAMPLE_ROW + "\n" + SAMPLE_ROW + "\n"
    with pytest.raises(ScenarioError):
        load_scenario(_write(tmp_path, text))


def test_bad_device_type_rejected(tmp_path):
    text = ",".join(COLUMNS) + "\n" + SAMPLE_ROW.replace("phone", "toaster") + "\n"
    with pytest.raises(ScenarioError):
        load_scenario(_write(tmp_path, text))


@pytest.mark.parametrize("kw", [
    dict(node_count=1),
    dict(area_width=0.0),
    dict(buffer_capacity_range=(0, 5)),
    dict(buffer_capacity_range=(6, 5)),
    dict(device_type_mix=(0.5, 0.5, 0.5)),
])
def test_bad_config_rejected(kw):
    cfg = ScenarioConfig(seed=1, **{"node_count": 10, **kw})
    with pytest.raises(ScenarioError):
        generate_scenario(cfg)


def test_default_suite_shape(tmp_path):
    suite = default_suite()
    assert len(suite) == 10
    assert [c.node_count for c in suite] == [int(round(v)) for v in np.linspace(40, 120, 10)]
    assert len({c.seed for c in suite}) == 10
    paths = save_suite([generate_scenario(c, i + 1) for i, c in enumerate(suite[:3])], tmp_path)
    assert [p.name for p in paths] == [scenario_filename(i) for i in (1, 2, 3)]
    assert [s.scenario_id for s in load_suite(tmp_path)] == [1, 2, 3]


def test_save_leaves_no_temp_files(tmp_path):
    s = generate_scenario(ScenarioConfig(seed=1, node_count=5))
    save_scenario(s, tmp_path / "x.csv")
    save_scenario(s, tmp_path / "x.csv")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["x.csv"]
    rows = list(csv.reader(io.StringIO((tmp_path / "x.csv").read_text())))
    assert len(rows) == 6
