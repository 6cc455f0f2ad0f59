import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridsizer.dispatch import run_profiles
from hybridsizer.model import (BatterySpec, ConverterSpec, GridSpec, LoadSpec, PvSpec, ScenarioConfig,
                               ScenarioError, WindSpec, load_scenario, scenario_from_dict,
                               scenario_to_dict, validate_scenario)

from helpers import HOSPITAL


def test_pv_without_converter_is_rejected():
    report = validate_scenario(ScenarioConfig(pv=PvSpec(rated_kw=100), load=LoadSpec(kwh_per_day=100)))
    assert not report.ok
    assert any("converter required" in m for m in report.messages())


def test_ordered_wind_speeds_accepted():
    cfg = ScenarioConfig(wind=WindSpec(rated_kw=10, cut_in_ms=3, rated_ms=12, cut_out_ms=24))
    assert validate_scenario(cfg).ok


def test_negative_strings_rejected():
    cfg = ScenarioConfig(battery=BatterySpec(capacity_kwh_per_string=1, strings=-1),
                         converter=ConverterSpec(rated_kw=10))
    msgs = validate_scenario(cfg).messages()
    assert any("strings ≥ 0" in m for m in msgs)


@pytest.mark.parametrize("speeds", [(12, 3, 25), (3, 25, 12), (3, 12, 12)])
def test_unordered_wind_speeds_rejected(speeds):
    ci, r, co = speeds
    cfg = ScenarioConfig(wind=WindSpec(rated_kw=10, cut_in_ms=ci, rated_ms=r, cut_out_ms=co))
    assert not validate_scenario(cfg).ok


def test_sellback_above_purchase_only_warns():
    cfg = ScenarioConfig(grid=GridSpec(purchase_usd_per_kwh=0.1, sellback_usd_per_kwh=0.2))
    report = validate_scenario(cfg)
    assert report.ok
    assert report.warnings


def test_labels():
    assert ScenarioConfig(grid=GridSpec()).label == "Grid only"
    cfg = ScenarioConfig(pv=PvSpec(1), battery=BatterySpec(1), converter=ConverterSpec(1),
                         grid=GridSpec())
    assert cfg.label == "PV/batt/Grid/conv"


def test_shipped_scenarios_round_trip():
    for name in ("scenario_grid_only.json", "scenario_bg_grid.json", "scenario_pv_bg_batt.json"):
        cfg = load_scenario(HOSPITAL / name)
        assert validate_scenario(cfg).ok
        assert scenario_from_dict(json.loads(json.dumps(scenario_to_dict(cfg)))) == cfg


def test_infinite_purchase_cap_is_parsed():
    cfg = load_scenario(HOSPITAL / "scenario_grid_only.json")
    assert math.isinf(cfg.grid.max_purchase_kw)


def test_unknown_key_is_an_error():
    with pytest.raises(ScenarioError, match="bogus"):
        scenario_from_dict({"grid": {"bogus": 1}})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"solar": {}})


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "grid": {\n    "purchase_usd_per_kwh": ,\n  }\n}\n')
    with pytest.raises(ScenarioError, match="line 3"):
        load_scenario(p)


_maybe = lambda strat: st.one_of(st.none(), strat)

scenarios = st.builds(
    ScenarioConfig,
    pv=_maybe(st.builds(PvSpec, rated_kw=st.floats(-10, 500), derating=st.floats(-0.5, 1.5))),
    wind=_maybe(st.builds(WindSpec, rated_kw=st.floats(-10, 500), cut_in_ms=st.floats(0, 30),
                          rated_ms=st.floats(0, 30), cut_out_ms=st.floats(0, 40))),
    battery=_maybe(st.builds(BatterySpec, capacity_kwh_per_string=st.floats(-1, 10),
                             strings=st.integers(-5, 300), soc_min_frac=st.floats(-0.2, 1.2),
                             charge_eff=st.floats(-0.1, 1.1), discharge_eff=st.floats(-0.1, 1.1))),
    converter=_maybe(st.builds(ConverterSpec, rated_kw=st.floats(-10, 500),
                               efficiency=st.floats(-0.1, 1.1))),
    grid=_maybe(st.builds(GridSpec, purchase_usd_per_kwh=st.floats(-1, 1),
                          max_purchase_kw=st.floats(-10, 1e3))),
)


@settings(max_examples=100, deadline=None)
@given(scenarios)
def test_validation_is_pure(cfg):
    a, b = validate_scenario(cfg), validate_scenario(cfg)
    assert a.messages() == b.messages()
    assert a.warnings == b.warnings


@settings(max_examples=100, deadline=None)
@given(scenarios)
def test_accepted_scenarios_simulate(cfg):
    if not validate_scenario(cfg).ok:
        return
    n = 48
    load = np.linspace(0, 50, n)
    res = run_profiles(cfg, load, np.full(n, 20.0), np.full(n, 10.0), np.full(n, np.inf))
    assert res.load_served_kwh + res.unmet_kwh == pytest.approx(res.load_kwh)
