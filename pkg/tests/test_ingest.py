import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridsizer.ingest import (DAYS_IN_MONTH, MONTH_OF_SLOT, ApplianceEntry, IngestError,
                                MonthlyResource, daily_load_from_appliances, load_bundle,
                                load_profile, read_load_shape_csv, read_monthly_csv,
                                synthesize_biomass, synthesize_ghi, synthesize_wind)

from helpers import HOSPITAL_ANNUAL_KWH, HOSPITAL_KWH_PER_DAY, RESOURCES


def monthly(values, kind):
    units = {"ghi": "kWh/m2/day", "wind": "m/s", "biomass": "kg/day"}
    return MonthlyResource(tuple(values), units[kind])


def test_appliances():
    assert daily_load_from_appliances([ApplianceEntry(10, 40, 5)]) == pytest.approx(2.0)
    assert daily_load_from_appliances([]) == 0.0
    assert daily_load_from_appliances([ApplianceEntry(1, 1000, 24)]) == pytest.approx(24.0)


def test_ghi_days_integrate_to_monthly_mean():
    ghi = synthesize_ghi(monthly([6.0] + [5.0] * 11, "ghi")).values
    days = ghi.reshape(365, 24).sum(axis=1)
    assert np.allclose(days[:31], 6.0, atol=1e-9)
    assert np.allclose(days[31:59], 5.0, atol=1e-9)


def test_ghi_zero_month():
    ghi = synthesize_ghi(monthly([0.0] * 12, "ghi")).values
    assert not ghi.any()


def test_ghi_peak_near_half_sine_peak():
    peak = synthesize_ghi(monthly([6.0] * 12, "ghi")).values.max()
    analytic = math.pi / 2 * 6.0 / 12
    # an hourly slot holds the mean over the hour, slightly below the instantaneous peak
    assert peak <= analytic
    assert peak == pytest.approx(analytic, rel=0.02)


def test_wind_constant_fill():
    w = synthesize_wind(monthly([4.0] * 12, "wind")).values
    assert w.shape == (8760,)
    assert np.all(w == 4.0)


def test_wind_seeded_perturbation_keeps_monthly_mean():
    vals = [4.8, 4.7, 4.5, 4.0, 3.4, 3.9, 4.1, 3.0, 3.1, 3.2, 3.4, 4.2]
    s = synthesize_wind(monthly(vals, "wind"), seed=11)
    assert np.allclose(s.monthly_means(), vals, atol=1e-9)
    assert s.values.min() >= 0
    assert s.values.std() > 0


def test_wind_january_above_august():
    vals = [4.8, 4.7, 4.5, 4.0, 3.4, 3.9, 4.1, 3.0, 3.1, 3.2, 3.4, 4.2]
    w = synthesize_wind(monthly(vals, "wind")).values
    assert w[MONTH_OF_SLOT == 0].min() > w[MONTH_OF_SLOT == 7].max()


@pytest.mark.parametrize("kg_day,kg_h", [(240_000, 10_000), (390_000, 16_250), (0, 0)])
def test_biomass(kg_day, kg_h):
    b = synthesize_biomass(monthly([kg_day] * 12, "biomass")).values
    assert np.all(b == kg_h)


def test_hospital_load_annual_total():
    shape = read_load_shape_csv(RESOURCES / "load_shape.csv")
    load = load_profile(shape, HOSPITAL_KWH_PER_DAY).values
    assert load.sum() == pytest.approx(HOSPITAL_ANNUAL_KWH, abs=0.05)
    assert load.max() == pytest.approx(973.28, abs=1e-9)
    assert load.min() == pytest.approx(105.85, abs=1e-9)


def test_flat_load():
    assert np.all(load_profile([1.0] * 24, 24.0).values == 1.0)


def test_load_scaling_preserves_ratio():
    shape = read_load_shape_csv(RESOURCES / "load_shape.csv")
    load = load_profile(shape, sum(shape)).values
    assert load.max() / load.min() == pytest.approx(973.28 / 105.85, rel=1e-12)


def test_monthly_csv_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "ghi.csv"
    p.write_text("month,value\n1,6.0\n2,abc\n")
    with pytest.raises(IngestError, match="line 3"):
        read_monthly_csv(p, "ghi")


def test_negative_resource_rejected():
    with pytest.raises(IngestError):
        monthly([-1.0] + [1.0] * 11, "ghi")


def test_missing_resources_dir(grid_only_cfg, tmp_path):
    with pytest.raises(FileNotFoundError):
        load_bundle(grid_only_cfg, tmp_path / "absent")


def test_hospital_bundle_shapes(hospital_bundle):
    for s in (hospital_bundle.load_kw, hospital_bundle.ghi_kw_m2, hospital_bundle.wind_ms,
              hospital_bundle.biomass_kg_h, hospital_bundle.ambient_degC):
        assert len(s) == 8760


positive_months = st.lists(st.floats(0, 12), min_size=12, max_size=12)


@settings(max_examples=50, deadline=None)
@given(positive_months, st.one_of(st.none(), st.integers(0, 2**31)))
def test_synthesis_matches_monthly_inputs(vals, seed):
    ghi = synthesize_ghi(monthly(vals, "ghi"))
    wind = synthesize_wind(monthly(vals, "wind"), seed=seed)
    bio = synthesize_biomass(monthly(vals, "biomass"))
    for s in (ghi, wind, bio):
        assert s.values.shape == (8760,)
    daily_ghi = np.array([ghi.values[MONTH_OF_SLOT == m].sum() / DAYS_IN_MONTH[m] for m in range(12)])
    assert np.allclose(daily_ghi, vals, rtol=1e-6, atol=1e-12)
    assert np.allclose(wind.monthly_means(), vals, rtol=1e-6, atol=1e-12)
    assert np.allclose(bio.monthly_means() * 24, vals, rtol=1e-6, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(positive_months, st.integers(0, 2**31))
def test_synthesis_is_deterministic(vals, seed):
    a = synthesize_wind(monthly(vals, "wind"), seed=seed).values
    b = synthesize_wind(monthly(vals, "wind"), seed=seed).values
    assert a.tobytes() == b.tobytes()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=24, max_size=24), st.floats(0, 1e5))
def test_load_profile_periodic_and_non_negative(shape, target):
    if sum(shape) == 0 and target != 0:
        return
    v = load_profile(shape, target).values
    assert np.all(v >= 0)
    assert np.array_equal(v.reshape(365, 24), np.tile(v[:24], (365, 1)))
