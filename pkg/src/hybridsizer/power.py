"""Component output models.

Every function accepts scalars or numpy arrays for the time-varying argument
and returns the same kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BgSpec, DgSpec, PvSpec, WindSpec, DAYS_PER_YEAR

NOCT_AMBIENT_DEGC = 20.0
NOCT_IRRADIANCE_KW_M2 = 0.8


@dataclass(frozen=True)
class CellTempModel:
    noct_degC: float = 45.0
    ref_ambient_noct_degC: float = NOCT_AMBIENT_DEGC
    noct_irradiance_w_m2: float = 800.0

    def __post_init__(self):
        if self.noct_degC < self.ref_ambient_noct_degC:
            raise ValueError("noct_degC must be ≥ 20")


def cell_temperature(model: CellTempModel, ambient_degC, ghi_kw_m2):
    """NOCT estimate: ambient plus the NOCT rise scaled by irradiance."""
    rise_per_kw_m2 = (model.noct_degC - model.ref_ambient_noct_degC) / (model.noct_irradiance_w_m2 / 1000.0)
    return ambient_degC + rise_per_kw_m2 * ghi_kw_m2


def pv_output(spec: PvSpec, ghi_kw_m2, cell_temp_degC):
    """DC output in kW, clamped at zero."""
    thermal = 1.0 + spec.temp_coeff_per_degC * (np.asarray(cell_temp_degC) - spec.ref_cell_temp_degC)
    p = spec.rated_kw * spec.derating * (np.asarray(ghi_kw_m2) / spec.ref_irradiance_kw_m2) * thermal
    p = np.maximum(p, 0.0)
    return float(p) if p.ndim == 0 else p


def pv_profile(spec: PvSpec, ghi_kw_m2: np.ndarray, ambient_degC: np.ndarray) -> np.ndarray:
    t_cell = cell_temperature(CellTempModel(spec.noct_degC), ambient_degC, ghi_kw_m2)
    return pv_output(spec, ghi_kw_m2, t_cell)


def wind_speed_at_hub(spec: WindSpec, v_ref_ms):
    """Power-law (Hellmann) extrapolation from the measurement to the hub height."""
    v = np.asarray(v_ref_ms, dtype=float) * (spec.hub_height_m / spec.ref_height_m) ** spec.shear_alpha
    return float(v) if v.ndim == 0 else v


def wind_output(spec: WindSpec, v_hub_ms):
    """Cubic power curve between cut-in and rated, flat to cut-out, zero outside."""
    v = np.asarray(v_hub_ms, dtype=float)
    ci3 = spec.cut_in_ms ** 3
    ramp = spec.rated_kw * (v ** 3 - ci3) / (spec.rated_ms ** 3 - ci3)
    p = np.where(v <= spec.cut_in_ms, 0.0,
                 np.where(v < spec.rated_ms, ramp,
                          np.where(v < spec.cut_out_ms, spec.rated_kw, 0.0)))
    return float(p) if p.ndim == 0 else p


def bg_rated_power(feedstock_t_per_yr: float, spec: BgSpec) -> float:
    """Gasifier size supported by an annual feedstock supply.

    Tonnes/yr times calorific value and efficiency gives kJ/yr of
    electricity; dividing by the seconds of operation per year turns that
    into kW.
    """
    if spec.operating_hours_per_day == 0:
        raise ValueError("operating_hours_per_day must be > 0")
    kj_per_yr = feedstock_t_per_yr * 1000.0 * spec.calorific_value_kj_per_kg * spec.conversion_eff
    return kj_per_yr / (DAYS_PER_YEAR * spec.operating_hours_per_day * 3600.0)


def bg_annual_energy(spec: BgSpec) -> float:
    return spec.rated_kw * spec.cuf * DAYS_PER_YEAR * spec.operating_hours_per_day


def bg_feedstock_kg(spec: BgSpec, energy_kwh):
    """Feedstock burned to deliver ``energy_kwh`` of electricity."""
    return energy_kwh * 3600.0 / (spec.calorific_value_kj_per_kg * spec.conversion_eff)


def bg_feedstock_limit_kw(spec: BgSpec, feedstock_kg_h):
    """Electrical output a feedstock flow (kg/h) can sustain."""
    return feedstock_kg_h * spec.calorific_value_kj_per_kg * spec.conversion_eff / 3600.0


def dg_fuel(spec: DgSpec, p_out_kw: float, running: bool) -> float:
    """Fuel rate in L/h on the linear fuel curve (idle intercept times rating plus slope times output)."""
    if p_out_kw > spec.rated_kw:
        raise ValueError(f"output {p_out_kw} kW exceeds rating {spec.rated_kw} kW")
    if p_out_kw < 0:
        raise ValueError("output must be ≥ 0")
    if not running:
        return 0.0
    return spec.fuel_intercept_l_per_h_per_kw * spec.rated_kw + spec.fuel_slope_l_per_kwh * p_out_kw


def converter_required(peak_load_kw: float, efficiency: float) -> float:
    """Inverter rating that delivers the peak AC load."""
    if efficiency <= 0:
        raise ValueError("inverter efficiency must be > 0")
    return peak_load_kw / efficiency
