"""Domain types shared by every stage of the engine, plus scenario validation
and the JSON scenario-file codec.

Units: power in kW, energy in kWh, one slot is one hour, 8,760 slots per year.
Money is USD. A component that is not part of a design is ``None`` on the
scenario, never a zero-size spec.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

SLOTS_PER_YEAR = 8760
HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365

COMPONENT_KEYS = ("pv", "wind", "bg", "dg", "battery", "converter", "grid")
STRATEGIES = ("load_following",)


class ScenarioError(ValueError):
    """Malformed scenario or search-space document."""


# =============================================================================
# COMPONENT SPECS
# =============================================================================


@dataclass(frozen=True)
class PvSpec:
    rated_kw: float
    derating: float = 0.8
    temp_coeff_per_degC: float = -0.004
    ref_irradiance_kw_m2: float = 1.0
    ref_cell_temp_degC: float = 25.0
    noct_degC: float = 45.0
    capital_usd: float = 0.0
    replacement_usd: float = 0.0
    om_usd_per_yr: float = 0.0
    lifetime_yr: float = 25.0


@dataclass(frozen=True)
class WindSpec:
    rated_kw: float
    cut_in_ms: float = 3.0
    rated_ms: float = 12.0
    cut_out_ms: float = 25.0
    hub_height_m: float = 30.0
    ref_height_m: float = 10.0
    shear_alpha: float = 0.14
    capital_usd: float = 0.0
    replacement_usd: float = 0.0
    om_usd_per_yr: float = 0.0
    lifetime_yr: float = 20.0


@dataclass(frozen=True)
class BgSpec:
    """Biomass generator. ``cuf`` bounds the energy it may deliver per day."""

    rated_kw: float
    cuf: float = 0.25
    min_load_ratio: float = 0.3
    calorific_value_kj_per_kg: float = 15000.0
    conversion_eff: float = 0.2
    operating_hours_per_day: float = 24.0
    capital_usd: float = 0.0
    replacement_usd: float = 0.0
    om_usd_per_yr: float = 0.0
    lifetime_yr: float = 20.0
    marginal_cost_usd_per_kwh: float = 0.0


@dataclass(frozen=True)
class DgSpec:
    rated_kw: float
    fuel_intercept_l_per_h_per_kw: float = 0.08
    fuel_slope_l_per_kwh: float = 0.25
    min_load_ratio: float = 0.3
    fuel_price_usd_per_l: float = 1.0
    capital_usd: float = 0.0
    replacement_usd: float = 0.0
    om_usd_per_yr: float = 0.0
    lifetime_yr: float = 15.0


@dataclass(frozen=True)
class BatterySpec:
    """Battery bank of identical strings.

    ``max_charge_kw`` / ``max_discharge_kw`` of ``None`` mean C/4 of the
    bank's total capacity.
    """

    capacity_kwh_per_string: float
    strings: int = 1
    soc_min_frac: float = 0.2
    charge_eff: float = 0.9
    discharge_eff: float = 0.9
    max_charge_kw: Optional[float] = None
    max_discharge_kw: Optional[float] = None
    capital_usd: float = 0.0
    replacement_usd: float = 0.0
    om_usd_per_yr: float = 0.0
    lifetime_yr: float = 10.0

    @property
    def capacity_kwh(self) -> float:
        return self.capacity_kwh_per_string * self.strings

    @property
    def charge_limit_kw(self) -> float:
        return self.capacity_kwh / 4.0 if self.max_charge_kw is None else self.max_charge_kw

    @property
    def discharge_limit_kw(self) -> float:
        return self.capacity_kwh / 4.0 if self.max_discharge_kw is None else self.max_discharge_kw


@dataclass(frozen=True)
class ConverterSpec:
    rated_kw: float
    efficiency: float = 0.95
    capital_usd: float = 0.0
    replacement_usd: float = 0.0
    om_usd_per_yr: float = 0.0
    lifetime_yr: float = 15.0


@dataclass(frozen=True)
class GridSpec:
    purchase_usd_per_kwh: float = 0.1
    sellback_usd_per_kwh: float = 0.0
    max_purchase_kw: float = math.inf
    max_sale_kw: float = 0.0
    present: bool = True


@dataclass(frozen=True)
class EconParams:
    discount_rate_frac: float = 0.08
    project_lifetime_yr: int = 25


@dataclass(frozen=True)
class EmissionFactors:
    """Combustion emission factors.

    Defaults are back-solved from the hospital case results: grid CO2
    0.632 kg/kWh, diesel factors per litre burned. Biomass defaults to zero
    for every pollutant.
    """

    diesel_co2_kg_per_l: float = 2.63
    diesel_co_kg_per_l: float = 0.0065
    diesel_so2_kg_per_l: float = 0.00528
    diesel_nox_kg_per_l: float = 0.0579
    grid_co2_kg_per_kwh: float = 0.632
    grid_co_kg_per_kwh: float = 0.0
    grid_so2_kg_per_kwh: float = 0.00274
    grid_nox_kg_per_kwh: float = 0.00137
    bg_co2_kg_per_kwh: float = 0.0
    bg_co_kg_per_kwh: float = 0.0
    bg_so2_kg_per_kwh: float = 0.0
    bg_nox_kg_per_kwh: float = 0.0


# =============================================================================
# SCENARIO
# =============================================================================


@dataclass(frozen=True)
class LoadSpec:
    """Where the AC load comes from: a 24-value shape scaled to a daily total."""

    shape_csv: Optional[str] = None
    kwh_per_day: float = 0.0
    shape_kw: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class ResourceSpec:
    """Monthly resource CSV file names, resolved against a resources directory."""

    ghi_csv: Optional[str] = None
    wind_csv: Optional[str] = None
    biomass_csv: Optional[str] = None
    temperature_csv: Optional[str] = None
    wind_seed: Optional[int] = None
    ghi_scale: float = 1.0


@dataclass(frozen=True)
class DispatchSpec:
    strategy: str = "load_following"
    initial_soc_frac: float = 1.0
    max_unmet_frac: float = 0.001


@dataclass(frozen=True)
class ScenarioConfig:
    pv: Optional[PvSpec] = None
    wind: Optional[WindSpec] = None
    bg: Optional[BgSpec] = None
    dg: Optional[DgSpec] = None
    battery: Optional[BatterySpec] = None
    converter: Optional[ConverterSpec] = None
    grid: Optional[GridSpec] = None
    econ: EconParams = field(default_factory=EconParams)
    emissions: EmissionFactors = field(default_factory=EmissionFactors)
    load: LoadSpec = field(default_factory=LoadSpec)
    resources: ResourceSpec = field(default_factory=ResourceSpec)
    dispatch: DispatchSpec = field(default_factory=DispatchSpec)

    @property
    def label(self) -> str:
        """Short system name in the ``PV/BG/batt/Grid/conv`` style."""
        parts = []
        for key, name in (("pv", "PV"), ("wind", "WP"), ("bg", "BG"), ("dg", "DG"),
                          ("battery", "batt"), ("grid", "Grid"), ("converter", "conv")):
            if getattr(self, key) is not None:
                parts.append(name)
        if parts == ["Grid"]:
            return "Grid only"
        return "/".join(parts) or "empty"

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


# =============================================================================
# VALIDATION
# =============================================================================


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    warnings: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def _check_costs(name: str, spec: Any, out: list[Violation]) -> None:
    for attr in ("capital_usd", "replacement_usd", "om_usd_per_yr"):
        if getattr(spec, attr) < 0:
            out.append(Violation(f"{name}.{attr}", f"{attr} ≥ 0"))
    if not spec.lifetime_yr > 0:
        out.append(Violation(f"{name}.lifetime_yr", "lifetime_yr > 0"))


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and not math.isnan(x)


def validate_scenario(cfg: ScenarioConfig) -> ValidationReport:
    """Check every scenario invariant; an empty violation list means simulable.

    Never raises. Violations come back in a fixed order (component by
    component, then scenario-level checks) so the report is reproducible.
    """
    v: list[Violation] = []
    w: list[Violation] = []

    pv = cfg.pv
    if pv is not None:
        if not pv.rated_kw >= 0:
            v.append(Violation("pv.rated_kw", "rated_kw ≥ 0"))
        if not 0 <= pv.derating <= 1:
            v.append(Violation("pv.derating", "0 ≤ derating ≤ 1"))
        if not pv.ref_irradiance_kw_m2 > 0:
            v.append(Violation("pv.ref_irradiance_kw_m2", "ref_irradiance_kw_m2 > 0"))
        if not pv.noct_degC >= 20:
            v.append(Violation("pv.noct_degC", "noct_degC ≥ 20"))
        _check_costs("pv", pv, v)

    wt = cfg.wind
    if wt is not None:
        if not wt.rated_kw >= 0:
            v.append(Violation("wind.rated_kw", "rated_kw ≥ 0"))
        if not 0 < wt.cut_in_ms < wt.rated_ms < wt.cut_out_ms:
            v.append(Violation("wind.cut_in_ms", "0 < cut_in_ms < rated_ms < cut_out_ms"))
        if not 0.1 <= wt.shear_alpha <= 0.4:
            v.append(Violation("wind.shear_alpha", "0.1 ≤ shear_alpha ≤ 0.4"))
        if not (wt.hub_height_m > 0 and wt.ref_height_m > 0):
            v.append(Violation("wind.hub_height_m", "heights > 0"))
        _check_costs("wind", wt, v)

    bg = cfg.bg
    if bg is not None:
        if not bg.rated_kw >= 0:
            v.append(Violation("bg.rated_kw", "rated_kw ≥ 0"))
        if not 0 <= bg.cuf <= 1:
            v.append(Violation("bg.cuf", "0 ≤ cuf ≤ 1"))
        if not 0 <= bg.min_load_ratio < 1:
            v.append(Violation("bg.min_load_ratio", "0 ≤ min_load_ratio < 1"))
        if not bg.calorific_value_kj_per_kg > 0:
            v.append(Violation("bg.calorific_value_kj_per_kg", "calorific_value > 0"))
        if not 0 < bg.conversion_eff <= 1:
            v.append(Violation("bg.conversion_eff", "0 < conversion_eff ≤ 1"))
        if not 0 < bg.operating_hours_per_day <= 24:
            v.append(Violation("bg.operating_hours_per_day", "0 < operating_hours_per_day ≤ 24"))
        if bg.marginal_cost_usd_per_kwh < 0:
            v.append(Violation("bg.marginal_cost_usd_per_kwh", "marginal_cost_usd_per_kwh ≥ 0"))
        _check_costs("bg", bg, v)

    dg = cfg.dg
    if dg is not None:
        if not dg.rated_kw >= 0:
            v.append(Violation("dg.rated_kw", "rated_kw ≥ 0"))
        if dg.fuel_intercept_l_per_h_per_kw < 0 or dg.fuel_slope_l_per_kwh < 0:
            v.append(Violation("dg.fuel_slope_l_per_kwh", "fuel coefficients ≥ 0"))
        if not 0 <= dg.min_load_ratio < 1:
            v.append(Violation("dg.min_load_ratio", "0 ≤ min_load_ratio < 1"))
        if dg.fuel_price_usd_per_l < 0:
            v.append(Violation("dg.fuel_price_usd_per_l", "fuel_price_usd_per_l ≥ 0"))
        _check_costs("dg", dg, v)

    bt = cfg.battery
    if bt is not None:
        if not bt.strings >= 0:
            v.append(Violation("battery.strings", "strings ≥ 0"))
        if not bt.capacity_kwh_per_string >= 0:
            v.append(Violation("battery.capacity_kwh_per_string", "capacity_kwh_per_string ≥ 0"))
        if not 0 <= bt.soc_min_frac < 1:
            v.append(Violation("battery.soc_min_frac", "0 ≤ soc_min_frac < 1"))
        if not (0 < bt.charge_eff <= 1 and 0 < bt.discharge_eff <= 1):
            v.append(Violation("battery.charge_eff", "efficiencies in (0,1]"))
        for attr in ("max_charge_kw", "max_discharge_kw"):
            val = getattr(bt, attr)
            if val is not None and not val >= 0:
                v.append(Violation(f"battery.{attr}", f"{attr} ≥ 0"))
        _check_costs("battery", bt, v)

    cv = cfg.converter
    if cv is not None:
        if not 0 < cv.efficiency <= 1:
            v.append(Violation("converter.efficiency", "efficiency in (0,1]"))
        if not cv.rated_kw >= 0:
            v.append(Violation("converter.rated_kw", "rated_kw ≥ 0"))
        _check_costs("converter", cv, v)

    gr = cfg.grid
    if gr is not None:
        if gr.purchase_usd_per_kwh < 0 or gr.sellback_usd_per_kwh < 0:
            v.append(Violation("grid.purchase_usd_per_kwh", "prices ≥ 0"))
        if gr.max_purchase_kw < 0 or gr.max_sale_kw < 0:
            v.append(Violation("grid.max_purchase_kw", "grid power limits ≥ 0"))
        if gr.sellback_usd_per_kwh > gr.purchase_usd_per_kwh:
            w.append(Violation("grid.sellback_usd_per_kwh", "sellback ≤ purchase"))

    ec = cfg.econ
    if not ec.discount_rate_frac >= 0:
        v.append(Violation("econ.discount_rate_frac", "discount_rate_frac ≥ 0"))
    if not ec.project_lifetime_yr >= 1:
        v.append(Violation("econ.project_lifetime_yr", "project_lifetime_yr ≥ 1"))

    for f in dataclasses.fields(cfg.emissions):
        if not getattr(cfg.emissions, f.name) >= 0:
            v.append(Violation(f"emissions.{f.name}", "emission factors ≥ 0"))

    if cfg.load.kwh_per_day < 0:
        v.append(Violation("load.kwh_per_day", "kwh_per_day ≥ 0"))

    d = cfg.dispatch
    if d.strategy not in STRATEGIES:
        v.append(Violation("dispatch.strategy", f"strategy must be one of {', '.join(STRATEGIES)}"))
    if not 0 <= d.initial_soc_frac <= 1:
        v.append(Violation("dispatch.initial_soc_frac", "0 ≤ initial_soc_frac ≤ 1"))
    if not 0 <= d.max_unmet_frac <= 1:
        v.append(Violation("dispatch.max_unmet_frac", "0 ≤ max_unmet_frac ≤ 1"))

    grid_on = gr is not None and gr.present
    if not any(c is not None for c in (cfg.pv, cfg.wind, cfg.bg, cfg.dg)) and not grid_on:
        v.append(Violation("scenario", "at least one generation source required"))
    ac_load = cfg.load.kwh_per_day > 0 or cfg.load.shape_kw is not None or cfg.load.shape_csv is not None
    if (cfg.pv is not None or cfg.battery is not None) and cfg.converter is None and ac_load:
        v.append(Violation("converter", "converter required"))

    return ValidationReport(tuple(v), tuple(w))


# =============================================================================
# JSON CODEC
# =============================================================================

_SECTION_TYPES = {
    "pv": PvSpec,
    "wind": WindSpec,
    "bg": BgSpec,
    "dg": DgSpec,
    "battery": BatterySpec,
    "converter": ConverterSpec,
    "grid": GridSpec,
    "econ": EconParams,
    "emissions": EmissionFactors,
    "load": LoadSpec,
    "resources": ResourceSpec,
    "dispatch": DispatchSpec,
}


def build_section(key: str, data: Any) -> Any:
    """Build one scenario section from a mapping, rejecting unknown fields."""
    cls = _SECTION_TYPES.get(key)
    if cls is None:
        raise ScenarioError(f"unknown scenario key {key!r}")
    if data is None:
        return None
    if not isinstance(data, dict):
        raise ScenarioError(f"{key}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ScenarioError(f"{key}: unknown field(s) {', '.join(unknown)}")
    kwargs = dict(data)
    for k, val in kwargs.items():
        if val is None:
            continue
        if isinstance(val, list):
            kwargs[k] = tuple(val)
        elif isinstance(val, str) and val.lower() in ("inf", "infinity"):
            kwargs[k] = math.inf
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ScenarioError(f"{key}: {exc}") from None


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = sorted(set(doc) - set(_SECTION_TYPES))
    if unknown:
        raise ScenarioError(f"unknown scenario key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, data in doc.items():
        section = build_section(key, data)
        if section is not None:
            kwargs[key] = section
    return ScenarioConfig(**kwargs)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, tuple):
        return list(value)
    return value


def section_to_dict(section: Any) -> dict:
    return {f.name: _jsonable(getattr(section, f.name)) for f in dataclasses.fields(section)}


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for key in _SECTION_TYPES:
        section = getattr(cfg, key)
        if section is not None:
            out[key] = section_to_dict(section)
    return out


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse a scenario JSON file. Syntax errors carry line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)
