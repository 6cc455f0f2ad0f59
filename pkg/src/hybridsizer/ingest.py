"""Resource and load ingestion.

Monthly resource statistics are expanded to deterministic 8,760-slot hourly
series. The year has no leap day. Solar irradiance follows a half-sine over a
fixed daylight window; wind is held at the monthly mean unless a seed asks
for a mean-preserving diurnal perturbation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import DAYS_PER_YEAR, HOURS_PER_DAY, SLOTS_PER_YEAR

DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)

UNITS = {
    "ghi": "kWh/m2/day",
    "wind": "m/s",
    "biomass": "kg/day",
    "temperature": "degC",
}

DEFAULT_AMBIENT_DEGC = 20.0


class IngestError(ValueError):
    """Bad resource or load input (wrong shape, negative values, bad CSV)."""


def _month_of_slot() -> np.ndarray:
    days = np.repeat(np.arange(12), DAYS_IN_MONTH)
    return np.repeat(days, HOURS_PER_DAY).astype(np.int8)


MONTH_OF_SLOT = _month_of_slot()
MONTH_OF_SLOT.setflags(write=False)


@dataclass(frozen=True)
class MonthlyResource:
    values: tuple[float, ...]
    unit: str

    def __post_init__(self):
        vals = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != 12:
            raise IngestError(f"expected 12 monthly values, got {len(vals)}")
        if not all(math.isfinite(x) for x in vals):
            raise IngestError("monthly values must be finite")
        if self.unit != UNITS["temperature"] and min(vals) < 0:
            raise IngestError(f"negative monthly value in {self.unit} series")


@dataclass(frozen=True, eq=False)
class HourlySeries:
    """One year of hourly values. ``values`` is a read-only float64 array."""

    values: np.ndarray
    unit: str
    month: np.ndarray = field(default_factory=lambda: MONTH_OF_SLOT)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (SLOTS_PER_YEAR,):
            raise IngestError(f"hourly series must have {SLOTS_PER_YEAR} slots, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise IngestError("hourly series contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return SLOTS_PER_YEAR

    def monthly_means(self) -> np.ndarray:
        return np.array([self.values[self.month == m].mean() for m in range(12)])

    def scaled(self, factor: float) -> "HourlySeries":
        return HourlySeries(self.values * factor, self.unit)


@dataclass(frozen=True)
class ApplianceEntry:
    count: float
    rated_power_w: float
    hours_per_day: float

    def __post_init__(self):
        if self.count < 0:
            raise IngestError("appliance count must be ≥ 0")
        if not 0 <= self.hours_per_day <= 24:
            raise IngestError("hours_per_day must be within [0, 24]")


def daily_load_from_appliances(entries: Iterable[ApplianceEntry]) -> float:
    """Daily energy in kWh: sum of count * watts * hours, watts converted to kW."""
    return math.fsum(e.count * e.rated_power_w * e.hours_per_day for e in entries) / 1000.0


# =============================================================================
# SYNTHESIS
# =============================================================================


def _require_unit(monthly: MonthlyResource, kind: str) -> None:
    if monthly.unit != UNITS[kind]:
        raise IngestError(f"expected unit {UNITS[kind]}, got {monthly.unit}")


def _half_sine_day(sunrise_h: float, sunset_h: float) -> np.ndarray:
    """Hourly weights of a unit-area half-sine between sunrise and sunset.

    Each slot gets the exact integral of the sine over its hour, so the
    weights sum to 1 whatever the window alignment.
    """
    length = sunset_h - sunrise_h
    if not 0 < length <= 24:
        raise IngestError("daylight window must be within one day")
    edges = np.clip(np.arange(25, dtype=float), sunrise_h, sunset_h)
    # antiderivative of (pi/2L) sin(pi (t - rise)/L) is -cos(...)/2
    cum = -0.5 * np.cos(math.pi * (edges - sunrise_h) / length)
    w = np.diff(cum)
    return w / w.sum()


def synthesize_ghi(monthly: MonthlyResource, sunrise_h: float = 6.0,
                   sunset_h: float = 18.0) -> HourlySeries:
    """Hourly GHI in kW/m2 whose every day integrates to the month's daily mean."""
    _require_unit(monthly, "ghi")
    shape = _half_sine_day(sunrise_h, sunset_h)
    daily = np.repeat(np.array(monthly.values), DAYS_IN_MONTH)
    return HourlySeries(np.outer(daily, shape).ravel(), "kW/m2")


def synthesize_wind(monthly: MonthlyResource, seed: Optional[int] = None,
                    amplitude: float = 0.15) -> HourlySeries:
    """Hourly wind speed in m/s.

    Without a seed every slot equals its monthly mean. With a seed, a
    random-phase diurnal cosine of relative ``amplitude`` (plus small hourly
    noise) is added and then re-centred per month so the monthly mean is
    preserved exactly and speeds stay non-negative.
    """
    _require_unit(monthly, "wind")
    base = np.array(monthly.values)[MONTH_OF_SLOT]
    if seed is None:
        return HourlySeries(base, "m/s")
    if not 0 <= amplitude < 1:
        raise IngestError("amplitude must be within [0, 1)")
    rng = np.random.default_rng(seed)
    hours = np.arange(SLOTS_PER_YEAR) % HOURS_PER_DAY
    phase = rng.uniform(0, 2 * math.pi)
    pert = amplitude * np.cos(2 * math.pi * hours / 24 + phase)
    pert = pert + rng.normal(0.0, amplitude / 3, SLOTS_PER_YEAR)
    pert = np.clip(pert, -0.9, 0.9)
    for m in range(12):
        sel = MONTH_OF_SLOT == m
        pert[sel] -= pert[sel].mean()
    # re-centring can push a slot below -1; shrink that month's perturbation
    for m in range(12):
        sel = MONTH_OF_SLOT == m
        lo = pert[sel].min()
        if lo < -1:
            pert[sel] *= 1 / -lo
    return HourlySeries(base * (1 + pert), "m/s")


def synthesize_biomass(monthly: MonthlyResource) -> HourlySeries:
    """Hourly available feedstock in kg/h: the month's kg/day spread evenly."""
    _require_unit(monthly, "biomass")
    return HourlySeries(np.array(monthly.values)[MONTH_OF_SLOT] / HOURS_PER_DAY, "kg/h")


def synthesize_temperature(monthly: Optional[MonthlyResource]) -> HourlySeries:
    if monthly is None:
        return HourlySeries(np.full(SLOTS_PER_YEAR, DEFAULT_AMBIENT_DEGC), "degC")
    _require_unit(monthly, "temperature")
    return HourlySeries(np.array(monthly.values)[MONTH_OF_SLOT], "degC")


def load_profile(daily_shape: Sequence[float], scale_to_kwh_per_day: Optional[float] = None) -> HourlySeries:
    """Repeat a 24-hour kW shape over 365 days.

    When ``scale_to_kwh_per_day`` is given the shape is scaled linearly so
    each day sums to it; ``None`` keeps the shape as is.
    """
    shape = np.asarray(daily_shape, dtype=float)
    if shape.shape != (HOURS_PER_DAY,):
        raise IngestError(f"daily load shape needs 24 values, got {shape.size}")
    if np.any(shape < 0) or not np.all(np.isfinite(shape)):
        raise IngestError("daily load shape must be finite and non-negative")
    if scale_to_kwh_per_day is not None:
        if scale_to_kwh_per_day < 0:
            raise IngestError("daily energy target must be ≥ 0")
        total = math.fsum(shape)
        if total == 0:
            if scale_to_kwh_per_day != 0:
                raise IngestError("cannot scale an all-zero load shape to a nonzero total")
        elif total != scale_to_kwh_per_day:
            shape = shape * (scale_to_kwh_per_day / total)
    return HourlySeries(np.tile(shape, DAYS_PER_YEAR), "kW")


# =============================================================================
# CSV
# =============================================================================


def _read_rows(path: Path, header: tuple[str, str]) -> list[tuple[int, float, int]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise
    reader = csv.reader(io.StringIO(text))
    rows = []
    first = True
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if first:
            first = False
            if [c.strip().lower() for c in row] != list(header):
                raise IngestError(f"{path}: line {lineno}: expected header {','.join(header)}")
            continue
        if len(row) != 2:
            raise IngestError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
        try:
            key = int(row[0])
            val = float(row[1])
        except ValueError:
            raise IngestError(f"{path}: line {lineno}: cannot parse {','.join(row)!r}") from None
        rows.append((key, val, lineno))
    if first:
        raise IngestError(f"{path}: empty file")
    return rows


def read_monthly_csv(path: str | Path, kind: str) -> MonthlyResource:
    """Read a ``month,value`` CSV (months 1 to 12) for resource ``kind``."""
    path = Path(path)
    rows = _read_rows(path, ("month", "value"))
    months = [r[0] for r in rows]
    if sorted(months) != list(range(1, 13)):
        raise IngestError(f"{path}: months must be exactly 1..12")
    for month, val, lineno in rows:
        if kind != "temperature" and val < 0:
            raise IngestError(f"{path}: line {lineno}: negative value")
    values = [v for _, v, _ in sorted(rows)]
    return MonthlyResource(tuple(values), UNITS[kind])


def read_load_shape_csv(path: str | Path) -> list[float]:
    """Read an ``hour,kw`` CSV (hours 0 to 23)."""
    path = Path(path)
    rows = _read_rows(path, ("hour", "kw"))
    hours = [r[0] for r in rows]
    if sorted(hours) != list(range(24)):
        raise IngestError(f"{path}: hours must be exactly 0..23")
    for _, val, lineno in rows:
        if val < 0:
            raise IngestError(f"{path}: line {lineno}: negative load")
    return [v for _, v, _ in sorted(rows)]


# =============================================================================
# BUNDLE
# =============================================================================


@dataclass(frozen=True, eq=False)
class SeriesBundle:
    """Everything the dispatch engine reads per slot, before component models."""

    load_kw: HourlySeries
    ghi_kw_m2: Optional[HourlySeries] = None
    wind_ms: Optional[HourlySeries] = None
    biomass_kg_h: Optional[HourlySeries] = None
    ambient_degC: Optional[HourlySeries] = None

    def scaled(self, load: float = 1.0, ghi: float = 1.0) -> "SeriesBundle":
        return SeriesBundle(
            self.load_kw.scaled(load) if load != 1.0 else self.load_kw,
            self.ghi_kw_m2.scaled(ghi) if (self.ghi_kw_m2 is not None and ghi != 1.0) else self.ghi_kw_m2,
            self.wind_ms,
            self.biomass_kg_h,
            self.ambient_degC,
        )


def load_bundle(cfg, resources_dir: str | Path) -> SeriesBundle:
    """Build the series bundle a scenario's ``load``/``resources`` sections point at.

    File names are resolved against ``resources_dir``. Raises ``OSError``
    for unreadable files and ``IngestError`` for malformed content.
    """
    root = Path(resources_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"resources directory not found: {root}")
    res = cfg.resources
    ld = cfg.load
    if ld.shape_kw is not None:
        shape = list(ld.shape_kw)
    elif ld.shape_csv is not None:
        shape = read_load_shape_csv(root / ld.shape_csv)
    else:
        shape = [1.0] * 24 if ld.kwh_per_day > 0 else [0.0] * 24
    target = ld.kwh_per_day if ld.kwh_per_day > 0 else None
    load = load_profile(shape, target)

    ghi = wind = bio = None
    if res.ghi_csv:
        ghi = synthesize_ghi(read_monthly_csv(root / res.ghi_csv, "ghi"))
        if res.ghi_scale != 1.0:
            ghi = ghi.scaled(res.ghi_scale)
    if res.wind_csv:
        wind = synthesize_wind(read_monthly_csv(root / res.wind_csv, "wind"), seed=res.wind_seed)
    if res.biomass_csv:
        bio = synthesize_biomass(read_monthly_csv(root / res.biomass_csv, "biomass"))
    temp_monthly = read_monthly_csv(root / res.temperature_csv, "temperature") if res.temperature_csv else None
    return SeriesBundle(load, ghi, wind, bio, synthesize_temperature(temp_monthly))
