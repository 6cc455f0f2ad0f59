"""Lifetime economics: annualized component costs, net present cost, cost of
energy, and the indicator suite used to compare a design against a base case
(present/annual worth, ROI, IRR, simple and discounted payback).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .dispatch import DispatchResult
from .model import EconParams, ScenarioConfig


def crf(i: float, n: float) -> float:
    """Capital recovery factor i(1+i)^n / ((1+i)^n - 1); 1/n when i is 0."""
    if n <= 0:
        raise ValueError("project lifetime must be ≥ 1 year")
    if i < 0:
        raise ValueError("discount rate must be ≥ 0")
    if i == 0:
        return 1.0 / n
    growth = n * math.log1p(i)
    return i * math.exp(growth) / math.expm1(growth)


def present_value_factor(i: float, n: float) -> float:
    """Present value of n unit end-of-year payments at rate i."""
    if i == 0:
        return float(n)
    return -math.expm1(-n * math.log1p(i)) / i


def discount_rate_for_crf(target: float, n: int, lo: float = 0.0, hi: float = 1.0) -> float:
    """Invert :func:`crf` for the rate; CRF is increasing in i so bisection is safe."""
    if not crf(lo, n) <= target <= crf(hi, n):
        raise ValueError(f"CRF {target} not reachable for n={n} within [{lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if crf(mid, n) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# =============================================================================
# COMPONENT COSTS
# =============================================================================


def _replacement_years(lifetime: float, n: int) -> list[float]:
    years = []
    k = 1
    while k * lifetime < n - 1e-9:
        years.append(k * lifetime)
        k += 1
    return years


def _salvage(replacement_usd: float, lifetime: float, n: int) -> float:
    """Straight-line value left in the last installed unit at project end."""
    installed = max(_replacement_years(lifetime, n), default=0.0)
    remaining = installed + lifetime - n
    if remaining <= 0:
        return 0.0
    base = replacement_usd
    return base * remaining / lifetime


@dataclass(frozen=True)
class ComponentCost:
    capital_usd: float
    capital_annual: float
    replacement_annual: float
    om_annual: float
    fuel_annual: float
    salvage_annual: float

    @property
    def total_annual(self) -> float:
        return (self.capital_annual + self.replacement_annual + self.om_annual
                + self.fuel_annual - self.salvage_annual)


def component_cost(capital_usd: float, replacement_usd: float, om_usd_per_yr: float,
                   lifetime_yr: float, econ: EconParams, fuel_usd_per_yr: float = 0.0) -> ComponentCost:
    if lifetime_yr <= 0:
        raise ValueError("component lifetime must be > 0")
    i, n = econ.discount_rate_frac, econ.project_lifetime_yr
    f = crf(i, n)
    pv_repl = sum(replacement_usd / (1.0 + i) ** y for y in _replacement_years(lifetime_yr, n))
    salvage = _salvage(replacement_usd, lifetime_yr, n)
    return ComponentCost(
        capital_usd=capital_usd,
        capital_annual=capital_usd * f,
        replacement_annual=pv_repl * f,
        om_annual=om_usd_per_yr,
        fuel_annual=fuel_usd_per_yr,
        salvage_annual=salvage / (1.0 + i) ** n * f,
    )


def annualize_component(spec, fuel_cost_usd_per_yr: float, econ: EconParams) -> float:
    """Equivalent annual cost of one component over the project life.

    Capital is recovered over the project, replacements falling inside the
    project are discounted and spread over it, O&M and fuel are added as
    paid, and the straight-line salvage of the last unit is credited.
    """
    return component_cost(spec.capital_usd, spec.replacement_usd, spec.om_usd_per_yr,
                          spec.lifetime_yr, econ, fuel_cost_usd_per_yr).total_annual


def npc_and_coe(c_ann_tot: float, e_served_kwh_per_yr: float, econ: EconParams) -> tuple[float, float]:
    if e_served_kwh_per_yr <= 0:
        raise ValueError("cost of energy needs a positive served energy")
    return c_ann_tot / crf(econ.discount_rate_frac, econ.project_lifetime_yr), c_ann_tot / e_served_kwh_per_yr


# =============================================================================
# COST REPORT
# =============================================================================


@dataclass(frozen=True)
class CostReport:
    crf: float
    annualized: Mapping[str, float]
    c_ann_tot: float
    npc: float
    coe: float
    initial_cost: float
    operating_cost: float
    om_usd_per_yr: float
    fuel_usd_per_yr: float
    e_served_kwh: float
    cash_flows: tuple[float, ...] = field(default=(), repr=False)

    def summary(self) -> dict:
        return {
            "crf": self.crf, "annualized": dict(self.annualized), "c_ann_tot": self.c_ann_tot,
            "npc": self.npc, "coe": self.coe, "initial_cost": self.initial_cost,
            "operating_cost": self.operating_cost, "om_usd_per_yr": self.om_usd_per_yr,
            "fuel_usd_per_yr": self.fuel_usd_per_yr, "e_served_kwh": self.e_served_kwh,
        }


def _nominal_flows(spec, n: int, annual: float) -> np.ndarray:
    """Year-by-year nominal outlays of one component (year 0 = capital)."""
    flows = np.full(n + 1, annual)
    flows[0] = spec.capital_usd
    for y in _replacement_years(spec.lifetime_yr, n):
        flows[int(round(y))] += spec.replacement_usd
    flows[n] -= _salvage(spec.replacement_usd, spec.lifetime_yr, n)
    return flows


def cost_report(cfg: ScenarioConfig, result: DispatchResult) -> CostReport:
    """Cost every present component against one year of dispatch.

    Grid energy is booked as O&M of the grid (purchases minus sales), diesel
    fuel and biomass marginal cost as fuel. Operating cost is everything
    except annualized capital and O&M: fuel plus replacements minus salvage.
    """
    econ = cfg.econ
    n = econ.project_lifetime_yr
    f = crf(econ.discount_rate_frac, n)
    annualized: dict[str, float] = {}
    flows = np.zeros(n + 1)
    initial = om = fuel = repl_net = 0.0
    for key in ("pv", "wind", "bg", "dg", "battery", "converter"):
        spec = getattr(cfg, key)
        if spec is None:
            continue
        fuel_cost = 0.0
        if key == "dg":
            fuel_cost = result.dg_fuel_l * spec.fuel_price_usd_per_l
        elif key == "bg":
            fuel_cost = result.bg_kwh * spec.marginal_cost_usd_per_kwh
        cc = component_cost(spec.capital_usd, spec.replacement_usd, spec.om_usd_per_yr,
                            spec.lifetime_yr, econ, fuel_cost)
        annualized[key] = cc.total_annual
        initial += spec.capital_usd
        om += spec.om_usd_per_yr
        fuel += fuel_cost
        repl_net += cc.replacement_annual - cc.salvage_annual
        flows += _nominal_flows(spec, n, spec.om_usd_per_yr + fuel_cost)
    gr = cfg.grid
    if gr is not None and gr.present:
        grid_cost = (result.grid_purchase_kwh * gr.purchase_usd_per_kwh
                     - result.grid_sale_kwh * gr.sellback_usd_per_kwh)
        annualized["grid"] = grid_cost
        om += grid_cost
        flows[1:] += grid_cost
    c_ann = math.fsum(annualized.values())
    served = result.load_served_kwh
    npc = c_ann / f
    coe = c_ann / served if served > 0 else 0.0
    return CostReport(
        crf=f, annualized=annualized, c_ann_tot=c_ann, npc=npc, coe=coe,
        initial_cost=initial, operating_cost=fuel + repl_net, om_usd_per_yr=om,
        fuel_usd_per_yr=fuel, e_served_kwh=served, cash_flows=tuple(float(x) for x in flows),
    )


# =============================================================================
# COMPARISON AGAINST A BASE CASE
# =============================================================================


def npv(rate: float, flows: Sequence[float]) -> float:
    """NPV of flows indexed by year, year 0 undiscounted."""
    return math.fsum(cf / (1.0 + rate) ** t for t, cf in enumerate(flows))


def irr(flows: Sequence[float], lo: float = -0.99, hi: float = 10.0,
        tol: float = 1e-7) -> Optional[float]:
    """Rate where NPV is zero, by bisection; ``None`` without a sign change.

    The bracket is scanned on a grid for sign changes. When the flows have
    several roots, those on the side of zero where NPV(0) points (positive
    rates for a positive undiscounted sum, negative rates for a negative one)
    are preferred, nearest zero first. Far negative roots sit where
    ``(1 + r)**-t`` explodes and NPV cannot be resolved to the cent. The chosen
    bracket is bisected until it is narrower than ``tol`` and NPV no longer
    improves at double precision.
    """
    grid = np.concatenate([np.linspace(lo, 0.0, 100, endpoint=False), np.geomspace(1e-6, hi, 400)])
    grid = np.unique(np.concatenate([[lo, 0.0], grid, [hi]]))
    vals = [npv(r, flows) for r in grid]
    roots = [float(r) for r, v in zip(grid, vals) if v == 0.0]
    brackets = [(float(grid[k]), float(grid[k + 1]), vals[k]) for k in range(len(grid) - 1)
                if vals[k] != 0.0 and vals[k + 1] != 0.0 and (vals[k] < 0) != (vals[k + 1] < 0)]
    if not roots and not brackets:
        return None
    total = math.fsum(flows)

    def off_side(a: float, b: float) -> bool:
        return (total > 0 and b <= 0.0) or (total < 0 and a >= 0.0)

    candidates = [(off_side(r, r), abs(r), r, None) for r in roots]
    candidates += [(off_side(a, b), min(abs(a), abs(b)), a, (a, b, fa)) for a, b, fa in brackets]
    *_, root, bracket = min(candidates, key=lambda c: c[:3])
    if bracket is None:
        return root
    a, b, fa = bracket
    while True:
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        fm = npv(m, flows)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
        if b - a < tol * 1e-6:
            break
    return min((a, b), key=lambda r: abs(npv(r, flows)))


@dataclass(frozen=True)
class ComparisonReport:
    present_worth: float
    annual_worth: float
    roi_frac: Optional[float]
    irr_frac: Optional[float]
    simple_payback_yr: Optional[float]
    discounted_payback_yr: Optional[float]
    base_case: str = "Grid only"

    def summary(self) -> dict:
        return {
            "present_worth": self.present_worth, "annual_worth": self.annual_worth,
            "roi_frac": self.roi_frac, "irr_frac": self.irr_frac,
            "simple_payback_yr": self.simple_payback_yr,
            "discounted_payback_yr": self.discounted_payback_yr, "base_case": self.base_case,
        }


def differential_flows(candidate_flows: Sequence[float], base_flows: Sequence[float]) -> list[float]:
    """Savings of the candidate relative to the base, year by year (year 0 negative capital)."""
    if len(candidate_flows) != len(base_flows):
        raise ValueError("candidate and base cash flows must cover the same project lifetime")
    return [b - c for c, b in zip(candidate_flows, base_flows)]


def indicators(diff: Sequence[float], econ: EconParams, base_case: str = "Grid only") -> ComparisonReport:
    """Indicator suite for a differential (base minus candidate) cash-flow series."""
    i, n = econ.discount_rate_frac, len(diff) - 1
    f = crf(i, n)
    pw = npv(i, diff)
    aw = pw * f
    d_cap = -diff[0]
    savings = list(diff[1:])
    mean_saving = math.fsum(savings) / n
    if d_cap == 0:
        roi = 0.0 if mean_saving == 0 else None
        return ComparisonReport(pw, aw, roi, None, None, None, base_case)
    roi = mean_saving / d_cap
    simple = d_cap / mean_saving if mean_saving > 0 else None
    disc = None
    cum = 0.0
    for t, s in enumerate(savings, start=1):
        step = s / (1.0 + i) ** t
        if cum + step >= d_cap and step > 0:
            disc = (t - 1) + (d_cap - cum) / step
            break
        cum += step
    return ComparisonReport(pw, aw, roi, irr(diff), simple, disc, base_case)


def compare_to_base(candidate: CostReport, base: CostReport, econ: EconParams,
                    base_case: str = "Grid only") -> ComparisonReport:
    """Indicators of a candidate design against a base design's cash flows."""
    return indicators(differential_flows(candidate.cash_flows, base.cash_flows), econ, base_case)
