"""Shared fixtures data, random scenario generators and the brute-force dispatch oracle."""

from __future__ import annotations

import itertools
import math
from pathlib import Path

import numpy as np

from hybridsizer.model import (BatterySpec, BgSpec, ConverterSpec, DgSpec, DispatchSpec, GridSpec,
                               PvSpec, ScenarioConfig, WindSpec)

ROOT = Path(__file__).resolve().parents[1]
HOSPITAL = ROOT / "data" / "hospital"
RESOURCES = HOSPITAL / "resources"

HOSPITAL_KWH_PER_DAY = 11214.66
HOSPITAL_ANNUAL_KWH = 4093350.9


def balance_residual(trace) -> np.ndarray:
    """Per-slot (inputs - outputs) of the energy ledger, relative to the slot's throughput."""
    inputs = (trace["pv"] + trace["wind"] + trace["bg"] + trace["dg"] + trace["grid_buy"]
              + trace["discharge"])
    outputs = (trace["served"] + trace["charge"] + trace["grid_sell"] + trace["excess"]
               + trace["loss"])
    scale = np.maximum(np.maximum(inputs, outputs), 1e-9)
    return np.abs(inputs - outputs) / scale


# =============================================================================
# RANDOM SCENARIOS
# =============================================================================


def random_scenario(rng: np.random.Generator, n: int = 8760):
    """A random valid scenario plus load/pv/wind/biomass-limit arrays of length ``n``."""
    keys = [k for k in ("pv", "wind", "bg", "dg", "battery", "grid") if rng.random() < 0.5]
    peak = float(rng.uniform(1, 1000))
    specs = {}
    if "pv" in keys:
        specs["pv"] = PvSpec(rated_kw=float(rng.uniform(0, 2 * peak)))
    if "wind" in keys:
        specs["wind"] = WindSpec(rated_kw=float(rng.uniform(0, peak)))
    if "bg" in keys:
        specs["bg"] = BgSpec(rated_kw=float(rng.uniform(0, peak)), cuf=float(rng.uniform(0, 1)),
                             min_load_ratio=float(rng.uniform(0, 0.5)),
                             operating_hours_per_day=float(rng.choice([8, 12, 24])))
    if "dg" in keys:
        specs["dg"] = DgSpec(rated_kw=float(rng.uniform(0, peak)),
                             min_load_ratio=float(rng.uniform(0, 0.5)))
    if "battery" in keys:
        specs["battery"] = BatterySpec(
            capacity_kwh_per_string=float(rng.uniform(0.5, 10)), strings=int(rng.integers(0, 500)),
            soc_min_frac=float(rng.uniform(0, 0.5)), charge_eff=float(rng.uniform(0.7, 1)),
            discharge_eff=float(rng.uniform(0.7, 1)))
    if "pv" in keys or "battery" in keys or rng.random() < 0.3:
        specs["converter"] = ConverterSpec(rated_kw=float(rng.uniform(0, 2 * peak)),
                                           efficiency=float(rng.uniform(0.8, 1)))
    if "grid" in keys:
        specs["grid"] = GridSpec(max_purchase_kw=float(rng.choice([math.inf, rng.uniform(0, peak)])),
                                 max_sale_kw=float(rng.choice([0.0, rng.uniform(0, peak)])))
    cfg = ScenarioConfig(**specs, dispatch=DispatchSpec(initial_soc_frac=float(rng.uniform(0, 1))))
    load = rng.uniform(0, peak, n) * (rng.random(n) > 0.05)
    pv = rng.uniform(0, 2 * peak, n) * (rng.random(n) > 0.5)
    wind = rng.uniform(0, peak, n) * (rng.random(n) > 0.3)
    bg_feed = np.where(rng.random(n) < 0.2, rng.uniform(0, peak, n), np.inf)
    return cfg, load, pv, wind, bg_feed


def random_differential_flows(rng: np.random.Generator) -> list[float]:
    """Savings-versus-base flows on a $10^6 scale: an up-front outlay, yearly savings
    with occasional replacement years, and a positive undiscounted total."""
    while True:
        n = int(rng.integers(2, 31))
        savings = rng.uniform(0, 1e6, n)
        replace = rng.random(n) < 0.15
        savings[replace] = -rng.uniform(0, 5e5, int(replace.sum()))
        flows = [-float(rng.uniform(1e5, 5e6))] + [float(x) for x in savings]
        if sum(flows) > 0:
            return flows


# =============================================================================
# BRUTE-FORCE ORACLE
# =============================================================================

Q = 0.5
ORACLE_SOURCES = ("wind", "battery", "bg", "dg", "grid")


def _steps(cap: float) -> list[float]:
    return [Q * k for k in range(int(round(cap / Q)) + 1)]


def random_oracle_instance(rng: np.random.Generator, slots: int = 24):
    """A quantized instance with 1 to 3 sources; every quantity is a multiple of 0.5 kWh."""
    k = int(rng.integers(1, 4))
    chosen = tuple(sorted(rng.choice(len(ORACLE_SOURCES), size=k, replace=False)))
    sources = [ORACLE_SOURCES[i] for i in chosen]
    q = lambda lo, hi: Q * int(rng.integers(int(lo / Q), int(hi / Q) + 1))
    load = np.array([q(0, 10) for _ in range(slots)])
    wind = np.array([q(0, 12) for _ in range(slots)]) if "wind" in sources else np.zeros(slots)
    inst = {"sources": sources, "load": load, "wind": wind}
    specs = {"converter": ConverterSpec(rated_kw=1e6, efficiency=1.0)}
    if "bg" in sources:
        inst["bg"] = q(0.5, 6)
        specs["bg"] = BgSpec(rated_kw=inst["bg"], cuf=1.0, min_load_ratio=0.0)
    if "dg" in sources:
        inst["dg"] = q(0.5, 6)
        specs["dg"] = DgSpec(rated_kw=inst["dg"], min_load_ratio=0.0)
    if "grid" in sources:
        inst["grid"] = q(0.5, 6)
        specs["grid"] = GridSpec(max_purchase_kw=inst["grid"])
    soc0 = 0.0
    if "battery" in sources:
        cap = q(0.5, 20)
        inst["battery"] = {"capacity": cap, "limit": q(0.5, 5)}
        soc0 = cap if rng.random() < 0.5 else 0.0
        specs["battery"] = BatterySpec(capacity_kwh_per_string=cap, strings=1, soc_min_frac=0.0,
                                       charge_eff=1.0, discharge_eff=1.0,
                                       max_charge_kw=inst["battery"]["limit"],
                                       max_discharge_kw=inst["battery"]["limit"])
    inst["soc0"] = soc0
    cfg = ScenarioConfig(**specs, dispatch=DispatchSpec(
        initial_soc_frac=(1.0 if soc0 > 0 else 0.0)))
    return cfg, inst


def oracle_dispatch(inst) -> tuple[float, float]:
    """Served and unmet totals from an exhaustive per-slot search.

    Each slot enumerates every quantized allocation of the sources that does
    not exceed the load and keeps the lexicographically largest one in
    priority order (wind, battery, biomass, diesel, grid). Leftover wind is
    then stored, again by enumerating every feasible quantized charge.
    """
    soc = inst["soc0"]
    batt = inst.get("battery")
    served = unmet = 0.0
    for t in range(inst["load"].size):
        load = float(inst["load"][t])
        caps = {
            "wind": float(inst["wind"][t]),
            "battery": min(soc, batt["limit"]) if batt else 0.0,
            "bg": inst.get("bg", 0.0),
            "dg": inst.get("dg", 0.0),
            "grid": inst.get("grid", 0.0),
        }
        best = None
        for alloc in itertools.product(*(_steps(caps[s]) for s in ORACLE_SOURCES)):
            if sum(alloc) <= load + 1e-12 and (best is None or alloc > best):
                best = alloc
        got = dict(zip(ORACLE_SOURCES, best))
        served += sum(best)
        unmet += load - sum(best)
        soc -= got["battery"]
        if batt and got["battery"] == 0:
            spare = caps["wind"] - got["wind"]
            room = min(batt["limit"], batt["capacity"] - soc)
            charge = max(c for c in _steps(max(min(spare, room), 0.0)))
            soc += charge
    return served, unmet
