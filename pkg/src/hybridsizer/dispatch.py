"""Hour-by-hour load-following dispatch over one year.

Bus layout: load, wind, biomass, diesel and grid sit on the AC bus; PV and
the battery sit on the DC bus. Every DC/AC transfer goes through the
converter, which has a single per-slot throughput limit (AC side) shared by
both directions and loses ``1 - efficiency`` of what it moves.

Slot rule (load following):

1. deficit served by wind, then PV through the inverter;
2. battery discharge through the inverter;
3. biomass generator, then diesel, each at ``max(deficit, min load)``
   within its available capacity;
4. grid purchase, then unmet load.

Surplus (renewable leftovers and min-load overshoot) goes to battery
charging (DC PV directly, AC surplus through the rectifier), then grid
sale, then is dumped as excess. Leftover DC surplus is inverted before it
is dumped if the converter has room.

The slot rule lives in :func:`_slot`; the year loop and :func:`step_hour`
both call it, so there is one definition of the balance.
"""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np
from numba import njit

from .ingest import HourlySeries, SeriesBundle
from .model import (HOURS_PER_DAY, SLOTS_PER_YEAR, BatterySpec, ScenarioConfig,
                    ScenarioError, validate_scenario)
from . import power

CHANNELS = ("load", "pv", "wind", "bg", "dg", "grid_buy", "grid_sell", "charge",
            "discharge", "soc", "unmet", "excess", "loss", "fuel", "served")
_CH = {name: i for i, name in enumerate(CHANNELS)}
TRACE_COLUMNS = ("load", "pv", "wind", "bg", "dg", "grid_buy", "grid_sell", "charge",
                 "discharge", "soc", "unmet", "excess")


# =============================================================================
# SLOT KERNEL
# =============================================================================


@njit(cache=True)
def _slot(load, pv, wind, bg_cap, bg_min, dg_cap, dg_min, buy_cap, sell_cap,
          conv_cap, eta, soc, soc_min, soc_max, ch_eff, dis_eff, ch_lim, dis_lim):
    loss = 0.0

    w_used = min(wind, load)
    served = w_used
    deficit = load - w_used
    ac_surplus = wind - w_used

    room = conv_cap
    pv_dc = 0.0
    if pv > 0.0 and room > 0.0 and deficit > 0.0:
        cap_ac = min(deficit, room)
        if pv * eta <= cap_ac:
            pv_dc = pv
            pv_ac = pv * eta
        else:
            pv_ac = cap_ac
            pv_dc = min(cap_ac / eta, pv)
        loss += pv_dc - pv_ac
        served += pv_ac
        deficit = max(deficit - pv_ac, 0.0)
        room -= pv_ac
    dc_surplus = pv - pv_dc

    dis = 0.0
    if deficit > 0.0 and room > 0.0 and soc > soc_min:
        avail = min((soc - soc_min) * dis_eff, dis_lim)
        cap_ac = min(deficit, room)
        if avail * eta <= cap_ac:
            dis = avail
            dis_ac = avail * eta
        else:
            dis_ac = cap_ac
            dis = cap_ac / eta
        loss += dis - dis_ac
        served += dis_ac
        deficit = max(deficit - dis_ac, 0.0)
        room -= dis_ac
        soc -= dis / dis_eff
        if soc < soc_min:
            soc = soc_min

    bg = 0.0
    if deficit > 0.0 and bg_cap > 0.0 and bg_cap >= bg_min:
        bg = min(max(deficit, bg_min), bg_cap)
        used = min(bg, deficit)
        ac_surplus += bg - used
        served += used
        deficit -= used

    dg = 0.0
    if deficit > 0.0 and dg_cap > 0.0 and dg_cap >= dg_min:
        dg = min(max(deficit, dg_min), dg_cap)
        used = min(dg, deficit)
        ac_surplus += dg - used
        served += used
        deficit -= used

    buy = 0.0
    if deficit > 0.0 and buy_cap > 0.0:
        buy = min(deficit, buy_cap)
        served += buy
        deficit -= buy
    unmet = deficit

    charge = 0.0
    if dis == 0.0 and soc < soc_max and ch_lim > 0.0:
        batt_room = min(ch_lim, (soc_max - soc) / ch_eff)
        c_dc = min(dc_surplus, batt_room)
        dc_surplus -= c_dc
        batt_room -= c_dc
        charge += c_dc
        if ac_surplus > 0.0 and room > 0.0 and batt_room > 0.0:
            ac_in = min(ac_surplus, room, batt_room / eta)
            c_ac = ac_in * eta
            ac_surplus -= ac_in
            room -= ac_in
            loss += ac_in - c_ac
            charge += c_ac
        soc += charge * ch_eff
        if soc > soc_max:
            soc = soc_max

    if dc_surplus > 0.0 and room > 0.0:
        if dc_surplus * eta <= room:
            inv_dc = dc_surplus
            inv_ac = dc_surplus * eta
        else:
            inv_ac = room
            inv_dc = min(room / eta, dc_surplus)
        loss += inv_dc - inv_ac
        dc_surplus -= inv_dc
        ac_surplus += inv_ac
        room -= inv_ac

    sell = min(ac_surplus, sell_cap)
    ac_surplus -= sell
    excess = ac_surplus + dc_surplus
    return served, unmet, bg, dg, buy, sell, charge, dis, soc, excess, loss


@njit(cache=True)
def _run_load_following(load, pv, wind, bg_feed_kw, bg_rated, bg_min, bg_daily_budget,
                        dg_rated, dg_min, fuel_f1, fuel_f2, buy_cap, sell_cap, conv_cap, eta,
                        soc0, soc_min, soc_max, ch_eff, dis_eff, ch_lim, dis_lim):
    n = load.shape[0]
    out = np.zeros((15, n))
    soc_trace = np.empty(n + 1)
    soc = soc0
    soc_trace[0] = soc
    budget = 0.0
    for t in range(n):
        if t % 24 == 0:
            budget = bg_daily_budget
        bg_cap = min(bg_rated, bg_feed_kw[t], budget)
        served, unmet, bg, dg, buy, sell, charge, dis, soc, excess, loss = _slot(
            load[t], pv[t], wind[t], bg_cap, bg_min, dg_rated, dg_min, buy_cap, sell_cap,
            conv_cap, eta, soc, soc_min, soc_max, ch_eff, dis_eff, ch_lim, dis_lim)
        budget -= bg
        if budget < 0.0:
            budget = 0.0
        out[0, t] = load[t]
        out[1, t] = pv[t]
        out[2, t] = wind[t]
        out[3, t] = bg
        out[4, t] = dg
        out[5, t] = buy
        out[6, t] = sell
        out[7, t] = charge
        out[8, t] = dis
        out[9, t] = soc
        out[10, t] = unmet
        out[11, t] = excess
        out[12, t] = loss
        out[13, t] = fuel_f1 * dg_rated + fuel_f2 * dg if dg > 0.0 else 0.0
        out[14, t] = served
        soc_trace[t + 1] = soc
    return out, soc_trace


STRATEGIES: dict[str, Callable] = {"load_following": _run_load_following}


# =============================================================================
# PARAMETERS
# =============================================================================


@dataclass(frozen=True)
class _Params:
    bg_rated: float
    bg_min: float
    bg_daily_budget: float
    dg_rated: float
    dg_min: float
    fuel_f1: float
    fuel_f2: float
    buy_cap: float
    sell_cap: float
    conv_cap: float
    eta: float
    soc0: float
    soc_min: float
    soc_max: float
    ch_eff: float
    dis_eff: float
    ch_lim: float
    dis_lim: float


def _params(cfg: ScenarioConfig) -> _Params:
    bg, dg, bt, cv, gr = cfg.bg, cfg.dg, cfg.battery, cfg.converter, cfg.grid
    grid_on = gr is not None and gr.present
    if bt is not None and bt.capacity_kwh > 0:
        cap = bt.capacity_kwh
        soc_min = bt.soc_min_frac * cap
        soc0 = max(cap * cfg.dispatch.initial_soc_frac, soc_min)
        batt = (soc0, soc_min, cap, bt.charge_eff, bt.discharge_eff,
                bt.charge_limit_kw, bt.discharge_limit_kw)
    else:
        batt = (0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
    return _Params(
        bg_rated=bg.rated_kw if bg else 0.0,
        bg_min=bg.min_load_ratio * bg.rated_kw if bg else 0.0,
        bg_daily_budget=bg.rated_kw * bg.cuf * bg.operating_hours_per_day if bg else 0.0,
        dg_rated=dg.rated_kw if dg else 0.0,
        dg_min=dg.min_load_ratio * dg.rated_kw if dg else 0.0,
        fuel_f1=dg.fuel_intercept_l_per_h_per_kw if dg else 0.0,
        fuel_f2=dg.fuel_slope_l_per_kwh if dg else 0.0,
        buy_cap=gr.max_purchase_kw if grid_on else 0.0,
        sell_cap=gr.max_sale_kw if grid_on else 0.0,
        conv_cap=cv.rated_kw if cv else 0.0,
        eta=cv.efficiency if cv else 1.0,
        soc0=batt[0], soc_min=batt[1], soc_max=batt[2], ch_eff=batt[3], dis_eff=batt[4],
        ch_lim=batt[5], dis_lim=batt[6],
    )


# =============================================================================
# BATTERY + SINGLE SLOT
# =============================================================================


@dataclass(frozen=True)
class BatteryState:
    soc_kwh: float
    capacity_kwh: float


def battery_update(state: BatteryState, charge_kwh: float, discharge_kwh: float,
                   spec: BatterySpec) -> tuple[BatteryState, float, float]:
    """Apply one slot of charging or discharging at the battery terminals.

    Returns the new state together with the charge and discharge actually
    accepted; when the request would leave ``[soc_min, capacity]`` the
    accepted amount is cut back so no energy disappears silently.
    """
    if charge_kwh > 0 and discharge_kwh > 0:
        raise ValueError("cannot charge and discharge in the same slot")
    if charge_kwh < 0 or discharge_kwh < 0:
        raise ValueError("charge and discharge must be ≥ 0")
    soc_min = spec.soc_min_frac * state.capacity_kwh
    soc = state.soc_kwh
    if charge_kwh > 0:
        accepted = min(charge_kwh, max(state.capacity_kwh - soc, 0.0) / spec.charge_eff)
        soc = min(soc + accepted * spec.charge_eff, state.capacity_kwh)
        return BatteryState(soc, state.capacity_kwh), accepted, 0.0
    if discharge_kwh > 0:
        accepted = min(discharge_kwh, max(soc - soc_min, 0.0) * spec.discharge_eff)
        soc = max(soc - accepted / spec.discharge_eff, soc_min)
        return BatteryState(soc, state.capacity_kwh), 0.0, accepted
    return state, 0.0, 0.0


@dataclass(frozen=True)
class SlotLedger:
    load: float
    pv: float
    wind: float
    bg: float
    dg: float
    grid_buy: float
    grid_sell: float
    charge: float
    discharge: float
    soc: float
    served: float
    unmet: float
    excess: float
    loss: float


def step_hour(cfg: ScenarioConfig, state: Optional[BatteryState], load_kw: float,
              pv_kw: float = 0.0, wind_kw: float = 0.0,
              bg_available_kw: Optional[float] = None) -> tuple[SlotLedger, Optional[BatteryState]]:
    """Dispatch a single slot.

    ``pv_kw`` is DC output, ``wind_kw`` AC output. ``bg_available_kw``
    caps the biomass generator below its rating (feedstock or daily budget);
    ``None`` means the full rating is available.
    """
    p = _params(cfg)
    if state is None:
        soc, soc_max = 0.0, 0.0
    else:
        soc, soc_max = state.soc_kwh, state.capacity_kwh
    soc_min = cfg.battery.soc_min_frac * soc_max if cfg.battery is not None else 0.0
    if state is not None and not soc_min - 1e-9 <= soc <= soc_max + 1e-9:
        raise ValueError("battery state of charge outside its bounds")
    bg_cap = p.bg_rated if bg_available_kw is None else min(p.bg_rated, bg_available_kw)
    served, unmet, bg, dg, buy, sell, charge, dis, soc, excess, loss = _slot(
        float(load_kw), float(pv_kw), float(wind_kw), bg_cap, p.bg_min, p.dg_rated, p.dg_min,
        p.buy_cap, p.sell_cap, p.conv_cap, p.eta, float(soc), soc_min, float(soc_max),
        p.ch_eff, p.dis_eff, p.ch_lim if state is not None else 0.0, p.dis_lim)
    ledger = SlotLedger(load_kw, pv_kw, wind_kw, bg, dg, buy, sell, charge, dis, soc,
                        served, unmet, excess, loss)
    new_state = None if state is None else BatteryState(soc, soc_max)
    return ledger, new_state


# =============================================================================
# YEAR
# =============================================================================


@dataclass(frozen=True, eq=False)
class DispatchResult:
    pv_kwh: float
    wind_kwh: float
    bg_kwh: float
    dg_kwh: float
    grid_purchase_kwh: float
    grid_sale_kwh: float
    load_kwh: float
    load_served_kwh: float
    unmet_kwh: float
    excess_kwh: float
    losses_kwh: float
    charge_kwh: float
    discharge_kwh: float
    dg_fuel_l: float
    dg_hours: int
    bg_feedstock_kg: float
    renewable_fraction: float
    min_renewable_penetration_frac: float
    max_renewable_penetration_frac: float
    trace: Optional[Mapping[str, np.ndarray]] = None
    soc_kwh: Optional[np.ndarray] = None

    @property
    def unmet_fraction(self) -> float:
        return self.unmet_kwh / self.load_kwh if self.load_kwh > 0 else 0.0

    @property
    def production_kwh(self) -> float:
        """Annual electricity production including grid purchases."""
        return self.pv_kwh + self.wind_kwh + self.bg_kwh + self.dg_kwh + self.grid_purchase_kwh

    def summary(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name in ("trace", "soc_kwh"):
                continue
            out[f.name] = getattr(self, f.name)
        out["unmet_fraction"] = self.unmet_fraction
        out["production_kwh"] = self.production_kwh
        return out

    def without_trace(self) -> "DispatchResult":
        return dataclasses.replace(self, trace=None, soc_kwh=None)


def _as_array(series, name: str) -> np.ndarray:
    arr = series.values if isinstance(series, HourlySeries) else np.asarray(series, dtype=float)
    if arr.shape != (SLOTS_PER_YEAR,):
        raise ValueError(f"{name} series length {arr.size} != {SLOTS_PER_YEAR}")
    return arr


def component_profiles(cfg: ScenarioConfig, bundle: SeriesBundle) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """PV (DC kW), wind (AC kW) and biomass feedstock limit (kW) per slot."""
    n = SLOTS_PER_YEAR
    pv = np.zeros(n)
    wind = np.zeros(n)
    bg_feed = np.full(n, math.inf)
    if cfg.pv is not None and cfg.pv.rated_kw > 0:
        if bundle.ghi_kw_m2 is None:
            raise ValueError("PV in scenario but no irradiance series supplied")
        ghi = _as_array(bundle.ghi_kw_m2, "ghi")
        amb = _as_array(bundle.ambient_degC, "ambient") if bundle.ambient_degC is not None else np.full(n, 20.0)
        pv = power.pv_profile(cfg.pv, ghi, amb)
    if cfg.wind is not None and cfg.wind.rated_kw > 0:
        if bundle.wind_ms is None:
            raise ValueError("wind turbine in scenario but no wind series supplied")
        v = power.wind_speed_at_hub(cfg.wind, _as_array(bundle.wind_ms, "wind"))
        wind = power.wind_output(cfg.wind, v)
    if cfg.bg is not None and bundle.biomass_kg_h is not None:
        bg_feed = power.bg_feedstock_limit_kw(cfg.bg, _as_array(bundle.biomass_kg_h, "biomass"))
    return pv, wind, bg_feed


def run_profiles(cfg: ScenarioConfig, load: np.ndarray, pv: np.ndarray, wind: np.ndarray,
                 bg_feed_kw: np.ndarray, keep_trace: bool = True) -> DispatchResult:
    """Fold the slot rule over precomputed per-slot arrays."""
    n = load.shape[0]
    for name, arr in (("pv", pv), ("wind", wind), ("biomass", bg_feed_kw)):
        if arr.shape != (n,):
            raise ValueError(f"{name} series length {arr.size} != load length {n}")
    p = _params(cfg)
    kernel = STRATEGIES[cfg.dispatch.strategy]
    out, soc = kernel(np.ascontiguousarray(load, dtype=float), np.ascontiguousarray(pv, dtype=float),
                      np.ascontiguousarray(wind, dtype=float), np.ascontiguousarray(bg_feed_kw, dtype=float),
                      p.bg_rated, p.bg_min, p.bg_daily_budget, p.dg_rated, p.dg_min, p.fuel_f1,
                      p.fuel_f2, p.buy_cap, p.sell_cap, p.conv_cap, p.eta, p.soc0, p.soc_min,
                      p.soc_max, p.ch_eff, p.dis_eff, p.ch_lim, p.dis_lim)
    sums = out.sum(axis=1)
    tot = {name: float(sums[i]) for name, i in _CH.items()}

    served = tot["served"]
    nonrenewable = tot["dg"] + tot["grid_buy"]
    rf = min(max(1.0 - nonrenewable / served, 0.0), 1.0) if served > 0 else 0.0
    has_load = out[0] > 0
    if has_load.any():
        pen = (out[1, has_load] + out[2, has_load] + out[3, has_load]) / out[0, has_load]
        mrp_min, mrp_max = float(pen.min()), float(pen.max())
    else:
        mrp_min = mrp_max = 0.0
    bg_kg = float(power.bg_feedstock_kg(cfg.bg, tot["bg"])) if cfg.bg is not None else 0.0

    trace = None
    if keep_trace:
        trace = {name: out[i] for name, i in _CH.items()}
        for arr in trace.values():
            arr.setflags(write=False)
        soc.setflags(write=False)
    return DispatchResult(
        pv_kwh=tot["pv"], wind_kwh=tot["wind"], bg_kwh=tot["bg"], dg_kwh=tot["dg"],
        grid_purchase_kwh=tot["grid_buy"], grid_sale_kwh=tot["grid_sell"],
        load_kwh=tot["load"], load_served_kwh=served, unmet_kwh=tot["unmet"],
        excess_kwh=tot["excess"], losses_kwh=tot["loss"], charge_kwh=tot["charge"],
        discharge_kwh=tot["discharge"], dg_fuel_l=tot["fuel"],
        dg_hours=int(np.count_nonzero(out[4] > 0)), bg_feedstock_kg=bg_kg,
        renewable_fraction=rf, min_renewable_penetration_frac=mrp_min,
        max_renewable_penetration_frac=mrp_max,
        trace=trace, soc_kwh=soc if keep_trace else None,
    )


def simulate_year(cfg: ScenarioConfig, bundle: SeriesBundle, keep_trace: bool = True) -> DispatchResult:
    """Simulate one year of load-following dispatch for a validated scenario.

    Raises ``ScenarioError`` if the scenario fails validation and
    ``ValueError`` if a series is not 8,760 slots long.
    """
    report = validate_scenario(cfg)
    if not report.ok:
        raise ScenarioError("; ".join(report.messages()))
    load = _as_array(bundle.load_kw, "load")
    pv, wind, bg_feed = component_profiles(cfg, bundle)
    return run_profiles(cfg, load, pv, wind, bg_feed, keep_trace=keep_trace)


def trace_csv(result: DispatchResult) -> str:
    """Per-slot dump: ``slot,load,pv,wind,bg,dg,grid_buy,grid_sell,charge,discharge,soc,unmet,excess``."""
    if result.trace is None:
        raise ValueError("dispatch result was produced without a trace")
    buf = io.StringIO()
    buf.write("slot," + ",".join(TRACE_COLUMNS) + "\n")
    cols = [result.trace[c] for c in TRACE_COLUMNS]
    for t in range(cols[0].shape[0]):
        buf.write(str(t))
        for c in cols:
            buf.write("," + repr(float(c[t])))
        buf.write("\n")
    return buf.getvalue()
