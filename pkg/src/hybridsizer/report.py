"""CSV and JSON rendering of ranked designs and dispatch traces.

Table ids and their fixed columns are listed in ``TABLES``. Formatting:

* energies (kWh) and kg/yr emissions as integers, emissions to 2 decimals;
* money as an integer below $1M and as ``6.45M`` (2 decimals, millions) above;
* cost of energy with 4 decimals;
* fractions as percentages with 2 decimals;
* undefined values (no payback, no IRR) as an empty cell.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Callable, Iterable, Optional, Sequence

from .dispatch import CHANNELS, DispatchResult

TABLES: dict[str, tuple[str, ...]] = {
    "T2_energy": ("rank", "system", "wind_kwh", "bg_kwh", "pv_kwh", "dg_kwh", "grid_kwh",
                  "production_kwh"),
    "T3_renewable": ("rank", "system", "renewable_fraction_pct", "excess_kwh", "unmet_kwh",
                     "min_penetration_pct", "max_penetration_pct"),
    "T4_cost_perf": ("rank", "system", "coe_usd_per_kwh", "npc_usd", "initial_cost_usd",
                     "operating_cost_usd", "om_usd_per_yr", "renewable_fraction_pct", "excess_kwh",
                     "unmet_kwh", "dg_kwh", "bg_kwh", "pv_kwh", "wind_kwh", "production_kwh"),
    "T5_grid_econ": ("rank", "system", "coe_usd_per_kwh", "npc_usd", "initial_cost_usd",
                     "operating_cost_usd", "om_usd_per_yr"),
    "T6_sizing_emissions": ("rank", "system", "pv_kw", "wind_kw", "bg_kw", "dg_kw",
                            "battery_strings", "converter_kw", "grid_kw", "pv_kwh", "wind_kwh",
                            "bg_kwh", "dg_kwh", "grid_kwh", "co2_kg", "co_kg", "so2_kg", "nox_kg"),
    "T7_indicators": ("rank", "system", "present_worth_usd", "annual_worth_usd", "roi_pct",
                      "irr_pct", "simple_payback_yr", "discounted_payback_yr"),
}
TABLE_FILES = {tid: tid.split("_", 1)[0] + ".csv" for tid in TABLES}


def fmt_kwh(x: float) -> str:
    return f"{x:.0f}"


def fmt_money(x: Optional[float]) -> str:
    if x is None:
        return ""
    if abs(x) > 1e6:
        return f"{x / 1e6:.2f}M"
    return f"{x:.0f}"


def fmt_coe(x: float) -> str:
    return f"{x:.4f}"


def fmt_pct(frac: Optional[float]) -> str:
    return "" if frac is None else f"{100.0 * frac:.2f}"


def fmt_num(x: Optional[float], digits: int = 2) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf"
    return f"{x:.{digits}f}"


def parse_cell(text: str) -> Optional[float]:
    """Inverse of the formatters for numeric cells."""
    if text == "":
        return None
    if text.endswith("M"):
        return float(text[:-1]) * 1e6
    return float(text)


def _size(d, key: str) -> str:
    spec = getattr(d.config, key)
    if spec is None:
        return ""
    if key == "battery":
        return str(spec.strings)
    if key == "grid":
        return fmt_num(spec.max_purchase_kw)
    return fmt_num(spec.rated_kw)


def _cells(d) -> dict[str, Callable[[], str]]:
    r, c, e = d.dispatch, d.cost, d.emissions
    cmp_ = d.comparison
    return {
        "rank": lambda: "" if d.rank is None else str(d.rank),
        "system": lambda: d.label,
        "wind_kwh": lambda: fmt_kwh(r.wind_kwh),
        "bg_kwh": lambda: fmt_kwh(r.bg_kwh),
        "pv_kwh": lambda: fmt_kwh(r.pv_kwh),
        "dg_kwh": lambda: fmt_kwh(r.dg_kwh),
        "grid_kwh": lambda: fmt_kwh(r.grid_purchase_kwh),
        "production_kwh": lambda: fmt_kwh(r.production_kwh),
        "renewable_fraction_pct": lambda: fmt_pct(r.renewable_fraction),
        "excess_kwh": lambda: fmt_kwh(r.excess_kwh),
        "unmet_kwh": lambda: fmt_kwh(r.unmet_kwh),
        "min_penetration_pct": lambda: fmt_pct(r.min_renewable_penetration_frac),
        "max_penetration_pct": lambda: fmt_pct(r.max_renewable_penetration_frac),
        "coe_usd_per_kwh": lambda: fmt_coe(c.coe),
        "npc_usd": lambda: fmt_money(c.npc),
        "initial_cost_usd": lambda: fmt_money(c.initial_cost),
        "operating_cost_usd": lambda: fmt_money(c.operating_cost),
        "om_usd_per_yr": lambda: fmt_money(c.om_usd_per_yr),
        "pv_kw": lambda: _size(d, "pv"),
        "wind_kw": lambda: _size(d, "wind"),
        "bg_kw": lambda: _size(d, "bg"),
        "dg_kw": lambda: _size(d, "dg"),
        "battery_strings": lambda: _size(d, "battery"),
        "converter_kw": lambda: _size(d, "converter"),
        "grid_kw": lambda: _size(d, "grid"),
        "co2_kg": lambda: fmt_num(e.co2),
        "co_kg": lambda: fmt_num(e.co),
        "so2_kg": lambda: fmt_num(e.so2),
        "nox_kg": lambda: fmt_num(e.nox),
        "present_worth_usd": lambda: fmt_money(cmp_.present_worth) if cmp_ else "",
        "annual_worth_usd": lambda: fmt_money(cmp_.annual_worth) if cmp_ else "",
        "roi_pct": lambda: fmt_pct(cmp_.roi_frac) if cmp_ else "",
        "irr_pct": lambda: fmt_pct(cmp_.irr_frac) if cmp_ else "",
        "simple_payback_yr": lambda: fmt_num(cmp_.simple_payback_yr) if cmp_ else "",
        "discounted_payback_yr": lambda: fmt_num(cmp_.discounted_payback_yr) if cmp_ else "",
    }


def render_table(table_id: str, designs: Iterable, include_infeasible: bool = False) -> str:
    """One row per ranked design, in rank order."""
    if table_id not in TABLES:
        raise ValueError(f"unknown table id {table_id!r}; expected one of {', '.join(TABLES)}")
    cols = TABLES[table_id]
    rows = [d for d in designs if d.rank is not None or include_infeasible]
    rows.sort(key=lambda d: (d.rank is None, d.rank if d.rank is not None else d.index))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for d in rows:
        cells = _cells(d)
        w.writerow([cells[c]() for c in cols])
    return buf.getvalue()


def render_timeseries(result: DispatchResult, selector: str | Sequence[str]) -> str:
    """Slot-indexed CSV of the selected trace channels."""
    if result.trace is None:
        raise ValueError("dispatch result was produced without a trace")
    names = [selector] if isinstance(selector, str) else list(selector)
    for n in names:
        if n not in result.trace:
            raise ValueError(f"no channel {n!r}; available: {', '.join(CHANNELS)}")
    buf = io.StringIO()
    buf.write("slot," + ",".join(names) + "\n")
    cols = [result.trace[n] for n in names]
    for t in range(cols[0].shape[0]):
        buf.write(str(t) + "".join("," + repr(float(c[t])) for c in cols) + "\n")
    return buf.getvalue()


def render_winners(rows) -> str:
    """Best design per sweep value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("parameter", "value", "system", "digest", "npc_usd", "coe_usd_per_kwh"))
    for r in rows:
        if r.best is None:
            w.writerow((r.parameter, repr(r.value), "", "", "", ""))
        else:
            w.writerow((r.parameter, repr(r.value), r.best.label, r.best.digest,
                        fmt_money(r.best.cost.npc), fmt_coe(r.best.cost.coe)))
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return None
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(obj) -> str:
    """Stable JSON: sorted keys, infinities as the string ``"inf"``."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
