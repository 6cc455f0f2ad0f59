"""Exhaustive sizing search.

A search space is a base scenario whose component sections act as
templates, plus an ordered list of candidate sizes per component. ``None``
in a size list means the component is left out. Template costs are for the
template size and scale linearly with the candidate size.

Candidates are enumerated as the Cartesian product in component order
``pv, wind, bg, dg, battery, converter, grid`` (then dispatch strategy),
first entry of each list first. Every candidate is simulated, costed and
scored; the feasible ones are ranked by NPC, then COE, then digest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional, Sequence

import numpy as np

from . import power
from .dispatch import DispatchResult, _as_array, run_profiles
from .econ import ComparisonReport, CostReport, compare_to_base, cost_report
from .emissions import EmissionReport, compute_emissions
from .ingest import SeriesBundle
from .model import (COMPONENT_KEYS, STRATEGIES, ScenarioConfig, ScenarioError,
                    scenario_from_dict, scenario_to_dict, validate_scenario)

log = logging.getLogger(__name__)

_SIZE_FIELD = {"pv": "rated_kw", "wind": "rated_kw", "bg": "rated_kw", "dg": "rated_kw",
               "battery": "strings", "converter": "rated_kw", "grid": "max_purchase_kw"}
_COST_FIELDS = ("capital_usd", "replacement_usd", "om_usd_per_yr")


@dataclass(frozen=True)
class SearchSpace:
    base: ScenarioConfig
    sizes: dict = field(default_factory=dict)
    strategies: tuple[str, ...] = ("load_following",)
    max_unmet_frac: float = 0.001

    def __post_init__(self):
        sizes = {}
        for key in COMPONENT_KEYS:
            if key not in self.sizes:
                continue
            vals = tuple(self.sizes[key])
            if not vals:
                raise ScenarioError(f"size list for {key} is empty")
            present = [v for v in vals if v is not None]
            if any((not isinstance(v, (int, float))) or v < 0 for v in present):
                raise ScenarioError(f"sizes for {key} must be non-negative numbers or null")
            if list(present) != sorted(present):
                raise ScenarioError(f"sizes for {key} must be ascending")
            if present and getattr(self.base, key) is None:
                raise ScenarioError(f"sizes given for {key} but the base scenario has no {key} template")
            sizes[key] = vals
        unknown = set(self.sizes) - set(COMPONENT_KEYS)
        if unknown:
            raise ScenarioError(f"unknown component(s) in sizes: {', '.join(sorted(unknown))}")
        object.__setattr__(self, "sizes", sizes)
        if not self.strategies:
            raise ScenarioError("strategy list is empty")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ScenarioError(f"unknown dispatch strategy {s!r}")
        if not 0 <= self.max_unmet_frac <= 1:
            raise ScenarioError("max_unmet_frac must be within [0, 1]")

    @property
    def axes(self) -> list[tuple[str, tuple]]:
        out = []
        for key in COMPONENT_KEYS:
            if key in self.sizes:
                out.append((key, self.sizes[key]))
            else:
                base = getattr(self.base, key)
                out.append((key, (None if base is None else "base",)))
        return out

    def count(self) -> int:
        return math.prod(len(v) for _, v in self.axes) * len(self.strategies)


def _scale(spec, key: str, size) -> Any:
    if size == "base":
        return spec
    if key == "grid":
        return dataclasses.replace(spec, max_purchase_kw=float(size), present=True)
    attr = _SIZE_FIELD[key]
    ref = getattr(spec, attr)
    if ref <= 0:
        raise ScenarioError(f"{key} template must have a positive {attr} to scale costs")
    factor = size / ref
    changes = {attr: int(size) if key == "battery" else float(size)}
    for c in _COST_FIELDS:
        changes[c] = getattr(spec, c) * factor
    return dataclasses.replace(spec, **changes)


def candidate(space: SearchSpace, choice: Sequence, strategy: str) -> ScenarioConfig:
    changes: dict[str, Any] = {}
    for (key, _), size in zip(space.axes, choice):
        spec = getattr(space.base, key)
        changes[key] = None if size is None else _scale(spec, key, size)
    changes["dispatch"] = dataclasses.replace(space.base.dispatch, strategy=strategy,
                                              max_unmet_frac=space.max_unmet_frac)
    return dataclasses.replace(space.base, **changes)


def _choices(space: SearchSpace) -> Iterator[tuple]:
    for combo in itertools.product(*(v for _, v in space.axes), space.strategies):
        yield combo[:-1], combo[-1]


def enumerate_candidates(space: SearchSpace) -> Iterator[ScenarioConfig]:
    """All candidates in lexicographic order; the count is the product of list lengths."""
    if space.count() == 0:
        raise ScenarioError("empty search space")
    for choice, strategy in _choices(space):
        yield candidate(space, choice, strategy)


def digest(cfg: ScenarioConfig) -> str:
    doc = json.dumps(scenario_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


# =============================================================================
# EVALUATION
# =============================================================================


@dataclass(frozen=True, eq=False)
class RankedDesign:
    index: int
    digest: str
    label: str
    config: ScenarioConfig
    sizes: dict
    dispatch: DispatchResult
    cost: CostReport
    emissions: EmissionReport
    feasible: bool
    violations: tuple[str, ...] = ()
    rank: Optional[int] = None
    comparison: Optional[ComparisonReport] = None

    def summary(self) -> dict:
        return {
            "index": self.index, "rank": self.rank, "digest": self.digest, "label": self.label,
            "feasible": self.feasible, "violations": list(self.violations), "sizes": self.sizes,
            "dispatch": self.dispatch.summary(), "cost": self.cost.summary(),
            "emissions": self.emissions.summary(),
            "comparison": self.comparison.summary() if self.comparison else None,
        }


class _Evaluator:
    """Evaluates candidates of one space, caching per-size component profiles."""

    def __init__(self, space: SearchSpace, bundle: SeriesBundle):
        self.space = space
        self.bundle = bundle
        self.load = np.array(_as_array(bundle.load_kw, "load"))
        self.zeros = np.zeros_like(self.load)
        self._cache: dict = {}
        self.choices = list(_choices(space))

    def _profile(self, key: str, spec) -> np.ndarray:
        if spec is None or spec.rated_kw <= 0:
            return self.zeros
        ck = (key, spec.rated_kw, id(spec) if key not in self.space.sizes else None)
        arr = self._cache.get(ck)
        if arr is None:
            b = self.bundle
            if key == "pv":
                if b.ghi_kw_m2 is None:
                    raise ValueError("PV in scenario but no irradiance series supplied")
                amb = _as_array(b.ambient_degC, "ambient") if b.ambient_degC is not None else np.full(self.load.size, 20.0)
                arr = power.pv_profile(spec, _as_array(b.ghi_kw_m2, "ghi"), amb)
            else:
                if b.wind_ms is None:
                    raise ValueError("wind turbine in scenario but no wind series supplied")
                arr = power.wind_output(spec, power.wind_speed_at_hub(spec, _as_array(b.wind_ms, "wind")))
            self._cache[ck] = arr
        return arr

    def _bg_feed(self, spec) -> np.ndarray:
        if spec is None or self.bundle.biomass_kg_h is None:
            return np.full(self.load.size, math.inf)
        ck = ("bgfeed", spec.calorific_value_kj_per_kg, spec.conversion_eff)
        arr = self._cache.get(ck)
        if arr is None:
            arr = power.bg_feedstock_limit_kw(spec, _as_array(self.bundle.biomass_kg_h, "biomass"))
            self._cache[ck] = arr
        return arr

    def evaluate(self, index: int) -> RankedDesign:
        choice, strategy = self.choices[index]
        cfg = candidate(self.space, choice, strategy)
        return self.evaluate_config(cfg, index, {k: v for (k, _), v in zip(self.space.axes, choice)})

    def evaluate_config(self, cfg: ScenarioConfig, index: int, sizes: dict) -> RankedDesign:
        report = validate_scenario(cfg)
        res = run_profiles(cfg, self.load, self._profile("pv", cfg.pv), self._profile("wind", cfg.wind),
                           self._bg_feed(cfg.bg), keep_trace=False) if report.ok else None
        if res is None:
            res = _empty_result(self.load)
        cost = cost_report(cfg, res)
        em = compute_emissions(res, cfg.emissions)
        feasible = report.ok and res.unmet_fraction <= cfg.dispatch.max_unmet_frac
        sizes = {k: ("base" if v == "base" else v) for k, v in sizes.items()}
        return RankedDesign(index, digest(cfg), cfg.label, cfg, sizes, res, cost, em, feasible,
                            tuple(report.messages()))


def _empty_result(load: np.ndarray) -> DispatchResult:
    total = float(load.sum())
    return DispatchResult(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, total, 0.0, total, 0.0, 0.0, 0.0, 0.0,
                          0.0, 0, 0.0, 0.0, 0.0, 0.0)


_WORKER: Optional[_Evaluator] = None


def _init_worker(space: SearchSpace, bundle: SeriesBundle) -> None:
    global _WORKER
    _WORKER = _Evaluator(space, bundle)


def _work(indices: list[int]) -> list[RankedDesign]:
    assert _WORKER is not None
    return [_WORKER.evaluate(i) for i in indices]


def rank_designs(designs: Sequence[RankedDesign]) -> list[RankedDesign]:
    """Rank feasible designs by NPC, COE, digest; infeasible ones follow unranked by index."""
    feasible = sorted((d for d in designs if d.feasible),
                      key=lambda d: (d.cost.npc, d.cost.coe, d.digest, d.index))
    infeasible = sorted((d for d in designs if not d.feasible), key=lambda d: d.index)
    ranked = [dataclasses.replace(d, rank=k) for k, d in enumerate(feasible, start=1)]
    return ranked + [dataclasses.replace(d, rank=None) for d in infeasible]


def evaluate_all(space: SearchSpace, bundle: SeriesBundle, jobs: int = 1,
                 indices: Optional[Sequence[int]] = None) -> list[RankedDesign]:
    """Simulate, cost and score every candidate; return the ranked list.

    ``jobs > 1`` fans the candidates out to worker processes; results are
    merged by candidate index, so the ranking does not depend on ``jobs``
    or on the order of ``indices``.
    """
    total = space.count()
    if total == 0:
        raise ScenarioError("empty search space")
    idx = list(range(total)) if indices is None else sorted(set(indices))
    if jobs <= 1 or len(idx) < 2:
        ev = _Evaluator(space, bundle)
        designs = [ev.evaluate(i) for i in idx]
    else:
        chunk = max(1, math.ceil(len(idx) / (jobs * 8)))
        parts = [idx[k:k + chunk] for k in range(0, len(idx), chunk)]
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(space, bundle)) as pool:
            designs = [d for part in pool.map(_work, parts) for d in part]
    designs.sort(key=lambda d: d.index)
    log.info("evaluated %d candidates, %d feasible", len(designs), sum(d.feasible for d in designs))
    return rank_designs(designs)


def grid_only_base(space: SearchSpace, bundle: SeriesBundle) -> Optional[RankedDesign]:
    """The status-quo grid-only design built from the space's grid template."""
    gr = space.base.grid
    if gr is None:
        return None
    cfg = dataclasses.replace(space.base, pv=None, wind=None, bg=None, dg=None, battery=None,
                              converter=None, grid=dataclasses.replace(gr, present=True))
    ev = _Evaluator(space, bundle)
    return ev.evaluate_config(cfg, -1, {"grid": "base"})


def attach_comparisons(designs: Sequence[RankedDesign], base: RankedDesign,
                       limit: Optional[int] = None) -> list[RankedDesign]:
    """Add base-case indicators to ranked designs (the first ``limit`` of them)."""
    out = []
    for d in designs:
        if d.rank is not None and (limit is None or d.rank <= limit):
            cmp_ = compare_to_base(d.cost, base.cost, d.config.econ, base_case=base.label)
            d = dataclasses.replace(d, comparison=cmp_)
        out.append(d)
    return out


# =============================================================================
# SENSITIVITY
# =============================================================================

SCALE_PARAMS = ("scale.load", "scale.ghi", "scale.wind", "scale.biomass")


@dataclass(frozen=True, eq=False)
class SweepRow:
    parameter: str
    value: float
    best: Optional[RankedDesign]
    designs: list

    @property
    def npc(self) -> Optional[float]:
        return self.best.cost.npc if self.best else None

    @property
    def coe(self) -> Optional[float]:
        return self.best.cost.coe if self.best else None


def apply_parameter(space: SearchSpace, bundle: SeriesBundle, path: str,
                    value: float) -> tuple[SearchSpace, SeriesBundle]:
    """Return a copy of (space, bundle) with one scalar changed.

    Paths are ``<section>.<field>`` on the base scenario (for example
    ``dg.fuel_price_usd_per_l`` or ``econ.discount_rate_frac``),
    ``max_unmet_frac``, or a series scaling ``scale.load``, ``scale.ghi``,
    ``scale.wind``, ``scale.biomass``.
    """
    if path == "max_unmet_frac":
        return dataclasses.replace(space, max_unmet_frac=float(value)), bundle
    if path in SCALE_PARAMS:
        which = path.split(".", 1)[1]
        attr = {"load": "load_kw", "ghi": "ghi_kw_m2", "wind": "wind_ms", "biomass": "biomass_kg_h"}[which]
        series = getattr(bundle, attr)
        if series is None:
            raise ScenarioError(f"{path}: bundle has no {which} series")
        return space, dataclasses.replace(bundle, **{attr: series.scaled(float(value))})
    parts = path.split(".")
    if len(parts) != 2:
        raise ScenarioError(f"unknown parameter path {path!r}")
    section, name = parts
    if section not in ("pv", "wind", "bg", "dg", "battery", "converter", "grid", "econ",
                       "emissions", "dispatch"):
        raise ScenarioError(f"unknown parameter path {path!r}")
    spec = getattr(space.base, section)
    if spec is None:
        raise ScenarioError(f"{path}: base scenario has no {section} section")
    names = {f.name for f in dataclasses.fields(spec)}
    if name not in names or not isinstance(getattr(spec, name), (int, float)) or isinstance(getattr(spec, name), bool):
        raise ScenarioError(f"unknown parameter path {path!r}")
    cast = int if isinstance(getattr(spec, name), int) else float
    new_spec = dataclasses.replace(spec, **{name: cast(value)})
    return dataclasses.replace(space, base=dataclasses.replace(space.base, **{section: new_spec})), bundle


def sensitivity_sweep(space: SearchSpace, bundle: SeriesBundle, parameter: str,
                      values: Sequence[float], jobs: int = 1) -> list[SweepRow]:
    """Re-run :func:`evaluate_all` once per value and keep each winner."""
    if values:
        apply_parameter(space, bundle, parameter, values[0])
    rows = []
    for val in values:
        sp, bd = apply_parameter(space, bundle, parameter, val)
        designs = evaluate_all(sp, bd, jobs=jobs)
        best = designs[0] if designs and designs[0].rank == 1 else None
        rows.append(SweepRow(parameter, float(val), best, designs))
    return rows


# =============================================================================
# SPACE FILE
# =============================================================================


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


def space_from_dict(doc: dict) -> tuple[SearchSpace, list[SweepSpec]]:
    allowed = {"base", "sizes", "strategies", "max_unmet_frac", "sweeps"}
    if not isinstance(doc, dict):
        raise ScenarioError("search-space document must be a JSON object")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ScenarioError(f"unknown search-space key(s) {', '.join(unknown)}")
    base = scenario_from_dict(doc.get("base", {}))
    sizes = {}
    for key, vals in doc.get("sizes", {}).items():
        if not isinstance(vals, list):
            raise ScenarioError(f"sizes.{key} must be a list")
        sizes[key] = tuple(math.inf if isinstance(v, str) and v.lower() == "inf" else v for v in vals)
    kwargs = {"base": base, "sizes": sizes}
    if "strategies" in doc:
        kwargs["strategies"] = tuple(doc["strategies"])
    if "max_unmet_frac" in doc:
        kwargs["max_unmet_frac"] = float(doc["max_unmet_frac"])
    space = SearchSpace(**kwargs)
    sweeps = []
    for s in doc.get("sweeps", []):
        if set(s) != {"parameter", "values"}:
            raise ScenarioError("each sweep needs exactly 'parameter' and 'values'")
        sweeps.append(parse_sweep(s))
    return space, sweeps


def parse_sweep(doc: dict) -> SweepSpec:
    if not isinstance(doc.get("parameter"), str) or not isinstance(doc.get("values"), list):
        raise ScenarioError("sweep needs a 'parameter' string and a 'values' list")
    return SweepSpec(doc["parameter"], tuple(float(v) for v in doc["values"]))


def load_space(path: str | Path) -> tuple[SearchSpace, list[SweepSpec]]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return space_from_dict(doc)
