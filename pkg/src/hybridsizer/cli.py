"""Command-line entry point: ``hybridsizer {simulate,optimize,sweep,validate,render}``.

Exit codes are a stable contract: 0 success, 1 I/O failure (missing or
unreadable files, unwritable output), 2 validation or configuration error
(bad scenario values, malformed CSV/JSON, unknown sweep parameter).

Every run that gets past argument parsing leaves ``manifest.json`` in its
output directory, including failed runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .dispatch import CHANNELS, simulate_year
from .econ import compare_to_base, cost_report
from .emissions import compute_emissions
from .ingest import load_bundle
from .model import (COMPONENT_KEYS, ScenarioConfig, ScenarioError, load_scenario,
                    scenario_to_dict, validate_scenario)
from .optimize import (RankedDesign, SearchSpace, SweepSpec, apply_parameter, attach_comparisons,
                       digest, evaluate_all, grid_only_base, load_space, parse_sweep,
                       space_from_dict)
from .report import TABLE_FILES, TABLES, render_table, render_timeseries, render_winners, to_json

log = logging.getLogger("hybridsizer")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2

ENV_JOBS = "HYBRIDSIZER_JOBS"
ENV_OUT = "HYBRIDSIZER_OUT"

_PRECEDENCE = f"""\
settings precedence (highest first):
  1. command-line flags
  2. environment: {ENV_JOBS} (worker count), {ENV_OUT} (output directory)
  3. values in the scenario / search-space file (e.g. max_unmet_frac)
  4. built-in defaults (--jobs 1, --out runs/<command>)

exit codes: 0 success, 1 I/O failure, 2 validation or configuration error
"""


class CliError(Exception):
    """Failure with a known exit code."""

    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    command: str
    argv: list
    engine_version: str = __version__
    inputs: dict = field(default_factory=dict)
    seed: Optional[int] = None
    settings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0
    exit_status: Optional[int] = None
    error: Optional[str] = None


class _Run:
    """Output directory plus the manifest being filled in."""

    def __init__(self, out: Path, manifest: RunManifest):
        self.out = out
        self.manifest = manifest

    def add_input(self, path: Path) -> None:
        data = path.read_bytes()
        self.manifest.inputs[str(path)] = hashlib.sha256(data).hexdigest()

    def write(self, rel: str, text: str) -> None:
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.manifest.outputs.append(rel)


# =============================================================================
# HELPERS
# =============================================================================


def _jobs(arg: Optional[int]) -> int:
    if arg is not None:
        jobs = arg
    elif os.environ.get(ENV_JOBS):
        try:
            jobs = int(os.environ[ENV_JOBS])
        except ValueError:
            raise CliError(f"{ENV_JOBS} must be an integer, got {os.environ[ENV_JOBS]!r}", EXIT_CONFIG)
    else:
        jobs = 1
    if jobs < 1:
        raise CliError("--jobs must be ≥ 1", EXIT_CONFIG)
    return jobs


def _out_dir(arg: Optional[str], command: str) -> Path:
    if arg:
        return Path(arg)
    if os.environ.get(ENV_OUT):
        return Path(os.environ[ENV_OUT])
    return Path("runs") / command


def _resources_dir(arg: Optional[str], input_path: Path) -> Path:
    return Path(arg) if arg else input_path.parent / "resources"


def _record_resources(run: _Run, cfg: ScenarioConfig, root: Path) -> None:
    names = [cfg.load.shape_csv, cfg.resources.ghi_csv, cfg.resources.wind_csv,
             cfg.resources.biomass_csv, cfg.resources.temperature_csv]
    for name in names:
        if name and (root / name).is_file():
            run.add_input(root / name)
    run.manifest.seed = cfg.resources.wind_seed


def _sizes_of(cfg: ScenarioConfig) -> dict:
    sizes = {}
    for key in COMPONENT_KEYS:
        spec = getattr(cfg, key)
        if spec is None:
            sizes[key] = None
        elif key == "battery":
            sizes[key] = spec.strings
        elif key == "grid":
            sizes[key] = spec.max_purchase_kw if spec.present else None
        else:
            sizes[key] = spec.rated_kw
    return sizes


def _design(cfg: ScenarioConfig, bundle, keep_trace: bool) -> RankedDesign:
    result = simulate_year(cfg, bundle, keep_trace=keep_trace)
    cost = cost_report(cfg, result)
    em = compute_emissions(result, cfg.emissions)
    feasible = result.unmet_fraction <= cfg.dispatch.max_unmet_frac
    return RankedDesign(0, digest(cfg), cfg.label, cfg, _sizes_of(cfg), result, cost, em,
                        feasible, (), rank=1 if feasible else None)


def _grid_only(cfg: ScenarioConfig) -> Optional[ScenarioConfig]:
    """Grid-only counterpart of a scenario, or ``None`` if it has no grid or is grid-only."""
    if cfg.grid is None or not cfg.grid.present:
        return None
    if all(getattr(cfg, k) is None for k in ("pv", "wind", "bg", "dg", "battery", "converter")):
        return None
    return dataclasses.replace(cfg, pv=None, wind=None, bg=None, dg=None, battery=None,
                               converter=None)


def _write_tables(run: _Run, designs: Sequence[RankedDesign], prefix: str = "tables",
                  include_infeasible: bool = False, only: Optional[Sequence[str]] = None) -> None:
    for tid in (only or TABLES):
        run.write(f"{prefix}/{TABLE_FILES[tid]}", render_table(tid, designs, include_infeasible))


def _load_checked_scenario(path: Path) -> ScenarioConfig:
    cfg = load_scenario(path)
    report = validate_scenario(cfg)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not report.ok:
        for m in report.messages():
            print(f"violation: {m}", file=sys.stderr)
        raise CliError(f"{path}: scenario failed validation ({len(report.violations)} violation(s))",
                       EXIT_CONFIG)
    return cfg


def _load_space(run: _Run, path: Path, cap: Optional[float]):
    run.add_input(path)
    space, sweeps = load_space(path)
    if cap is not None:
        space = dataclasses.replace(space, max_unmet_frac=cap)
    run.manifest.settings["max_unmet_frac"] = space.max_unmet_frac
    run.manifest.settings["candidates"] = space.count()
    return space, sweeps


def _ranked(space: SearchSpace, bundle, jobs: int, compare: int) -> tuple[list, Optional[RankedDesign]]:
    designs = evaluate_all(space, bundle, jobs=jobs)
    base = grid_only_base(space, bundle)
    if base is not None and compare > 0:
        designs = attach_comparisons(designs, base, limit=compare)
    return designs, base


def _ranking_summary(space: SearchSpace, designs: Sequence[RankedDesign],
                     base: Optional[RankedDesign], top: int) -> dict:
    feasible = [d for d in designs if d.rank is not None]
    return {
        "candidates": len(designs),
        "feasible": len(feasible),
        "max_unmet_frac": space.max_unmet_frac,
        "base": base.summary() if base is not None else None,
        "top": [d.summary() for d in feasible[:top]],
    }


def _value_dir(parameter: str, value: float) -> str:
    return f"{parameter}={value!r}"


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_simulate(args, run: _Run) -> int:
    path = Path(args.scenario)
    run.add_input(path)
    cfg = _load_checked_scenario(path)
    root = _resources_dir(args.resources, path)
    bundle = load_bundle(cfg, root)
    _record_resources(run, cfg, root)

    design = _design(cfg, bundle, keep_trace=True)
    base_cfg = _grid_only(cfg)
    base = None
    if base_cfg is not None:
        base = _design(base_cfg, bundle, keep_trace=False)
        design = dataclasses.replace(design, comparison=compare_to_base(
            design.cost, base.cost, cfg.econ, base_case=base.label))

    _write_tables(run, [design], include_infeasible=True)
    channels = CHANNELS if args.trace is None else args.trace
    for ch in channels:
        run.write(f"trace/{ch}.csv", render_timeseries(design.dispatch, ch))
    summary = {
        "command": "simulate",
        "scenario": scenario_to_dict(cfg),
        "label": design.label,
        "digest": design.digest,
        "feasible": design.feasible,
        "dispatch": design.dispatch.summary(),
        "cost": design.cost.summary(),
        "emissions": design.emissions.summary(),
        "comparison": design.comparison.summary() if design.comparison else None,
        "base": base.summary() if base is not None else None,
    }
    run.write("summary.json", to_json(summary))
    d = design.dispatch
    print(f"{design.label}: served {d.load_served_kwh:.0f} kWh, unmet {d.unmet_kwh:.0f} kWh, "
          f"RF {100 * d.renewable_fraction:.2f}%, NPC ${design.cost.npc:,.0f}, "
          f"COE ${design.cost.coe:.4f}/kWh")
    return EXIT_OK


def cmd_optimize(args, run: _Run) -> int:
    path = Path(args.space)
    space, _ = _load_space(run, path, args.cap)
    root = _resources_dir(args.resources, path)
    bundle = load_bundle(space.base, root)
    _record_resources(run, space.base, root)
    jobs = _jobs(args.jobs)
    run.manifest.settings["jobs"] = jobs

    designs, base = _ranked(space, bundle, jobs, args.compare)
    _write_tables(run, designs)
    summary = {"command": "optimize", **_ranking_summary(space, designs, base, args.top)}
    run.write("summary.json", to_json(summary))
    print(f"{summary['candidates']} candidates, {summary['feasible']} feasible "
          f"(unmet ≤ {100 * space.max_unmet_frac:g}%)")
    if summary["top"]:
        best = next(d for d in designs if d.rank == 1)
        print(f"best: {best.label} NPC ${best.cost.npc:,.0f} COE ${best.cost.coe:.4f}/kWh")
    return EXIT_OK


def _sweep_specs(args, file_sweeps: list[SweepSpec]) -> list[SweepSpec]:
    if args.parameter is not None:
        if not args.values:
            raise CliError("--parameter needs --values", EXIT_CONFIG)
        try:
            values = tuple(float(v) for v in args.values.split(","))
        except ValueError:
            raise CliError(f"--values must be comma-separated numbers, got {args.values!r}", EXIT_CONFIG)
        return [SweepSpec(args.parameter, values)]
    if args.sweep is not None:
        text = Path(args.sweep).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{args.sweep}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        docs = doc if isinstance(doc, list) else [doc]
        if not all(isinstance(d, dict) for d in docs):
            raise ScenarioError(f"{args.sweep}: expected a sweep object or a list of them")
        return [parse_sweep(d) for d in docs]
    if not file_sweeps:
        raise CliError("no sweep given: use --sweep FILE, --parameter/--values, "
                       "or a 'sweeps' list in the space file", EXIT_CONFIG)
    return file_sweeps


def cmd_sweep(args, run: _Run) -> int:
    path = Path(args.space)
    space, file_sweeps = _load_space(run, path, args.cap)
    if args.sweep is not None:
        run.add_input(Path(args.sweep))
    specs = _sweep_specs(args, file_sweeps)
    root = _resources_dir(args.resources, path)
    bundle = load_bundle(space.base, root)
    _record_resources(run, space.base, root)
    jobs = _jobs(args.jobs)
    run.manifest.settings["jobs"] = jobs
    run.manifest.settings["sweeps"] = [{"parameter": s.parameter, "values": list(s.values)} for s in specs]

    # reject bad paths before any search runs
    for s in specs:
        if not s.values:
            raise CliError(f"sweep over {s.parameter} has no values", EXIT_CONFIG)
        for v in s.values:
            apply_parameter(space, bundle, s.parameter, v)

    rows = []
    summary = {"command": "sweep", "sweeps": []}
    for s in specs:
        entries = []
        for v in s.values:
            sp, bd = apply_parameter(space, bundle, s.parameter, v)
            designs, base = _ranked(sp, bd, jobs, args.compare)
            _write_tables(run, designs, prefix=f"rankings/{_value_dir(s.parameter, v)}")
            best = next((d for d in designs if d.rank == 1), None)
            rows.append(_Winner(s.parameter, v, best))
            entries.append({"value": v, **_ranking_summary(sp, designs, base, args.top)})
            print(f"{s.parameter}={v!r}: " + (f"{best.label} NPC ${best.cost.npc:,.0f}" if best
                                              else "no feasible design"))
        summary["sweeps"].append({"parameter": s.parameter, "results": entries})
    run.write("winners.csv", render_winners(rows))
    run.write("summary.json", to_json(summary))
    return EXIT_OK


@dataclass(frozen=True)
class _Winner:
    parameter: str
    value: float
    best: Optional[RankedDesign]


def cmd_validate(args, run: _Run) -> int:
    path = Path(args.input)
    run.add_input(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if isinstance(doc, dict) and "sizes" in doc:
        space, sweeps = space_from_dict(doc)
        cfg = space.base
        kind = f"search space with {space.count()} candidates and {len(sweeps)} sweep(s)"
    else:
        cfg = load_scenario(path)
        kind = f"scenario {cfg.label}"
        report = validate_scenario(cfg)
        for w in report.warnings:
            print(f"warning: {w}", file=sys.stderr)
        if not report.ok:
            for m in report.messages():
                print(f"violation: {m}", file=sys.stderr)
            raise CliError(f"{path}: {len(report.violations)} violation(s)", EXIT_CONFIG)
    if args.resources is not None or (path.parent / "resources").is_dir():
        root = _resources_dir(args.resources, path)
        load_bundle(cfg, root)
        _record_resources(run, cfg, root)
    print(f"ok: {kind}")
    return EXIT_OK


def cmd_render(args, run: _Run) -> int:
    path = Path(args.scenario)
    run.add_input(path)
    cfg = _load_checked_scenario(path)
    tables = args.table or list(TABLES)
    for t in tables:
        if t not in TABLES:
            raise CliError(f"unknown table id {t!r}; expected one of {', '.join(TABLES)}", EXIT_CONFIG)
    for ch in args.channel or ():
        if ch not in CHANNELS:
            raise CliError(f"unknown channel {ch!r}; expected one of {', '.join(CHANNELS)}", EXIT_CONFIG)
    root = _resources_dir(args.resources, path)
    bundle = load_bundle(cfg, root)
    _record_resources(run, cfg, root)
    design = _design(cfg, bundle, keep_trace=bool(args.channel))
    base_cfg = _grid_only(cfg)
    if base_cfg is not None and "T7_indicators" in tables:
        base = _design(base_cfg, bundle, keep_trace=False)
        design = dataclasses.replace(design, comparison=compare_to_base(
            design.cost, base.cost, cfg.econ, base_case=base.label))
    _write_tables(run, [design], include_infeasible=True, only=tables)
    for ch in args.channel or ():
        run.write(f"trace/{ch}.csv", render_timeseries(design.dispatch, ch))
    return EXIT_OK


# =============================================================================
# ARGUMENT PARSING
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hybridsizer",
        description="Hourly dispatch, exhaustive sizing and lifetime economics for hybrid microgrids.",
        epilog=_PRECEDENCE, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, input_name: str, input_help: str):
        sp.add_argument(input_name, help=input_help)
        sp.add_argument("--resources", help="directory holding the CSV inputs "
                        "(default: <input dir>/resources)")
        sp.add_argument("--out", help=f"output directory (env {ENV_OUT}; default runs/<command>)")

    def search(sp):
        sp.add_argument("--jobs", type=int, help=f"worker processes (env {ENV_JOBS}; default 1); "
                        "changes wall time only, never output bytes")
        sp.add_argument("--cap", type=float, help="maximum unmet-load fraction for feasibility "
                        "(overrides max_unmet_frac in the space file)")
        sp.add_argument("--top", type=int, default=20,
                        help="designs given in full in summary.json (default 20)")
        sp.add_argument("--compare", type=int, default=50,
                        help="ranked designs compared against the grid-only base for T7 (default 50)")

    fmt = argparse.RawDescriptionHelpFormatter
    sp = sub.add_parser("simulate", help="simulate one scenario for a year", epilog=_PRECEDENCE,
                        formatter_class=fmt)
    common(sp, "scenario", "scenario JSON file")
    sp.add_argument("--trace", nargs="*", choices=CHANNELS, metavar="CHANNEL",
                    help="trace channels to write (default: all; give none to skip)")

    sp = sub.add_parser("optimize", help="rank every candidate of a search space",
                        epilog=_PRECEDENCE, formatter_class=fmt)
    common(sp, "space", "search-space JSON file")
    search(sp)

    sp = sub.add_parser("sweep", help="re-run the search for each value of one parameter",
                        epilog=_PRECEDENCE, formatter_class=fmt)
    common(sp, "space", "search-space JSON file")
    search(sp)
    sp.add_argument("--sweep", help="JSON file with {'parameter': ..., 'values': [...]} (or a list)")
    sp.add_argument("--parameter", help="parameter path, e.g. dg.fuel_price_usd_per_l or scale.load")
    sp.add_argument("--values", help="comma-separated values for --parameter")

    sp = sub.add_parser("validate", help="check a scenario or search-space file",
                        epilog=_PRECEDENCE, formatter_class=fmt)
    common(sp, "input", "scenario or search-space JSON file")

    sp = sub.add_parser("render", help="write selected tables and trace channels for a scenario",
                        epilog=_PRECEDENCE, formatter_class=fmt)
    common(sp, "scenario", "scenario JSON file")
    sp.add_argument("--table", action="append", metavar="ID",
                    help=f"table id, repeatable (default: all of {', '.join(TABLES)})")
    sp.add_argument("--channel", action="append", metavar="NAME",
                    help=f"trace channel, repeatable ({', '.join(CHANNELS)})")
    return p


_COMMANDS = {"simulate": cmd_simulate, "optimize": cmd_optimize, "sweep": cmd_sweep,
             "validate": cmd_validate, "render": cmd_render}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    manifest = RunManifest(command=args.command, argv=argv)
    run = _Run(_out_dir(args.out, args.command), manifest)
    try:
        run.out.mkdir(parents=True, exist_ok=True)
        code = _COMMANDS[args.command](args, run)
    except CliError as exc:
        code, manifest.error = exc.code, str(exc)
    except OSError as exc:
        code, manifest.error = EXIT_IO, str(exc)
    except ValueError as exc:
        # ScenarioError and IngestError are ValueErrors: bad values or malformed input
        code, manifest.error = EXIT_CONFIG, str(exc)
    if manifest.error:
        print(f"error: {manifest.error}", file=sys.stderr)
    manifest.exit_status = code
    manifest.wall_time_s = time.perf_counter() - t0
    try:
        run.out.mkdir(parents=True, exist_ok=True)
        (run.out / "manifest.json").write_text(to_json(dataclasses.asdict(manifest)), encoding="utf-8")
    except OSError as exc:
        print(f"error: could not write manifest: {exc}", file=sys.stderr)
        code = code or EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
