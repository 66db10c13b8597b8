"""Config parsing, pipeline orchestration and report serialization.

A config is one TOML document::

    depth = 6
    analyses = ["components", "basins"]
    seed = 0
    output_dir = "out"

    [system]
    type = "builtin"
    name = "north_south"

Per-analysis knobs live in tables named after the analysis
(``[coverage_study]``, ``[shadowing]``, ``[cc_report]``, ``[finite_oracle]``).
Outputs are written as ``report.json``, ``condensation.dot`` and
``boxes.csv``; wall time goes to ``timing.json`` so the three main files are
byte-identical across runs.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import sys as _sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if _sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import chain_graph as cg
from .chain_graph import ChainDecomposition, ChainGraphParams
from .components import chain_recurrent_boxes, component_period, terminal_components
from .errors import AnalysisError, ChainrecError, ValidationError
from .finite_oracle import MAX_FUNCTIONAL_N, enumerate_functional, random_total_relations, sweep
from .limits_basins import AMBIGUOUS, CoverageParams, coverage_study, terminal_basin_partition
from .phase_space import Grid, subdivide
from .shadowing_lab import (KINDS, cc_report, estimate_shadowing_modulus, generate_pseudo_orbit,
                            inverse_branch_shadow, orbit_deviation, shadowing_search)
from .systems import parse_system

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"
ANALYSES = ("components", "basins", "coverage_study", "shadowing", "cc_report", "finite_oracle")
GRID_ANALYSES = ("components", "basins", "cc_report")
FILE_NAMES = ("report.json", "condensation.dot", "boxes.csv")

SECTION_DEFAULTS: dict[str, dict[str, Any]] = {
    "coverage_study": {"delta_boxes": 1.0, "j": 4, "m": 100, "samples": 100, "horizon": None},
    "shadowing": {"delta": 0.01, "epsilon": 0.1, "length": 12, "trials": 10,
                  "kind": "perturbed_orbit", "search_depth": 14, "modulus": False},
    "cc_report": {"ladder": ((8, 4), (16, 4), (16, 8), (32, 8)), "horizon": None},
    "finite_oracle": {"n": 5, "random": 0, "random_n": 8, "cross_check": True},
}
_TOP_KEYS = {"system", "depth", "depths", "delta", "rigor_margin", "analyses", "seed", "output_dir"}


class ConfigSyntaxError(ValidationError):
    """The document is not valid TOML; the message carries line and column."""


@dataclass(frozen=True)
class AnalysisConfig:
    system: Mapping[str, Any]
    analyses: tuple[str, ...]
    depth: int | None = None
    depths: tuple[int, ...] | None = None
    delta: float | None = None
    rigor_margin: float = 0.0
    seed: int = 0
    output_dir: str = "chainrec_out"
    sections: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """JSON-ready echo; :func:`parse_config` maps it back to an equal config."""
        out: dict[str, Any] = {"analyses": list(self.analyses),
                               "rigor_margin": self.rigor_margin, "seed": self.seed,
                               "output_dir": self.output_dir}
        if self.system:
            out["system"] = _plain(self.system)
        if self.depth is not None:
            out["depth"] = self.depth
        if self.depths is not None:
            out["depths"] = list(self.depths)
        if self.delta is not None:
            out["delta"] = self.delta
        for name, knobs in self.sections.items():
            out[name] = _plain(knobs)
        return out


def _plain(v):
    if isinstance(v, Mapping):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _frozen(v):
    if isinstance(v, Mapping):
        return {k: _frozen(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return tuple(_frozen(x) for x in v)
    return v


def _int(name: str, v, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{name}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ValidationError(f"{name}: must be >= {lo}")
    return v


def _float(name: str, v, lo: float | None = None) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(f"{name}: expected a finite number, got {v!r}")
    if lo is not None and v < lo:
        raise ValidationError(f"{name}: must be >= {lo}")
    return float(v)


def _section(name: str, given) -> dict[str, Any]:
    if not isinstance(given, Mapping):
        raise ValidationError(f"{name}: expected a table")
    defaults = SECTION_DEFAULTS[name]
    unknown = set(given) - set(defaults)
    if unknown:
        raise ValidationError(f"{name}: unknown key(s) {sorted(unknown)}")
    out = dict(defaults)
    out.update({k: v for k, v in given.items() if v is not None})
    if name == "coverage_study":
        out["delta_boxes"] = _float(f"{name}.delta_boxes", out["delta_boxes"], 0.0)
        for k in ("j", "samples"):
            out[k] = _int(f"{name}.{k}", out[k], 1)
        out["m"] = _int(f"{name}.m", out["m"], 0)
    elif name == "shadowing":
        out["delta"] = _float(f"{name}.delta", out["delta"], 0.0)
        out["epsilon"] = _float(f"{name}.epsilon", out["epsilon"])
        if out["epsilon"] <= 0:
            raise ValidationError(f"{name}.epsilon: must be positive")
        out["length"] = _int(f"{name}.length", out["length"], 2)
        out["trials"] = _int(f"{name}.trials", out["trials"], 1)
        out["search_depth"] = _int(f"{name}.search_depth", out["search_depth"], 1)
        if out["kind"] not in KINDS:
            raise ValidationError(f"{name}.kind: expected one of {', '.join(KINDS)}")
        if not isinstance(out["modulus"], bool):
            raise ValidationError(f"{name}.modulus: expected true or false")
    elif name == "cc_report":
        ladder = out["ladder"]
        try:
            out["ladder"] = tuple((_int("ladder j", a, 1), _int("ladder l", b, 1)) for a, b in ladder)
        except (TypeError, ValueError):
            raise ValidationError(f"{name}.ladder: expected a list of [j, l] pairs") from None
        if not out["ladder"]:
            raise ValidationError(f"{name}.ladder: must be nonempty")
    elif name == "finite_oracle":
        out["n"] = _int(f"{name}.n", out["n"], 1)
        if out["n"] > MAX_FUNCTIONAL_N:
            raise ValidationError(f"{name}.n: must be <= {MAX_FUNCTIONAL_N}")
        out["random"] = _int(f"{name}.random", out["random"], 0)
        out["random_n"] = _int(f"{name}.random_n", out["random_n"], 1)
        if out["random_n"] > 16:
            raise ValidationError(f"{name}.random_n: must be <= 16")
        if not isinstance(out["cross_check"], bool):
            raise ValidationError(f"{name}.cross_check: expected true or false")
    for k in ("horizon",):
        if k in out and out[k] is not None:
            out[k] = _int(f"{name}.{k}", out[k], 1)
    return out


def parse_config(text: str | Mapping) -> AnalysisConfig:
    """Validate a TOML document (or an already parsed mapping) and fill defaults.

    ``delta`` defaults to one box width at ``depth``.  Analyses that need a
    single grid use ``depth``; ``coverage_study`` uses ``depths``.  Either
    falls back on the other when only one is given.
    """
    if isinstance(text, Mapping):
        doc = dict(text)
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigSyntaxError(f"config syntax error: {exc}") from None
    unknown = set(doc) - _TOP_KEYS - set(SECTION_DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown key(s) {sorted(unknown)}")
    analyses = doc.get("analyses")
    if not isinstance(analyses, (list, tuple)) or not analyses:
        raise ValidationError("analyses: at least one analysis is required")
    bad = [a for a in analyses if a not in ANALYSES]
    if bad:
        raise ValidationError(f"analyses: unknown analysis {bad[0]!r}; expected some of {', '.join(ANALYSES)}")
    if len(set(analyses)) != len(analyses):
        raise ValidationError("analyses: duplicates are not allowed")
    analyses = tuple(a for a in ANALYSES if a in analyses)
    for name in SECTION_DEFAULTS:
        if name in doc and name not in analyses:
            raise ValidationError(f"{name}: table given but the analysis is not requested")

    needs_system = any(a != "finite_oracle" for a in analyses)
    system_cfg = doc.get("system")
    if needs_system and system_cfg is None:
        raise ValidationError("system: required by the requested analyses")
    sys_def = parse_system(system_cfg) if system_cfg is not None else None

    depth = doc.get("depth")
    depths = doc.get("depths")
    if depth is not None:
        depth = _int("depth", depth, 0)
    if depths is not None:
        if not isinstance(depths, (list, tuple)) or not depths:
            raise ValidationError("depths: expected a nonempty list of integers")
        depths = tuple(_int("depths", d, 0) for d in depths)
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValidationError("depths: depths must be increasing")
    if depth is None and depths is not None and any(a in GRID_ANALYSES for a in analyses):
        depth = depths[-1]
    if depths is None and depth is not None and "coverage_study" in analyses:
        depths = (depth,)
    if depth is None and any(a in GRID_ANALYSES for a in analyses):
        raise ValidationError("depth: required by the requested analyses")
    if depths is None and "coverage_study" in analyses:
        raise ValidationError("depths: required by coverage_study")
    if sys_def is not None:
        for d in ([depth] if depth is not None else []) + list(depths or ()):
            if d * sys_def.dim > 24:
                raise ValidationError(f"depth: {d} gives more than 2^24 boxes")

    delta = doc.get("delta")
    if delta is not None:
        delta = _float("delta", delta, 0.0)
    elif depth is not None and sys_def is not None:
        delta = subdivide(sys_def.domain, depth).box_width
    rigor = _float("rigor_margin", doc.get("rigor_margin", 0.0), 0.0)
    seed = _int("seed", doc.get("seed", 0), 0)
    out_dir = doc.get("output_dir", "chainrec_out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ValidationError("output_dir: expected a nonempty string")
    sections = {name: _frozen(_section(name, doc.get(name, {})))
                for name in SECTION_DEFAULTS if name in analyses}
    return AnalysisConfig(_frozen(system_cfg) if system_cfg is not None else {}, analyses, depth,
                          depths, delta, rigor, seed, out_dir, sections)


def load_config(path: str | Path) -> AnalysisConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    config: AnalysisConfig
    results: dict[str, Any]
    provenance: dict[str, Any]
    errors: dict[str, dict[str, str]] = field(default_factory=dict)
    version: int = SCHEMA_VERSION
    decomposition: ChainDecomposition | None = field(default=None, repr=False)
    box_table: list[list] | None = field(default=None, repr=False)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        out = {"version": self.version, "config": self.config.to_dict(), "provenance": self.provenance,
               "results": self.results}
        if self.errors:
            out["errors"] = self.errors
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnalysisReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _component_summary(dec: ChainDecomposition, delta: float) -> dict:
    grid = dec.graph.grid
    cyclic = []
    terms = terminal_components(dec)
    for c in np.flatnonzero(dec.has_cycle).tolist():
        cyclic.append({"id": c, "box_count": int(dec.members[c].size),
                       "period": component_period(dec, c), "terminal": c in terms})
    return {"depth": grid.depth, "n_boxes": grid.n_boxes, "delta": delta,
            "n_edges": int(dec.graph.adj.nnz), "n_components": dec.n_components,
            "n_cyclic": len(cyclic), "n_recurrent_boxes": len(chain_recurrent_boxes(dec)),
            "cyclic": cyclic, "terminal": sorted(terms)}


def _shadowing_block(sys_def, knobs: Mapping, seed: int) -> dict:
    rows = []
    ib: list[float] | None = []
    for t in range(knobs["trials"]):
        rng = np.random.default_rng(seed + t)
        x0 = sys_def.domain.low + rng.random(sys_def.dim) * sys_def.domain.span
        po = generate_pseudo_orbit(sys_def, x0, knobs["delta"], knobs["length"], seed + t, knobs["kind"])
        res = shadowing_search(sys_def, po, knobs["epsilon"], knobs["search_depth"])
        rows.append({"found": res.found, "deviation": res.deviation if res.found else None,
                     "candidates": res.candidates})
        if ib is not None:
            try:
                ib.append(orbit_deviation(sys_def, inverse_branch_shadow(sys_def, po), po))
            except AnalysisError:
                ib = None
    found = sum(r["found"] for r in rows)
    out = {"system": sys_def.name, "kind": knobs["kind"], "delta": knobs["delta"],
           "epsilon": knobs["epsilon"], "length": knobs["length"], "search_depth": knobs["search_depth"],
           "trials": rows, "found_fraction": found / len(rows),
           "inverse_branch_max_deviation": max(ib) if ib else None}
    if knobs["modulus"]:
        est = estimate_shadowing_modulus(sys_def, knobs["epsilon"], knobs["trials"], seed,
                                         knobs["length"], knobs["search_depth"])
        out["modulus"] = {"delta": est.delta, "verdict": est.verdict,
                          "tested": [list(p) for p in est.tested]}
    return out


def _finite_block(knobs: Mapping, seed: int) -> dict:
    n = knobs["n"]
    fun = itertools.chain.from_iterable(enumerate_functional(k) for k in range(1, n + 1))
    sweeps = [sweep(f"functional n<={n}", fun, knobs["cross_check"] and n <= 6)]
    if knobs["random"]:
        rel = random_total_relations(knobs["random"], knobs["random_n"], seed)
        sweeps.append(sweep(f"random total n={knobs['random_n']}", rel, knobs["cross_check"]))
    return {"sweeps": [s.to_dict() for s in sweeps], "ok": all(s.ok for s in sweeps)}


def run_pipeline(cfg: AnalysisConfig) -> AnalysisReport:
    """Run the requested analyses; an analysis error is recorded and the rest continue."""
    t0 = time.perf_counter()
    results: dict[str, Any] = {}
    errors: dict[str, dict[str, str]] = {}
    sys_def = parse_system(cfg.system) if cfg.system else None
    dec = basins = ccr = grid = None

    def record(name, exc):
        errors[name] = {"type": type(exc).__name__, "message": str(exc)}

    if any(a in GRID_ANALYSES for a in cfg.analyses):
        grid = subdivide(sys_def.domain, cfg.depth)
        if {"components", "basins"} & set(cfg.analyses):
            try:
                g = cg.build_chain_graph(sys_def, grid, ChainGraphParams(cfg.delta, cfg.rigor_margin))
                dec = cg.scc_decompose(g)
                if "components" in cfg.analyses:
                    results["components"] = _component_summary(dec, cfg.delta)
            except ChainrecError as exc:
                for a in ("components", "basins"):
                    if a in cfg.analyses:
                        record(a, exc)
        if "basins" in cfg.analyses and dec is not None:
            try:
                basins = terminal_basin_partition(dec)
                results["basins"] = {
                    "v_fraction": basins.v_fraction, "n_ambiguous": basins.n_ambiguous,
                    "basin_sizes": [[c, s] for c, s in sorted(basins.per_component_basin_size.items())]}
            except (ChainrecError, AssertionError) as exc:
                record("basins", exc)
        if "cc_report" in cfg.analyses:
            knobs = cfg.sections["cc_report"]
            try:
                ccr = cc_report(sys_def, grid, knobs["ladder"], knobs["horizon"], cfg.rigor_margin)
                results["cc"] = {
                    "depth": cfg.depth, "ladder": [list(p) for p in ccr.ladder], "horizon": ccr.horizon,
                    "cc_fraction": ccr.cc_fraction,
                    "cell_fractions": [float(v) for v in ccr.membership.mean(axis=0)]}
            except (ChainrecError, AssertionError) as exc:
                record("cc_report", exc)
    if "coverage_study" in cfg.analyses:
        k = cfg.sections["coverage_study"]
        params = CoverageParams(k["delta_boxes"], cfg.rigor_margin, k["j"], k["m"], k["samples"],
                                cfg.seed, k["horizon"])
        try:
            rows = coverage_study(sys_def, cfg.depths, params)
            results["coverage"] = [asdict(r) for r in rows]
        except (ChainrecError, AssertionError) as exc:
            record("coverage_study", exc)
    if "shadowing" in cfg.analyses:
        try:
            results["shadowing"] = _shadowing_block(sys_def, cfg.sections["shadowing"], cfg.seed)
        except ChainrecError as exc:
            record("shadowing", exc)
    if "finite_oracle" in cfg.analyses:
        results["finite_oracle"] = _finite_block(cfg.sections["finite_oracle"], cfg.seed)
        if not results["finite_oracle"]["ok"]:
            errors["finite_oracle"] = {"type": "AssertionError", "message": "a finite check failed"}
    table = box_table(grid, dec, basins, ccr) if grid is not None else None
    provenance = {"tool": "chainrec", "version": TOOL_VERSION, "seed": cfg.seed}
    return AnalysisReport(cfg, results, provenance, errors, SCHEMA_VERSION, dec, table,
                          time.perf_counter() - t0)


CSV_TAIL = ("component", "cyclic", "terminal", "basin", "cc")


def box_table(grid: Grid, dec: ChainDecomposition | None = None, basins=None, ccr=None) -> list[list]:
    """One row per box; columns missing for the run are left empty."""
    cc = ccr.cc_boxes() if ccr is not None else None
    rows = []
    for b, center in enumerate(grid.centers.tolist()):
        row: list = [b] + center
        if dec is not None:
            c = int(dec.scc_of[b])
            row += [c, int(dec.has_cycle[c]), int(dec.terminal[c])]
        else:
            row += ["", "", ""]
        row.append("" if basins is None else int(basins.assignment[b]))
        row.append("" if cc is None else int(cc[b]))
        rows.append(row)
    return rows


def emit_csv(rows: list[list] | None, dim: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id"] + [f"center_{a}" for a in range(dim)] + list(CSV_TAIL))
    for row in rows or []:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit_dot(dec: ChainDecomposition | None) -> str:
    """Condensation as a DOT digraph; terminal components are double circles.

    Acyclic (transient) components are labeled ``p=-``.
    """
    lines = ["digraph condensation {", "  node [shape=circle];"]
    if dec is not None:
        for c in range(dec.n_components):
            p = component_period(dec, c) if dec.has_cycle[c] else "-"
            shape = ', shape=doublecircle' if dec.terminal[c] else ""
            lines.append(f'  C{c} [label="C{c} [n={dec.members[c].size}, p={p}]"{shape}];')
        for c in range(dec.n_components):
            for d in sorted(dec.dag[c]):
                lines.append(f"  C{c} -> C{d};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_json(report: AnalysisReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_report(text: str) -> AnalysisReport:
    """Inverse of :func:`emit_json` on the serialized data model."""
    doc = json.loads(text)
    if doc.get("version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported report version {doc.get('version')!r}")
    return AnalysisReport(parse_config(doc["config"]), doc["results"], doc["provenance"],
                          doc.get("errors", {}), doc["version"])


def write_outputs(report: AnalysisReport, out_dir: str | Path | None = None) -> Path:
    out = Path(out_dir if out_dir is not None else report.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dim = 1
    if report.config.system:
        dim = parse_system(report.config.system).dim
    (out / "report.json").write_text(emit_json(report))
    (out / "condensation.dot").write_text(emit_dot(report.decomposition))
    (out / "boxes.csv").write_text(emit_csv(report.box_table, dim))
    (out / "timing.json").write_text(json.dumps({"wall_time_s": round(report.wall_time, 6)}) + "\n")
    return out
