"""Component-level analyses on a chain decomposition."""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Sequence

import numpy as np

from . import chain_graph as cg
from .chain_graph import ChainDecomposition, ChainGraphParams, iter_bits
from .errors import AnalysisError, PreconditionError, TrackingError
from .phase_space import Grid, neighborhood_mask, subdivide
from .systems import SystemDef

PERIODIC_BOX_FACTOR = 16


def chain_recurrent_boxes(dec: ChainDecomposition) -> frozenset[int]:
    """Union of the cyclic components: the grid's outer image of CR(f)."""
    cyc = np.flatnonzero(dec.has_cycle[dec.scc_of])
    return frozenset(cyc.tolist())


def maximal_components(dec: ChainDecomposition) -> set[int]:
    """Cyclic components that reach no other cyclic component."""
    out = set()
    for c in np.flatnonzero(dec.has_cycle).tolist():
        others = dec.reach_bits[c] & dec.cyclic_bits & ~(1 << c)
        if not others:
            out.add(c)
    return out


def terminal_components(dec: ChainDecomposition) -> set[int]:
    """The condensation sinks; these coincide with the maximal cyclic components."""
    term = set(np.flatnonzero(dec.terminal).tolist())
    if term != maximal_components(dec):
        raise AssertionError("terminal components differ from the maximal ones")
    return term


def _check_component(dec: ChainDecomposition, c: int) -> None:
    if not 0 <= c < dec.n_components:
        raise AnalysisError(f"unknown component id {c}")


def verify_chain_stability(dec: ChainDecomposition, c: int, eps_boxes: int = 0) -> bool:
    """Whether everything chain-reachable from ``c`` stays within ``eps_boxes`` box widths.

    ``eps_boxes = 0`` asks for forward invariance of the component itself; a
    positive value uses the conservative box neighborhood of radius
    ``eps_boxes * box_width`` and needs a gridded graph.
    """
    _check_component(dec, c)
    if eps_boxes < 0:
        raise ValueError("eps_boxes must be >= 0")
    reach = dec.reach_bits[c]
    if eps_boxes == 0:
        return reach == 1 << c
    grid = dec.graph.grid
    if grid is None:
        raise AnalysisError("a positive eps_boxes needs a gridded chain graph")
    comp_mask = np.zeros(grid.n_boxes, dtype=bool)
    comp_mask[dec.members[c]] = True
    allowed = neighborhood_mask(comp_mask, eps_boxes * grid.box_width, grid)
    for d in iter_bits(reach):
        if not allowed[dec.members[d]].all():
            return False
    return True


def component_period(dec: ChainDecomposition, c: int) -> int:
    """Graph period of a cyclic component: the gcd of its cycle lengths.

    BFS levels from one node; every internal edge ``u -> v`` contributes
    ``level(u) + 1 - level(v)`` to the gcd.
    """
    _check_component(dec, c)
    if not dec.has_cycle[c]:
        raise PreconditionError(f"component {c} has no cycle; its period is undefined")
    nodes = dec.members[c]
    inside = np.zeros(dec.graph.n, dtype=bool)
    inside[nodes] = True
    level = {int(nodes[0]): 0}
    queue = [int(nodes[0])]
    period = 0
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for v in dec.graph.successors(u).tolist():
            if not inside[v]:
                continue
            if v in level:
                period = gcd(period, level[u] + 1 - level[v])
            else:
                level[v] = level[u] + 1
                queue.append(v)
    return abs(period)


@dataclass(frozen=True, eq=False)
class ComponentProfile:
    """One component at one depth, as used to follow an attractor through refinements."""

    id: int
    boxes: frozenset[int]
    period: int
    box_count: int
    is_terminal: bool
    grid: Grid | None = None

    @property
    def measure(self) -> float:
        return self.box_count * (self.grid.box_width if self.grid is not None else 1.0)


def profile(dec: ChainDecomposition, c: int) -> ComponentProfile:
    period = component_period(dec, c) if dec.has_cycle[c] else 0
    return ComponentProfile(c, dec.boxes(c), period, int(dec.members[c].size),
                            bool(dec.terminal[c]), dec.graph.grid)


@dataclass(frozen=True)
class TerminalClassification:
    verdict: str
    period_sequence: tuple[int, ...]
    measure_sequence: tuple[float, ...]


def containment_fraction(coarse: ComponentProfile, fine: ComponentProfile) -> float:
    """Fraction of the finer component's box centers inside the coarser component."""
    if coarse.grid is None or fine.grid is None:
        raise TrackingError("profiles need grids to be matched")
    ids = np.fromiter(fine.boxes, dtype=np.int64)
    parents = coarse.grid.boxes_of(fine.grid.center(ids))
    hit = np.isin(parents, np.fromiter(coarse.boxes, dtype=np.int64))
    return float(hit.mean()) if ids.size else 0.0


def classify_terminal(profiles: Sequence[ComponentProfile], box_factor: int = PERIODIC_BOX_FACTOR
                      ) -> TerminalClassification:
    """Periodic-orbit versus odometer signature of a terminal component across depths.

    * ``periodic_like``: the last two periods agree on some ``p`` and the last
      two box counts are at most ``box_factor * p``.
    * ``odometer_like``: the period sequence is a nondecreasing divisor chain
      that strictly grows at two or more refinement steps while the covered
      measure never grows and ends below where it started.
    * ``other`` otherwise.  Finite depth gives evidence, never a proof.
    """
    if len(profiles) < 3:
        raise AnalysisError("classification needs at least 3 depths")
    for a, b in zip(profiles, profiles[1:]):
        if b.grid is not None and a.grid is not None and b.grid.depth <= a.grid.depth:
            raise TrackingError("profiles must come from strictly increasing depths")
        if containment_fraction(a, b) < 0.5:
            raise TrackingError("a finer profile is not contained in the preceding one")
    periods = tuple(p.period for p in profiles)
    measures = tuple(p.measure for p in profiles)
    if min(periods) < 1:
        raise AnalysisError("profiles must describe cyclic components")
    p = periods[-1]
    if periods[-2] == p and all(q.box_count <= box_factor * p for q in profiles[-2:]):
        return TerminalClassification("periodic_like", periods, measures)
    chain = all(b % a == 0 for a, b in zip(periods, periods[1:]))
    multiplications = sum(b > a for a, b in zip(periods, periods[1:]))
    shrinking = all(b <= a for a, b in zip(measures, measures[1:])) and measures[-1] < measures[0]
    if chain and multiplications >= 2 and shrinking:
        return TerminalClassification("odometer_like", periods, measures)
    return TerminalClassification("other", periods, measures)


def track_terminal(sys: SystemDef, depths: Sequence[int], delta_boxes: float = 1.0,
                   anchor=None, rigor_margin: float = 0.0) -> list[ComponentProfile]:
    """Profiles of one terminal component followed through ``depths``.

    At the first depth the terminal component containing ``anchor`` is used
    (or the largest one); afterwards, the terminal component with most box
    centers inside the previous profile, ties to the lowest id.
    """
    out: list[ComponentProfile] = []
    for depth in depths:
        grid = subdivide(sys.domain, depth)
        params = ChainGraphParams(delta_boxes * grid.box_width, rigor_margin)
        dec = cg.scc_decompose(cg.build_chain_graph(sys, grid, params))
        terms = sorted(terminal_components(dec))
        if not out:
            if anchor is not None:
                c = int(dec.scc_of[grid.box_of(anchor)])
                if c not in terms:
                    raise TrackingError("anchor does not lie in a terminal component")
            else:
                c = max(terms, key=lambda t: (dec.members[t].size, -t))
        else:
            prev = out[-1]
            scores = [(containment_fraction(prev, profile(dec, t)) * dec.members[t].size, -t)
                      for t in terms]
            best = max(scores)
            if best[0] == 0:
                raise TrackingError(f"no terminal component at depth {depth} overlaps the tracked one")
            c = -best[1]
        out.append(profile(dec, c))
    return out
