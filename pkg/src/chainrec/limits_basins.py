"""Omega-limit estimates, chain omega-limit sets and the terminal basin partition.

The basin partition works on the condensation: a box is assigned to a
terminal component ``C`` when ``C`` is the only cyclic component it can
chain-reach; otherwise it is ambiguous.  Ambiguity is reported as such and
never broken by a tie rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import chain_graph as cg
from .chain_graph import ChainDecomposition, ChainGraph, ChainGraphParams
from .errors import PreconditionError, ValidationError
from .phase_space import Grid, subdivide
from .systems import SystemDef

AMBIGUOUS = -1


@dataclass(frozen=True)
class OmegaEstimate:
    seed: tuple[float, ...]
    transient: int
    horizon: int
    boxes: frozenset[int]


def omega_estimate(sys: SystemDef, x, transient: int, horizon: int, grid: Grid) -> OmegaEstimate:
    """Boxes visited by ``f^i(x)`` for ``transient <= i < horizon``."""
    if not 0 <= transient < horizon:
        raise ValidationError("need 0 <= transient < horizon")
    orbit = sys.orbit(x, horizon)[transient:]
    seed = tuple(float(v) for v in sys.domain.as_points(x)[0])
    return OmegaEstimate(seed, transient, horizon, frozenset(grid.boxes_of(orbit).tolist()))


def chain_omega(g: ChainGraph, dec: ChainDecomposition, b: int) -> frozenset[int]:
    """Forward reach of the cyclic boxes reachable from ``b``.

    On a finite graph, these are exactly the boxes ``y`` with walks
    ``b -> y`` of every sufficiently large length.
    """
    if dec.graph is not g:
        raise ValidationError("decomposition does not belong to this graph")
    return dec.boxes_of_bits(dec.omega_bits[int(dec.scc_of[b])])


@dataclass(frozen=True, eq=False)
class BasinReport:
    """``assignment[b]`` is a terminal component id or :data:`AMBIGUOUS`."""

    assignment: np.ndarray
    v_fraction: float
    per_component_basin_size: dict[int, int] = field(default_factory=dict)

    @property
    def n_ambiguous(self) -> int:
        return int(np.count_nonzero(self.assignment == AMBIGUOUS))


def reachable_cyclic(dec: ChainDecomposition) -> list[int]:
    """Bitset of cyclic components reachable from each component."""
    return [r & dec.cyclic_bits for r in dec.reach_bits]


def terminal_basin_partition(dec: ChainDecomposition) -> BasinReport:
    """Assign each box to the unique cyclic component it reaches, if that is unique."""
    terminal_bits = 0
    for c in np.flatnonzero(dec.terminal).tolist():
        terminal_bits |= 1 << c
    comp_assign = np.full(dec.n_components, AMBIGUOUS, dtype=np.int64)
    for c, bits in enumerate(reachable_cyclic(dec)):
        if not dec.reach_bits[c] & terminal_bits:
            raise AssertionError(f"component {c} reaches no terminal component")
        if bits & (bits - 1) == 0:
            comp_assign[c] = bits.bit_length() - 1
    assignment = comp_assign[dec.scc_of]
    sizes = {int(c): int(np.count_nonzero(assignment == c)) for c in np.flatnonzero(dec.terminal)}
    n = assignment.size
    return BasinReport(assignment, float(np.count_nonzero(assignment != AMBIGUOUS)) / n, sizes)


@dataclass(frozen=True)
class WMembership:
    seed: tuple[float, ...]
    j: int
    m: int
    member: bool


def default_w_horizon(grid: Grid) -> int:
    return 10 * grid.per_axis


def grid_box_gaps(grid: Grid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(len(a), len(b))`` distances between the closures of boxes ``a`` and ``b``."""
    ma, mb = grid.multi_index(a), grid.multi_index(b)
    k = np.abs(ma[:, None, :] - mb[None, :, :])
    if grid.domain.periodic:
        k = np.minimum(k, grid.per_axis - k)
    gaps = np.maximum(k - 1, 0) * grid.widths
    return np.sqrt(np.sum(gaps**2, axis=-1))


def w_membership(sys: SystemDef, x, j: int, m: int, dec: ChainDecomposition,
                 assignment: BasinReport | np.ndarray, grid: Grid,
                 horizon: int | None = None) -> WMembership:
    """Grid-level test of ``C(x) within 1/j of {f^i(x) : i >= m}``.

    Every box of the terminal component assigned to ``box_of(x)`` must lie
    closer than ``1/j`` to a box visited by ``f^i(x)``, ``m <= i <= m + horizon``.
    """
    if j < 1 or m < 0:
        raise ValidationError("need j >= 1 and m >= 0")
    assign = assignment.assignment if isinstance(assignment, BasinReport) else assignment
    b = grid.box_of(x)
    c = int(assign[b])
    if c == AMBIGUOUS:
        raise PreconditionError(f"seed {x!r} lies in an ambiguous box")
    horizon = default_w_horizon(grid) if horizon is None else horizon
    orbit = sys.orbit(x, m + horizon + 1)[m:]
    visited = np.unique(grid.boxes_of(orbit))
    gaps = grid_box_gaps(grid, dec.members[c], visited)
    member = bool(np.all(gaps.min(axis=1) < 1.0 / j))
    seed = tuple(float(v) for v in sys.domain.as_points(x)[0])
    return WMembership(seed, j, m, member)


@dataclass(frozen=True)
class CoverageParams:
    delta_boxes: float = 1.0
    rigor_margin: float = 0.0
    j: int = 4
    m: int = 100
    samples: int = 100
    seed: int = 0
    horizon: int | None = None


@dataclass(frozen=True)
class CoverageRow:
    depth: int
    n_boxes: int
    n_ambiguous: int
    v_fraction: float
    w_sample_fraction: float
    seeds_in_v: int


def sample_points(domain, n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random((n, domain.dim))
    return domain.low + u * domain.span


def coverage_study(sys: SystemDef, depths: Sequence[int], params: CoverageParams = CoverageParams()
                   ) -> list[CoverageRow]:
    """Per-depth fraction of uniquely assigned boxes and of sampled W-members.

    Seeds are drawn uniformly over the boxes assigned to a terminal component
    (``np.random.default_rng(params.seed)``, fresh per depth), so the W
    fraction measures how much of the basin region passes the test.
    """
    depths = list(depths)
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValidationError("depths must be increasing")
    rows = []
    for depth in depths:
        grid = subdivide(sys.domain, depth)
        gp = ChainGraphParams(params.delta_boxes * grid.box_width, params.rigor_margin)
        g = cg.build_chain_graph(sys, grid, gp)
        dec = cg.scc_decompose(g)
        basins = terminal_basin_partition(dec)
        rng = np.random.default_rng(params.seed)
        assigned = np.flatnonzero(basins.assignment != AMBIGUOUS)
        passed = 0
        if assigned.size:
            picks = rng.choice(assigned, size=params.samples, replace=True)
            lo, _ = grid.bounds(picks)
            seeds = lo + rng.random((params.samples, grid.dim)) * grid.widths
            for s in seeds:
                passed += w_membership(sys, s, params.j, params.m, dec, basins, grid,
                                       params.horizon).member
        frac = passed / params.samples if assigned.size else 0.0
        rows.append(CoverageRow(depth, grid.n_boxes, basins.n_ambiguous, basins.v_fraction,
                                frac, int(assigned.size)))
    return rows
