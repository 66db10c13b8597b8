"""The delta-chain digraph over grid boxes and its SCC decomposition.

An edge ``b -> b'`` is present whenever some ``x`` in ``b`` and ``y`` in
``b'`` can satisfy ``d(f(x), y) <= delta``.  The graph is an outer
approximation, so the recurrent boxes and components derived from it are
outer approximations too.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import ValidationError
from .phase_space import Grid
from .systems import SystemDef

_GAP_TOL = 1e-12


@dataclass(frozen=True)
class ChainGraphParams:
    """``delta`` is the chain tolerance; ``rigor_margin`` pads every image.

    ``samples_per_axis`` sets the sampling lattice inside each box (3 means
    corners plus center); denser lattices shrink the Lipschitz padding.
    """

    delta: float
    rigor_margin: float = 0.0
    samples_per_axis: int = 3

    def __post_init__(self):
        for name in ("delta", "rigor_margin"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")
        if self.samples_per_axis < 2:
            raise ValidationError("samples_per_axis must be >= 2")


@dataclass(frozen=True)
class Enclosure:
    """Axis-aligned region in unwrapped coordinates (periodic axes may exceed [0, 1))."""

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, p, periodic: bool = False) -> bool:
        p = np.asarray(p, dtype=float).reshape(-1)
        for a in range(p.size):
            lo, hi = self.lo[a], self.hi[a]
            if periodic:
                if hi - lo >= 1.0:
                    continue
                q = lo + np.mod(p[a] - lo, 1.0)
                if q > hi:
                    return False
            elif not lo <= p[a] <= hi:
                return False
        return True


def _sample_offsets(grid: Grid, s: int) -> tuple[np.ndarray, float]:
    """Lattice offsets inside a box and the lattice's covering radius."""
    t = np.linspace(0.0, 1.0, s)
    mesh = np.meshgrid(*([t] * grid.dim), indexing="ij")
    offs = np.stack([m.reshape(-1) for m in mesh], axis=1) * grid.widths
    rho = float(np.linalg.norm(grid.widths / (2 * (s - 1))))
    return offs, rho


def box_images(sys: SystemDef, grid: Grid, margin: float = 0.0, samples_per_axis: int = 3,
               ids: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Enclosures of ``f(b)`` for many boxes at once, as ``(lo, hi)`` arrays.

    Each enclosure is the hull of the images of a sampling lattice (corners
    and center included), padded by ``lipschitz(b) * rho + margin`` where
    ``rho`` is the lattice's covering radius, so it contains ``f(b)`` when the
    Lipschitz bound is valid.
    """
    ids = np.arange(grid.n_boxes) if ids is None else np.asarray(ids, dtype=np.int64)
    offs, rho = _sample_offsets(grid, samples_per_axis)
    lo, _ = grid.bounds(ids)
    centers = grid.center(ids)
    pts = lo[:, None, :] + offs[None, :, :]
    k, s, d = pts.shape
    img = sys.fn(pts.reshape(-1, d)).reshape(k, s, d)
    cimg = sys.fn(centers)
    if sys.domain.periodic:
        # nearest representative of each sample image to the center's image
        img = cimg[:, None, :] + np.mod(img - cimg[:, None, :] + 0.5, 1.0) - 0.5
    else:
        img = np.clip(img, sys.domain.low, np.asarray(sys.domain.highs))
    pad = (sys.lipschitz(ids, grid) * rho + margin)[:, None]
    elo = np.minimum(img.min(axis=1), cimg) - pad
    ehi = np.maximum(img.max(axis=1), cimg) + pad
    if not sys.domain.periodic:
        elo = np.maximum(elo, sys.domain.low)
        ehi = np.minimum(ehi, np.asarray(sys.domain.highs))
    return elo, ehi


def box_image(sys: SystemDef, b: int, grid: Grid, margin: float = 0.0,
              samples_per_axis: int = 3) -> Enclosure:
    lo, hi = box_images(sys, grid, margin, samples_per_axis, ids=[b])
    return Enclosure(lo[0], hi[0])


def _axis_gap_table(lo: float, hi: float, n: int, w: float, origin: float, periodic: bool) -> np.ndarray:
    blo = origin + w * np.arange(n)
    bhi = blo + w
    if not periodic:
        return np.maximum(0.0, np.maximum(blo - hi, lo - bhi))
    if hi - lo >= 1.0:
        return np.zeros(n)
    shift = np.floor(lo)
    lo, hi = lo - shift, hi - shift
    g = np.maximum(0.0, np.maximum(blo - hi, lo - bhi))
    for k in (-1.0, 1.0):
        g = np.minimum(g, np.maximum(0.0, np.maximum(blo + k - hi, lo - bhi - k)))
    return g


def targets_within(grid: Grid, lo: np.ndarray, hi: np.ndarray, delta: float) -> np.ndarray:
    """Sorted ids of boxes whose closure lies within ``delta`` of ``[lo, hi]``."""
    n, periodic = grid.per_axis, grid.domain.periodic
    tol = delta + _GAP_TOL
    idx, sq = [], []
    for a in range(grid.dim):
        g = _axis_gap_table(lo[a], hi[a], n, grid.widths[a], grid.domain.low[a], periodic)
        keep = np.flatnonzero(g <= tol)
        idx.append(keep)
        sq.append(g[keep] ** 2)
    if grid.dim == 1:
        return idx[0]
    mesh_i = np.meshgrid(*idx, indexing="ij")
    mesh_g = np.meshgrid(*sq, indexing="ij")
    ok = sum(mesh_g) <= tol * tol
    multi = np.stack([m[ok] for m in mesh_i], axis=-1)
    return np.sort(grid.flat_index(multi))


@dataclass(frozen=True, eq=False)
class ChainGraph:
    """Adjacency of the delta-chain relation; ``adj[b, b']`` is an edge.

    ``grid`` is ``None`` for abstract graphs built with :meth:`from_edges`.
    """

    adj: sparse.csr_matrix
    grid: Grid | None = None
    params: ChainGraphParams | None = None
    system: SystemDef | None = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "ChainGraph":
        e = np.array(list(edges), dtype=np.int64).reshape(-1, 2)
        adj = sparse.csr_matrix((np.ones(len(e), dtype=bool), (e[:, 0], e[:, 1])), shape=(n, n))
        adj.sum_duplicates()
        adj.sort_indices()
        return cls(adj)

    @classmethod
    def from_successors(cls, succ: Sequence[Iterable[int]]) -> "ChainGraph":
        return cls.from_edges(len(succ), ((u, v) for u, vs in enumerate(succ) for v in vs))

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @cached_property
    def adj_t(self) -> sparse.csr_matrix:
        t = self.adj.T.tocsr()
        t.sort_indices()
        return t

    def successors(self, b: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[b]:self.adj.indptr[b + 1]]

    def predecessors(self, b: int) -> np.ndarray:
        t = self.adj_t
        return t.indices[t.indptr[b]:t.indptr[b + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.adj.indptr)

    def has_self_loop(self) -> np.ndarray:
        return self.adj.diagonal().astype(bool)

    def edge_list(self) -> list[tuple[int, int]]:
        coo = self.adj.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return list(zip(coo.row[order].tolist(), coo.col[order].tolist()))


def build_chain_graph(sys: SystemDef, grid: Grid, params: ChainGraphParams) -> ChainGraph:
    """Edge ``b -> b'`` iff the enclosure of ``f(b)`` lies within ``delta`` of box ``b'``.

    Every true orbit induces a walk: ``box_of(f(x))`` is always a successor of
    ``box_of(x)``.
    """
    if sys.domain != grid.domain:
        raise ValidationError("system and grid live on different domains")
    elo, ehi = box_images(sys, grid, params.rigor_margin, params.samples_per_axis)
    rows, cols = [], []
    for b in range(grid.n_boxes):
        t = targets_within(grid, elo[b], ehi[b], params.delta)
        rows.append(np.full(t.size, b, dtype=np.int64))
        cols.append(t)
    r, c = np.concatenate(rows), np.concatenate(cols)
    adj = sparse.csr_matrix((np.ones(r.size, dtype=bool), (r, c)), shape=(grid.n_boxes,) * 2)
    adj.sort_indices()
    g = ChainGraph(adj, grid, params, sys)
    assert np.all(g.out_degree() >= 1), "every box needs a successor"
    return g


def reachable_set(g: ChainGraph, sources: Iterable[int], direction: str = "forward") -> frozenset[int]:
    """Boxes reachable from ``sources`` (sources included)."""
    return frozenset(np.flatnonzero(reachable_mask(g, sources, direction)).tolist())


def reachable_mask(g: ChainGraph, sources: Iterable[int], direction: str = "forward") -> np.ndarray:
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    m = g.adj if direction == "forward" else g.adj_t
    seen = np.zeros(g.n, dtype=bool)
    frontier = np.unique(np.fromiter(sources, dtype=np.int64))
    seen[frontier] = True
    while frontier.size:
        nxt = np.unique(m[frontier].indices)
        frontier = nxt[~seen[nxt]]
        seen[frontier] = True
    return seen


@dataclass(frozen=True, eq=False)
class ChainDecomposition:
    """SCCs of a chain graph with their condensation DAG.

    Component ids are ordered by smallest member box.  Reachability among
    components is cached as Python-int bitsets (bit ``c`` = component ``c``).
    """

    graph: ChainGraph
    scc_of: np.ndarray
    members: tuple[np.ndarray, ...]
    has_cycle: np.ndarray
    dag: tuple[frozenset[int], ...]
    terminal: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.members)

    @property
    def components(self) -> dict[int, frozenset[int]]:
        return {c: frozenset(m.tolist()) for c, m in enumerate(self.members)}

    def boxes(self, c: int) -> frozenset[int]:
        return frozenset(self.members[c].tolist())

    @cached_property
    def topo_order(self) -> list[int]:
        """Components in topological order of the condensation."""
        indeg = [0] * self.n_components
        for succ in self.dag:
            for d in succ:
                indeg[d] += 1
        ready = [c for c in range(self.n_components) if indeg[c] == 0]
        ready.reverse()
        order = []
        while ready:
            c = ready.pop()
            order.append(c)
            for d in sorted(self.dag[c], reverse=True):
                indeg[d] -= 1
                if indeg[d] == 0:
                    ready.append(d)
        if len(order) != self.n_components:
            raise AssertionError("condensation is not acyclic")
        return order

    @cached_property
    def reach_bits(self) -> list[int]:
        """Components reachable from each component, itself included."""
        bits = [0] * self.n_components
        for c in reversed(self.topo_order):
            acc = 1 << c
            for d in self.dag[c]:
                acc |= bits[d]
            bits[c] = acc
        return bits

    @cached_property
    def cyclic_bits(self) -> int:
        acc = 0
        for c in np.flatnonzero(self.has_cycle).tolist():
            acc |= 1 << c
        return acc

    @cached_property
    def omega_bits(self) -> list[int]:
        """Components in the forward reach of the cyclic components reachable from each component."""
        bits = [0] * self.n_components
        for c in reversed(self.topo_order):
            acc = self.reach_bits[c] if self.has_cycle[c] else 0
            for d in self.dag[c]:
                acc |= bits[d]
            bits[c] = acc
        return bits

    def boxes_of_bits(self, bits: int) -> frozenset[int]:
        out: list[int] = []
        for c in iter_bits(bits):
            out.extend(self.members[c].tolist())
        return frozenset(out)


def iter_bits(bits: int):
    c = 0
    while bits:
        if bits & 1:
            yield c
        bits >>= 1
        c += 1


def scc_decompose(g: ChainGraph) -> ChainDecomposition:
    """Strongly connected components and the condensation DAG of ``g``."""
    n = g.n
    _, labels = connected_components(g.adj, directed=True, connection="strong")
    _, first = np.unique(labels, return_index=True)
    # relabel so component ids follow the smallest member box
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    scc_of = relabel[labels].astype(np.int64)
    k = order.size
    sort_idx = np.argsort(scc_of, kind="stable")
    splits = np.cumsum(np.bincount(scc_of, minlength=k))[:-1]
    members = tuple(np.split(np.arange(n)[sort_idx], splits))
    coo = g.adj.tocoo()
    cu, cv = scc_of[coo.row], scc_of[coo.col]
    internal = cu == cv
    has_cycle = np.array([m.size > 1 for m in members], dtype=bool)
    has_cycle[cu[internal & (coo.row == coo.col)]] = True
    succ: list[set[int]] = [set() for _ in range(k)]
    cross = ~internal
    if cross.any():
        pairs = np.unique(np.stack([cu[cross], cv[cross]], axis=1), axis=0)
        for a, b in pairs.tolist():
            succ[a].add(b)
    dag = tuple(frozenset(s) for s in succ)
    terminal = np.array([has_cycle[c] and not dag[c] for c in range(k)], dtype=bool)
    return ChainDecomposition(g, scc_of, members, has_cycle, dag, terminal)
