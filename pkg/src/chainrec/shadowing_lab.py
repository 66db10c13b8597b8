"""Pseudo-orbits, shadowing searches and chain-continuity cells.

Everything here is empirical.  ``shadowing_search`` scans box centers at a
fixed depth, so a negative answer means "no witness at that depth", not
"no shadowing".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import chain_graph as cg
from .chain_graph import ChainGraph, ChainGraphParams
from .errors import AnalysisError, UnsupportedSystemError, ValidationError
from .phase_space import Grid, metric_distance, subdivide
from .systems import SystemDef

KINDS = ("perturbed_orbit", "random_walk", "spliced")
_HEADROOM = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class PseudoOrbit:
    """Finite delta-pseudo-orbit; the delta bound is checked on construction."""

    points: np.ndarray
    delta: float
    kind: str
    system: SystemDef = field(repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown pseudo-orbit kind {self.kind!r}")
        d = self.defects()
        if d.size and d.max() > self.delta:
            raise AnalysisError(f"step of size {d.max():.3g} exceeds delta={self.delta}")

    def __len__(self) -> int:
        return self.points.shape[0]

    def defects(self) -> np.ndarray:
        """``d(f(x_i), x_{i+1})`` for every consecutive pair."""
        if len(self.points) < 2:
            return np.zeros(0)
        img = self.system.map(self.points[:-1])
        return np.atleast_1d(metric_distance(img, self.points[1:], self.system.domain))


def _jump(rng: np.random.Generator, dim: int, radius: float, direction=None, low: float = 0.0) -> np.ndarray:
    if direction is None:
        v = rng.normal(size=dim)
        direction = v / np.linalg.norm(v)
    # radius ~ r * u^(1/dim) is uniform on the ball when low = 0
    u = rng.uniform(low, 1.0) if low else rng.random() ** (1.0 / dim)
    return direction * radius * u


def generate_pseudo_orbit(sys: SystemDef, x0, delta: float, length: int, seed: int,
                          kind: str = "perturbed_orbit", splice_at: int | None = None) -> PseudoOrbit:
    """A seeded delta-pseudo-orbit of ``length`` points starting at ``x0``.

    ``perturbed_orbit`` adds noise uniform on the delta-ball at every step;
    ``random_walk`` adds a jump of size in ``[delta/2, delta]`` along one
    direction fixed for the whole orbit, so errors drift; ``spliced`` follows
    the true orbit except for one jump from ``f(x_k)`` to ``x_{k+1}`` at
    ``k = splice_at`` (default ``length // 2``, capped at the last step).
    """
    if delta < 0 or length < 2:
        raise ValidationError("need delta >= 0 and length >= 2")
    if kind not in KINDS:
        raise ValidationError(f"unknown pseudo-orbit kind {kind!r}")
    if kind == "spliced":
        splice_at = min(length // 2, length - 2) if splice_at is None else splice_at
        if not 0 <= splice_at <= length - 2:
            raise ValidationError("splice_at must index a step of the orbit")
    rng = np.random.default_rng(seed)
    dim, dom = sys.dim, sys.domain
    radius = delta * _HEADROOM
    drift = None
    if kind == "random_walk":
        v = rng.normal(size=dim)
        drift = v / np.linalg.norm(v)
    pts = np.empty((length, dim))
    pts[0] = dom.as_points(x0)[0]
    hi = np.asarray(dom.highs)
    for i in range(length - 1):
        fx = sys.map(pts[i:i + 1])[0]
        if delta == 0 or (kind == "spliced" and i != splice_at):
            pts[i + 1] = fx
            continue
        for _ in range(10):
            if kind == "random_walk":
                step = _jump(rng, dim, radius, drift, low=0.5)
            else:
                step = _jump(rng, dim, radius)
            y = fx + step
            y = dom.wrap(y[None])[0] if dom.periodic else np.clip(y, dom.low, hi)
            if metric_distance(fx, y, dom) <= delta:
                break
        else:
            raise AnalysisError("could not place a pseudo-orbit point within delta")
        pts[i + 1] = y
    return PseudoOrbit(pts, float(delta), kind, sys)


@dataclass(frozen=True)
class ShadowingResult:
    found: bool
    witness: tuple[float, ...] | None
    deviation: float
    candidates: int
    search_depth: int


def orbit_deviation(sys: SystemDef, x, po: PseudoOrbit) -> float:
    """``max_i d(f^i(x), x_i)`` over the pseudo-orbit."""
    orbit = sys.orbit(x, len(po))
    return float(np.max(metric_distance(orbit, po.points, sys.domain)))


def _candidates_near(grid: Grid, p: np.ndarray, r: float) -> np.ndarray:
    """Ids of boxes whose center lies within ``r`` of ``p``, ascending."""
    axes = []
    n = grid.per_axis
    for a in range(grid.dim):
        w, lo = grid.widths[a], grid.domain.low[a]
        first = math.floor((p[a] - r - lo) / w - 0.5)
        last = math.ceil((p[a] + r - lo) / w - 0.5)
        idx = np.arange(first, last + 1)
        if grid.domain.periodic:
            idx = np.unique(np.mod(idx, n))
        else:
            idx = idx[(idx >= 0) & (idx < n)]
        axes.append(idx)
    mesh = np.meshgrid(*axes, indexing="ij")
    multi = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    ids = np.sort(grid.flat_index(multi))
    d = metric_distance(grid.center(ids), p, grid.domain)
    return ids[np.atleast_1d(d) <= r]


def shadowing_search(sys: SystemDef, po: PseudoOrbit, epsilon: float, search_depth: int,
                     chunk: int = 1 << 16) -> ShadowingResult:
    """Best box center at ``search_depth`` whose orbit epsilon-shadows ``po``.

    Candidates are the centers within ``epsilon`` of ``x_0``; the one with
    the smallest deviation wins, ties to the lowest box id.
    """
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    grid = subdivide(sys.domain, search_depth)
    ids = _candidates_near(grid, po.points[0], epsilon)
    best_dev, best_id = math.inf, -1
    for start in range(0, ids.size, chunk):
        block = ids[start:start + chunk]
        cur = grid.center(block)
        dev = np.atleast_1d(metric_distance(cur, po.points[0], sys.domain))
        keep = dev <= epsilon
        block, cur, dev = block[keep], cur[keep], dev[keep]
        for i in range(1, len(po)):
            if not block.size:
                break
            cur = sys.map(cur)
            dev = np.maximum(dev, np.atleast_1d(metric_distance(cur, po.points[i], sys.domain)))
            keep = dev <= epsilon
            block, cur, dev = block[keep], cur[keep], dev[keep]
        if block.size:
            k = int(np.argmin(dev))
            if dev[k] < best_dev:
                best_dev, best_id = float(dev[k]), int(block[k])
    if best_id < 0:
        return ShadowingResult(False, None, math.inf, int(ids.size), search_depth)
    witness = tuple(float(v) for v in grid.center([best_id])[0])
    return ShadowingResult(True, witness, best_dev, int(ids.size), search_depth)


def expansion_rate(sys: SystemDef) -> float:
    """Uniform expansion factor of the maps with explicit inverse branches."""
    if sys.name == "doubling":
        return 2.0
    if sys.name == "tent" and sys.params.get("s", 0) > 1:
        return float(sys.params["s"])
    raise UnsupportedSystemError(f"{sys.name} has no supported expanding inverse branches")


def inverse_branch_shadow(sys: SystemDef, po: PseudoOrbit) -> float:
    """Shadowing point built by pulling back through the nearest inverse branches.

    Starting from the last pseudo-orbit point, each step takes the preimage
    nearest ``x_i``.  For slope ``lam > 1`` the result shadows within
    ``delta * lam / (lam - 1)``.
    """
    lam = expansion_rate(sys)
    dom = sys.domain
    xs = po.points[:, 0]
    z = float(xs[-1])
    for i in range(len(xs) - 2, -1, -1):
        if sys.name == "doubling":
            pre = np.array([z / 2.0, (z + 1.0) / 2.0])
        else:
            y = min(z, lam / 2.0)
            pre = np.array([y / lam, 1.0 - y / lam])
        d = np.atleast_1d(metric_distance(pre, xs[i], dom))
        z = float(pre[int(np.argmin(d))])
    return float(dom.wrap(np.array([[z]]))[0, 0]) if dom.periodic else z


@dataclass(frozen=True)
class ModulusEstimate:
    """Largest delta for which every trial pseudo-orbit was epsilon-shadowed.

    ``delta`` is ``None`` when nothing was accepted down to the bisection
    floor.  This is an empirical estimate.
    """

    epsilon: float
    delta: float | None
    verdict: str
    trials: int
    tested: tuple[tuple[float, bool], ...]
    empirical: bool = True


def estimate_shadowing_modulus(sys: SystemDef, epsilon: float, trials: int, seed: int,
                               length: int = 10, search_depth: int | None = None,
                               iterations: int = 10, kinds: Sequence[str] = KINDS) -> ModulusEstimate:
    """Bisection on delta in ``(0, epsilon]`` against seeded random pseudo-orbits.

    Trial ``t`` uses kind ``kinds[t % len(kinds)]``, a start point and noise
    drawn from seed ``seed + t``; the same trials are replayed at every delta.
    """
    if epsilon <= 0 or trials < 1:
        raise ValidationError("need epsilon > 0 and trials >= 1")
    if search_depth is None:
        search_depth = 18 if sys.dim == 1 else 12
    starts = [sys.domain.low + np.random.default_rng(seed + t).random(sys.dim) * sys.domain.span
              for t in range(trials)]

    def accepted(delta: float) -> bool:
        for t in range(trials):
            po = generate_pseudo_orbit(sys, starts[t], delta, length, seed + t, kinds[t % len(kinds)])
            if not shadowing_search(sys, po, epsilon, search_depth).found:
                return False
        return True

    tested = []
    if accepted(epsilon):
        return ModulusEstimate(epsilon, epsilon, "accepted", trials, ((epsilon, True),))
    tested.append((epsilon, False))
    lo, hi, best = 0.0, epsilon, None
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        ok = accepted(mid)
        tested.append((mid, ok))
        if ok:
            best, lo = mid, mid
        else:
            hi = mid
    verdict = "accepted" if best is not None else "failure"
    return ModulusEstimate(epsilon, best, verdict, trials, tuple(tested))


def _neighborhood_rows(grid: Grid, targets: np.ndarray, r: float) -> np.ndarray:
    """Row ``k``: boxes whose center lies within ``r + diameter/2`` of box ``targets[k]``."""
    mt = grid.multi_index(targets)
    mu = grid.multi_index(np.arange(grid.n_boxes))
    k = np.abs(mt[:, None, :] - mu[None, :, :])
    if grid.domain.periodic:
        k = np.minimum(k, grid.per_axis - k)
    gap = np.maximum(0.0, k * grid.widths - 0.5 * grid.widths)
    return np.sum(gap**2, axis=-1) <= (r + 0.5 * grid.diameter + 1e-12) ** 2


def cell_membership(g_j: ChainGraph, sys: SystemDef, boxes: np.ndarray, l: int, horizon: int) -> np.ndarray:
    """Vectorized :func:`chain_continuity_cell` over many start boxes."""
    grid = g_j.grid
    if grid is None:
        raise ValidationError("chain continuity cells need a gridded graph")
    if l < 1:
        raise ValidationError("l must be >= 1")
    boxes = np.asarray(boxes, dtype=np.int64)
    k = boxes.size
    layer = np.zeros((grid.n_boxes, k), dtype=np.float32)
    layer[boxes, np.arange(k)] = 1.0
    cur = grid.center(boxes)
    alive = np.ones(k, dtype=bool)
    at = g_j.adj_t.astype(np.float32)
    r = 1.0 / l
    for i in range(horizon + 1):
        if i:
            layer = (at @ layer > 0).astype(np.float32)
            cur = sys.map(cur)
        allowed = _neighborhood_rows(grid, grid.boxes_of(cur), r)
        escaped = np.any((layer.T > 0) & ~allowed, axis=1)
        alive &= ~escaped
        if not alive.any():
            break
    return alive


def chain_continuity_cell(g_j: ChainGraph, sys: SystemDef, b: int, l: int, horizon: int) -> bool:
    """Whether every chain from box ``b`` in ``g_j`` stays ``1/l``-close to the orbit of its center.

    Step ``i``'s reachability layer must lie in the box neighborhood of radius
    ``1/l`` around the box of ``f^i(center(b))``, for ``i <= horizon``.
    """
    return bool(cell_membership(g_j, sys, np.array([b]), l, horizon)[0])


@dataclass(frozen=True, eq=False)
class CCReport:
    """``membership[b, k]``: box ``b`` lies in the cell of ``ladder[k]``."""

    ladder: tuple[tuple[int, int], ...]
    membership: np.ndarray
    cc_fraction: float
    horizon: int

    def cc_boxes(self) -> np.ndarray:
        ls = sorted({l for _, l in self.ladder})
        ok = np.ones(self.membership.shape[0], dtype=bool)
        for l in ls:
            cols = [k for k, (_, ll) in enumerate(self.ladder) if ll == l]
            ok &= self.membership[:, cols].any(axis=1)
        return ok


def default_cc_horizon(ladder: Sequence[tuple[int, int]]) -> int:
    return 50 * max(j for j, _ in ladder)


def cc_report(sys: SystemDef, grid: Grid, ladder: Sequence[tuple[int, int]], horizon: int | None = None,
              rigor_margin: float = 0.0) -> CCReport:
    """Chain-continuity cells of every box over a ``(j, l)`` ladder.

    A box counts toward ``cc_fraction`` when, for every ``l`` in the ladder,
    some ladder pair ``(j, l)`` contains it.  One horizon is shared by the
    whole ladder, which keeps membership monotone in ``j``.
    """
    ladder = tuple((int(j), int(l)) for j, l in ladder)
    if not ladder:
        raise ValidationError("ladder must be nonempty")
    if any(j < 1 or l < 1 for j, l in ladder):
        raise ValidationError("ladder entries need j >= 1 and l >= 1")
    horizon = default_cc_horizon(ladder) if horizon is None else int(horizon)
    graphs = {j: cg.build_chain_graph(sys, grid, ChainGraphParams(1.0 / j, rigor_margin))
              for j in sorted({j for j, _ in ladder})}
    boxes = np.arange(grid.n_boxes)
    membership = np.zeros((grid.n_boxes, len(ladder)), dtype=bool)
    for k, (j, l) in enumerate(ladder):
        membership[:, k] = cell_membership(graphs[j], sys, boxes, l, horizon)
    for k1, (j1, l1) in enumerate(ladder):
        for k2, (j2, l2) in enumerate(ladder):
            if l1 == l2 and j2 >= j1 and np.any(membership[:, k1] & ~membership[:, k2]):
                raise AssertionError("cell membership is not monotone in j")
    report = CCReport(ladder, membership, 0.0, horizon)
    frac = float(report.cc_boxes().mean())
    return CCReport(ladder, membership, frac, horizon)
