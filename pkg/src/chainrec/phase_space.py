"""Compact domains, their metrics and dyadic box grids.

Every combinatorial object in the package lives on a :class:`Grid`: the
``2**(depth*dim)`` congruent half-open boxes of a :class:`Domain`.  Box ids
are flat integers with axis 0 varying fastest.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable

import numpy as np

from .errors import DomainError, SizeError

KINDS = ("interval", "square", "circle", "torus")
MAX_BOXES_LOG2 = 24
_TOL = 1e-12

BoxSet = frozenset


@dataclass(frozen=True)
class Domain:
    """A compact domain: a closed box, or a circle/torus of period 1."""

    kind: str
    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        dim = 1 if self.kind in ("interval", "circle") else 2
        if len(self.lows) != dim or len(self.highs) != dim:
            raise DomainError(f"{self.kind} needs {dim} axis range(s)")
        for lo, hi in zip(self.lows, self.highs):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise DomainError(f"bad axis range [{lo}, {hi}]")
        if self.periodic and (self.lows != (0.0,) * dim or self.highs != (1.0,) * dim):
            raise DomainError("circle/torus axes are fixed to [0, 1)")

    @classmethod
    def interval(cls, lo: float = 0.0, hi: float = 1.0) -> "Domain":
        return cls("interval", (float(lo),), (float(hi),))

    @classmethod
    def square(cls, lo: float = 0.0, hi: float = 1.0) -> "Domain":
        return cls("square", (float(lo), float(lo)), (float(hi), float(hi)))

    @classmethod
    def circle(cls) -> "Domain":
        return cls("circle", (0.0,), (1.0,))

    @classmethod
    def torus(cls) -> "Domain":
        return cls("torus", (0.0, 0.0), (1.0, 1.0))

    @property
    def dim(self) -> int:
        return len(self.lows)

    @property
    def periodic(self) -> bool:
        return self.kind in ("circle", "torus")

    @property
    def low(self) -> np.ndarray:
        return np.asarray(self.lows, dtype=float)

    @property
    def span(self) -> np.ndarray:
        return np.asarray(self.highs, dtype=float) - self.low

    @property
    def diameter(self) -> float:
        if self.periodic:
            return 0.5 * np.sqrt(self.dim)
        return float(np.linalg.norm(self.span))

    def as_points(self, p) -> np.ndarray:
        """Coerce ``p`` to a float array of shape ``(k, dim)``."""
        arr = np.asarray(p, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(-1, 1) if self.dim == 1 else arr.reshape(1, -1)
        if arr.shape[-1] != self.dim:
            raise DomainError(f"point of dimension {arr.shape[-1]} on a {self.dim}-d domain")
        return arr

    def wrap(self, pts: np.ndarray) -> np.ndarray:
        """Reduce periodic coordinates to [0, 1); non-periodic ones pass through."""
        if not self.periodic:
            return pts
        out = np.mod(pts, 1.0)
        # np.mod can return exactly 1.0 for tiny negative inputs
        out[out >= 1.0] = 0.0
        return out

    def contains(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = self.as_points(pts)
        if self.periodic:
            return np.all(np.isfinite(pts), axis=1)
        lo, hi = self.low, np.asarray(self.highs)
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lows": list(self.lows), "highs": list(self.highs)}


def axis_gaps(delta: np.ndarray, periodic: bool) -> np.ndarray:
    """Absolute per-axis coordinate differences under the domain metric."""
    delta = np.abs(delta)
    if periodic:
        delta = np.mod(delta, 1.0)
        delta = np.minimum(delta, 1.0 - delta)
    return delta


def metric_distance(p, q, domain: Domain):
    """Euclidean distance, with per-axis wraparound on circle/torus.

    Accepts single points or ``(k, dim)`` arrays (broadcast); returns a float
    for single points.
    """
    a, b = domain.as_points(p), domain.as_points(q)
    d = np.sqrt(np.sum(axis_gaps(a - b, domain.periodic) ** 2, axis=1))
    return float(d[0]) if d.size == 1 else d


@dataclass(frozen=True)
class Grid:
    domain: Domain
    depth: int

    def __post_init__(self):
        if self.depth < 0:
            raise SizeError("depth must be nonnegative")
        if self.depth * self.domain.dim > MAX_BOXES_LOG2:
            raise SizeError(
                f"depth {self.depth} gives 2^{self.depth * self.domain.dim} boxes; "
                f"cap is 2^{MAX_BOXES_LOG2}"
            )

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def per_axis(self) -> int:
        return 1 << self.depth

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.per_axis,) * self.dim

    @property
    def n_boxes(self) -> int:
        return self.per_axis ** self.dim

    @property
    def widths(self) -> np.ndarray:
        return self.domain.span / self.per_axis

    @property
    def box_width(self) -> float:
        """Largest side length of a box."""
        return float(self.widths.max())

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    def multi_index(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        return np.stack(np.unravel_index(ids, self.shape, order="F"), axis=-1)

    def flat_index(self, multi: np.ndarray) -> np.ndarray:
        multi = np.asarray(multi, dtype=np.int64)
        return np.ravel_multi_index(tuple(multi[..., a] for a in range(self.dim)), self.shape, order="F")

    @cached_property
    def centers(self) -> np.ndarray:
        """``(n_boxes, dim)`` array of box centers."""
        return self.center(np.arange(self.n_boxes))

    def center(self, ids) -> np.ndarray:
        return self.domain.low + (self.multi_index(ids) + 0.5) * self.widths

    def bounds(self, ids) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of the given boxes."""
        lo = self.domain.low + self.multi_index(ids) * self.widths
        return lo, lo + self.widths

    def box_of(self, p) -> int:
        """Id of the half-open box containing ``p``.

        Periodic coordinates are wrapped first; the right/top boundary of a
        non-periodic axis belongs to the last box.
        """
        ids = self.boxes_of(p)
        return int(ids[0])

    def boxes_of(self, pts) -> np.ndarray:
        pts = self.domain.as_points(pts)
        if not self.domain.periodic and not np.all(self.domain.contains(pts)):
            raise DomainError("point outside the domain")
        pts = self.domain.wrap(pts)
        idx = np.floor((pts - self.domain.low) / self.widths).astype(np.int64)
        np.clip(idx, 0, self.per_axis - 1, out=idx)
        return self.flat_index(idx)

    def mask(self, boxes: Iterable[int]) -> np.ndarray:
        m = np.zeros(self.n_boxes, dtype=bool)
        ids = np.fromiter(boxes, dtype=np.int64)
        m[ids] = True
        return m

    def box_gaps(self, targets: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Distance from the closed region ``[lo, hi]`` to each closed target box.

        ``lo``/``hi`` are unwrapped coordinates of one axis-aligned region.
        """
        blo, bhi = self.bounds(targets)
        gap = np.zeros_like(blo)
        for a in range(self.dim):
            gap[:, a] = _interval_gap(lo[a], hi[a], blo[:, a], bhi[:, a], self.domain.periodic)
        return np.sqrt(np.sum(gap**2, axis=1))


def _interval_gap(lo, hi, blo, bhi, periodic: bool):
    """Gap between ``[lo, hi]`` and each ``[blo, bhi]`` on a line or a period-1 circle."""
    if not periodic:
        return np.maximum(0.0, np.maximum(blo - hi, lo - bhi))
    if hi - lo >= 1.0:
        return np.zeros_like(blo)
    shift = np.floor(lo)
    lo, hi = lo - shift, hi - shift
    best = None
    for k in (-1.0, 0.0, 1.0):
        g = np.maximum(0.0, np.maximum(blo + k - hi, lo - bhi - k))
        best = g if best is None else np.minimum(best, g)
    return best


def subdivide(domain: Domain, depth: int) -> Grid:
    """Dyadic grid of ``2**(depth*dim)`` boxes on ``domain``."""
    return Grid(domain, int(depth))


def box_of(p, grid: Grid) -> int:
    return grid.box_of(p)


def _offset_gap(k: np.ndarray, w: float) -> np.ndarray:
    # distance from the center of the box k steps away to the reference box
    return np.maximum(0.0, np.abs(k) * w - 0.5 * w)


def neighborhood_boxes(s: Iterable[int], r: float, grid: Grid) -> frozenset[int]:
    """Boxes whose center lies within ``r + diameter/2`` of some box of ``s``.

    A conservative stand-in for the open ``r``-neighborhood of the union of
    ``s``: every box meeting that neighborhood is returned.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    mask = neighborhood_mask(grid.mask(s), r, grid)
    return frozenset(np.flatnonzero(mask).tolist())


def neighborhood_mask(mask: np.ndarray, r: float, grid: Grid) -> np.ndarray:
    """Boolean-mask form of :func:`neighborhood_boxes`."""
    if not mask.any():
        return mask.copy()
    reach = r + 0.5 * grid.diameter + _TOL
    n = grid.per_axis
    widths = grid.widths
    axis_offsets = []
    for a in range(grid.dim):
        kmax = min(int(np.ceil(reach / widths[a] + 0.5)), n)
        k = np.arange(-kmax, kmax + 1)
        axis_offsets.append((k, _offset_gap(k, widths[a]) ** 2))
    grid_mask = mask.reshape(grid.shape, order="F")
    out = np.zeros_like(grid_mask)
    for combo in product(*(range(len(k)) for k, _ in axis_offsets)):
        g2 = sum(axis_offsets[a][1][c] for a, c in enumerate(combo))
        if g2 > reach * reach:
            continue
        shift = tuple(int(axis_offsets[a][0][c]) for a, c in enumerate(combo))
        out |= _shifted(grid_mask, shift, grid.domain.periodic)
    return out.reshape(-1, order="F")


def _shifted(m: np.ndarray, shift: tuple[int, ...], periodic: bool) -> np.ndarray:
    if periodic:
        return np.roll(m, shift, axis=tuple(range(m.ndim)))
    out = np.zeros_like(m)
    src, dst = [], []
    for ax, s in enumerate(shift):
        n = m.shape[ax]
        if abs(s) >= n:
            return out
        src.append(slice(max(0, -s), n - max(0, s)))
        dst.append(slice(max(0, s), n - max(0, -s)))
    out[tuple(dst)] = m[tuple(src)]
    return out
