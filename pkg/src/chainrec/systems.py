"""Built-in continuous self-maps and config-defined piecewise polynomial maps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, ValidationError
from .phase_space import Domain, Grid

BUILTINS = ("doubling", "rotation", "logistic", "tent", "north_south", "cat_map")
CAT_MATRIX = np.array([[2.0, 1.0], [1.0, 1.0]])
CAT_NORM = (3.0 + math.sqrt(5.0)) / 2.0
USER_MAP_TOL = 1e-9

MapFn = Callable[[np.ndarray], np.ndarray]
BoundFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SystemDef:
    """A continuous map of a compact domain into itself.

    ``fn`` acts on ``(k, dim)`` arrays and may return unwrapped coordinates;
    :meth:`map` wraps or clamps them into the domain.  ``lipschitz_fn`` takes
    the lower/upper corners of a batch of boxes and returns a valid
    Lipschitz bound of the map on each box.
    """

    name: str
    domain: Domain
    fn: MapFn = field(repr=False)
    lipschitz_fn: BoundFn = field(repr=False)
    params: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return self.domain.dim

    def map(self, pts) -> np.ndarray:
        pts = self.domain.as_points(pts)
        out = self.fn(pts)
        if self.domain.periodic:
            return self.domain.wrap(out)
        return np.clip(out, self.domain.low, np.asarray(self.domain.highs))

    def __call__(self, p):
        return evaluate(self, p)

    def lipschitz(self, ids, grid: Grid) -> np.ndarray:
        lo, hi = grid.bounds(ids)
        return np.asarray(self.lipschitz_fn(lo, hi), dtype=float)

    def orbit(self, x, n: int) -> np.ndarray:
        """``(n, dim)`` array ``x, f(x), ..., f^(n-1)(x)``."""
        pts = np.empty((n, self.dim))
        cur = self.domain.as_points(x)[:1]
        for i in range(n):
            pts[i] = cur[0]
            cur = self.map(cur)
        return pts

    def to_dict(self) -> dict:
        return {"name": self.name, "domain": self.domain.to_dict(), "params": dict(self.params)}


def evaluate(sys: SystemDef, p):
    """Image of a single point; a float on 1-d domains, an array otherwise."""
    pts = sys.domain.as_points(p)
    if pts.shape[0] != 1:
        raise DomainError("evaluate takes a single point; use SystemDef.map for batches")
    if not np.all(sys.domain.contains(pts)):
        raise DomainError(f"{p!r} is outside the domain of {sys.name}")
    y = sys.map(pts)[0]
    return float(y[0]) if sys.dim == 1 else y


def _const(value: float) -> BoundFn:
    return lambda lo, hi: np.full(lo.shape[0], value)


def _check_params(name: str, given: Mapping, allowed: Mapping[str, float]) -> dict:
    unknown = set(given) - set(allowed)
    if unknown:
        raise ValidationError(f"{name}: unknown parameter(s) {sorted(unknown)}")
    out = dict(allowed)
    for k, v in given.items():
        try:
            out[k] = float(v)
        except (TypeError, ValueError):
            raise ValidationError(f"{name}: parameter {k} must be a number") from None
        if not math.isfinite(out[k]):
            raise ValidationError(f"{name}: parameter {k} must be finite")
    return out


def _in_range(name, key, value, lo, hi):
    if not lo <= value <= hi:
        raise ValidationError(f"{name}: {key}={value} outside [{lo}, {hi}]")


def _logistic_bound(r: float) -> BoundFn:
    def bound(lo, hi):
        return r * np.maximum(np.abs(1 - 2 * lo[:, 0]), np.abs(1 - 2 * hi[:, 0]))

    return bound


def _north_south_bound(beta: float) -> BoundFn:
    # |f'| = 1 - beta*cos(2 pi t) >= 0 for beta <= 1; maximized where cos is smallest
    def bound(lo, hi):
        a, b = lo[:, 0], hi[:, 0]
        has_half = np.floor(b - 0.5) >= np.ceil(a - 0.5)
        cmin = np.where(has_half, -1.0, np.minimum(np.cos(2 * np.pi * a), np.cos(2 * np.pi * b)))
        return 1.0 - beta * cmin

    return bound


def builtin(name: str, params: Mapping | None = None) -> SystemDef:
    """One of the catalog maps on its canonical domain.

    ===========  ========  =======================================  ===========
    name         domain    formula                                  parameters
    ===========  ========  =======================================  ===========
    doubling     circle    2x mod 1
    rotation     circle    x + alpha mod 1                          alpha
    logistic     [0, 1]    r x (1 - x)                              r in [0, 4]
    tent         [0, 1]    s min(x, 1 - x)                          s in [0, 2]
    north_south  circle    x - beta/(2 pi) sin(2 pi x) mod 1        beta in (0, 1]
    cat_map      torus     (2x + y, x + y) mod 1
    ===========  ========  =======================================  ===========
    """
    params = dict(params or {})
    if name == "doubling":
        _check_params(name, params, {})
        return SystemDef(name, Domain.circle(), lambda x: 2.0 * x, _const(2.0), {})
    if name == "rotation":
        p = _check_params(name, params, {"alpha": math.sqrt(2.0) - 1.0})
        alpha = p["alpha"]
        return SystemDef(name, Domain.circle(), lambda x: x + alpha, _const(1.0), p)
    if name == "logistic":
        p = _check_params(name, params, {"r": 4.0})
        r = p["r"]
        _in_range(name, "r", r, 0.0, 4.0)
        return SystemDef(name, Domain.interval(), lambda x: r * x * (1.0 - x), _logistic_bound(r), p)
    if name == "tent":
        p = _check_params(name, params, {"s": 2.0})
        s = p["s"]
        _in_range(name, "s", s, 0.0, 2.0)
        return SystemDef(name, Domain.interval(), lambda x: s * np.minimum(x, 1.0 - x), _const(s), p)
    if name == "north_south":
        p = _check_params(name, params, {"beta": 1.0})
        beta = p["beta"]
        if not 0.0 < beta <= 1.0:
            raise ValidationError(f"north_south: beta={beta} outside (0, 1]")

        def fn(x):
            return x - beta / (2 * np.pi) * np.sin(2 * np.pi * x)

        return SystemDef(name, Domain.circle(), fn, _north_south_bound(beta), p)
    if name == "cat_map":
        _check_params(name, params, {})
        return SystemDef(name, Domain.torus(), lambda x: x @ CAT_MATRIX.T, _const(CAT_NORM), {})
    raise ValidationError(f"unknown system {name!r}; expected one of {', '.join(BUILTINS)}")


def piecewise(breaks, coeffs, lipschitz: float, name: str = "piecewise") -> SystemDef:
    """1-d map given by one polynomial per interval ``[breaks[i], breaks[i+1]]``.

    ``coeffs[i]`` lists the coefficients of piece ``i`` in ascending powers of
    x.  The declared Lipschitz constant is trusted for enclosures; it and the
    endomorphism property are spot-checked on 1000 samples.
    """
    try:
        b = np.asarray(breaks, dtype=float)
        cs = [np.asarray(c, dtype=float) for c in coeffs]
        lip = float(lipschitz)
    except (TypeError, ValueError):
        raise ValidationError("piecewise map: breaks, coeffs and lipschitz must be numeric") from None
    if b.ndim != 1 or b.size < 2 or not np.all(np.diff(b) > 0) or not np.all(np.isfinite(b)):
        raise ValidationError("piecewise map: breaks must be a strictly increasing list of >= 2 numbers")
    if len(cs) != b.size - 1 or any(c.ndim != 1 or c.size == 0 for c in cs):
        raise ValidationError("piecewise map: need one nonempty coefficient list per piece")
    if not (math.isfinite(lip) and lip >= 0):
        raise ValidationError("piecewise map: lipschitz must be a nonnegative number")
    domain = Domain.interval(b[0], b[-1])
    inner = b[1:-1]

    def fn(x):
        flat = x[:, 0]
        piece = np.searchsorted(inner, flat, side="right")
        out = np.empty_like(flat)
        for i, c in enumerate(cs):
            sel = piece == i
            out[sel] = P.polyval(flat[sel], c)
        return out.reshape(-1, 1)

    xs = np.linspace(b[0], b[-1], 1000).reshape(-1, 1)
    ys = fn(xs)[:, 0]
    warnings = []
    if np.any(ys < b[0] - USER_MAP_TOL) or np.any(ys > b[-1] + USER_MAP_TOL):
        worst = max(b[0] - ys.min(), ys.max() - b[-1])
        raise ValidationError(f"piecewise map leaves its domain by {worst:.3g} on samples")
    if np.any(ys < b[0]) or np.any(ys > b[-1]):
        warnings.append("map leaves the domain by <= 1e-9 on samples; images are clamped")
    slopes = np.abs(np.diff(ys)) / np.diff(xs[:, 0])
    if slopes.max() > lip * (1 + 1e-9) + 1e-12:
        warnings.append(f"declared lipschitz {lip} below sampled slope {slopes.max():.6g}")
    params = {"breaks": b.tolist(), "coeffs": [c.tolist() for c in cs], "lipschitz": lip}
    return SystemDef(name, domain, fn, _const(lip), params, tuple(warnings))


_FRAGMENT_KEYS = {"type", "name", "params", "breaks", "coeffs", "lipschitz"}


def parse_system(cfg: Mapping) -> SystemDef:
    """Build a system from a config fragment.

    Builtins: ``{type = "builtin", name = ..., params = {...}}``.
    User maps: ``{type = "piecewise", breaks = [...], coeffs = [[...], ...], lipschitz = L}``.
    """
    if not isinstance(cfg, Mapping):
        raise ValidationError("system: expected a table")
    unknown = set(cfg) - _FRAGMENT_KEYS
    if unknown:
        raise ValidationError(f"system: unknown key(s) {sorted(unknown)}")
    kind = cfg.get("type", "builtin")
    if kind == "builtin":
        if "name" not in cfg:
            raise ValidationError("system: builtin needs a name")
        extra = {"breaks", "coeffs", "lipschitz"} & set(cfg)
        if extra:
            raise ValidationError(f"system: key(s) {sorted(extra)} only apply to piecewise maps")
        params = cfg.get("params", {})
        if not isinstance(params, Mapping):
            raise ValidationError("system: params must be a table")
        return builtin(cfg["name"], params)
    if kind == "piecewise":
        missing = {"breaks", "coeffs", "lipschitz"} - set(cfg)
        if missing:
            raise ValidationError(f"system: piecewise map missing {sorted(missing)}")
        if "params" in cfg:
            raise ValidationError("system: params only apply to builtins")
        return piecewise(cfg["breaks"], cfg["coeffs"], cfg["lipschitz"], cfg.get("name", "piecewise"))
    raise ValidationError(f"system: unknown type {kind!r}")
