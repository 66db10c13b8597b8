import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from chainrec.errors import DomainError, ValidationError
from chainrec.phase_space import metric_distance, subdivide
from chainrec.systems import BUILTINS, builtin, evaluate, parse_system, piecewise

from oracles import north_south_fixed_points


def test_builtin_examples():
    d = builtin("doubling")
    assert_allclose(d(0.3), 0.6)
    assert_allclose(d(0.7), 0.4)
    assert builtin("logistic", {"r": 4})(0.5) == 1.0
    assert_allclose(builtin("cat_map")((0.5, 0.5)), [0.5, 0.0])


def test_evaluate_examples():
    assert builtin("north_south")(0.0) == 0.0
    assert_allclose(builtin("rotation", {"alpha": 0.25})(0.9), 0.15)
    assert builtin("tent", {"s": 2})(0.75) == 0.5


def test_evaluate_rejects_outside_and_batches():
    with pytest.raises(DomainError):
        evaluate(builtin("logistic"), 1.5)
    with pytest.raises(DomainError):
        evaluate(builtin("logistic"), [0.1, 0.2])


@pytest.mark.parametrize("name,params", [("nosuch", {}), ("logistic", {"r": 4.5}), ("tent", {"s": -1}),
                                         ("north_south", {"beta": 0}), ("doubling", {"k": 1}),
                                         ("rotation", {"alpha": "x"})])
def test_builtin_errors(name, params):
    with pytest.raises(ValidationError):
        builtin(name, params)


@pytest.mark.parametrize("name", BUILTINS)
def test_endomorphism_on_random_points(name):
    s = builtin(name)
    rng = np.random.default_rng(2)
    pts = s.domain.low + rng.random((10_000, s.dim)) * s.domain.span
    img = s.map(pts)
    assert np.all(s.domain.contains(img))
    if s.domain.periodic:
        assert np.all((img >= 0) & (img < 1))


@pytest.mark.parametrize("name,params", [("doubling", {}), ("rotation", {}), ("logistic", {"r": 3.7}),
                                         ("tent", {"s": 1.5}), ("north_south", {"beta": 0.7}),
                                         ("north_south", {}), ("cat_map", {})])
def test_lipschitz_soundness(name, params):
    s = builtin(name, params)
    g = subdivide(s.domain, 4 if s.dim == 1 else 2)
    rng = np.random.default_rng(3)
    ids = rng.integers(0, g.n_boxes, 1000)
    lo, _ = g.bounds(ids)
    p = lo + rng.random((1000, s.dim)) * g.widths
    q = lo + rng.random((1000, s.dim)) * g.widths
    lhs = metric_distance(s.map(p), s.map(q), s.domain)
    rhs = s.lipschitz(ids, g) * metric_distance(p, q, s.domain)
    assert np.all(lhs <= rhs + 1e-12)


def test_north_south_fixed_points():
    s = builtin("north_south")
    roots = north_south_fixed_points()
    assert len(roots) == 2
    assert_allclose(roots, [0.0, 0.5], atol=1e-4)
    h = 1e-6
    slopes = [abs((s.fn(np.array([[r + h]])) - s.fn(np.array([[r - h]])))[0, 0] / (2 * h)) for r in roots]
    assert slopes[0] < 1 < slopes[1]


def test_parse_builtin():
    s = parse_system({"type": "builtin", "name": "doubling"})
    assert s.name == "doubling"
    with pytest.raises(ValidationError, match="nosuch"):
        parse_system({"type": "builtin", "name": "nosuch"})


def test_parse_piecewise_tent_matches_builtin():
    s = parse_system({"type": "piecewise", "breaks": [0, 0.5, 1], "coeffs": [[0, 2], [2, -2]], "lipschitz": 2})
    assert s.warnings == ()
    xs = np.linspace(0, 1, 1000)
    assert_allclose(s.map(xs)[:, 0], builtin("tent").map(xs)[:, 0], atol=1e-15)


def test_piecewise_leaving_domain_is_rejected():
    with pytest.raises(ValidationError, match="leaves its domain"):
        piecewise([0, 1], [[0, 1.5]], 1.5)


def test_piecewise_tiny_excursion_and_low_lipschitz_warn():
    s = piecewise([0, 1], [[0, 1 + 1e-10]], 0.5)
    assert any("clamped" in w for w in s.warnings)
    assert any("lipschitz" in w for w in s.warnings)
    assert s.map(1.0)[0, 0] == 1.0


@pytest.mark.parametrize("cfg", [
    {"type": "builtin"},
    {"type": "piecewise", "breaks": [0, 1], "coeffs": [[0, 1]]},
    {"type": "piecewise", "breaks": [1, 0], "coeffs": [[0, 1]], "lipschitz": 1},
    {"type": "piecewise", "breaks": [0, 1], "coeffs": [[0, 1], [1]], "lipschitz": 1},
    {"type": "magic", "name": "doubling"},
    {"type": "builtin", "name": "doubling", "lipschitz": 3},
    {"type": "builtin", "name": "doubling", "extra": 1},
])
def test_parse_system_malformed(cfg):
    with pytest.raises(ValidationError):
        parse_system(cfg)


def test_cat_map_norm():
    s = builtin("cat_map")
    assert_allclose(s.lipschitz([0], subdivide(s.domain, 1))[0], (3 + math.sqrt(5)) / 2)
