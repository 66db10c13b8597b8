import numpy as np
import pytest

from chainrec import chain_graph as cg
from chainrec.chain_graph import ChainGraph, ChainGraphParams, reachable_set
from chainrec.components import (ComponentProfile, chain_recurrent_boxes, classify_terminal,
                                 component_period, maximal_components, profile, terminal_components,
                                 track_terminal, verify_chain_stability)
from chainrec.errors import AnalysisError, PreconditionError, TrackingError
from chainrec.phase_space import subdivide
from chainrec.systems import builtin

from oracles import brute_period, logistic_two_cycle


def decompose(name, depth, delta_boxes=0.0, **params):
    s = builtin(name, params)
    grid = subdivide(s.domain, depth)
    return cg.scc_decompose(cg.build_chain_graph(s, grid, ChainGraphParams(delta_boxes * grid.box_width)))


def test_chain_recurrent_doubling_and_rotation_cover_circle():
    assert chain_recurrent_boxes(decompose("doubling", 5)) == frozenset(range(32))
    assert chain_recurrent_boxes(decompose("rotation", 5)) == frozenset(range(32))


def test_chain_recurrent_north_south_is_near_fixed_points():
    cr = chain_recurrent_boxes(decompose("north_south", 5))
    # frozen from the built graph: fixed-point boxes plus touching neighbors
    assert cr == {0, 31, 14, 15, 16, 17}
    grid = subdivide(builtin("north_south").domain, 5)
    assert {grid.box_of(0.0), grid.box_of(0.5)} <= cr


def test_terminal_examples():
    dec = decompose("north_south", 5)
    terms = terminal_components(dec)
    assert len(terms) == 1
    (t,) = terms
    assert dec.boxes(t) == {0, 31}
    repellers = [c for c in np.flatnonzero(dec.has_cycle) if c != t]
    assert repellers and not any(dec.terminal[c] for c in repellers)
    assert terminal_components(decompose("doubling", 5)) == {0}
    dec = cg.scc_decompose(ChainGraph.from_edges(3, [(0, 1), (1, 0), (1, 2), (2, 2)]))
    assert terminal_components(dec) == {1}


def test_chain_stability():
    dec = decompose("north_south", 5)
    for t in terminal_components(dec):
        assert verify_chain_stability(dec, t, 0)
    rep = int(dec.scc_of[15])
    assert not verify_chain_stability(dec, rep, 1)
    single = decompose("doubling", 4)
    assert all(verify_chain_stability(single, 0, e) for e in range(4))
    with pytest.raises(AnalysisError):
        verify_chain_stability(dec, 10_000)


def test_period_examples():
    dec = cg.scc_decompose(ChainGraph.from_edges(2, [(0, 1), (1, 0)]))
    assert component_period(dec, 0) == 2
    dec = cg.scc_decompose(ChainGraph.from_edges(1, [(0, 0)]))
    assert component_period(dec, 0) == 1
    dec = cg.scc_decompose(ChainGraph.from_edges(2, [(0, 1), (1, 1)]))
    with pytest.raises(PreconditionError):
        component_period(dec, 0)


def test_logistic_two_cycle_attractor_has_period_two():
    dec = decompose("logistic", 8, 1.0, r=3.2)
    (t,) = terminal_components(dec)
    grid = dec.graph.grid
    assert {grid.box_of(p) for p in logistic_two_cycle(3.2)} <= dec.boxes(t)
    succ = [set(dec.graph.successors(b).tolist()) for b in range(grid.n_boxes)]
    assert component_period(dec, t) == brute_period(dec.boxes(t), succ, max_len=16) == 2


@pytest.mark.parametrize("name,depth,delta_boxes", [("north_south", 6, 1.0), ("logistic", 7, 0.0),
                                                    ("tent", 5, 0.0), ("doubling", 3, 0.0)])
def test_period_matches_cycle_length_gcd(name, depth, delta_boxes):
    dec = decompose(name, depth, delta_boxes)
    succ = [set(dec.graph.successors(b).tolist()) for b in range(dec.graph.n)]
    for c in np.flatnonzero(dec.has_cycle):
        if dec.members[c].size <= 12:
            assert component_period(dec, c) == brute_period(dec.boxes(c), succ)


@pytest.mark.parametrize("name,depth", [("north_south", 6), ("logistic", 7), ("rotation", 5)])
def test_decomposition_properties(name, depth):
    dec = decompose(name, depth, 1.0)
    g = dec.graph
    cr = chain_recurrent_boxes(dec)
    parts = [dec.boxes(c) for c in np.flatnonzero(dec.has_cycle)]
    assert sum(len(p) for p in parts) == len(cr) and frozenset().union(*parts) == cr
    for c in np.flatnonzero(dec.has_cycle):
        reach = reachable_set(g, dec.boxes(c))
        leaks = not reach <= dec.boxes(c)
        assert leaks == (not dec.terminal[c])
        # chain transitivity inside the component
        members = dec.boxes(c)
        sub = ChainGraph.from_edges(g.n, [(u, v) for u, v in g.edge_list() if u in members and v in members])
        for b in list(members)[:5]:
            assert members <= reachable_set(sub, {b})
    assert terminal_components(dec) == maximal_components(dec)


def test_classify_north_south_periodic():
    profs = track_terminal(builtin("north_south"), [4, 5, 6, 7, 8], anchor=0.0)
    cls = classify_terminal(profs)
    assert cls.verdict == "periodic_like"
    assert cls.period_sequence == (1, 1, 1, 1, 1)
    assert len(cls.measure_sequence) == 5


def test_classify_logistic_two_cycle():
    profs = track_terminal(builtin("logistic", {"r": 3.2}), [6, 7, 8, 9, 10])
    cls = classify_terminal(profs)
    assert cls.verdict == "periodic_like"
    assert cls.period_sequence[-1] == 2


def test_classify_feigenbaum_odometer():
    profs = track_terminal(builtin("logistic", {"r": 3.5699456718695445}), range(6, 13))
    cls = classify_terminal(profs)
    assert cls.verdict == "odometer_like"
    ps = cls.period_sequence
    assert all(b % a == 0 for a, b in zip(ps, ps[1:]))
    assert ps[-1] >= 4 * ps[0]


def test_classify_needs_three_and_tracking():
    profs = track_terminal(builtin("north_south"), [4, 5, 6])
    with pytest.raises(AnalysisError):
        classify_terminal(profs[:2])
    with pytest.raises(TrackingError):
        classify_terminal([profs[1], profs[0], profs[2]])
    # a profile far from the attractor breaks the containment match
    g = profs[2].grid
    far = ComponentProfile(0, frozenset({g.box_of(0.5)}), 1, 1, True, g)
    with pytest.raises(TrackingError):
        classify_terminal([profs[0], profs[1], far])


def test_classify_other_by_default():
    grids = [subdivide(builtin("doubling").domain, d) for d in (3, 4, 5)]
    profs = [ComponentProfile(0, frozenset(range(g.n_boxes)), 1, g.n_boxes, True, g) for g in grids]
    assert classify_terminal(profs).verdict == "other"


def test_track_terminal_anchor_must_be_terminal():
    with pytest.raises(TrackingError):
        track_terminal(builtin("north_south"), [5, 6, 7], anchor=0.5)


def test_profile_measure():
    dec = decompose("north_south", 5)
    p = profile(dec, 0)
    assert p.measure == p.box_count / 32
