"""Acceptance criteria, one test each, at their stated tolerances.

Each criterion records a pass/fail line that the terminal summary prints.
Run standalone with ``python tests/test_acceptance.py`` for the same lines.
"""
import itertools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chainrec import chain_graph as cg  # noqa: E402
from chainrec import report as rp  # noqa: E402
from chainrec.chain_graph import ChainGraphParams  # noqa: E402
from chainrec.components import classify_terminal, component_period, terminal_components, track_terminal  # noqa: E402
from chainrec.finite_oracle import enumerate_functional, random_total_relations, sweep  # noqa: E402
from chainrec.limits_basins import CoverageParams, coverage_study, terminal_basin_partition  # noqa: E402
from chainrec.phase_space import subdivide  # noqa: E402
from chainrec.shadowing_lab import (cc_report, generate_pseudo_orbit, inverse_branch_shadow,  # noqa: E402
                                    orbit_deviation, shadowing_search)
from chainrec.systems import builtin  # noqa: E402

import conftest  # noqa: E402
from oracles import logistic_two_cycle, rotation_drift  # noqa: E402

FEIGENBAUM = 3.5699456718695445
LADDER = [(8, 4), (16, 4), (16, 8), (32, 8)]
GOLDEN = Path(__file__).parent / "golden"

_SWEEP_CACHE = {}


def record(k, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}"
    conftest.ACCEPTANCE_LINES[k] = line
    print(line)
    return ok


def finite_sweeps():
    if not _SWEEP_CACHE:
        t0 = time.perf_counter()
        functional = itertools.chain.from_iterable(enumerate_functional(n) for n in range(1, 6))
        res = [sweep("functional n<=5", functional), sweep("random n=8", random_total_relations(10_000, 8, seed=42))]
        _SWEEP_CACHE["res"] = res
        _SWEEP_CACHE["time"] = time.perf_counter() - t0
    return _SWEEP_CACHE["res"], _SWEEP_CACHE["time"]


def decompose(name, depth, delta_boxes=1.0, **params):
    s = builtin(name, params)
    grid = subdivide(s.domain, depth)
    return s, grid, cg.scc_decompose(cg.build_chain_graph(s, grid, ChainGraphParams(delta_boxes * grid.box_width)))


def criterion_1():
    res, secs = finite_sweeps()
    fails = sum(r.failures["terminal_reachability"] for r in res)
    n = sum(r.systems for r in res)
    ok = fails == 0 and secs < 30 and n == 3413 + 10_000
    return ok, f"{n} systems, {fails} reachability failures, {secs:.1f}s (< 30s)"


def criterion_2():
    res, _ = finite_sweeps()
    fails = sum(r.failures["omega_equivalence"] for r in res)
    return fails == 0, f"{sum(r.systems for r in res)} systems, {fails} three-way equivalence failures"


def criterion_3():
    # the conftest hook checks every decomposition built in the run; add a broad sweep here
    res, _ = finite_sweeps()
    finite_fails = sum(r.failures["maximality"] for r in res)
    for name, depth, db in [("north_south", 6, 0.0), ("north_south", 7, 1.0), ("logistic", 8, 1.0),
                            ("tent", 7, 0.0), ("doubling", 6, 0.0), ("rotation", 6, 1.0), ("cat_map", 3, 1.0)]:
        decompose(name, depth, db)
    log = conftest.DECOMPOSITION_LOG
    ok = finite_fails == 0 and not log["violations"]
    return ok, (f"{log['checked']} grid decompositions, {len(log['violations'])} violations; "
                f"{finite_fails} finite maximality failures")


def criterion_4():
    t0 = time.perf_counter()
    rows = coverage_study(builtin("north_south"), [4, 5, 6, 7, 8], CoverageParams(delta_boxes=1.0, samples=100))
    secs = time.perf_counter() - t0
    v = [r.v_fraction for r in rows]
    bound = all(r.v_fraction >= 1 - 8 * 2.0**-r.depth for r in rows)
    w = [r.w_sample_fraction for r in rows if r.depth >= 6]
    ok = v == sorted(v) and bound and min(w) >= 0.95 and secs < 60
    return ok, (f"v={[round(x, 4) for x in v]} (nondecreasing, >= 1-8*2^-d: {bound}), "
                f"w(d>=6)={[round(x, 3) for x in w]} (>= 0.95), {secs:.1f}s")


def criterion_5():
    parts = []
    ok = True
    for name in ("doubling", "rotation"):
        _, grid, dec = decompose(name, 8, 0.0)
        rep = terminal_basin_partition(dec)
        good = (dec.n_components == 1 and bool(dec.terminal[0]) and dec.members[0].size == grid.n_boxes
                and rep.v_fraction == 1.0)
        ok &= good
        parts.append(f"{name}: {dec.n_components} component(s), v={rep.v_fraction}")
    _, grid, dec = decompose("logistic", 8, 1.0, r=3.2)
    terms = terminal_components(dec)
    rep = terminal_basin_partition(dec)
    (t,) = terms if len(terms) == 1 else (None,)
    period = component_period(dec, t) if t is not None else None
    contains = t is not None and {grid.box_of(p) for p in logistic_two_cycle(3.2)} <= dec.boxes(t)
    good = len(terms) == 1 and period == 2 and contains and rep.v_fraction >= 0.95
    ok &= good
    parts.append(f"logistic r=3.2: {len(terms)} terminal, period {period}, 2-cycle boxes inside: {contains}, "
                 f"v={rep.v_fraction:.3f} (>= 0.95)")
    return ok, "; ".join(parts)


def criterion_6():
    t0 = time.perf_counter()
    s = builtin("doubling")
    delta = 0.01
    rng = np.random.default_rng(2024)
    ib = []
    for seed in range(100):
        po = generate_pseudo_orbit(s, rng.random(), delta, 40, seed=seed)
        ib.append(orbit_deviation(s, inverse_branch_shadow(s, po), po))
    found, dev = 0, []
    for seed in range(100):
        # length 8 keeps the lattice-quantization slack 2^7 * 2^-15 under one delta
        po = generate_pseudo_orbit(s, rng.random(), delta, 8, seed=1000 + seed)
        res = shadowing_search(s, po, 2.5 * delta, 14)
        found += res.found
        if res.found:
            dev.append(res.deviation)
    secs = time.perf_counter() - t0
    ok = max(ib) <= 2 * delta and found == 100 and max(dev) <= 2.5 * delta and secs < 60
    return ok, (f"inverse-branch max {max(ib):.4f} (<= {2 * delta}); search found {found}/100, "
                f"max {max(dev) if dev else float('nan'):.4f} (<= {2.5 * delta}); {secs:.1f}s")


def criterion_7():
    s = builtin("rotation")
    delta, eps, length = 0.01, 0.05, 200
    drift_low = (length - 1) * delta * 0.5
    assert rotation_drift(delta, length) > drift_low > eps
    rng = np.random.default_rng(7)
    failed = 0
    for seed in range(50):
        po = generate_pseudo_orbit(s, rng.random(), delta, length, seed=seed, kind="random_walk")
        failed += not shadowing_search(s, po, eps, 14).found
    return failed >= 45, f"{failed}/50 trials not shadowed (>= 45); expected drift {rotation_drift(delta, length):.2f} > eps"


def criterion_8():
    ns = builtin("north_south")
    ccn = cc_report(ns, subdivide(ns.domain, 6), LADDER).cc_fraction
    rot = builtin("rotation")
    ccr = cc_report(rot, subdivide(rot.domain, 6), LADDER).cc_fraction
    cls = classify_terminal(track_terminal(builtin("logistic", {"r": FEIGENBAUM}), range(6, 13)))
    ps = cls.period_sequence
    multiplying = all(b % a == 0 for a, b in zip(ps, ps[1:])) and ps[-1] > ps[0]
    ok = ccn >= 0.9 and ccr == 0.0 and cls.verdict == "odometer_like" and multiplying
    return ok, (f"north_south cc={ccn:.3f} (>= 0.9), rotation cc={ccr} (== 0), "
                f"Feigenbaum {cls.verdict} periods {ps}")


def criterion_9(tmp):
    problems = []
    for cfg_path in sorted(GOLDEN.glob("*.toml")):
        cfg = rp.load_config(cfg_path)
        a = rp.write_outputs(rp.run_pipeline(cfg), tmp / cfg_path.stem / "a")
        b = rp.write_outputs(rp.run_pipeline(cfg), tmp / cfg_path.stem / "b")
        for name in rp.FILE_NAMES:
            if (a / name).read_bytes() != (b / name).read_bytes():
                problems.append(f"{cfg_path.stem}/{name} differs between runs")
            if (a / name).read_bytes() != (GOLDEN / cfg_path.stem / name).read_bytes():
                problems.append(f"{cfg_path.stem}/{name} differs from frozen")
        echo = rp.parse_report((a / "report.json").read_text()).config
        if echo != cfg or rp.parse_config(echo.to_dict()) != cfg:
            problems.append(f"{cfg_path.stem} config echo does not re-parse equal")
    return not problems, "; ".join(problems) or "golden outputs byte-identical, config echo re-parses equal"


def test_criterion_1_terminal_reachability():
    ok, detail = criterion_1()
    assert record(1, ok, detail), detail


def test_criterion_2_omega_equivalence():
    ok, detail = criterion_2()
    assert record(2, ok, detail), detail


def test_criterion_4_refinement_trend():
    ok, detail = criterion_4()
    assert record(4, ok, detail), detail


def test_criterion_5_global_structure():
    ok, detail = criterion_5()
    assert record(5, ok, detail), detail


def test_criterion_6_shadowing_bound():
    ok, detail = criterion_6()
    assert record(6, ok, detail), detail


def test_criterion_7_rotation_negative_control():
    ok, detail = criterion_7()
    assert record(7, ok, detail), detail


def test_criterion_8_chain_continuity_and_odometer():
    ok, detail = criterion_8()
    assert record(8, ok, detail), detail


def test_criterion_9_determinism(tmp_path):
    ok, detail = criterion_9(tmp_path)
    assert record(9, ok, detail), detail


# last in file order so the log covers the decompositions built above
def test_criterion_3_terminal_equivalence():
    ok, detail = criterion_3()
    assert record(3, ok, detail), detail


if __name__ == "__main__":
    import tempfile

    # install the same decomposition check the test session uses
    cg.scc_decompose = conftest._checked_scc
    with tempfile.TemporaryDirectory() as tmp:
        runs = [criterion_1, criterion_2, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8,
                lambda: criterion_9(Path(tmp)), criterion_3]
        keys = [1, 2, 4, 5, 6, 7, 8, 9, 3]
        results = []
        for k, fn in zip(keys, runs):
            try:
                ok, detail = fn()
            except Exception as exc:  # report and keep going
                ok, detail = False, f"error: {exc!r}"
            results.append(record(k, ok, detail))
    sys.exit(0 if all(results) else 1)
