"""Brute-force chain structure of small finite systems.

A finite system is a total relation on ``{0, ..., n-1}``.  Everything here is
computed from the boolean transitive closure, independently of the sparse
SCC code in :mod:`chainrec.chain_graph`, so the two can check each other.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import chain_graph as cg
from .errors import ValidationError

MAX_FUNCTIONAL_N = 7


@dataclass(frozen=True)
class FiniteSystem:
    """``succ[i]`` is the nonempty successor set of state ``i``."""

    n: int
    succ: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.n < 1 or len(self.succ) != self.n:
            raise ValidationError("need n >= 1 and one successor set per state")
        for i, s in enumerate(self.succ):
            if not s:
                raise ValidationError(f"state {i} has no successor")
            if any(not 0 <= j < self.n for j in s):
                raise ValidationError(f"state {i} has a successor outside 0..{self.n - 1}")

    @classmethod
    def from_lists(cls, succ: Sequence[Iterable[int]]) -> "FiniteSystem":
        return cls(len(succ), tuple(frozenset(int(j) for j in s) for s in succ))

    @property
    def is_functional(self) -> bool:
        return all(len(s) == 1 for s in self.succ)

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for i, s in enumerate(self.succ):
            m[i, list(s)] = True
        return m


def enumerate_functional(n: int) -> Iterator[FiniteSystem]:
    """All ``n**n`` maps of ``n`` states, in lexicographic order of the image tuple."""
    if not 1 <= n <= MAX_FUNCTIONAL_N:
        raise ValidationError(f"n must be in 1..{MAX_FUNCTIONAL_N}, got {n}")
    for images in itertools.product(range(n), repeat=n):
        yield FiniteSystem(n, tuple(frozenset((j,)) for j in images))


def random_total_relation(n: int, rng: np.random.Generator) -> FiniteSystem:
    """Each successor set is a uniform nonempty subset of the states."""
    masks = rng.integers(1, 2**n, size=n)
    return FiniteSystem(n, tuple(frozenset(j for j in range(n) if (int(m) >> j) & 1) for m in masks))


def random_total_relations(count: int, n: int = 8, seed: int = 42) -> Iterator[FiniteSystem]:
    if not 1 <= n <= 16:
        raise ValidationError("random relations need 1 <= n <= 16")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_total_relation(n, rng)


def transitive_closure(m: np.ndarray) -> np.ndarray:
    """``t[i, j]`` iff there is a path of length >= 1 from ``i`` to ``j``."""
    t = m.astype(bool)
    while True:
        nxt = t | ((t.astype(np.int64) @ t.astype(np.int64)) > 0)
        if np.array_equal(nxt, t):
            return t
        t = nxt


@dataclass(frozen=True, eq=False)
class ExactDecomposition:
    """Components numbered by smallest member, as in :func:`chainrec.chain_graph.scc_decompose`."""

    closure: np.ndarray
    comp_of: np.ndarray
    components: tuple[frozenset[int], ...]
    cyclic: tuple[bool, ...]
    terminal: frozenset[int]

    def reaches(self, c: int, d: int) -> bool:
        """Component order: ``c`` chain-reaches ``d`` (reflexive)."""
        if c == d:
            return True
        i, j = min(self.components[c]), min(self.components[d])
        return bool(self.closure[i, j])


def exact_decomposition(fs: FiniteSystem) -> ExactDecomposition:
    t = transitive_closure(fs.matrix())
    n = fs.n
    mutual = (t & t.T) | np.eye(n, dtype=bool)
    comp_of = np.full(n, -1, dtype=np.int64)
    comps: list[frozenset[int]] = []
    for i in range(n):
        if comp_of[i] < 0:
            members = np.flatnonzero(mutual[i])
            comp_of[members] = len(comps)
            comps.append(frozenset(members.tolist()))
    cyclic = tuple(bool(t[min(c), min(c)]) for c in comps)
    terminal = set()
    for k, c in enumerate(comps):
        leaks = any(t[min(c), j] and j not in c for j in range(n))
        if cyclic[k] and not leaks:
            terminal.add(k)
    return ExactDecomposition(t, comp_of, tuple(comps), cyclic, frozenset(terminal))


def _reflexive(ed: ExactDecomposition) -> np.ndarray:
    return ed.closure | np.eye(ed.closure.shape[0], dtype=bool)


def chain_omega_exact(ed: ExactDecomposition, x: int) -> frozenset[int]:
    """States reached by walks from ``x`` that pass through a cycle."""
    t = ed.closure
    on_cycle = np.diag(t)
    via = _reflexive(ed)[x] & on_cycle
    return frozenset(np.flatnonzero(t[via].any(axis=0)).tolist()) if via.any() else frozenset()


def _strongly_connected(m: np.ndarray, states: frozenset[int]) -> bool:
    if not states:
        return False
    idx = sorted(states)
    sub = transitive_closure(m[np.ix_(idx, idx)])
    return bool(sub.all())


def verify_terminal_reachability(fs: FiniteSystem, ed: ExactDecomposition | None = None) -> bool:
    """Every state reaches some terminal component."""
    ed = ed or exact_decomposition(fs)
    r = _reflexive(ed)
    heads = [min(ed.components[c]) for c in ed.terminal]
    return bool(heads) and bool(r[:, heads].any(axis=1).all())


def verify_omega_equivalence(fs: FiniteSystem, ed: ExactDecomposition | None = None) -> bool:
    """Per state: terminal assignment, omega inside one component and strongly connected omega agree."""
    ed = ed or exact_decomposition(fs)
    m = fs.matrix()
    r = _reflexive(ed)
    for x in range(fs.n):
        cyc_reached = {int(ed.comp_of[y]) for y in np.flatnonzero(r[x] & np.diag(ed.closure))}
        assigned = len(cyc_reached) == 1 and next(iter(cyc_reached)) in ed.terminal
        om = chain_omega_exact(ed, x)
        collapsed = bool(om) and len({int(ed.comp_of[y]) for y in om}) == 1
        connected = _strongly_connected(m, om)
        if not assigned == collapsed == connected:
            return False
    return True


def maximal_exact(ed: ExactDecomposition) -> frozenset[int]:
    cyc = [c for c, flag in enumerate(ed.cyclic) if flag]
    return frozenset(c for c in cyc if not any(d != c and ed.reaches(c, d) for d in cyc))


def stable_exact(ed: ExactDecomposition) -> frozenset[int]:
    """Cyclic components whose forward reach is the component itself."""
    out = set()
    for c, comp in enumerate(ed.components):
        i = min(comp)
        if ed.cyclic[c] and set(np.flatnonzero(ed.closure[i]).tolist()) <= comp:
            out.add(c)
    return frozenset(out)


def verify_maximality(fs: FiniteSystem, ed: ExactDecomposition | None = None) -> bool:
    """Terminal, maximal and chain-stable components coincide."""
    ed = ed or exact_decomposition(fs)
    return ed.terminal == maximal_exact(ed) == stable_exact(ed)


def agrees_with_scc(fs: FiniteSystem, ed: ExactDecomposition | None = None) -> bool:
    """Cross-check against the sparse decomposition on the same edge set."""
    ed = ed or exact_decomposition(fs)
    dec = cg.scc_decompose(cg.ChainGraph.from_successors([sorted(s) for s in fs.succ]))
    return (np.array_equal(dec.scc_of, ed.comp_of)
            and tuple(bool(v) for v in dec.has_cycle) == ed.cyclic
            and frozenset(np.flatnonzero(dec.terminal).tolist()) == ed.terminal)


CHECKS = {
    "terminal_reachability": verify_terminal_reachability,
    "omega_equivalence": verify_omega_equivalence,
    "maximality": verify_maximality,
}


@dataclass(frozen=True)
class SweepResult:
    label: str
    systems: int
    failures: dict[str, int]

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def to_dict(self) -> dict:
        return {"label": self.label, "systems": self.systems, "failures": dict(self.failures),
                "ok": self.ok}


def sweep(label: str, systems: Iterable[FiniteSystem], cross_check: bool = False) -> SweepResult:
    """Run every check (and optionally the SCC cross-check) over ``systems``."""
    names = list(CHECKS) + (["scc_agreement"] if cross_check else [])
    fails = dict.fromkeys(names, 0)
    count = 0
    for fs in systems:
        count += 1
        ed = exact_decomposition(fs)
        for name, check in CHECKS.items():
            fails[name] += not check(fs, ed)
        if cross_check:
            fails["scc_agreement"] += not agrees_with_scc(fs, ed)
    return SweepResult(label, count, fails)
