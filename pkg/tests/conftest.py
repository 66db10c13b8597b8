import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chainrec import chain_graph as cg  # noqa: E402
from chainrec.components import maximal_components, verify_chain_stability  # noqa: E402

_original_scc = cg.scc_decompose

# shared with test_acceptance: decompositions checked and violations seen
DECOMPOSITION_LOG = {"checked": 0, "violations": []}
ACCEPTANCE_LINES: dict[int, str] = {}


def check_terminal_equivalence(dec) -> str | None:
    """None when terminal = maximal = chain-stable-at-0 on ``dec``, else a description."""
    terminal = set(np.flatnonzero(dec.terminal).tolist())
    maximal = maximal_components(dec)
    stable = {c for c in range(dec.n_components)
              if dec.has_cycle[c] and verify_chain_stability(dec, c, 0)}
    sinks = {c for c in range(dec.n_components) if not dec.dag[c]}
    if not all(dec.has_cycle[c] for c in sinks):
        return "a condensation sink has no cycle"
    if not terminal == maximal == stable:
        return f"terminal={sorted(terminal)} maximal={sorted(maximal)} stable={sorted(stable)}"
    return None


def _checked_scc(g):
    dec = _original_scc(g)
    DECOMPOSITION_LOG["checked"] += 1
    problem = check_terminal_equivalence(dec)
    if problem is not None:
        DECOMPOSITION_LOG["violations"].append(problem)
        raise AssertionError(problem)
    return dec


@pytest.fixture(autouse=True)
def _terminal_equivalence_everywhere(monkeypatch):
    monkeypatch.setattr(cg, "scc_decompose", _checked_scc)
    yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
    terminalreporter.write_line(f"(terminal/maximal/stable checked on {DECOMPOSITION_LOG['checked']} "
                                f"decompositions, {len(DECOMPOSITION_LOG['violations'])} violations)")
