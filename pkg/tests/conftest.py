import sys

import pytest

from aqfp_bsopt import PhaseConfig, optimize
from aqfp_bsopt.corpus import BENCHMARKS, load
from aqfp_bsopt.netlist import Netlist

SKIPS = (0, 1, 2, 3)


def diamond() -> Netlist:
    """g1 drives g2 and g3, g2 also drives g3; every input has one fanout."""
    net = Netlist()
    a, b, c = (net.add_pi(x) for x in "abc")
    g1 = net.add_gate("AND", "g1", [a, b])
    g2 = net.add_gate("OR", "g2", [g1, c])
    g3 = net.add_gate("AND", "g3", [g1, g2])
    net.add_po("y", g3)
    return net


def single_gate() -> Netlist:
    net = Netlist()
    g = net.add_gate("MAJ3", "g", [net.add_pi(n) for n in "abc"])
    net.add_po("y", g)
    return net


@pytest.fixture(scope="session")
def corpus_solutions():
    """Optimized solutions for every corpus circuit at every skip, computed
    once per session: {(name, skip): (original, solution, cfg)}."""
    out = {}
    for name in BENCHMARKS:
        net = load(name)
        for skip in SKIPS:
            cfg = PhaseConfig(skip=skip)
            out[(name, skip)] = (net, optimize(net, cfg), cfg)
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
