import math
import random

import numpy as np
import pytest

from aqfp_bsopt import PhaseConfig, assign_initial_levels, min_tree_path_sum
from aqfp_bsopt.corpus import random_logic
from aqfp_bsopt.initial import build_initial_lp, sample_fanout_subsets
from aqfp_bsopt.lp import solve_lp
from aqfp_bsopt.netlist import Kind, Netlist
from aqfp_bsopt.splitter import FanoutLeaf, Mode, brute_force_tree_oracle
from oracles import min_path_sum_oracle


def test_f_small_values():
    assert all(min_tree_path_sum(1, X) == 0 for X in (2, 3, 4))
    assert [min_tree_path_sum(m, 2) for m in (2, 3, 4)] == [2, 5, 8]
    assert min_tree_path_sum(3, 3) == 3


@pytest.mark.parametrize("X", [2, 3, 4, 5])
def test_f_matches_tree_enumeration(X):
    got = [min_tree_path_sum(m, X) for m in range(1, 9)]
    assert got == [min_path_sum_oracle(m, X) for m in range(1, 9)]
    assert got == sorted(got)


def test_f_rejects_bad_arguments():
    with pytest.raises(ValueError):
        min_tree_path_sum(0, 2)


# subset sampling ------------------------------------------------------------


def test_all_subsets_of_four():
    subs = sample_fanout_subsets(list("abcd"), PhaseConfig())
    assert len(subs) == 11 and len(set(subs)) == 11
    assert all(len(s) >= 2 for s in subs)


def test_enumeration_threshold():
    subs = sample_fanout_subsets(list(range(15)), PhaseConfig())
    assert len(subs) == 2**15 - 15 - 1


def test_sampled_subsets_are_capped_and_reproducible():
    cfg = PhaseConfig(seed=42)
    a = sample_fanout_subsets(list(range(20)), cfg, salt=3)
    b = sample_fanout_subsets(list(range(20)), cfg, salt=3)
    assert len(a) == 32768 and len(set(a)) == 32768
    assert a == b
    assert all(len(s) >= 2 for s in a)
    assert a != sample_fanout_subsets(list(range(20)), PhaseConfig(seed=43), salt=3)
    sizes = np.bincount([len(s) for s in a], minlength=21)
    # sizes are drawn uniformly: rare sizes saturate, common ones are level
    assert sizes[2] == math.comb(20, 2) and sizes[20] == 1
    mid = sizes[5:16]
    assert mid.min() > 0.85 * mid.max()


# LP structure ---------------------------------------------------------------


def _single_gate():
    net = Netlist()
    a, b = net.add_pi("a"), net.add_pi("b")
    g = net.add_gate("AND", "g", [a, b])
    net.add_po("y", g)
    return net


def test_lp_structure_single_gate():
    lp = build_initial_lp(_single_gate(), PhaseConfig())
    names = set(lp.names)
    assert {"L0", "L1", "L2", "L_out"} == {n for n in names if n.startswith("L")}
    assert len([n for n in names if n.startswith("C")]) == 3
    lb, ub = lp.bounds()
    assert lb[lp.var("L0")] == ub[lp.var("L0")] == 0
    assert not lp.lazy_mask().any()


def test_two_fanouts_give_one_subset_row():
    net = Netlist()
    a, b, c = (net.add_pi(x) for x in "abc")
    g = net.add_gate("AND", "g", [a, b])
    h1 = net.add_gate("OR", "h1", [g, c])
    h2 = net.add_gate("AND", "h2", [g, c])
    net.add_po("y1", h1)
    net.add_po("y2", h2)
    lp = build_initial_lp(net, PhaseConfig())
    A, s, rhs = lp.matrix()
    lazy = np.nonzero(lp.lazy_mask())[0]
    # c also drives two gates: one row per multi-fanout node
    assert len(lazy) == 2
    row = {lp.names[j]: v for j, v in zip(A[lazy[1]].indices, A[lazy[1]].data)}
    assert row == {f"L{h1}": 1.0, f"L{h2}": 1.0, f"L{g}": -2.0}
    assert s[lazy[1]] == 1 and rhs[lazy[1]] == 2 + min_tree_path_sum(2, 4)


def _path(length: int) -> Netlist:
    # topology-only path: single-fanin gates, which the level LP accepts
    net = Netlist()
    prev = net.add_pi("a")
    for k in range(length):
        prev = net.add_node(Kind.GATE, f"g{k}", [(prev, False)], func="AND")
    net.add_po("y", prev)
    return net


def test_path_has_zero_cost_and_tight_levels():
    net = _path(3)
    lp = build_initial_lp(net, PhaseConfig(skip=0))
    sol = solve_lp(lp)
    assert sol.objective_value == pytest.approx(0)
    assert all(abs(v) < 1e-9 for n, v in sol.as_dict().items() if n.startswith("C"))
    assert assign_initial_levels(_path(2), PhaseConfig()) == {0: 0, 1: 1, 2: 2, 3: 3}


def test_balanced_diamond_is_symmetric():
    net = Netlist()
    a, b = net.add_pi("a"), net.add_pi("b")
    g = net.add_gate("AND", "g", [a, b])
    l = net.add_gate("AND", "l", [g, a])
    r = net.add_gate("OR", "r", [g, b])
    net.add_po("y", net.add_gate("MAJ3", "m", [l, r, g]))
    lv = assign_initial_levels(net, PhaseConfig())
    assert lv[l] == lv[r]


def test_fanouts_at_distance_one_and_three():
    # A drives B directly and D, which waits on a three-deep chain
    net = Netlist()
    a, b, c, d = (net.add_pi(x) for x in "abcd")
    A = net.add_gate("AND", "A", [a, b])
    B = net.add_gate("OR", "B", [A, c])
    p = net.add_gate("AND", "p1", [c, d])
    p = net.add_gate("OR", "p2", [p, (d, True)])
    p = net.add_gate("AND", "p3", [p, c])
    D = net.add_gate("MAJ3", "D", [A, p, d])
    net.add_po("y1", B)
    net.add_po("y2", D)
    cfg = PhaseConfig()
    lv = assign_initial_levels(net, cfg)
    assert lv[D] - lv[A] >= 3 and lv[B] - lv[A] >= 1
    assert (lv[B] - lv[A] - 1) + (lv[D] - lv[A] - 1) >= min_tree_path_sum(2, cfg.max_fanout)


@pytest.mark.parametrize("seed", range(8))
def test_levels_satisfy_invariants(seed):
    net = random_logic(8, 60, seed=seed)
    for skip in (0, 2):
        cfg = PhaseConfig(skip=skip)
        lv = assign_initial_levels(net, cfg)
        for e in net.edges():
            assert lv[e.dst] - lv[e.src] >= 1
        assert len({lv[p] for p in net.pos}) == 1
        assert {lv[p] for p in net.pis} == {cfg.pi_level}


def test_pi_level_override():
    lv = assign_initial_levels(_single_gate(), PhaseConfig(pi_level=1))
    assert lv == {0: 1, 1: 1, 2: 2, 3: 3}


def test_deterministic():
    net = random_logic(10, 120, seed=5)
    cfg = PhaseConfig(skip=1, seed=9)
    assert assign_initial_levels(net, cfg) == assign_initial_levels(net, cfg)


def test_rejects_splitters():
    net = _single_gate()
    net.add_node(Kind.SPL, "s", [(2, False)])
    with pytest.raises(ValueError):
        build_initial_lp(net, PhaseConfig())


def test_subset_rows_are_valid_lower_bounds():
    """A splitter tree with unit hops realizes leaf delays whose sum is at
    least the splitter depth sum, so any delay profile summing below f(m)
    must admit no tree."""
    rng = random.Random(17)
    feasible = 0
    for _ in range(200):
        m = rng.randint(2, 5)
        X = rng.choice([2, 3, 4])
        delays = sorted(rng.randint(0, 4) for _ in range(m))
        leaves = [FanoutLeaf(j, d) for j, d in enumerate(delays)]
        if brute_force_tree_oracle(leaves, mode=Mode.RECONSTRUCT, ps=1, X=X).feasible:
            feasible += 1
            assert sum(delays) >= min_tree_path_sum(m, X)
    assert feasible > 50

