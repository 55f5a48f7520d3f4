"""Iterative buffer/splitter minimization.

Initial levels, a first round of splitter trees, then repeated level
assignment, buffer materialization, slack extraction and tree rebuilding,
keeping the cheapest materialized solution seen.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from typing import Callable

from .config import PhaseConfig
from .initial import assign_initial_levels
from .levels import Cost, assign_levels, materialize_buffers, total_cost
from .netlist import GATE_ARITY, Kind, Netlist, absorb_inverters
from .splitter import FanoutLeaf, Mode, NameGen, apply_tree, build_tree

log = logging.getLogger("aqfp_bsopt")
if os.environ.get("AQFP_BSOPT_LOG"):
    logging.basicConfig(level=os.environ["AQFP_BSOPT_LOG"].upper(),
                        format="%(name)s: %(message)s")

BUFFER_LIKE = (Kind.BUF, Kind.SPL)


@dataclass
class IterationRecord:
    index: int
    fractional_cost: float
    buffers: int
    splitters: int
    total: int
    accepted: bool


@dataclass
class Solution:
    netlist: Netlist
    levels: dict[int, int]
    cost: Cost
    fractional_cost: float = 0.0
    iterations: int = 0
    wall_time: float = 0.0
    stop_reason: str = ""
    history: list[IterationRecord] = field(default_factory=list)

    @property
    def metrics(self) -> dict:
        return {**self.cost.as_dict(), "iterations": self.iterations,
                "wall_time": self.wall_time}


# --------------------------------------------------------------------------
# graph surgery


def splice_out(net: Netlist, kinds: tuple[Kind, ...]) -> tuple[Netlist, dict[int, int]]:
    """Remove every node of ``kinds`` (single-fanin nodes), reconnecting
    their fanouts to the nearest surviving driver with composed polarity."""
    out = net.copy()
    for d, pins in enumerate(out.fanins):
        for p, (s, inv) in enumerate(pins):
            while out.kinds[s] in kinds:
                s2, i2 = out.fanins[s][0]
                s, inv = s2, inv ^ i2
            pins[p] = (s, inv)
    keep = [i for i, k in enumerate(out.kinds) if k not in kinds]
    return out.subgraph(keep)


def compute_slacks(sol: Solution) -> dict[int, int]:
    """Slack of each 2-input gate whose output runs through a chain of
    single-fanout buffers: the last buffer's level minus the gate's level."""
    net, lv = sol.netlist, sol.levels
    fo = net.fanouts()
    slacks = {}
    for g, k in enumerate(net.kinds):
        if k is not Kind.GATE or GATE_ARITY[net.funcs[g]] != 2:
            continue
        cur = g
        while len(fo[cur]) == 1 and net.kinds[fo[cur][0][0]] is Kind.BUF:
            cur = fo[cur][0][0]
        if cur != g:
            slacks[g] = lv[cur] - lv[g]
    return slacks


def strip_splitter_trees(sol: Solution) -> tuple[Netlist, dict[int, int]]:
    """Gate-level netlist with every buffer and splitter removed; surviving
    nodes keep their ids and levels."""
    net, remap = splice_out(sol.netlist, BUFFER_LIKE)
    levels = {new: sol.levels[old] for old, new in remap.items()}
    return net, levels


# --------------------------------------------------------------------------
# tree insertion


def insert_trees(gate_net: Netlist, levels: dict[int, int], cfg: PhaseConfig, mode: Mode,
                 slacks: dict[int, int] | None = None) -> tuple[Netlist, dict[int, int]]:
    """Build a splitter tree for every multi-fanout node in ascending id
    order. ``levels`` is the reference assignment; leaves consume extra
    delay from ``slacks`` (remaining slack shrinks as a gate moves later)."""
    slacks = slacks or {}
    net = gate_net.copy()
    lv = dict(levels)
    names = NameGen(net)
    fanouts = gate_net.fanouts()
    order = range(len(gate_net)) if gate_net.is_topologically_indexed() else gate_net.topological_order()
    for s in order:
        fo = fanouts[s]
        for dst, _ in fo:
            lv[dst] = max(lv[dst], lv[s] + 1)
        if len(fo) < 2:
            continue
        leaves = []
        for dst, pin in fo:
            rem = 0
            if mode is Mode.RECONSTRUCT and gate_net.kinds[dst] is Kind.GATE:
                rem = max(0, slacks.get(dst, 0) - (lv[dst] - levels[dst]))
            leaves.append(FanoutLeaf(dst, lv[dst] - lv[s] - 1, rem, pin))
        tree, _ = build_tree(leaves, cfg, mode, s)
        if tree is None:
            log.debug("node %s: no tree within slack, falling back to paid extra delay",
                      gate_net.names[s])
            tree, _ = build_tree(leaves, cfg, Mode.INITIAL, s)
        apply_tree(net, lv, tree, names)
    return net, lv


# --------------------------------------------------------------------------
# iteration


def iterate_until_stable(first: Solution, step: Callable[[Solution], Solution],
                         max_iters: int) -> Solution:
    """Apply ``step`` while the total strictly improves.

    Stops with ``zero_cost`` when nothing is left to remove, ``no_improvement``
    on a tie, ``rounding_regression`` when the total grows, or ``max_iters``;
    the best solution seen is returned.
    """
    best = cur = first
    history = [IterationRecord(1, first.fractional_cost, first.cost.buffers,
                               first.cost.splitters, first.cost.total, True)]
    log.info("iteration 1: lp=%.2f buffers=%d splitters=%d total=%d accepted",
             first.fractional_cost, first.cost.buffers, first.cost.splitters, first.cost.total)
    reason = "max_iters"
    n = 1
    while n < max_iters:
        if best.cost.total == 0:
            reason = "zero_cost"
            break
        cur = step(cur)
        n += 1
        accepted = cur.cost.total < best.cost.total
        history.append(IterationRecord(n, cur.fractional_cost, cur.cost.buffers,
                                       cur.cost.splitters, cur.cost.total, accepted))
        log.info("iteration %d: lp=%.2f buffers=%d splitters=%d total=%d %s", n,
                 cur.fractional_cost, cur.cost.buffers, cur.cost.splitters, cur.cost.total,
                 "accepted" if accepted else "rejected")
        if not accepted:
            reason = "no_improvement" if cur.cost.total == best.cost.total else "rounding_regression"
            break
        best = cur
    best.iterations = n
    best.stop_reason = reason
    best.history = history
    return best


def _evaluate(topology: Netlist, cfg: PhaseConfig, exact: bool) -> Solution:
    graph, _ = splice_out(topology, (Kind.BUF,))
    levels, frac = assign_levels(graph, cfg, exact)
    net, lv = materialize_buffers(graph, levels, cfg)
    return Solution(net, lv, total_cost(net), frac)


def optimize(net: Netlist, cfg: PhaseConfig, exact_ilp: bool = False,
             max_iters: int = 50) -> Solution:
    """Minimize inserted buffers plus splitters for ``net`` under ``cfg``.

    The returned netlist keeps the ids of the input's nodes (after inverter
    absorption) and appends buffer and splitter nodes."""
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    t0 = time.perf_counter()
    gates = absorb_inverters(net) if net.nodes_of(Kind.NOT) else net
    if gates.nodes_of(*BUFFER_LIKE):
        raise ValueError("input netlist already contains buffers or splitters")
    levels = assign_initial_levels(gates, cfg)
    topo, _ = insert_trees(gates, levels, cfg, Mode.INITIAL)
    first = _evaluate(topo, cfg, exact_ilp)

    def step(sol: Solution) -> Solution:
        slacks = compute_slacks(sol)
        stripped, lv = strip_splitter_trees(sol)
        topo, _ = insert_trees(stripped, lv, cfg, Mode.RECONSTRUCT, slacks)
        return _evaluate(topo, cfg, exact_ilp)

    best = iterate_until_stable(first, step, max_iters)
    best.wall_time = time.perf_counter() - t0
    return best
