"""Level assignment for a fixed splitter topology, and buffer insertion.

Buffers are not part of the graph here: an edge spanning ``delta`` levels
implicitly costs ``ceil(delta / span) - 1`` of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PhaseConfig
from .initial import LevelAssignmentError, level_variables, add_edge_rows, round_levels
from .lp import LinearProgram, Status, solve_ilp_small, solve_lp
from .netlist import Kind, Netlist
from .splitter import NameGen


def build_assignment_lp(graph: Netlist, cfg: PhaseConfig) -> LinearProgram:
    """Levels for every node (splitters included) plus one buffer-count
    variable per edge; the objective is the plain sum of buffer counts."""
    if graph.nodes_of(Kind.BUF, Kind.NOT):
        raise ValueError("assignment graph must not contain buffers or inverters")
    lp = LinearProgram()
    lcol = level_variables(graph, lp, cfg)
    edge_c = add_edge_rows(graph, lp, lcol, cfg.span)
    lp.set_objective({c: 1.0 for _, c in edge_c})
    return lp


def _level_columns(lp: LinearProgram, graph: Netlist) -> list[int]:
    return [lp.var("L_out") if k is Kind.PO else lp.var(f"L{i}") for i, k in enumerate(graph.kinds)]


def _integral_point(lp: LinearProgram, graph: Netlist, levels: dict[int, int], span: int) -> np.ndarray:
    x = np.zeros(lp.num_vars)
    for i, c in enumerate(_level_columns(lp, graph)):
        x[c] = levels[i]
    for k, e in enumerate(graph.edges()):
        delta = levels[e.dst] - levels[e.src]
        x[lp.var(f"C{e.src}_{e.dst}_{k}")] = max(0, math.ceil(delta / span) - 1)
    return x


def assign_levels(graph: Netlist, cfg: PhaseConfig, exact: bool = False,
                  method: str = "auto", node_limit: int = 20000) -> tuple[dict[int, int], float]:
    """Returns ``(levels, fractional_cost)``.

    Relaxed mode solves the LP and rounds every level up. Exact mode runs
    branch-and-bound over levels and buffer counts, seeded with the rounded
    relaxation; ``fractional_cost`` is the LP objective in both cases."""
    lp = build_assignment_lp(graph, cfg)
    sol = solve_lp(lp, method=method)
    if sol.status is not Status.OPTIMAL:
        raise LevelAssignmentError("level assignment", sol.status)
    lcol = _level_columns(lp, graph)
    levels = round_levels(sol.values, lcol)
    if not exact:
        return levels, float(sol.objective_value)
    seed = _integral_point(lp, graph, levels, cfg.span)
    ilp = solve_ilp_small(lp, range(lp.num_vars), node_limit=node_limit, method=method,
                          incumbent=seed)
    if ilp.status is not Status.OPTIMAL:
        raise LevelAssignmentError("exact level assignment", ilp.status)
    return {i: int(round(ilp.values[c])) for i, c in enumerate(lcol)}, float(sol.objective_value)


def buffers_on_edge(delta: int, span: int) -> int:
    return max(0, -(-delta // span) - 1)


def materialize_buffers(graph: Netlist, levels: dict[int, int], cfg: PhaseConfig,
                        names: NameGen | None = None) -> tuple[Netlist, dict[int, int]]:
    """Fresh netlist with explicit buffers, plus its levels.

    Existing nodes keep their ids. Each edge spanning ``delta`` levels gets
    ``ceil(delta / span) - 1`` buffers at ``L_src + span``, ``+ 2*span``, ...;
    an inverted edge keeps its inversion on the final hop."""
    span = cfg.span
    net = graph.copy()
    lv = dict(levels)
    names = names or NameGen(net)
    for dst in range(len(graph)):
        pins = net.fanins[dst]
        for p, (src, inv) in enumerate(pins):
            delta = levels[dst] - levels[src]
            if delta < 1:
                raise ValueError(f"edge {graph.names[src]} -> {graph.names[dst]} spans {delta} levels")
            drv = src
            for j in range(1, buffers_on_edge(delta, span) + 1):
                b = net.add_node(Kind.BUF, names("buf"), [(drv, False)])
                lv[b] = levels[src] + j * span
                drv = b
            pins[p] = (drv, inv)
    return net, lv


@dataclass(frozen=True)
class Cost:
    buffers: int
    splitters: int

    @property
    def total(self) -> int:
        return self.buffers + self.splitters

    def as_dict(self) -> dict[str, int]:
        return {"buffers": self.buffers, "splitters": self.splitters, "total": self.total}


def total_cost(net: Netlist) -> Cost:
    counts = net.count_kinds()
    return Cost(counts[Kind.BUF], counts[Kind.SPL])
