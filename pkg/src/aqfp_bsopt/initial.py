"""Heuristic initial level assignment, before any splitter exists.

Each edge gets a fractional buffer-cost variable weighted by the inverse
fanout of its driver, and every sampled subset of a node's fanouts must leave
room for the shallowest splitter tree that could reach it.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .config import PhaseConfig
from .lp import LinearProgram, Status, solve_lp
from .netlist import Kind, Netlist


class LevelAssignmentError(RuntimeError):
    """A level-assignment LP did not reach an optimal solution."""

    def __init__(self, step: str, status):
        self.step = step
        self.status = status
        super().__init__(f"{step}: LP status {getattr(status, 'value', status)}")


@lru_cache(maxsize=None)
def min_tree_path_sum(m: int, X: int) -> int:
    """Smallest possible sum of leaf depths over all splitter trees with
    ``m`` leaves and at most ``X`` children per splitter (a leaf's depth is
    the number of splitters above it)."""
    if m < 1 or X < 2:
        raise ValueError("need m >= 1 and X >= 2")
    if m == 1:
        return 0
    return m + min(_forest_sum(m, b, X) for b in range(2, min(X, m) + 1))


@lru_cache(maxsize=None)
def _forest_sum(m: int, b: int, X: int) -> int:
    # best total over b subtrees sharing m leaves
    if b == 1:
        return min_tree_path_sum(m, X)
    return min(min_tree_path_sum(j, X) + _forest_sum(m - j, b - 1, X)
               for j in range(1, m - b + 2))


def _subset_matrix(t: int, cfg: PhaseConfig, salt: int) -> np.ndarray:
    """Boolean matrix, one row per subset (size >= 2) of ``t`` fanouts."""
    if t <= cfg.enum_threshold:
        masks = np.arange(1 << t, dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(t)) & 1).astype(bool)
        return bits[bits.sum(axis=1) >= 2]
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & (2**64 - 1), salt]))
    want = cfg.subset_cap
    seen: set[bytes] = set()
    rows = []
    while len(rows) < want:
        batch = max(64, 2 * (want - len(rows)))
        sizes = rng.integers(2, t + 1, size=batch)
        ranks = np.argsort(rng.random((batch, t)), axis=1).argsort(axis=1)
        chosen = ranks < sizes[:, None]
        packed = np.packbits(chosen, axis=1)
        for r in range(batch):
            key = packed[r].tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(chosen[r])
                if len(rows) == want:
                    break
    return np.array(rows, dtype=bool).reshape(len(rows), t)


def sample_fanout_subsets(fanouts: list, cfg: PhaseConfig, salt: int = 0) -> list[tuple]:
    """Fanout subsets used as tree-room constraints for one driver.

    Up to ``cfg.enum_threshold`` fanouts every subset of size >= 2 is
    returned; above that, ``cfg.subset_cap`` distinct subsets are drawn
    (size uniform in 2..t, then members uniform). ``salt`` (normally the
    driver's node id) decorrelates drivers while keeping results
    independent of processing order.
    """
    if len(fanouts) < 2:
        raise ValueError("need at least two fanouts")
    mat = _subset_matrix(len(fanouts), cfg, salt)
    return [tuple(fanouts[j] for j in np.nonzero(row)[0]) for row in mat]


def level_variables(net: Netlist, lp: LinearProgram, cfg: PhaseConfig) -> list[int]:
    col = [0] * len(net)
    out = None
    for i, k in enumerate(net.kinds):
        if k is Kind.PO:
            if out is None:
                out = lp.add_variable("L_out")
            col[i] = out
        elif k is Kind.PI:
            col[i] = lp.add_variable(f"L{i}", cfg.pi_level, cfg.pi_level)
        else:
            col[i] = lp.add_variable(f"L{i}")
    return col


def add_edge_rows(net: Netlist, lp: LinearProgram, lcol: list[int], span: int):
    """Per-edge ``C`` variables and ``1 <= Lj - Li <= (C + 1) * span`` rows.
    Returns the list of (edge src, C column)."""
    edges = net.edges()
    ccols = [lp.add_variable(f"C{e.src}_{e.dst}_{k}") for k, e in enumerate(edges)]
    m = len(edges)
    if not m:
        return []
    src = np.array([lcol[e.src] for e in edges])
    dst = np.array([lcol[e.dst] for e in edges])
    cc = np.array(ccols)
    r = np.arange(m)
    # Lj - Li >= 1
    lp.add_constraints(np.repeat(r, 2), np.column_stack([dst, src]).ravel(),
                       np.tile([1.0, -1.0], m), np.full(m, 1, dtype=np.int8), np.ones(m))
    # Lj - Li - span*C <= span
    lp.add_constraints(np.repeat(r, 3), np.column_stack([dst, src, cc]).ravel(),
                       np.tile([1.0, -1.0, -float(span)], m),
                       np.full(m, -1, dtype=np.int8), np.full(m, float(span)))
    return [(e.src, c) for e, c in zip(edges, ccols)]


def build_initial_lp(net: Netlist, cfg: PhaseConfig) -> LinearProgram:
    """LP over node levels and per-edge buffer costs (see module docstring).

    All POs share the single level variable ``L_out``; PIs are fixed to
    ``cfg.pi_level``.
    """
    if net.nodes_of(Kind.BUF, Kind.SPL, Kind.NOT):
        raise ValueError("initial level assignment expects a splitter-free, inverter-free netlist")
    lp = LinearProgram()
    lcol = level_variables(net, lp, cfg)
    fanouts = net.fanouts()
    edge_c = add_edge_rows(net, lp, lcol, cfg.span)
    lp.set_objective({c: 1.0 / len(fanouts[s]) for s, c in edge_c})
    X = cfg.max_fanout
    for i in range(len(net)):
        t = len(fanouts[i])
        if t < 2:
            continue
        mat = _subset_matrix(t, cfg, i)
        sizes = mat.sum(axis=1)
        rr, jj = np.nonzero(mat)
        fcols = np.array([lcol[d] for d, _ in fanouts[i]])
        k = len(sizes)
        rows = np.concatenate([rr, np.arange(k)])
        cols = np.concatenate([fcols[jj], np.full(k, lcol[i])])
        vals = np.concatenate([np.ones(len(rr)), -sizes.astype(float)])
        f = np.array([0, 0] + [min_tree_path_sum(m, X) for m in range(2, t + 1)])
        rhs = sizes + f[sizes]
        lp.add_constraints(rows, cols, vals, np.full(k, 1, dtype=np.int8), rhs.astype(float),
                           lazy=True)
    return lp


def round_levels(values, lcol: list[int]) -> dict[int, int]:
    """Round level variables up; uniform rounding direction keeps every
    ``Lj - Li >= 1`` relation intact."""
    return {i: int(math.ceil(values[c] - 1e-9)) for i, c in enumerate(lcol)}


def assign_initial_levels(net: Netlist, cfg: PhaseConfig, method: str = "auto") -> dict[int, int]:
    lp = build_initial_lp(net, cfg)
    sol = solve_lp(lp, method=method)
    if sol.status is not Status.OPTIMAL:
        raise LevelAssignmentError("initial level assignment", sol.status)
    lcol = [lp.var("L_out") if k is Kind.PO else lp.var(f"L{i}") for i, k in enumerate(net.kinds)]
    return round_levels(sol.values, lcol)

