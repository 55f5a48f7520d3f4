"""Optimal splitter-tree construction for one multi-fanout driver.

Depth convention: depth ``d`` is a level offset from the driver, and a
fanout leaf with ``delay`` sits at offset ``delay + 1``. A connection from a
node at depth ``d`` to a leaf may span at most ``ps`` levels; longer gaps are
bridged with buffers.

Table layout follows the interval formulation: ``dp[l][r][b][d]`` is the best
cost of ``b`` branches leaving depth ``d`` that together feed leaves ``l..r``
(1-based, leaves sorted), and ``pt`` records the argmin so the tree can be
rebuilt. Costs are ``(max extra delay, total extra delay, B/S count)``
compared lexicographically.

Costs are packed into int64 keys, ``max << 40 | total << 20 | count``, so a
lexicographic comparison is an integer comparison. Joining two subtrees adds
the keys and subtracts the smaller ``max`` field.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import count
from typing import NamedTuple

import numpy as np

from .config import PhaseConfig
from .netlist import Kind, Netlist

_SHIFT_MAX = 40
_SHIFT_TOTAL = 20
_FIELD = (1 << 20) - 1
INF_KEY = 1 << 60


class Mode(str, enum.Enum):
    INITIAL = "initial"          # extra delay beyond slack is allowed but paid for
    RECONSTRUCT = "reconstruct"  # extra delay beyond slack is infeasible


class CostTuple(NamedTuple):
    max_extra: float
    total_extra: float
    bs_count: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.max_extra)

    def join(self, other: CostTuple) -> CostTuple:
        if not (self.feasible and other.feasible):
            return INFEASIBLE
        return CostTuple(max(self.max_extra, other.max_extra),
                         self.total_extra + other.total_extra,
                         self.bs_count + other.bs_count)


INFEASIBLE = CostTuple(math.inf, math.inf, math.inf)


def encode(t: CostTuple) -> int:
    if not t.feasible:
        return INF_KEY
    return (int(t.max_extra) << _SHIFT_MAX) | (int(t.total_extra) << _SHIFT_TOTAL) | int(t.bs_count)


def decode(key: int) -> CostTuple:
    key = int(key)
    if key >= INF_KEY:
        return INFEASIBLE
    return CostTuple(key >> _SHIFT_MAX, (key >> _SHIFT_TOTAL) & _FIELD, key & _FIELD)


def _join_keys(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a + b - (np.minimum(a >> _SHIFT_MAX, b >> _SHIFT_MAX) << _SHIFT_MAX)
    out[(a >= INF_KEY) | (b >= INF_KEY)] = INF_KEY
    return out


@dataclass(frozen=True)
class FanoutLeaf:
    node: int
    delay: int
    slack: int = 0
    pin: int = 0

    def __post_init__(self):
        if self.delay < 0 or self.slack < 0:
            raise ValueError(f"leaf {self.node}: delay and slack must be >= 0")


class PivotEntry(NamedTuple):
    split: int        # 1-based last leaf of the left group, -1 for a B/S node
    branches: int
    depth_next: int


def leaf_connection_cost(delta: int, ps: int) -> int:
    """Buffers needed to bridge ``delta + 1`` levels with hops of at most
    ``ps`` levels."""
    if delta < 0 or ps < 1:
        raise ValueError("need delta >= 0 and ps >= 1")
    return delta // ps


def ceil_log(n: int, base: int) -> int:
    h, reach = 0, 1
    while reach < n:
        reach *= base
        h += 1
    return h


@dataclass
class DpTables:
    leaves: list[FanoutLeaf]
    X: int
    ps: int
    mode: Mode
    d_max: int
    keys: np.ndarray           # [l, r, b, d] packed costs, 0-based leaves
    pt_branches: np.ndarray
    pt_split: np.ndarray       # 0-based last leaf of left group (b > 1)
    pt_depth: np.ndarray       # depth_next (b == 1)
    ops: int = 0

    @property
    def n(self) -> int:
        return len(self.leaves)

    def dp(self, l: int, r: int, b: int, d: int) -> CostTuple:
        """1-based accessor mirroring ``dp[l][r][b][d]``."""
        if not (1 <= l <= r <= self.n and 1 <= b <= self.X and 0 <= d <= self.d_max):
            return INFEASIBLE
        return decode(self.keys[l - 1, r - 1, b, d])

    def pt(self, l: int, r: int, b: int, d: int) -> PivotEntry | None:
        """1-based accessor mirroring ``pt[l][r][b][d]``; ``None`` for leaf
        base cases and infeasible states."""
        if not self.dp(l, r, b, d).feasible or l == r:
            return None
        i, j = l - 1, r - 1
        if b == 1:
            return PivotEntry(-1, int(self.pt_branches[i, j, 1, d]), int(self.pt_depth[i, j, 1, d]))
        return PivotEntry(int(self.pt_split[i, j, b, d]) + 1, int(self.pt_branches[i, j, b, d]), d)

    @property
    def root(self) -> CostTuple:
        return self.dp(1, self.n, 1, 0)

    def dump(self, l: int, r: int) -> str:
        """Text slice of dp/pt for leaves l..r (1-based), for debugging."""
        lines = [f"dp/pt for leaves {l}..{r} (ps={self.ps}, X={self.X}, mode={self.mode.value})"]
        for b in range(1, min(self.X, r - l + 1) + 1):
            for d in range(self.d_max + 1):
                c = self.dp(l, r, b, d)
                if c.feasible:
                    p = self.pt(l, r, b, d)
                    ptxt = "" if p is None else f"  pt={tuple(p)}"
                    lines.append(f"  dp[{l}][{r}][{b}][{d}] = {tuple(int(x) for x in c)}{ptxt}")
        return "\n".join(lines)


def _leaf_base(leaf: FanoutLeaf, d_max: int, ps: int, mode: Mode) -> np.ndarray:
    d = np.arange(d_max + 1, dtype=np.int64)
    out = np.empty(d_max + 1, dtype=np.int64)
    near = d <= leaf.delay
    out[near] = (leaf.delay - d[near]) // ps
    extra = d[~near] - leaf.delay
    over = extra - leaf.slack
    far = np.where(over <= 0, 0, (over << _SHIFT_MAX) | (over << _SHIFT_TOTAL))
    if mode is Mode.RECONSTRUCT:
        far = np.where(over <= 0, 0, INF_KEY)
    out[~near] = far
    return out


def build_tree_dp(leaves: list[FanoutLeaf], cfg: PhaseConfig | None = None,
                  mode: Mode = Mode.RECONSTRUCT, *, ps: int | None = None,
                  X: int | None = None) -> DpTables:
    """Fill the dp/pt tables for ``leaves`` in the order given (callers pass
    them sorted by ascending delay). ``ps``/``X`` default to ``cfg.span`` and
    ``cfg.max_fanout``.

    Ties are broken by smallest depth jump, then fewest branches, then
    leftmost split point.
    """
    if not leaves:
        raise ValueError("need at least one fanout leaf")
    ps = ps if ps is not None else cfg.span
    X = X if X is not None else cfg.max_fanout
    mode = Mode(mode)
    n = len(leaves)
    d_max = max(f.delay for f in leaves) + ceil_log(n, X)
    D = d_max + 1
    keys = np.full((n, n, X + 1, D), INF_KEY, dtype=np.int64)
    pt_b = np.zeros((n, n, X + 1, D), dtype=np.int16)
    pt_s = np.full((n, n, X + 1, D), -1, dtype=np.int16)
    pt_d = np.full((n, n, X + 1, D), -1, dtype=np.int32)
    ops = n * D
    for i, leaf in enumerate(leaves):
        keys[i, i, 1] = _leaf_base(leaf, d_max, ps, mode)

    cols = np.arange(D)
    for ln in range(1, n):
        width = ln + 1
        for l in range(n - ln):
            r = l + ln
            for b in range(2, min(X, width) + 1):
                ks, ps_ = [], []
                for k in range(1, b):
                    for p in range(l + k - 1, r - (b - k) + 1):
                        ks.append(k)
                        ps_.append(p)
                ks = np.array(ks)
                ps_ = np.array(ps_)
                cand = _join_keys(keys[l, ps_, ks, :], keys[ps_ + 1, r, b - ks, :])
                best = np.argmin(cand, axis=0)
                keys[l, r, b] = cand[best, cols]
                pt_b[l, r, b] = ks[best]
                pt_s[l, r, b] = ps_[best]
                ops += cand.size
            kmax = min(X, width)
            if kmax >= 2:
                multi = keys[l, r, 2:kmax + 1]
                mk = np.argmin(multi, axis=0)
                mbest = multi[mk, cols].tolist()
                mk = (mk + 2).tolist()
            else:
                mbest = [INF_KEY] * D
                mk = [0] * D
            one = [INF_KEY] * D
            arg_k = [0] * D
            arg_d = [-1] * D
            for d in range(d_max - 1, -1, -1):
                best, bk, bd = INF_KEY, 0, -1
                for nd in range(d + 1, min(d + ps, d_max) + 1):
                    c = one[nd]
                    if c < INF_KEY and c + 1 < best:
                        best, bk, bd = c + 1, 1, nd
                    c = mbest[nd]
                    if c < INF_KEY and c + 1 < best:
                        best, bk, bd = c + 1, mk[nd], nd
                    ops += kmax
                one[d], arg_k[d], arg_d[d] = best, bk, bd
            keys[l, r, 1] = one
            pt_b[l, r, 1] = arg_k
            pt_d[l, r, 1] = arg_d
    return DpTables(list(leaves), X, ps, mode, d_max, keys, pt_b, pt_s, pt_d, ops)


# --------------------------------------------------------------------------
# trees


@dataclass
class TreeNode:
    kind: Kind          # Kind.BUF or Kind.SPL
    depth: int
    parent: int         # index into SplitterTree.nodes, -1 for the source


@dataclass
class LeafAttachment:
    leaf: FanoutLeaf
    parent: int         # index into SplitterTree.nodes, -1 for the source
    extra: int          # level increase applied to the leaf


@dataclass
class SplitterTree:
    source: int
    nodes: list[TreeNode] = field(default_factory=list)
    attachments: list[LeafAttachment] = field(default_factory=list)

    @property
    def buffers(self) -> int:
        return sum(1 for n in self.nodes if n.kind is Kind.BUF)

    @property
    def splitters(self) -> int:
        return sum(1 for n in self.nodes if n.kind is Kind.SPL)

    def cost(self) -> CostTuple:
        """Cost tuple recomputed from the materialized structure; extra delay
        within a leaf's slack is free."""
        over = [max(0, a.extra - a.leaf.slack) for a in self.attachments]
        return CostTuple(max(over, default=0), sum(over), len(self.nodes))


class TreeReconstructionError(AssertionError):
    pass


def backtrack_tree(tables: DpTables, source: int = -1) -> SplitterTree:
    """Follow ``pt`` from the root state and materialize the tree."""
    if not tables.root.feasible:
        raise TreeReconstructionError("root state is infeasible")
    tree = SplitterTree(source)
    ps = tables.ps

    def attach_leaf(i: int, d: int, parent: int):
        leaf = tables.leaves[i]
        if d <= leaf.delay:
            for _ in range(leaf_connection_cost(leaf.delay - d, ps)):
                d += ps
                tree.nodes.append(TreeNode(Kind.BUF, d, parent))
                parent = len(tree.nodes) - 1
            tree.attachments.append(LeafAttachment(leaf, parent, 0))
        else:
            tree.attachments.append(LeafAttachment(leaf, parent, d - leaf.delay))

    # explicit stack: (l, r, b, d, parent)
    stack = [(0, tables.n - 1, 1, 0, -1)]
    while stack:
        l, r, b, d, parent = stack.pop()
        if l == r:
            attach_leaf(l, d, parent)
        elif b == 1:
            k = int(tables.pt_branches[l, r, 1, d])
            nd = int(tables.pt_depth[l, r, 1, d])
            tree.nodes.append(TreeNode(Kind.BUF if k == 1 else Kind.SPL, nd, parent))
            stack.append((l, r, k, nd, len(tree.nodes) - 1))
        else:
            k = int(tables.pt_branches[l, r, b, d])
            p = int(tables.pt_split[l, r, b, d])
            stack.append((p + 1, r, b - k, d, parent))
            stack.append((l, p, k, d, parent))
    got = tree.cost()
    if got != tables.root:
        raise TreeReconstructionError(f"tree cost {got} disagrees with dp root {tables.root}")
    return tree


def _deadline_order(leaves):
    return sorted(leaves, key=lambda f: (f.delay + f.slack, f.delay, f.node, f.pin))


def build_tree(leaves: list[FanoutLeaf], cfg: PhaseConfig, mode: Mode = Mode.RECONSTRUCT,
               source: int = -1) -> tuple[SplitterTree | None, CostTuple]:
    """Best tree for one driver. Leaves are sorted by delay; when some leaf
    has slack the tables are also built over the deadline (delay + slack)
    order and the cheaper root wins. Returns ``(None, INFEASIBLE)`` when no
    tree satisfies the mode."""
    ordered = sorted(leaves, key=lambda f: (f.delay, f.slack, f.node, f.pin))
    tables = build_tree_dp(ordered, cfg, mode)
    if any(f.slack for f in leaves):
        alt = _deadline_order(leaves)
        if alt != ordered:
            t2 = build_tree_dp(alt, cfg, mode)
            if encode(t2.root) < encode(tables.root):
                tables = t2
    if not tables.root.feasible:
        return None, INFEASIBLE
    return backtrack_tree(tables, source), tables.root


class NameGen:
    """Fresh ``bufN`` / ``splN`` names that do not clash with a netlist."""

    def __init__(self, net: Netlist):
        self.used = set(net.names)
        self._counters = {"buf": count(), "spl": count()}

    def __call__(self, prefix: str) -> str:
        while True:
            name = f"{prefix}{next(self._counters[prefix])}"
            if name not in self.used:
                self.used.add(name)
                return name


def apply_tree(net: Netlist, levels: dict[int, int], tree: SplitterTree,
               names: NameGen | None = None) -> list[int]:
    """Insert ``tree`` into ``net`` in place; returns the new node ids.

    Each leaf pin currently driven by the tree's source is rewired to its
    tree parent (keeping the pin's polarity); new nodes get level
    ``L(source) + depth`` and leaves that absorbed extra delay are moved
    later by that amount."""
    names = names or NameGen(net)
    s = tree.source
    base = levels[s]
    ids = []
    for node in tree.nodes:
        parent = s if node.parent < 0 else ids[node.parent]
        prefix = "buf" if node.kind is Kind.BUF else "spl"
        nid = net.add_node(node.kind, names(prefix), [(parent, False)])
        levels[nid] = base + node.depth
        ids.append(nid)
    for a in tree.attachments:
        dst, pin = a.leaf.node, a.leaf.pin
        src, inv = net.fanins[dst][pin]
        if src != s:
            raise ValueError(f"pin {pin} of node {dst} is not driven by source {s}")
        net.fanins[dst][pin] = (s if a.parent < 0 else ids[a.parent], inv)
        if a.extra:
            levels[dst] += a.extra
    return ids


# --------------------------------------------------------------------------
# exhaustive oracle


def _pareto(tuples) -> tuple:
    front = []
    for t in sorted(set(tuples)):
        if not any(o[0] <= t[0] and o[1] <= t[1] and o[2] <= t[2] for o in front):
            front.append(t)
    return tuple(front)


def _set_partitions(items: tuple):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [(first,)] + part
        for i in range(len(part)):
            yield part[:i] + [(first,) + part[i]] + part[i + 1:]


def brute_force_tree_oracle(leaves: list[FanoutLeaf], cfg: PhaseConfig | None = None,
                            mode: Mode = Mode.RECONSTRUCT, *, ps: int | None = None,
                            X: int | None = None) -> CostTuple:
    """Exhaustive search over every tree shape, node depth (up to the same
    depth bound as the DP), hop span and leaf assignment. Leaf order plays no
    role, buffers are placed explicitly, and Pareto fronts of
    (max, total, count) are kept so the lexicographic minimum is exact."""
    ps = ps if ps is not None else cfg.span
    X = X if X is not None else cfg.max_fanout
    mode = Mode(mode)
    n = len(leaves)
    if n == 0 or n > 6 or max(f.delay for f in leaves) > 8:
        raise ValueError("oracle limited to 1..6 leaves with delay <= 8")
    d_max = max(f.delay for f in leaves) + ceil_log(n, X)

    @lru_cache(maxsize=None)
    def branch(group: tuple, d: int) -> tuple:
        # fronts for one connection leaving depth d that feeds `group`
        options = []
        if len(group) == 1:
            leaf = leaves[group[0]]
            if d <= leaf.delay:
                if leaf.delay + 1 - d <= ps:
                    options.append((0, 0, 0))
            else:
                extra = d - leaf.delay
                if extra <= leaf.slack:
                    options.append((0, 0, 0))
                elif mode is Mode.INITIAL:
                    e = extra - leaf.slack
                    options.append((e, e, 0))
        for hop in range(1, ps + 1):
            nd = d + hop
            if nd > d_max:
                break
            for part in _set_partitions(group):
                if len(part) > X:
                    continue
                acc = [(0, 0, 1)]
                for g in part:
                    sub = branch(tuple(sorted(g)), nd)
                    acc = _pareto((max(a[0], s[0]), a[1] + s[1], a[2] + s[2])
                                  for a in acc for s in sub)
                    if not acc:
                        break
                options.extend(acc)
        return _pareto(options)

    front = branch(tuple(range(n)), 0)
    return CostTuple(*front[0]) if front else INFEASIBLE
