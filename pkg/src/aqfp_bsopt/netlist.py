"""Netlist data model for AQFP circuits.

A :class:`Netlist` is a DAG of primary inputs, primary outputs, logic gates,
buffers and splitters. Every node stores an ordered list of fanin pins; a pin
is a ``(source id, inverted)`` pair, so inversions live on edges rather than
in dedicated nodes. ``NOT`` nodes only exist between parsing and
:func:`absorb_inverters`.

Text format, one statement per line, ``#`` starts a comment::

    INPUT(a)
    OUTPUT(c)
    c = AND(a, ~b)          # '~' marks an inverted fanin
    d = MAJ3(a, b, c)
    e = NOT(d)              # removed by absorb_inverters
    f = BUF(d)              # BUF / SPL appear in optimizer output
    y = ~d                  # alias: y is the complement of d
    # level d = 3           # optional level annotation
"""

from __future__ import annotations

import enum
import json
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple


class Kind(str, enum.Enum):
    PI = "PI"
    PO = "PO"
    GATE = "GATE"
    BUF = "BUF"
    SPL = "SPL"
    NOT = "NOT"


#: gate function -> number of logic fanins
GATE_ARITY = {"MAJ3": 3, "AND": 2, "OR": 2}


class NetlistError(ValueError):
    """Raised for malformed netlist text or JSON."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    inverted: bool = False


class Violation(NamedTuple):
    node: int | None
    message: str

    def __str__(self):
        where = "netlist" if self.node is None else f"node {self.node}"
        return f"{where}: {self.message}"


class Netlist:
    """Mutable container; the optimizer treats instances as values and copies
    before editing."""

    def __init__(self):
        self.kinds: list[Kind] = []
        self.funcs: list[str | None] = []
        self.names: list[str] = []
        self.fanins: list[list[tuple[int, bool]]] = []

    # construction -------------------------------------------------------

    def add_node(self, kind: Kind, name: str, fanins: Iterable[tuple[int, bool]] = (),
                 func: str | None = None) -> int:
        kind = Kind(kind)
        if kind is Kind.GATE and func not in GATE_ARITY:
            raise ValueError(f"unknown gate function {func!r}")
        self.kinds.append(kind)
        self.funcs.append(func if kind is Kind.GATE else None)
        self.names.append(name)
        self.fanins.append([(int(s), bool(inv)) for s, inv in fanins])
        return len(self.kinds) - 1

    def add_pi(self, name: str) -> int:
        return self.add_node(Kind.PI, name)

    def add_po(self, name: str, src: int, inverted: bool = False) -> int:
        return self.add_node(Kind.PO, name, [(src, inverted)])

    def add_gate(self, func: str, name: str, fanins: Iterable) -> int:
        pins = [p if isinstance(p, tuple) else (p, False) for p in fanins]
        return self.add_node(Kind.GATE, name, pins, func=func)

    def copy(self) -> Netlist:
        other = Netlist()
        other.kinds = list(self.kinds)
        other.funcs = list(self.funcs)
        other.names = list(self.names)
        other.fanins = [list(f) for f in self.fanins]
        return other

    # queries ------------------------------------------------------------

    def __len__(self):
        return len(self.kinds)

    def __repr__(self):
        counts = self.count_kinds()
        body = ", ".join(f"{k.value}={v}" for k, v in counts.items() if v)
        return f"Netlist({body})"

    def count_kinds(self) -> dict[Kind, int]:
        counts = {k: 0 for k in Kind}
        for k in self.kinds:
            counts[k] += 1
        return counts

    def nodes_of(self, *kinds: Kind) -> list[int]:
        return [i for i, k in enumerate(self.kinds) if k in kinds]

    @property
    def pis(self) -> list[int]:
        return self.nodes_of(Kind.PI)

    @property
    def pos(self) -> list[int]:
        return self.nodes_of(Kind.PO)

    def edges(self) -> list[Edge]:
        return [Edge(s, d, inv) for d, pins in enumerate(self.fanins) for s, inv in pins]

    def fanouts(self) -> list[list[tuple[int, int]]]:
        """Per node, the ``(dst, pin)`` pairs it drives, in (dst, pin) order."""
        out: list[list[tuple[int, int]]] = [[] for _ in self.kinds]
        for d, pins in enumerate(self.fanins):
            for p, (s, _) in enumerate(pins):
                if 0 <= s < len(out):
                    out[s].append((d, p))
        return out

    def topological_order(self) -> list[int]:
        """Kahn's algorithm, smallest ready id first. Raises on cycles."""
        import heapq

        indeg = [len(f) for f in self.fanins]
        fo = self.fanouts()
        ready = [i for i, d in enumerate(indeg) if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            i = heapq.heappop(ready)
            order.append(i)
            for d, _ in fo[i]:
                indeg[d] -= 1
                if indeg[d] == 0:
                    heapq.heappush(ready, d)
        if len(order) != len(self.kinds):
            raise NetlistError("netlist contains a cycle")
        return order

    def is_topologically_indexed(self) -> bool:
        return all(s < d for d, pins in enumerate(self.fanins) for s, _ in pins)

    def subgraph(self, keep: Iterable[int]) -> tuple[Netlist, dict[int, int]]:
        """Copy of the nodes in ``keep`` (edges to dropped nodes are dropped),
        densely renumbered in ascending old-id order."""
        keep = sorted(set(keep))
        remap = {old: new for new, old in enumerate(keep)}
        out = Netlist()
        for old in keep:
            pins = [(remap[s], inv) for s, inv in self.fanins[old] if s in remap]
            out.kinds.append(self.kinds[old])
            out.funcs.append(self.funcs[old])
            out.names.append(self.names[old])
            out.fanins.append(pins)
        return out, remap


# --------------------------------------------------------------------------
# parsing

_STMT_IO = re.compile(r"^(INPUT|OUTPUT)\s*\(\s*([^\s()]+)\s*\)$", re.IGNORECASE)
_STMT_OUT_BIND = re.compile(r"^OUTPUT\s*\(\s*([^\s()]+)\s*\)\s*=\s*(~?)\s*([^\s(),~]+)$",
                            re.IGNORECASE)
_STMT_GATE = re.compile(r"^([^\s=]+)\s*=\s*([A-Za-z][A-Za-z0-9_]*)\s*\((.*)\)$")
_STMT_ALIAS = re.compile(r"^([^\s=]+)\s*=\s*(~?)\s*([^\s(),~]+)$")
_LEVEL = re.compile(r"^#\s*level\s+(OUTPUT\(\s*([^\s()]+)\s*\)|[^\s=]+)\s*=\s*(-?\d+)\s*$")

_FUNCS = {"MAJ3": (Kind.GATE, 3), "MAJ": (Kind.GATE, 3), "AND": (Kind.GATE, 2),
          "OR": (Kind.GATE, 2), "NOT": (Kind.NOT, 1), "BUF": (Kind.BUF, 1),
          "BUFF": (Kind.BUF, 1), "SPL": (Kind.SPL, 1)}
# variadic functions lowered onto 2-input AND/OR: (base, output inverted)
_LOWERED = {"AND": ("AND", False), "OR": ("OR", False), "NAND": ("AND", True),
            "NOR": ("OR", True), "XOR": ("XOR", False), "XNOR": ("XOR", True)}


def _split_arg(arg: str, lineno: int) -> tuple[str, bool]:
    arg = arg.strip()
    inv = False
    while arg.startswith(("~", "!")):
        inv = not inv
        arg = arg[1:].strip()
    if not arg or re.search(r"[\s(),=]", arg):
        raise NetlistError(f"bad signal reference {arg!r}", lineno)
    return arg, inv


def _lower(net: Netlist, name: str, func: str, srcs: list[tuple[int, bool]]) -> tuple[int, bool]:
    """Balanced tree of 2-input gates for an n-input AND/OR/NAND/NOR/XOR/XNOR.
    Helper nodes are named ``name$k``; the root node carries ``name`` (for
    NAND/NOR/XNOR the signal is that node's inverted output)."""
    base, out_inv = _LOWERED[func]
    k = 0

    def fresh():
        nonlocal k
        k += 1
        return f"{name}${k}"

    def xor(a, b, label):
        t1 = net.add_node(Kind.GATE, fresh(), [a, (b[0], not b[1])], func="AND")
        t2 = net.add_node(Kind.GATE, fresh(), [(a[0], not a[1]), b], func="AND")
        return net.add_node(Kind.GATE, label, [(t1, False), (t2, False)], func="OR")

    level = list(srcs)
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            label = name if len(level) == 2 else fresh()
            a, b = level[i], level[i + 1]
            if base == "XOR":
                nxt.append((xor(a, b, label), False))
            else:
                nxt.append((net.add_node(Kind.GATE, label, [a, b], func=base), False))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    node, inv = level[0]
    return node, inv ^ out_inv


def parse_bench(text: str) -> Netlist:
    """Parse the line-based netlist format into a topologically indexed
    :class:`Netlist`. PIs come first (declaration order), then defined
    signals in dependency order, then POs (declaration order)."""
    inputs: list[str] = []
    outputs: list[tuple[str, int]] = []
    bound: dict[str, tuple[str, bool]] = {}  # OUTPUT(y) = ~sig
    defs: dict[str, tuple[str, list[tuple[str, bool]], int]] = {}
    order: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _STMT_OUT_BIND.match(line)
        if m:
            name = m.group(1)
            if any(name == o for o, _ in outputs):
                raise NetlistError(f"output {name!r} declared twice", lineno)
            outputs.append((name, lineno))
            bound[name] = (m.group(3), bool(m.group(2)))
            continue
        m = _STMT_IO.match(line)
        if m:
            what, name = m.group(1).upper(), m.group(2)
            if what == "INPUT":
                if name in inputs or name in defs:
                    raise NetlistError(f"signal {name!r} defined twice", lineno)
                inputs.append(name)
            else:
                if any(name == o for o, _ in outputs):
                    raise NetlistError(f"output {name!r} declared twice", lineno)
                outputs.append((name, lineno))
            continue
        m = _STMT_GATE.match(line)
        if m:
            name, func, args = m.group(1), m.group(2).upper(), m.group(3)
            if func not in _FUNCS and func not in _LOWERED:
                raise NetlistError(f"unknown function {m.group(2)!r}", lineno)
            pins = [_split_arg(a, lineno) for a in args.split(",")] if args.strip() else []
            if func in _LOWERED:
                if len(pins) < 2:
                    raise NetlistError(f"{func} expects at least 2 arguments, got {len(pins)}", lineno)
            elif len(pins) != _FUNCS[func][1]:
                raise NetlistError(f"{func} expects {_FUNCS[func][1]} arguments, got {len(pins)}",
                                   lineno)
            func = {"MAJ": "MAJ3", "BUFF": "BUF"}.get(func, func)
        else:
            m = _STMT_ALIAS.match(line)
            if not m:
                raise NetlistError(f"syntax error: {raw.strip()!r}", lineno)
            name, func = m.group(1), "="
            pins = [(m.group(3), bool(m.group(2)))]
        if name in defs or name in inputs:
            raise NetlistError(f"signal {name!r} defined twice", lineno)
        defs[name] = (func, pins, lineno)
        order.append(name)

    net = Netlist()
    # signal name -> (node id, inverted)
    resolved: dict[str, tuple[int, bool]] = {}
    for name in inputs:
        resolved[name] = (net.add_pi(name), False)

    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def resolve(root: str, lineno: int):
        stack = [(root, lineno, False)]
        while stack:
            name, ln, expanded = stack.pop()
            if name in resolved:
                continue
            if name not in defs:
                raise NetlistError(f"undefined signal {name!r}", ln)
            func, pins, dln = defs[name]
            if expanded:
                srcs = [(resolved[a][0], resolved[a][1] ^ inv) for a, inv in pins]
                if func == "=":
                    resolved[name] = srcs[0]
                elif func in _LOWERED:
                    resolved[name] = _lower(net, name, func, srcs)
                else:
                    kind = _FUNCS[func][0]
                    node = net.add_node(kind, name, srcs,
                                        func=func if kind is Kind.GATE else None)
                    resolved[name] = (node, False)
                state[name] = 2
                continue
            if state.get(name) == 1:
                raise NetlistError(f"cyclic definition involving {name!r}", dln)
            state[name] = 1
            stack.append((name, ln, True))
            for a, _ in reversed(pins):
                if a not in resolved:
                    if state.get(a) == 1:
                        raise NetlistError(f"cyclic definition involving {a!r}", dln)
                    stack.append((a, dln, False))

    for name in order:
        resolve(name, defs[name][2])
    for name, lineno in outputs:
        sig, flip = bound.get(name, (name, False))
        if sig not in resolved:
            raise NetlistError(f"undefined signal {sig!r}", lineno)
        src, inv = resolved[sig]
        net.add_po(name, src, inv ^ flip)
    return net


def parse_levels(text: str, net: Netlist) -> dict[int, int]:
    """Read ``# level <name> = <int>`` annotations back into a level map."""
    sig = {}
    po = {}
    for i, (k, n) in enumerate(zip(net.kinds, net.names)):
        (po if k is Kind.PO else sig)[n] = i
    levels = {}
    for raw in text.splitlines():
        m = _LEVEL.match(raw.strip())
        if not m:
            continue
        if m.group(2) is not None:
            node = po.get(m.group(2))
        else:
            node = sig.get(m.group(1))
        if node is not None:
            levels[node] = int(m.group(3))
    return levels


# --------------------------------------------------------------------------
# serialization


def _ref(net: Netlist, src: int, inv: bool) -> str:
    return ("~" if inv else "") + net.names[src]


def serialize(net: Netlist, levels: dict[int, int] | None = None) -> str:
    """Deterministic text form; ``parse_bench(serialize(n))`` is isomorphic to
    ``n`` when ``n`` is topologically sortable and signal names are unique."""
    counts = net.count_kinds()
    lines = [f"# aqfp-bsopt netlist: {len(net)} nodes, {counts[Kind.PI]} inputs, "
             f"{counts[Kind.PO]} outputs, {counts[Kind.GATE]} gates, "
             f"{counts[Kind.BUF]} buffers, {counts[Kind.SPL]} splitters"]
    order = net.topological_order() if len(net) else []
    for i in order:
        if net.kinds[i] is Kind.PI:
            lines.append(f"INPUT({net.names[i]})")
    for i in order:
        if net.kinds[i] is Kind.PO:
            s, inv = net.fanins[i][0]
            bind = f" = {_ref(net, s, inv)}" if inv or net.names[s] != net.names[i] else ""
            lines.append(f"OUTPUT({net.names[i]}){bind}")
    for i in order:
        k = net.kinds[i]
        if k in (Kind.PI, Kind.PO):
            continue
        func = net.funcs[i] if k is Kind.GATE else k.value
        args = ", ".join(_ref(net, s, inv) for s, inv in net.fanins[i])
        lines.append(f"{net.names[i]} = {func}({args})")
    if levels:
        for i in order:
            if i in levels:
                name = net.names[i]
                if net.kinds[i] is Kind.PO:
                    name = f"OUTPUT({name})"
                lines.append(f"# level {name} = {int(levels[i])}")
    return "\n".join(lines) + "\n"


def to_json(net: Netlist, levels: dict[int, int] | None = None) -> str:
    doc = {
        "nodes": [{"id": i, "name": n, "kind": k.value, **({"func": f} if f else {})}
                  for i, (k, n, f) in enumerate(zip(net.kinds, net.names, net.funcs))],
        "edges": [{"src": e.src, "dst": e.dst, "inverted": e.inverted} for e in net.edges()],
    }
    if levels is not None:
        doc["levels"] = {str(i): int(levels[i]) for i in sorted(levels)}
    return json.dumps(doc, indent=1, sort_keys=True)


def from_json(text: str) -> tuple[Netlist, dict[int, int] | None]:
    try:
        doc = json.loads(text)
        net = Netlist()
        nodes = sorted(doc["nodes"], key=lambda n: n["id"])
        if [n["id"] for n in nodes] != list(range(len(nodes))):
            raise NetlistError("node ids must be dense 0..n-1")
        for n in nodes:
            net.add_node(Kind(n["kind"]), n["name"], func=n.get("func"))
        for e in doc["edges"]:
            net.fanins[e["dst"]].append((int(e["src"]), bool(e.get("inverted", False))))
        levels = doc.get("levels")
        if levels is not None:
            levels = {int(k): int(v) for k, v in levels.items()}
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, NetlistError):
            raise
        raise NetlistError(f"malformed netlist JSON: {exc}") from exc
    return net, levels


# --------------------------------------------------------------------------
# transformations and checks


def absorb_inverters(net: Netlist) -> Netlist:
    """Remove every NOT node, toggling the polarity of the edges it fed."""
    through: dict[int, tuple[int, bool]] = {}
    keep = []
    for i in net.topological_order():
        if net.kinds[i] is Kind.NOT:
            s, inv = net.fanins[i][0]
            s, inv2 = through.get(s, (s, False))
            through[i] = (s, not (inv ^ inv2))
        else:
            keep.append(i)
    keep.sort()
    remap = {old: new for new, old in enumerate(keep)}
    out = Netlist()
    for old in keep:
        pins = []
        for s, inv in net.fanins[old]:
            if s in through:
                s, extra = through[s]
                inv ^= extra
            pins.append((remap[s], inv))
        out.kinds.append(net.kinds[old])
        out.funcs.append(net.funcs[old])
        out.names.append(net.names[old])
        out.fanins.append(pins)
    return out


def validate(net: Netlist) -> list[Violation]:
    """Every arity / acyclicity / reachability violation; empty iff valid."""
    report: list[Violation] = []
    n = len(net)
    fo = [0] * n
    for d, pins in enumerate(net.fanins):
        seen = set()
        for s, _ in pins:
            if not 0 <= s < n:
                report.append(Violation(d, f"fanin references missing node {s}"))
                continue
            fo[s] += 1
            if s in seen:
                report.append(Violation(d, f"duplicate edge from node {s}"))
            seen.add(s)
    for i, k in enumerate(net.kinds):
        nin = len(net.fanins[i])
        if k is Kind.PI:
            if nin:
                report.append(Violation(i, "primary input has fanins"))
        elif k is Kind.PO:
            if nin != 1:
                report.append(Violation(i, f"primary output has {nin} fanins, expected 1"))
            if fo[i]:
                report.append(Violation(i, "primary output has fanouts"))
        elif k is Kind.GATE:
            want = GATE_ARITY.get(net.funcs[i])
            if want is None:
                report.append(Violation(i, f"unknown gate function {net.funcs[i]!r}"))
            elif nin != want:
                report.append(Violation(i, f"{net.funcs[i]} gate has {nin} fanins, expected {want}"))
        elif k is Kind.BUF:
            if nin != 1:
                report.append(Violation(i, f"buffer has {nin} fanins, expected 1"))
            if fo[i] != 1:
                report.append(Violation(i, f"buffer fanout {fo[i]} != 1"))
        elif k is Kind.SPL:
            if nin != 1:
                report.append(Violation(i, f"splitter has {nin} fanins, expected 1"))
            if fo[i] < 2:
                report.append(Violation(i, f"splitter fanout < 2 (got {fo[i]})"))
        elif k is Kind.NOT:
            if nin != 1:
                report.append(Violation(i, f"inverter has {nin} fanins, expected 1"))
    if any(v.message.startswith("fanin references missing") for v in report):
        return report
    try:
        net.topological_order()
    except NetlistError:
        report.append(Violation(None, "netlist contains a cycle"))
        return report
    reach = [False] * n
    queue = deque(i for i, k in enumerate(net.kinds) if k is Kind.PI)
    for i in queue:
        reach[i] = True
    fanouts = net.fanouts()
    while queue:
        i = queue.popleft()
        for d, _ in fanouts[i]:
            if not reach[d]:
                reach[d] = True
                queue.append(d)
    for i in range(n):
        if not reach[i]:
            report.append(Violation(i, "not reachable from any primary input"))
    return report


def _signature(net: Netlist):
    keyed = {}
    for i, (k, n) in enumerate(zip(net.kinds, net.names)):
        key = ("PO" if k is Kind.PO else "SIG", n)
        if key in keyed:
            return None
        keyed[key] = i
    sig = {}
    for (space, name), i in keyed.items():
        pins = sorted((net.names[s], inv) for s, inv in net.fanins[i])
        sig[(space, name)] = (net.kinds[i], net.funcs[i], tuple(pins))
    return sig


def isomorphic(a: Netlist, b: Netlist) -> bool:
    """Graph isomorphism respecting node names (fanin order ignored)."""
    sa, sb = _signature(a), _signature(b)
    if sa is None or sb is None:
        raise ValueError("isomorphism check requires unique names per namespace")
    return sa == sb


# --------------------------------------------------------------------------
# simulation


def exhaustive_patterns(pis: list[int]) -> tuple[dict[int, int], int]:
    """Bit-vectors enumerating all input combinations: bit j of PI k's
    vector is bit k of j."""
    width = 1 << len(pis)
    pats = {}
    for k, p in enumerate(pis):
        word = 0
        for j in range(width):
            if (j >> k) & 1:
                word |= 1 << j
        pats[p] = word
    return pats, width


def simulate(net: Netlist, patterns: dict[int, int] | None = None,
             width: int | None = None) -> dict[int, int]:
    """Bit-parallel simulation. ``patterns`` maps PI id -> int bit-vector of
    ``width`` bits; by default all 2**#PI input combinations are applied.
    Returns node id -> bit-vector."""
    if patterns is None:
        patterns, width = exhaustive_patterns(net.pis)
    mask = (1 << width) - 1
    val: dict[int, int] = {}
    for i in net.topological_order():
        k = net.kinds[i]
        if k is Kind.PI:
            val[i] = patterns[i] & mask
            continue
        ins = [(val[s] ^ mask) if inv else val[s] for s, inv in net.fanins[i]]
        if k is Kind.GATE:
            f = net.funcs[i]
            if f == "AND":
                v = ins[0] & ins[1]
            elif f == "OR":
                v = ins[0] | ins[1]
            else:
                a, b, c = ins
                v = (a & b) | (a & c) | (b & c)
        elif k is Kind.NOT:
            v = ins[0] ^ mask
        else:
            v = ins[0]
        val[i] = v
    return val


def output_functions(net: Netlist) -> dict[str, int]:
    """PO name -> truth-table bit-vector over all input combinations (PIs
    ordered by name so differently indexed copies are comparable)."""
    pis = sorted(net.pis, key=lambda i: net.names[i])
    pats, width = exhaustive_patterns(pis)
    val = simulate(net, pats, width)
    return {net.names[i]: val[i] for i in net.pos}
