"""Deterministic generators for ISCAS-class combinational benchmarks.

The circuits mimic the function and rough size of classic ISCAS'85 designs
(priority controller, error correction, ALU, multiplier) and are built from
2-input AND/OR and 3-input majority gates with inverted edges. XOR costs
three gates, ``(a & ~b) | (~a & b)``.
"""

from __future__ import annotations

import random
from typing import Callable

from .netlist import Netlist, parse_bench

Signal = tuple[int, bool]

C17_BENCH = """\
# c17
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
"""


class CircuitBuilder:
    def __init__(self):
        self.net = Netlist()
        self._count = 0

    def input(self, name: str) -> Signal:
        return (self.net.add_pi(name), False)

    def inputs(self, prefix: str, n: int) -> list[Signal]:
        return [self.input(f"{prefix}{i}") for i in range(n)]

    def output(self, name: str, sig: Signal):
        self.net.add_po(name, *sig)

    def gate(self, func: str, *ins: Signal) -> Signal:
        self._count += 1
        return (self.net.add_gate(func, f"n{self._count}", ins), False)

    def AND(self, a: Signal, b: Signal) -> Signal:
        return self.gate("AND", a, b)

    def OR(self, a: Signal, b: Signal) -> Signal:
        return self.gate("OR", a, b)

    def MAJ(self, a: Signal, b: Signal, c: Signal) -> Signal:
        return self.gate("MAJ3", a, b, c)

    @staticmethod
    def NOT(a: Signal) -> Signal:
        return (a[0], not a[1])

    def XOR(self, a: Signal, b: Signal) -> Signal:
        return self.OR(self.AND(a, self.NOT(b)), self.AND(self.NOT(a), b))

    def MUX(self, s: Signal, a: Signal, b: Signal) -> Signal:
        """``b`` when ``s`` is high, else ``a``."""
        return self.OR(self.AND(self.NOT(s), a), self.AND(s, b))

    def tree(self, op: Callable[[Signal, Signal], Signal], sigs: list[Signal]) -> Signal:
        sigs = list(sigs)
        while len(sigs) > 1:
            nxt = [op(sigs[i], sigs[i + 1]) for i in range(0, len(sigs) - 1, 2)]
            if len(sigs) % 2:
                nxt.append(sigs[-1])
            sigs = nxt
        return sigs[0]

    def half_adder(self, a: Signal, b: Signal) -> tuple[Signal, Signal]:
        return self.XOR(a, b), self.AND(a, b)

    def full_adder(self, a: Signal, b: Signal, c: Signal,
                   majority: bool = True) -> tuple[Signal, Signal]:
        t = self.XOR(a, b)
        s = self.XOR(t, c)
        if majority:
            return s, self.MAJ(a, b, c)
        return s, self.OR(self.AND(a, b), self.AND(c, t))

    def add(self, terms: list[Signal], majority: bool = True) -> tuple[Signal, Signal | None]:
        """Sum and carry of one, two or three same-weight bits."""
        if len(terms) == 3:
            return self.full_adder(*terms, majority=majority)
        if len(terms) == 2:
            return self.half_adder(*terms)
        return terms[0], None


def c17() -> Netlist:
    return parse_bench(C17_BENCH)


def ripple_adder(bits: int = 32) -> Netlist:
    cb = CircuitBuilder()
    a, b = cb.inputs("a", bits), cb.inputs("b", bits)
    c = cb.input("cin")
    for i in range(bits):
        s, c = cb.full_adder(a[i], b[i], c)
        cb.output(f"s{i}", s)
    cb.output("cout", c)
    return cb.net


def array_multiplier(bits: int = 16, majority: bool = False) -> Netlist:
    """Carry-save array multiplier with a ripple final stage. With AND/OR
    carries, 16 bits gives about 2400 gates (c6288 has 2416)."""
    cb = CircuitBuilder()
    a, b = cb.inputs("a", bits), cb.inputs("b", bits)
    pp = [[cb.AND(a[i], b[j]) for i in range(bits)] for j in range(bits)]
    # after row j, total[i] has weight i + j and carry[i] has weight i + j + 1
    total: list[Signal | None] = list(pp[0])
    carry: list[Signal | None] = [None] * bits
    cb.output("p0", total[0])
    for j in range(1, bits):
        new_total, new_carry = [], []
        for i in range(bits):
            terms = [pp[j][i]]
            if i + 1 < bits and total[i + 1] is not None:
                terms.append(total[i + 1])
            if carry[i] is not None:
                terms.append(carry[i])
            s, c = cb.add(terms, majority)
            new_total.append(s)
            new_carry.append(c)
        total, carry = new_total, new_carry
        cb.output(f"p{j}", total[0])
    c = None
    for i in range(bits):
        terms = [t for t in (total[i + 1] if i + 1 < bits else None, carry[i], c) if t is not None]
        if i == bits - 1:
            # top column: its carry is provably zero
            s = cb.tree(cb.XOR, terms)
        else:
            s, c = cb.add(terms, majority)
        cb.output(f"p{bits + i}", s)
    return cb.net


def priority_controller(channels: int = 9, buses: int = 3) -> Netlist:
    """c432-class interrupt controller: buses in fixed priority order, each
    with ``channels`` request lines gated by a shared enable mask. Outputs a
    grant flag per bus and the index of the winning channel."""
    cb = CircuitBuilder()
    enable = cb.inputs("e", channels)
    reqs = [[cb.AND(r, e) for r, e in zip(cb.inputs(f"r{k}_", channels), enable)]
            for k in range(buses)]
    blocked = None
    winners = []
    for k, req in enumerate(reqs):
        any_req = cb.tree(cb.OR, req)
        grant = any_req if blocked is None else cb.AND(any_req, cb.NOT(blocked))
        cb.output(f"grant{k}", grant)
        blocked = any_req if blocked is None else cb.OR(blocked, any_req)
        winners.append((grant, req))
    width = max(1, (channels - 1).bit_length())
    # channel i wins inside the granted bus when no lower index is active
    firsts = []
    for grant, req in winners:
        seen = req[0]
        row = [cb.AND(grant, req[0])]
        for i in range(1, channels):
            row.append(cb.AND(grant, cb.AND(req[i], cb.NOT(seen))))
            if i + 1 < channels:
                seen = cb.OR(seen, req[i])
        firsts.append(row)
    chosen = [cb.tree(cb.OR, [row[i] for row in firsts]) for i in range(channels)]
    for bit in range(width):
        members = [chosen[i] for i in range(channels) if i >> bit & 1]
        cb.output(f"chan{bit}", cb.tree(cb.OR, members))
    return cb.net


def hamming_corrector(data_bits: int = 32, double_detect: bool = False) -> Netlist:
    """Single-error-correcting decoder (c499-class); with ``double_detect`` an
    overall parity bit adds double-error detection (c1908-class)."""
    cb = CircuitBuilder()
    r = 1
    while (1 << r) < data_bits + r + 1:
        r += 1
    data = cb.inputs("d", data_bits)
    check = cb.inputs("c", r)
    positions = [p for p in range(1, data_bits + r + 1) if p & (p - 1)][:data_bits]
    syndrome = []
    for k in range(r):
        members = [data[i] for i, p in enumerate(positions) if p >> k & 1]
        syndrome.append(cb.tree(cb.XOR, members + [check[k]]))
    for i, p in enumerate(positions):
        lits = [s if p >> k & 1 else cb.NOT(s) for k, s in enumerate(syndrome)]
        cb.output(f"o{i}", cb.XOR(data[i], cb.tree(cb.AND, lits)))
    nonzero = cb.tree(cb.OR, syndrome)
    if double_detect:
        overall = cb.tree(cb.XOR, data + check + [cb.input("cp")])
        cb.output("single", cb.AND(nonzero, overall))
        cb.output("double", cb.AND(nonzero, cb.NOT(overall)))
    else:
        cb.output("error", nonzero)
    return cb.net


def alu(bits: int = 8) -> Netlist:
    """c880-class ALU: add/subtract, AND, OR, XOR selected by two bits, with
    carry, zero and less-than flags."""
    cb = CircuitBuilder()
    a, b = cb.inputs("a", bits), cb.inputs("b", bits)
    sub, s0, s1 = cb.input("sub"), cb.input("s0"), cb.input("s1")
    c = sub
    out = []
    for i in range(bits):
        bi = cb.XOR(b[i], sub)
        total, c = cb.full_adder(a[i], bi, c)
        logic_and = cb.AND(a[i], b[i])
        logic_or = cb.OR(a[i], b[i])
        logic_xor = cb.XOR(a[i], b[i])
        out.append(cb.MUX(s1, cb.MUX(s0, total, logic_and), cb.MUX(s0, logic_or, logic_xor)))
        cb.output(f"f{i}", out[-1])
    cb.output("carry", c)
    cb.output("zero", cb.NOT(cb.tree(cb.OR, out)))
    # unsigned a < b from a borrow chain
    lt = None
    for i in range(bits):
        bit_lt = cb.AND(cb.NOT(a[i]), b[i])
        lt = bit_lt if lt is None else cb.MAJ(cb.NOT(a[i]), b[i], lt)
    cb.output("lt", lt)
    return cb.net


def random_logic(n_inputs: int = 16, n_gates: int = 200, seed: int = 0,
                 window: int = 24) -> Netlist:
    """Random majority/AND/OR network. Fanins are drawn from the most recent
    ``window`` signals so depth grows with size; every sink becomes an
    output."""
    rng = random.Random(seed)
    cb = CircuitBuilder()
    sigs = cb.inputs("x", n_inputs)
    for _ in range(n_gates):
        func = rng.choice(["MAJ3", "AND", "OR"])
        arity = 3 if func == "MAJ3" else 2
        pool = sigs[-window:]
        picks = rng.sample(pool, arity)
        sigs.append(cb.gate(func, *[(s, rng.random() < 0.3) for s, _ in picks]))
    fo = cb.net.fanouts()
    sinks = [i for i, f in enumerate(fo) if not f and i >= n_inputs]
    for i in sinks:
        cb.output(f"y{i}", (i, False))
    return cb.net


# name -> (builder, description); sizes chosen to echo the ISCAS'85 originals
BENCHMARKS: dict[str, tuple[Callable[[], Netlist], str]] = {
    "c17": (c17, "the ISCAS'85 c17 netlist"),
    "c432x": (priority_controller, "27-channel priority interrupt controller"),
    "c499x": (hamming_corrector, "32-bit single-error corrector"),
    "c880x": (alu, "8-bit ALU with flags"),
    "c1908x": (lambda: hamming_corrector(16, double_detect=True), "16-bit SEC/DED decoder"),
    "add32": (ripple_adder, "32-bit ripple-carry adder"),
    "mult8": (lambda: array_multiplier(8), "8x8 array multiplier"),
    "rand400": (lambda: random_logic(24, 400, seed=7), "random majority network"),
}

LARGE_BENCHMARKS: dict[str, tuple[Callable[[], Netlist], str]] = {
    "c6288x": (array_multiplier, "16x16 array multiplier"),
}


def load(name: str) -> Netlist:
    table = {**BENCHMARKS, **LARGE_BENCHMARKS}
    if name not in table:
        raise KeyError(f"unknown benchmark {name!r}; choose from {', '.join(sorted(table))}")
    return table[name][0]()
