"""Independent checks on optimized netlists, plus the buffer-chain-reduction
baseline.

Nothing here reuses the optimizer's graph surgery: the collapse and chain
walks are written against the netlist data model directly.
"""

from __future__ import annotations

import json
from collections import Counter

from .config import PhaseConfig
from .netlist import (Kind, Netlist, Violation, absorb_inverters, exhaustive_patterns, simulate,
                      validate)

SIM_PI_LIMIT = 12


def check_phase_legality(net: Netlist, levels: dict[int, int], cfg: PhaseConfig) -> list[Violation]:
    span = cfg.span
    out = []
    for i in range(len(net)):
        if i not in levels:
            out.append(Violation(i, f"{net.names[i]}: no level assigned"))
    if out:
        return out
    for d, pins in enumerate(net.fanins):
        for s, _ in pins:
            delta = levels[d] - levels[s]
            if not 1 <= delta <= span:
                out.append(Violation(d, f"edge {net.names[s]} -> {net.names[d]} spans {delta} "
                                        f"levels (allowed 1..{span})"))
    po_levels = {levels[p] for p in net.pos}
    if len(po_levels) > 1:
        out.append(Violation(net.pos[0], f"outputs sit on different levels {sorted(po_levels)}"))
    for p in net.pis:
        if levels[p] != cfg.pi_level:
            out.append(Violation(p, f"input {net.names[p]} at level {levels[p]}, expected {cfg.pi_level}"))
    return out


def check_structure(net: Netlist, max_fanout: int) -> list[Violation]:
    """Netlist-core validation plus post-insertion fanout rules: only
    splitters may drive more than one pin, and at most ``max_fanout``."""
    out = list(validate(net))
    fo = Counter(s for pins in net.fanins for s, _ in pins)
    for i, k in enumerate(net.kinds):
        n = fo[i]
        if k is Kind.SPL:
            if not 2 <= n <= max_fanout:
                out.append(Violation(i, f"splitter {net.names[i]} drives {n} pins (allowed 2..{max_fanout})"))
        elif k is Kind.BUF and n != 1:
            out.append(Violation(i, f"buffer {net.names[i]} drives {n} pins"))
        elif n > 1:
            out.append(Violation(i, f"{k.value} {net.names[i]} drives {n} pins without a splitter"))
        if k is Kind.NOT:
            out.append(Violation(i, f"explicit inverter {net.names[i]} left in netlist"))
    return out


def _collapsed_fanins(net: Netlist) -> dict[tuple[Kind, str], list[tuple[tuple[Kind, str], bool]]]:
    """Per logical node (keyed by kind namespace and name), its fanins traced
    back through buffers and splitters with composed polarity."""
    def key(i):
        return (Kind.PO if net.kinds[i] is Kind.PO else Kind.GATE, net.names[i])

    out = {}
    for i, k in enumerate(net.kinds):
        if k in (Kind.BUF, Kind.SPL):
            continue
        pins = []
        for s, inv in net.fanins[i]:
            seen = 0
            while net.kinds[s] in (Kind.BUF, Kind.SPL):
                (s, flip), = net.fanins[s]
                inv ^= flip
                seen += 1
                if seen > len(net):
                    raise ValueError("buffer/splitter cycle")
            pins.append((key(s), inv))
        out[key(i)] = (k, net.funcs[i], sorted(pins, key=lambda p: (p[0][0].value, p[0][1], p[1])))
    return out


def _outputs_by_name(net: Netlist, patterns_by_name: dict[str, int], width: int) -> dict[str, int]:
    pats = {i: patterns_by_name[net.names[i]] for i in net.pis}
    val = simulate(net, pats, width)
    return {net.names[p]: val[p] for p in net.pos}


def check_equivalence(original: Netlist, optimized: Netlist) -> bool:
    """Collapse buffers/splitters and compare the gate graphs by name with
    identical edge polarities; for at most 12 inputs also compare every
    output under exhaustive simulation."""
    if original.nodes_of(Kind.NOT):
        original = absorb_inverters(original)
    try:
        a, b = _collapsed_fanins(original), _collapsed_fanins(optimized)
    except ValueError:
        return False
    if a != b:
        return False
    if len(original.pis) <= SIM_PI_LIMIT:
        names = sorted(original.names[i] for i in original.pis)
        ids = list(range(len(names)))
        pats, width = exhaustive_patterns(ids)
        by_name = {n: pats[j] for j, n in enumerate(names)}
        if _outputs_by_name(original, by_name, width) != _outputs_by_name(optimized, by_name, width):
            return False
    return True


def verify_solution(original: Netlist, net: Netlist, levels: dict[int, int],
                    cfg: PhaseConfig) -> dict:
    """Every check at once, as a JSON-ready report."""
    legality = check_phase_legality(net, levels, cfg)
    structure = check_structure(net, cfg.max_fanout)
    equivalent = check_equivalence(original, net)
    return {
        "ok": not legality and not structure and equivalent,
        "phase_legality": [str(v) for v in legality],
        "structure": [str(v) for v in structure],
        "equivalent": equivalent,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2)


def report_text(report: dict) -> str:
    lines = []
    for section in ("phase_legality", "structure"):
        for v in report[section]:
            lines.append(f"{section}: {v}")
    if not report["equivalent"]:
        lines.append("equivalence: optimized netlist does not match the original")
    return "\n".join(lines) if lines else "ok"


def buffer_chain_reduce(net: Netlist, levels: dict[int, int],
                        target: PhaseConfig) -> tuple[Netlist, dict[int, int]]:
    """Shorten each maximal chain of single-fanout buffers to the fewest
    buffers the target span needs, keeping every other node's level.

    A chain from driver ``u`` to sink ``v`` spanning ``delta`` levels becomes
    ``ceil(delta / span) - 1`` buffers at ``L_u + span``, ``+ 2*span``, ...
    """
    span = target.span
    fo = [[] for _ in net.kinds]
    for d, pins in enumerate(net.fanins):
        for p, (s, _) in enumerate(pins):
            fo[s].append((d, p))

    def chain_buffer(i):
        return net.kinds[i] is Kind.BUF and len(fo[i]) == 1

    out = Netlist()
    remap = {}
    lv = {}
    keep = [i for i in range(len(net)) if not chain_buffer(i)]
    for i in keep:
        remap[i] = out.add_node(net.kinds[i], net.names[i], [], net.funcs[i])
        lv[remap[i]] = levels[i]
    used = set(net.names)
    counter = 0
    for i in keep:
        pins = []
        for s, inv in net.fanins[i]:
            while chain_buffer(s):
                (s, flip), = net.fanins[s]
                inv ^= flip
            delta = levels[i] - levels[s]
            drv = remap[s]
            for j in range(1, max(0, -(-delta // span) - 1) + 1):
                while f"buf{counter}" in used:
                    counter += 1
                name = f"buf{counter}"
                used.add(name)
                b = out.add_node(Kind.BUF, name, [(drv, False)])
                lv[b] = levels[s] + j * span
                drv = b
            pins.append((drv, inv))
        out.fanins[remap[i]] = pins
    return out, lv
