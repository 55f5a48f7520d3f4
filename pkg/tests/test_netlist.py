import random

import pytest

from aqfp_bsopt.netlist import (Kind, Netlist, NetlistError, absorb_inverters, from_json,
                                isomorphic, output_functions, parse_bench, parse_levels, serialize,
                                to_json, validate)
from aqfp_bsopt.corpus import C17_BENCH, random_logic
from conftest import diamond


def test_smallest_file():
    net = parse_bench("INPUT(a)\nINPUT(b)\nc = AND(a,b)\nOUTPUT(c)")
    counts = net.count_kinds()
    assert counts[Kind.GATE] == 1 and counts[Kind.PI] == 2 and counts[Kind.PO] == 1
    (g,) = net.nodes_of(Kind.GATE)
    assert net.funcs[g] == "AND" and len(net.fanins[g]) == 2
    assert validate(net) == []


def test_undefined_signal():
    with pytest.raises(NetlistError, match="undefined"):
        parse_bench("c = AND(a,a)")


def test_cycle():
    with pytest.raises(NetlistError, match="cycl"):
        parse_bench("a = BUF(b)\nb = BUF(a)")


def test_syntax_error_has_line_number():
    with pytest.raises(NetlistError) as exc:
        parse_bench("INPUT(a)\nINPUT(b)\nthis is not a statement\n")
    assert exc.value.line == 3


def test_maj3_and_comments():
    net = parse_bench("# header\nINPUT(a)\nINPUT(b)\nINPUT(c)\nm = MAJ3(a, b, ~c)  # trailing\nOUTPUT(m)\n")
    (g,) = net.nodes_of(Kind.GATE)
    assert net.funcs[g] == "MAJ3"
    assert [inv for _, inv in net.fanins[g]] == [False, False, True]


def test_nand_lowering_preserves_function():
    text = "INPUT(a)\nINPUT(b)\nINPUT(c)\nx = NAND(a, b, c)\ny = XOR(a, b)\nz = NOR(a, c)\n" \
           "OUTPUT(x)\nOUTPUT(y)\nOUTPUT(z)\n"
    net = parse_bench(text)
    assert not net.nodes_of(Kind.NOT)
    funcs = output_functions(net)
    # inputs ordered by name: a is bit 0, b bit 1, c bit 2 of the pattern index
    for j in range(8):
        a, b, c = j & 1, j >> 1 & 1, j >> 2 & 1
        assert funcs["x"] >> j & 1 == 1 - (a & b & c)
        assert funcs["y"] >> j & 1 == a ^ b
        assert funcs["z"] >> j & 1 == 1 - (a | c)


def test_output_binding():
    net = parse_bench("INPUT(a)\nINPUT(b)\ng = AND(a, b)\nOUTPUT(y) = ~g\n")
    (po,) = net.pos
    assert net.names[po] == "y"
    assert net.fanins[po] == [(net.names.index("g"), True)]


def test_c17_function():
    net = parse_bench(C17_BENCH)
    f = output_functions(net)
    names = sorted(net.names[i] for i in net.pis)  # 1, 2, 3, 6, 7
    for j in range(32):
        v = {n: j >> k & 1 for k, n in enumerate(names)}
        n10 = 1 - (v["1"] & v["3"])
        n11 = 1 - (v["3"] & v["6"])
        n16 = 1 - (v["2"] & n11)
        n19 = 1 - (n11 & v["7"])
        assert f["22"] >> j & 1 == 1 - (n10 & n16)
        assert f["23"] >> j & 1 == 1 - (n16 & n19)


# inverters -----------------------------------------------------------------


def _with_nots(*shape) -> Netlist:
    net = Netlist()
    a = net.add_pi("a")
    b = net.add_pi("b")
    prev = a
    for k in range(shape[0]):
        prev = net.add_node(Kind.NOT, f"n{k}", [(prev, False)])
    g = net.add_gate("AND", "g", [prev, b])
    net.add_po("y", g)
    return net


def test_single_inverter_absorbed():
    out = absorb_inverters(_with_nots(1))
    g = out.names.index("g")
    assert not out.nodes_of(Kind.NOT)
    assert out.fanins[g][0] == (out.names.index("a"), True)


def test_double_negation_cancels():
    out = absorb_inverters(_with_nots(2))
    g = out.names.index("g")
    assert out.fanins[g][0] == (out.names.index("a"), False)
    assert len(out) == 4


def test_inverter_with_two_fanouts():
    net = Netlist()
    a, b, c = (net.add_pi(x) for x in "abc")
    n = net.add_node(Kind.NOT, "n", [(a, False)])
    g1 = net.add_gate("AND", "g1", [n, b])
    g2 = net.add_gate("OR", "g2", [n, c])
    net.add_po("y1", g1)
    net.add_po("y2", g2)
    out = absorb_inverters(net)
    assert len(out) == len(net) - 1
    ai = out.names.index("a")
    assert out.fanins[out.names.index("g1")][0] == (ai, True)
    assert out.fanins[out.names.index("g2")][0] == (ai, True)
    assert output_functions(out) == output_functions(net)


def _random_with_nots(seed: int) -> Netlist:
    rng = random.Random(seed)
    net = Netlist()
    sigs = [net.add_pi(f"x{i}") for i in range(rng.randint(2, 6))]
    for k in range(rng.randint(3, 12)):
        if rng.random() < 0.3:
            sigs.append(net.add_node(Kind.NOT, f"n{k}", [(rng.choice(sigs), False)]))
            continue
        func = rng.choice(["AND", "OR", "MAJ3"])
        ar = 3 if func == "MAJ3" else 2
        if len(sigs) < ar:
            continue
        pins = [(s, rng.random() < 0.3) for s in rng.sample(sigs, ar)]
        sigs.append(net.add_gate(func, f"g{k}", pins))
    net.add_po("y", sigs[-1])
    return net


@pytest.mark.parametrize("seed", range(30))
def test_absorb_preserves_function(seed):
    net = _random_with_nots(seed)
    out = absorb_inverters(net)
    assert not out.nodes_of(Kind.NOT)
    assert len(out) == len(net) - len(net.nodes_of(Kind.NOT))
    assert output_functions(out) == output_functions(net)


# validation ----------------------------------------------------------------


def test_valid_diamond():
    assert validate(diamond()) == []


def test_splitter_with_one_fanout():
    net = diamond()
    s = net.add_node(Kind.SPL, "s", [(0, False)])
    net.fanins[net.names.index("g1")][0] = (s, False)
    msgs = [v.message for v in validate(net)]
    assert any("splitter fanout < 2" in m for m in msgs)


def test_buffer_with_two_fanouts():
    net = diamond()
    buf = net.add_node(Kind.BUF, "b0", [(1, False)])
    net.fanins[net.names.index("g1")][1] = (buf, False)
    net.fanins[net.names.index("g2")][1] = (buf, False)
    assert any("buffer fanout" in v.message for v in validate(net))


MUTATIONS = {
    "wrong arity": lambda n: n.fanins[n.names.index("g1")].pop(),
    "po fanout": lambda n: n.fanins[n.names.index("g2")].__setitem__(1, (n.pos[0], False)),
    "pi fanin": lambda n: n.fanins[0].append((1, False)),
    "cycle": lambda n: n.fanins[n.names.index("g1")].__setitem__(0, (n.names.index("g3"), False)),
    "dangling ref": lambda n: n.fanins[n.names.index("g3")].__setitem__(0, (99, False)),
    "duplicate edge": lambda n: n.fanins[n.names.index("g3")].__setitem__(1, (n.names.index("g1"), False)),
}


@pytest.mark.parametrize("kind", sorted(MUTATIONS))
def test_each_injected_violation_is_caught(kind):
    net = diamond()
    MUTATIONS[kind](net)
    assert validate(net)


# serialization -------------------------------------------------------------


def test_diamond_round_trip():
    net = diamond()
    assert isomorphic(parse_bench(serialize(net)), net)


def test_empty_netlist_is_header_only():
    text = serialize(Netlist())
    assert all(line.startswith("#") for line in text.splitlines())
    assert len(parse_bench(text)) == 0


def test_serialize_is_deterministic():
    net = random_logic(8, 40, seed=3)
    outs = {serialize(net) for _ in range(3)}
    assert len(outs) == 1


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_random(seed):
    net = random_logic(6, 30, seed=seed)
    back = parse_bench(serialize(net))
    assert isomorphic(back, net)
    assert output_functions(back) == output_functions(net)


def test_levels_round_trip_text_and_json():
    net = diamond()
    levels = {i: i for i in range(len(net))}
    text = serialize(net, levels)
    back = parse_bench(text)
    got = parse_levels(text, back)
    assert {back.names[i]: v for i, v in got.items()} == {net.names[i]: v for i, v in levels.items()}
    net2, lv2 = from_json(to_json(net, levels))
    assert isomorphic(net2, net) and lv2 == levels


def test_malformed_json():
    with pytest.raises(NetlistError):
        from_json('{"nodes": [{"id": 3}]}')
