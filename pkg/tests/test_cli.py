import csv
import io
import json
import subprocess
import sys

import pytest

from aqfp_bsopt.cli import main
from aqfp_bsopt.corpus import c17, random_logic
from aqfp_bsopt.netlist import parse_bench, serialize


@pytest.fixture
def c17_file(tmp_path):
    path = tmp_path / "c17.bench"
    path.write_text(serialize(c17()))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_optimize_writes_netlist_and_metrics(tmp_path, c17_file):
    out = tmp_path / "res" / "out.bench"
    assert run("optimize", "--skip", 1, "--max-fanout", 4, "--seed", 7, c17_file, "-o", out) == 0
    m = json.loads((tmp_path / "res" / "out.metrics.json").read_text())
    assert {"benchmark", "skip", "buffers", "splitters", "total", "iterations",
            "runtime_ms"} <= m.keys()
    assert m["benchmark"] == "c17" and m["skip"] == 1 and m["seed"] == 7
    assert m["total"] == m["buffers"] + m["splitters"] and m["exact"] is False
    assert "# level OUTPUT(22) = " in out.read_text()
    assert run("verify", "--skip", 1, c17_file, out) == 0


@pytest.mark.parametrize("flags", [["--skip", "5"], ["--lp", "fancy"]])
def test_rejected_flag_values(c17_file, flags, capsys):
    with pytest.raises(SystemExit) as e:
        main(["optimize", str(c17_file), *flags])
    assert e.value.code == 1
    assert "invalid choice" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [["--max-fanout", "1"], ["--max-iters", "0"]])
def test_out_of_range_values(c17_file, flags, capsys):
    assert main(["optimize", str(c17_file), *flags]) == 1
    assert "error" in capsys.readouterr().err


def test_exact_lp_is_flagged(tmp_path):
    src = tmp_path / "r30.bench"
    src.write_text(serialize(random_logic(6, 30, seed=2)))
    out = tmp_path / "r30_out.bench"
    assert run("optimize", "--lp", "exact", src, "-o", out) == 0
    assert json.loads((tmp_path / "r30_out.metrics.json").read_text())["exact"] is True


def test_json_format_and_explicit_metrics_path(tmp_path, c17_file):
    out, met = tmp_path / "o.json", tmp_path / "m" / "x.json"
    assert run("optimize", c17_file, "-o", out, "--format", "json", "--metrics", met) == 0
    assert json.loads(out.read_text())
    assert json.loads(met.read_text())["stop_reason"]
    assert run("verify", c17_file, out) == 0


def test_metrics_go_to_stderr_without_output_path(c17_file, capsys):
    assert run("optimize", c17_file) == 0
    cap = capsys.readouterr()
    assert parse_bench(cap.out)
    assert json.loads(cap.err.strip().splitlines()[-1])["method"] == "optimize"


def test_verify_flags_corruption(tmp_path, c17_file, capsys):
    out = tmp_path / "o.bench"
    run("optimize", "--skip", 1, c17_file, "-o", out)
    capsys.readouterr()
    text = out.read_text()
    line = next(l for l in text.splitlines() if l.startswith("19 = "))
    bad = tmp_path / "bad.bench"
    bad.write_text(text.replace(line, line.replace("~", "", 1)))
    assert run("verify", "--skip", 1, c17_file, bad) == 4
    assert "equivalence" in capsys.readouterr().out


def test_verify_json_report(tmp_path, c17_file, capsys):
    out = tmp_path / "o.bench"
    run("optimize", "--skip", 2, c17_file, "-o", out)
    capsys.readouterr()
    # checked at a tighter span than it was built for
    assert run("verify", "--skip", 0, "--json", c17_file, out) == 4
    rep = json.loads(capsys.readouterr().out)
    assert set(rep) == {"ok", "phase_legality", "structure", "equivalent"}
    assert rep["phase_legality"] and rep["equivalent"]


def test_missing_and_malformed_inputs(tmp_path, c17_file):
    assert run("verify", tmp_path / "nope.bench", c17_file) == 2
    broken = tmp_path / "broken.bench"
    broken.write_text("INPUT(a)\nx = FROB(a)\n")
    assert run("optimize", broken) == 2
    assert run("verify", c17_file, c17_file) == 2  # no levels


def test_reduce(tmp_path, c17_file):
    base = tmp_path / "c17_s0.bench"
    run("optimize", c17_file, "-o", base)
    red = tmp_path / "c17_red.bench"
    assert run("reduce", "--skip", 2, base, "-o", red, "--benchmark", "c17") == 0
    m = json.loads((tmp_path / "c17_red.metrics.json").read_text())
    assert m["method"] == "chain_reduction" and m["skip"] == 2
    assert m["total"] <= json.loads((tmp_path / "c17_s0.metrics.json").read_text())["total"]
    assert run("verify", "--skip", 2, c17_file, red) == 0
    # a skip-3 solution is not a legal skip-0 starting point
    s3 = tmp_path / "s3.bench"
    run("optimize", "--skip", 3, c17_file, "-o", s3)
    assert run("reduce", "--skip", 3, s3) == 2


# report --------------------------------------------------------------------------


def _metrics(d, bench, skip, total, method="optimize"):
    name = f"{bench}_{method}_{skip}.metrics.json"
    (d / name).write_text(json.dumps({"benchmark": bench, "method": method, "skip": skip,
                                      "buffers": total - 1, "splitters": 1, "total": total}))


def _report(d, capsys):
    assert run("report", d) == 0
    return list(csv.reader(io.StringIO(capsys.readouterr().out)))


def test_report_rows_and_savings(tmp_path, capsys):
    for bench, t0, t1 in (("a", 100, 50), ("b", 200, 150)):
        _metrics(tmp_path, bench, 0, t0)
        _metrics(tmp_path, bench, 1, t1)
    rows = _report(tmp_path, capsys)
    assert rows[0] == ["benchmark", "method", "skip", "buffers", "splitters", "total"]
    assert len(rows) == 1 + 4 + 1
    # per-circuit savings 50% and 25% average to 37.5%
    assert rows[-1] == ["average_savings", "optimize", "1", "", "", "37.5"]


def test_report_savings_vs_chain(tmp_path, capsys):
    _metrics(tmp_path, "a", 0, 100)
    _metrics(tmp_path, "a", 2, 40)
    _metrics(tmp_path, "a", 2, 50, method="chain_reduction")
    rows = _report(tmp_path, capsys)
    assert ["average_savings_vs_chain", "optimize", "2", "", "", "20.0"] in rows


def test_report_empty_dir_and_errors(tmp_path, capsys):
    assert _report(tmp_path, capsys) == [["benchmark", "method", "skip", "buffers",
                                          "splitters", "total"]]
    (tmp_path / "x.metrics.json").write_text("{not json")
    assert run("report", tmp_path) == 2
    assert run("report", tmp_path / "missing") == 2


def test_generate_and_determinism(tmp_path):
    g = tmp_path / "c17.bench"
    assert run("generate", "c17", "-o", g) == 0
    outs = []
    for k in range(2):
        o = tmp_path / f"o{k}.bench"
        run("optimize", "--skip", 1, g, "-o", o)
        outs.append(o.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point(c17_file):
    r = subprocess.run([sys.executable, "-m", "aqfp_bsopt", "optimize", "--skip", "9",
                        str(c17_file)], capture_output=True, text=True)
    assert r.returncode == 1 and "usage" in r.stderr
