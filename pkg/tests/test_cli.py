import json

import numpy as np
import pytest

from conftest import PROGRAMS_DIR, load_program
from fggc import fgg as fggmod
from fggc.cli import main
from fggc.translate import compile_source


def _p(name, kind="ppl"):
    return str(PROGRAMS_DIR / f"{name}.{kind}")


def _params(name):
    return str(PROGRAMS_DIR / f"{name}.params.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compile_to_stdout(capsys):
    code, out, err = run(capsys, "compile", _p("pcfg"), "--params", _params("pcfg"))
    assert code == 0
    g = fggmod.loads(out)
    assert len(g.rules) == 3


def test_compile_writes_sidecar(tmp_path, capsys):
    out_path = tmp_path / "pcfg.json"
    code, out, err = run(capsys, "compile", _p("pcfg"), "--params",
                         _params("pcfg"), "--out", str(out_path))
    assert code == 0
    g = fggmod.loads(out_path.read_text())
    assert len(g.rules) == 3
    side = json.loads((tmp_path / "pcfg.json.provenance.json").read_text())
    assert "provenance" in side and "passes" in side


def test_compile_passes_none(capsys):
    code, out, _ = run(capsys, "compile", _p("pcfg"), "--params",
                       _params("pcfg"), "--passes", "none")
    assert code == 0
    g = fggmod.loads(out)
    assert len(g.rules) > 3


def test_compile_unknown_pass(capsys):
    code, _, err = run(capsys, "compile", _p("pcfg"), "--params",
                       _params("pcfg"), "--passes", "bogus")
    assert code == 2
    assert "bogus" in err


def test_compile_broken_source(tmp_path, capsys):
    bad = tmp_path / "bad.ppl"
    bad.write_text("let x = in x")
    code, _, err = run(capsys, "compile", str(bad))
    assert code == 2
    assert "error" in err


def test_compile_missing_file(capsys):
    code, _, err = run(capsys, "compile", "no-such-file.ppl")
    assert code == 2


def test_infer_pcfg(capsys):
    code, out, _ = run(capsys, "infer", _p("pcfg"), "--params", _params("pcfg"))
    assert code == 0
    assert "status: converged" in out
    (value_line,) = [l for l in out.splitlines() if l.startswith("unit:")]
    assert abs(float(value_line.split(":")[1]) - 1.0) < 1e-6


def test_infer_divergent_exit_code(tmp_path, capsys):
    params = tmp_path / "div.json"
    params.write_text(json.dumps(
        {"params": {"p": {"S": {"inl a": 0.2, "inr (S,S)": 1.8}}}}))
    code, out, _ = run(capsys, "infer", _p("pcfg"), "--params", str(params))
    assert code == 3
    assert "divergent" in out


def test_infer_from_compiled_json_matches_source(tmp_path, capsys):
    out_path = tmp_path / "g.json"
    run(capsys, "compile", _p("pcfg"), "--params", _params("pcfg"),
        "--out", str(out_path))
    code1, out1, _ = run(capsys, "infer", str(out_path))
    code2, out2, _ = run(capsys, "infer", _p("pcfg"), "--params", _params("pcfg"))
    assert code1 == code2 == 0
    assert out1 == out2  # byte-identical, same numbers to the last digit


def test_infer_max_iter_one(tmp_path, capsys):
    import sys
    sys.path.insert(0, str(PROGRAMS_DIR.parent))
    from fixtures import quadratic_fgg
    path = tmp_path / "quad.json"
    path.write_text(fggmod.dumps(quadratic_fgg()))
    code, out, _ = run(capsys, "infer", str(path), "--max-iter", "1")
    assert code == 0
    (line,) = [l for l in out.splitlines() if l.startswith("()")]
    assert float(line.split(":")[1]) == pytest.approx(0.7)
    assert "status: max-iter" in out


def test_twelve_significant_digits(capsys):
    code, out, _ = run(capsys, "infer", _p("observe"), "--params",
                       _params("observe"))
    assert code == 0
    line = [l for l in out.splitlines() if l.startswith("true:")][0]
    # 0.4 accumulates no error here; printed value parses back exactly
    assert float(line.split(":")[1]) == pytest.approx(0.4, abs=1e-12)


def test_compare_clean(capsys):
    code, out, _ = run(capsys, "compare", _p("pcfg"), "--params",
                       _params("pcfg"), "--depth", "4")
    assert code == 0
    assert "all comparisons within tolerance" in out


def test_compare_trivial_program(tmp_path, capsys):
    src = tmp_path / "t.ppl"
    src.write_text("true\n")
    code, out, _ = run(capsys, "compare", str(src))
    assert code == 0


def test_compare_corrupted_grammar_exit_4(tmp_path, capsys):
    source, params = load_program("pcfg")
    cu = compile_source(source, params)
    g = cu.fgg
    # corrupt one factor table
    name = sorted(g.factors)[0]
    g.factors[name].weights[...] = g.factors[name].weights * 3.0 + 0.1
    bad = tmp_path / "bad.json"
    bad.write_text(fggmod.dumps(g))
    code, _, err = run(capsys, "compare", _p("pcfg"), "--params",
                       _params("pcfg"), "--fgg", str(bad))
    assert code == 4
    assert "MISMATCH" in err


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", _p("pcfg"), "--params",
                       _params("pcfg"), "--depth", "3", "--nonterminal", "gen")
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("height")]
    assert lines[0].endswith("1 tree(s)")
    assert lines[1].endswith("2 tree(s)")
    assert lines[2].endswith("5 tree(s)")


def test_render_dot(capsys):
    code, out, _ = run(capsys, "render", _p("pcfg"), "--params", _params("pcfg"))
    assert code == 0
    assert out.count("subgraph") == 3


def test_render_latex(capsys):
    code, out, _ = run(capsys, "render", _p("pcfg"), "--params",
                       _params("pcfg"), "--format", "latex")
    assert code == 0
    assert out.startswith("\\documentclass")


def test_render_deterministic(capsys):
    _, a, _ = run(capsys, "render", _p("pcfg"), "--params", _params("pcfg"))
    _, b, _ = run(capsys, "render", _p("pcfg"), "--params", _params("pcfg"))
    assert a == b


def test_compile_deterministic(capsys):
    _, a, _ = run(capsys, "compile", _p("pcfgw"), "--params", _params("pcfgw"))
    _, b, _ = run(capsys, "compile", _p("pcfgw"), "--params", _params("pcfgw"))
    assert a == b
