from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from cdiff.cdc import differentiate, morph_equal
from cdiff.linclosed import reverse_differentiate
from cdiff.cli import main, parse_morph_file

FILES = {
    "f.cd": "dom 2\ncod 1\nscalar exact\nexpr x1*x2\n",
    "id2.cd": "dom 2\ncod 2\nscalar exact\nexpr x1\nexpr x2\n",
    "poly.cd": "# a polynomial map\ndom 3\ncod 2\nscalar exact\nexpr x1^2*x3 - 1/2*x2\nexpr x2*x3 + 4\n",
    "trig.cd": "dom 2\ncod 1\nscalar float\nexpr sin(x1)*exp(cos(x2)) + x1*x2^2\n",
    "lin.cd": "dom 3\ncod 2\nscalar exact\nsplit 1 2\nexpr x1*x2 + 2*x3\nexpr x3 - x1^2*x2\n",
    "nonlin.cd": "dom 2\ncod 1\nscalar exact\nsplit 1 1\nexpr x1*x2^2\n",
    "mat.cd": "dom 3\ncod 2\nexpr x1 + 2*x2\nexpr 3*x3 - x1\n",
}


@pytest.fixture
def files(tmp_path):
    for name, text in FILES.items():
        (tmp_path / name).write_text(text)
    return tmp_path


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


# golden outputs --------------------------------------------------------------


def test_golden_jacobian(files):
    assert run("jacobian", files / "f.cd", "--at", "3,5") == (0, '{"rows":1,"cols":2,"data":[[5,3]]}\n', "")


def test_golden_deriv_of_identity(files):
    code, out, _ = run("deriv", files / "id2.cd")
    assert code == 0
    assert out == "dom 4\ncod 2\nscalar exact\nexpr x3\nexpr x4\n"


def test_golden_check_cd5(files):
    code, out, _ = run("check", "--suite", "cd5", "--seed", "0")
    report = json.loads(out)
    assert code == 0 and report["passed"] is True and report["suite"] == "cd5" and report["seed"] == 0


# commands ---------------------------------------------------------------------


def test_eval(files):
    assert run("eval", files / "poly.cd", "--at", "1/2,2,4") == (0, '[0,12]\n', "")
    assert run("eval", files / "f.cd", "--at", "1/2,1/3", "--format", "text")[1] == "1/6\n"


def test_deriv_and_reverse_roundtrip(files):
    f = parse_morph_file(FILES["poly.cd"]).morph
    code, out, _ = run("deriv", files / "poly.cd")
    assert code == 0 and morph_equal(parse_morph_file(out).morph, differentiate(f))
    code, out, _ = run("reverse", files / "poly.cd")
    assert code == 0 and morph_equal(parse_morph_file(out).morph, reverse_differentiate(f))
    code, out, _ = run("deriv", files / "trig.cd")
    g = parse_morph_file(out).morph
    assert g.flavor.value == "float" and morph_equal(g, differentiate(parse_morph_file(FILES["trig.cd"]).morph))


def test_every_emitted_file_reparses(files):
    for cmd in ("deriv", "reverse", "jacobian", "gradient", "hessian"):
        for name in ("f.cd", "poly.cd", "trig.cd"):
            code, out, _ = run(cmd, files / name)
            assert code == 0
            parse_morph_file(out)


def test_gradient_is_transposed_jacobian(files):
    for name, pt in (("f.cd", "3,5"), ("poly.cd", "1,-2,1/3"), ("trig.cd", "0.3,-1.2"), ("mat.cd", "1,2,3")):
        _, jac, _ = run("jacobian", files / name, "--at", pt)
        _, grad, _ = run("gradient", files / name, "--at", pt)
        (files / "jac.json").write_text(jac)
        code, tj, _ = run("transpose", files / "jac.json")
        assert code == 0 and json.loads(tj) == json.loads(grad)


def test_hessian_at_point(files):
    code, out, _ = run("hessian", files / "f.cd", "--at", "3,5")
    assert code == 0 and json.loads(out) == {"rows": 2, "cols": 2, "data": [[0, 1], [1, 0]]}


def test_curry(files):
    code, out, _ = run("curry", files / "lin.cd")
    g = parse_morph_file(out).morph
    assert code == 0 and g.texts() == ["x1", "2", "-x1^2", "1"]
    code, out, _ = run("curry", files / "lin.cd", "--at", "3")
    assert json.loads(out) == {"rows": 2, "cols": 2, "data": [[3, 2], [-9, 1]]}


def test_curry_of_nonlinear_is_a_precondition_violation(files):
    code, out, err = run("curry", files / "nonlin.cd")
    assert code == 3 and "witness" in json.loads(out) and "not linear" in err


def test_transpose_of_linear_map(files):
    code, out, _ = run("transpose", files / "mat.cd")
    assert code == 0 and parse_morph_file(out).morph.texts() == ["x1 - x2", "2*x1", "3*x2"]
    assert run("transpose", files / "f.cd")[0] == 3


def test_raw_and_text_matrix_formats(files):
    assert run("jacobian", files / "poly.cd", "--at", "1,1,1", "--raw")[1] == \
        '{"rows":2,"cols":3,"vec":[2,"-1/2",1,0,1,1]}\n'
    assert run("jacobian", files / "f.cd", "--at", "3,5", "--format", "text")[1] == "5 3\n"


def test_transpose_reads_raw_layout(files):
    _, raw, _ = run("jacobian", files / "poly.cd", "--at", "1,1,1", "--raw")
    (files / "raw.json").write_text(raw)
    _, plain, _ = run("jacobian", files / "poly.cd", "--at", "1,1,1")
    (files / "plain.json").write_text(plain)
    assert run("transpose", files / "raw.json") == run("transpose", files / "plain.json")
    (files / "flt.json").write_text('{"rows":1,"cols":2,"vec":[0.5,2]}')
    assert json.loads(run("transpose", files / "flt.json")[1])["data"] == [[0.5], [2.0]]


def test_json_morphism_output(files):
    code, out, _ = run("deriv", files / "f.cd", "--format", "json")
    assert json.loads(out) == {"dom": 4, "cod": 1, "scalar": "exact", "exprs": ["x1*x4 + x2*x3"]}


# exit codes -----------------------------------------------------------------------


@pytest.mark.parametrize("text", [
    "cod 1\nexpr x1\n",
    "dom 1\ncod 2\nexpr x1\n",
    "dom 1\ncod 1\nexpr x2\n",
    "dom 1\ncod 1\nexpr x1 +\n",
    "dom 1\ncod 1\nscalar complex\nexpr x1\n",
    "dom 2\ncod 1\nsplit 1 2\nexpr x1\n",
    "dom -1\ncod 0\n",
    "dom 1\ncod 1\nfrobnicate\nexpr x1\n",
    "dom 1\ncod 1\nscalar exact\nexpr sin(x1)\n",
    "dom 1\ndom 1\ncod 1\nexpr x1\n",
])
def test_invalid_files_exit_2(tmp_path, text):
    p = tmp_path / "bad.cd"
    p.write_text(text)
    code, out, err = run("deriv", p)
    assert code == 2 and out == "" and err.startswith("cdiff: error:")


def test_nat_semiring_flag(files, tmp_path):
    p = tmp_path / "neg.cd"
    p.write_text("dom 2\ncod 1\nexpr x1 - x2\n")
    assert run("deriv", p, "--semiring", "nat")[0] == 2
    assert run("deriv", files / "f.cd", "--semiring", "nat")[0] == 0


@pytest.mark.parametrize("argv", [
    ("jacobian", "{f}", "--at", "1"),
    ("jacobian", "{f}", "--at", "1,a"),
    ("eval", "{f}"),
    ("curry", "{f}"),
    ("deriv", "missing.cd"),
    ("frobnicate",),
    ("check", "--suite", "cd9"),
])
def test_usage_errors_exit_2(files, argv):
    argv = [a.replace("{f}", str(files / "f.cd")) for a in argv]
    assert run(*argv)[0] == 2


def test_check_failure_exits_1():
    code, out, _ = run("check", "--suite", "cd3", "--mutate", "d-doubled", "--count", "5")
    assert code == 1 and json.loads(out)["passed"] is False


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("CDIFF_SEED", "7")
    code, out, _ = run("check", "--suite", "cd1", "--count", "3")
    assert code == 0 and json.loads(out)["seed"] == 7
    code, out, _ = run("check", "--suite", "cd1", "--count", "3", "--seed", "2")
    assert json.loads(out)["seed"] == 2


def test_check_text_format():
    code, out, _ = run("check", "--suite", "cd1", "--count", "3", "--format", "text")
    assert code == 0 and out.startswith("cd1: pass")


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "cdiff", "jacobian", str(files / "f.cd"), "--at", "3,5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == '{"rows":1,"cols":2,"data":[[5,3]]}\n'
