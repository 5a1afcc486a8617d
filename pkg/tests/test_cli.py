import json
import re
import subprocess
import sys

import pytest

from kktcheck.cli import run
from kktcheck.expr import load_problem
from kktcheck.kkt import kkt_report


@pytest.fixture
def cli(capsys, problems_dir):
    def invoke(*argv):
        args = [str(problems_dir / a) if a.endswith(".kkt") and "/" not in a
                and (problems_dir / a).exists() else a for a in argv]
        code = run(args)
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke


def write(tmp_path, text, name="p.kkt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestCheckContract:
    def test_circle_minimizer(self, cli):
        code, out, _ = cli("check", "circle.kkt", "--point=-1,-1")
        assert code == 0 and "λ_1 = 0.5" in out

    def test_ball_max(self, cli):
        code, out, _ = cli("check", "ball-max.kkt", "--point=1,0")
        assert code == 1 and "SIGN_FAIL" in out and "μ_1 = -0.5" in out

    def test_infeasible(self, cli):
        code, out, _ = cli("check", "circle.kkt", "--point=0,0")
        assert code == 1 and "INFEASIBLE" in out

    def test_missing_file(self, cli):
        code, _, err = cli("check", "missing.kkt")
        assert code == 2 and err

    def test_point_from_file(self, cli):
        assert cli("check", "orthant.kkt")[0] == 0


class TestStructured:
    def test_round_trip_is_lossless(self, cli, problems_dir):
        code, out, _ = cli("check", "hs071.kkt", "--format=structured")
        doc = json.loads(out)
        assert json.dumps(doc) + "\n" == out
        rep = kkt_report(load_problem(problems_dir / "hs071.kkt"))
        assert doc["lambda"] == list(rep.multipliers.lam)
        assert doc["mu"] == list(rep.multipliers.mu)
        assert doc["stationarity_residual"] == rep.stationarity_residual
        for key in ("verdict", "active_set", "lambda", "mu", "stationarity_residual",
                    "licq_rank", "complementarity", "tolerances"):
            assert key in doc

    def test_text_and_structured_agree(self, cli):
        for problem, point in [("circle.kkt", "-1,-1"), ("ball-max.kkt", "1,0"),
                               ("hs071.kkt", None), ("orthant.kkt", "0,0")]:
            extra = [f"--point={point}"] if point else []
            _, text, _ = cli("check", problem, *extra)
            _, js, _ = cli("check", problem, *extra, "--format=structured")
            doc = json.loads(js)
            assert f"verdict: {doc['verdict']}" in text
            lam = [float(v) for v in re.findall(r"λ_\d+ = (\S+)", text)]
            mu = [float(v) for v in re.findall(r"μ_\d+ = (\S+)", text.split("sign violation")[0])]
            assert lam == pytest.approx(doc["lambda"], rel=1e-5, abs=1e-12)
            assert mu == pytest.approx(doc["mu"], rel=1e-5, abs=1e-12)

    def test_deterministic_bytes(self, cli):
        for argv in (("check", "hs071.kkt", "--format=json"),
                     ("witness", "circle-min-x1.kkt", "--format=json"),
                     ("probe", "ball-max.kkt", "--samples=300", "--seed=9", "--format=json")):
            assert cli(*argv) == cli(*argv)


class TestWitness:
    def test_descent(self, cli):
        code, out, _ = cli("witness", "circle-min-x1.kkt", "--nu=1e-4", "--format=structured")
        doc = json.loads(out)
        assert code == 1 and doc["construction"] == "descent"
        assert abs(doc["objective_drop"] - 1e-4) <= 1e-9
        assert doc["max_constraint_violation"] <= 1e-9 and doc["witness_verified"]

    def test_sign(self, cli):
        code, out, _ = cli("witness", "ball-max.kkt")
        assert code == 1 and "witness: sign" in out

    def test_none_applies(self, cli):
        code, out, _ = cli("witness", "circle.kkt")
        assert code == 0 and "no witness construction applies" in out

    def test_infeasible(self, cli):
        assert cli("witness", "circle.kkt", "--point=0,0")[0] == 1


class TestCurveAndProbe:
    def test_curve_falsifies_ball_max(self, cli):
        code, out, _ = cli("curve", "ball-max.kkt", "--format=json")
        doc = json.loads(out)
        assert code == 1 and doc["slope_analytic"] == -0.5

    def test_curve_at_minimizer(self, cli):
        code, out, _ = cli("curve", "halfspace.kkt", "--eps=0,1e-5")
        assert code == 0 and "slope (analytic, -f0'·w) = 2" in out

    def test_curve_needs_active_inequality(self, cli):
        assert cli("curve", "circle.kkt")[0] == 2

    def test_probe(self, cli):
        assert cli("probe", "ball-max.kkt", "--samples=500", "--seed=3")[0] == 1
        assert cli("probe", "circle.kkt", "--samples=500", "--seed=3")[0] == 0


class TestErrors:
    def test_parse_error(self, cli, tmp_path):
        code, _, err = cli("check", write(tmp_path, "vars 2\nminimize x0 +\npoint 0 0"))
        assert code == 2 and "offset" in err

    def test_missing_point(self, cli, tmp_path):
        assert cli("check", write(tmp_path, "vars 1\nminimize x0"))[0] == 2

    def test_bad_point(self, cli):
        assert cli("check", "circle.kkt", "--point=1,2,3")[0] == 2
        assert cli("check", "circle.kkt", "--point=a,b")[0] == 2

    def test_usage(self, cli):
        assert cli("frobnicate")[0] == 2
        assert cli("--help")[0] == 0

    def test_numerical_failure(self, cli, tmp_path):
        path = write(tmp_path, "vars 2\nminimize x0\nineq x0^2 + x1^2 - 1\n"
                               "ineq 1 - x0^2 - x1^2\npoint 1 0")
        assert cli("check", path)[1].startswith("verdict: LICQ_FAIL")
        code, _, err = cli("curve", path, "--j0=1")
        assert code == 3 and "numerical" in err

    def test_domain_error_is_numerical(self, cli, tmp_path):
        path = write(tmp_path, "vars 1\nminimize log(x0)\npoint 0")
        assert cli("check", path)[0] == 3

    def test_outside_box(self, cli, tmp_path):
        path = write(tmp_path, "vars 1\nminimize x0\nbox 0 0 1\npoint 1")
        assert cli("check", path)[0] == 2


def test_module_entry_point(problems_dir):
    proc = subprocess.run([sys.executable, "-m", "kktcheck", "check",
                           str(problems_dir / "ball-max.kkt")], capture_output=True, text=True)
    assert proc.returncode == 1 and "SIGN_FAIL" in proc.stdout
