import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from fixedpass.cli import Flags, effective_options, main, parse_problem, parse_text, run
from fixedpass.errors import ParseError, SchemaError
from fixedpass.system import Domain

from conftest import PROBLEMS


@pytest.fixture
def ex1():
    return parse_problem(PROBLEMS / "example1.json")


@pytest.fixture
def ex2():
    return parse_problem(PROBLEMS / "example2.json")


def test_parse_example_fixtures(ex1, ex2):
    assert ex1.domain is Domain.DT
    assert ex1.plant.den.coeffs() == [-2, 1]
    assert ex1.basis.entries[1].den.coeffs() == [F(-1, 2), 1]
    assert ex1.box.lower == (F(1, 10), F(1)) and ex1.box.upper == (F(1), F(2))
    assert ex2.domain is Domain.CT
    assert ex2.plant.num.coeffs() == [6, 5, 1]
    assert len(ex2.basis) == 2 and ex2.options.direct_mode


def _base():
    return json.loads((PROBLEMS / "example1.json").read_text())


def test_unknown_key_rejected():
    data = _base()
    data["plnat"] = data.pop("plant")
    with pytest.raises(SchemaError) as info:
        parse_text(json.dumps(data))
    assert "plnat" in str(info.value)


@pytest.mark.parametrize("mutate", [
    lambda d: d["box"].update(lower=[0]),
    lambda d: d.update(domain="z"),
    lambda d: d["plant"].update(num=["abc"]),
    lambda d: d["options"].update(colour=1),
    lambda d: d.update(constraints=[{"a": 1}]),
])
def test_schema_errors(mutate):
    data = _base()
    mutate(data)
    with pytest.raises(SchemaError):
        parse_text(json.dumps(data))


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_text('{\n  "domain": "dt",\n  "plant": {\n}')
    assert "line" in str(info.value)


def test_decimal_strings_are_exact():
    data = _base()
    data["box"]["lower"] = ["0.1", "1"]
    assert parse_text(json.dumps(data)).box.lower[0] == F(1, 10)


def test_flags_override_file(ex1):
    o = effective_options(ex1, Flags(mult_degree=4, bisect_tol=1e-3))
    assert (o.mult_degree, o.bisect_tol) == (4, 1e-3)
    assert effective_options(ex1, Flags()).mult_degree == 2


def _strip(report):
    return json.dumps({k: v for k, v in report.items() if k != "timestamp"}, sort_keys=True)


def test_stability_and_determinism(ex1):
    a, code = run("stability", ex1)
    b, _ = run("stability", ex1)
    assert code == 0 and a["status"] == "stable"
    assert _strip(a) == _strip(b)


def test_max_ifp_example1(ex1):
    report, code = run("max-ifp", ex1)
    assert code == 0 and report["status"] == "optimal"
    assert report["index"] == pytest.approx(0.48, abs=0.01)
    assert report["rho_star"] == [pytest.approx(0.1, abs=0.02), pytest.approx(1.5, abs=0.02)]
    v = report["verification"]
    assert v["passed"] and v["stable_at_rho_star"]
    assert v["sweep_index"] == pytest.approx(report["index"], abs=5e-3)
    assert v["kyp_index"] == pytest.approx(v["sweep_index"], abs=1e-3)
    assert report["bisection_trace"]


def test_max_ofp_example2(ex2):
    report, code = run("max-ofp", ex2)
    assert code == 0
    assert report["index"] == pytest.approx(0.542, abs=5e-3)
    assert report["rho_star"] == [pytest.approx(1, abs=0.02), pytest.approx(1, abs=0.02)]


def test_negative_codes(ex2):
    widened = parse_problem(PROBLEMS / "example1_widened.json")
    report, code = run("stability", widened)
    assert code == 2 and report["status"] == "not_stabilizing"
    assert report["counterexample_rho"] is not None
    report, code = run("stability", ex2)
    assert code == 2


def test_assumption_errors():
    data = _base()
    data["plant"] = {"num": [1], "den": [1, 0, 1]}
    report, code = run("max-ifp", parse_text(json.dumps(data)))
    assert code == 1 and report["error"]["clause"].startswith("assumption-1")
    data = _base()
    data["plant"] = {"num": [-3, 1], "den": ["0.5", 1]}
    report, code = run("max-ofp", parse_text(json.dumps(data)))
    assert code == 1 and report["error"]["clause"].startswith("assumption-2")


def test_verify_command(ex1):
    report, code = run("verify", ex1, Flags(rho=[0.1, 1.5]))
    assert code == 0
    assert report["verification"]["ifp"]["sweep_index"] == pytest.approx(0.4762, abs=1e-3)


def test_main_writes_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["stability", "--input", str(PROBLEMS / "example1.json"), "--output", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["report_version"] == 1 and report["exit_code"] == 0
    assert capsys.readouterr().out.strip()


def test_main_bad_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["stability", "--input", str(bad)]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fixedpass", "stability", "--input",
                           str(PROBLEMS / "example1_widened.json")], capture_output=True, text=True)
    assert proc.returncode == 2


def test_verify_without_point_uses_grid_oracle(ex1):
    report, code = run("verify", ex1, Flags(grid=10))
    assert code == 0 and report["status"] == "verified"
    assert report["grid_oracle"]["resolution"] == 10
    v = report["verification"]["ifp"]
    assert v["kyp_index"] == pytest.approx(v["sweep_index"], abs=1e-3)
