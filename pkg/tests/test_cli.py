import json

import pytest

from abelcycles.cli import main
from abelcycles.domain import AbelEquation


@pytest.fixture
def eq_file(tmp_path):
    eq = AbelEquation.build(-1, 2, 1, "2pi", Q1=[[0, 0], [0, 1]])
    path = tmp_path / "eq.json"
    path.write_text(json.dumps(eq.to_json()))
    return str(path)


def test_table_z1(capsys):
    assert main(["table", "--which", "Z1", "--m", "1"]) == 0
    assert capsys.readouterr().out.strip() == "5 / 3 / 2"


def test_table_hilbert_json(tmp_path, capsys):
    out = tmp_path / "h.json"
    assert main(["table", "--which", "H", "--m", "1", "--p-odd", "--json", str(out)]) == 0
    body = json.loads(out.read_text())
    assert body["values"] == [8, 10, 2] and len(body["notes"]) == 3


def test_bad_flag_is_input_error():
    assert main(["table", "--which", "Z7", "--m", "1"]) == 1
    assert main(["nonsense"]) == 1


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"p": -1,\n  "q": }')
    assert main(["m1", "--eq", str(bad)]) == 1
    assert f"{bad}:2:8" in capsys.readouterr().err


def test_domain_error_exit_code(eq_file):
    assert main(["m1", "--eq", eq_file, "--window=-3:-1"]) == 2
    assert main(["m1", "--eq", eq_file, "--grid", "4"]) == 2


def test_m1_outputs_and_determinism(eq_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    csv = tmp_path / "m1.csv"
    assert main(["m1", "--eq", eq_file, "--grid", "64", "--json", str(a), "--out", str(csv)]) == 0
    assert main(["m1", "--eq", eq_file, "--grid", "64", "--json", str(b)]) == 0
    assert a.read_text() == b.read_text()
    body = json.loads(a.read_text())
    assert body["case"] == "theta1=2pi"
    lines = csv.read_text().splitlines()
    assert lines[0] == "rho,M1" and len(lines) == 65


def test_m2_both(tmp_path):
    from abelcycles.synthesis import sample_center_equation
    path = tmp_path / "c.json"
    path.write_text(json.dumps(sample_center_equation(1, "2pi", -1, 2, seed=0).to_json()))
    out = tmp_path / "m2.json"
    assert main(["m2", "--eq", str(path), "--both", "--grid", "40", "--json", str(out)]) == 0
    body = json.loads(out.read_text())
    assert body["max_relative_difference"] < 1e-7


def test_equation_json_round_trip(eq_file):
    data = json.loads(open(eq_file).read())
    assert AbelEquation.from_json(data).to_json() == data


def test_ect_exit_codes(tmp_path):
    assert main(["ect", "--family", "cos-sine", "--n", "1", "--grid", "50", "--json", str(tmp_path / "e.json")]) == 0
    assert json.loads((tmp_path / "e.json").read_text())["cos-sine"]["wronskian"]["ect"] is True
    assert main(["ect", "--family", "mixed", "--n0", "2", "--k0", "2"]) == 2


def test_synth(tmp_path):
    out = tmp_path / "s.json"
    assert main(["synth", "--m", "1", "--case", "theta1=2pi", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["achieved"] == 2


def test_validate(eq_file, tmp_path):
    out = tmp_path / "v.json"
    rc = main(["validate", "--eq", eq_file, "--eps", "1e-3", "--grid", "32", "--window", "0.5:5",
               "--json", str(out), "--out", str(tmp_path / "v.csv")])
    assert rc == 0
    body = json.loads(out.read_text())
    assert len(body["m1_zeros"]) == body["runs"][0]["count"]
