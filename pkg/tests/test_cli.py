import json
import subprocess
import sys

import pytest

from endwalk.cli import dumps, run
from endwalk.template import bundled_template, template_to_dict


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_t3(capsys):
    code, out, _ = call(capsys, "solve", "t3")
    assert code == 0
    assert abs(json.loads(out)["mu_w"] - 2.0) < 1e-6


def test_compare_triangle_edge(capsys):
    code, out, err = call(capsys, "compare", "--n", "12", "triangle_edge")
    assert code == 0
    assert "12/12 coefficients match" in err
    assert json.loads(out)["match"] is True


def test_validate_bad_ports(tmp_path, capsys):
    d = template_to_dict(bundled_template("triangle_edge"))
    d["classA"][0]["ports"][1] = [1, 2]
    path = tmp_path / "bad_ports.json"
    path.write_text(json.dumps(d))
    code, out, _ = call(capsys, "validate", str(path))
    assert code == 1
    report = json.loads(out)
    assert not report["valid"]
    assert any("port sizes differ" in v for v in report["violations"])


def test_validate_good(capsys):
    code, out, _ = call(capsys, "validate", "hex_cactus")
    assert code == 0 and json.loads(out)["valid"]


def test_configs_tags(capsys):
    code, out, _ = call(capsys, "configs", "double_ray")
    rows = json.loads(out)["configurations"]
    tags = [tuple(r["tags"]) for r in rows]
    assert ("I", "simple", "persistent") in tags
    assert ("boring",) in tags


def test_system_dump(capsys):
    code, out, _ = call(capsys, "system", "double_ray")
    d = json.loads(out)
    assert code == 0 and len(d["configurations"]) == 2


def test_series_json_and_csv(capsys):
    code, out, _ = call(capsys, "series", "t3", "--n", "5", "--returns")
    d = json.loads(out)
    assert d["series"] == [3, 6, 12, 24, 48] and d["sar_series"] == [3, 0, 0, 0, 0]
    code, out, _ = call(capsys, "series", "double_ray", "--n", "3", "--format", "csv")
    assert out == "n,c\n1,2\n2,2\n3,2\n"


def test_oracle_command(capsys):
    code, out, _ = call(capsys, "oracle", "double_ray", "--n", "6")
    d = json.loads(out)
    assert code == 0 and d["c"] == [2] * 6
    assert d["growth"]["sar_gap"] is None


def test_ballistic(capsys):
    code, out, _ = call(capsys, "ballistic", "double_ray", "--n-min", "2", "--n-max", "4")
    stats = json.loads(out)["stats"]
    assert [s["mean_over_n"] for s in stats] == [1.0, 1.0, 1.0]


def test_explain(capsys):
    code, out, _ = call(capsys, "explain", "triangle_edge", "0,1,2")
    d = json.loads(out)
    assert code == 0 and d["complete"] and d["weight"] == 2


def test_explain_rejects_non_walk(capsys):
    code, _, err = call(capsys, "explain", "triangle_edge", "0,0")
    assert code == 1 and err


def test_usage_errors_exit_64(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        run(["series", "t3", "--n", "0"])
    assert exc.value.code == 64


def test_resource_limit_exit_2(capsys):
    code, _, err = call(capsys, "oracle", "k4_edge", "--n", "12", "--cap", "10")
    assert code == 2 and "resource limit" in err


def test_unknown_template_exit_1(capsys):
    code, _, err = call(capsys, "solve", "nowhere.json")
    assert code == 1


def test_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["solve", "hex_cactus", "-o", str(a)])
    run(["solve", "hex_cactus", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_float_formatting():
    assert dumps({"x": 1 / 3, "y": float("inf")}) == '{\n  "x": 0.333333333333,\n  "y": "inf"\n}'


def test_jobs_env(monkeypatch, capsys):
    monkeypatch.setenv("ENDWALK_JOBS", "2")
    code, out, _ = call(capsys, "oracle", "triangle_edge", "--n", "7", "--no-sup-p")
    assert code == 0 and json.loads(out)["c"][:4] == [3, 6, 10, 18]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "endwalk.cli", "series", "t3", "--n", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["series"] == [3, 6, 12]
