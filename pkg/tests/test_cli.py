import json

import pytest

import lipext_cli as cli
from conftest import problem_dict


def _point(pid, x, v, u=None):
    out = {"id": pid, "x": [x], "v": [v]}
    if u is not None:
        out.update(u=[u], in_A=True)
    return out


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def line_file(tmp_path):
    doc = {
        "dim_domain": 1,
        "dim_target": 1,
        "body": {"type": "ball", "center": [0.0], "radius": 2.0},
        "points": [_point("a", 0.0, 0.0, 0.0), _point("b", 1.0, 0.0), _point("c", 2.0, 0.0), _point("d", 3.0, 0.0, 2.0)],
    }
    return _write(tmp_path, "line.json", doc)


@pytest.fixture
def doubling_file(tmp_path):
    doc = {"dim_domain": 1, "dim_target": 1, "points": [_point("x0", 0.0, 0.0), _point("x1", 1.0, 2.0)]}
    return _write(tmp_path, "doubling.json", doc)


def _run(argv, tmp_path):
    out = tmp_path / "report.json"
    code = cli.run_command(argv + ["--output", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_square_demo(tmp_path):
    code, report = _run(["square-demo"], tmp_path)
    assert code == 0
    assert report["status"] == "Completed"
    assert report["result"]["condition_check"]["status"] == "Satisfied"
    assert "problem" not in report


def test_check_identity_is_satisfied(tmp_path):
    doc = problem_dict()
    for p in doc["points"]:
        p.pop("u", None)
        p.pop("in_A", None)
    code, report = _run(["check", "--input", _write(tmp_path, "id.json", doc)], tmp_path)
    assert code == 0
    assert report["status"] == "Satisfied"
    assert report["config"]["config"]["mode"] == "lipschitz"
    assert report["problem"]["dim_domain"] == 2


def test_check_doubling_pair_is_violated(doubling_file, tmp_path):
    code, report = _run(["check", "--input", doubling_file, "--m-max", "1"], tmp_path)
    assert code == 2
    assert report["status"] == "Violated"
    certs = report["result"]["certificates"]
    assert len(certs) == 1
    assert certs[0]["margin"] == pytest.approx(3.0)
    assert report["config"]["config"]["policy"]["m_max"] == 1


def test_extend_then_verify(line_file, tmp_path):
    code, report = _run(["extend", "--input", line_file, "--order", "farthest"], tmp_path)
    assert code == 0
    assert report["status"] == "Extended"
    assert sorted(report["result"]["order"]) == [1, 2]
    saved = _write(tmp_path, "extension.json", report)
    code, verdict = _run(["verify", "--input", saved], tmp_path)
    assert code == 0
    assert verdict["status"] == "Passed"
    assert verdict["result"]["reproduced"]["sup_dist_X"]["difference"] <= 1e-10


def test_verify_catches_tampering(line_file, tmp_path):
    _, report = _run(["extend", "--input", line_file], tmp_path)
    report["result"]["u_full"][1] = [3.0]
    code, verdict = _run(["verify", "--input", _write(tmp_path, "bad.json", report)], tmp_path)
    assert code == 2
    assert verdict["status"] == "Failed"
    assert verdict["result"]["findings"]


def test_kirszbraun_then_verify(line_file, tmp_path):
    code, report = _run(["kirszbraun", "--input", line_file], tmp_path)
    assert code == 0
    code, verdict = _run(["verify", "--input", _write(tmp_path, "k.json", report)], tmp_path)
    assert code == 0


def test_infeasible_extend_exits_2(tmp_path):
    doc = {
        "dim_domain": 1,
        "dim_target": 1,
        "body": {"type": "ball", "radius": 0.0},
        "points": [_point("a", 0.0, 0.0, 0.0), _point("b", 1.0, 3.0), _point("c", 2.0, 0.0, 0.0)],
    }
    code, report = _run(["extend", "--input", _write(tmp_path, "bad.json", doc)], tmp_path)
    assert code == 2
    assert report["status"] == "Infeasible"
    assert report["result"]["failed_id"] == "b"
    assert report["result"]["partial"][1] is None


def test_necessity_confirms_doubling_pair(doubling_file, tmp_path):
    code, report = _run(["necessity", "--input", doubling_file, "--C", "1.0"], tmp_path)
    assert code == 2
    assert report["status"] == "ViolationConfirmed"
    assert {p["extra_id"] for p in report["result"]["probes"]} == {"x0", "x1"}


def test_necessity_needs_c(doubling_file, capsys):
    assert cli.run_command(["necessity", "--input", doubling_file]) == 1
    assert "needs --C" in capsys.readouterr().err


def test_bad_file_reports_every_error(tmp_path, capsys):
    doc = problem_dict()
    doc["points"][2]["in_A"] = True
    doc["points"][3]["v"] = [1.0]
    path = _write(tmp_path, "broken.json", doc)
    assert cli.run_command(["check", "--input", path]) == 1
    err = capsys.readouterr().err
    assert err.startswith("ERROR:")
    assert "2 error(s)" in err
    assert "'p2'" in err and "'p3'" in err


def test_usage_errors(capsys):
    assert cli.run_command(["frobnicate"]) == 1
    assert "ERROR:" in capsys.readouterr().err
    assert cli.run_command(["check"]) == 1
    assert "needs --input" in capsys.readouterr().err


def test_text_format_to_stdout(doubling_file, capsys):
    assert cli.run_command(["check", "--input", doubling_file, "--m-max", "1", "--format", "text"]) == 2
    out = capsys.readouterr().out
    assert out.startswith("lipext ")
    assert "[result]" in out
