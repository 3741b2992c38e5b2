import json

import pytest

from cliffpde.cli import RunConfig, UsageError, run, thread_cap, write_json


def report(tmp_path, argv, name="out.json"):
    path = tmp_path / name
    code = run(argv + ["--json", str(path)])
    return code, (json.loads(path.read_text()) if path.exists() else None)


def test_dims(tmp_path):
    code, data = report(tmp_path, ["dims", "--m", "3", "--k", "2"])
    assert code == 0
    assert data["dim_Hk"] == 5 and data["rank_Mk"] == 3
    assert data["schema"] == 1 and data["command"] == "dims"


def test_verify_pass_and_determinism(tmp_path):
    argv = ["verify", "--suite", "connection", "--m", "3", "--k", "1", "--cases", "2", "--seed", "7"]
    code, first = report(tmp_path, argv, "a.json")
    code2, second = report(tmp_path, argv, "b.json")
    assert code == code2 == 0 and first["pass"]
    first.pop("timestamp"), second.pop("timestamp")
    assert first == second


def test_verify_all_skips_inadmissible(tmp_path):
    code, data = report(tmp_path, ["verify", "--m", "4", "--k", "0", "--cases", "1"])
    assert code == 0
    assert "connection" in data["skipped"] and "green-clifford" in data["skipped"]


def test_usage_errors_exit_2(tmp_path):
    assert run(["verify", "--suite", "connection", "--m", "4", "--k", "0"]) == 2
    assert run(["dims", "--m", "2", "--k", "1"]) == 2
    assert run(["dims", "--m", "3"]) == 2
    assert run(["frobnicate"]) == 2
    assert run(["poisson", "--m", "3", "--k", "1", "--bump", "0,0,0;1", "--points",
                str(tmp_path / "missing.json")]) == 2


def test_kernel_emit(tmp_path):
    code, data = report(tmp_path, ["kernel", "--m", "3", "--k", "1", "--emit", "zk"])
    assert code == 0 and data["reproduces_basis"] and data["exchange_symmetric"]
    assert data["kernel"]["slots"] == {"u": "u", "v": "x"}
    code, data = report(tmp_path, ["kernel", "--m", "3", "--k", "2", "--emit", "zk1"])
    assert code == 0 and data["reproduces_basis"]


def test_poisson_small(tmp_path):
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps([[0, 0, 0], [0.1, 0.2, 0.0], [2.0, 0.0, 0.0]]))
    code, data = report(tmp_path, ["poisson", "--m", "3", "--k", "1", "--bump", "0,0,0;1;3",
                                   "--upart", "0:1,1:1/2", "--points", str(pts),
                                   "--sphere-degree", "12", "--residual-h", "0.05"])
    assert code == 0
    assert len(data["field"]["coords"]) == 3
    assert data["residual"]["relative"] <= 0.05


def test_poisson_text_points(tmp_path):
    pts = tmp_path / "pts.txt"
    pts.write_text("0 0 0\n0.3 0 0\n")
    code, data = report(tmp_path, ["poisson", "--m", "3", "--k", "1", "--bump", "0,0,0;1;3",
                                   "--points", str(pts), "--sphere-degree", "8"])
    assert code == 0 and len(data["field"]["points"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("0 0\n")
    assert run(["poisson", "--m", "3", "--k", "1", "--bump", "0,0,0;1;3", "--points", str(bad)]) == 2


def test_calibrate_failure_exit_1(tmp_path):
    code, _ = report(tmp_path, ["calibrate", "--m", "4", "--k", "1", "--order", "4"])
    assert code == 1


def test_calibrate_store(tmp_path, monkeypatch):
    target = tmp_path / "cal.json"
    monkeypatch.setenv("CLIFFPDE_CALIBRATION", str(target))
    code, data = report(tmp_path, ["calibrate", "--m", "3", "--k", "1", "--order", "8", "--store"])
    assert code == 0 and data["c_times_omega"] == pytest.approx(1.0, rel=1e-6)
    assert "3,1" in json.loads(target.read_text())


def test_run_config_and_threads(monkeypatch):
    with pytest.raises(UsageError):
        RunConfig("dims", m=3, k=-1)
    monkeypatch.setenv("CLIFFPDE_THREADS", "2")
    assert thread_cap(8) == 2 and thread_cap(None) == 2 and thread_cap(1) == 1


def test_write_json_stdout(capsys):
    write_json(None, {"b": 1, "a": 2})
    assert json.loads(capsys.readouterr().out) == {"a": 2, "b": 1}
