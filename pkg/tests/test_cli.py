import json
import subprocess
import sys

import jsonschema
import pytest

from cheese_mis.cli import REPORT_SCHEMA, SOLVE_RESULT_SCHEMA, run


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, out


@pytest.fixture
def inst_file(tmp_path, capsys):
    path = tmp_path / "inst.json"
    code, _ = call(capsys, "generate", "--rows", "6", "--cols", "6", "--objects", "rect:6:1x2,cell:4",
                   "--seed", "1", "--out", str(path))
    assert code == 0
    return path


def test_generate_report(tmp_path, capsys):
    path = tmp_path / "g.json"
    code, out = call(capsys, "generate", "--rows", "5", "--cols", "5", "--objects", "cell:3",
                     "--seed", "2", "--out", str(path))
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["results"]["N"] == 3


def test_generate_stdout_is_instance(capsys):
    code, out = call(capsys, "generate", "--rows", "4", "--cols", "4", "--objects", "cell:2", "--seed", "0")
    assert code == 0 and set(json.loads(out)) >= {"n", "edges", "rotation", "objects"}


def test_solve_report(inst_file, tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _ = call(capsys, "solve", "--in", str(inst_file), "--s-override", "4", "--exact", "--out", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, REPORT_SCHEMA)
    jsonschema.validate(rep, SOLVE_RESULT_SCHEMA)
    assert rep["value"] <= rep["exact_opt"]
    assert rep["mode"] == "sampled" and rep["seed"] == 0
    assert "elapsed_seconds" not in rep["stats"]


def test_seed_env_fallback(inst_file, capsys, monkeypatch):
    monkeypatch.setenv("CHEESE_MIS_SEED", "17")
    code, out = call(capsys, "solve", "--in", str(inst_file), "--s-override", "4")
    assert code == 0 and json.loads(out)["seed"] == 17


def test_solve_needs_epsilon_or_override(inst_file, capsys):
    with pytest.raises(SystemExit) as exc:
        run(["solve", "--in", str(inst_file)])
    assert exc.value.code == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2


def test_malformed_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 3}')
    code, out = call(capsys, "solve", "--in", str(bad), "--s-override", "4")
    assert code == 1 and "error" in json.loads(out)
    bad.write_text("not json")
    code, out = call(capsys, "verify", "--in", str(bad))
    assert code == 1 and "error" in json.loads(out)
    code, out = call(capsys, "solve", "--in", str(tmp_path / "missing.json"), "--s-override", "4")
    assert code == 1


def test_invalid_instance_diagnostics(inst_file, capsys):
    data = json.loads(inst_file.read_text())
    data["objects"][0]["vertices"] = [0, 35]
    data["objects"][0]["edges"] = []
    inst_file.write_text(json.dumps(data))
    code, out = call(capsys, "solve", "--in", str(inst_file), "--s-override", "4")
    rep = json.loads(out)
    assert code == 1 and rep["error"] == "invalid-instance"
    assert rep["detail"][0]["kind"] == "disconnected-object"


def test_verify_passes(inst_file, tmp_path, capsys):
    dump = tmp_path / "dump.json"
    code, out = call(capsys, "verify", "--in", str(inst_file), "--dump", str(dump))
    rep = json.loads(out)
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert code == 0 and rep["results"]["passed"]
    assert "radial_edges" in json.loads(dump.read_text())


def test_verify_sampling(tmp_path, capsys):
    path = tmp_path / "b.json"
    call(capsys, "generate", "--rows", "12", "--cols", "12", "--objects", "rect:40:1x2:disjoint",
         "--seed", "3", "--out", str(path))
    code, out = call(capsys, "verify-sampling", "--in", str(path), "--s", "8", "--trials", "50")
    rep = json.loads(out)
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert code == 0 and 0 <= rep["results"]["joint"]["frequency"] <= 1
    code, out = call(capsys, "verify-sampling", "--in", str(path), "--s", "80", "--trials", "50")
    assert code == 1


def test_determinism_excluding_timings(inst_file, capsys):
    reps = []
    for _ in range(2):
        code, out = call(capsys, "solve", "--in", str(inst_file), "--s-override", "4", "--seed", "5")
        rep = json.loads(out)
        rep.pop("timings")
        reps.append(json.dumps(rep, sort_keys=True))
    assert reps[0] == reps[1]


def test_module_entry_point(inst_file):
    proc = subprocess.run(
        [sys.executable, "-m", "cheese_mis", "--threads", "1", "verify", "--in", str(inst_file)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["command"] == "verify"
