"""Command line behavior: outputs, files, and exit codes.

Exit convention under test: 0 success, 2 invalid input, 3 integrity
failure in a record log.
"""
from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from sprintsim.cli import run_cli
from sprintsim.defaults import default_config
from sprintsim.engine import AssignTask, PlanCommit, SessionRun
from sprintsim.serialize import canonical_json, config_to_jsonable


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config_to_jsonable(default_config(seed=21))))
    return path


@pytest.fixture()
def replay_fixture(tmp_path):
    config = default_config(seed=77, sprint_length_days=3)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(config_to_jsonable(config)))
    run = SessionRun(config)
    run.command("T1", PlanCommit(story_ids=("US01", "US02")))
    run.command("T1", AssignTask(member=1, task="US01-T1"))
    for _ in range(3):
        run.advance()
    run.close_sprint()
    log = tmp_path / "log.jsonl"
    log.write_text("".join(canonical_json(p) + "\n" for p in run.record_payloads()))
    return cfg, log


def test_run_writes_deterministic_outcomes(tmp_path, config_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    argv = ["run", "--config", str(config_path), "--runs", "8", "--seed", "21"]
    assert run_cli(argv + ["--out", str(out1)]) == 0
    assert run_cli(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_text().splitlines()[0].startswith("seed,value,")
    assert "completion rate" in capsys.readouterr().out


def test_run_report_dir_renders_csv_and_figures(tmp_path, config_path):
    report = tmp_path / "report"
    assert run_cli([
        "run", "--config", str(config_path), "--runs", "5", "--seed", "3",
        "--report-dir", str(report),
    ]) == 0
    names = sorted(p.name for p in report.iterdir())
    assert names == [
        "cost_vs_value.png", "outcomes.csv", "summary.csv", "value_histogram.png",
    ]
    assert all((report / n).stat().st_size > 0 for n in names)


def test_run_rejects_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    doc = config_to_jsonable(default_config())
    doc["progress_wheel"] = {"slots": []}
    bad.write_text(json.dumps(doc))
    assert run_cli(["run", "--config", str(bad), "--runs", "1"]) == 2
    assert "invalid config" in capsys.readouterr().err


def test_calibrate_prints_wheel_json(capsys):
    assert run_cli(["calibrate-wheel", "--mean", "5.4", "--sd", "2.9"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["mean_hours"] - 5.4) <= 0.05
    assert abs(doc["sd_hours"] - 2.9) <= 0.05
    assert sum(w for _, w in doc["slots"]) == 20


def test_calibrate_infeasible_reports_nearest(capsys):
    assert run_cli([
        "calibrate-wheel", "--mean", "100", "--sd", "0", "--slots", "5",
    ]) == 2
    err = capsys.readouterr().err
    assert "nearest reachable" in err


def test_new_creates_a_stored_session(tmp_path, config_path, capsys):
    data = tmp_path / "sessions"
    assert run_cli([
        "new", "--config", str(config_path), "--data", str(data),
    ]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (data / info["session_id"] / "meta.json").exists()
    assert info["facilitator_token"].startswith("fac_")


def test_replay_round_trip(replay_fixture, capsys):
    cfg, log = replay_fixture
    assert run_cli(["replay", "--config", str(cfg), "--log", str(log)]) == 0
    out = capsys.readouterr().out
    assert "replayed 6 records" in out
    assert "state sha256" in out


def test_replay_flags_inapplicable_record(replay_fixture, tmp_path, capsys):
    cfg, log = replay_fixture
    lines = log.read_text().splitlines()
    lines[1] = lines[1].replace("US01-T1", "US99-T9")
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    assert run_cli(["replay", "--config", str(cfg), "--log", str(bad)]) == 3
    assert "integrity failure" in capsys.readouterr().err


def test_replay_flags_sequence_gap(replay_fixture, tmp_path, capsys):
    cfg, log = replay_fixture
    lines = log.read_text().splitlines()
    del lines[1]
    bad = tmp_path / "gap.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    assert run_cli(["replay", "--config", str(cfg), "--log", str(bad)]) == 3


def test_replay_verifies_service_chain(tmp_path, capsys):
    from sprintsim.service.store import SessionStore

    store = SessionStore(tmp_path / "data")
    doc = config_to_jsonable(default_config(seed=5))
    session = store.create(doc)
    session.submit("T1", PlanCommit(story_ids=("US01",)), actor="team")
    session.spin()
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    log = store.root / session.session_id / "log.jsonl"
    argv = [
        "replay", "--config", str(cfg), "--log", str(log),
        "--session-id", session.session_id,
    ]
    assert run_cli(argv) == 0
    lines = log.read_text().splitlines()
    lines[0] = lines[0].replace("US01", "US03")
    log.write_text("\n".join(lines) + "\n")
    assert run_cli(argv) == 3
    assert "integrity failure" in capsys.readouterr().err


def test_report_renders_session_files(replay_fixture, tmp_path):
    cfg, log = replay_fixture
    out = tmp_path / "render"
    assert run_cli([
        "report", "--config", str(cfg), "--log", str(log), "--out-dir", str(out),
    ]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "burndown.csv", "burndown.png", "leaderboard.csv", "leaderboard.png",
    ]
    burndown = (out / "burndown.csv").read_text().splitlines()
    assert burndown[0] == "team,sprint,day,remaining_hours,ideal_hours"
    assert len(burndown) == 5  # day 0 origin plus three days


def test_console_script_is_installed():
    exe = shutil.which("sprintsim")
    assert exe, "console script should be on PATH after an editable install"
    proc = subprocess.run(
        [exe, "--help"], capture_output=True, text=True, timeout=60
    )
    assert proc.returncode == 0
    assert "calibrate-wheel" in proc.stdout
