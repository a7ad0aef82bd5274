import json

import pytest

from gazearm.cli import build_parser, main
from gazearm.events import EventLog
from gazearm.gazefilter import GazeSample, write_trace
from gazearm.harness import run_manual_task


def test_parser_rejects_trace_plus_serve():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run-manual", "--trace", "a", "--serve", "b"])


def test_run_auto_small(capsys, tmp_path):
    log = tmp_path / "auto.jsonl"
    rc = main(["run-auto", "--sets", "1", "--noise", "off", "--seed", "0",
               "--log", str(log)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "selection success:   100.00%" in out
    assert "distractor triggers: 0/2" in out
    assert log.exists()
    assert EventLog.read(log).of_kind("init")


def test_run_manual_with_recorded_trace(capsys, tmp_path):
    _, session = run_manual_task(seed=0)
    trace = tmp_path / "trace.jsonl"
    write_trace(trace, session.samples_fed)
    rc = main(["run-manual", "--trace", str(trace), "--seed", "0"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "success:         True" in out


def test_replay_and_parse_error(capsys, tmp_path):
    trace = tmp_path / "trace.jsonl"
    write_trace(trace, [GazeSample(i / 60.0, 640.0, 480.0) for i in range(3)])
    log = tmp_path / "log.jsonl"
    assert main(["replay", str(trace), "--log", str(log)]) == 0
    assert log.exists()
    bad = tmp_path / "bad.jsonl"
    bad.write_text("nope\n")
    assert main(["replay", str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_replay_determinism_via_cli(tmp_path):
    trace = tmp_path / "trace.jsonl"
    write_trace(trace, [GazeSample(i / 60.0, 100.0, 480.0) for i in range(90)])
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["replay", str(trace), "--seed", "2", "--log", str(a)]) == 0
    assert main(["replay", str(trace), "--seed", "2", "--log", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_calibrate_reports_and_writes(capsys, tmp_path):
    out_file = tmp_path / "calib.json"
    assert main(["calibrate", "--corner-noise-mm", "1.0", "--out", str(out_file)]) == 0
    out = capsys.readouterr().out
    assert "translation error:" in out
    saved = json.loads(out_file.read_text())
    assert "rotation" in saved and "residual_rms_m" in saved


def test_config_file_supplies_defaults(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 0, "noise": "off"}))
    rc = main(["--config", str(cfg), "run-auto", "--sets", "1"])
    assert rc == 0
    assert "selection success:   100.00%" in capsys.readouterr().out


def test_config_toml(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('seed = 1\nnoise = "off"\n')
    assert main(["--config", str(cfg), "calibrate"]) == 0
    assert "residual rms:" in capsys.readouterr().out
