"""Command-line driver: subcommands, artifacts, exit codes.

Everything runs in-process through ``cli.main(argv)`` so the exit-code
contract (0 ok, 2 usage, 3 numerical failure, 4 verification failed) is
asserted directly; one subprocess smoke test covers the installed script.
"""

import json
import shutil
import subprocess
import sys

import pytest

from memwave import cli


@pytest.fixture()
def cfg_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"problem": "full", "N": 32}))
    return str(p)


@pytest.fixture()
def synth_dir(tmp_path, cfg_file):
    out = tmp_path / "data"
    assert cli.main(["synth", "--config", cfg_file, "--out", str(out)]) == 0
    return str(out)


def test_help_smoke_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "memwave.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "synth" in proc.stdout and "reconstruct" in proc.stdout


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_synth_then_reconstruct_then_verify(tmp_path, cfg_file, synth_dir, capsys):
    rec = tmp_path / "rec"
    assert cli.main(["reconstruct", "--data", synth_dir, "--out", str(rec)]) == 0
    out = capsys.readouterr().out
    assert "interior rel error" in out
    report = json.load(open(rec / "report.json"))
    assert report["command"] == "reconstruct"
    assert report["metrics"]["l2_rel_err"] < 5e-2

    assert cli.main(["verify", "--data", synth_dir]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out


def test_missing_config_file_exit_2(tmp_path):
    rc = cli.main(["synth", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "o")])
    assert rc == 2


def test_bad_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"problem": "full", "warp": 9}))
    rc = cli.main(["synth", "--config", str(p), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_bad_threads_exit_2(tmp_path, synth_dir):
    rc = cli.main(["reconstruct", "--data", synth_dir,
                   "--out", str(tmp_path / "o"), "--threads", "0"])
    assert rc == 2


def test_numerical_failure_exit_3(tmp_path, synth_dir, capsys):
    broken = tmp_path / "broken"
    shutil.copytree(synth_dir, broken)
    lines = (broken / "response.csv").read_text().splitlines()
    t, _ = lines[33].split(",")
    lines[33] = f"{t},1e308"
    (broken / "response.csv").write_text("\n".join(lines) + "\n")
    rc = cli.main(["reconstruct", "--data", str(broken), "--out", str(tmp_path / "o")])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err


def test_verification_failure_exit_4(tmp_path, synth_dir, capsys):
    bad = tmp_path / "bad"
    shutil.copytree(synth_dir, bad)
    lines = (bad / "response.csv").read_text().splitlines()
    t, _ = lines[33].split(",")
    lines[33] = f"{t},1e3"
    (bad / "response.csv").write_text("\n".join(lines) + "\n")
    rc = cli.main(["verify", "--data", str(bad)])
    assert rc == 4
    captured = capsys.readouterr()
    assert "verification failed:" in captured.err
    assert "FAIL" in captured.out


def test_convergence_command(tmp_path, cfg_file, capsys):
    out = tmp_path / "conv"
    rc = cli.main(["convergence", "--config", cfg_file, "--out", str(out),
                   "--grids", "16,32"])
    assert rc == 0
    assert (out / "convergence.csv").exists()
    assert "N=   32" in capsys.readouterr().out


def test_convergence_bad_grids_exit_2(tmp_path, cfg_file):
    rc = cli.main(["convergence", "--config", cfg_file,
                   "--out", str(tmp_path / "c"), "--grids", "a,b"])
    assert rc == 2


def test_convergence_path_flag_overrides_config(tmp_path, cfg_file):
    out = tmp_path / "cw"
    rc = cli.main(["convergence", "--config", cfg_file, "--out", str(out),
                   "--grids", "16,32", "--path", "w_oracle"])
    assert rc == 0
    report = json.load(open(out / "report.json"))
    assert report["path"] == "w_oracle"


def test_synth_seed_flag(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(
        {"problem": "classical", "N": 16, "noise": {"sigma": 1e-3, "seed": 1}}
    ))
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(["synth", "--config", str(p), "--out", str(a)]) == 0
    assert cli.main(["synth", "--config", str(p), "--out", str(b), "--seed", "1"]) == 0
    assert cli.main(["synth", "--config", str(p), "--out", str(c), "--seed", "2"]) == 0
    assert (a / "response.csv").read_bytes() == (b / "response.csv").read_bytes()
    assert (a / "response.csv").read_bytes() != (c / "response.csv").read_bytes()
    # truth and kernel files carry no noise at all
    assert (a / "truth_q.csv").read_bytes() == (c / "truth_q.csv").read_bytes()
