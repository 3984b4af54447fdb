"""Tests for the coopkal command line: subcommands, exit codes, outputs."""

import subprocess
import sys

import pytest

from coopkal.cli import main, parse_seeds
from coopkal.errors import ConfigError

TINY_SYNTH = (
    "n_a = 16\nn_b = 10\nk = 3\nperiod = 4\nt_train = 16\nt_test = 4\n"
    "sigma_w = [0.05]\nseeds = [0]\nd_a = 1\nd_b = 1\n"
)


# ------------------------------------------------------------ parse_seeds

def test_parse_seeds_range_and_list():
    assert parse_seeds("0..9") == list(range(10))
    assert parse_seeds("3..3") == [3]
    assert parse_seeds("0,2,5") == [0, 2, 5]
    assert parse_seeds(" 4 ") == [4]


@pytest.mark.parametrize("spec", ["abc", "5..2", "1..x", "1;2", ""])
def test_parse_seeds_rejects_garbage(spec):
    with pytest.raises(ConfigError):
        parse_seeds(spec)


# --------------------------------------------------------------- validate

def test_validate_defaults(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "config ok" in out
    assert "dataset=synthetic" in out


def test_validate_reports_config_errors(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text("n_a = -5\n")
    assert main(["validate", "--config", str(p)]) == 2
    assert "config error" in capsys.readouterr().err


def test_validate_unknown_key(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text("widgets = 3\n")
    assert main(["validate", "--config", str(p)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_validate_missing_config_file(capsys):
    assert main(["validate", "--config", "/nonexistent.toml"]) == 2
    assert "cannot read config file" in capsys.readouterr().err


def test_bad_seed_override(capsys):
    assert main(["validate", "--seeds", "x..y"]) == 2
    assert "seeds must be" in capsys.readouterr().err


def test_no_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


# ------------------------------------------------------------------ synth

def test_synth_writes_report(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(TINY_SYNTH)
    out = tmp_path / "rep"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "report written to" in printed
    assert "coop" in printed and "wiener" in printed
    for name in ("mse_series.csv", "mse_avg.csv", "run_meta.json",
                 "mse_over_time.png", "mse_avg.png"):
        assert (out / name).exists(), name


def test_synth_no_figures(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(TINY_SYNTH)
    out = tmp_path / "rep"
    assert main(["synth", "--config", str(cfg), "--out", str(out),
                 "--no-figures"]) == 0
    assert (out / "mse_series.csv").exists()
    assert not list(out.glob("*.png"))


def test_synth_seed_override_lands_in_meta(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(TINY_SYNTH)
    out = tmp_path / "rep"
    assert main(["synth", "--config", str(cfg), "--seeds", "1..2",
                 "--out", str(out), "--no-figures"]) == 0
    assert '"seeds": [\n      1,\n      2\n    ]' in (out / "run_meta.json").read_text()


def test_synth_rejects_csv_dataset(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('dataset = "csv"\nperiod = 2\nt_train = 10\n')
    assert main(["synth", "--config", str(cfg)]) == 2
    assert "dataset = 'synthetic'" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    # an unregularized static solve with unobserved nodes is singular
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        "n_a = 20\nn_b = 12\nk = 3\nperiod = 8\nt_train = 40\nt_test = 4\n"
        "sigma_w = [0.05]\nseeds = [0]\nd_a = 2\nd_b = 1\nzeta = 0.0\n"
    )
    assert main(["synth", "--config", str(cfg), "--out",
                 str(tmp_path / "rep")]) == 4
    assert "numerical failure" in capsys.readouterr().err


# ---------------------------------------------------------- fixture + real

def test_fixture_then_real_round_trip(tmp_path, capsys):
    fx = tmp_path / "fx"
    assert main(["fixture", "--out", str(fx)]) == 0
    for name in ("signals.csv", "coords.csv", "config.toml"):
        assert (fx / name).exists(), name
    out = tmp_path / "rep"
    rc = main([
        "real", "--config", str(fx / "config.toml"),
        "--signals", str(fx / "signals.csv"), "--coords", str(fx / "coords.csv"),
        "--seeds", "0", "--out", str(out), "--no-figures",
    ])
    assert rc == 0
    assert (out / "mse_series.csv").exists()
    assert "report written to" in capsys.readouterr().out


def test_real_missing_signals_is_a_data_error(tmp_path, capsys):
    fx = tmp_path / "fx"
    assert main(["fixture", "--out", str(fx)]) == 0
    rc = main([
        "real", "--config", str(fx / "config.toml"),
        "--signals", str(tmp_path / "nope.csv"),
        "--coords", str(fx / "coords.csv"), "--out", str(tmp_path / "rep"),
    ])
    assert rc == 3
    assert "data error" in capsys.readouterr().err


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "coopkal", "validate"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "config ok" in proc.stdout
