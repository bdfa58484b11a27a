import dataclasses

from fogfleet.cli import main
from fogfleet.config import ScenarioConfig


def test_validate_config_echoes_defaults(capsys):
    assert main(["validate-config"]) == 0
    out = capsys.readouterr().out
    assert "carrier_hz = 28000000000.0" in out
    assert "bandwidth_hz = 500000000.0" in out
    assert "driving_speed_kmh = 40.0" in out
    assert "bs_tx_power_dbm = 35.0" in out
    assert "jaywalk_intensity_per_min = 1.0" in out


def test_validate_config_applies_overrides(capsys):
    code = main(["validate-config", "--seed", "9", "--no-proactive",
                 "--degree", "2", "--infra", "on", "--fog-fraction", "0.4"])
    assert code == 0
    out = capsys.readouterr().out
    assert "master_seed = 9" in out
    assert "proactive_reselection = false" in out
    assert "multiconnectivity_degree = 2" in out
    assert "infrastructure_compute = true" in out
    assert "fog_fraction = 0.4" in out


def test_missing_config_file_is_exit_2(capsys):
    assert main(["validate-config", "--config", "/nonexistent/conf.toml"]) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_config_value_is_exit_2(tmp_path, capsys):
    path = tmp_path / "cfg.toml"
    path.write_text("bandwidth_hz = -5.0\n")
    assert main(["validate-config", "--config", str(path)]) == 2


def test_unknown_key_is_exit_2(tmp_path, capsys):
    path = tmp_path / "cfg.toml"
    path.write_text("carier_hz = 28e9\n")
    assert main(["validate-config", "--config", str(path)]) == 2
    assert "unknown" in capsys.readouterr().err


def test_usage_error_is_exit_2(capsys):
    assert main(["warp-drive"]) == 2


def test_help_enumerates_every_config_key(capsys):
    code = main(["--help"])
    assert code == 0
    out = capsys.readouterr().out
    for field in dataclasses.fields(ScenarioConfig):
        assert field.name in out


def run_args(out_dir, extra=()):
    return ["run", "--experiment", "jaywalk", "--density", "5",
            "--fog-fraction", "0.2", "--seed", "7", "--rounds", "1",
            "--duration", "6", "--jaywalk-intensity", "20",
            "--output", str(out_dir), *extra]


def test_run_twice_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(run_args(a)) == 0
    assert main(run_args(b)) == 0
    files = sorted(p.name for p in a.iterdir())
    assert "rounds_jaywalk_d5_f0.2_i0.csv" in files
    assert "summary_jaywalk.csv" in files
    assert "effective_config.toml" in files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_effective_config_reruns_identically(tmp_path, capsys):
    a = tmp_path / "a"
    assert main(run_args(a)) == 0
    b = tmp_path / "b"
    assert main(["run", "--config", str(a / "effective_config.toml"),
                 "--output", str(b)]) == 0
    rounds = "rounds_jaywalk_d5_f0.2_i0.csv"
    assert (a / rounds).read_bytes() == (b / rounds).read_bytes()
    assert (a / "effective_config.toml").read_bytes() == (b / "effective_config.toml").read_bytes()


def test_run_prints_summary_table(tmp_path, capsys):
    assert main(run_args(tmp_path / "o")) == 0
    out = capsys.readouterr().out
    assert "density" in out and "misses" in out
    assert "outputs written" in out
