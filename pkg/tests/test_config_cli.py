import math

import numpy as np
import pytest

from rcae import __version__, harness
from rcae import io as rio
from rcae.cli import main
from rcae.config import DEFAULTS, build_mekf, build_rcae, format_config, load_config, parse_config_text
from rcae.errors import ConfigError, MalformedRecordError, SingularInnovationError
from rcae.harness import ScenarioConfig, run_scenario
from rcae.sensors import ImuRecord


def test_empty_config_is_defaults():
    assert parse_config_text("") == DEFAULTS
    assert load_config(None) == DEFAULTS


def test_parse_values_and_comments():
    v = parse_config_text(
        """
        # a comment
        duration = 5   # trailing
        seed = 3
        estimators = rcae, mekf
        rcae.filter = 1, 0.5
        noise.gyro_bias_deg = 1, 2, 3
        """
    )
    assert v["duration"] == 5.0 and v["seed"] == 3
    assert v["estimators"] == ("rcae", "mekf")
    assert v["rcae.filter"] == (1.0, 0.5)
    assert v["noise.gyro_bias_deg"] == (1.0, 2.0, 3.0)


@pytest.mark.parametrize(
    "text, match",
    [
        ("durration = 3", "unknown key"),
        ("duration 3", "key = value"),
        ("seed = x", "cannot parse"),
        ("rcae.theta0 = 1, a, 3", "cannot parse"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config_text(text)


def test_wrong_vector_length():
    with pytest.raises(ConfigError, match="three"):
        build_rcae(parse_config_text("rcae.theta0 = 1, 2"))


def test_format_round_trip():
    v = parse_config_text("duration = 7.5\nestimators = mekf\nmekf.dip_deg = 45")
    assert parse_config_text(format_config(v)) == v


def test_builders_convert_units():
    v = parse_config_text("mekf.initial_bias_deg = 5, 7, 4\nrcae.initial_euler_deg = 90, 0, 0")
    np.testing.assert_allclose(build_mekf(v).initial_bias, np.radians([5, 7, 4]))
    np.testing.assert_allclose(build_rcae(v).initial_estimate[0], [0, 1, 0], atol=1e-15)


def test_defaults_match_reference_scenario():
    a = ScenarioConfig.from_values(DEFAULTS)
    b = ScenarioConfig()
    assert a.n_steps == b.n_steps
    np.testing.assert_allclose(a.amplitudes, b.amplitudes)
    np.testing.assert_allclose(a.initial_euler, b.initial_euler)
    np.testing.assert_allclose(a.noise.gyro_bias, b.noise.gyro_bias)
    np.testing.assert_allclose(a.mekf.R, b.mekf.R)
    np.testing.assert_allclose(a.mekf.ref_mag, b.mekf.ref_mag)


def test_imu_log_round_trip(tmp_path):
    res = run_scenario(ScenarioConfig(duration=0.2), keep_log=True)
    path = tmp_path / "log.csv"
    rio.write_imu_log(path, res.log_records)
    back = rio.read_imu_log(path)
    assert len(back) == len(res.log_records)
    for a, b in zip(res.log_records, back):
        assert a.t == b.t
        assert np.array_equal(a.gyro, b.gyro)
        assert np.array_equal(a.accel, b.accel) and np.array_equal(a.mag, b.mag)
        assert np.array_equal(a.truth_quat, b.truth_quat)


def test_imu_log_without_truth(tmp_path):
    path = tmp_path / "log.csv"
    rio.write_imu_log(path, [ImuRecord(0.0, np.radians([1.0, 2.0, 3.0]), np.ones(3), np.zeros(3))])
    assert path.read_text().splitlines()[0] == ",".join(rio.LOG_COLUMNS)
    (r,) = rio.read_imu_log(path)
    assert r.truth_quat is None
    np.testing.assert_allclose(np.degrees(r.gyro), [1, 2, 3])


@pytest.mark.parametrize(
    "body, row",
    [
        ("t,gx,gy\n0,1,2\n", 0),
        ("t,gx,gy,gz,ax,ay,az,mx,my,mz\n0,0,0,0,0,0,1,1,0,0\n0.01,0,0,0,0,0,1\n", 1),
        ("t,gx,gy,gz,ax,ay,az,mx,my,mz\n0,0,0,0,0,0,1,1,0,oops\n", 0),
        ("", 0),
    ],
)
def test_malformed_logs(tmp_path, body, row):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(MalformedRecordError) as info:
        rio.read_imu_log(path)
    assert info.value.row == row


def test_table_round_trip(tmp_path):
    data = np.array([[0.1, -2.5e-17, math.pi], [1e300, 0.0, -1.0]])
    rio.write_table(tmp_path / "t.csv", ["a", "b", "c"], data)
    cols, back = rio.read_table(tmp_path / "t.csv")
    assert cols == ["a", "b", "c"] and np.array_equal(back, data)


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_cli_simulate_and_replay(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("duration = 1\n")
    out, logf, rep = tmp_path / "sim.csv", tmp_path / "log.csv", tmp_path / "rep.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--log-out", str(logf)]) == 0
    cols, sim = rio.read_table(out)
    assert sim.shape[0] == 100 and cols[0] == "t"
    assert main(["replay", "--log", str(logf), "--config", str(cfg), "--out", str(rep)]) == 0
    cols2, back = rio.read_table(rep)
    assert cols2 == cols
    i = cols.index("rcae_psi")
    np.testing.assert_array_equal(back[:, i:], sim[:, i:])


def test_cli_simulate_overrides(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--out", str(out), "--duration", "0.5", "--seed", "4", "--estimators", "mekf"]) == 0
    cols, data = rio.read_table(out)
    assert data.shape[0] == 50
    assert cols[-4:] == ["mekf_psi", "mekf_theta", "mekf_phi", "mekf_z"]


def test_cli_compare(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("duration = 1\n")
    assert main(["compare", "--out-dir", str(tmp_path / "o"), "--config", str(cfg)]) == 0
    names = {p.name for p in (tmp_path / "o").iterdir()}
    assert names == {"scenario.csv", "rcae.csv", "mekf.csv", "dead_reckon.csv", "summary.txt"}
    text = capsys.readouterr().out
    for name in ("rcae", "mekf", "dead_reckon", "measurement", "wall time"):
        assert name in text


def test_cli_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 1
    assert "unknown key" in capsys.readouterr().err
    assert main(["simulate", "--out", str(tmp_path / "x.csv"), "--estimators", "kalman"]) == 1
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "x.csv")]) == 1


def test_cli_input_errors(tmp_path):
    assert main(["replay", "--log", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("t,gx,gy,gz,ax,ay,az,mx,my,mz\n0,0,0,0,0,0,1,1,0,0\n0,0,0,0,0,0,1,1,0,0\n")
    assert main(["replay", "--log", str(bad), "--out", str(tmp_path / "o.csv")]) == 2


def test_cli_all_failed(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise SingularInnovationError("injected")

    monkeypatch.setattr(harness, "mekf_update", boom)
    argv = ["simulate", "--out", str(tmp_path / "o.csv"), "--duration", "0.5", "--estimators", "mekf"]
    assert main(argv) == 3
    argv[-1] = "mekf,dead_reckon"
    assert main(argv) == 0
