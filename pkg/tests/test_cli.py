import json

import pytest

from hypmaps import __version__
from hypmaps.cli import (
    EXIT_FAIL, EXIT_OK, EXIT_USAGE, ConfigError, config_hash, main, parse_perturbation, resolve_config, worker_count,
)

FAST_HMHF = ["hmhf", "--n", "100", "--s-max", "2", "--ds", "0.1", "--record-every", "5"]


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_hmhf_is_deterministic(capsys):
    c1, out1, _ = _run(capsys, FAST_HMHF)
    c2, out2, _ = _run(capsys, FAST_HMHF)
    assert c1 == c2 == EXIT_OK
    assert out1 == out2
    lines = out1.splitlines()
    assert lines[0] == f"# hypmaps {__version__} hmhf"
    assert lines[1].startswith("# config_hash ")
    header = next(line for line in lines if not line.startswith("#"))
    assert header == "s,energy,distance,l2_distance,constraint_defect"


def test_config_hash_tracks_parameters(capsys):
    _, a, _ = _run(capsys, FAST_HMHF)
    _, b, _ = _run(capsys, FAST_HMHF + ["--lambda", "0.7"])
    assert a.splitlines()[1] != b.splitlines()[1]
    cfg = resolve_config("hmhf", {}, {})
    assert config_hash("hmhf", cfg) == config_hash("hmhf", dict(reversed(list(cfg.items()))))


def test_config_file_and_flag_precedence(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 100, "s_max": 2.0, "ds": 0.2}))
    out = tmp_path / "out.csv"
    code, _, _ = _run(capsys, ["hmhf", "--config", str(path), "--ds", "0.1", "--out", str(out)])
    assert code == EXIT_OK
    cfg_line = next(line for line in out.read_text().splitlines() if line.startswith("# config {"))
    cfg = json.loads(cfg_line[len("# config "):])
    assert cfg["n"] == 100 and cfg["ds"] == 0.1 and cfg["s_max"] == 2.0


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"bogus": 1}))
    code, _, err = _run(capsys, ["hmhf", "--config", str(path)])
    assert code == EXIT_USAGE and "bogus" in err


def test_bad_perturbation_is_usage_error(capsys):
    code, _, err = _run(capsys, FAST_HMHF + ["--perturb", "m=2,amp=1e-2"])
    assert code == EXIT_USAGE and "configuration error" in err
    with pytest.raises(ConfigError):
        parse_perturbation("amp")
    assert parse_perturbation("amp=0.5,shape=bump")["amp"] == 0.5


def test_failed_check_exit_code(capsys):
    code, out, err = _run(capsys, ["spectrum", "--target", "s2", "--lambda", "2", "--n", "300", "--m-max", "2",
                                   "--expect", "strong"])
    assert code == EXIT_FAIL
    assert "failed checks" in err
    assert "# result check_strong_stability_lambda_2=false" in out


def test_spectrum_default_expectation_passes(capsys):
    code, out, _ = _run(capsys, ["spectrum", "--n", "300", "--lambda", "0.5,0.8"])
    assert code == EXIT_OK
    assert "check_strong_stability_lambda_0.8=true" in out


def test_workers_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("HYPMAPS_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(1) == 1
    monkeypatch.setenv("HYPMAPS_WORKERS", "many")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.setenv("HYPMAPS_WORKERS", "2")
    args = ["spectrum", "--n", "200", "--lambda", "0.5,0.8"]
    code, parallel, _ = _run(capsys, args)
    monkeypatch.setenv("HYPMAPS_WORKERS", "1")
    _, serial, _ = _run(capsys, args)
    assert code == EXIT_OK and parallel == serial
