import argparse

import pytest
from pydantic import ValidationError

from nhgeo.cli.common import load_config_file, parse_vector, resolve_config
from nhgeo.core.config import Settings
from nhgeo.core.errors import ConfigError
from nhgeo.models.models import RunConfig


def test_settings_defaults():
    settings = Settings()
    assert settings.integrator_steps == 1000
    assert settings.csv_digits == 17
    assert settings.newton_tol == 1e-10


def test_settings_read_the_environment(monkeypatch):
    monkeypatch.setenv("NHGEO_INTEGRATOR_STEPS", "250")
    monkeypatch.setenv("NHGEO_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.integrator_steps == 250
    assert settings.log_level == "DEBUG"


def test_run_config_defaults():
    config = RunConfig()
    assert config.system == "particle"
    assert config.metric == "flat"
    assert config.outer_steps == 64
    assert config.base is None


@pytest.mark.parametrize(
    "values",
    [
        {"I": 0.0},
        {"J": -1.0},
        {"grid": 1},
        {"steps": 0},
        {"tol": 0.0},
        {"bump": -0.1},
        {"policy": "loose"},
        {"kind": "sphere"},
        {"objective": "area"},
        {"v0": [1.0, float("nan")]},
        {"colour": "blue"},
    ],
)
def test_run_config_validation(values):
    with pytest.raises(ValidationError):
        RunConfig(**values)


def test_parse_vector():
    assert parse_vector("1,-0.5") == [1.0, -0.5]
    assert parse_vector(" 2 , 3 ,") == [2.0, 3.0]
    with pytest.raises(ConfigError):
        parse_vector("1,x")
    with pytest.raises(ConfigError):
        parse_vector("")


def test_config_file_keys(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("system=disk\nmetric-steps=50\nbase=0,0,0,1\n", encoding="utf-8")
    assert load_config_file(str(path)) == {"system": "disk", "metric_steps": "50", "base": [0.0, 0.0, 0.0, 1.0]}


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "absent.cfg"))


def test_command_line_wins_over_the_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("grid=9\nseed=3\n", encoding="utf-8")
    args = argparse.Namespace(config=str(path), grid=11, log_level="INFO", handler=None, subcommand="gauss-check")
    config = resolve_config("gauss-check", args)
    assert config.grid == 11
    assert config.seed == 3
    assert config.command == "gauss-check"


def test_invalid_resolved_config_is_a_config_error():
    with pytest.raises(ConfigError):
        resolve_config("simulate", argparse.Namespace(steps=-5))
