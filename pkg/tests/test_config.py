from pathlib import Path

import pytest

from interval_ci_power.confidence_intervals import CiKind
from interval_ci_power.config import (
    LOG_LEVEL_ENV,
    WORKERS_ENV,
    load_experiment_config,
    resolve_log_level,
    resolve_workers,
)
from interval_ci_power.exceptions import ConfigError

BASIC = """\
[experiment]
alpha = 0.05
ci_kinds = CI1, 2
reps = 2000
seed = 7
output = out/power.csv
plot = out/power.svg

[dgp]
theta_l = 0
mu = 1
sigma_l = 1
sigma_u = 1
rho = 1
noise_tau = 0.5

[alternative]
kind = local_lower
psi = 0, 1, 2
n = 100, 1000
"""


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_basic_config(tmp_path):
    config = load_experiment_config(write(tmp_path, BASIC))
    assert config.ci_kinds == (CiKind.CI1, CiKind.CI2)
    assert config.n_grid == (100, 1000)
    assert config.psi_grid == (0.0, 1.0, 2.0)
    assert config.mu == 1.0
    assert config.dgp.theta_u == config.dgp.theta_l == 0.0
    assert config.dgp.noise_tau == 0.5
    assert config.reps == 2000 and config.seed == 7
    assert config.output == tmp_path / "out" / "power.csv"
    assert config.plot == tmp_path / "out" / "power.svg"
    assert config.workers is None
    assert config.ci2_table is True


def test_defaults_apply_without_experiment_section(tmp_path):
    text = BASIC.split("[dgp]")[1]
    config = load_experiment_config(write(tmp_path, "[dgp]" + text))
    assert config.alpha == 0.05
    assert config.reps == 100_000
    assert config.output is None and config.plot is None


def test_fixed_alternative(tmp_path):
    text = BASIC.replace("kind = local_lower\npsi = 0, 1, 2", "kind = fixed\ntheta_bar = -0.5")
    config = load_experiment_config(write(tmp_path, text))
    assert config.alternative.kind == "fixed"
    assert config.alternative.theta_bar == -0.5
    assert config.psi_grid == ()


def test_explicit_theta_u(tmp_path):
    text = BASIC.replace("mu = 1", "theta_u = 2.5")
    config = load_experiment_config(write(tmp_path, text))
    assert config.mu is None
    assert config.dgp.theta_u == 2.5


@pytest.mark.parametrize(
    "old, new, fragment",
    [
        ("seed = 7", "seed = 7\ncolour = blue", "colour"),
        ("[alternative]", "[extra]\nx = 1\n\n[alternative]", "[extra]"),
        ("mu = 1", "mu = 1\ntheta_u = 1", "exactly one"),
        ("mu = 1", "mu = inf", "mu"),
        ("n = 100, 1000", "n = 100, -5", "n"),
        ("alpha = 0.05", "alpha = 0.7", "alpha"),
        ("rho = 1", "rho = 1.5", "rho"),
        ("kind = local_lower", "kind = sideways", "kind"),
        ("reps = 2000", "reps = lots", "reps"),
    ],
)
def test_invalid_configs(tmp_path, old, new, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("[", r"\[")):
        load_experiment_config(write(tmp_path, BASIC.replace(old, new)))


def test_missing_section(tmp_path):
    text = BASIC.split("[alternative]")[0]
    with pytest.raises(ConfigError, match="alternative"):
        load_experiment_config(write(tmp_path, text))


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "missing.ini")


def test_resolve_workers_precedence(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert resolve_workers(None) == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers(None) == 3
    assert resolve_workers(None, 2) == 2
    assert resolve_workers(4, 2) == 4
    with pytest.raises(ConfigError):
        resolve_workers(0)
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_workers(None)


def test_resolve_log_level(monkeypatch):
    monkeypatch.delenv(LOG_LEVEL_ENV, raising=False)
    assert resolve_log_level(None) == "WARNING"
    monkeypatch.setenv(LOG_LEVEL_ENV, "debug")
    assert resolve_log_level(None) == "DEBUG"
    assert resolve_log_level("error") == "ERROR"
    with pytest.raises(ConfigError):
        resolve_log_level("chatty")


def test_infinite_theta_u_rejected(tmp_path):
    text = BASIC.replace("mu = 1", "theta_u = inf")
    with pytest.raises(ConfigError, match="theta_u"):
        load_experiment_config(write(tmp_path, text))


@pytest.mark.parametrize("name", ["dominance.ini", "boundary.ini"])
def test_shipped_configs_load(name):
    configs = Path(__file__).resolve().parent.parent / "configs"
    config = load_experiment_config(configs / name)
    assert config.reps == 100_000
    assert config.n_grid == (2000,)
