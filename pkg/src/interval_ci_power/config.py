"""Experiment configuration: INI-style files plus environment defaults."""

import configparser
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from .confidence_intervals import CiKind
from .critical_values import check_alpha
from .exceptions import ConfigError, IntervalCiError
from .mc_engine import AlternativeSeq, DgpSpec
from .utils import parse_extended_real, parse_int_list, parse_real_list

logger = logging.getLogger(__name__)

WORKERS_ENV = "INTERVAL_CI_WORKERS"
LOG_LEVEL_ENV = "INTERVAL_CI_LOG_LEVEL"

ALLOWED_KEYS = {
    "experiment": {
        "alpha",
        "ci_kinds",
        "reps",
        "seed",
        "workers",
        "output",
        "plot",
        "plugin_noise",
        "ci2_table",
    },
    "dgp": {
        "theta_l",
        "theta_u",
        "mu",
        "sigma_l",
        "sigma_u",
        "rho",
        "noise_tau",
        "sigma_lo_bound",
        "sigma_hi_bound",
        "delta_bar",
    },
    "alternative": {"kind", "theta_bar", "psi", "n"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A power-curve experiment read from a configuration file."""

    dgp: DgpSpec
    alternative: AlternativeSeq
    n_grid: Tuple[int, ...]
    psi_grid: Tuple[float, ...]
    alpha: float = 0.05
    ci_kinds: Tuple[CiKind, ...] = (CiKind.CI1, CiKind.CI2)
    reps: int = 100_000
    seed: int = 0
    mu: Optional[float] = None
    workers: Optional[int] = None
    output: Optional[Path] = None
    plot: Optional[Path] = None
    plugin_noise: float = 0.0
    ci2_table: bool = True


def _config_error(error_msg: str) -> ConfigError:
    logger.error(error_msg)
    return ConfigError(error_msg)


def _check_keys(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in ALLOWED_KEYS:
            raise _config_error(f"Unknown config section [{section}]")
        unknown = set(parser[section]) - ALLOWED_KEYS[section]
        if unknown:
            raise _config_error(
                f"Unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
            )
    for section in ("dgp", "alternative"):
        if section not in parser:
            raise _config_error(f"Missing config section [{section}]")


def _parse_bool(text: str, name: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise _config_error(f"{name} must be a boolean, got {text!r}")


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise _config_error(f"{name} must be an integer, got {text!r}")


def _build(parser: configparser.ConfigParser, base_dir: Path) -> ExperimentConfig:
    exp = parser["experiment"] if "experiment" in parser else {}
    dgp = parser["dgp"]
    alt = parser["alternative"]

    def real(section: Dict[str, str], key: str, default: Optional[float] = None) -> float:
        if key not in section:
            if default is None:
                raise _config_error(f"Missing required key {key!r}")
            return default
        return parse_extended_real(section[key], key)

    def path(key: str) -> Optional[Path]:
        if key not in exp or not exp[key].strip():
            return None
        p = Path(exp[key].strip())
        return p if p.is_absolute() else base_dir / p

    if ("theta_u" in dgp) == ("mu" in dgp):
        raise _config_error("[dgp] needs exactly one of theta_u and mu")
    theta_l = real(dgp, "theta_l")
    mu = None
    if "mu" in dgp:
        mu = real(dgp, "mu")
        if not (math.isfinite(mu) and mu >= 0.0):
            raise _config_error(f"mu must be a nonnegative finite real, got {mu}")
    spec = DgpSpec(
        theta_l=theta_l,
        theta_u=real(dgp, "theta_u") if mu is None else theta_l,
        sigma_l=real(dgp, "sigma_l"),
        sigma_u=real(dgp, "sigma_u"),
        rho=real(dgp, "rho"),
        noise_tau=real(dgp, "noise_tau", 0.0),
        sigma_lo_bound=real(dgp, "sigma_lo_bound", 0.01),
        sigma_hi_bound=real(dgp, "sigma_hi_bound", 100.0),
        delta_bar=real(dgp, "delta_bar", 100.0),
    )

    kind = alt.get("kind", "local_lower").strip()
    if kind == "fixed":
        alternative = AlternativeSeq(kind, theta_bar=real(alt, "theta_bar"))
        psi_grid = ()
    else:
        alternative = AlternativeSeq(kind)
        psi_grid = tuple(parse_real_list(alt.get("psi", "0"), "psi"))
    if "n" not in alt:
        raise _config_error("[alternative] needs an n grid")
    n_grid = tuple(parse_int_list(alt["n"], "n"))

    ci_kinds = tuple(
        CiKind.parse(item) for item in exp.get("ci_kinds", "CI1,CI2").split(",") if item.strip()
    )
    workers = _parse_int(exp["workers"], "workers") if "workers" in exp else None

    return ExperimentConfig(
        dgp=spec,
        alternative=alternative,
        n_grid=n_grid,
        psi_grid=psi_grid,
        alpha=check_alpha(real(exp, "alpha", 0.05)),
        ci_kinds=ci_kinds,
        reps=_parse_int(exp.get("reps", "100000"), "reps"),
        seed=_parse_int(exp.get("seed", "0"), "seed"),
        mu=mu,
        workers=workers,
        output=path("output"),
        plot=path("plot"),
        plugin_noise=real(exp, "plugin_noise", 0.0),
        ci2_table=_parse_bool(exp.get("ci2_table", "true"), "ci2_table"),
    )


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate an experiment configuration file.

    Relative ``output`` and ``plot`` paths resolve against the file's directory.

    Args:
        path: Path to the configuration file

    Returns:
        The validated ExperimentConfig

    Raises:
        ConfigError: If the file is unreadable, malformed or holds invalid values
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as e:
        raise _config_error(f"Cannot read config {path}: {e}")

    _check_keys(parser)
    try:
        config = _build(parser, path.parent)
    except ConfigError:
        raise
    except IntervalCiError as e:
        raise _config_error(f"Invalid configuration in {path}: {e}") from e
    logger.info(f"Loaded experiment config from {path}")
    return config


def resolve_workers(flag: Optional[int], config: Optional[int] = None) -> int:
    """Worker count: flag, then config file, then $INTERVAL_CI_WORKERS, then 1."""
    for source, value in (("--workers", flag), ("config", config)):
        if value is not None:
            if value < 1:
                raise _config_error(f"{source} must be at least 1, got {value}")
            return value
    env = os.getenv(WORKERS_ENV)
    if env:
        workers = _parse_int(env, WORKERS_ENV)
        if workers < 1:
            raise _config_error(f"{WORKERS_ENV} must be at least 1, got {workers}")
        return workers
    return 1


def resolve_log_level(flag: Optional[str]) -> str:
    """Log level: flag, then $INTERVAL_CI_LOG_LEVEL, then WARNING."""
    level = (flag or os.getenv(LOG_LEVEL_ENV) or "WARNING").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise _config_error(f"Unknown log level {level!r}")
    return level
