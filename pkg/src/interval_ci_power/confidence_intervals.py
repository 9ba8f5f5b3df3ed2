"""Assemble CI1 and CI2 confidence intervals from a realised estimator tuple."""

import enum
import logging
import math
from dataclasses import dataclass

from .critical_values import check_alpha, solve_c1, solve_c2
from .exceptions import InvalidParameterError
from .normal_core import check_corr

logger = logging.getLogger(__name__)


class CiKind(str, enum.Enum):
    """Which confidence interval to build."""

    CI1 = "CI1"
    CI2 = "CI2"

    @classmethod
    def parse(cls, value: str) -> "CiKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper()
        if text in ("1", "CI1"):
            return cls.CI1
        if text in ("2", "CI2"):
            return cls.CI2
        error_msg = f"Unknown CI kind {value!r}; expected CI1 or CI2"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)


@dataclass(frozen=True)
class EstimatorTuple:
    """
    Realised bound estimates with their plug-in standard deviations.

    Attributes:
        theta_l_hat: Lower-bound estimate
        theta_u_hat: Upper-bound estimate, never below theta_l_hat
        sigma_l_hat: Estimated asymptotic sd of the lower-bound estimator
        sigma_u_hat: Estimated asymptotic sd of the upper-bound estimator
        rho_hat: Estimated correlation of the two estimators
        n: Sample size
    """

    theta_l_hat: float
    theta_u_hat: float
    sigma_l_hat: float
    sigma_u_hat: float
    rho_hat: float
    n: int

    def __post_init__(self):
        for name in ("theta_l_hat", "theta_u_hat"):
            value = getattr(self, name)
            if not math.isfinite(value):
                error_msg = f"{name} must be finite, got {value}"
                logger.error(error_msg)
                raise InvalidParameterError(error_msg)
        if self.theta_l_hat > self.theta_u_hat:
            error_msg = (
                f"Estimator tuple is not ordered: theta_l_hat={self.theta_l_hat} "
                f"> theta_u_hat={self.theta_u_hat}"
            )
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)
        for name in ("sigma_l_hat", "sigma_u_hat"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                error_msg = f"{name} must be a positive finite real, got {value}"
                logger.error(error_msg)
                raise InvalidParameterError(error_msg)
        check_corr(self.rho_hat, "rho_hat")
        if int(self.n) != self.n or self.n <= 0:
            error_msg = f"n must be a positive integer, got {self.n}"
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)

    @property
    def delta(self) -> float:
        """sqrt(n) * (theta_u_hat - theta_l_hat)."""
        return math.sqrt(self.n) * (self.theta_u_hat - self.theta_l_hat)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            error_msg = f"Invalid interval [{self.lo}, {self.hi}]"
            logger.error(error_msg)
            raise InvalidParameterError(error_msg)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


def build_ci1(est: EstimatorTuple, alpha: float) -> Interval:
    """
    Build CI1 = [theta_l_hat - sigma_l_hat c / sqrt(n), theta_u_hat + sigma_u_hat c / sqrt(n)].

    ``rho_hat`` does not enter CI1.

    Args:
        est: Estimator tuple
        alpha: Significance level in (0, 0.5)

    Returns:
        The interval

    Raises:
        InvalidParameterError: If alpha is invalid
        SolverError: If the critical value cannot be solved for
    """
    alpha = check_alpha(alpha)
    c = solve_c1(est.delta, est.sigma_l_hat, est.sigma_u_hat, alpha).c
    root_n = math.sqrt(est.n)
    return Interval(
        lo=est.theta_l_hat - est.sigma_l_hat * c / root_n,
        hi=est.theta_u_hat + est.sigma_u_hat * c / root_n,
    )


def build_ci2(est: EstimatorTuple, alpha: float) -> Interval:
    """
    Build CI2 from the critical pair minimising the weighted length.

    Args:
        est: Estimator tuple
        alpha: Significance level in (0, 0.5)

    Returns:
        The interval [theta_l_hat - sigma_l_hat c_l / sqrt(n), theta_u_hat + sigma_u_hat c_u / sqrt(n)]

    Raises:
        InvalidParameterError: If alpha is invalid
        SolverError: If the critical pair cannot be solved for
    """
    alpha = check_alpha(alpha)
    pair = solve_c2(est.delta, est.sigma_l_hat, est.sigma_u_hat, est.rho_hat, alpha)
    root_n = math.sqrt(est.n)
    return Interval(
        lo=est.theta_l_hat - est.sigma_l_hat * pair.c_l / root_n,
        hi=est.theta_u_hat + est.sigma_u_hat * pair.c_u / root_n,
    )


def build_ci(est: EstimatorTuple, alpha: float, ci_kind: CiKind) -> Interval:
    """Build the interval of the requested kind."""
    if CiKind.parse(ci_kind) is CiKind.CI1:
        return build_ci1(est, alpha)
    return build_ci2(est, alpha)


def covers(ci: Interval, theta: float) -> bool:
    """True iff lo <= theta <= hi (endpoints included)."""
    return ci.lo <= theta <= ci.hi
