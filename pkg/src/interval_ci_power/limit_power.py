"""Limiting coverage functions H and W for CI1 under drifting alternatives.

Notation: ``mu`` is the limit of sqrt(N) times the identified-set length and
``psi`` the limit of sqrt(N) times the distance from the tested value to the
bound it violates. Both live in the extended nonnegative reals.

W is the limiting probability that CI1 covers the drifting value. Only two
regimes are reachable when the bound estimators are almost surely ordered:
an infinite ``mu`` (closed form) and a finite ``mu`` with perfectly
correlated, equal-variance estimators, where W reduces to H.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .confidence_intervals import CiKind
from .critical_values import LARGE_DELTA_RATIO, RHO_SNAP, check_alpha, g_batch, solve_g
from .exceptions import InvalidParameterError
from .normal_core import check_corr, quantile

logger = logging.getLogger(__name__)

SIDES = ("lower", "upper")


def _check_extended_nonneg(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or value < 0.0:
        error_msg = f"{name} must be a nonnegative extended real, got {value}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return value


def _check_side(side: str) -> str:
    if side not in SIDES:
        error_msg = f"side must be one of {SIDES}, got {side!r}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return side


@dataclass(frozen=True)
class DriftParams:
    """Drift limits (mu, psi) of a local alternative sequence."""

    mu: float
    psi: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_extended_nonneg(self.mu, "mu"))
        object.__setattr__(self, "psi", _check_extended_nonneg(self.psi, "psi"))


@dataclass(frozen=True)
class LimitSigmas:
    """
    Limit standard deviations and correlation of the bound estimators.

    ``sigma_lo`` and ``sigma_hi`` are the optional sd bounds of the
    distribution family; when given, both sigmas must lie between them.
    """

    sigma_l: float
    sigma_u: float
    rho: float
    sigma_lo: Optional[float] = None
    sigma_hi: Optional[float] = None

    def __post_init__(self):
        for name in ("sigma_l", "sigma_u"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                error_msg = f"{name} must be a positive finite real, got {value}"
                logger.error(error_msg)
                raise InvalidParameterError(error_msg)
            if self.sigma_lo is not None and value < self.sigma_lo:
                error_msg = f"{name}={value} is below the lower sd bound {self.sigma_lo}"
                logger.error(error_msg)
                raise InvalidParameterError(error_msg)
            if self.sigma_hi is not None and value > self.sigma_hi:
                error_msg = f"{name}={value} is above the upper sd bound {self.sigma_hi}"
                logger.error(error_msg)
                raise InvalidParameterError(error_msg)
        check_corr(self.rho)

    @property
    def degenerate(self) -> bool:
        """Perfect correlation with equal variances."""
        return self.rho >= 1.0 - RHO_SNAP and math.isclose(
            self.sigma_l, self.sigma_u, rel_tol=1e-12
        )


@dataclass(frozen=True)
class HViolation:
    """A pair of adjacent sigmas where H decreased."""

    mu: float
    psi: float
    sigma_1: float
    sigma_2: float
    h_1: float
    h_2: float


@dataclass(frozen=True)
class DominanceCase:
    """Limiting CI1 coverage for an efficient/inefficient pair at one (mu, psi)."""

    sig_e: LimitSigmas
    sig_i: LimitSigmas
    drift: DriftParams
    cover_e: float
    cover_i: float


def eval_h(sigma: float, mu: float, psi: float, alpha: float) -> float:
    """
    H(sigma, mu, psi) = Phi((psi + mu)/sigma + G(mu/sigma)) - Phi(psi/sigma - G(mu/sigma)).

    Args:
        sigma: Common sd of the bound estimators, positive
        mu: Finite limit of sqrt(N) times the identified-set length
        psi: Scaled distance to the violated bound, inf allowed
        alpha: Significance level in (0, 0.5)

    Returns:
        H in [0, 1]; zero when psi is infinite

    Raises:
        InvalidParameterError: If sigma <= 0, mu is infinite or negative, or psi < 0
    """
    alpha = check_alpha(alpha)
    sigma = float(sigma)
    if not (math.isfinite(sigma) and sigma > 0.0):
        error_msg = f"sigma must be a positive finite real, got {sigma}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    mu = _check_extended_nonneg(mu, "mu")
    if math.isinf(mu):
        error_msg = "eval_h requires a finite mu"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    psi = _check_extended_nonneg(psi, "psi")
    if math.isinf(psi):
        return 0.0

    g = solve_g(mu / sigma, alpha).c
    upper = (psi + mu) / sigma + g
    lower = psi / sigma - g
    if lower > 0.0:
        value = float(special.ndtr(-lower) - special.ndtr(-upper))
    else:
        value = float(special.ndtr(upper) - special.ndtr(lower))
    return min(1.0, max(0.0, value))


def eval_w(
    sig: LimitSigmas,
    mu: float,
    psi: float,
    alpha: float,
    for_ci: CiKind = CiKind.CI1,
    side: str = "lower",
) -> float:
    """
    Limiting coverage probability W of a drifting value outside the identified set.

    For infinite mu (or mu above 40 * max sigma) this is
    Phi(Phi^{-1}(1 - alpha) - psi / sigma_side). For finite mu the estimators
    must be perfectly correlated with equal variances and W equals H.
    CI2 shares both limits.

    Args:
        sig: Limit sigmas and correlation
        mu: Limit of sqrt(N) times the identified-set length
        psi: Scaled distance to the violated bound
        alpha: Significance level in (0, 0.5)
        for_ci: CI kind; both kinds have the same limit in these regimes
        side: Which bound is violated, "lower" or "upper"

    Returns:
        The limiting coverage probability

    Raises:
        InvalidParameterError: For finite mu outside the rho = 1, equal-sd regime
    """
    alpha = check_alpha(alpha)
    drift = DriftParams(mu, psi)
    mu, psi = drift.mu, drift.psi
    side = _check_side(side)
    CiKind.parse(for_ci)

    if math.isinf(mu) or mu > LARGE_DELTA_RATIO * max(sig.sigma_l, sig.sigma_u):
        if math.isinf(psi):
            return 0.0
        scale = sig.sigma_l if side == "lower" else sig.sigma_u
        return float(special.ndtr(quantile(1.0 - alpha) - psi / scale))

    if not sig.degenerate:
        error_msg = (
            f"Finite mu={mu} is not a reachable limit for rho={sig.rho}, "
            f"sigma_l={sig.sigma_l}, sigma_u={sig.sigma_u}: ordered bound estimators "
            "with a finite scaled length need near-one correlation, i.e. rho = 1 "
            "and sigma_l = sigma_u"
        )
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return eval_h(sig.sigma_l, mu, psi, alpha)


def simulate_w(
    sig: LimitSigmas,
    mu: float,
    psi: float,
    alpha: float,
    reps: int = 1_000_000,
    seed: int = 0,
    side: str = "lower",
) -> Tuple[float, float]:
    """
    Monte Carlo estimate of the event defining W.

    With z1, z2 independent standard normals and V = rho z1 + sqrt(1 - rho^2) z2,
    the scaled estimator errors are sigma_l z1 and sigma_u V, and the critical
    value is G(max(D, 0) / max sigma) with D = mu + sigma_u V - sigma_l z1.

    Returns:
        (estimate, standard error)
    """
    alpha = check_alpha(alpha)
    drift = DriftParams(mu, psi)
    mu, psi = drift.mu, drift.psi
    side = _check_side(side)
    if reps <= 0:
        error_msg = f"reps must be positive, got {reps}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    z = rng.standard_normal((reps, 2))
    z1 = z[:, 0]
    v = sig.rho * z1 + math.sqrt(max(0.0, 1.0 - sig.rho * sig.rho)) * z[:, 1]
    s_l, s_u = sig.sigma_l, sig.sigma_u

    if math.isinf(mu):
        c = np.full(reps, quantile(1.0 - alpha))
    else:
        d = np.maximum(mu + s_u * v - s_l * z1, 0.0)
        c = g_batch(d / max(s_l, s_u), alpha)

    # everything is measured from the violated bound
    with np.errstate(invalid="ignore"):
        if side == "lower":
            lower_ok = s_l * z1 - s_l * c <= -psi
            upper_ok = np.full(reps, True) if math.isinf(mu) else -psi <= mu + s_u * v + s_u * c
        else:
            lower_ok = np.full(reps, True) if math.isinf(mu) else s_l * z1 - s_l * c - mu <= psi
            upper_ok = psi <= s_u * v + s_u * c

    p = float(np.mean(lower_ok & upper_ok))
    se = math.sqrt(p * (1.0 - p) / reps)
    logger.debug(f"simulate_w(mu={mu}, psi={psi}, side={side}) = {p} (se {se})")
    return p, se


def default_h_grid() -> List[Tuple[float, float, float]]:
    """sigma in 0.50:0.01:3.00, mu in {0, 0.7, 2}, psi in {0, 1, 2, 5}."""
    sigmas = np.round(np.linspace(0.5, 3.0, 251), 2)
    return [
        (float(s), mu, psi)
        for mu in (0.0, 0.7, 2.0)
        for psi in (0.0, 1.0, 2.0, 5.0)
        for s in sigmas
    ]


def h_monotonicity_scan(
    grid: Iterable[Tuple[float, float, float]], alpha: float, tol: float = 1e-10
) -> List[HViolation]:
    """
    Check that H is weakly increasing in sigma for every (mu, psi) on a grid.

    Args:
        grid: (sigma, mu, psi) points
        alpha: Significance level in (0, 0.5)
        tol: Allowed decrease between adjacent sigmas

    Returns:
        Violations found; empty when H is monotone on the grid
    """
    by_drift = defaultdict(set)
    for sigma, mu, psi in grid:
        by_drift[(float(mu), float(psi))].add(float(sigma))

    violations = []
    for (mu, psi), sigmas in sorted(by_drift.items()):
        ordered = sorted(sigmas)
        values = [eval_h(s, mu, psi, alpha) for s in ordered]
        for i in range(len(ordered) - 1):
            if values[i] > values[i + 1] + tol:
                violations.append(
                    HViolation(mu, psi, ordered[i], ordered[i + 1], values[i], values[i + 1])
                )

    if violations:
        logger.warning(f"H monotonicity scan found {len(violations)} violations")
    else:
        logger.info(f"H monotonicity scan passed on {len(by_drift)} (mu, psi) pairs")
    return violations


def power_dominance_limit(
    sig_e: LimitSigmas,
    sig_i: LimitSigmas,
    mu: float,
    psi: float,
    alpha: float,
    side: str = "lower",
) -> Tuple[float, float]:
    """
    Limiting CI1 coverage of the efficient and the inefficient estimator.

    Returns:
        (W for the efficient channel, W for the inefficient channel)

    Raises:
        InvalidParameterError: If the efficient sigmas exceed the inefficient ones
    """
    if sig_e.sigma_l > sig_i.sigma_l or sig_e.sigma_u > sig_i.sigma_u:
        error_msg = (
            "The efficient estimator must have sigmas no larger than the inefficient "
            f"one: got ({sig_e.sigma_l}, {sig_e.sigma_u}) vs ({sig_i.sigma_l}, {sig_i.sigma_u})"
        )
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)

    w_e = eval_w(sig_e, mu, psi, alpha, side=side)
    w_i = eval_w(sig_i, mu, psi, alpha, side=side)
    if w_e > w_i + 1e-9:
        logger.warning(f"Limiting coverage not dominated: {w_e} > {w_i}")
    return w_e, w_i


def strict_dominance_family(
    sig_e: LimitSigmas,
    taus: Sequence[float],
    psis: Sequence[float],
    alpha: float,
    mu: float = math.inf,
) -> List[DominanceCase]:
    """
    Cases where the efficient channel is covered strictly less often.

    The inefficient sigmas come from adding independent noise of sd ``tau`` to
    both bounds. Only tau > 0 and psi strictly between 0 and inf qualify; the
    family is one sufficient example, not a characterisation.
    """
    cases = []
    for tau in taus:
        if not tau > 0.0:
            continue
        s_l = math.sqrt(sig_e.sigma_l**2 + tau**2)
        s_u = math.sqrt(sig_e.sigma_u**2 + tau**2)
        rho = (sig_e.rho * sig_e.sigma_l * sig_e.sigma_u + tau**2) / (s_l * s_u)
        sig_i = LimitSigmas(s_l, s_u, min(1.0, rho))
        for psi in psis:
            if not 0.0 < psi < math.inf:
                continue
            w_e, w_i = power_dominance_limit(sig_e, sig_i, mu, psi, alpha)
            cases.append(DominanceCase(sig_e, sig_i, DriftParams(mu, psi), w_e, w_i))
    return cases
