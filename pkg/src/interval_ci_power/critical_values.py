"""Critical values for the CI1 and CI2 confidence intervals.

CI1 uses one scalar critical value ``c`` solving

    Phi(c + delta / max(sigma_l, sigma_u)) - Phi(-c) = 1 - alpha,

which is G(delta / max(sigma_l, sigma_u)) with G(y) the unique positive root
of Phi(c + y) - Phi(-c) = 1 - alpha.

CI2 uses a pair (c_l, c_u) minimising sigma_l * c_l + sigma_u * c_u subject
to two bivariate normal coverage constraints, one per endpoint of the
identified set. Writing (z1, V) for a standard bivariate normal pair with
correlation rho, the constraints are

    P(z1 >= -c_l, V <= c_u + delta / sigma_u) >= 1 - alpha
    P(z1 <= c_u,  V >= -c_l - delta / sigma_l) >= 1 - alpha.

For delta = inf the unique solution is (Phi^{-1}(1 - alpha), Phi^{-1}(1 - alpha)),
and for rho = 1, sigma_l = sigma_u = sigma it is (G(delta / sigma), G(delta / sigma)).
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import optimize, special
from scipy.interpolate import PchipInterpolator

from .exceptions import InvalidParameterError, SolverError
from .normal_core import bvn_rect, check_corr, phi, quantile

logger = logging.getLogger(__name__)

# delta / sigma beyond this is numerically indistinguishable from infinity
LARGE_DELTA_RATIO = 40.0
# rho this close to +/-1 is snapped to the degenerate value
RHO_SNAP = 1e-8
ROOT_XTOL = 1e-14
BINDING_TOL = 1e-8
FEASIBILITY_TOL = 1e-9
KKT_STEP = 1e-6
# critical values above this are treated as unreachable
C_CAP = 60.0


@dataclass(frozen=True)
class CritScalar:
    """Scalar critical value with its achieved equation residual."""

    c: float
    residual: float


@dataclass(frozen=True)
class CritPair:
    """
    Critical pair for CI2.

    Attributes:
        c_l: Lower critical value
        c_u: Upper critical value
        binding: Whether each constraint holds with equality (within 1e-8)
        objective: sigma_l * c_l + sigma_u * c_u
        constraint_probs: The two constraint probabilities at (c_l, c_u)
        branch: Which solution branch produced the pair
    """

    c_l: float
    c_u: float
    binding: Tuple[bool, bool]
    objective: float
    constraint_probs: Tuple[float, float] = field(default=(math.nan, math.nan))
    branch: str = "both_binding"


def check_alpha(alpha: float) -> float:
    """
    Validate a significance level.

    Raises:
        InvalidParameterError: If alpha is not in (0, 0.5)
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 0.5):
        error_msg = f"alpha must lie in (0, 0.5), got {alpha}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return alpha


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if math.isnan(delta) or delta < 0.0:
        error_msg = f"delta must be a nonnegative extended real, got {delta}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return delta


def _check_sigma(sigma: float, name: str) -> float:
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0.0:
        error_msg = f"{name} must be a positive finite real, got {sigma}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return sigma


def _g_residual(c: float, y: float, alpha: float) -> float:
    return float(special.ndtr(c + y) - special.ndtr(-c)) - (1.0 - alpha)


@functools.lru_cache(maxsize=65536)
def _g_root(y: float, alpha: float) -> float:
    if y > LARGE_DELTA_RATIO:
        return float(special.ndtri(1.0 - alpha))
    upper = float(special.ndtri(1.0 - alpha / 2.0)) + 1.0
    try:
        return optimize.brentq(
            _g_residual, 0.0, upper, args=(y, alpha), xtol=ROOT_XTOL, maxiter=200
        )
    except (ValueError, RuntimeError) as e:
        error_msg = f"Failed to solve for G({y}) at alpha={alpha}: {e}"
        logger.error(error_msg)
        raise SolverError(
            error_msg, {"y": y, "alpha": alpha, "bracket": (0.0, upper)}
        ) from e


def solve_g(y: float, alpha: float) -> CritScalar:
    """
    Solve Phi(G + y) - Phi(-G) = 1 - alpha for G > 0.

    Args:
        y: Nonnegative extended real
        alpha: Significance level in (0, 0.5)

    Returns:
        CritScalar with G(y); G(inf) = Phi^{-1}(1 - alpha)

    Raises:
        InvalidParameterError: If y < 0 or alpha is invalid
        SolverError: If the bracketed root search fails
    """
    alpha = check_alpha(alpha)
    y = float(y)
    if math.isnan(y) or y < 0.0:
        error_msg = f"y must be a nonnegative extended real, got {y}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)

    c = _g_root(y, alpha)
    residual = _g_residual(c, y, alpha)
    return CritScalar(c=c, residual=residual)


def g_prime(y: float, alpha: float) -> float:
    """
    Derivative of G, from differentiating the defining identity.

    G'(y) = -phi(G(y) + y) / (phi(G(y) + y) + phi(-G(y))), which lies in (-1, 0).

    Args:
        y: Nonnegative finite real
        alpha: Significance level in (0, 0.5)

    Returns:
        G'(y)

    Raises:
        InvalidParameterError: If y is negative or not finite
    """
    if not math.isfinite(float(y)):
        error_msg = f"g_prime requires a finite y, got {y}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    g = solve_g(y, alpha).c
    upper = phi(g + y)
    return -upper / (upper + phi(-g))


def g_batch(y: np.ndarray, alpha: float) -> np.ndarray:
    """
    Vectorised G over an array, by bracketed bisection.

    Entries above 40 (including inf) take the analytic value Phi^{-1}(1 - alpha).

    Args:
        y: Array of nonnegative extended reals
        alpha: Significance level in (0, 0.5)

    Returns:
        Array of G(y) with the same shape as ``y``

    Raises:
        InvalidParameterError: If any entry is negative or NaN
    """
    alpha = check_alpha(alpha)
    y = np.asarray(y, dtype=float)
    if np.any(np.isnan(y)) or np.any(y < 0.0):
        error_msg = "g_batch requires nonnegative, non-NaN inputs"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)

    out = np.full(y.shape, float(special.ndtri(1.0 - alpha)))
    active = y <= LARGE_DELTA_RATIO
    if not np.any(active):
        return out

    ya = y[active]
    lo = np.zeros_like(ya)
    hi = np.full_like(ya, float(special.ndtri(1.0 - alpha / 2.0)) + 1.0)
    target = 1.0 - alpha
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = special.ndtr(mid + ya) - special.ndtr(-mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) <= 1e-14:
            break
    out[active] = 0.5 * (lo + hi)
    return out


def solve_c1(
    delta: float, sigma_l: float, sigma_u: float, alpha: float
) -> CritScalar:
    """
    Solve for the CI1 critical value.

    Args:
        delta: sqrt(N) * (theta_u_hat - theta_l_hat), a nonnegative extended real
        sigma_l: Standard deviation of the lower-bound estimator
        sigma_u: Standard deviation of the upper-bound estimator
        alpha: Significance level in (0, 0.5)

    Returns:
        CritScalar with c solving Phi(c + delta / max(sigma)) - Phi(-c) = 1 - alpha

    Raises:
        InvalidParameterError: If delta < 0, a sigma is nonpositive, or alpha is invalid
        SolverError: If the root search fails
    """
    alpha = check_alpha(alpha)
    delta = _check_delta(delta)
    sigma_l = _check_sigma(sigma_l, "sigma_l")
    sigma_u = _check_sigma(sigma_u, "sigma_u")

    y = delta / max(sigma_l, sigma_u)
    c = _g_root(y, alpha)
    residual = _g_residual(c, y, alpha)
    logger.debug(f"c1(delta={delta}, y={y}, alpha={alpha}) = {c} (residual {residual})")
    return CritScalar(c=c, residual=residual)


def ci2_constraints(
    c_l: float,
    c_u: float,
    delta: float,
    sigma_l: float,
    sigma_u: float,
    rho: float,
) -> Tuple[float, float]:
    """
    Evaluate both CI2 coverage constraints at (c_l, c_u).

    Returns:
        (P(z1 >= -c_l, V <= c_u + delta/sigma_u), P(z1 <= c_u, V >= -c_l - delta/sigma_l))
    """
    first = bvn_rect(-c_l, math.inf, -math.inf, c_u + delta / sigma_u, rho)
    second = bvn_rect(-math.inf, c_u, -c_l - delta / sigma_l, math.inf, rho)
    return first, second


def _smallest_feasible(
    constraint: Callable[[float], float], lower: float, target: float
) -> float:
    """Smallest x with constraint(x) >= target, for increasing ``constraint``.

    ``lower`` must satisfy constraint(lower) <= target. Returns inf when the
    target is not reached below C_CAP.
    """
    upper = max(lower + 1.0, 1.0)
    while constraint(upper) < target:
        if upper >= C_CAP:
            return math.inf
        upper = min(2.0 * upper + 1.0, C_CAP)
    if constraint(lower) >= target:
        return lower
    return optimize.brentq(
        lambda x: constraint(x) - target, lower, upper, xtol=ROOT_XTOL, maxiter=200
    )


class _Ci2Program:
    """The CI2 program for fixed (delta, sigma_l, sigma_u, rho, alpha)."""

    def __init__(self, delta, sigma_l, sigma_u, rho, alpha):
        self.delta = delta
        self.sigma_l = sigma_l
        self.sigma_u = sigma_u
        self.rho = rho
        self.alpha = alpha
        self.target = 1.0 - alpha
        self.z = quantile(1.0 - alpha)

    def constraints(self, c_l: float, c_u: float) -> Tuple[float, float]:
        return ci2_constraints(
            c_l, c_u, self.delta, self.sigma_l, self.sigma_u, self.rho
        )

    def u_first(self, c_l: float) -> float:
        """Smallest c_u making the first constraint hold at c_l."""
        lower = self.z - self.delta / self.sigma_u
        return _smallest_feasible(
            lambda c_u: self.constraints(c_l, c_u)[0], lower, self.target
        )

    def u_second(self, c_l: float) -> float:
        """Smallest c_u making the second constraint hold at c_l."""
        return _smallest_feasible(
            lambda c_u: self.constraints(c_l, c_u)[1], self.z, self.target
        )

    def upper_envelope(self, c_l: float) -> float:
        return max(self.u_first(c_l), self.u_second(c_l))

    def objective(self, c_l: float, c_u: float) -> float:
        return self.sigma_l * c_l + self.sigma_u * c_u

    def envelope_objective(self, c_l: float) -> float:
        c_u = self.upper_envelope(c_l)
        if not math.isfinite(c_u):
            return math.inf
        return self.objective(c_l, c_u)

    def improvable(self, c_l: float, c_u: float) -> bool:
        """Whether a feasible coordinate step of KKT_STEP lowers the objective."""
        for step_l, step_u in ((-KKT_STEP, 0.0), (0.0, -KKT_STEP)):
            probs = self.constraints(c_l + step_l, c_u + step_u)
            if min(probs) >= self.target:
                return True
        return False


def _finish_pair(program: _Ci2Program, c_l: float, c_u: float, branch: str) -> CritPair:
    probs = program.constraints(c_l, c_u)
    binding = tuple(bool(abs(p - program.target) <= BINDING_TOL) for p in probs)
    if branch not in ("infinite_delta", "equal_variance_degenerate"):
        if binding[0] and binding[1]:
            branch = "both_binding"
        elif binding[0]:
            branch = "lower_binding"
        elif binding[1]:
            branch = "upper_binding"
    return CritPair(
        c_l=c_l,
        c_u=c_u,
        binding=binding,
        objective=program.objective(c_l, c_u),
        constraint_probs=probs,
        branch=branch,
    )


def _solve_c2_numeric(program: _Ci2Program) -> CritPair:
    """Numerical solution of the CI2 program.

    Candidates: the point where both constraints bind, the minimiser of the
    objective along the upper envelope of the two binding curves, and the
    always-feasible (c1, c1). The lowest objective wins, ties going to the
    smallest c_l.
    """
    c1 = _g_root(program.delta / max(program.sigma_l, program.sigma_u), program.alpha)
    candidates = [(program.objective(c1, c1), c1, c1)]

    lo = program.z + 1e-7
    hi = (
        (program.sigma_l + program.sigma_u) * c1 - program.sigma_u * program.z
    ) / program.sigma_l + 1e-6
    hi = max(hi, lo + 1e-6)

    def gap(c_l: float) -> float:
        return min(program.u_first(c_l), C_CAP) - min(program.u_second(c_l), C_CAP)

    crossing = None
    try:
        gap_lo, gap_hi = gap(lo), gap(hi)
        if gap_lo * gap_hi < 0.0:
            crossing = optimize.brentq(gap, lo, hi, xtol=ROOT_XTOL, maxiter=200)
        elif gap_lo == 0.0:
            crossing = lo
        elif gap_hi == 0.0:
            crossing = hi
    except (ValueError, RuntimeError) as e:
        logger.debug(f"No both-binding point found on [{lo}, {hi}]: {e}")

    crossing_is_local_min = False
    if crossing is not None:
        c_u = program.upper_envelope(crossing)
        if math.isfinite(c_u):
            value = program.objective(crossing, c_u)
            candidates.append((value, crossing, c_u))
            step = 1e-6
            crossing_is_local_min = program.envelope_objective(
                crossing - step
            ) >= value and program.envelope_objective(crossing + step) >= value

    if not crossing_is_local_min:
        logger.warning(
            "CI2 program: no locally optimal both-binding point "
            f"(delta={program.delta}, sigma=({program.sigma_l}, {program.sigma_u}), "
            f"rho={program.rho}); searching the envelope"
        )
        result = optimize.minimize_scalar(
            program.envelope_objective,
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if result.success and math.isfinite(result.fun):
            c_l = float(result.x)
            candidates.append((float(result.fun), c_l, program.upper_envelope(c_l)))

    best_value = min(value for value, _, _ in candidates)
    ties = [cand for cand in candidates if cand[0] <= best_value + 1e-12]
    if len({round(cand[1], 9) for cand in ties}) > 1:
        logger.warning(
            f"CI2 program has several minimisers at objective {best_value}; "
            "returning the smallest c_l"
        )
    _, c_l, c_u = min(ties, key=lambda cand: cand[1])

    pair = _finish_pair(program, c_l, c_u, "numeric")
    if min(pair.constraint_probs) < program.target - FEASIBILITY_TOL:
        error_msg = (
            f"CI2 solution violates a constraint: probabilities {pair.constraint_probs} "
            f"below {program.target}"
        )
        logger.error(error_msg)
        raise SolverError(
            error_msg,
            {
                "delta": program.delta,
                "sigma_l": program.sigma_l,
                "sigma_u": program.sigma_u,
                "rho": program.rho,
                "alpha": program.alpha,
                "c_l": c_l,
                "c_u": c_u,
                "constraint_probs": pair.constraint_probs,
            },
        )
    if program.improvable(pair.c_l, pair.c_u):
        logger.warning(f"CI2 pair {pair.c_l}, {pair.c_u} is improvable by a coordinate step")
    return pair


@functools.lru_cache(maxsize=65536)
def _solve_c2_cached(
    delta: float, sigma_l: float, sigma_u: float, rho: float, alpha: float
) -> CritPair:
    program = _Ci2Program(delta, sigma_l, sigma_u, rho, alpha)

    if delta > LARGE_DELTA_RATIO * max(sigma_l, sigma_u):
        return _finish_pair(program, program.z, program.z, "infinite_delta")

    if rho == 1.0 and math.isclose(sigma_l, sigma_u, rel_tol=1e-12):
        g = _g_root(delta / sigma_l, alpha)
        return _finish_pair(program, g, g, "equal_variance_degenerate")

    return _solve_c2_numeric(program)


def solve_c2(
    delta: float,
    sigma_l: float,
    sigma_u: float,
    rho: float,
    alpha: float,
) -> CritPair:
    """
    Solve the CI2 program for the critical pair (c_l, c_u).

    Args:
        delta: sqrt(N) * (theta_u_hat - theta_l_hat), a nonnegative extended real
        sigma_l: Standard deviation of the lower-bound estimator
        sigma_u: Standard deviation of the upper-bound estimator
        rho: Correlation of the two bound estimators
        alpha: Significance level in (0, 0.5)

    Returns:
        CritPair minimising sigma_l * c_l + sigma_u * c_u over the feasible set

    Raises:
        InvalidParameterError: If an argument is outside its domain
        SolverError: If the numerical search cannot produce a feasible pair
    """
    alpha = check_alpha(alpha)
    delta = _check_delta(delta)
    sigma_l = _check_sigma(sigma_l, "sigma_l")
    sigma_u = _check_sigma(sigma_u, "sigma_u")
    rho = check_corr(rho)
    if rho >= 1.0 - RHO_SNAP:
        rho = 1.0
    elif rho <= -1.0 + RHO_SNAP:
        rho = -1.0

    pair = _solve_c2_cached(delta, sigma_l, sigma_u, rho, alpha)
    logger.debug(
        f"c2(delta={delta}, sigma=({sigma_l}, {sigma_u}), rho={rho}) = "
        f"({pair.c_l}, {pair.c_u}) via {pair.branch}"
    )
    return pair


class CritTable:
    """
    Tabulated CI2 critical map delta -> (c_l, c_u) for fixed sigmas and rho.

    Nodes sit on a quadratic grid in delta up to 40 * max(sigma); beyond that
    the analytic limit applies. Interpolation is monotone cubic (PCHIP).
    """

    def __init__(
        self,
        sigma_l: float,
        sigma_u: float,
        rho: float,
        alpha: float,
        nodes: int = 128,
    ):
        self.sigma_l = sigma_l
        self.sigma_u = sigma_u
        self.rho = rho
        self.alpha = alpha
        self.delta_max = LARGE_DELTA_RATIO * max(sigma_l, sigma_u)
        self.z = quantile(1.0 - alpha)

        grid = self.delta_max * np.linspace(0.0, 1.0, nodes) ** 2
        pairs = [solve_c2(d, sigma_l, sigma_u, rho, alpha) for d in grid]
        self._c_l = PchipInterpolator(grid, [p.c_l for p in pairs])
        self._c_u = PchipInterpolator(grid, [p.c_u for p in pairs])
        logger.info(
            f"Built CI2 table with {nodes} nodes for sigma=({sigma_l}, {sigma_u}), "
            f"rho={rho}, alpha={alpha}"
        )

    def __call__(self, delta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        delta = np.asarray(delta, dtype=float)
        far = delta >= self.delta_max
        clipped = np.where(far, 0.0, delta)
        c_l = np.where(far, self.z, self._c_l(clipped))
        c_u = np.where(far, self.z, self._c_u(clipped))
        return c_l, c_u


def solve_c2_batch(
    delta: np.ndarray,
    sigma_l: np.ndarray,
    sigma_u: np.ndarray,
    rho: np.ndarray,
    alpha: float,
    table: Optional[CritTable] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    CI2 critical pairs for many estimator draws.

    Analytic branches are evaluated in bulk; other rows go through ``table``
    when given, else through :func:`solve_c2` one at a time. Rows whose solve
    fails are flagged and carry NaN critical values.

    Returns:
        (c_l, c_u, failed) arrays
    """
    alpha = check_alpha(alpha)
    delta = np.asarray(delta, dtype=float)
    sigma_l = np.broadcast_to(np.asarray(sigma_l, dtype=float), delta.shape)
    sigma_u = np.broadcast_to(np.asarray(sigma_u, dtype=float), delta.shape)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), delta.shape)

    c_l = np.full(delta.shape, np.nan)
    c_u = np.full(delta.shape, np.nan)
    failed = np.zeros(delta.shape, dtype=bool)

    far = delta > LARGE_DELTA_RATIO * np.maximum(sigma_l, sigma_u)
    degenerate = ~far & (rho >= 1.0 - RHO_SNAP) & np.isclose(sigma_l, sigma_u, rtol=1e-12, atol=0.0)
    z = float(special.ndtri(1.0 - alpha))
    c_l[far] = z
    c_u[far] = z
    if np.any(degenerate):
        g = g_batch(delta[degenerate] / sigma_l[degenerate], alpha)
        c_l[degenerate] = g
        c_u[degenerate] = g

    rest = ~(far | degenerate)
    if table is not None and np.any(rest):
        c_l[rest], c_u[rest] = table(delta[rest])
    else:
        for i in np.flatnonzero(rest):
            try:
                pair = solve_c2(delta[i], sigma_l[i], sigma_u[i], rho[i], alpha)
            except SolverError as e:
                logger.debug(f"CI2 solve failed at row {i}: {e}")
                failed[i] = True
                continue
            c_l[i] = pair.c_l
            c_u[i] = pair.c_u
    return c_l, c_u, failed
