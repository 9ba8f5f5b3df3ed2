"""Univariate and bivariate standard normal primitives.

Every probability in the package flows through this module. Univariate
functions wrap the erfc-based routines in ``scipy.special`` (region-split
evaluation that keeps relative accuracy in the tails); bivariate rectangle
probabilities use inclusion-exclusion over lower orthants, each computed with
the Drezner-Wesolowsky Gauss-Legendre scheme in Alan Genz's double-precision
revision.

Extended reals are plain floats: ``math.inf`` and ``-math.inf`` are accepted
wherever a bound is expected.
"""

import logging
import math

import numpy as np
from scipy import special

from .exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
TWO_PI = 2.0 * math.pi

# |rho| at or above this is treated as perfectly (anti-)correlated
DEGENERATE_RHO = 1.0 - 1e-12

# Gauss-Legendre half-rules (weights, abscissae); keys are the rule order
GAUSS_LEGENDRE = {
    6: (
        np.array([0.1713244923791705, 0.3607615730481384, 0.4679139345726904]),
        np.array([0.9324695142031522, 0.6612093864662647, 0.2386191860831970]),
    ),
    12: (
        np.array(
            [
                0.04717533638651177,
                0.1069393259953183,
                0.1600783285433464,
                0.2031674267230659,
                0.2334925365383547,
                0.2491470458134029,
            ]
        ),
        np.array(
            [
                0.9815606342467191,
                0.9041172563704750,
                0.7699026741943050,
                0.5873179542866171,
                0.3678314989981802,
                0.1252334085114692,
            ]
        ),
    ),
    20: (
        np.array(
            [
                0.01761400713915212,
                0.04060142980038694,
                0.06267204833410906,
                0.08327674157670475,
                0.1019301198172404,
                0.1181945319615184,
                0.1316886384491766,
                0.1420961093183821,
                0.1491729864726037,
                0.1527533871307259,
            ]
        ),
        np.array(
            [
                0.9931285991850949,
                0.9639719272779138,
                0.9122344282513259,
                0.8391169718222188,
                0.7463319064601508,
                0.6360536807265150,
                0.5108670019508271,
                0.3737060887154196,
                0.2277858511416451,
                0.07652652113349733,
            ]
        ),
    ),
}


def check_prob(p: float, name: str = "p") -> float:
    """
    Validate a probability.

    Raises:
        InvalidParameterError: If ``p`` is NaN or outside [0, 1]
    """
    p = float(p)
    if math.isnan(p) or p < 0.0 or p > 1.0:
        error_msg = f"{name} must lie in [0, 1], got {p}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return p


def check_corr(rho: float, name: str = "rho") -> float:
    """
    Validate a correlation coefficient.

    Raises:
        InvalidParameterError: If ``rho`` is NaN or outside [-1, 1]
    """
    rho = float(rho)
    if math.isnan(rho) or rho < -1.0 or rho > 1.0:
        error_msg = f"{name} must lie in [-1, 1], got {rho}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return rho


def _check_not_nan(x: float, name: str) -> float:
    x = float(x)
    if math.isnan(x):
        error_msg = f"{name} must not be NaN"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return x


def phi(x: float) -> float:
    """
    Standard normal density.

    Args:
        x: A finite real

    Returns:
        The density at ``x``

    Raises:
        InvalidParameterError: If ``x`` is not finite
    """
    x = float(x)
    if not math.isfinite(x):
        error_msg = f"phi requires a finite argument, got {x}"
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def cdf(x: float) -> float:
    """
    Standard normal distribution function, defined on the extended reals.

    Args:
        x: Any float including +/-inf

    Returns:
        Phi(x), with Phi(-inf) = 0 and Phi(inf) = 1

    Raises:
        InvalidParameterError: If ``x`` is NaN
    """
    x = _check_not_nan(x, "x")
    return float(special.ndtr(x))


def quantile(p: float) -> float:
    """
    Standard normal quantile function.

    Args:
        p: Probability in [0, 1]

    Returns:
        Phi^{-1}(p), with quantile(0) = -inf and quantile(1) = inf

    Raises:
        InvalidParameterError: If ``p`` is outside [0, 1]
    """
    p = check_prob(p)
    return float(special.ndtri(p))


def _bvn_upper(h: float, k: float, rho: float) -> float:
    """P(U > h, V > k) for standard bivariate normal (U, V) with correlation rho.

    Port of Genz's BVNU; assumes |rho| < DEGENERATE_RHO and finite h, k.
    """
    if rho == 0.0:
        return float(special.ndtr(-h) * special.ndtr(-k))

    abs_rho = abs(rho)
    if abs_rho < 0.3:
        w, x = GAUSS_LEGENDRE[6]
    elif abs_rho < 0.75:
        w, x = GAUSS_LEGENDRE[12]
    else:
        w, x = GAUSS_LEGENDRE[20]
    w = np.tile(w, 2)
    x = np.concatenate((1.0 - x, 1.0 + x))

    hk = h * k
    bvn = 0.0

    if abs_rho < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = 0.5 * math.asin(rho)
        sn = np.sin(asr * x)
        bvn = float(np.dot(w, np.exp((sn * hk - hs) / (1.0 - sn * sn))))
        bvn = bvn * asr / TWO_PI + float(special.ndtr(-h) * special.ndtr(-k))
    else:
        if rho < 0.0:
            k = -k
            hk = -hk
        a_sq = (1.0 - rho) * (1.0 + rho)
        a = math.sqrt(a_sq)
        bs = (h - k) ** 2
        asr = -0.5 * (bs / a_sq + hk)
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 80.0
        if asr > -100.0:
            bvn = (
                a
                * math.exp(asr)
                * (1.0 - c * (bs - a_sq) * (1.0 - d * bs) / 3.0 + c * d * a_sq * a_sq)
            )
        if hk > -100.0:
            b = math.sqrt(bs)
            sp = math.sqrt(TWO_PI) * float(special.ndtr(-b / a))
            bvn -= math.exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
        a *= 0.5
        xs = (a * x) ** 2
        asr_nodes = -0.5 * (bs / xs + hk)
        keep = asr_nodes > -100.0
        xs = xs[keep]
        sp_nodes = 1.0 + c * xs * (1.0 + 5.0 * d * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-0.5 * hk * xs / (1.0 + rs) ** 2) / rs
        bvn = (
            a * float(np.dot(np.exp(asr_nodes[keep]) * (sp_nodes - ep), w[keep])) - bvn
        ) / TWO_PI
        if rho > 0.0:
            bvn += float(special.ndtr(-max(h, k)))
        elif h >= k:
            bvn = -bvn
        else:
            if h < 0.0:
                lower = float(special.ndtr(k) - special.ndtr(h))
            else:
                lower = float(special.ndtr(-h) - special.ndtr(-k))
            bvn = lower - bvn

    return min(1.0, max(0.0, bvn))


def bvn_lower(h: float, k: float, rho: float) -> float:
    """
    Lower orthant probability P(U <= h, V <= k) for a standard bivariate normal.

    Args:
        h: Upper limit for U (extended real)
        k: Upper limit for V (extended real)
        rho: Correlation of (U, V)

    Returns:
        The orthant probability

    Raises:
        InvalidParameterError: If a limit is NaN or rho is outside [-1, 1]
    """
    h = _check_not_nan(h, "h")
    k = _check_not_nan(k, "k")
    rho = check_corr(rho)

    if h == -math.inf or k == -math.inf:
        return 0.0
    if h == math.inf:
        return float(special.ndtr(k))
    if k == math.inf:
        return float(special.ndtr(h))

    if rho >= DEGENERATE_RHO:
        return float(special.ndtr(min(h, k)))
    if rho <= -DEGENERATE_RHO:
        # V = -U: P(-k <= U <= h)
        return max(0.0, float(special.ndtr(h) - special.ndtr(-k)))

    return _bvn_upper(-h, -k, rho)


def bvn_rect(
    a_lo: float, a_hi: float, b_lo: float, b_hi: float, rho: float
) -> float:
    """
    Rectangle probability P(a_lo <= U <= a_hi, b_lo <= V <= b_hi).

    (U, V) is standard bivariate normal with correlation ``rho``. Bounds may
    be infinite. For |rho| >= 1 - 1e-12 the degenerate one-dimensional law
    (V = U or V = -U) is used in closed form.

    Args:
        a_lo: Lower limit for U
        a_hi: Upper limit for U
        b_lo: Lower limit for V
        b_hi: Upper limit for V
        rho: Correlation of (U, V)

    Returns:
        The rectangle probability, clipped to [0, 1]

    Raises:
        InvalidParameterError: If bounds are NaN or inverted, or rho is invalid
    """
    a_lo = _check_not_nan(a_lo, "a_lo")
    a_hi = _check_not_nan(a_hi, "a_hi")
    b_lo = _check_not_nan(b_lo, "b_lo")
    b_hi = _check_not_nan(b_hi, "b_hi")
    rho = check_corr(rho)

    if a_lo > a_hi or b_lo > b_hi:
        error_msg = (
            f"Inverted rectangle bounds: [{a_lo}, {a_hi}] x [{b_lo}, {b_hi}]"
        )
        logger.error(error_msg)
        raise InvalidParameterError(error_msg)

    if rho >= DEGENERATE_RHO:
        lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
        return _interval_prob(lo, hi)
    if rho <= -DEGENERATE_RHO:
        lo, hi = max(a_lo, -b_hi), min(a_hi, -b_lo)
        return _interval_prob(lo, hi)

    p = (
        bvn_lower(a_hi, b_hi, rho)
        - bvn_lower(a_lo, b_hi, rho)
        - bvn_lower(a_hi, b_lo, rho)
        + bvn_lower(a_lo, b_lo, rho)
    )
    return min(1.0, max(0.0, p))


def _interval_prob(lo: float, hi: float) -> float:
    """P(lo <= Z <= hi), computed on the side that avoids cancellation."""
    if lo >= hi:
        return 0.0
    if lo > 0.0:
        return float(special.ndtr(-lo) - special.ndtr(-hi))
    return float(special.ndtr(hi) - special.ndtr(lo))
