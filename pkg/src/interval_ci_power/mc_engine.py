"""Monte Carlo harness for coverage and power of CI1 and CI2.

Bound estimators are simulated from a bivariate normal law around the true
bounds, rejection-resampled until ordered. An inefficient estimator pair is
obtained by adding one common N(0, tau^2) shift to both bounds, which keeps
the ordering and inflates both variances by tau^2.

Replications are grouped into fixed-size blocks. Block ``b`` of grid point
``k`` draws from a Philox stream keyed by ``(seed, k, b)``; block results
are integer counts summed in block order, so results do not depend on the
worker count. The stream key does not include the CI kind, so CI1 and CI2
(and both channels) see common random numbers.
"""

import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .confidence_intervals import CiKind, EstimatorTuple
from .critical_values import CritTable, check_alpha, g_batch, solve_c2_batch
from .exceptions import DgpError, EngineError, InvalidParameterError
from .normal_core import check_corr

logger = logging.getLogger(__name__)

BLOCK_SIZE = 2000
MAX_REJECTION_ROUNDS = 1_000_000
MAX_FAILURE_SHARE = 0.001
MIN_REPS = 1000
ALTERNATIVE_KINDS = ("fixed", "local_lower", "local_upper")


def _fail(error_msg: str, exc_type=InvalidParameterError):
    logger.error(error_msg)
    raise exc_type(error_msg)


@dataclass(frozen=True)
class DgpSpec:
    """
    Data-generating process for the bound estimators.

    Attributes:
        theta_l: Lower bound of the identified set
        theta_u: Upper bound of the identified set
        sigma_l: Asymptotic sd of the efficient lower-bound estimator
        sigma_u: Asymptotic sd of the efficient upper-bound estimator
        rho: Asymptotic correlation of the efficient estimators
        noise_tau: sd of the common shift defining the inefficient estimators
        sigma_lo_bound: Lower bound on the variances
        sigma_hi_bound: Upper bound on the variances, inefficient channel included
        delta_bar: Upper bound on theta_u - theta_l
    """

    theta_l: float
    theta_u: float
    sigma_l: float
    sigma_u: float
    rho: float
    noise_tau: float = 0.0
    sigma_lo_bound: float = 0.01
    sigma_hi_bound: float = 100.0
    delta_bar: float = 100.0

    def __post_init__(self):
        for name in ("theta_l", "theta_u"):
            if not math.isfinite(getattr(self, name)):
                _fail(f"{name} must be finite, got {getattr(self, name)}")
        for name in ("sigma_l", "sigma_u", "sigma_lo_bound", "sigma_hi_bound", "delta_bar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                _fail(f"{name} must be a positive finite real, got {value}")
        if not (math.isfinite(self.noise_tau) and self.noise_tau >= 0.0):
            _fail(f"noise_tau must be a nonnegative finite real, got {self.noise_tau}")
        check_corr(self.rho)
        if self.theta_l > self.theta_u:
            _fail(f"theta_l={self.theta_l} exceeds theta_u={self.theta_u}")
        if self.theta_u - self.theta_l > self.delta_bar:
            _fail(
                f"Identified-set length {self.theta_u - self.theta_l} exceeds "
                f"delta_bar={self.delta_bar}"
            )
        tau_sq = self.noise_tau**2
        for name in ("sigma_l", "sigma_u"):
            var = getattr(self, name) ** 2
            if var < self.sigma_lo_bound:
                _fail(f"{name}^2={var} is below sigma_lo_bound={self.sigma_lo_bound}")
            if var + tau_sq > self.sigma_hi_bound:
                _fail(
                    f"{name}^2 + noise_tau^2={var + tau_sq} exceeds "
                    f"sigma_hi_bound={self.sigma_hi_bound}"
                )

    def implied_inefficient(self) -> Tuple[float, float, float]:
        """(sigma_l, sigma_u, rho) of the inefficient estimators."""
        tau_sq = self.noise_tau**2
        s_l = math.sqrt(self.sigma_l**2 + tau_sq)
        s_u = math.sqrt(self.sigma_u**2 + tau_sq)
        rho = (self.rho * self.sigma_l * self.sigma_u + tau_sq) / (s_l * s_u)
        return s_l, s_u, max(-1.0, min(1.0, rho))

    def with_length(self, mu: float, n: int) -> "DgpSpec":
        """Copy with theta_u = theta_l + mu / sqrt(n)."""
        if not (math.isfinite(mu) and mu >= 0.0):
            _fail(f"mu must be a nonnegative finite real, got {mu}")
        return replace(self, theta_u=self.theta_l + mu / math.sqrt(n))


@dataclass(frozen=True)
class AlternativeSeq:
    """
    Sequence of tested values theta_N outside the identified set.

    ``fixed`` tests ``theta_bar`` at every n; ``local_lower`` tests
    theta_l - psi / sqrt(n) and ``local_upper`` tests theta_u + psi / sqrt(n).
    psi = 0 puts the tested value on the bound.
    """

    kind: str
    theta_bar: Optional[float] = None
    psi: float = 0.0

    def __post_init__(self):
        if self.kind not in ALTERNATIVE_KINDS:
            _fail(f"Alternative kind must be one of {ALTERNATIVE_KINDS}, got {self.kind!r}")
        if self.kind == "fixed":
            if self.theta_bar is None or not math.isfinite(self.theta_bar):
                _fail("A fixed alternative needs a finite theta_bar")
        elif not (math.isfinite(self.psi) and self.psi >= 0.0):
            _fail(f"psi must be a nonnegative finite real, got {self.psi}")

    def theta(self, spec: DgpSpec, n: int, psi: Optional[float] = None) -> float:
        """The tested value at sample size n."""
        if self.kind == "fixed":
            if spec.theta_l <= self.theta_bar <= spec.theta_u:
                _fail(
                    f"theta_bar={self.theta_bar} lies inside the identified set "
                    f"[{spec.theta_l}, {spec.theta_u}]"
                )
            return self.theta_bar
        psi = self.psi if psi is None else psi
        if self.kind == "local_lower":
            return spec.theta_l - psi / math.sqrt(n)
        return spec.theta_u + psi / math.sqrt(n)

    def scaled_distance(self, spec: DgpSpec, n: int) -> float:
        """sqrt(n) times the distance from theta_bar to the identified set."""
        theta = self.theta(spec, n)
        gap = spec.theta_l - theta if theta < spec.theta_l else theta - spec.theta_u
        return math.sqrt(n) * gap


@dataclass(frozen=True)
class PowerPoint:
    """
    Paired coverage estimates at one grid point.

    ``mc_se`` is sqrt(p (1 - p) / reps) at the pooled rate of both channels;
    ``diff_se`` is the standard error of cover_rate_e - cover_rate_i under
    common random numbers. Replications where a solve failed are excluded
    and counted in ``failures``.
    """

    ci_kind: CiKind
    theta: float
    n: int
    psi: float
    cover_rate_e: float
    cover_rate_i: float
    mc_se: float
    reps: int
    seed: int
    failures: int = 0
    diff_se: float = 0.0

    @property
    def diff(self) -> float:
        return self.cover_rate_e - self.cover_rate_i


@dataclass(frozen=True)
class ViolationRecord:
    """Ordering-violation frequencies of raw and delivered draws."""

    rho: float
    sigma_l: float
    sigma_u: float
    mu: float
    n: int
    raw_rate: float
    oracle_rate: float
    mc_se: float
    delivered_rate: float


class EstimatorBlock(NamedTuple):
    """Arrays of estimator tuples for one block of replications."""

    theta_l_hat: np.ndarray
    theta_u_hat: np.ndarray
    sigma_l_hat: np.ndarray
    sigma_u_hat: np.ndarray
    rho_hat: np.ndarray


def replication_stream(seed: int, point: int, block: int) -> np.random.Generator:
    """Counter-based stream for block ``block`` of grid point ``point``."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(point, block)))
    )


def _raw_bounds(
    spec: DgpSpec, n: int, rng: np.random.Generator, size: int
) -> Tuple[np.ndarray, np.ndarray]:
    z = rng.standard_normal((size, 2))
    root_n = math.sqrt(n)
    err_l = spec.sigma_l * z[:, 0]
    err_u = spec.sigma_u * (spec.rho * z[:, 0] + math.sqrt(max(0.0, 1.0 - spec.rho**2)) * z[:, 1])
    return spec.theta_l + err_l / root_n, spec.theta_u + err_u / root_n


def _ordered_bounds(
    spec: DgpSpec, n: int, rng: np.random.Generator, size: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Bivariate normal bound estimates, violating rows redrawn until ordered."""
    est_l, est_u = _raw_bounds(spec, n, rng, size)
    bad = np.flatnonzero(est_l > est_u)
    rounds = 0
    while bad.size:
        rounds += 1
        if rounds > MAX_REJECTION_ROUNDS:
            _fail(
                f"Rejection sampling exceeded {MAX_REJECTION_ROUNDS} draws for {spec} at n={n}",
                DgpError,
            )
        new_l, new_u = _raw_bounds(spec, n, rng, bad.size)
        est_l[bad] = new_l
        est_u[bad] = new_u
        bad = bad[new_l > new_u]
    return est_l, est_u


def _plug_in(
    sigma_l: float,
    sigma_u: float,
    rho: float,
    noise: np.ndarray,
    scale: float,
    spec: DgpSpec,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    lo, hi = math.sqrt(spec.sigma_lo_bound), math.sqrt(spec.sigma_hi_bound)
    s_l = np.clip(sigma_l + scale * noise[:, 0], lo, hi)
    s_u = np.clip(sigma_u + scale * noise[:, 1], lo, hi)
    r = np.clip(rho + scale * noise[:, 2], -1.0, 1.0)
    return s_l, s_u, r


def draw_block(
    spec: DgpSpec,
    n: int,
    rng: np.random.Generator,
    size: int,
    plugin_noise: float = 0.0,
) -> Tuple[EstimatorBlock, EstimatorBlock]:
    """
    Draw ``size`` paired (efficient, inefficient) estimator tuples.

    The plug-in sigmas and correlation are the true values plus independent
    N(0, plugin_noise / n) perturbations, clamped to the admissible ranges.
    Both channels share one perturbation draw. Noise is always drawn, so
    plugin_noise = 0 consumes the same stream.
    """
    est_l, est_u = _ordered_bounds(spec, n, rng, size)
    shift = spec.noise_tau * rng.standard_normal(size) / math.sqrt(n)
    noise = rng.standard_normal((size, 3))
    scale = math.sqrt(plugin_noise / n)

    efficient = EstimatorBlock(
        est_l, est_u, *_plug_in(spec.sigma_l, spec.sigma_u, spec.rho, noise, scale, spec)
    )
    s_l, s_u, rho = spec.implied_inefficient()
    inefficient = EstimatorBlock(
        est_l + shift, est_u + shift, *_plug_in(s_l, s_u, rho, noise, scale, spec)
    )
    return efficient, inefficient


def draw_estimators(
    spec: DgpSpec, n: int, rng: np.random.Generator, plugin_noise: float = 0.0
) -> Tuple[EstimatorTuple, EstimatorTuple]:
    """
    Draw one (efficient, inefficient) pair of estimator tuples.

    Args:
        spec: Data-generating process
        n: Sample size
        rng: Random stream
        plugin_noise: Variance constant c of the plug-in perturbation N(0, c/n); 0 is sharp

    Returns:
        (efficient, inefficient) tuples

    Raises:
        DgpError: If rejection sampling cannot produce an ordered draw
    """
    efficient, inefficient = draw_block(spec, n, rng, 1, plugin_noise)
    return tuple(
        EstimatorTuple(*(float(arr[0]) for arr in block), n=n)
        for block in (efficient, inefficient)
    )


@functools.lru_cache(maxsize=64)
def _crit_table(sigma_l: float, sigma_u: float, rho: float, alpha: float) -> CritTable:
    return CritTable(sigma_l, sigma_u, rho, alpha)


def _covered(
    block: EstimatorBlock,
    theta: float,
    n: int,
    ci_kind: CiKind,
    alpha: float,
    table: Optional[CritTable],
) -> Tuple[np.ndarray, np.ndarray]:
    """Coverage indicator and solve-failure indicator per replication."""
    root_n = math.sqrt(n)
    delta = np.maximum(root_n * (block.theta_u_hat - block.theta_l_hat), 0.0)
    if ci_kind is CiKind.CI1:
        c = g_batch(delta / np.maximum(block.sigma_l_hat, block.sigma_u_hat), alpha)
        c_l = c_u = c
        failed = np.zeros(delta.shape, dtype=bool)
    else:
        c_l, c_u, failed = solve_c2_batch(
            delta, block.sigma_l_hat, block.sigma_u_hat, block.rho_hat, alpha, table
        )
    with np.errstate(invalid="ignore"):
        lo = block.theta_l_hat - block.sigma_l_hat * c_l / root_n
        hi = block.theta_u_hat + block.sigma_u_hat * c_u / root_n
        covered = (lo <= theta) & (theta <= hi)
    return covered & ~failed, failed


@dataclass(frozen=True)
class _CoverageJob:
    spec: DgpSpec
    theta: float
    n: int
    ci_kind: CiKind
    alpha: float
    seed: int
    point: int
    block: int
    size: int
    plugin_noise: float
    tables: Optional[Tuple[CritTable, CritTable]]


def _coverage_block(job: _CoverageJob) -> np.ndarray:
    """[covered_e, covered_i, covered_both, failed] counts for one block."""
    rng = replication_stream(job.seed, job.point, job.block)
    efficient, inefficient = draw_block(job.spec, job.n, rng, job.size, job.plugin_noise)
    table_e, table_i = job.tables if job.tables is not None else (None, None)
    cov_e, fail_e = _covered(efficient, job.theta, job.n, job.ci_kind, job.alpha, table_e)
    cov_i, fail_i = _covered(inefficient, job.theta, job.n, job.ci_kind, job.alpha, table_i)
    failed = fail_e | fail_i
    cov_e &= ~failed
    cov_i &= ~failed
    return np.array(
        [cov_e.sum(), cov_i.sum(), (cov_e & cov_i).sum(), failed.sum()], dtype=np.int64
    )


def _run_blocks(task: Callable, jobs: Sequence, workers: int) -> List:
    """Run block jobs inline or on a process pool; results keep job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [task(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(task, jobs))


def _block_sizes(reps: int, block_size: int) -> List[int]:
    full, rest = divmod(reps, block_size)
    return [block_size] * full + ([rest] if rest else [])


def estimate_coverage(
    spec: DgpSpec,
    theta: float,
    n: int,
    reps: int,
    ci_kind: CiKind,
    alpha: float,
    seed: int,
    plugin_noise: float = 0.0,
    workers: int = 1,
    point: int = 0,
    psi: float = math.nan,
    use_table: bool = True,
    block_size: int = BLOCK_SIZE,
) -> PowerPoint:
    """
    Estimate the coverage probability of ``theta`` for both estimator channels.

    Args:
        spec: Data-generating process
        theta: Tested parameter value
        n: Sample size
        reps: Number of replications, at least 1000
        ci_kind: CI1 or CI2
        alpha: Significance level in (0, 0.5)
        seed: Base seed
        plugin_noise: Variance constant of the plug-in perturbation; 0 is sharp
        workers: Worker processes; results do not depend on it
        point: Grid-point index, part of the stream key
        psi: Scaled distance recorded on the result
        use_table: Use a tabulated CI2 critical map when the plug-ins are sharp
        block_size: Replications per block

    Returns:
        PowerPoint with both coverage rates

    Raises:
        InvalidParameterError: If reps < 1000 or another argument is invalid
        DgpError: If the DGP cannot deliver ordered draws
        EngineError: If more than 0.1% of the replications fail to solve
    """
    alpha = check_alpha(alpha)
    ci_kind = CiKind.parse(ci_kind)
    if reps < MIN_REPS:
        _fail(f"reps must be at least {MIN_REPS}, got {reps}")
    if n <= 0:
        _fail(f"n must be a positive integer, got {n}")
    if not (math.isfinite(plugin_noise) and plugin_noise >= 0.0):
        _fail(f"plugin_noise must be a nonnegative finite real, got {plugin_noise}")

    tables = None
    if ci_kind is CiKind.CI2 and use_table and plugin_noise == 0.0:
        tables = (
            _crit_table(spec.sigma_l, spec.sigma_u, spec.rho, alpha),
            _crit_table(*spec.implied_inefficient(), alpha),
        )

    jobs = [
        _CoverageJob(spec, theta, n, ci_kind, alpha, seed, point, b, size, plugin_noise, tables)
        for b, size in enumerate(_block_sizes(reps, block_size))
    ]
    logger.info(
        f"Coverage run: {ci_kind.value}, n={n}, theta={theta}, reps={reps}, "
        f"{len(jobs)} blocks, workers={workers}"
    )
    counts = np.sum(_run_blocks(_coverage_block, jobs, workers), axis=0)
    cov_e, cov_i, cov_both, failures = (int(x) for x in counts)

    if failures > MAX_FAILURE_SHARE * reps:
        _fail(
            f"{failures} of {reps} replications failed to solve "
            f"(more than {MAX_FAILURE_SHARE:.1%}); aborting",
            EngineError,
        )
    if failures:
        logger.warning(f"{failures} of {reps} replications failed to solve and were dropped")

    valid = reps - failures
    rate_e = cov_e / valid
    rate_i = cov_i / valid
    pooled = 0.5 * (rate_e + rate_i)
    mc_se = math.sqrt(pooled * (1.0 - pooled) / valid)
    discordant = (cov_e - cov_both) + (cov_i - cov_both)
    diff = rate_e - rate_i
    diff_se = math.sqrt(max(0.0, discordant / valid - diff * diff) / valid)
    return PowerPoint(
        ci_kind=ci_kind,
        theta=theta,
        n=n,
        psi=psi,
        cover_rate_e=rate_e,
        cover_rate_i=rate_i,
        mc_se=mc_se,
        reps=reps,
        seed=seed,
        failures=failures,
        diff_se=diff_se,
    )


def power_curve(
    spec: DgpSpec,
    alt: AlternativeSeq,
    n_grid: Sequence[int],
    psi_grid: Sequence[float],
    ci_kind: CiKind,
    alpha: float,
    reps: int,
    seed: int,
    mu: Optional[float] = None,
    plugin_noise: float = 0.0,
    workers: int = 1,
    use_table: bool = True,
) -> List[PowerPoint]:
    """
    Paired coverage estimates over an (n, psi) grid.

    Grid point k = (n index) * len(psi_grid) + (psi index) keys the random
    streams, so both channels and both CI kinds share draws at each point.
    When ``mu`` is given the identified-set length at sample size n is
    mu / sqrt(n). A fixed alternative ignores ``psi_grid``.

    Returns:
        One PowerPoint per grid point, n-major
    """
    if not n_grid:
        _fail("n_grid must not be empty")
    if alt.kind != "fixed" and not psi_grid:
        _fail("psi_grid must not be empty")

    psis = [math.nan] if alt.kind == "fixed" else list(psi_grid)
    points = []
    for i, n in enumerate(n_grid):
        spec_n = spec if mu is None else spec.with_length(mu, n)
        for j, psi in enumerate(psis):
            if alt.kind == "fixed":
                theta = alt.theta(spec_n, n)
                psi = alt.scaled_distance(spec_n, n)
            else:
                theta = alt.theta(spec_n, n, psi)
            points.append(
                estimate_coverage(
                    spec_n,
                    theta,
                    n,
                    reps,
                    ci_kind,
                    alpha,
                    seed,
                    plugin_noise=plugin_noise,
                    workers=workers,
                    point=i * len(psis) + j,
                    psi=psi,
                    use_table=use_table,
                )
            )
    return points


def violation_oracle(spec: DgpSpec, n: int) -> float:
    """P(theta_l_hat > theta_u_hat) for the raw bivariate normal draw."""
    sd = math.sqrt(
        max(0.0, spec.sigma_l**2 + spec.sigma_u**2 - 2.0 * spec.rho * spec.sigma_l * spec.sigma_u)
    )
    if sd == 0.0:
        return 0.0
    return float(special.ndtr(-math.sqrt(n) * (spec.theta_u - spec.theta_l) / sd))


@dataclass(frozen=True)
class _ViolationJob:
    spec: DgpSpec
    n: int
    seed: int
    point: int
    block: int
    size: int


def _violation_block(job: _ViolationJob) -> np.ndarray:
    """[raw violations, delivered violations] for one block."""
    rng = replication_stream(job.seed, job.point, job.block)
    raw_l, raw_u = _raw_bounds(job.spec, job.n, rng, job.size)
    est_l, est_u = _ordered_bounds(job.spec, job.n, rng, job.size)
    return np.array([(raw_l > raw_u).sum(), (est_l > est_u).sum()], dtype=np.int64)


def near1_diagnostic(
    spec_seq: Sequence[DgpSpec],
    n_grid: Sequence[int],
    mu: Optional[float] = None,
    reps: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> List[ViolationRecord]:
    """
    Ordering-violation rates of raw and delivered draws.

    A finite scaled length with rho < 1 or unequal sigmas leaves the raw
    violation rate bounded away from zero; only the degenerate rho = 1,
    sigma_l = sigma_u design orders the draws by itself.

    Args:
        spec_seq: DGPs to check
        n_grid: Sample sizes
        mu: When given, each spec is rescaled to length mu / sqrt(n)
        reps: Draws per (spec, n)
        seed: Base seed
        workers: Worker processes

    Returns:
        One ViolationRecord per (spec, n), spec-major
    """
    if not spec_seq or not n_grid:
        _fail("near1_diagnostic needs a nonempty spec sequence and n grid")
    if reps <= 0:
        _fail(f"reps must be positive, got {reps}")

    records = []
    for i, spec in enumerate(spec_seq):
        for j, n in enumerate(n_grid):
            spec_n = spec if mu is None else spec.with_length(mu, n)
            jobs = [
                _ViolationJob(spec_n, n, seed, i * len(n_grid) + j, b, size)
                for b, size in enumerate(_block_sizes(reps, BLOCK_SIZE))
            ]
            raw, delivered = (int(x) for x in np.sum(_run_blocks(_violation_block, jobs, workers), axis=0))
            oracle = violation_oracle(spec_n, n)
            records.append(
                ViolationRecord(
                    rho=spec_n.rho,
                    sigma_l=spec_n.sigma_l,
                    sigma_u=spec_n.sigma_u,
                    mu=math.sqrt(n) * (spec_n.theta_u - spec_n.theta_l),
                    n=n,
                    raw_rate=raw / reps,
                    oracle_rate=oracle,
                    mc_se=math.sqrt(oracle * (1.0 - oracle) / reps),
                    delivered_rate=delivered / reps,
                )
            )
            logger.info(
                f"near1: rho={spec_n.rho}, n={n}: raw {raw / reps:.4f} vs oracle {oracle:.4f}"
            )
    return records
