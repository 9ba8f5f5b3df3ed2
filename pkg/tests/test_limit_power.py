import itertools
import math

import numpy as np
import pytest
from scipy import special

from interval_ci_power.exceptions import InvalidParameterError
from interval_ci_power.limit_power import (
    DriftParams,
    LimitSigmas,
    default_h_grid,
    eval_h,
    eval_w,
    h_monotonicity_scan,
    power_dominance_limit,
    simulate_w,
    strict_dominance_family,
)

Z95 = 1.6448536269514722


def test_eval_h_boundary_is_nominal():
    np.testing.assert_allclose(eval_h(1.0, 0.0, 0.0, 0.05), 0.95, atol=1e-12)


def test_eval_h_infinite_psi():
    assert eval_h(1.0, 1.0, math.inf, 0.05) == 0.0


@pytest.mark.parametrize("sigma, mu", itertools.product([0.5, 1.0, 2.7], [0.0, 0.3, 2.0, 10.0]))
def test_eval_h_at_zero_psi_has_nominal_coverage(sigma, mu):
    assert eval_h(sigma, mu, 0.0, 0.05) >= 0.95 - 1e-10


def test_eval_h_decreasing_in_psi():
    values = [eval_h(1.2, 0.7, psi, 0.05) for psi in np.linspace(0.0, 8.0, 81)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 1.0 for v in values)


def test_eval_h_domain_errors():
    with pytest.raises(InvalidParameterError):
        eval_h(0.0, 0.0, 0.0, 0.05)
    with pytest.raises(InvalidParameterError):
        eval_h(1.0, -1.0, 0.0, 0.05)
    with pytest.raises(InvalidParameterError):
        eval_h(1.0, math.inf, 0.0, 0.05)


def test_h_scan_small_grid():
    grid = list(itertools.product([0.5, 1.0, 2.0], [0.0, 1.0], [0.0, 1.0, 5.0]))
    assert h_monotonicity_scan(grid, 0.05) == []


def test_h_scan_single_sigma():
    assert h_monotonicity_scan([(1.0, 0.5, 2.0)], 0.05) == []


def test_h_scan_dense_grid():
    sigmas = np.round(np.linspace(0.5, 3.0, 251), 2)
    grid = [(float(s), 0.7, 2.0) for s in sigmas]
    assert h_monotonicity_scan(grid, 0.10) == []


def test_h_scan_default_grid():
    grid = default_h_grid()
    assert len(grid) == 251 * 12
    assert h_monotonicity_scan(grid, 0.05) == []


def test_h_scan_reports_decrease():
    # a decreasing sequence in sigma at fixed (mu, psi) is flagged when tol is negative
    violations = h_monotonicity_scan([(1.0, 0.0, 0.0), (2.0, 0.0, 0.0)], 0.05, tol=-1.0)
    assert len(violations) == 1
    assert violations[0].sigma_1 == 1.0 and violations[0].sigma_2 == 2.0


def test_eval_w_infinite_mu_closed_form():
    sig = LimitSigmas(1.0, 1.0, 0.7)
    np.testing.assert_allclose(eval_w(sig, math.inf, 0.0, 0.05), 0.95, atol=1e-12)
    np.testing.assert_allclose(
        eval_w(sig, math.inf, 1.2, 0.05), special.ndtr(Z95 - 1.2), atol=1e-12
    )


def test_eval_w_upper_side_scales_by_sigma_u():
    sig = LimitSigmas(1.0, 2.0, 0.3)
    np.testing.assert_allclose(
        eval_w(sig, math.inf, 1.0, 0.05, side="upper"), special.ndtr(Z95 - 0.5), atol=1e-12
    )


def test_eval_w_large_mu_is_infinite():
    sig = LimitSigmas(1.0, 1.5, 0.2)
    assert eval_w(sig, 61.0, 0.4, 0.05) == eval_w(sig, math.inf, 0.4, 0.05)


def test_eval_w_degenerate_finite_mu_is_h():
    sig = LimitSigmas(1.0, 1.0, 1.0)
    np.testing.assert_allclose(eval_w(sig, 0.0, 0.0, 0.05), 0.95, atol=1e-12)
    assert eval_w(sig, 0.5, 2.0, 0.05) == eval_h(1.0, 0.5, 2.0, 0.05)


@pytest.mark.parametrize("sig", [LimitSigmas(1.0, 1.0, 0.7), LimitSigmas(1.0, 1.3, 1.0)])
def test_eval_w_rejects_unreachable_finite_mu(sig):
    with pytest.raises(InvalidParameterError, match="rho = 1"):
        eval_w(sig, 1.0, 0.5, 0.05)


def test_power_dominance_degenerate_regime():
    w_e, w_i = power_dominance_limit(
        LimitSigmas(1.0, 1.0, 1.0), LimitSigmas(1.5, 1.5, 1.0), 0.5, 2.0, 0.05
    )
    assert w_e == eval_h(1.0, 0.5, 2.0, 0.05)
    assert w_i == eval_h(1.5, 0.5, 2.0, 0.05)
    assert w_e < w_i


def test_power_dominance_equal_sigmas():
    sig = LimitSigmas(1.2, 0.9, 0.4)
    w_e, w_i = power_dominance_limit(sig, sig, math.inf, 1.0, 0.05)
    assert abs(w_e - w_i) <= 1e-12


def test_power_dominance_infinite_mu():
    w_e, w_i = power_dominance_limit(
        LimitSigmas(1.0, 1.0, 0.5), LimitSigmas(2.0, 2.0, 0.5), math.inf, 1.0, 0.05
    )
    np.testing.assert_allclose([w_e, w_i], special.ndtr([Z95 - 1.0, Z95 - 0.5]), atol=1e-12)
    assert w_e < w_i


def test_power_dominance_rejects_wrong_ordering():
    with pytest.raises(InvalidParameterError):
        power_dominance_limit(
            LimitSigmas(2.0, 1.0, 0.5), LimitSigmas(1.0, 1.0, 0.5), math.inf, 1.0, 0.05
        )


def test_strict_dominance_family():
    cases = strict_dominance_family(
        LimitSigmas(1.0, 1.0, 0.5), [0.0, 0.5, 1.0], [0.0, 1.0, 2.0, math.inf], 0.05
    )
    assert len(cases) == 4
    assert all(case.cover_e < case.cover_i for case in cases)


def test_strict_dominance_family_records_drift():
    cases = strict_dominance_family(LimitSigmas(1.0, 1.0, 0.5), [0.5], [0.0, 1.0, 2.0], 0.05)
    assert [case.drift for case in cases] == [DriftParams(math.inf, 1.0), DriftParams(math.inf, 2.0)]


def test_strict_dominance_family_degenerate_regime():
    cases = strict_dominance_family(LimitSigmas(1.0, 1.0, 1.0), [0.5], [1.0, 2.0], 0.05, mu=1.0)
    assert len(cases) == 2
    assert all(case.cover_e < case.cover_i for case in cases)


@pytest.mark.parametrize(
    "sig, mu, psi, side",
    [
        (LimitSigmas(1.0, 1.0, 0.7), math.inf, 1.2, "lower"),
        (LimitSigmas(1.5, 1.5, 1.0), 0.5, 2.0, "lower"),
        (LimitSigmas(1.0, 1.0, 1.0), 1.0, 0.5, "upper"),
        (LimitSigmas(0.8, 1.6, 0.2), math.inf, 1.0, "upper"),
    ],
)
def test_simulate_w_agrees_with_eval_w(sig, mu, psi, side):
    estimate, se = simulate_w(sig, mu, psi, 0.05, reps=200_000, seed=3, side=side)
    exact = eval_w(sig, mu, psi, 0.05, side=side)
    assert abs(estimate - exact) <= 4 * se + 1e-4


def test_simulate_w_is_reproducible():
    sig = LimitSigmas(1.0, 1.0, 1.0)
    assert simulate_w(sig, 0.5, 1.0, 0.05, reps=10_000, seed=9) == simulate_w(
        sig, 0.5, 1.0, 0.05, reps=10_000, seed=9
    )


def test_drift_params_validation():
    DriftParams(0.0, math.inf)
    with pytest.raises(InvalidParameterError):
        DriftParams(-1.0, 0.0)
    assert DriftParams(1, 2) == DriftParams(1.0, 2.0)


@pytest.mark.parametrize("mu, psi", [(-0.5, 0.0), (0.0, -1.0), (math.nan, 0.0)])
def test_drift_checks_shared_by_w(mu, psi):
    sig = LimitSigmas(1.0, 1.0, 0.5)
    with pytest.raises(InvalidParameterError):
        eval_w(sig, mu, psi, 0.05)
    with pytest.raises(InvalidParameterError):
        simulate_w(sig, mu, psi, 0.05, reps=100)


def test_limit_sigmas_bounds():
    LimitSigmas(1.0, 2.0, 0.0, sigma_lo=0.5, sigma_hi=2.0)
    with pytest.raises(InvalidParameterError):
        LimitSigmas(0.4, 1.0, 0.0, sigma_lo=0.5)
    with pytest.raises(InvalidParameterError):
        LimitSigmas(1.0, 1.0, -1.5)
