import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.analysis.continuation import (
    check_settles,
    rescaled_eta,
    richardson_limit,
    run_continuation,
    solve_regularized,
)
from src.solver.errors import ConfigurationError, FailedLimitError
from src.solver.integrator import ProfileStatus, integrate
from src.solver.model import LAMBDA_SPH, CurvatureSpec

TOL = 1e-6 * LAMBDA_SPH


def test_richardson_limit_constant_sequence():
    assert richardson_limit([0.7, 0.7, 0.7], [1.0, 0.5, 0.25], 0.5) == 0.7


def test_richardson_limit_exact_on_quadratic():
    steps = np.array([1.0, 0.5, 0.25, 0.125])
    s = steps**0.5
    values = 2.0 + 3.0 * s - 5.0 * s**2
    assert richardson_limit(values, steps, 0.5) == pytest.approx(2.0, abs=1e-12)


def test_richardson_limit_rejects_mismatch():
    with pytest.raises(ConfigurationError):
        richardson_limit([1.0, 2.0], [1.0], 1.0)
    with pytest.raises(ConfigurationError):
        richardson_limit([], [], 1.0)


def test_rescaled_eta_normalisation():
    lam = 0.1
    profile = integrate(CurvatureSpec.regularized(1.0, lam), 2.0)
    step = rescaled_eta(profile, lam, x_max=10.0, n_grid=51)
    assert step.eta[0] == 0.0
    assert lam * step.r_lambda**2 * math.exp(2.0 * step.u0) == pytest.approx(1.0)
    assert step.scale == pytest.approx(lam * math.exp(4.0))
    assert step.ratio == pytest.approx(step.r_lambda / lam)
    assert step.x[-1] <= 10.0


def test_solve_regularized_target_window():
    with pytest.raises(ConfigurationError):
        solve_regularized(1.0, 0.1, 4.5 * math.pi)
    with pytest.raises(ConfigurationError):
        solve_regularized(1.0, 0.1, 0.0)


@pytest.mark.parametrize(
    "schedule, target",
    [
        ([1.0, 0.3], 3.5 * math.pi),
        ([1.0, 1.0, 0.1], 3.5 * math.pi),
        ([1.0, 0.3, -0.1], 3.5 * math.pi),
        ([1.0, 0.3, 0.1], 2.9 * math.pi),
        ([1.0, 0.3, 0.1], 4.0 * math.pi),
    ],
)
def test_run_continuation_validation(schedule, target):
    with pytest.raises(ConfigurationError):
        run_continuation(1.0, target, schedule)


def test_check_settles_looks_at_the_extrapolation_tail():
    check_settles(np.array([0.05664, 0.06010, 0.05560, 0.05268, 0.05138]), 0.1)
    check_settles(np.array([0.7, 0.7, 0.7]), 0.1)
    with pytest.raises(FailedLimitError):
        check_settles(np.array([0.05, 0.052, 0.051, 0.0535]), 0.1)
    with pytest.raises(FailedLimitError):
        check_settles(np.array([0.1, 0.5, 0.8]), 0.1)
    with pytest.raises(FailedLimitError):
        check_settles(np.array([0.1, -0.05, 0.02]), 0.1)


@given(
    st.floats(min_value=-1.0, max_value=1.0),
    st.floats(min_value=-2.0, max_value=2.0),
    st.floats(min_value=0.2, max_value=1.5),
)
def test_richardson_limit_recovers_limit_of_quadratic_model(mu, a, exponent):
    steps = np.array([0.9, 0.4, 0.15])
    s = steps**exponent
    values = mu + a * s + 0.5 * s**2
    assert richardson_limit(values, steps, exponent) == pytest.approx(mu, abs=1e-9)


@pytest.mark.slow
def test_regularized_solution_total():
    profile = solve_regularized(1.0, 1.0, 2.0 * math.pi)
    assert profile.status is ProfileStatus.CONVERGED
    assert abs(profile.lambda_hat - 2.0 * math.pi) <= TOL


@pytest.mark.slow
def test_large_lambda_follows_curvature_scaling():
    # K ≈ λe^{-r²} near the origin, so u(0) + ½log λ settles as λ grows
    heights = [solve_regularized(1.0, lam, 2.0 * math.pi).u0 + 0.5 * math.log(lam) for lam in (1e3, 1e6)]
    assert heights[0] == pytest.approx(heights[1], abs=1e-2)


@pytest.mark.slow
def test_continuation_reaches_direct_solution():
    result = run_continuation(1.0, 3.5 * math.pi)
    scales = [s.scale for s in result.steps]
    assert all(b > a for a, b in zip(scales, scales[1:]))
    for step in result.steps:
        assert step.eta[0] == 0.0
        assert np.all(step.eta <= 1e-12)
        assert abs(step.eta_lambda_total - 3.5 * math.pi) <= TOL
    assert result.mu_hat > 0
    assert result.rho == pytest.approx(result.mu_hat ** -1.0)
    assert result.final_profile.u0 == pytest.approx(math.log(result.rho))
    assert result.final_profile.r[-1] == pytest.approx(10.0)
    assert result.match_error <= 1e-2
    assert 0.0 <= result.eta_error <= 0.1
    assert len(result.csv_rows()) == len(result.steps)
