import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import pure_log_profile
from src.analysis.diagnostics import (
    diagnose,
    farfield_fit,
    gradient_decay,
    is_monotone,
    kelvin_transform,
    loglog_ratio,
    pohozaev_residual,
    volume_residual,
)
from src.solver.errors import ConfigurationError, RangeError
from src.solver.integrator import RadialProfile
from src.solver.model import LAMBDA_SPH, CurvatureSpec, lambda_star
from src.solver.quadrature import IntegralReport, expected_pw, expected_volume
from src.solver.shooting import solve_for_lambda


def _report(total: float, p: float, P_hat: float, V_hat: float) -> IntegralReport:
    return IntegralReport(
        Lambda_hat=total, V_hat=V_hat, P_hat=P_hat, tail_fraction=0.0,
        converged=True, R=1e7, dV=0.0, dP=0.0, p=p,
    )


@given(
    st.floats(min_value=0.2, max_value=1.9),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_residuals_vanish_on_identity_values(p, s):
    total = (2.0 + p) * math.pi + s * (2.0 - p) * math.pi
    report = _report(total, p, expected_pw(total, p), expected_volume(total, p))
    assert abs(pohozaev_residual(report, p)) < 1e-12
    assert abs(volume_residual(report, p)) < 1e-12


def test_residual_sign_follows_missing_mass():
    total, p = 3.5 * math.pi, 1.0
    report = _report(total, p, 0.9 * expected_pw(total, p), expected_volume(total, p))
    assert pohozaev_residual(report, p) < 0


def test_farfield_fit_pure_log():
    fit = farfield_fit(pure_log_profile(slope=-2.0, C=0.0))
    assert fit.slope == pytest.approx(-2.0, abs=1e-10)
    assert fit.C == pytest.approx(0.0, abs=1e-8)
    assert fit.rms <= 1e-10


def test_farfield_fit_skips_correction_near_endpoint():
    spec = CurvatureSpec.sign_changing(1.0)
    fit = farfield_fit(pure_log_profile(slope=-1.52, C=0.2, spec=spec))
    assert math.isnan(fit.alpha)
    assert fit.C == pytest.approx(fit.intercept)


def test_farfield_fit_recovers_power_correction():
    r = np.geomspace(1.0, 1e8, 1601)
    t = np.log(r)
    u = 0.4 - 2.0 * t + 0.3 / r
    w = -2.0 - 0.3 / r
    profile = RadialProfile.from_arrays(CurvatureSpec.constant(1.0), r, u, w, lambda_hat=LAMBDA_SPH)
    fit = farfield_fit(profile, (1e2, 1e5))
    assert fit.slope == pytest.approx(-2.0, abs=1e-3)
    assert math.isfinite(fit.alpha) and fit.alpha > 0
    assert fit.rms < 1e-3


def test_farfield_fit_window_checks():
    profile = pure_log_profile(r_max=1e7)
    with pytest.raises(ConfigurationError):
        farfield_fit(profile, (1e3, 5e4))
    with pytest.raises(RangeError):
        farfield_fit(profile, (1e3, 1e9))


def test_kelvin_transform_of_pure_log_vanishes():
    profile = pure_log_profile(slope=-1.75, spec=CurvatureSpec.sign_changing(1.0))
    rows = kelvin_transform(profile, 3.5 * math.pi, np.geomspace(1e-8, 1e-2, 25))
    assert len(rows) == 25
    assert max(abs(v) for _, v in rows) < 1e-10
    assert kelvin_transform(profile, 3.5 * math.pi, []) == []
    with pytest.raises(ConfigurationError):
        kelvin_transform(profile, 3.5 * math.pi, [0.0])


def test_gradient_decay_pure_log():
    assert gradient_decay(pure_log_profile(slope=-2.0), (1e3, 1e6)) == pytest.approx(2.0)


@pytest.mark.parametrize("coef", [1.0, 1.3])
def test_loglog_ratio_on_endpoint_profile(coef):
    p = 1.0
    r = np.geomspace(math.e, 1e8, 1601)
    t = np.log(r)
    u = -(1.0 + 0.5 * p) * t - coef * np.log(t)
    w = -(1.0 + 0.5 * p) - coef / t
    profile = RadialProfile.from_arrays(
        CurvatureSpec.sign_changing(p), r, u, w, lambda_hat=(2.0 + p) * math.pi
    )
    rows = loglog_ratio(profile, p, [1e3, 1e5, 1e7])
    for _, ratio in rows:
        assert ratio == pytest.approx(-coef, abs=1e-6)


def test_loglog_ratio_refusals():
    profile = pure_log_profile(slope=-1.75, spec=CurvatureSpec.sign_changing(1.0))
    with pytest.raises(ConfigurationError):
        loglog_ratio(profile, 1.0, [1e3])
    endpoint = pure_log_profile(slope=-1.5, spec=CurvatureSpec.sign_changing(1.0))
    with pytest.raises(ConfigurationError):
        loglog_ratio(endpoint, 1.0, [2.0])


def test_is_monotone():
    assert is_monotone(pure_log_profile(slope=-2.0))
    assert not is_monotone(pure_log_profile(slope=0.5))


def test_bubble_far_field_slope(bubble_profile):
    fit = farfield_fit(bubble_profile, (1e3, 1e5))
    assert fit.slope == pytest.approx(-2.0, abs=1e-3)


def test_diagnose_bubble(bubble_profile):
    report = diagnose(bubble_profile)
    assert report.window_ok
    assert report.monotone
    assert math.isnan(report.pohozaev_residual)
    assert abs(report.volume_residual) < 1e-6
    assert report.lambda_over_pi == pytest.approx(4.0, rel=1e-6)
    assert report.loglog_ratio is None


@pytest.mark.slow
def test_diagnose_interior_solution(scp_solution):
    report = diagnose(scp_solution.profile)
    total = scp_solution.Lambda_hat
    assert report.window_ok
    assert report.monotone
    assert abs(report.pohozaev_residual) <= 1e-3
    assert abs(report.volume_residual) <= 1e-3
    assert report.farfield.slope == pytest.approx(-1.75, abs=0.02)
    assert report.gradient_bound <= total / (2.0 * math.pi) + 0.05
    assert report.integrals.P_hat == pytest.approx(0.875 * math.pi, rel=1e-2)
    assert report.integrals.V_hat == pytest.approx(4.375 * math.pi, rel=1e-2)


@pytest.mark.slow
def test_loglog_ratio_near_endpoint_solution(endpoint_solution):
    rows = loglog_ratio(endpoint_solution.profile, 1.0, [1e3, 1e5, 1e7])
    ratios = [ratio for _, ratio in rows]
    assert all(-1.6 <= ratio <= -0.7 for ratio in ratios)
    assert abs(ratios[-1] + 1.0) < abs(ratios[0] + 1.0)


@pytest.mark.slow
def test_kelvin_transform_decreases_near_endpoint(endpoint_solution):
    s_grid = [1e-1, 1e-2, 1e-3, 1e-4]
    values = [v for _, v in kelvin_transform(endpoint_solution.profile, endpoint_solution.Lambda_hat, s_grid)]
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_kelvin_transform_settles_on_interior_solution(scp_solution):
    profile = scp_solution.profile
    fit = farfield_fit(profile)
    values = np.array([v for _, v in kelvin_transform(profile, scp_solution.Lambda_hat, [1e-1, 1e-2, 1e-3, 1e-4])])
    steps = np.abs(np.diff(values))
    assert np.all(steps[1:] < steps[:-1])
    assert abs(values[-1] - fit.C) <= 0.01 * abs(fit.C)


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("position", ["lower", "middle", "upper"])
def test_window_solutions_satisfy_identities(p, position):
    low = lambda_star(p)
    target = {
        "lower": low + 0.1 * math.pi,
        "middle": 0.5 * (low + LAMBDA_SPH),
        "upper": LAMBDA_SPH - 0.1 * math.pi,
    }[position]
    result = solve_for_lambda(CurvatureSpec.sign_changing(p), target)
    report = diagnose(result.profile)
    total = result.Lambda_hat
    assert report.window_ok
    assert abs(report.pohozaev_residual) <= 1e-3
    assert abs(report.volume_residual) <= 1e-3
    if position != "lower":
        # the lower target sits on the Λ̂ - (2+p)π = 0.1π threshold of the far-field law
        assert report.farfield.slope == pytest.approx(-total / (2.0 * math.pi), rel=0.02)
        assert report.gradient_bound <= total / (2.0 * math.pi) + 0.05
