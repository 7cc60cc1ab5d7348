import math

import numpy as np
import pytest

from conftest import pure_log_profile
from src.analysis.diagnostics import FarFieldFit, farfield_fit
from src.solver.errors import ConfigurationError, NotConvergedError, RangeError
from src.solver.farfield import far_field_total, power_tail
from src.solver.integrator import ProfileStatus, bubble
from src.solver.model import LAMBDA_SPH, CurvatureSpec
from src.solver.quadrature import (
    expected_pw,
    expected_volume,
    local_total_curvature,
    pohozaev_quantities,
    tail_extrapolate,
)


def _fit(slope: float, C: float) -> FarFieldFit:
    return FarFieldFit(slope=slope, C=C, alpha=math.nan, fit_window=(1e3, 1e6), rms=0.0)


def test_local_total_curvature_bubble(bubble_profile):
    assert local_total_curvature(bubble_profile, 1.0) == pytest.approx(2.0 * math.pi, rel=1e-7)
    assert local_total_curvature(bubble_profile, 1e3) == pytest.approx(
        LAMBDA_SPH * 1e6 / (1.0 + 1e6), rel=1e-8
    )
    with pytest.raises(RangeError):
        local_total_curvature(bubble_profile, bubble_profile.r_last * 10.0)


def test_identity_predictions():
    assert expected_pw(3.5 * math.pi, 1.0) == pytest.approx(0.875 * math.pi)
    assert expected_volume(3.5 * math.pi, 1.0) == pytest.approx(4.375 * math.pi)
    assert expected_pw(LAMBDA_SPH, 1.0) == 0.0


def test_power_tail():
    assert power_tail(1.0, 10.0, -1.0) == pytest.approx(2.0 * math.pi / 10.0)
    assert power_tail(1.0, 10.0, 0.0) == math.inf


def test_tail_extrapolate_power_laws():
    spec = CurvatureSpec.sign_changing(1.0)
    C = 0.3
    profile = pure_log_profile(slope=-1.75, C=C, spec=spec)
    R = profile.r_last
    dV, dP, ok = tail_extrapolate(profile, _fit(-1.75, C), R)
    coef = math.exp(2.0 * C)
    assert ok
    assert dV == pytest.approx(2.0 * math.pi * coef * R ** (2.0 - 3.5) / 1.5)
    assert dP == pytest.approx(2.0 * math.pi * coef * R ** (3.0 - 3.5) / 0.5)


def test_tail_extrapolate_endpoint_reports_lower_bound():
    spec = CurvatureSpec.sign_changing(1.0)
    slope = -(3.02 * math.pi) / (2.0 * math.pi)
    profile = pure_log_profile(slope=slope, spec=spec)
    dV, dP, ok = tail_extrapolate(profile, _fit(slope, 0.0))
    assert not ok
    assert dP == 0.0
    assert math.isfinite(dV)


def test_tail_extrapolate_slow_volume_decay():
    spec = CurvatureSpec.regularized(1.0, 0.1)
    profile = pure_log_profile(slope=-0.75, spec=spec)
    dV, _, ok = tail_extrapolate(profile, _fit(-0.75, 0.0))
    assert dV == math.inf
    assert not ok


def test_tail_extrapolate_requires_fit(bubble_profile):
    with pytest.raises(ConfigurationError):
        tail_extrapolate(bubble_profile, None)


def test_pohozaev_quantities_refuses_unconverged():
    profile = pure_log_profile(status=ProfileStatus.MAX_RADIUS)
    with pytest.raises(NotConvergedError):
        pohozaev_quantities(profile, _fit(-2.0, 0.0))


def test_pohozaev_quantities_bubble(bubble_profile):
    report = pohozaev_quantities(bubble_profile, farfield_fit(bubble_profile))
    assert report.Lambda_hat == pytest.approx(LAMBDA_SPH, rel=1e-6)
    assert report.V_hat == pytest.approx(LAMBDA_SPH, rel=1e-6)
    assert math.isnan(report.P_hat)
    assert 0.0 <= report.tail_fraction < 1e-6


def test_far_field_total_constant_matches_bubble():
    u0 = 0.5
    r = np.array([10.0, 100.0, 1000.0])
    u, w = bubble(u0, r)
    estimate = far_field_total(CurvatureSpec.constant(1.0), np.log(r), u, w)
    # error of the tail closure falls off like r^-4
    np.testing.assert_allclose(estimate, LAMBDA_SPH, rtol=1e-3)
    assert abs(estimate[-1] - LAMBDA_SPH) < abs(estimate[0] - LAMBDA_SPH)


def test_far_field_total_undefined_while_rising():
    spec = CurvatureSpec.sign_changing(1.0)
    # v_t = w + 1.5 > 0 near the origin
    assert math.isnan(float(far_field_total(spec, 0.0, 0.0, -0.5)))


def test_far_field_total_exact_log_profile():
    spec = CurvatureSpec.sign_changing(1.0)
    # v_t = w + 1.5 = -0.25, e^{2v} negligible: total is 2π·(1.5 + 0.25)
    t = math.log(1e12)
    w = -1.75
    u = -20.0 + w * t
    assert float(far_field_total(spec, t, u, w)) == pytest.approx(3.5 * math.pi, rel=1e-9)


@pytest.mark.slow
def test_tail_fraction_shrinks_with_truncation_radius(scp_solution):
    profile = scp_solution.profile
    fit = farfield_fit(profile)
    fractions = [pohozaev_quantities(profile, fit, R).tail_fraction for R in (1e4, 1e5, 1e6)]
    assert fractions[0] > fractions[1] > fractions[2]


def test_pohozaev_quantities_closes_power_tail_at_truncation_radius():
    spec = CurvatureSpec.sign_changing(1.0)
    profile = pure_log_profile(slope=-1.75, C=0.3, spec=spec)
    report = pohozaev_quantities(profile, _fit(-1.75, 5.0))
    R = profile.r_last
    assert report.converged
    assert report.dP == report.dP_power
    assert report.dP == pytest.approx(2.0 * math.pi * math.exp(0.6) * R**-0.5 / 0.5, rel=1e-6)
    assert report.P_hat == pytest.approx(profile.pw[-1] + report.dP)


def test_pohozaev_quantities_near_endpoint_is_not_converged():
    spec = CurvatureSpec.sign_changing(1.0)
    slope = -(3.02 * math.pi) / (2.0 * math.pi)
    profile = pure_log_profile(slope=slope, spec=spec)
    report = pohozaev_quantities(profile, _fit(slope, 0.0))
    assert not report.converged
    assert report.dP_power == 0.0
    assert report.dP == pytest.approx(report.dV, abs=1e-12)


@pytest.mark.slow
def test_interior_solution_uses_power_tail(scp_solution):
    profile = scp_solution.profile
    report = pohozaev_quantities(profile, farfield_fit(profile))
    assert report.converged
    assert report.dP == report.dP_power > 0.0


def test_far_field_total_uses_first_integral_on_the_endpoint_orbit():
    spec = CurvatureSpec.sign_changing(1.0)
    t = 40.0
    v = math.log(0.1)
    v_slope = -math.sqrt(0.3**2 + 0.01)
    estimate = float(far_field_total(spec, t, v - 1.5 * t, v_slope - 1.5))
    assert estimate == pytest.approx(2.0 * math.pi * (1.5 + 0.3), rel=1e-9)


@pytest.mark.slow
def test_far_field_total_settles_along_a_lower_end_shot(endpoint_solution):
    profile = endpoint_solution.profile
    late = profile.r >= profile.r[-1] / 10.0
    assert np.ptp(profile.lam_ext[late]) < 1e-6
