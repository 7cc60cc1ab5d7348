import math

import numpy as np
import pytest

from conftest import pure_log_profile
from src.analysis.blowup import (
    BlowupDiagnostics,
    blowup_sweep,
    check_trends,
    rescale_to_bubble,
)
from src.solver.errors import ConfigurationError, RangeError
from src.solver.model import LAMBDA_SPH


def _diag(u0: float, mu: float, sup: float, mass: float) -> BlowupDiagnostics:
    return BlowupDiagnostics(
        u0=u0, Lambda_hat=3.9 * math.pi, mu=mu, sup_dist=sup, grad_dist=sup,
        mass_in_delta=mass * 3.9 * math.pi, mass_fraction=mass, delta=0.1, volume=1.0,
    )


def test_bubble_is_its_own_rescaling(bubble_profile):
    diag = rescale_to_bubble(bubble_profile)
    assert diag.mu == pytest.approx(1.0)
    assert diag.eta[0] == math.log(2.0)
    assert diag.sup_dist <= 1e-5
    assert diag.grad_dist <= 1e-5
    x = 0.1**2
    assert diag.mass_in_delta == pytest.approx(LAMBDA_SPH * x / (1.0 + x), rel=1e-4)
    assert diag.mass_fraction == pytest.approx(x / (1.0 + x), rel=1e-4)


def test_rescaled_grid_and_csv_row(bubble_profile):
    diag = rescale_to_bubble(bubble_profile, R_eta=5.0, n_grid=11)
    np.testing.assert_allclose(diag.x, np.linspace(0.0, 5.0, 11))
    row = diag.csv_row()
    assert set(row) == {"target", "u0", "mu", "sup_dist", "grad_dist", "mass_fraction"}
    assert "eta" in diag.to_dict(with_grid=True)
    assert "eta" not in diag.to_dict()


def test_rescale_out_of_range(bubble_profile):
    with pytest.raises(RangeError):
        rescale_to_bubble(bubble_profile, R_eta=1e12)
    with pytest.raises(RangeError):
        rescale_to_bubble(bubble_profile, delta=1e12)
    short = pure_log_profile(r_max=5.0, n=51)
    with pytest.raises(RangeError):
        rescale_to_bubble(short, R_eta=1e3)


def test_rescale_rejects_bad_settings(bubble_profile):
    with pytest.raises(ConfigurationError):
        rescale_to_bubble(bubble_profile, R_eta=0.0)
    with pytest.raises(ConfigurationError):
        rescale_to_bubble(bubble_profile, n_grid=1)


@pytest.mark.parametrize(
    "targets",
    [[], [2.5 * math.pi], [3.9 * math.pi, 4.0 * math.pi], [3.99 * math.pi, 3.9 * math.pi]],
)
def test_blowup_sweep_validates_targets(targets):
    with pytest.raises(ConfigurationError):
        blowup_sweep(1.0, targets)


def test_check_trends():
    good = [_diag(3.0, 0.1, 0.2, 0.9), _diag(5.0, 0.01, 0.05, 0.97), _diag(7.0, 0.002, 0.01, 0.99)]
    assert all(check_trends(good).values())
    bad = [good[0], _diag(2.0, 0.2, 0.3, 0.8)]
    trends = check_trends(bad)
    assert not any(trends.values())


@pytest.mark.slow
def test_concentration_as_total_approaches_sphere():
    targets = [3.9 * math.pi, 3.99 * math.pi, 3.999 * math.pi]
    diags = blowup_sweep(1.0, targets)
    trends = check_trends(diags)
    assert trends["u0_increasing"]
    assert trends["mu_decreasing"]
    assert trends["sup_dist_decreasing"]
    assert trends["mass_increasing"]
    assert diags[-1].sup_dist <= 0.05
    assert diags[-1].mass_in_delta > 0.95 * diags[-1].Lambda_hat
