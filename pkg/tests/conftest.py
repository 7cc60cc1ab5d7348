import math

import numpy as np
import pytest

from src.solver.integrator import IntegratorControls, ProfileStatus, RadialProfile, integrate
from src.solver.model import CurvatureSpec
from src.solver.shooting import solve_for_lambda


@pytest.fixture(scope="session")
def bubble_profile() -> RadialProfile:
    return integrate(CurvatureSpec.constant(1.0), math.log(2.0), IntegratorControls())


@pytest.fixture(scope="session")
def scp_solution():
    """p = 1, Λ = 3.5π."""
    return solve_for_lambda(CurvatureSpec.sign_changing(1.0), 3.5 * math.pi)


def pure_log_profile(
    slope: float = -2.0,
    C: float = 0.0,
    spec: CurvatureSpec | None = None,
    r_min: float = 1.0,
    r_max: float = 1e8,
    n: int = 801,
    status: ProfileStatus = ProfileStatus.CONVERGED,
) -> RadialProfile:
    """u = C + slope·log r, carrying Λ̂ = -2π·slope."""
    spec = spec or CurvatureSpec.constant(1.0)
    r = np.geomspace(r_min, r_max, n)
    u = C + slope * np.log(r)
    w = np.full_like(r, slope)
    return RadialProfile.from_arrays(spec, r, u, w, lambda_hat=-2.0 * math.pi * slope, status=status)


@pytest.fixture(scope="session")
def endpoint_solution():
    """p = 1, Λ = 3π + 10⁻³π."""
    return solve_for_lambda(CurvatureSpec.sign_changing(1.0), 3.001 * math.pi)
