"""Spherical blow-up as the total curvature approaches 4π.

Each solution is rescaled by μ = 2e^{-u(0)} so that the spherical bubble
becomes log(2/(1+x²)); the distance to that profile and the share of the
curvature inside a small disc are recorded per target.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Sequence

import numpy as np

from src.config import BlowupConfig
from src.solver.errors import ConfigurationError, RangeError
from src.solver.farfield import TWO_PI
from src.solver.integrator import IntegratorControls, RadialProfile, sample_profile
from src.solver.model import LAMBDA_SPH, CurvatureSpec, lambda_star, over_pi
from src.solver.shooting import SolverOptions, solve_for_lambda
from src.utils.workers import parallel_map

logger = logging.getLogger("radial_curvature")

CSV_FIELDS = ("target", "u0", "mu", "sup_dist", "grad_dist", "mass_fraction")


@dataclass
class BlowupDiagnostics:
    u0: float
    Lambda_hat: float
    mu: float
    sup_dist: float
    grad_dist: float
    mass_in_delta: float
    mass_fraction: float
    delta: float
    volume: float
    target: float = math.nan
    x: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    eta: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def to_dict(self, with_grid: bool = False) -> dict[str, Any]:
        data = {
            "target": self.target,
            "target_over_pi": over_pi(self.target),
            "u0": self.u0,
            "Lambda_hat": self.Lambda_hat,
            "mu": self.mu,
            "sup_dist": self.sup_dist,
            "grad_dist": self.grad_dist,
            "mass_in_delta": self.mass_in_delta,
            "mass_fraction": self.mass_fraction,
            "delta": self.delta,
            "volume": self.volume,
        }
        if with_grid:
            data["x"] = self.x.tolist()
            data["eta"] = self.eta.tolist()
        return data

    def csv_row(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in CSV_FIELDS}


def rescale_to_bubble(
    profile: RadialProfile,
    R_eta: float = 10.0,
    delta: float = 0.1,
    n_grid: int = 201,
) -> BlowupDiagnostics:
    if not (R_eta > 0 and delta > 0 and n_grid >= 2):
        raise ConfigurationError("R_eta and delta must be positive, n_grid at least 2")
    mu = 2.0 * math.exp(-profile.u0)
    if mu * R_eta > profile.r_last:
        raise RangeError(f"μ·R_eta = {mu * R_eta:.3g} exceeds the profile end {profile.r_last:.3g}")
    if delta > profile.r_last:
        raise RangeError(f"delta {delta:g} beyond the profile end {profile.r_last:.3g}")

    x = np.linspace(0.0, R_eta, n_grid)
    u, w = sample_profile(profile, mu * x)
    eta = u - profile.u0 + math.log(2.0)
    eta[0] = math.log(2.0)

    # x·η'(x) equals r·u'(r) = w
    bubble_eta = np.log(2.0 / (1.0 + x**2))
    bubble_slope = -2.0 * x**2 / (1.0 + x**2)
    sup_dist = float(np.max(np.abs(eta - bubble_eta)))
    grad_dist = float(np.max(np.abs(w - bubble_slope)))

    _, w_delta = sample_profile(profile, [delta])
    mass = -TWO_PI * float(w_delta[0])
    total = profile.lambda_hat
    return BlowupDiagnostics(
        u0=profile.u0,
        Lambda_hat=total,
        mu=mu,
        sup_dist=sup_dist,
        grad_dist=grad_dist,
        mass_in_delta=mass,
        mass_fraction=mass / total if math.isfinite(total) and total > 0 else math.nan,
        delta=delta,
        volume=float(profile.vol[-1]),
        x=x,
        eta=eta,
    )


def _blowup_one(
    p: float,
    controls: IntegratorControls,
    opts: SolverOptions,
    settings: BlowupConfig,
    target: float,
) -> BlowupDiagnostics:
    result = solve_for_lambda(CurvatureSpec.sign_changing(p), target, controls, opts)
    diag = rescale_to_bubble(result.profile, settings.R_eta, settings.delta, settings.n_grid)
    diag.target = target
    return diag


def blowup_sweep(
    p: float,
    targets: Sequence[float],
    controls: IntegratorControls | None = None,
    opts: SolverOptions | None = None,
    workers: int | None = None,
    settings: BlowupConfig | None = None,
) -> list[BlowupDiagnostics]:
    targets = [float(t) for t in targets]
    if not targets:
        raise ConfigurationError("no blow-up targets")
    low = lambda_star(p)
    if any(not (low < t < LAMBDA_SPH) for t in targets):
        raise ConfigurationError(f"blow-up targets must lie in ({low / math.pi:g}π, 4π)")
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise ConfigurationError("blow-up targets must be strictly increasing")

    controls = controls or IntegratorControls()
    opts = opts or SolverOptions()
    settings = settings or BlowupConfig()
    results = parallel_map(partial(_blowup_one, p, controls, opts, settings), targets, workers)
    for diag in results:
        logger.info(
            "[Blowup] target=%.6fπ u0=%.6f μ=%.3e sup=%.3e mass=%.5f",
            diag.target / math.pi, diag.u0, diag.mu, diag.sup_dist, diag.mass_fraction,
        )
    return results


def check_trends(diagnostics: Sequence[BlowupDiagnostics], tol: float = 1e-6) -> dict[str, bool]:
    """Monotone trends along increasing targets; ``tol`` is the allowed backslide."""

    def rising(values: list[float]) -> bool:
        return all(b - a > -tol for a, b in zip(values, values[1:]))

    u0 = [d.u0 for d in diagnostics]
    mu = [d.mu for d in diagnostics]
    sup = [d.sup_dist for d in diagnostics]
    mass = [d.mass_fraction for d in diagnostics]
    return {
        "u0_increasing": rising(u0),
        "mu_decreasing": rising([-m for m in mu]),
        "sup_dist_decreasing": rising([-s for s in sup]),
        "mass_increasing": rising(mass),
    }
