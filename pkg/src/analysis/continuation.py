from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Sequence

import numpy as np

from src.config import ContinuationConfig
from src.solver.errors import ConfigurationError, FailedLimitError, GrowthGuardError, NotConvergedError
from src.solver.integrator import IntegratorControls, ProfileStatus, RadialProfile, sample_profile
from src.solver.model import LAMBDA_SPH, CurvatureSpec, lambda_star, over_pi
from src.solver.shooting import ShootingResult, SolverOptions, solve_for_lambda
from src.utils.workers import parallel_map

logger = logging.getLogger("radial_curvature")


@dataclass
class ContinuationStep:
    lam: float
    u0: float
    r_lambda: float
    ratio: float
    scale: float
    eta_lambda_total: float
    x: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    profile: RadialProfile | None = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "u0": self.u0,
            "r_lambda": self.r_lambda,
            "ratio": self.ratio,
            "scale": self.scale,
            "eta_lambda_total": self.eta_lambda_total,
        }


@dataclass
class ContinuationResult:
    p: float
    target: float
    steps: list[ContinuationStep]
    mu_hat: float
    rho: float
    final_profile: RadialProfile
    direct: ShootingResult
    match_error: float
    eta_error: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "target": self.target,
            "target_over_pi": over_pi(self.target),
            "steps": [s.to_dict() for s in self.steps],
            "mu_hat": self.mu_hat,
            "rho": self.rho,
            "final_u0": self.final_profile.u0,
            "direct_u0": self.direct.u0,
            "direct_Lambda_hat": self.direct.Lambda_hat,
            "match_error": self.match_error,
            "eta_error": self.eta_error,
        }

    def csv_rows(self) -> list[dict[str, float]]:
        return [s.to_dict() for s in self.steps]


def solve_regularized(
    p: float,
    lam: float,
    target: float,
    controls: IntegratorControls | None = None,
    opts: SolverOptions | None = None,
) -> RadialProfile:
    if not 0.0 < target < LAMBDA_SPH:
        raise ConfigurationError(f"regularized target must lie in (0, 4π), got {target / math.pi:.6f}π")
    spec = CurvatureSpec.regularized(p, lam)
    try:
        return solve_for_lambda(spec, target, controls, opts).profile
    except NotConvergedError as exc:
        if exc.status == ProfileStatus.GROWTH_GUARD.value:
            raise GrowthGuardError(f"λ={lam:g}: {exc}") from exc
        raise


def rescaled_eta(profile: RadialProfile, lam: float, x_max: float = 10.0, n_grid: int = 201) -> ContinuationStep:
    """η(x) = u(r_λ·x) - u(0) with λ·r_λ²·e^{2u(0)} = 1."""
    p = profile.spec.p
    u0 = profile.u0
    r_lambda = math.exp(-u0) / math.sqrt(lam)
    x_end = min(x_max, profile.r_last / r_lambda)
    x = np.linspace(0.0, x_end, n_grid)
    u, _ = sample_profile(profile, r_lambda * x)
    eta = u - u0
    eta[0] = 0.0
    return ContinuationStep(
        lam=lam,
        u0=u0,
        r_lambda=r_lambda,
        ratio=r_lambda**p / lam,
        scale=lam * math.exp(2.0 * u0),
        eta_lambda_total=profile.lambda_hat,
        x=x,
        eta=eta,
        profile=profile,
    )


def _extrapolate(values: np.ndarray, steps: np.ndarray, exponent: float) -> np.ndarray:
    """Row-wise limit of values ≈ μ + a·s + b·s², s = step^exponent, over the last three rows."""
    k = min(3, len(steps))
    s = steps[-k:] ** exponent
    system = np.vander(s, k, increasing=True)
    try:
        coeffs = np.linalg.solve(system, values[-k:])
    except np.linalg.LinAlgError as exc:
        raise FailedLimitError(f"degenerate extrapolation nodes {s}") from exc
    return coeffs[0]


def richardson_limit(values: Sequence[float], steps: Sequence[float], exponent: float) -> float:
    """Limit of values ≈ μ + a·s + b·s² with s = step^exponent, from the last three points."""
    values = np.asarray(values, dtype=float)
    steps = np.asarray(steps, dtype=float)
    if values.size != steps.size or values.size == 0:
        raise ConfigurationError("richardson_limit needs matching non-empty sequences")
    if np.all(values == values[-1]):
        return float(values[-1])
    return float(_extrapolate(values, steps, exponent))


def check_settles(ratios: np.ndarray, limit_tol: float) -> None:
    """Cauchy test on the ratios the extrapolation uses; raises FailedLimitError."""
    ratios = np.asarray(ratios, dtype=float)
    if not np.all(ratios > 0):
        raise FailedLimitError(f"ratio r_λ^p/λ not positive: {ratios.tolist()}")
    tail = np.abs(np.diff(ratios[-3:]))
    last_change = tail[-1] / ratios[-1]
    if (tail[-1] > 0 and tail[-1] >= tail[0]) or last_change > limit_tol:
        raise FailedLimitError(
            f"ratio r_λ^p/λ does not settle: {ratios.tolist()} (last relative change {last_change:.3g})"
        )


def _step_at(
    p: float,
    target: float,
    controls: IntegratorControls,
    opts: SolverOptions,
    settings: ContinuationConfig,
    lam: float,
) -> ContinuationStep:
    profile = solve_regularized(p, lam, target, controls, opts)
    return rescaled_eta(profile, lam, settings.match_radius, settings.n_grid)


def run_continuation(
    p: float,
    target: float,
    schedule: Sequence[float] | None = None,
    controls: IntegratorControls | None = None,
    opts: SolverOptions | None = None,
    workers: int | None = None,
    settings: ContinuationConfig | None = None,
) -> ContinuationResult:
    settings = settings or ContinuationConfig()
    schedule = [float(v) for v in (schedule or settings.schedule)]
    if len(schedule) < 3:
        raise ConfigurationError("continuation needs at least three λ values")
    if any(v <= 0 for v in schedule) or any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigurationError("λ schedule must be positive and strictly decreasing")
    if not lambda_star(p) < target < LAMBDA_SPH:
        raise ConfigurationError(
            f"target {target / math.pi:.6f}π outside ({lambda_star(p) / math.pi:g}π, 4π)"
        )
    controls = controls or IntegratorControls()
    opts = opts or SolverOptions()

    steps = parallel_map(partial(_step_at, p, target, controls, opts, settings), schedule, workers)
    for step in steps:
        logger.info(
            "[Continue] λ=%g u0=%.6f λe^{2u0}=%.6f r_λ^p/λ=%.8f",
            step.lam, step.u0, step.scale, step.ratio,
        )
    scales = [s.scale for s in steps]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        logger.warning("[Continue] λe^{2u_λ(0)} not increasing along the schedule: %s", scales)

    ratios = np.array([s.ratio for s in steps])
    check_settles(ratios, settings.limit_tol)

    beta = target / math.pi - 2.0 - p
    r_lambdas = np.array([s.r_lambda for s in steps])
    mu_hat = richardson_limit(ratios, r_lambdas, beta)
    if not mu_hat > 0:
        raise FailedLimitError(f"extrapolated ratio {mu_hat:.6g} is not positive")
    rho = mu_hat ** (-1.0 / p)

    x = np.linspace(0.0, settings.match_radius, settings.n_grid)
    u_final, w_final, eta_last = _limit_profile(steps, x, rho, r_lambdas, beta)
    spec = CurvatureSpec.sign_changing(p)
    final_profile = RadialProfile.from_arrays(
        spec, x[1:], u_final[1:], w_final[1:], status=ProfileStatus.MAX_RADIUS, u0=math.log(rho)
    )

    direct = solve_for_lambda(spec, target, controls, opts)
    u_direct, _ = sample_profile(direct.profile, x)
    match_error = float(np.max(np.abs(u_final - u_direct)))
    eta_error = float(np.max(np.abs(eta_last + math.log(rho) - u_final)))

    logger.info(
        "[Continue] μ̂=%.8f ρ=%.6f match_error=%.3e eta_error=%.3e",
        mu_hat, rho, match_error, eta_error,
    )
    return ContinuationResult(
        p=p,
        target=target,
        steps=steps,
        mu_hat=mu_hat,
        rho=rho,
        final_profile=final_profile,
        direct=direct,
        match_error=match_error,
        eta_error=eta_error,
    )


def _limit_profile(
    steps: Sequence[ContinuationStep],
    x: np.ndarray,
    rho: float,
    r_lambdas: np.ndarray,
    beta: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """u(x) = η(ρx) + log ρ and w = x·u'(x), with η extrapolated to λ → 0 pointwise.

    Also returns the last step's η(ρx).
    """
    etas, slopes = [], []
    for step in steps[-3:]:
        u, w = sample_profile(step.profile, step.r_lambda * rho * x)
        eta = u - step.u0
        eta[0] = 0.0
        etas.append(eta)
        slopes.append(w)
    eta_limit = _extrapolate(np.array(etas), r_lambdas, beta)
    w_limit = _extrapolate(np.array(slopes), r_lambdas, beta)
    return eta_limit + math.log(rho), w_limit, etas[-1]
