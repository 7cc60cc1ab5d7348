from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from typing import Any, Sequence

from scipy.optimize import brentq

from src.solver.errors import ConfigurationError, NoBracketError, NotConvergedError
from src.solver.integrator import IntegratorControls, ProfileStatus, RadialProfile, integrate
from src.solver.model import (
    LAMBDA_SPH,
    CurvatureKind,
    CurvatureSpec,
    admissible_floor,
    lambda_star,
    origin_height_bound,
    over_pi,
)
from src.utils.workers import parallel_map

logger = logging.getLogger("radial_curvature")


@dataclass
class ShootingResult:
    u0: float
    Lambda_hat: float
    status: ProfileStatus
    profile: RadialProfile | None = field(default=None, repr=False)
    iterations: int = 0
    bracket: tuple[float, float] | None = None

    @property
    def converged(self) -> bool:
        return self.status is ProfileStatus.CONVERGED

    def to_dict(self) -> dict[str, Any]:
        return {
            "u0": self.u0,
            "Lambda_hat": self.Lambda_hat,
            "Lambda_hat_over_pi": over_pi(self.Lambda_hat),
            "status": self.status.value,
            "iterations": self.iterations,
            "bracket": list(self.bracket) if self.bracket else None,
        }


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6 * LAMBDA_SPH
    bracket_lo: float | None = None
    bracket_hi: float | None = None
    initial_step: float = 0.25
    growth: float = 2.0
    max_iter: int = 200

    def validate(self) -> SolverOptions:
        if not self.tol > 0:
            raise ConfigurationError("solver tol must be positive")
        if not (self.initial_step > 0 and self.growth >= 1):
            raise ConfigurationError("bracket expansion needs initial_step > 0 and growth >= 1")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        return self

    def bounds(self, spec: CurvatureSpec) -> tuple[float, float]:
        if spec.kind is CurvatureKind.SIGN_CHANGING_POWER:
            lo = origin_height_bound(spec.p) + 1e-3
            hi = 25.0
        elif spec.kind is CurvatureKind.REGULARIZED_POWER:
            lo = -0.5 * math.log(spec.lam) - 5.0
            hi = lo + 30.0
        else:
            raise ConfigurationError("Constant curvature has a single total curvature; nothing to solve")
        lo = lo if self.bracket_lo is None else self.bracket_lo
        hi = hi if self.bracket_hi is None else self.bracket_hi
        if not lo < hi:
            raise ConfigurationError(f"empty bracket [{lo}, {hi}]")
        return lo, hi

    def with_overrides(self, **overrides: Any) -> SolverOptions:
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in overrides.items() if k in known and v is not None}).validate()

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


class _RootFound(Exception):
    def __init__(self, u0: float) -> None:
        super().__init__(u0)
        self.u0 = u0


# ── Single shots ──────────────────────────────────────────────────────


def lambda_of_u0(spec: CurvatureSpec, u0: float, controls: IntegratorControls | None = None) -> ShootingResult:
    profile = integrate(spec, u0, controls)
    return ShootingResult(u0=u0, Lambda_hat=profile.lambda_hat, status=profile.status, profile=profile)


def _shot_value(profile: RadialProfile, target: float) -> float:
    """Signed miss.

    A shot that reaches r_max still above the floor is scored by its last
    tail-corrected estimate; other non-converged shots land below the window.
    """
    if profile.converged:
        return profile.lambda_hat - target
    floor = admissible_floor(profile.spec)
    estimate = float(profile.lam_ext[-1])
    if profile.status is ProfileStatus.MAX_RADIUS and math.isfinite(estimate) and estimate > floor:
        return estimate - target
    stop = float(profile.lam[-1])
    return min(stop, floor) - target


# ── Solve for a prescribed total curvature ────────────────────────────


def solve_for_lambda(
    spec: CurvatureSpec,
    target: float,
    controls: IntegratorControls | None = None,
    opts: SolverOptions | None = None,
) -> ShootingResult:
    opts = (opts or SolverOptions()).validate()
    controls = (controls or IntegratorControls()).validate()
    lo, hi_limit = opts.bounds(spec)

    shots: dict[float, RadialProfile] = {}

    def objective(u0: float) -> float:
        profile = shots.get(u0)
        if profile is None:
            profile = integrate(spec, u0, controls)
            shots[u0] = profile
        value = _shot_value(profile, target)
        logger.debug("[Shoot] u0=%.12g status=%s miss=%.3e", u0, profile.status.value, value)
        if profile.converged and abs(value) <= 0.5 * opts.tol:
            raise _RootFound(u0)
        return value

    try:
        bracket = _expand_bracket(objective, lo, hi_limit, opts)
    except _RootFound as hit:
        bracket = (hit.u0, hit.u0)
    if bracket is None:
        raise NoBracketError(
            f"no sign change of Λ̂(u0) - {target / math.pi:.6f}π on [{lo:.6g}, {hi_limit:.6g}]"
        )

    try:
        root = bracket[0] if bracket[0] == bracket[1] else brentq(
            objective, bracket[0], bracket[1], xtol=1e-14, maxiter=opts.max_iter
        )
    except _RootFound as hit:
        root = hit.u0
    except RuntimeError as exc:
        raise NotConvergedError(f"brentq stopped on {bracket}: {exc}") from exc

    profile = shots[root] if root in shots else integrate(spec, root, controls)
    result = ShootingResult(
        u0=root,
        Lambda_hat=profile.lambda_hat,
        status=profile.status,
        profile=profile,
        iterations=len(shots),
        bracket=bracket,
    )
    miss = _shot_value(profile, target)
    if not profile.converged or abs(miss) > opts.tol:
        raise NotConvergedError(
            f"final shot u0={root:.12g} missed target {target / math.pi:.6f}π by {miss:.3e} "
            f"(status {profile.status.value})",
            status=profile.status.value,
        )
    logger.info(
        "[Shoot] %s target=%.6fπ → u0=%.10f Λ̂=%.8fπ (%d shots)",
        spec.describe(), target / math.pi, root, result.Lambda_hat / math.pi, result.iterations,
    )
    return result


def _expand_bracket(objective, lo: float, hi_limit: float, opts: SolverOptions) -> tuple[float, float] | None:
    f_lo = objective(lo)
    step = opts.initial_step
    a = lo
    while a < hi_limit:
        b = min(a + step, hi_limit)
        f_b = objective(b)
        if math.copysign(1.0, f_lo) != math.copysign(1.0, f_b):
            logger.debug("[Shoot] bracket [%.6g, %.6g]", a, b)
            return a, b
        a, f_lo = b, f_b
        step *= opts.growth
    return None


# ── Sweeps ────────────────────────────────────────────────────────────


def _shoot_summary(spec: CurvatureSpec, controls: IntegratorControls, u0: float) -> ShootingResult:
    result = lambda_of_u0(spec, u0, controls)
    result.profile = None
    return result


def sweep(
    spec: CurvatureSpec,
    u0_grid: Sequence[float],
    controls: IntegratorControls | None = None,
    workers: int | None = None,
) -> list[ShootingResult]:
    """Λ̂ over a grid of origin heights, in grid order. Results carry no profiles."""
    grid = [float(u) for u in u0_grid]
    if not grid:
        raise ConfigurationError("sweep grid is empty")
    controls = (controls or IntegratorControls()).validate()
    results = parallel_map(partial(_shoot_summary, spec, controls), grid, workers)
    converged = [r for r in results if r.converged]
    logger.info(
        "[Sweep] %s: %d/%d shots converged over u0∈[%.4g, %.4g]",
        spec.describe(), len(converged), len(results), min(grid), max(grid),
    )
    return results


def approach_endpoint(
    spec: CurvatureSpec,
    offsets: Sequence[float],
    controls: IntegratorControls | None = None,
    opts: SolverOptions | None = None,
) -> list[ShootingResult]:
    """Solutions with Λ = (2+p)π + offset·π for shrinking offsets."""
    if spec.kind is not CurvatureKind.SIGN_CHANGING_POWER:
        raise ConfigurationError("endpoint approach applies to K = 1 - r^p only")
    offsets = [float(o) for o in offsets]
    if not offsets or any(o <= 0 for o in offsets):
        raise ConfigurationError("offsets must be positive")
    if any(b >= a for a, b in zip(offsets, offsets[1:])):
        raise ConfigurationError("offsets must be strictly decreasing")

    base = lambda_star(spec.p)
    floor = origin_height_bound(spec.p)
    results = []
    for offset in offsets:
        result = solve_for_lambda(spec, base + offset * math.pi, controls, opts)
        if result.u0 < floor:
            logger.warning("[Endpoint] u0=%.6f below log√(p+2)=%.6f", result.u0, floor)
        results.append(result)
        logger.info("[Endpoint] offset=%.3gπ u0=%.8f", offset, result.u0)
    return results
