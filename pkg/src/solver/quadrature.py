from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import TYPE_CHECKING, Any

import numpy as np

from src.solver.errors import ConfigurationError, NotConvergedError, RangeError
from src.solver.farfield import TWO_PI, far_field_total, power_tail
from src.solver.integrator import RadialProfile, resample
from src.solver.model import LAMBDA_SPH, CurvatureKind, lambda_star

if TYPE_CHECKING:
    from src.analysis.diagnostics import FarFieldFit

__all__ = [
    "IntegralReport",
    "expected_pw",
    "expected_volume",
    "far_field_total",
    "local_total_curvature",
    "pohozaev_quantities",
    "tail_extrapolate",
]

logger = logging.getLogger("radial_curvature")

# dP is only trusted this far above the lower window end
POWER_TAIL_MARGIN = 0.05 * math.pi


@dataclass(frozen=True)
class IntegralReport:
    Lambda_hat: float
    V_hat: float
    P_hat: float
    tail_fraction: float
    converged: bool
    R: float
    dV: float
    dP: float
    p: float
    dP_power: float = math.nan

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def local_total_curvature(profile: RadialProfile, r: float) -> float:
    """-2π·r·u'(r), the curvature mass inside radius r."""
    (_, _, w), = resample(profile, [r])
    return -TWO_PI * w


def tail_extrapolate(
    profile: RadialProfile,
    fit: FarFieldFit | None,
    R: float | None = None,
) -> tuple[float, float, bool]:
    if fit is None:
        raise ConfigurationError("tail extrapolation needs a far-field fit")
    R = profile.r_last if R is None else R
    total = profile.lambda_hat
    if not math.isfinite(total):
        total = -TWO_PI * fit.slope

    coef = math.exp(2.0 * fit.C)
    decay = total / math.pi
    ok = True

    if total > 2.0 * math.pi:
        dV = power_tail(coef, R, 2.0 - decay)
    else:
        dV, ok = math.inf, False

    p = profile.spec.p
    if profile.spec.kind is CurvatureKind.CONSTANT:
        dP = 0.0
    elif total > lambda_star(p) + POWER_TAIL_MARGIN:
        dP = power_tail(coef, R, 2.0 + p - decay)
    else:
        # endpoint regime: the s^p tail decays too slowly for a power law; 0 is a lower bound
        dP, ok = 0.0, False
    return dV, dP, ok


def pohozaev_quantities(
    profile: RadialProfile,
    fit: FarFieldFit | None,
    R: float | None = None,
) -> IntegralReport:
    """Λ̂, V̂ and P̂ from the running integrals truncated at the node R (default: last node)."""
    if not profile.converged:
        raise NotConvergedError(
            f"profile ended with status {profile.status.value}: {profile.stop_reason}"
        )
    idx = len(profile) - 1 if R is None else int(np.searchsorted(profile.r, R, side="right")) - 1
    if idx < 1:
        raise RangeError(f"truncation radius {R} below the profile")
    R = float(profile.r[idx])
    spec = profile.spec
    if spec.kind is CurvatureKind.SIGN_CHANGING_POWER and fit is not None:
        # power law matched to u at R
        anchor = float(profile.u[idx]) + profile.lambda_hat / TWO_PI * math.log(R)
        fit = replace(fit, C=anchor)
    dV, dP_power, ok = tail_extrapolate(profile, fit, R)

    V_hat = float(profile.vol[idx]) + dV
    if spec.kind is CurvatureKind.CONSTANT:
        dP, P_hat = 0.0, math.nan
        tails, total = dV, V_hat
    else:
        dP = dP_power
        if spec.kind is CurvatureKind.SIGN_CHANGING_POWER and not ok and math.isfinite(dV):
            # endpoint: the s^p tail is the volume tail plus the curvature still to be shed
            dP = float(profile.lam[idx]) - profile.lambda_hat + dV
        P_hat = float(profile.pw[idx]) + dP
        tails, total = dV + dP, V_hat + P_hat

    fraction = tails / total if math.isfinite(total) and total > 0 else 1.0
    report = IntegralReport(
        Lambda_hat=profile.lambda_hat,
        V_hat=V_hat,
        P_hat=P_hat,
        tail_fraction=min(max(fraction, 0.0), 1.0),
        converged=ok,
        R=R,
        dV=dV,
        dP=dP,
        p=spec.p,
        dP_power=dP_power,
    )
    if not ok:
        logger.warning(
            "Tail not closed by a power law at R=%.3g (Λ̂/π=%.6f)",
            R, report.Lambda_hat / math.pi,
        )
    return report


def expected_pw(total: float, p: float) -> float:
    """∫|x|^p e^{2u} predicted by the Pohozaev identity."""
    return (2.0 / p) * (total / LAMBDA_SPH) * (LAMBDA_SPH - total)


def expected_volume(total: float, p: float) -> float:
    return total - (2.0 * total / (LAMBDA_SPH * p)) * (total - LAMBDA_SPH)
