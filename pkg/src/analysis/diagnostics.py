from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from src.config import DiagnosticsConfig
from src.solver.errors import ConfigurationError, RangeError
from src.solver.farfield import TWO_PI
from src.solver.integrator import RadialProfile, resample
from src.solver.model import LAMBDA_SPH, CurvatureKind, in_window, lambda_star, over_pi
from src.solver.quadrature import IntegralReport, pohozaev_quantities

logger = logging.getLogger("radial_curvature")

FIT_POINTS = 241
# α is only identifiable when the power correction decays faster than the endpoint log terms
ALPHA_MARGIN = 0.1 * math.pi
ENDPOINT_BAND = 1e-2


@dataclass(frozen=True)
class FarFieldFit:
    slope: float
    C: float
    alpha: float
    fit_window: tuple[float, float]
    rms: float
    intercept: float = math.nan
    correction: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["fit_window"] = list(self.fit_window)
        return data


@dataclass(frozen=True)
class DiagnosticsReport:
    pohozaev_residual: float
    volume_residual: float
    farfield: FarFieldFit
    gradient_bound: float
    kelvin_sup: float
    loglog_ratio: list[tuple[float, float]] | None
    monotone: bool
    window_ok: bool
    lambda_over_pi: float
    integrals: IntegralReport | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "pohozaev_residual": self.pohozaev_residual,
            "volume_residual": self.volume_residual,
            "farfield": self.farfield.to_dict(),
            "gradient_bound": self.gradient_bound,
            "kelvin_sup": self.kelvin_sup,
            "loglog_ratio": [list(row) for row in self.loglog_ratio] if self.loglog_ratio else None,
            "monotone": self.monotone,
            "window_ok": self.window_ok,
            "lambda_over_pi": self.lambda_over_pi,
            "integrals": self.integrals.to_dict() if self.integrals else None,
        }


# ── Identity residuals ────────────────────────────────────────────────


def pohozaev_residual(report: IntegralReport, p: float) -> float:
    lam = report.Lambda_hat
    return ((lam / LAMBDA_SPH) * (lam - LAMBDA_SPH) + 0.5 * p * report.P_hat) / (1.0 + lam * lam)


def volume_residual(report: IntegralReport, p: float) -> float:
    lam = report.Lambda_hat
    return (report.V_hat - lam + (2.0 * lam / (LAMBDA_SPH * p)) * (lam - LAMBDA_SPH)) / (1.0 + report.V_hat)


# ── Far field ─────────────────────────────────────────────────────────


def _window_samples(profile: RadialProfile, window: Sequence[float], n: int = FIT_POINTS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise ConfigurationError(f"invalid window [{lo}, {hi}]")
    if lo < profile.r_first or hi > profile.r_last:
        raise RangeError(
            f"window [{lo:.3g}, {hi:.3g}] outside profile [{profile.r_first:.3g}, {profile.r_last:.3g}]"
        )
    radii = np.geomspace(lo, hi, n)
    nodes = resample(profile, radii)
    return radii, np.array([v[1] for v in nodes]), np.array([v[2] for v in nodes])


def _power_correction(r: np.ndarray, C: float, c: float, alpha: float) -> np.ndarray:
    return C + c * r ** (-alpha)


def farfield_fit(profile: RadialProfile, window: Sequence[float] = (1e3, 1e6)) -> FarFieldFit:
    """u ≈ a + b·log r on the window, then u - b·log r ≈ C + c·r^{-α}."""
    lo, hi = float(window[0]), float(window[1])
    if hi < 100.0 * lo:
        raise ConfigurationError(f"fit window [{lo:.3g}, {hi:.3g}] spans less than two decades")
    r, u, _ = _window_samples(profile, (lo, hi))
    t = np.log(r)

    design = np.column_stack([np.ones_like(t), t])
    (a, b), *_ = np.linalg.lstsq(design, u, rcond=None)
    residual = u - b * t
    model = a + b * t

    C, c, alpha = float(a), 0.0, math.nan
    total = profile.lambda_hat
    spec = profile.spec
    fit_alpha = math.isfinite(total) and (
        spec.kind is CurvatureKind.CONSTANT
        or (spec.kind is CurvatureKind.SIGN_CHANGING_POWER and total - lambda_star(spec.p) > ALPHA_MARGIN)
        or spec.kind is CurvatureKind.REGULARIZED_POWER
    )
    spread = float(np.max(np.abs(residual - residual.mean())))
    if fit_alpha and spread > 1e-12 * (1.0 + abs(float(residual.mean()))):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", OptimizeWarning)
                params, _ = curve_fit(
                    _power_correction,
                    r,
                    residual,
                    p0=(a, 0.0, 0.5),
                    bounds=([-np.inf, -np.inf, 1e-3], [np.inf, np.inf, 20.0]),
                    maxfev=20000,
                )
            C, c, alpha = (float(v) for v in params)
            model = b * t + _power_correction(r, C, c, alpha)
        except (RuntimeError, OptimizeWarning, ValueError) as exc:
            logger.debug("[FarField] correction fit failed: %s", exc)
            C, c, alpha = float(a), 0.0, math.nan

    rms = float(np.sqrt(np.mean((u - model) ** 2)))
    fit = FarFieldFit(
        slope=float(b), C=C, alpha=alpha, fit_window=(lo, hi), rms=rms, intercept=float(a), correction=c
    )
    logger.debug("[FarField] slope=%.8f C=%.6f α=%.4g rms=%.2e", fit.slope, fit.C, fit.alpha, fit.rms)
    return fit


def kelvin_transform(profile: RadialProfile, total: float, s_grid: Sequence[float]) -> list[tuple[float, float]]:
    s = np.asarray(s_grid, dtype=float)
    if s.size == 0:
        return []
    if np.any(s <= 0):
        raise ConfigurationError("Kelvin grid must be positive")
    order = np.argsort(1.0 / s)
    nodes = resample(profile, (1.0 / s)[order])
    values = np.empty_like(s)
    values[order] = [v[1] for v in nodes]
    transformed = values - (total / TWO_PI) * np.log(s)
    return [(float(a), float(b)) for a, b in zip(s, transformed)]


def gradient_decay(profile: RadialProfile, window: Sequence[float]) -> float:
    """sup r·|u'| over the window."""
    lo, hi = float(window[0]), float(window[1])
    _, _, w_edge = _window_samples(profile, (lo, hi), n=2)
    inside = (profile.r >= lo) & (profile.r <= hi)
    return float(max(np.max(np.abs(w_edge)), np.max(np.abs(profile.w[inside]), initial=0.0)))


def loglog_ratio(profile: RadialProfile, p: float, radii: Sequence[float]) -> list[tuple[float, float]]:
    total = profile.lambda_hat
    if not math.isfinite(total):
        raise ConfigurationError("log-log ratio needs a profile with known total curvature")
    if abs(total / math.pi - (2.0 + p)) > ENDPOINT_BAND:
        raise ConfigurationError(
            f"log-log ratio applies near Λ=(2+p)π only, got Λ̂/π={total / math.pi:.6f}"
        )
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < math.e**2):
        raise ConfigurationError("log-log ratio needs radii >= e^2")
    nodes = resample(profile, radii)
    out = []
    for r, u, _ in nodes:
        log_r = math.log(r)
        out.append((r, (u + (1.0 + 0.5 * p) * log_r) / math.log(log_r)))
    return out


def is_monotone(profile: RadialProfile, tol: float = 1e-12) -> bool:
    steps = np.diff(profile.u)
    return bool(np.all(steps <= tol * (1.0 + np.abs(profile.u[1:]))))


def _window_ok(profile: RadialProfile) -> bool:
    total = profile.lambda_hat
    spec = profile.spec
    if not math.isfinite(total):
        return False
    if spec.kind is CurvatureKind.SIGN_CHANGING_POWER:
        return in_window(spec.p, total)
    if spec.kind is CurvatureKind.REGULARIZED_POWER:
        return 0.0 < total < LAMBDA_SPH
    return math.isclose(total, LAMBDA_SPH, rel_tol=1e-4)


def diagnose(profile: RadialProfile, settings: DiagnosticsConfig | None = None) -> DiagnosticsReport:
    settings = settings or DiagnosticsConfig()
    p = profile.spec.p
    fit = farfield_fit(profile, settings.fit_window)
    integrals = pohozaev_quantities(profile, fit)

    kind = profile.spec.kind
    if kind is CurvatureKind.SIGN_CHANGING_POWER:
        poho = pohozaev_residual(integrals, p)
        vol_res = volume_residual(integrals, p)
    elif kind is CurvatureKind.CONSTANT:
        # K = k0: Λ = k0·V
        poho = math.nan
        vol_res = (profile.spec.k0 * integrals.V_hat - integrals.Lambda_hat) / (1.0 + integrals.V_hat)
    else:
        poho = vol_res = math.nan

    s_max = 1.0 / settings.fit_window[0]
    s_grid = np.geomspace(1.0 / profile.r_last, s_max, settings.kelvin_points)
    kelvin = kelvin_transform(profile, profile.lambda_hat, s_grid)
    kelvin_values = np.array([v for _, v in kelvin])
    kelvin_sup = float(np.max(np.abs(kelvin_values)))

    loglog = None
    if (
        profile.spec.kind is CurvatureKind.SIGN_CHANGING_POWER
        and abs(profile.lambda_hat / math.pi - (2.0 + p)) <= ENDPOINT_BAND
    ):
        radii = [r for r in settings.loglog_radii if r <= profile.r_last]
        loglog = loglog_ratio(profile, p, radii) if radii else None

    report = DiagnosticsReport(
        pohozaev_residual=poho,
        volume_residual=vol_res,
        farfield=fit,
        gradient_bound=gradient_decay(profile, settings.gradient_window),
        kelvin_sup=kelvin_sup,
        loglog_ratio=loglog,
        monotone=is_monotone(profile),
        window_ok=_window_ok(profile),
        lambda_over_pi=over_pi(profile.lambda_hat),
        integrals=integrals,
    )
    logger.info(
        "[Diagnose] Λ̂=%.8fπ pohozaev=%.2e volume=%.2e slope=%.6f (−Λ̂/2π=%.6f)",
        report.lambda_over_pi, report.pohozaev_residual, report.volume_residual,
        fit.slope, -profile.lambda_hat / TWO_PI,
    )
    return report
