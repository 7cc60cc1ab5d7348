from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Callable

import numpy as np
from scipy.integrate import DOP853, cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline

from src.solver.errors import ConfigurationError, RangeError, SeriesRadiusError
from src.solver.farfield import TWO_PI, far_field_total
from src.solver.model import (
    CurvatureKind,
    CurvatureSpec,
    admissible_floor,
    eval_curvature,
    sign_change_radius,
)

logger = logging.getLogger("radial_curvature")

LN10 = math.log(10.0)

# step ceiling in t is STEP_SCALE·rel_tol^(1/6): the 8th-order global error then
# scales like rel_tol^(4/3)
STEP_SCALE = 2.0
STEP_EXPONENT = 1.0 / 6.0


class ProfileStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_RADIUS = "MaxRadius"
    DIVERGED = "Diverged"
    STEP_FAILURE = "StepFailure"
    GROWTH_GUARD = "GrowthGuard"


@dataclass(frozen=True)
class IntegratorControls:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r_start: float = 1e-3
    r_max: float = 1e8
    u_floor: float = -60.0
    stabilization_window: float = 1.0  # decades of r
    stab_tol: float = 1e-8
    max_step: float = 0.1  # in t = log r
    r_min_stop: float = 1e7
    growth_guard: bool = True

    def validate(self) -> IntegratorControls:
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.stab_tol > 0):
            raise ConfigurationError("tolerances must be positive")
        if not (0 < self.r_start < 1 < self.r_max):
            raise ConfigurationError(
                f"controls need 0 < r_start < 1 < r_max, got r_start={self.r_start}, r_max={self.r_max}"
            )
        if not self.stabilization_window > 0:
            raise ConfigurationError("stabilization_window must be positive")
        if not self.max_step > 0:
            raise ConfigurationError("max_step must be positive")
        if not (0 < self.r_min_stop <= self.r_max):
            raise ConfigurationError("r_min_stop must lie in (0, r_max]")
        return self

    @property
    def step_ceiling(self) -> float:
        return min(self.max_step, STEP_SCALE * self.rel_tol**STEP_EXPONENT)

    def with_overrides(self, **overrides: Any) -> IntegratorControls:
        known = {f.name for f in fields(self)}
        clean = {k: v for k, v in overrides.items() if k in known and v is not None}
        return replace(self, **clean).validate()

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> IntegratorControls:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known}).validate()


@dataclass(frozen=True)
class RadialProfile:
    """Immutable radial solution on an increasing grid r > 0.

    Arrays are node-aligned: ``w = r·u'``, ``vol``, ``pw`` and ``curv`` are the
    running integrals 2π∫e^{2u}s ds, 2π∫s^p e^{2u}s ds and 2π∫K e^{2u}s ds,
    ``lam_ext`` the tail-corrected total-curvature estimate at each node.
    """

    spec: CurvatureSpec
    u0: float
    status: ProfileStatus
    controls: IntegratorControls
    r: np.ndarray
    u: np.ndarray
    w: np.ndarray
    vol: np.ndarray
    pw: np.ndarray
    curv: np.ndarray
    lam_ext: np.ndarray
    stop_reason: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("r", "u", "w", "vol", "pw", "curv", "lam_ext"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "status", ProfileStatus(self.status))
        if self.r.size and np.any(np.diff(self.r) <= 0):
            raise ConfigurationError("profile radii must be strictly increasing")

    @property
    def t(self) -> np.ndarray:
        return np.log(self.r)

    @property
    def lam(self) -> np.ndarray:
        return -TWO_PI * self.w

    @property
    def converged(self) -> bool:
        return self.status is ProfileStatus.CONVERGED

    @property
    def lambda_hat(self) -> float:
        if not self.converged:
            return math.nan
        return float(self.lam_ext[-1])

    @property
    def r_first(self) -> float:
        return float(self.r[0])

    @property
    def r_last(self) -> float:
        return float(self.r[-1])

    def __len__(self) -> int:
        return int(self.r.size)

    @classmethod
    def from_arrays(
        cls,
        spec: CurvatureSpec,
        r: np.ndarray,
        u: np.ndarray,
        w: np.ndarray,
        lambda_hat: float = math.nan,
        status: ProfileStatus = ProfileStatus.CONVERGED,
        u0: float | None = None,
    ) -> RadialProfile:
        """Build a profile from sampled values, e.g. closed forms or synthetic data."""
        r = np.asarray(r, dtype=float)
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        density = TWO_PI * r * np.exp(2.0 * u)
        vol = cumulative_trapezoid(density, r, initial=0.0)
        pw = cumulative_trapezoid(density * r**spec.p, r, initial=0.0)
        curv = cumulative_trapezoid(density * eval_curvature(spec, r), r, initial=0.0)
        return cls(
            spec=spec,
            u0=float(u[0]) if u0 is None else float(u0),
            status=status,
            controls=IntegratorControls(),
            r=r,
            u=u,
            w=w,
            vol=vol,
            pw=pw,
            curv=curv,
            lam_ext=np.full_like(r, lambda_hat),
            stop_reason="synthetic",
        )


# ── Closed forms ──────────────────────────────────────────────────────


def bubble(u0: float, r: float | np.ndarray, k0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Radial constant-curvature solution with height u0 at the origin, and its w."""
    r = np.asarray(r, dtype=float)
    s = k0 * math.exp(2.0 * u0) * r**2 / 4.0
    return u0 - np.log1p(s), -2.0 * s / (1.0 + s)


# ── Series start ──────────────────────────────────────────────────────


def _series_remainder(spec: CurvatureSpec, u0: float, r0: float) -> float:
    k_scale = max(abs(float(eval_curvature(spec, 0.0))), 1.0)
    return (k_scale * math.exp(2.0 * u0) * r0**2) ** 2 / 16.0


def series_start(spec: CurvatureSpec, u0: float, r0: float, abs_tol: float = 1e-12) -> tuple[float, float]:
    """Two-term expansion u0 + a·r² + b·r^{2+p} at a small radius r0 and its w = r·u'."""
    if not r0 > 0:
        raise ConfigurationError(f"series radius must be positive, got {r0}")
    if _series_remainder(spec, u0, r0) > abs_tol:
        raise SeriesRadiusError(
            f"series radius {r0:g} too large for u0={u0:g} at abs_tol={abs_tol:g}"
        )

    e2u0 = math.exp(2.0 * u0)
    k_origin = float(eval_curvature(spec, 0.0))
    a = -k_origin * e2u0 / 4.0
    u = u0 + a * r0**2
    w = 2.0 * a * r0**2
    if spec.has_power_term:
        q = 2.0 + spec.p
        b = e2u0 / q**2
        u += b * r0**q
        w += q * b * r0**q
    return u, w


def safe_start_radius(spec: CurvatureSpec, u0: float, controls: IntegratorControls) -> float:
    k_scale = max(abs(float(eval_curvature(spec, 0.0))), 1.0)
    # remainder estimate equal to abs_tol / 4
    limit = (4.0 * math.sqrt(controls.abs_tol / 4.0) / (k_scale * math.exp(2.0 * u0))) ** 0.5
    return min(controls.r_start, limit)


# ── Right-hand side in t = log r ──────────────────────────────────────


def _make_rhs(spec: CurvatureSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    """State y = (u, w, vol, pw, curv) as functions of t."""
    p = spec.p
    exp = math.exp

    if spec.kind is CurvatureKind.SIGN_CHANGING_POWER:
        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            base = exp(2.0 * t + 2.0 * y[0])
            powered = exp((2.0 + p) * t + 2.0 * y[0])
            k_term = base - powered
            return np.array([y[1], -k_term, TWO_PI * base, TWO_PI * powered, TWO_PI * k_term])

    elif spec.kind is CurvatureKind.REGULARIZED_POWER:
        lam = spec.lam

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            base = exp(2.0 * t + 2.0 * y[0])
            powered = exp((2.0 + p) * t + 2.0 * y[0])
            damping = exp(-exp(2.0 * t))
            k_term = (lam * base - powered) * damping if damping > 0.0 else 0.0
            return np.array([y[1], -k_term, TWO_PI * base, TWO_PI * powered, TWO_PI * k_term])

    else:
        k0 = spec.k0

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            base = exp(2.0 * t + 2.0 * y[0])
            powered = exp((2.0 + p) * t + 2.0 * y[0])
            k_term = k0 * base
            return np.array([y[1], -k_term, TWO_PI * base, TWO_PI * powered, TWO_PI * k_term])

    return rhs


def _curvature_flux(spec: CurvatureSpec, r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """dw/dt = -r² K(r) e^{2u} at the given nodes."""
    with np.errstate(over="ignore", under="ignore"):
        return -np.asarray(eval_curvature(spec, r)) * np.exp(2.0 * np.log(r) + 2.0 * u)


# ── Integration ───────────────────────────────────────────────────────


def integrate(spec: CurvatureSpec, u0: float, controls: IntegratorControls | None = None) -> RadialProfile:
    controls = (controls or IntegratorControls()).validate()
    if not math.isfinite(u0):
        raise ConfigurationError(f"u0 must be finite, got {u0}")

    r0 = safe_start_radius(spec, u0, controls)
    u_start, w_start = series_start(spec, u0, r0, controls.abs_tol)

    # running integrals start at their leading-order values on [0, r0]
    e2u0 = math.exp(2.0 * u0)
    vol0 = math.pi * e2u0 * r0**2
    pw0 = TWO_PI * e2u0 * r0 ** (2.0 + spec.p) / (2.0 + spec.p)
    curv0 = -TWO_PI * w_start

    t0 = math.log(r0)
    y0 = np.array([u_start, w_start, vol0, pw0, curv0])
    solver = DOP853(
        _make_rhs(spec),
        t0,
        y0,
        math.log(controls.r_max),
        max_step=controls.step_ceiling,
        rtol=controls.rel_tol,
        atol=controls.abs_tol,
    )

    r_sc = sign_change_radius(spec)
    stab_radius = r_sc if math.isfinite(r_sc) else 1.0
    floor = admissible_floor(spec)
    window_dt = controls.stabilization_window * LN10
    guard = controls.growth_guard and spec.kind is CurvatureKind.REGULARIZED_POWER

    ts = [t0]
    ys = [y0]
    ext = [float(far_field_total(spec, t0, y0[0], y0[1]))]
    status = ProfileStatus.MAX_RADIUS
    reason = "reached r_max"

    while solver.status == "running":
        try:
            message = solver.step()
        except (OverflowError, FloatingPointError) as exc:
            status, reason = ProfileStatus.STEP_FAILURE, f"overflow: {exc}"
            break
        if solver.status == "failed":
            status, reason = ProfileStatus.STEP_FAILURE, str(message)
            break

        t, y = solver.t, solver.y.copy()
        if not np.all(np.isfinite(y)):
            status, reason = ProfileStatus.STEP_FAILURE, "non-finite state"
            break
        ts.append(t)
        ys.append(y)
        estimate = float(far_field_total(spec, t, y[0], y[1]))
        ext.append(estimate)

        r = math.exp(t)
        lam_here = -TWO_PI * y[1]

        if guard and y[0] > u0 + r * r:
            status, reason = ProfileStatus.GROWTH_GUARD, f"u exceeded u(0)+r^2 at r={r:.3g}"
            break

        if r > r_sc and lam_here <= floor:
            status = ProfileStatus.DIVERGED
            reason = f"cumulative curvature {lam_here:.6g} at r={r:.3g} fell to the admissible floor"
            break

        if _stabilized(ts, ext, t, window_dt, stab_radius, controls.stab_tol):
            if r >= controls.r_min_stop:
                status, reason = ProfileStatus.CONVERGED, f"stabilized at r={r:.3g}"
                break
            if y[0] < controls.u_floor:
                status, reason = ProfileStatus.CONVERGED, f"u below floor at r={r:.3g}"
                break

    data = np.array(ys)
    profile = RadialProfile(
        spec=spec,
        u0=u0,
        status=status,
        controls=controls,
        r=np.exp(np.array(ts)),
        u=data[:, 0],
        w=data[:, 1],
        vol=data[:, 2],
        pw=data[:, 3],
        curv=data[:, 4],
        lam_ext=np.array(ext),
        stop_reason=reason,
    )
    logger.debug(
        "integrate %s u0=%.6g: %s after %d nodes (%s)",
        spec.describe(), u0, status.value, len(profile), reason,
    )
    return profile


def _stabilized(
    ts: list[float],
    ext: list[float],
    t: float,
    window_dt: float,
    stab_radius: float,
    stab_tol: float,
) -> bool:
    t_back = t - window_dt
    if t_back < ts[0] or math.exp(t_back) < stab_radius:
        return False
    j = int(np.searchsorted(ts, t_back, side="right")) - 1
    current, earlier = ext[-1], ext[j]
    if not (math.isfinite(current) and math.isfinite(earlier)):
        return False
    return abs(current - earlier) < stab_tol


# ── Resampling ────────────────────────────────────────────────────────


def _monotone_slopes(x: np.ndarray, y: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Fritsch–Carlson limiting of given node slopes so monotone data stay monotone."""
    d = d.copy()
    delta = np.diff(y) / np.diff(x)
    for k, dk in enumerate(delta):
        if dk == 0.0:
            d[k] = d[k + 1] = 0.0
            continue
        a, b = d[k] / dk, d[k + 1] / dk
        if a < 0.0:
            d[k], a = 0.0, 0.0
        if b < 0.0:
            d[k + 1], b = 0.0, 0.0
        norm = a * a + b * b
        if norm > 9.0:
            tau = 3.0 / math.sqrt(norm)
            d[k] = tau * a * dk
            d[k + 1] = tau * b * dk
    return d


def _interpolants(profile: RadialProfile) -> tuple[CubicHermiteSpline, CubicHermiteSpline]:
    cached = profile._cache.get("splines")
    if cached is not None:
        return cached
    t = profile.t
    flux = _curvature_flux(profile.spec, profile.r, profile.u)
    u_spline = CubicHermiteSpline(t, profile.u, _monotone_slopes(t, profile.u, profile.w))
    w_spline = CubicHermiteSpline(t, profile.w, _monotone_slopes(t, profile.w, flux))
    profile._cache["splines"] = (u_spline, w_spline)
    return u_spline, w_spline


def resample(profile: RadialProfile, radii: list[float] | np.ndarray) -> list[tuple[float, float, float]]:
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        return []
    if len(profile) < 2:
        raise RangeError("profile has fewer than two nodes")
    slack = 1e-12
    if radii.min() < profile.r_first * (1 - slack) or radii.max() > profile.r_last * (1 + slack):
        raise RangeError(
            f"radii [{radii.min():.3g}, {radii.max():.3g}] outside profile "
            f"[{profile.r_first:.3g}, {profile.r_last:.3g}]"
        )

    u_spline, w_spline = _interpolants(profile)
    x = np.clip(np.log(radii), profile.t[0], profile.t[-1])
    u = u_spline(x)
    w = w_spline(x)

    idx = np.clip(np.searchsorted(profile.r, radii), 0, len(profile) - 1)
    exact = profile.r[idx] == radii
    u[exact] = profile.u[idx[exact]]
    w[exact] = profile.w[idx[exact]]
    return [(float(r), float(a), float(b)) for r, a, b in zip(radii, u, w)]


def sample_profile(profile: RadialProfile, radii: list[float] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """u and w on radii in [0, r_last]; below the first node the series start is used."""
    radii = np.asarray(radii, dtype=float)
    u = np.empty_like(radii)
    w = np.empty_like(radii)
    inner = radii < profile.r_first
    for i in np.flatnonzero(inner):
        if radii[i] <= 0.0:
            u[i], w[i] = profile.u0, 0.0
        else:
            u[i], w[i] = series_start(profile.spec, profile.u0, float(radii[i]), abs_tol=math.inf)
    outer = ~inner
    if outer.any():
        nodes = resample(profile, radii[outer])
        u[outer] = [n[1] for n in nodes]
        w[outer] = [n[2] for n in nodes]
    return u, w
