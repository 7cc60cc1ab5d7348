from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.laguerre import laggauss

from src.solver.model import CurvatureKind, CurvatureSpec

TWO_PI = 2.0 * math.pi

_LAGUERRE_NODES, _LAGUERRE_WEIGHTS = laggauss(40)
_FIXED_POINT_SWEEPS = 4


def power_tail(coef: float, radius: float, exponent: float) -> float:
    """2π·coef·∫_R^∞ s^{exponent-1} ds for a decaying power law (exponent < 0)."""
    if exponent >= 0:
        return math.inf
    return TWO_PI * coef * radius**exponent / (-exponent)


def _remaining_density(speed: np.ndarray, slope: np.ndarray, decay_p: np.ndarray, p: float) -> np.ndarray:
    """∫_t^∞ e^{2v - p s} ds along the orbit v'' = e^{2v} through the current state.

    The orbit is e^{2v} = a^2 / sinh^2(a(s - s0)) with limit slope -a; the
    substitution z = e^{-σ/(c+1)}, c = p/(2a), leaves a Gauss-Laguerre integral.
    """
    q = np.asarray(np.clip((speed - slope) / (speed + slope), 0.0, 1.0 - 1e-15))
    c1 = np.asarray(p / (2.0 * slope) + 1.0)
    inner = 1.0 / (1.0 - q[..., None] * np.exp(-_LAGUERRE_NODES / c1[..., None])) ** 2
    return 2.0 * slope * decay_p * q / c1 * (inner @ _LAGUERRE_WEIGHTS)


def far_field_total(spec: CurvatureSpec, t: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Total curvature predicted from the local state (t=log r, u, w=r·u') alone.

    For K = 1 - r^p the function v = u + (1+p/2)·t obeys v'' = e^{2v}(1 - r^{-p}).
    Along the orbit E = v'^2 - e^{2v} changes only through the r^{-p} term, and
    exactly E(∞) = E(t) + r^2 e^{2u} - p·∫_t^∞ e^{2v-ps} ds. The remaining
    integral is taken along the v'' = e^{2v} orbit, which also covers the
    log-log endpoint regime. The limit slope of v is -√E(∞). NaN where the
    state cannot reach a finite limit.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    lam = -TWO_PI * w

    if spec.kind is CurvatureKind.REGULARIZED_POWER:
        # e^{-r^2} damping: the tail is below double precision once r is a few units
        return lam

    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        density = np.exp(2.0 * t + 2.0 * u)  # r^2 e^{2u}

        if spec.kind is CurvatureKind.CONSTANT:
            decay = lam / math.pi - 2.0
            tail = np.where(decay > 0, TWO_PI * density / decay, np.nan)
            return lam + spec.k0 * tail

        p = spec.p
        half = 1.0 + 0.5 * p
        v_slope = w + half
        speed = -v_slope
        e2v = density * np.exp(p * t)
        decay_p = np.exp(-p * t)
        energy = v_slope**2 - e2v

        # pure power law start: the remaining integral is density / (2a + p)
        kappa = -2.0 * w - 2.0
        limit_energy = energy + density - p * np.where(kappa > 0, density / kappa, np.nan)
        for _ in range(_FIXED_POINT_SWEEPS):
            slope = np.sqrt(np.where(limit_energy > 0, limit_energy, np.nan))
            limit_energy = energy + density - p * _remaining_density(speed, slope, decay_p, p)

        total = TWO_PI * (half + np.sqrt(np.where(limit_energy >= 0, limit_energy, np.nan)))
        return np.where(speed > 0, total, np.nan)
