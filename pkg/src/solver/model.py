from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any

import numpy as np

from src.solver.errors import ConfigurationError

LAMBDA_SPH = 4.0 * math.pi


class CurvatureKind(str, Enum):
    SIGN_CHANGING_POWER = "SignChangingPower"
    REGULARIZED_POWER = "RegularizedPower"
    CONSTANT = "Constant"


@dataclass(frozen=True)
class CurvatureSpec:
    """Which curvature K(r) drives the radial equation -Δu = K e^{2u}."""

    kind: CurvatureKind
    p: float = 1.0
    lam: float = 1.0  # regularization level, RegularizedPower only
    k0: float = 1.0  # Constant only

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CurvatureKind(self.kind))
        if self.kind is not CurvatureKind.CONSTANT and not self.p > 0:
            raise ConfigurationError(f"{self.kind.value} requires p > 0, got {self.p}")
        if self.kind is CurvatureKind.REGULARIZED_POWER and not self.lam > 0:
            raise ConfigurationError(f"RegularizedPower requires lambda > 0, got {self.lam}")
        for name in ("p", "lam", "k0"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @classmethod
    def sign_changing(cls, p: float) -> CurvatureSpec:
        return cls(CurvatureKind.SIGN_CHANGING_POWER, p=p)

    @classmethod
    def regularized(cls, p: float, lam: float) -> CurvatureSpec:
        return cls(CurvatureKind.REGULARIZED_POWER, p=p, lam=lam)

    @classmethod
    def constant(cls, k0: float = 1.0) -> CurvatureSpec:
        return cls(CurvatureKind.CONSTANT, k0=k0)

    @property
    def has_power_term(self) -> bool:
        return self.kind is not CurvatureKind.CONSTANT

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind.value
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CurvatureSpec:
        return cls(
            kind=CurvatureKind(data["kind"]),
            p=float(data.get("p", 1.0)),
            lam=float(data.get("lam", 1.0)),
            k0=float(data.get("k0", 1.0)),
        )

    def describe(self) -> str:
        if self.kind is CurvatureKind.SIGN_CHANGING_POWER:
            return f"K=1-r^{self.p:g}"
        if self.kind is CurvatureKind.REGULARIZED_POWER:
            return f"K=({self.lam:g}-r^{self.p:g})e^(-r^2)"
        return f"K={self.k0:g}"


@dataclass(frozen=True)
class Window:
    lambda_star: float
    lambda_sph: float
    nonempty: bool

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lambda_star - tol < value < self.lambda_sph + tol


# ── Constants ─────────────────────────────────────────────────────────


def lambda_star(p: float) -> float:
    return (2.0 + p) * math.pi


def over_pi(value: float) -> float:
    return value / math.pi


def origin_height_bound(p: float, total: float | None = None) -> float:
    """Lower bound on u(0) for a solution with total curvature ``total``.

    Uses Λ ≤ π e^{2u(0)}, valid for radially decreasing solutions; with
    ``total`` omitted the bound is taken at Λ = (2+p)π, i.e. log √(p+2).
    """
    if total is None:
        total = lambda_star(p)
    return 0.5 * math.log(total / math.pi)


# ── Operations ────────────────────────────────────────────────────────


def eval_curvature(spec: CurvatureSpec, r: float | np.ndarray) -> float | np.ndarray:
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ConfigurationError("curvature is defined for r >= 0 only")

    if spec.kind is CurvatureKind.SIGN_CHANGING_POWER:
        value = 1.0 - r_arr**spec.p
    elif spec.kind is CurvatureKind.REGULARIZED_POWER:
        value = (spec.lam - r_arr**spec.p) * np.exp(-(r_arr**2))
    else:
        value = np.full_like(r_arr, spec.k0)

    if np.ndim(r) == 0:
        return float(value)
    return value


def window(p: float) -> Window:
    if not p > 0:
        raise ConfigurationError(f"p must be positive, got {p}")
    star = lambda_star(p)
    return Window(lambda_star=star, lambda_sph=LAMBDA_SPH, nonempty=p < 2.0)


def in_window(p: float, total: float) -> bool:
    return window(p).contains(total)


def sign_change_radius(spec: CurvatureSpec) -> float:
    if spec.kind is CurvatureKind.SIGN_CHANGING_POWER:
        return 1.0
    if spec.kind is CurvatureKind.REGULARIZED_POWER:
        return spec.lam ** (1.0 / spec.p)
    return math.inf


def admissible_floor(spec: CurvatureSpec) -> float:
    """Lowest total curvature a finite-curvature solution of ``spec`` can carry."""
    if spec.kind is CurvatureKind.SIGN_CHANGING_POWER:
        return lambda_star(spec.p)
    if spec.kind is CurvatureKind.REGULARIZED_POWER:
        return 0.0
    return -math.inf
