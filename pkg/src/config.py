from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from dotenv import load_dotenv

from src.solver.errors import ConfigurationError
from src.solver.integrator import IntegratorControls
from src.solver.shooting import SolverOptions

load_dotenv()

CONFIG_PATH = Path(__file__).parent.parent / "config.yaml"


@dataclass
class DiagnosticsConfig:
    fit_window: tuple[float, float] = (1e3, 1e6)
    gradient_window: tuple[float, float] = (1e3, 1e6)
    kelvin_points: int = 50
    loglog_radii: tuple[float, ...] = (1e3, 1e5, 1e7)


@dataclass
class BlowupConfig:
    R_eta: float = 10.0
    delta: float = 0.1
    n_grid: int = 201


@dataclass
class ContinuationConfig:
    schedule: tuple[float, ...] = (1.0, 0.3, 0.1, 0.03, 0.01)
    limit_tol: float = 0.1
    match_radius: float = 10.0
    n_grid: int = 201


@dataclass
class LoggingConfig:
    level: str = "INFO"
    file: str | None = None


@dataclass
class RadialConfig:
    integrator: IntegratorControls = field(default_factory=IntegratorControls)
    solver: SolverOptions = field(default_factory=SolverOptions)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    blowup: BlowupConfig = field(default_factory=BlowupConfig)
    continuation: ContinuationConfig = field(default_factory=ContinuationConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    workers: int = 1


def _section(cls, raw: dict, name: str, tuples: tuple[str, ...] = ()):
    data = dict(raw.get(name) or {})
    for key in tuples:
        if key in data:
            data[key] = tuple(float(v) for v in data[key])
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"config section '{name}': {exc}") from exc


def load_config(path: Path | None = None) -> RadialConfig:
    env_path = os.getenv("RADIAL_CONFIG", "").strip()
    path = path or (Path(env_path) if env_path else CONFIG_PATH)

    raw: dict = {}
    if path.exists():
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
    elif env_path:
        raise ConfigurationError(f"RADIAL_CONFIG points at a missing file: {path}")

    try:
        controls = IntegratorControls.from_dict(raw.get("integrator") or {})
        solver = SolverOptions(**(raw.get("solver") or {})).validate()
    except TypeError as exc:
        raise ConfigurationError(f"config: {exc}") from exc

    log_cfg = _section(LoggingConfig, raw, "logging")
    log_cfg.level = os.getenv("RADIAL_LOG_LEVEL", log_cfg.level).strip() or log_cfg.level

    workers = int(os.getenv("RADIAL_WORKERS", raw.get("workers", 1)))
    if workers < 0:
        raise ConfigurationError(f"workers must be >= 0, got {workers}")

    return RadialConfig(
        integrator=controls,
        solver=solver,
        diagnostics=_section(
            DiagnosticsConfig, raw, "diagnostics", ("fit_window", "gradient_window", "loglog_radii")
        ),
        blowup=_section(BlowupConfig, raw, "blowup"),
        continuation=_section(ContinuationConfig, raw, "continuation", ("schedule",)),
        logging=log_cfg,
        workers=workers,
    )
