from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from src import __version__
from src.analysis.blowup import CSV_FIELDS as BLOWUP_CSV_FIELDS
from src.analysis.blowup import blowup_sweep, check_trends
from src.analysis.continuation import run_continuation
from src.analysis.diagnostics import diagnose, kelvin_transform
from src.config import RadialConfig, load_config
from src.solver.errors import ConfigurationError, RangeError, SeriesRadiusError, SolverError
from src.solver.integrator import IntegratorControls, RadialProfile, bubble, integrate, resample
from src.solver.model import LAMBDA_SPH, CurvatureKind, CurvatureSpec, window
from src.solver.shooting import lambda_of_u0, solve_for_lambda, sweep
from src.utils import storage
from src.utils.logger import setup_logger

logger = logging.getLogger("radial_curvature")

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2

SWEEP_CSV_FIELDS = ("u0", "Lambda_hat", "Lambda_hat_over_pi", "status")
CONTINUE_CSV_FIELDS = ("lambda", "u0", "r_lambda", "ratio", "scale", "eta_lambda_total")


@dataclass
class RunConfig:
    subcommand: str
    p: float | None = None
    lambda_over_pi: float | None = None
    kind: str = "scp"
    lam: float = 1.0
    k0: float = 1.0
    u0: float | None = None
    u0_grid: list[float] = field(default_factory=list)
    targets_over_pi: list[float] = field(default_factory=list)
    schedule: list[float] = field(default_factory=list)
    controls: dict[str, Any] = field(default_factory=dict)
    fit_window: tuple[float, float] | None = None
    profile_path: str | None = None
    output: str | None = None
    profile_csv: str | None = None
    save_profile: str | None = None
    format: str = "json"
    kelvin_points: int = 50

    @property
    def target(self) -> float:
        if self.lambda_over_pi is None:
            raise ConfigurationError("--lambda-over-pi is required")
        return self.lambda_over_pi * math.pi

    def spec(self) -> CurvatureSpec:
        if self.kind == "constant":
            return CurvatureSpec.constant(self.k0)
        if self.p is None:
            raise ConfigurationError("--p is required")
        if self.kind == "regularized":
            return CurvatureSpec.regularized(self.p, self.lam)
        return CurvatureSpec.sign_changing(self.p)


# ── Argument parsing ──────────────────────────────────────────────────


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (default: config.yaml or $RADIAL_CONFIG)")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=int, help="process count for sweeps (0 = all cores)")
    common.add_argument("--rel-tol", type=float)
    common.add_argument("--abs-tol", type=float)
    common.add_argument("--r-start", type=float)
    common.add_argument("--r-max", type=float)
    common.add_argument("--max-step", type=float)
    common.add_argument("--stab-tol", type=float)

    curvature = argparse.ArgumentParser(add_help=False)
    curvature.add_argument("--p", type=float)
    curvature.add_argument("--kind", choices=("scp", "regularized", "constant"), default="scp")
    curvature.add_argument("--lam", type=float, default=1.0, help="regularization level λ")
    curvature.add_argument("--k0", type=float, default=1.0)

    parser = argparse.ArgumentParser(
        prog="radial-curvature",
        description="Radial solutions of -Δu = K e^{2u} on the plane",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    solve_p = sub.add_parser("solve", parents=[common, curvature], help="solve for a total curvature")
    solve_p.add_argument("--lambda-over-pi", type=float, required=True)
    solve_p.add_argument("--profile-csv")
    solve_p.add_argument("--save-profile", help="store the profile as JSON for later 'pohozaev'/'kelvin'")
    solve_p.add_argument("--fit-window", type=_float_list)

    shoot_p = sub.add_parser("shoot", parents=[common, curvature], help="integrate from one u(0)")
    shoot_p.add_argument("--u0", type=float, required=True)
    shoot_p.add_argument("--profile-csv")
    shoot_p.add_argument("--save-profile")

    sweep_p = sub.add_parser("sweep", parents=[common, curvature], help="Λ̂ over a u(0) grid")
    sweep_p.add_argument("--u0", type=_float_list, help="explicit grid, comma-separated")
    sweep_p.add_argument("--u0-min", type=float, default=1.0)
    sweep_p.add_argument("--u0-max", type=float, default=15.0)
    sweep_p.add_argument("--u0-count", type=int, default=29)

    poho_p = sub.add_parser("pohozaev", parents=[common], help="identities on a stored profile")
    poho_p.add_argument("--profile", required=True)
    poho_p.add_argument("--fit-window", type=_float_list)

    blow_p = sub.add_parser("blowup", parents=[common], help="rescaling as Λ→4π")
    blow_p.add_argument("--p", type=float, required=True)
    blow_p.add_argument("--targets-over-pi", type=_float_list, default=[3.9, 3.99, 3.999])

    cont_p = sub.add_parser("continue", parents=[common], help="λ↓0 regularized continuation")
    cont_p.add_argument("--p", type=float, required=True)
    cont_p.add_argument("--lambda-over-pi", type=float, required=True)
    cont_p.add_argument("--schedule", type=_float_list)

    kel_p = sub.add_parser("kelvin", parents=[common, curvature], help="Kelvin transform near s=0")
    kel_p.add_argument("--profile")
    kel_p.add_argument("--lambda-over-pi", type=float)
    kel_p.add_argument("--points", type=int, default=50)

    sub.add_parser("oracle", parents=[common], help="bubble oracle self-check")
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    controls = {
        name: getattr(args, name, None)
        for name in ("rel_tol", "abs_tol", "r_start", "r_max", "max_step", "stab_tol")
    }
    u0_grid = getattr(args, "u0", None) if args.subcommand == "sweep" else None
    if args.subcommand == "sweep" and not u0_grid:
        if args.u0_count < 1:
            raise ConfigurationError("--u0-count must be positive")
        u0_grid = np.linspace(args.u0_min, args.u0_max, args.u0_count).tolist()
    fit_window = getattr(args, "fit_window", None)
    if fit_window is not None and len(fit_window) != 2:
        raise ConfigurationError("--fit-window takes two radii")
    return RunConfig(
        subcommand=args.subcommand,
        p=getattr(args, "p", None),
        lambda_over_pi=getattr(args, "lambda_over_pi", None),
        kind=getattr(args, "kind", "scp"),
        lam=getattr(args, "lam", 1.0),
        k0=getattr(args, "k0", 1.0),
        u0=getattr(args, "u0", None) if args.subcommand == "shoot" else None,
        u0_grid=u0_grid or [],
        targets_over_pi=getattr(args, "targets_over_pi", None) or [],
        schedule=getattr(args, "schedule", None) or [],
        controls={k: v for k, v in controls.items() if v is not None},
        fit_window=tuple(fit_window) if fit_window else None,
        profile_path=getattr(args, "profile", None),
        output=args.output,
        profile_csv=getattr(args, "profile_csv", None),
        save_profile=getattr(args, "save_profile", None),
        format=args.format,
        kelvin_points=getattr(args, "points", 50),
    )


# ── Commands ──────────────────────────────────────────────────────────


def _check_target(spec: CurvatureSpec, target: float) -> None:
    if spec.kind is CurvatureKind.SIGN_CHANGING_POWER:
        win = window(spec.p)
        if not win.nonempty:
            raise ConfigurationError(f"no admissible total curvature for p={spec.p:g} >= 2")
        if not win.contains(target):
            raise ConfigurationError(
                f"target {target / math.pi:g}π outside ({win.lambda_star / math.pi:g}π, 4π)"
            )
    elif spec.kind is CurvatureKind.REGULARIZED_POWER:
        if not 0.0 < target < LAMBDA_SPH:
            raise ConfigurationError(f"target {target / math.pi:g}π outside (0, 4π)")
    else:
        raise ConfigurationError("Constant curvature has no target to solve for; use 'shoot'")


def _emit_profile(run: RunConfig, profile: RadialProfile) -> None:
    if run.profile_csv:
        storage.write_profile_csv(profile, run.profile_csv)
        logger.info("Profile CSV written to %s", run.profile_csv)
    if run.save_profile:
        storage.save_profile_json(profile, run.save_profile)
        logger.info("Profile JSON written to %s", run.save_profile)


def _diagnostics_settings(cfg: RadialConfig, run: RunConfig):
    if run.fit_window is None:
        return cfg.diagnostics
    return replace(cfg.diagnostics, fit_window=run.fit_window, gradient_window=run.fit_window)


def cmd_solve(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    spec = run.spec()
    target = run.target
    _check_target(spec, target)
    result = solve_for_lambda(spec, target, controls, cfg.solver)
    report = diagnose(result.profile, _diagnostics_settings(cfg, run))
    _emit_profile(run, result.profile)
    payload = {
        "spec": spec.to_dict(),
        "target": target,
        "target_over_pi": run.lambda_over_pi,
        "result": result.to_dict(),
        "diagnostics": report.to_dict(),
        "controls": controls.to_dict(),
    }
    return payload, None


def cmd_shoot(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    spec = run.spec()
    result = lambda_of_u0(spec, run.u0, controls)
    _emit_profile(run, result.profile)
    summary = result.to_dict()
    summary.update(r_last=result.profile.r_last, stop_reason=result.profile.stop_reason, nodes=len(result.profile))
    return {"spec": spec.to_dict(), "result": summary, "controls": controls.to_dict()}, None


def cmd_sweep(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    spec = run.spec()
    results = sweep(spec, run.u0_grid, controls, cfg.workers)
    rows = [r.to_dict() for r in results]
    return {"spec": spec.to_dict(), "results": rows}, rows


def cmd_pohozaev(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    profile = storage.load_profile_json(run.profile_path)
    report = diagnose(profile, _diagnostics_settings(cfg, run))
    return {
        "spec": profile.spec.to_dict(),
        "integrals": report.integrals.to_dict(),
        "diagnostics": report.to_dict(),
    }, None


def cmd_blowup(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    targets = [t * math.pi for t in run.targets_over_pi]
    diags = blowup_sweep(run.p, targets, controls, cfg.solver, cfg.workers, cfg.blowup)
    return {
        "p": run.p,
        "targets": targets,
        "diagnostics": [d.to_dict() for d in diags],
        "trends": check_trends(diags),
    }, [d.csv_row() for d in diags]


def cmd_continue(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    result = run_continuation(
        run.p, run.target, run.schedule or None, controls, cfg.solver, cfg.workers, cfg.continuation
    )
    return {"continuation": result.to_dict()}, result.csv_rows()


def cmd_kelvin(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    if run.profile_path:
        profile = storage.load_profile_json(run.profile_path)
    else:
        spec = run.spec()
        _check_target(spec, run.target)
        profile = solve_for_lambda(spec, run.target, controls, cfg.solver).profile
    total = profile.lambda_hat
    if not math.isfinite(total):
        raise ConfigurationError("Kelvin transform needs a converged profile")
    s_grid = np.geomspace(1.0 / profile.r_last, 1.0 / cfg.diagnostics.fit_window[0], run.kelvin_points)
    rows = kelvin_transform(profile, total, s_grid)
    return {
        "spec": profile.spec.to_dict(),
        "Lambda_hat": total,
        "kelvin": [{"s": s, "u_tilde": v} for s, v in rows],
    }, None


def cmd_oracle(run: RunConfig, cfg: RadialConfig, controls: IntegratorControls) -> tuple[dict, list | None]:
    spec = CurvatureSpec.constant(1.0)
    checks = []
    for u0 in (0.0, math.log(2.0), 3.0):
        profile = integrate(spec, u0, controls)
        inside = profile.r <= 100.0
        exact, _ = bubble(u0, profile.r[inside])
        error = float(np.max(np.abs(profile.u[inside] - exact)))
        lam_error = abs(profile.lambda_hat - LAMBDA_SPH) / LAMBDA_SPH
        checks.append({
            "u0": u0,
            "status": profile.status.value,
            "max_abs_error": error,
            "lambda_rel_error": lam_error,
            "passed": bool(error <= 1e-8 and lam_error <= 1e-4),
        })
    (_, u3, _), = resample(integrate(spec, math.log(2.0), controls), [3.0])
    resample_error = abs(u3 - math.log(0.2))
    checks.append({"resample_r3_error": resample_error, "passed": bool(resample_error <= 1e-6)})
    passed = all(c["passed"] for c in checks)
    logger.info("[Oracle] %s", "passed" if passed else "FAILED")
    return {"checks": checks, "passed": passed}, None


COMMANDS = {
    "solve": cmd_solve,
    "shoot": cmd_shoot,
    "sweep": cmd_sweep,
    "pohozaev": cmd_pohozaev,
    "blowup": cmd_blowup,
    "continue": cmd_continue,
    "kelvin": cmd_kelvin,
    "oracle": cmd_oracle,
}
CSV_FIELDS = {"sweep": SWEEP_CSV_FIELDS, "blowup": BLOWUP_CSV_FIELDS, "continue": CONTINUE_CSV_FIELDS}


# ── Entry point ───────────────────────────────────────────────────────


def _write(run: RunConfig, document: dict, rows: list | None) -> None:
    if run.format == "csv":
        if rows is None:
            raise ConfigurationError(f"'{run.subcommand}' has no CSV form")
        if run.output:
            storage.write_rows_csv(rows, CSV_FIELDS[run.subcommand], run.output)
        else:
            storage.write_rows_csv(rows, CSV_FIELDS[run.subcommand], sys.stdout)
        return
    text = storage.dumps(document)
    if run.output:
        Path(run.output).parent.mkdir(parents=True, exist_ok=True)
        Path(run.output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        cfg = load_config(Path(args.config) if args.config else None)
        if args.workers is not None:
            cfg.workers = args.workers
        level = args.log_level or cfg.logging.level
        setup_logger(level=level, log_file=cfg.logging.file)

        run_cfg = build_run_config(args)
        controls = cfg.integrator.with_overrides(**run_cfg.controls)
        payload, rows = COMMANDS[run_cfg.subcommand](run_cfg, cfg, controls)
        document = storage.result_document(run_cfg.subcommand, payload)
        _write(run_cfg, document, rows)
    except (ConfigurationError, RangeError, SeriesRadiusError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except SolverError as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER

    if run_cfg.subcommand == "oracle" and not document["passed"]:
        return EXIT_SOLVER
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
