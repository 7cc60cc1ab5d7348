"""CSV / JSON codecs for profiles and the versioned result document.

Floats are written with repr so a profile read back is bit-identical to the
one written. Non-finite values become JSON null.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import IO, Any, Iterable, Mapping, Sequence

import numpy as np

from src import __version__
from src.solver.errors import ConfigurationError
from src.solver.integrator import IntegratorControls, ProfileStatus, RadialProfile
from src.solver.model import CurvatureSpec

SCHEMA_VERSION = 1
PROFILE_CSV_FIELDS = ("r", "u", "w", "lam", "vol", "pw")
PROFILE_ARRAYS = ("r", "u", "w", "vol", "pw", "curv", "lam_ext")

REQUIRED_KEYS: dict[str, tuple[str, ...]] = {
    "solve": ("spec", "target", "result", "diagnostics"),
    "shoot": ("spec", "result"),
    "sweep": ("spec", "results"),
    "pohozaev": ("spec", "integrals", "diagnostics"),
    "blowup": ("p", "targets", "diagnostics", "trends"),
    "continue": ("continuation",),
    "kelvin": ("spec", "Lambda_hat", "kelvin"),
    "oracle": ("checks", "passed"),
}


# ── JSON helpers ──────────────────────────────────────────────────────


def _clean(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(document: Mapping[str, Any]) -> str:
    return json.dumps(_clean(document), indent=2, sort_keys=True, ensure_ascii=False)


def _floats(values: Iterable[Any]) -> np.ndarray:
    return np.array([math.nan if v is None else float(v) for v in values], dtype=float)


# ── Profiles ──────────────────────────────────────────────────────────


def profile_to_dict(profile: RadialProfile) -> dict[str, Any]:
    data: dict[str, Any] = {
        "version": __version__,
        "spec": profile.spec.to_dict(),
        "controls": profile.controls.to_dict(),
        "status": profile.status.value,
        "stop_reason": profile.stop_reason,
        "u0": profile.u0,
    }
    for name in PROFILE_ARRAYS:
        data[name] = getattr(profile, name).tolist()
    return data


def profile_from_dict(data: Mapping[str, Any]) -> RadialProfile:
    missing = [k for k in ("spec", "controls", "status", "u0", *PROFILE_ARRAYS) if k not in data]
    if missing:
        raise ConfigurationError(f"profile document lacks {', '.join(missing)}")
    return RadialProfile(
        spec=CurvatureSpec.from_dict(data["spec"]),
        u0=float(data["u0"]),
        status=ProfileStatus(data["status"]),
        controls=IntegratorControls.from_dict(data["controls"]),
        stop_reason=data.get("stop_reason", ""),
        **{name: _floats(data[name]) for name in PROFILE_ARRAYS},
    )


def save_profile_json(profile: RadialProfile, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(dumps(profile_to_dict(profile)), encoding="utf-8")


def load_profile_json(path: str | Path) -> RadialProfile:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"profile file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    # a full result document stores the profile under "profile"
    return profile_from_dict(data.get("profile", data))


def write_profile_csv(profile: RadialProfile, target: str | Path | IO[str]) -> None:
    rows = (
        dict(zip(PROFILE_CSV_FIELDS, values))
        for values in zip(profile.r, profile.u, profile.w, profile.lam, profile.vol, profile.pw)
    )
    write_rows_csv(rows, PROFILE_CSV_FIELDS, target)


def read_profile_csv(source: str | Path | IO[str]) -> dict[str, np.ndarray]:
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as f:
            return read_profile_csv(f)
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != PROFILE_CSV_FIELDS:
        raise ConfigurationError(f"unexpected profile CSV header {reader.fieldnames}")
    columns: dict[str, list[float]] = {name: [] for name in PROFILE_CSV_FIELDS}
    for row in reader:
        for name in PROFILE_CSV_FIELDS:
            columns[name].append(float(row[name]))
    return {name: np.array(values) for name, values in columns.items()}


def write_rows_csv(rows: Iterable[Mapping[str, Any]], fields: Sequence[str], target: str | Path | IO[str]) -> None:
    if isinstance(target, (str, Path)):
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="", encoding="utf-8") as f:
            write_rows_csv(rows, fields, f)
        return
    writer = csv.DictWriter(target, fieldnames=list(fields), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in row.items()})


# ── Result document ───────────────────────────────────────────────────


def result_document(command: str, payload: Mapping[str, Any]) -> dict[str, Any]:
    document = {"schema": SCHEMA_VERSION, "version": __version__, "command": command}
    document.update(payload)
    validate_result(document)
    return document


def validate_result(document: Mapping[str, Any]) -> None:
    if document.get("schema") != SCHEMA_VERSION:
        raise ConfigurationError(f"result schema must be {SCHEMA_VERSION}, got {document.get('schema')!r}")
    for key in ("version", "command"):
        if not isinstance(document.get(key), str):
            raise ConfigurationError(f"result document needs a string '{key}'")
    command = document["command"]
    if command not in REQUIRED_KEYS:
        raise ConfigurationError(f"unknown command '{command}' in result document")
    missing = [k for k in REQUIRED_KEYS[command] if k not in document]
    if missing:
        raise ConfigurationError(f"'{command}' result lacks {', '.join(missing)}")
