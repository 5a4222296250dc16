"""Config loading: .radarcs.toml < scene overrides < env vars < CLI flags."""

from __future__ import annotations

import os
import re
import tomllib
from collections.abc import Mapping
from pathlib import Path

from radarcs.errors import ConfigurationError, SceneIOError
from radarcs.models import RadarCsConfig, SolverBackend

_CONFIG_FILENAME = ".radarcs.toml"

_ENV_MAP: dict[str, str] = {
    "RADARCS_BUDGET": "budget_fraction",
    "RADARCS_SEED": "seed",
    "RADARCS_BLOCK": "block",
    "RADARCS_GRID": "grid",
    "RADARCS_EXACT_BUDGET": "exact_budget",
    "RADARCS_NOISE_SIGMA": "noise_sigma",
    "RADARCS_SOLVER": "solver_backend",
    "RADARCS_WORKERS": "workers",
    "RADARCS_MAX_ITERATIONS": "solver.max_iterations",
}

_INT_FIELDS = {"seed", "workers", "solver.max_iterations"}
_FLOAT_FIELDS = {"budget_fraction", "noise_sigma"}
_BOOL_FIELDS = {"exact_budget"}
_DIM_FIELDS = {"block", "grid"}
_NESTED = ("solver", "cfar", "timing")

_DIMS_RE = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")


def parse_dims(value: str) -> tuple[int, int]:
    """Parse "AxR" into a pair of positive ints."""
    match = _DIMS_RE.match(value)
    if match is None:
        raise ConfigurationError(f"expected dimensions like 8x37, got '{value}'")
    a, r = int(match.group(1)), int(match.group(2))
    if a <= 0 or r <= 0:
        raise ConfigurationError(f"dimensions must be positive, got '{value}'")
    return a, r


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ConfigurationError(f"expected a boolean, got '{value}'")


def _find_config_file() -> Path | None:
    path = Path.cwd()
    for parent in [path, *path.parents]:
        candidate = parent / _CONFIG_FILENAME
        if candidate.is_file():
            return candidate
    return None


def _load_toml(path: Path) -> dict[str, object]:
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as exc:
        raise SceneIOError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return data.get("radarcs", {})  # type: ignore[return-value]


def _load_env() -> dict[str, object]:
    overrides: dict[str, object] = {}
    for env_key, field_name in _ENV_MAP.items():
        value = os.environ.get(env_key)
        if value is None:
            continue
        if field_name in _INT_FIELDS:
            overrides[field_name] = int(value)
        elif field_name in _FLOAT_FIELDS:
            overrides[field_name] = float(value)
        elif field_name in _BOOL_FIELDS:
            overrides[field_name] = _parse_bool(value)
        else:
            overrides[field_name] = value
    return overrides


def _merge(merged: dict[str, object], layer: Mapping[str, object]) -> None:
    """Overlay one source; dotted keys and nested tables update sub-models."""
    for key, value in layer.items():
        head, _, tail = key.partition(".")
        if tail:
            nested = merged.setdefault(head, {})
            if isinstance(nested, dict):
                nested[tail] = value
        elif key in _NESTED and isinstance(value, Mapping):
            nested = merged.setdefault(key, {})
            if isinstance(nested, dict):
                nested.update(value)
        elif key in _DIM_FIELDS and isinstance(value, str):
            merged[key] = parse_dims(value)
        else:
            merged[key] = value


def load_config(
    config_path: Path | None = None,
    scene_overrides: Mapping[str, object] | None = None,
    budget: float | None = None,
    seed: int | None = None,
    grid: str | None = None,
    block: str | None = None,
    exact_budget: bool = False,
    workers: int | None = None,
    solver: str | None = None,
    noise_sigma: float | None = None,
) -> RadarCsConfig:
    """Load config with 4-layer precedence: toml < scene overrides < env < CLI flags."""
    merged: dict[str, object] = {}

    path = config_path if config_path is not None else _find_config_file()
    if path is not None:
        _merge(merged, _load_toml(path))

    if scene_overrides:
        _merge(merged, scene_overrides)

    _merge(merged, _load_env())

    flags: dict[str, object] = {}
    if budget is not None:
        flags["budget_fraction"] = budget
    if seed is not None:
        flags["seed"] = seed
    if grid is not None:
        flags["grid"] = grid
    if block is not None:
        flags["block"] = block
    if exact_budget:
        flags["exact_budget"] = True
    if workers is not None:
        flags["workers"] = workers
    if solver is not None:
        flags["solver_backend"] = SolverBackend(solver)
    if noise_sigma is not None:
        flags["noise_sigma"] = noise_sigma
    _merge(merged, flags)

    return RadarCsConfig(**merged)  # type: ignore[arg-type]


def _toml_value(value: object) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        if len(value) == 2 and all(isinstance(v, int) for v in value):
            return f'"{value[0]}x{value[1]}"'
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return f'"{value}"'


def config_to_toml(cfg: RadarCsConfig) -> str:
    """Serialize a RadarCsConfig to a TOML string that load_config reads back."""
    data = cfg.model_dump(mode="json")
    lines = ["[radarcs]"]
    for key, value in data.items():
        if key in _NESTED or value is None:
            continue
        lines.append(f"{key} = {_toml_value(value)}")
    for section in _NESTED:
        lines.append("")
        lines.append(f"[radarcs.{section}]")
        for key, value in data[section].items():
            if value is not None:
                lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"
