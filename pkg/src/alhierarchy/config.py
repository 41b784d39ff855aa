"""Run configuration: pydantic models, JSON file loading and flag overrides."""

import json
import math
import os
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .hierarchy import PRESETS, FlowSpec
from .lattice import BoundaryMode, LatticeWindow, ProfileSpec
from .serialization import ComplexValue

OUTPUT_DIR_ENV_VAR = "AL_OUTPUT_DIR"


def _env_field(env_var: str, default: str) -> Any:
    return Field(default_factory=lambda: os.getenv(env_var, default))


class CommandName(str, Enum):
    EVOLVE = "evolve"
    HIERARCHY = "hierarchy"
    CHECK = "check"
    CLOSENESS = "closeness"
    ASYMPTOTICS = "asymptotics"
    SPECTRUM = "spectrum"
    SUPPORT = "support"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="strings")


class FlowConfig(_Section):
    """A named preset, or explicit orders with their summation constants."""

    preset: Optional[str] = "al_system"
    r: Optional[tuple[int, int]] = None
    c_plus: Optional[list[ComplexValue]] = None
    c_minus: Optional[list[ComplexValue]] = None
    phase_constant: ComplexValue = 1.0

    @model_validator(mode="after")
    def _check_choice(self) -> "FlowConfig":
        if self.r is None:
            if self.preset is None:
                raise ValueError("either a preset or r with c_plus and c_minus is required")
            if self.preset not in PRESETS:
                raise ValueError(f"unknown preset {self.preset!r}; known: {sorted(PRESETS)}")
            if self.c_plus is not None or self.c_minus is not None:
                raise ValueError("c_plus and c_minus need explicit orders r")
        elif self.c_plus is None or self.c_minus is None:
            raise ValueError("explicit r needs both c_plus and c_minus")
        return self

    def to_spec(self) -> FlowSpec:
        try:
            if self.r is not None:
                return FlowSpec(
                    r_minus=self.r[0],
                    r_plus=self.r[1],
                    c_plus=tuple(self.c_plus or ()),
                    c_minus=tuple(self.c_minus or ()),
                )
            if self.preset == "phase":
                return FlowSpec.phase(self.phase_constant)
            return FlowSpec.preset(self.preset or "al_system")
        except ValidationError as exc:
            raise ConfigError(
                "flow constants do not match the orders",
                details=[error["msg"] for error in exc.errors()],
            ) from exc


class WindowConfig(_Section):
    n_min: int = -100
    n_max: int = 100
    boundary: BoundaryMode = BoundaryMode.PAD_ZERO
    edge_band: Optional[int] = None

    def to_window(self, spec: FlowSpec) -> LatticeWindow:
        """Frozen band defaults to the stencil reach of ``spec`` plus one."""

        band = self.edge_band if self.edge_band is not None else spec.reach + 1
        return LatticeWindow(self.n_min, self.n_max, self.boundary, band)


class NumericsConfig(_Section):
    h: float = Field(default=1e-3, gt=0)
    t0: float = 0.0
    t1: float = 1.0
    stride: int = Field(default=10, ge=1)
    seed: int = 20240601
    h_list: list[float] = Field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])


class ExperimentConfig(_Section):
    p: float = math.inf
    weight_exponent: float = 1.0
    perturbation: float = 1e-3
    perturbation_site: int = 0
    exclude_edges: int = Field(default=20, ge=0)
    asymptotics_windows: list[int] = Field(default_factory=lambda: [201, 401])
    check_size: int = Field(default=64, ge=16)
    check_samples: int = Field(default=10, ge=1)

    @field_validator("p")
    @classmethod
    def _check_p(cls, value: float) -> float:
        if not value >= 1:
            raise ValueError("norm exponent must be >= 1")
        return value


class OutputConfig(_Section):
    out_dir: str = _env_field(OUTPUT_DIR_ENV_VAR, "al_output")
    format: Literal["csv", "json"] = "csv"

    @property
    def path(self) -> Path:
        return Path(self.out_dir)


class RunConfig(_Section):
    """Everything one ``al`` invocation needs; dumped verbatim into the run manifest."""

    command: CommandName = CommandName.EVOLVE
    flow: FlowConfig = Field(default_factory=FlowConfig)
    window: WindowConfig = Field(default_factory=WindowConfig)
    profile: ProfileSpec = Field(default_factory=ProfileSpec)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    log_level: str = "WARNING"

    def flow_spec(self) -> FlowSpec:
        return self.flow.to_spec()

    def lattice_window(self) -> LatticeWindow:
        return self.window.to_window(self.flow_spec())


def merge_overrides(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Recursively merge ``overrides`` into ``base``; ``None`` values are skipped."""

    merged: dict[str, Any] = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, Mapping):
            current = merged.get(key)
            merged[key] = merge_overrides(current if isinstance(current, Mapping) else {}, value)
        else:
            merged[key] = value
    return merged


def read_config_file(path: Path) -> dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
            details={"file": str(path), "line": exc.lineno, "column": exc.colno},
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    *,
    replace: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Resolve flags > file > defaults into a validated ``RunConfig``.

    Sections in ``replace`` substitute the file section wholesale instead of merging.
    """

    data = read_config_file(path) if path is not None else {}
    merged = merge_overrides(data, overrides or {})
    merged.update(replace or {})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        problems = [
            {"field": ".".join(str(part) for part in error["loc"]), "message": error["msg"]}
            for error in exc.errors()
        ]
        summary = "; ".join(f"{p['field']}: {p['message']}" for p in problems)
        raise ConfigError(f"invalid configuration: {summary}", details=problems) from exc


__all__ = [
    "OUTPUT_DIR_ENV_VAR",
    "CommandName",
    "ExperimentConfig",
    "FlowConfig",
    "NumericsConfig",
    "OutputConfig",
    "RunConfig",
    "WindowConfig",
    "load_config",
    "merge_overrides",
    "read_config_file",
]
