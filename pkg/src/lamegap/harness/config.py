"""Run configuration: strict YAML schema with line-numbered errors."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..elasticity import LameParameters
from ..geometry import GapGeometry, curvilinear_square_preset, power_profile_preset
from ..mesh import MeshParams

log = logging.getLogger(__name__)

DEFAULT_EPS = [4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3]


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryConfig(_Strict):
    preset: Literal["square", "power"] = "square"
    gamma: float = 0.5
    # curvilinear squares
    r1: float = 1.0
    r2: float = 1.0
    r0: float = 0.25
    # power profiles
    tau: float = 1.0
    sigma: float = 1.0
    R: float = 0.25

    @field_validator("gamma")
    @classmethod
    def _gamma_range(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError(
                f"gamma = {v} out of range: the profile exponent needs 0 < gamma < 1 "
                "(gamma = 1 is accepted as the smooth limit)"
            )
        if v == 1:
            log.warning("gamma = 1 lies outside 0 < gamma < 1; running the smooth-limit mode")
        return v

    def build(self, eps: float) -> GapGeometry:
        if self.preset == "square":
            return curvilinear_square_preset(self.r1, self.r2, self.gamma, eps, self.r0)
        return power_profile_preset(self.tau, self.gamma, self.sigma, eps, self.R)


class MaterialConfig(_Strict):
    lam: float = 1.0
    mu: float = 1.0

    def build(self) -> LameParameters:
        return LameParameters(self.lam, self.mu, 2)

    @model_validator(mode="after")
    def _elliptic(self) -> "MaterialConfig":
        self.build()
        return self


class MeshConfig(_Strict):
    n_layers: int = Field(8, ge=1)
    min_angle: float = 18.0
    h_far: float = 0.5
    h_incl: float = 0.1
    order: Literal[1, 2] = 2

    def build(self) -> MeshParams:
        return MeshParams(n_layers=self.n_layers, min_angle=self.min_angle,
                          h_far=self.h_far, h_incl=self.h_incl)


class OutputConfig(_Strict):
    directory: str = "results"
    stem: str = "report"
    formats: list[Literal["json", "csv", "markdown"]] = ["json", "csv", "markdown"]


class Tolerances(_Strict):
    constants_rel: float = 1e-6
    neck_ratio_abs: float = 1e-3
    neck_slope_rel: float = 0.01
    patch_abs: float = 1e-10
    rigid_energy: float = 1e-12
    order_rel: float = 0.10
    symmetry_rel: float = 1e-8
    energy_slope_rel: float = 0.05
    grad_slope_rel: float = 0.05
    regular_share_max: float = 0.10
    cross_translation_rel: float = 0.10
    cross_rotation_rel: float = 0.15
    cramer_rel: float = 1e-8
    aux_max: float = 0.2
    cutoff_abs: float = 1e-6
    dge3_rel: float = 1e-12
    structural_zero: float = 1e-3


class RunConfig(_Strict):
    geometry: GeometryConfig = GeometryConfig()
    material: MaterialConfig = MaterialConfig()
    phi: Literal["x1_x2", "x2_x1", "zero"] = "x1_x2"
    eps: list[float] = Field(default_factory=lambda: list(DEFAULT_EPS))
    mesh: MeshConfig = MeshConfig()
    probes: list[tuple[float, float]] = Field(default_factory=list)
    extrapolate: bool = True
    workers: int = Field(1, ge=1)
    output: OutputConfig = OutputConfig()
    tolerances: Tolerances = Tolerances()

    @field_validator("eps")
    @classmethod
    def _eps_decreasing(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("eps list is empty")
        for e in v:
            if not e > 0:
                raise ValueError(f"eps values must be > 0, got {e}")
        for a, b in zip(v, v[1:]):
            if not b < a:
                raise ValueError(f"eps list must be strictly decreasing; offending pair ({a}, {b})")
        return v

    @model_validator(mode="after")
    def _enough_points(self) -> "RunConfig":
        if self.extrapolate and len(self.eps) < 4:
            raise ValueError(f"extrapolation needs at least 4 eps values, got {len(self.eps)}")
        return self


def _line_of(root: yaml.Node, loc: tuple) -> Optional[int]:
    """1-based line of the YAML node addressed by a validation location."""
    node, line = root, None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt, line = v, k.start_mark.line + 1
                    break
            if nxt is None:
                return line
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def format_errors(exc: ValidationError, root: Optional[yaml.Node] = None) -> str:
    msgs = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        line = _line_of(root, loc) if root is not None else None
        where = ".".join(str(p) for p in loc) or "<root>"
        at = f" (line {line})" if line else ""
        msgs.append(f"{where}{at}: {err['msg']}")
    return "; ".join(msgs)


def validate(data: dict) -> RunConfig:
    """Validate a plain mapping, raising ConfigError with key paths."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_errors(exc)) from None


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: " + format_errors(exc, yaml.compose(text))) from None


def parse_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), str(p))
