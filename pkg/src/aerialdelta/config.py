"""Scenario configuration: a TOML file validated against pydantic models.

Unknown keys are rejected. Validation failures raise
:class:`~aerialdelta.errors.ConfigError` listing each offending field path.
See ``docs/config.md`` for the annotated schema.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from aerialdelta import stiffness as stiff
from aerialdelta.allocation import PlatformGeometry
from aerialdelta.controller import ControllerGains
from aerialdelta.coupling import MountTransform
from aerialdelta.delta import DeltaGeometry
from aerialdelta.dynamics import InertialParams
from aerialdelta.errors import ConfigError
from aerialdelta.interaction import ContactSurface, FoldThresholds

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

Vec3 = tuple[float, float, float]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Rates(_Section):
    physics_dt: float = Field(1e-3, gt=0.0, le=0.01)
    controller_hz: float = Field(500.0, gt=0.0)
    arm_hz: float = Field(100.0, gt=0.0)

    def divider(self, hz: float, name: str) -> int:
        n = 1.0 / (hz * self.physics_dt)
        if n < 1.0 - 1e-9 or abs(n - round(n)) > 1e-6:
            raise ConfigError(f"rates.{name}: {hz} Hz is not an integer divisor of the physics rate")
        return int(round(n))

    @model_validator(mode="after")
    def _check(self):
        self.divider(self.controller_hz, "controller_hz")
        self.divider(self.arm_hz, "arm_hz")
        return self


class Inertial(_Section):
    mass: float = Field(2.0, gt=0.0)
    inertia: list = Field(default_factory=lambda: [0.02, 0.03, 0.04],
                          description="diagonal [Jxx, Jyy, Jzz] or a full 3x3 matrix")
    gravity: float = Field(9.81, gt=0.0)

    @field_validator("inertia")
    @classmethod
    def _inertia(cls, v):
        J = np.diag(v) if np.ndim(v) == 1 else np.asarray(v, dtype=float)
        if J.shape != (3, 3) or not np.allclose(J, J.T) or np.linalg.eigvalsh(J).min() <= 0.0:
            raise ValueError("inertia must be symmetric positive definite")
        return v

    def build(self) -> InertialParams:
        J = np.diag(self.inertia) if np.ndim(self.inertia) == 1 else np.asarray(self.inertia, dtype=float)
        return InertialParams(self.mass, J, self.gravity)


class Gains(_Section):
    K_p: Vec3 = (8.0, 8.0, 8.0)
    D_p: Vec3 = (5.0, 5.0, 5.0)
    K_R: Vec3 = (4.0, 4.0, 1.5)
    D_w: Vec3 = (0.6, 0.6, 0.3)
    eps_force: float = Field(1e-6, gt=0.0)

    @field_validator("K_p", "D_p", "K_R", "D_w")
    @classmethod
    def _positive(cls, v):
        if any(not x > 0.0 for x in v):
            raise ValueError("gain entries must be positive")
        return v

    def build(self) -> ControllerGains:
        return ControllerGains.from_diagonals(self.K_p, self.D_p, self.K_R, self.D_w)


class Platform(_Section):
    l1: float = Field(0.2, gt=0.0)
    l2: float = Field(0.35, gt=0.0)
    k_d: float = 0.02
    k_f: float = Field(8.1e-6, gt=0.0)
    k_f_rear: float = Field(4.05e-6, gt=0.0)
    omega_max: float = Field(1143.0, gt=0.0)
    actuator_lag: float = Field(0.0, ge=0.0, description="first-order time constant [s], 0 disables")

    def build(self) -> PlatformGeometry:
        return PlatformGeometry(self.l1, self.l2, self.k_d, self.k_f, self.k_f_rear, self.omega_max)


class Delta(_Section):
    l_p: float = Field(0.06, gt=0.0)
    l_m: float = Field(0.12, gt=0.0)
    l_e: float = Field(0.01, gt=0.0)
    r_D: float = Field(0.05, gt=0.0)
    r_E: float = Field(0.025, gt=0.0)
    theta_min_deg: float = -90.0
    theta_max_deg: float = 90.0

    @model_validator(mode="after")
    def _check(self):
        if self.r_D <= self.r_E:
            raise ValueError("r_D must exceed r_E")
        if self.theta_min_deg >= self.theta_max_deg:
            raise ValueError("theta_min_deg must be below theta_max_deg")
        return self

    def build(self) -> DeltaGeometry:
        return DeltaGeometry(self.l_p, self.l_m, self.l_e, self.r_D, self.r_E,
                             math.radians(self.theta_min_deg), math.radians(self.theta_max_deg))


class Mount(_Section):
    R_DB: tuple[Vec3, Vec3, Vec3] = ((0.0, 0.0, 1.0), (0.0, -1.0, 0.0), (1.0, 0.0, 0.0))
    p_BD: Vec3 = (0.15, 0.0, 0.0)

    @field_validator("R_DB")
    @classmethod
    def _rotation(cls, v):
        R = np.asarray(v, dtype=float)
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("R_DB must be a rotation matrix")
        return v

    def build(self) -> MountTransform:
        return MountTransform(np.asarray(self.R_DB, dtype=float), np.asarray(self.p_BD, dtype=float))


class Stiffness(_Section):
    coefficients: Optional[Vec3] = None
    z_range: Optional[tuple[float, float]] = None
    samples_csv: Optional[str] = Field(None, description="CSV with z, delta_z, F_z; relative to the config file")

    @model_validator(mode="after")
    def _check(self):
        if (self.coefficients is None) != (self.z_range is None):
            raise ValueError("coefficients and z_range go together")
        if self.coefficients is not None and self.samples_csv is not None:
            raise ValueError("give either coefficients or samples_csv, not both")
        return self

    def build(self, base_dir: Path | None = None) -> stiff.StiffnessModel:
        if self.coefficients is not None:
            return stiff.StiffnessModel(*self.coefficients, *self.z_range)
        if self.samples_csv is not None:
            path = Path(self.samples_csv)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            with open(path, newline="") as fh:
                return stiff.fit_samples(stiff.read_samples_csv(fh)).model
        return stiff.default_model()


class Initial(_Section):
    position: Vec3 = (0.0, 0.0, -1.0)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    roll_deg: float = 0.0
    pitch_deg: float = 0.0
    yaw_deg: float = 0.0
    omega: Vec3 = (0.0, 0.0, 0.0)


class Waypoint(_Section):
    position: Vec3
    hold: float = Field(gt=0.0)
    pitch_deg: float = 0.0
    yaw_deg: float = 0.0


class Reference(_Section):
    kind: Literal["hover", "step", "sinusoid", "waypoints"] = "hover"
    position: Vec3 = (0.0, 0.0, -1.0)
    pitch_deg: float = Field(0.0, gt=-90.0, lt=90.0)
    yaw_deg: float = 0.0
    step: Vec3 = (0.0, 0.0, 0.0)
    step_time: float = Field(0.0, ge=0.0)
    amplitude: Vec3 = (0.0, 0.0, 0.0)
    frequency: float = Field(0.0, ge=0.0)
    waypoints: list[Waypoint] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "waypoints" and not self.waypoints:
            raise ValueError("waypoints reference needs at least one waypoint")
        return self


class Arm(_Section):
    enabled: bool = True
    target: Vec3 = (0.0, 0.0, 0.14)
    compensation: bool = True
    servo_time_constant: float = Field(0.02, ge=0.0)
    servo_rate_limit: float = Field(10.0, gt=0.0, description="[rad/s]")


class Disturbance(_Section):
    amplitude: Vec3 = (0.0, 0.0, 0.0)  # world-frame force amplitude [N]
    frequency: float = Field(0.5, ge=0.0)
    random_phase: bool = True
    noise_std: float = Field(0.0, ge=0.0)


class StiffnessSchedule(_Section):
    kind: Literal["constant", "ramp"] = "constant"
    z_start: float = Field(0.14, gt=0.0)
    z_end: float = Field(0.14, gt=0.0)
    t_start: float = Field(0.0, ge=0.0)
    t_end: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "ramp" and self.t_end <= self.t_start:
            raise ValueError("ramp needs t_end > t_start")
        return self

    def height(self, t: float) -> float:
        if self.kind == "constant" or t <= self.t_start:
            return self.z_start
        if t >= self.t_end:
            return self.z_end
        s = (t - self.t_start) / (self.t_end - self.t_start)
        return self.z_start + s * (self.z_end - self.z_start)


class Contact(_Section):
    surface_point: Vec3
    surface_normal: Vec3
    f_knee: float = Field(4.0, gt=0.0)
    f_ankle: float = Field(2.0, gt=0.0)
    k_cross: float = Field(185.0, gt=0.0)
    no_fold_band: float = Field(0.0, ge=0.0)
    stiffness_schedule: StiffnessSchedule = Field(default_factory=StiffnessSchedule)
    push_velocity: float = Field(0.0, ge=0.0, description="base reference speed into the surface [m/s]")
    push_start: float = Field(0.0, ge=0.0)

    @field_validator("surface_normal")
    @classmethod
    def _unit(cls, v):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError("surface_normal must be a unit vector")
        return v

    def surface(self) -> ContactSurface:
        return ContactSurface(np.asarray(self.surface_point, float), np.asarray(self.surface_normal, float))

    def thresholds(self) -> FoldThresholds:
        return FoldThresholds(self.f_knee, self.f_ankle, self.k_cross, self.no_fold_band)


class Log(_Section):
    decimate: int = Field(1, ge=1)


class Metrics(_Section):
    start_time: float = Field(0.0, ge=0.0, description="end-effector error statistics ignore t < start_time")


class Axis(_Section):
    min: float
    max: float
    count: int = Field(ge=1)

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


class Workspace(_Section):
    x: Axis = Axis(min=-0.08, max=0.08, count=33)
    y: Axis = Axis(min=-0.08, max=0.08, count=33)
    z: Axis = Axis(min=0.06, max=0.20, count=15)


class ScenarioConfig(_Section):
    name: str = "scenario"
    seed: int = 0
    duration: float = Field(10.0, gt=0.0)
    rates: Rates = Field(default_factory=Rates)
    inertial: Inertial = Field(default_factory=Inertial)
    gains: Gains = Field(default_factory=Gains)
    platform: Platform = Field(default_factory=Platform)
    delta: Delta = Field(default_factory=Delta)
    mount: Mount = Field(default_factory=Mount)
    stiffness: Stiffness = Field(default_factory=Stiffness)
    initial: Initial = Field(default_factory=Initial)
    reference: Reference = Field(default_factory=Reference)
    arm: Arm = Field(default_factory=Arm)
    disturbance: Disturbance = Field(default_factory=Disturbance)
    contact: Optional[Contact] = None
    log: Log = Field(default_factory=Log)
    metrics: Metrics = Field(default_factory=Metrics)
    workspace: Workspace = Field(default_factory=Workspace)

    # resolved relative to this directory; not part of the file schema
    base_dir: Optional[str] = Field(None, exclude=True)

    def with_updates(self, **sections) -> "ScenarioConfig":
        """Copy with whole sections or nested fields replaced, re-validated."""
        data = self.model_dump()
        for key, value in sections.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value
        data["base_dir"] = self.base_dir
        return validate_config(data)


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def validate_config(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if "base_dir" in data:
        raise ConfigError("base_dir: extra inputs are not permitted")
    data["base_dir"] = str(path.resolve().parent)
    return validate_config(data)


def builtin_scenario(name: str) -> ScenarioConfig:
    """One of the scenarios shipped in ``aerialdelta/scenarios``."""
    from importlib import resources

    ref = resources.files("aerialdelta.scenarios").joinpath(f"{name}.toml")
    if not ref.is_file():
        raise ConfigError(f"no built-in scenario named {name!r}")
    with resources.as_file(ref) as p:
        return load_config(p)
