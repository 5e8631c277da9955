"""Rigid-body dynamics of the platform and a fixed-step RK4 integrator.

Translational dynamics are written in the body frame::

    m (v_dot + w x v) = f_g + f_c
    J w_dot + w x J w = tau_c

with ``f_g = R_WB^T [0, 0, m g]`` (NED, gravity down-positive).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aerialdelta.errors import NonFiniteState
from aerialdelta.se3 import cross, is_rotation, orthonormalize, skew

MAX_DT = 0.01
GRAVITY = 9.81


@dataclass(frozen=True)
class RigidBodyState:
    p: np.ndarray  # position of the body origin, world frame [m]
    R: np.ndarray  # R_WB
    v: np.ndarray  # linear velocity, body frame [m/s]
    omega: np.ndarray  # angular velocity, body frame [rad/s]

    @classmethod
    def at_rest(cls, p=(0.0, 0.0, 0.0), R=None) -> "RigidBodyState":
        return cls(
            p=np.asarray(p, dtype=float).copy(),
            R=np.eye(3) if R is None else np.asarray(R, dtype=float).copy(),
            v=np.zeros(3),
            omega=np.zeros(3),
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in (self.p, self.R, self.v, self.omega))

    @property
    def v_world(self) -> np.ndarray:
        return self.R @ self.v


@dataclass(frozen=True)
class InertialParams:
    m: float = 2.0
    # Placeholder inertia; the arm contribution is lumped in.
    J: np.ndarray = field(default_factory=lambda: np.diag([0.02, 0.03, 0.04]))
    g: float = GRAVITY
    J_inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if not self.m > 0.0:
            raise ValueError("mass must be positive")
        if J.shape != (3, 3) or not np.allclose(J, J.T, atol=1e-12) or np.linalg.eigvalsh(J).min() <= 0.0:
            raise ValueError("inertia must be a symmetric positive-definite 3x3 matrix")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "J_inv", np.linalg.inv(J))

    def gravity_body(self, R) -> np.ndarray:
        """Gravity force expressed in the body frame."""
        return self.m * self.g * np.asarray(R)[2, :]


@dataclass(frozen=True)
class WrenchCommand:
    force: np.ndarray  # body frame [N]
    torque: np.ndarray  # body frame [N m]

    @classmethod
    def zero(cls) -> "WrenchCommand":
        return cls(np.zeros(3), np.zeros(3))

    def __add__(self, other: "WrenchCommand") -> "WrenchCommand":
        return WrenchCommand(self.force + other.force, self.torque + other.torque)


@dataclass(frozen=True)
class StateDerivative:
    p_dot: np.ndarray
    R_dot: np.ndarray
    v_dot: np.ndarray
    omega_dot: np.ndarray


def _rates(R, v, omega, params: InertialParams, force, torque):
    p_dot = R @ v
    R_dot = R @ skew(omega)
    v_dot = (params.gravity_body(R) + force) / params.m - cross(omega, v)
    omega_dot = params.J_inv @ (torque - cross(omega, params.J @ omega))
    return p_dot, R_dot, v_dot, omega_dot


def derivative(s: RigidBodyState, params: InertialParams, w: WrenchCommand) -> StateDerivative:
    return StateDerivative(*_rates(s.R, s.v, s.omega, params, w.force, w.torque))


def step(s: RigidBodyState, params: InertialParams, w: WrenchCommand, dt: float) -> RigidBodyState:
    """Advance one classical RK4 step with the wrench held constant."""
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must be in (0, {MAX_DT}], got {dt}")
    f, tau = w.force, w.torque
    y0 = (s.p, s.R, s.v, s.omega)

    def shifted(k, h):
        return tuple(a + h * b for a, b in zip(y0, k))

    # non-finite values are reported below rather than warned about
    with np.errstate(invalid="ignore", over="ignore"):
        k1 = _rates(*y0[1:], params, f, tau)
        k2 = _rates(*shifted(k1, 0.5 * dt)[1:], params, f, tau)
        k3 = _rates(*shifted(k2, 0.5 * dt)[1:], params, f, tau)
        k4 = _rates(*shifted(k3, dt)[1:], params, f, tau)
        p, R, v, omega = (
            a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y0, k1, k2, k3, k4)
        )
    if not np.all(np.isfinite(R)):
        raise NonFiniteState("rotation became non-finite")
    if not is_rotation(R, tol=1e-12):
        R = orthonormalize(R)
    out = RigidBodyState(p, R, v, omega)
    if not out.is_finite():
        raise NonFiniteState("integrated state is non-finite")
    return out
