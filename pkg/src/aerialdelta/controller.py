"""Cascaded geometric pose controller for the tiltrotor.

The outer loop is a PD law on body-frame position and velocity errors that
returns a body-frame force command. Because body-y force cannot be produced,
the inner attitude loop tracks a desired rotation that keeps the reference
heading (pitch and yaw) and uses roll to realise the lateral force.

Sign conventions (NED, thrust along -z_B):

* the desired thrust axis is ``z_d = -R_WB fbar / |R_WB fbar|`` so that a
  level hover command maps to ``R_d = I``;
* attitude errors point from the current toward the desired attitude so
  that the positive gains ``K_R`` and ``D_w`` are stabilising.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aerialdelta.dynamics import InertialParams, RigidBodyState, WrenchCommand
from aerialdelta.errors import DegenerateForce, SingularCross
from aerialdelta.se3 import cross, skew, vee

EPS_FORCE = 1e-6
EPS_CROSS = 1e-9


def _diag(values) -> np.ndarray:
    d = np.asarray(values, dtype=float)
    if d.shape == ():
        d = np.full(3, float(d))
    if d.shape != (3,) or np.any(d <= 0.0):
        raise ValueError(f"gain diagonal must hold three positive entries, got {values!r}")
    return np.diag(d)


@dataclass(frozen=True)
class ControllerGains:
    K_p: np.ndarray = field(default_factory=lambda: _diag(8.0))
    D_p: np.ndarray = field(default_factory=lambda: _diag(5.0))
    K_R: np.ndarray = field(default_factory=lambda: _diag([4.0, 4.0, 1.5]))
    D_w: np.ndarray = field(default_factory=lambda: _diag([0.6, 0.6, 0.3]))

    @classmethod
    def from_diagonals(cls, K_p, D_p, K_R, D_w) -> "ControllerGains":
        return cls(_diag(K_p), _diag(D_p), _diag(K_R), _diag(D_w))


@dataclass(frozen=True)
class PoseReference:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world [m]
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world [m/s]
    a: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world [m/s^2]
    R: np.ndarray = field(default_factory=lambda: np.eye(3))  # R_WB^ref
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world [rad/s]
    omega_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world [rad/s^2]

    @property
    def heading(self) -> np.ndarray:
        """Reference body x-axis in the world frame."""
        return self.R[:, 0]


def position_errors(s: RigidBodyState, r: PoseReference) -> tuple[np.ndarray, np.ndarray]:
    R_BW = s.R.T
    return R_BW @ (r.p - s.p), R_BW @ r.v - s.v


def force_command(e_p, e_v, s: RigidBodyState, r: PoseReference, params: InertialParams,
                  gains: ControllerGains) -> np.ndarray:
    return (
        gains.K_p @ e_p
        + gains.D_p @ e_v
        - params.gravity_body(s.R)
        + params.m * (s.R.T @ r.a + cross(s.omega, s.v))
    )


def desired_rotation(f_c, s: RigidBodyState, r: PoseReference, eps_f: float = EPS_FORCE) -> np.ndarray:
    fbar = np.array([0.0, f_c[1], f_c[2]])
    fbar_w = s.R @ fbar
    n = np.linalg.norm(fbar_w)
    if n <= eps_f:
        raise DegenerateForce(f"|fbar_c| = {n:.3e} N is below {eps_f:g} N")
    z_d = -fbar_w / n
    x_ref = r.heading
    y_d = cross(z_d, x_ref)
    ny = np.linalg.norm(y_d)
    if ny < EPS_CROSS:
        raise SingularCross("thrust axis is parallel to the reference heading")
    y_d /= ny
    z_col = cross(x_ref, y_d)
    return np.column_stack((x_ref, y_d, z_col / np.linalg.norm(z_col)))


def body_rate_target(s: RigidBodyState, r: PoseReference) -> np.ndarray:
    """Reference angular rate brought into the body frame."""
    return s.R.T @ r.omega


def attitude_errors(s: RigidBodyState, R_d, r: PoseReference) -> tuple[np.ndarray, np.ndarray]:
    R = s.R
    e_R = 0.5 * vee(R.T @ R_d - R_d.T @ R)
    e_w = body_rate_target(s, r) - s.omega
    return e_R, e_w


def torque_command(e_R, e_w, s: RigidBodyState, R_d, r: PoseReference, params: InertialParams,
                   gains: ControllerGains) -> np.ndarray:
    J, w = params.J, s.omega
    # reference rates expressed in the desired frame, then mapped by R^T R_d
    RtRd = s.R.T @ R_d
    w_ref_d = R_d.T @ r.omega
    wdot_ref_d = R_d.T @ r.omega_dot
    return (
        gains.K_R @ e_R
        + gains.D_w @ e_w
        + cross(w, J @ w)
        - J @ (skew(w) @ RtRd @ w_ref_d - RtRd @ wdot_ref_d)
    )


@dataclass
class ControlOutput:
    wrench: WrenchCommand
    R_d: np.ndarray
    e_p: np.ndarray
    e_v: np.ndarray
    e_R: np.ndarray
    e_w: np.ndarray
    degenerate: str | None = None


class PoseController:
    """Stateful wrapper holding the last valid desired rotation.

    When the lateral/vertical force command vanishes or aligns with the
    heading, the previous ``R_d`` is reused so the attitude target never
    jumps.
    """

    def __init__(self, params: InertialParams, gains: ControllerGains | None = None,
                 eps_f: float = EPS_FORCE):
        self.params = params
        self.gains = gains or ControllerGains()
        self.eps_f = eps_f
        self._R_d_prev: np.ndarray | None = None

    def reset(self):
        self._R_d_prev = None

    def __call__(self, s: RigidBodyState, r: PoseReference) -> ControlOutput:
        e_p, e_v = position_errors(s, r)
        f_c = force_command(e_p, e_v, s, r, self.params, self.gains)
        degenerate = None
        try:
            R_d = desired_rotation(f_c, s, r, self.eps_f)
        except (DegenerateForce, SingularCross) as exc:
            degenerate = exc.code
            R_d = r.R if self._R_d_prev is None else self._R_d_prev
        self._R_d_prev = R_d
        e_R, e_w = attitude_errors(s, R_d, r)
        tau_c = torque_command(e_R, e_w, s, R_d, r, self.params, self.gains)
        return ControlOutput(WrenchCommand(f_c, tau_c), R_d, e_p, e_v, e_R, e_w, degenerate)
