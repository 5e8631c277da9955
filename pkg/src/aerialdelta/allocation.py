"""Actuator allocation for the tri-tiltrotor.

The actuator vector is::

    u = [T12 sin(a1), T12 cos(a1), T34 sin(a0), T34 cos(a0), T5]

and the square matrix ``A`` maps it to the reduced wrench
``[F_x, F_z, M_x, M_y, M_z]``. Body-y force is not producible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from aerialdelta.dynamics import GRAVITY, WrenchCommand
from aerialdelta.se3 import LinearSolver5

ZERO_THRUST_TOL = 1e-12


@dataclass(frozen=True)
class PlatformGeometry:
    l1: float = 0.2  # front rotor groups to body origin [m]
    l2: float = 0.35  # tail rotor to body origin [m]
    k_d: float = 0.02  # rear-rotor drag moment per unit thrust [m]
    k_f: float = 8.1e-6  # main rotor thrust coefficient [N s^2]
    k_f_rear: float = 4.05e-6  # rear rotor thrust coefficient [N s^2]
    omega_max: float = 1143.0  # [rad/s]

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise ValueError("arm lengths l1, l2 must be positive")
        if not (self.k_f > 0 and self.k_f_rear > 0 and self.omega_max > 0):
            raise ValueError("thrust coefficients and omega_max must be positive")

    @cached_property
    def matrix(self) -> np.ndarray:
        return allocation_matrix(self)

    @cached_property
    def solver(self) -> LinearSolver5:
        return LinearSolver5(self.matrix)


@dataclass(frozen=True)
class ActuatorCommand:
    T12: float
    T34: float
    T5: float
    alpha0: float
    alpha1: float
    omega: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    saturated: bool = False

    def u(self) -> np.ndarray:
        return np.array([
            self.T12 * math.sin(self.alpha1),
            self.T12 * math.cos(self.alpha1),
            self.T34 * math.sin(self.alpha0),
            self.T34 * math.cos(self.alpha0),
            self.T5,
        ])


def allocation_matrix(geom: PlatformGeometry) -> np.ndarray:
    l1, l2, kd = geom.l1, geom.l2, geom.k_d
    return np.array([
        [1.0, 0.0, -1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, -1.0, -1.0],
        [0.0, l1, 0.0, -l1, 0.0],
        [0.0, 0.0, 0.0, 0.0, -l2],
        [l1, 0.0, l1, 0.0, -kd],
    ])


def reduced_wrench(w: WrenchCommand) -> np.ndarray:
    """Drop the body-y force: ``[F_x, F_z, M_x, M_y, M_z]``."""
    f, tau = w.force, w.torque
    return np.array([f[0], f[2], tau[0], tau[1], tau[2]])


def _angle(s: float, c: float) -> float:
    if abs(s) < ZERO_THRUST_TOL and abs(c) < ZERO_THRUST_TOL:
        return 0.0
    return math.atan2(s, c)


def command_from_u(u, geom: PlatformGeometry) -> ActuatorCommand:
    u0, u1, u2, u3, u4 = (float(x) for x in u)
    cmd = ActuatorCommand(
        T12=math.hypot(u0, u1),
        T34=math.hypot(u2, u3),
        T5=u4 + 0.0,  # no signed zero
        alpha0=_angle(u2, u3),
        alpha1=_angle(u0, u1),
    )
    omega, saturated = motor_speeds(cmd, geom)
    return replace(cmd, omega=omega, saturated=saturated)


def allocate(wrench, geom: PlatformGeometry) -> ActuatorCommand:
    """Actuator command for a reduced wrench ``[F_x, F_z, M_x, M_y, M_z]``.

    Speeds are clamped to ``omega_max`` and ``saturated`` is set when that
    happens; the thrust and tilt fields always hold the unclamped solution.
    """
    return command_from_u(geom.solver.solve(np.asarray(wrench, dtype=float)), geom)


def motor_speeds(cmd: ActuatorCommand, geom: PlatformGeometry) -> tuple[tuple, bool]:
    w12 = math.sqrt(max(cmd.T12, 0.0) / (2.0 * geom.k_f))
    w34 = math.sqrt(max(cmd.T34, 0.0) / (2.0 * geom.k_f))
    w5 = math.copysign(math.sqrt(abs(cmd.T5) / geom.k_f_rear), cmd.T5) if cmd.T5 != 0.0 else 0.0
    raw = (w12, w12, w34, w34, w5)
    saturated = any(abs(w) > geom.omega_max for w in raw)
    wm = geom.omega_max
    return tuple(min(max(w, -wm), wm) for w in raw), saturated


def effective_command(cmd: ActuatorCommand, geom: PlatformGeometry) -> ActuatorCommand:
    """Thrusts actually produced by the (possibly clamped) rotor speeds."""
    if not cmd.saturated:
        return cmd
    w1, _, w3, _, w5 = cmd.omega
    return replace(
        cmd,
        T12=2.0 * geom.k_f * w1**2,
        T34=2.0 * geom.k_f * w3**2,
        T5=math.copysign(geom.k_f_rear * w5**2, w5),
    )


def apply_actuators(cmd: ActuatorCommand, geom: PlatformGeometry) -> WrenchCommand:
    """Forward map from thrusts and tilts to the body wrench."""
    s1, c1 = math.sin(cmd.alpha1), math.cos(cmd.alpha1)
    s0, c0 = math.sin(cmd.alpha0), math.cos(cmd.alpha0)
    T12, T34, T5 = cmd.T12, cmd.T34, cmd.T5
    force = np.array([T12 * s1 - T34 * s0, 0.0, -T12 * c1 - T34 * c0 - T5])
    torque = np.array([
        geom.l1 * (T12 * c1 - T34 * c0),
        -geom.l2 * T5,
        geom.l1 * (T12 * s1 + T34 * s0) - geom.k_d * T5,
    ])
    return WrenchCommand(force, torque)


def max_total_thrust(geom: PlatformGeometry, g: float = GRAVITY) -> float:
    """Total thrust at full rotor speed, in kilograms-force."""
    w2 = geom.omega_max**2
    return (4.0 * geom.k_f * w2 + geom.k_f_rear * w2) / g
