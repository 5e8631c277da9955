"""Kinematics of the origami delta arm.

Frame D is fixed to the arm base with z_D pointing toward the end-effector,
so reachable targets have positive z. Leg ``i`` sits at azimuth
``gamma_i = 2 pi i / 3``; in its leg frame (target rotated by ``-gamma_i``
about z_D) the hip hinge is the local x axis and the leg reaches outward
along local y. The hip angle ``theta_i`` is measured from local +y toward
+z, so the knee sits at ``[0, r_D + l_p cos(theta), l_p sin(theta)]``.

Because the knee and ankle folds are perpendicular revolute pairs rather
than universal joints, the effective distal length depends on the target
component along the hip hinge::

    l_d = sqrt(p_par^2 + (sqrt(l_m^2 - p_par^2) + 2 l_e)^2)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from aerialdelta.errors import (
    AerialDeltaError,
    AmbiguousSolution,
    BranchSingularity,
    JointLimit,
    NoConvergence,
    OutOfParallelogramRange,
    UnreachableTarget,
)
from aerialdelta.se3 import cross, rot_z

LEG_AZIMUTHS = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
_LEG_ROT = tuple(rot_z(g) for g in LEG_AZIMUTHS)


@dataclass(frozen=True)
class DeltaGeometry:
    l_p: float = 0.06  # proximal link [m]
    l_m: float = 0.12  # parallelogram bar [m]
    l_e: float = 0.01  # end-fold segment, one at each end [m]
    r_D: float = 0.05  # base radius [m]
    r_E: float = 0.025  # end-effector plate radius [m]
    theta_min: float = -math.pi / 2
    theta_max: float = math.pi / 2

    def __post_init__(self):
        if min(self.l_p, self.l_m, self.l_e, self.r_D, self.r_E) <= 0.0:
            raise ValueError("all delta lengths must be positive")
        if self.r_D <= self.r_E:
            raise ValueError("base radius must exceed the end-effector radius")
        if self.theta_min >= self.theta_max:
            raise ValueError("theta_min must be below theta_max")

    @property
    def r_DE(self) -> float:
        return self.r_D - self.r_E

    @property
    def ideal_distal(self) -> float:
        return self.l_m + 2.0 * self.l_e


def to_leg_frame(p, leg: int) -> np.ndarray:
    return _LEG_ROT[leg].T @ np.asarray(p, dtype=float)


def hip_axis(leg: int) -> np.ndarray:
    return _LEG_ROT[leg][:, 0]


def _distal_from_par(p_par: float, geom: DeltaGeometry) -> float:
    slack = geom.l_m**2 - p_par**2
    if slack < 0.0:
        raise OutOfParallelogramRange(
            f"hinge-parallel offset {p_par:.6g} m exceeds the bar length {geom.l_m:g} m")
    return math.sqrt(p_par**2 + (math.sqrt(slack) + 2.0 * geom.l_e) ** 2)


def distal_length(p_E_D, leg: int, geom: DeltaGeometry) -> float:
    """Effective distal length of ``leg`` for an end-effector at ``p_E_D``."""
    return _distal_from_par(float(to_leg_frame(p_E_D, leg)[0]), geom)


def leg_coefficients(p_E_D, leg: int, geom: DeltaGeometry) -> tuple[float, float, float]:
    """``(E, F, G)`` of ``E cos(theta) + F sin(theta) + G = 0`` for one leg."""
    x, y, z = to_leg_frame(p_E_D, leg)
    l_d = _distal_from_par(x, geom)
    l_p, r = geom.l_p, geom.r_DE
    E = 2.0 * l_p * (r - y)
    F = -2.0 * z * l_p
    G = x * x + y * y + z * z + r * r + l_p * l_p - 2.0 * y * r - l_d * l_d
    return E, F, G


def leg_angle(p_E_D, leg: int, geom: DeltaGeometry) -> float:
    E, F, G = leg_coefficients(p_E_D, leg, geom)
    disc = E * E + F * F - G * G
    if disc < 0.0:
        raise UnreachableTarget(f"leg {leg + 1} cannot reach {np.round(p_E_D, 6).tolist()}")
    root = math.sqrt(disc)
    # Knee-out root of the half-angle quadratic, tan(theta/2) = (-F - root)/(G - E),
    # rationalised so it stays finite where G == E.
    den = root - F
    if abs(den) < 1e-12:
        raise BranchSingularity(f"leg {leg + 1} is at a branch point")
    return 2.0 * math.atan((G + E) / den)


def inverse_kinematics(p_E_D, geom: DeltaGeometry, check_limits: bool = True) -> np.ndarray:
    """Hip angles ``[theta_1, theta_2, theta_3]`` placing the end-effector at ``p_E_D``."""
    p = np.asarray(p_E_D, dtype=float).reshape(3)
    if not np.all(np.isfinite(p)):
        raise UnreachableTarget("non-finite target")
    if p[2] <= 0.0:
        raise UnreachableTarget(f"target z = {p[2]:.6g} m is not below the base plate")
    theta = np.array([leg_angle(p, i, geom) for i in range(3)])
    if check_limits:
        bad = [(i + 1, t) for i, t in enumerate(theta) if not geom.theta_min <= t <= geom.theta_max]
        if bad:
            leg, t = bad[0]
            raise JointLimit(f"leg {leg} angle {t:.6g} rad outside [{geom.theta_min:.6g}, {geom.theta_max:.6g}]")
    return theta


def _knee_points(theta, geom: DeltaGeometry) -> np.ndarray:
    """Knee minus plate-joint offset per leg, i.e. the centres the end-effector must sit l_d away from."""
    out = np.empty((3, 3))
    for i, t in enumerate(theta):
        local = np.array([0.0, geom.r_DE + geom.l_p * math.cos(t), geom.l_p * math.sin(t)])
        out[i] = _LEG_ROT[i] @ local
    return out


def three_sphere_intersection(centres: np.ndarray, radius: float) -> np.ndarray:
    """Below-base intersection of three equal spheres (the ideal delta solution)."""
    P1, P2, P3 = centres
    d_vec = P2 - P1
    d = np.linalg.norm(d_vec)
    ex = d_vec / d
    i = ex @ (P3 - P1)
    ey = P3 - P1 - i * ex
    j = np.linalg.norm(ey)
    if d < 1e-12 or j < 1e-12:
        raise AmbiguousSolution("sphere centres are collinear")
    ey /= j
    ez = cross(ex, ey)
    x = d / 2.0
    y = (i * i + j * j) / (2.0 * j) - i * x / j
    h2 = radius * radius - x * x - y * y
    if h2 < 0.0:
        raise AmbiguousSolution("ideal-delta spheres do not intersect")
    h = math.sqrt(h2)
    a = P1 + x * ex + y * ey + h * ez
    b = P1 + x * ex + y * ey - h * ez
    best = a if a[2] >= b[2] else b
    if best[2] <= 0.0:
        raise AmbiguousSolution("ideal-delta seed has no intersection below the base")
    return best


def _residual_and_jacobian(p, centres, geom: DeltaGeometry):
    r = np.empty(3)
    Jac = np.empty((3, 3))
    for i in range(3):
        u = hip_axis(i)
        p_par = float(u @ p)
        s2 = geom.l_m**2 - p_par**2
        if s2 <= 0.0:
            raise OutOfParallelogramRange(f"leg {i + 1} parallelogram overstretched during FK")
        s = math.sqrt(s2)
        l_d2 = p_par**2 + (s + 2.0 * geom.l_e) ** 2
        diff = p - centres[i]
        r[i] = diff @ diff - l_d2
        Jac[i] = 2.0 * diff + (4.0 * geom.l_e * p_par / s) * u
    return r, Jac


def forward_kinematics(theta: Sequence[float], geom: DeltaGeometry, tol: float = 1e-10,
                       max_iter: int = 100, seed=None) -> np.ndarray:
    """End-effector position for hip angles ``theta`` by damped Newton iteration.

    Seeded from the ideal-delta three-sphere solution unless ``seed`` is given.
    ``tol`` bounds the per-leg constraint residual in m^2.
    """
    centres = _knee_points(theta, geom)
    p = three_sphere_intersection(centres, geom.ideal_distal) if seed is None else np.array(seed, float)
    r, Jac = _residual_and_jacobian(p, centres, geom)
    err = np.abs(r).max()
    for _ in range(max_iter):
        if err < 1e-16:
            break
        step = np.linalg.solve(Jac, -r)
        lam = 1.0
        while True:
            trial = p + lam * step
            try:
                r_t, J_t = _residual_and_jacobian(trial, centres, geom)
                err_t = np.abs(r_t).max()
            except OutOfParallelogramRange:
                err_t = math.inf
            if err_t < err or lam < 1e-6:
                break
            lam *= 0.5
        if not err_t < err:
            break
        p, r, Jac, err = trial, r_t, J_t, err_t
        if np.linalg.norm(lam * step) < 1e-15:
            break
    if not err < tol:
        raise NoConvergence(f"forward kinematics residual {err:.3e} m^2 after {max_iter} iterations")
    return p


@dataclass(frozen=True)
class WorkspacePoint:
    x: float
    y: float
    z: float
    reachable: bool
    theta: tuple
    error_code: str


WORKSPACE_COLUMNS = ("x", "y", "z", "reachable", "theta1", "theta2", "theta3", "error_code")


def classify(p, geom: DeltaGeometry) -> WorkspacePoint:
    x, y, z = (float(c) for c in p)
    try:
        theta = inverse_kinematics((x, y, z), geom)
    except AerialDeltaError as exc:
        return WorkspacePoint(x, y, z, False, (math.nan,) * 3, exc.code)
    return WorkspacePoint(x, y, z, True, tuple(float(t) for t in theta), "")


def workspace_sample(geom: DeltaGeometry, xs: Iterable[float], ys: Iterable[float],
                     zs: Iterable[float]) -> list[WorkspacePoint]:
    """Classify every point of the Cartesian grid ``xs x ys x zs``."""
    xs, ys = list(xs), list(ys)
    return [classify((x, y, z), geom) for z in zs for y in ys for x in xs]


def write_workspace_csv(points: Iterable[WorkspacePoint], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(WORKSPACE_COLUMNS)
    for pt in points:
        th = ["" if math.isnan(t) else f"{t:.9g}" for t in pt.theta]
        w.writerow([f"{pt.x:.9g}", f"{pt.y:.9g}", f"{pt.z:.9g}", int(pt.reachable), *th, pt.error_code])
