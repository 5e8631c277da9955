"""Rotations, frames and the small linear algebra shared by every module.

Vectors are plain ``numpy`` arrays of shape (3,); rotations are (3, 3)
matrices with ``R_AB @ v_B = v_A``. World and body frames follow NED, so
gravity points along +z of the world frame.
"""

from __future__ import annotations

import enum
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.spatial.transform import Rotation

from aerialdelta.errors import NotSkewSymmetric, SingularMatrix

ORTHO_TOL = 1e-9
PIVOT_TOL = 1e-12


class Frame(enum.Enum):
    WORLD = "W"
    BODY = "B"
    DELTA_BASE = "D"
    END_EFFECTOR = "E"


def vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


def cross(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for one pair)."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def skew(v) -> np.ndarray:
    """Matrix ``S`` with ``S @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S, tol: float = ORTHO_TOL) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if np.linalg.norm(S + S.T) >= tol:
        raise NotSkewSymmetric(f"matrix is not skew-symmetric: |S + S^T| = {np.linalg.norm(S + S.T):.3e}")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def from_euler(roll: float = 0.0, pitch: float = 0.0, yaw: float = 0.0) -> np.ndarray:
    """Z-Y-X (yaw, pitch, roll) composition, ``R_WB = Rz(yaw) Ry(pitch) Rx(roll)``."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues' formula. ``axis`` need not be normalised but must be nonzero."""
    a = np.asarray(axis, dtype=float)
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    K = skew(a / n)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def orthonormalize(R) -> np.ndarray:
    """Closest rotation matrix in the Frobenius sense (polar decomposition)."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0.0:
        U[:, -1] = -U[:, -1]
        Q = U @ Vt
    return Q


def is_rotation(R, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(np.abs(R.T @ R - np.eye(3)).max() <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def to_quat_wxyz(R) -> np.ndarray:
    """Unit quaternion (w, x, y, z) with w >= 0, used only at the log boundary."""
    x, y, z, w = Rotation.from_matrix(R).as_quat()
    q = np.array([w, x, y, z])
    return -q if w < 0.0 else q


def from_quat_wxyz(q) -> np.ndarray:
    w, x, y, z = q
    return Rotation.from_quat([x, y, z, w]).as_matrix()


class LinearSolver5:
    """LU factorisation (partial pivoting) of a 5x5 matrix, reusable across solves."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.shape != (5, 5) or not np.all(np.isfinite(A)):
            raise ValueError("expected a finite 5x5 matrix")
        # scipy only warns on exact zeros; the pivot threshold is ours.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(A, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.min() < PIVOT_TOL:
            raise SingularMatrix(f"pivot magnitude {pivots.min():.3e} below {PIVOT_TOL:g}")
        self._lu = (lu, piv)

    def solve(self, b) -> np.ndarray:
        return lu_solve(self._lu, np.asarray(b, dtype=float), check_finite=False)


def solve5(A, b) -> np.ndarray:
    return LinearSolver5(A).solve(b)
