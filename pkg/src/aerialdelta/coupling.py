"""Kinematic coupling between the platform and the arm.

Frame chain for the end-effector: ``W <- B <- D <- E`` with
``p_W = p + R_WB (p_BD + R_DB^T p_E_D)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aerialdelta.dynamics import RigidBodyState
from aerialdelta.se3 import is_rotation


def _forward_mount() -> np.ndarray:
    # z_D along +x_B (arm points forward), x_D along +z_B.
    return np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class MountTransform:
    R_DB: np.ndarray = field(default_factory=_forward_mount)  # body -> delta base
    p_BD: np.ndarray = field(default_factory=lambda: np.array([0.15, 0.0, 0.0]))  # body frame [m]

    def __post_init__(self):
        R = np.asarray(self.R_DB, dtype=float)
        if not is_rotation(R):
            raise ValueError("R_DB must be a rotation matrix")
        object.__setattr__(self, "R_DB", R)
        object.__setattr__(self, "p_BD", np.asarray(self.p_BD, dtype=float).reshape(3))

    @property
    def datum(self) -> np.ndarray:
        """Constant offset ``R_DB p_BD`` the coupling law adds at zero error."""
        return self.R_DB @ self.p_BD

    def tip_in_body(self, p_E_D) -> np.ndarray:
        return self.p_BD + self.R_DB.T @ np.asarray(p_E_D, dtype=float)


def compensate(p_ref_E_D, e_p_B, R_WB, R_WB_ref, mount: MountTransform) -> np.ndarray:
    """Arm target shifted by the platform pose error::

        p_d = p_ref + R_DB e_p + R_DB R_ref^T R p_BD
    """
    R_DB = mount.R_DB
    return (np.asarray(p_ref_E_D, dtype=float) + R_DB @ np.asarray(e_p_B, dtype=float)
            + R_DB @ (np.asarray(R_WB_ref).T @ (np.asarray(R_WB) @ mount.p_BD)))


def compensate_deviation(p_ref_E_D, e_p_B, R_WB, R_WB_ref, mount: MountTransform) -> np.ndarray:
    """Coupling law with the mount datum removed, so zero error leaves the target unchanged."""
    return compensate(p_ref_E_D, e_p_B, R_WB, R_WB_ref, mount) - mount.datum


def end_effector_world(s: RigidBodyState, mount: MountTransform, p_E_D) -> np.ndarray:
    return s.p + s.R @ mount.tip_in_body(p_E_D)
