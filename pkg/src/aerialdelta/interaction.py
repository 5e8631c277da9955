"""Spring contact between the arm tip and a planar surface, plus fold detection.

The arm acts as a compression-only spring along the surface normal with the
stiffness of its current height. Overloading it folds the origami joints:
the knee in stiff (extended) configurations, the ankle in compliant
(retracted) ones. A folded arm transmits no force for the rest of the run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from aerialdelta.coupling import MountTransform
from aerialdelta.dynamics import RigidBodyState, WrenchCommand
from aerialdelta.se3 import cross
from aerialdelta.stiffness import StiffnessModel


@dataclass(frozen=True)
class ContactSurface:
    point: np.ndarray  # world [m]
    normal: np.ndarray  # unit, world; points out of the surface toward free space

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("surface normal must be a unit vector")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))

    def penetration(self, x) -> float:
        return max(0.0, -float((np.asarray(x) - self.point) @ self.normal))


@dataclass(frozen=True)
class FoldThresholds:
    f_knee: float = 4.0  # [N]
    f_ankle: float = 2.0  # [N]
    k_cross: float = 185.0  # knee/ankle regime boundary [N/m]
    no_fold_band: float = 0.0  # half-width around k_cross where neither fold triggers [N/m]

    def __post_init__(self):
        if not (self.f_knee > 0 and self.f_ankle > 0 and self.k_cross > 0 and self.no_fold_band >= 0):
            raise ValueError("fold thresholds must be positive")


class FoldKind(enum.Enum):
    KNEE = "KneeFold"
    ANKLE = "AnkleFold"


@dataclass(frozen=True)
class FoldEvent:
    time: float
    kind: FoldKind
    force_at_fold: float
    stiffness: float


def contact_force(ee_world, surface: ContactSurface, model: StiffnessModel, z_config: float) -> np.ndarray:
    """Force the tip exerts on the environment (world frame)."""
    delta = surface.penetration(ee_world)
    if delta == 0.0:
        return np.zeros(3)
    k, _ = model.evaluate(z_config)
    return -k * delta * surface.normal


def detect_fold(force: float, k_s: float, thresholds: FoldThresholds, time: float = 0.0) -> FoldEvent | None:
    if abs(k_s - thresholds.k_cross) < thresholds.no_fold_band:
        return None
    if k_s >= thresholds.k_cross:
        if force > thresholds.f_knee:
            return FoldEvent(time, FoldKind.KNEE, force, k_s)
    elif force > thresholds.f_ankle:
        return FoldEvent(time, FoldKind.ANKLE, force, k_s)
    return None


def tip_wrench(force_on_env_W, s: RigidBodyState, mount: MountTransform, p_E_D) -> WrenchCommand:
    """Reaction of the environment on the platform through a massless, rigid arm."""
    f_B = -(s.R.T @ np.asarray(force_on_env_W, dtype=float))
    r_B = mount.tip_in_body(p_E_D)
    return WrenchCommand(f_B, cross(r_B, f_B))


@dataclass
class ContactState:
    """Per-run contact bookkeeping: once folded, the arm stays limp."""

    surface: ContactSurface
    model: StiffnessModel
    thresholds: FoldThresholds = field(default_factory=FoldThresholds)
    event: FoldEvent | None = None

    @property
    def folded(self) -> bool:
        return self.event is not None

    def update(self, t: float, ee_world, z_config: float) -> tuple[np.ndarray, float]:
        """Environment force and stiffness at time ``t``; may register a fold."""
        k, _ = self.model.evaluate(z_config)
        if self.folded:
            return np.zeros(3), k
        f = contact_force(ee_world, self.surface, self.model, z_config)
        ev = detect_fold(float(np.linalg.norm(f)), k, self.thresholds, t)
        if ev is not None:
            self.event = ev
            return np.zeros(3), k
        return f, k


def push_scenario(config):
    """Closed-loop contact run; see :func:`aerialdelta.sim.run`."""
    from aerialdelta.sim import run

    if config.contact is None:
        raise ValueError("push scenario needs a [contact] block")
    return run(config)
