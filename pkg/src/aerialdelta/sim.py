"""Closed-loop scenario executive and CSV logging.

Each physics tick runs, in order: sense, control (zero-order held at the
controller rate), allocate, couple and solve the arm IK (at the arm rate),
contact, integrate. The servo and the rigid body advance together.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from aerialdelta.allocation import (
    ActuatorCommand,
    allocate,
    apply_actuators,
    effective_command,
    reduced_wrench,
)
from aerialdelta.config import ScenarioConfig
from aerialdelta.controller import ControlOutput, PoseController, PoseReference
from aerialdelta.coupling import compensate_deviation, end_effector_world
from aerialdelta.delta import DeltaGeometry, forward_kinematics, inverse_kinematics
from aerialdelta.dynamics import RigidBodyState, WrenchCommand, step
from aerialdelta.errors import AerialDeltaError, NonFiniteState
from aerialdelta.interaction import ContactState, tip_wrench
from aerialdelta.se3 import from_euler, to_quat_wxyz

LOG_COLUMNS = (
    "t",
    "p_x", "p_y", "p_z",
    "q_w", "q_x", "q_y", "q_z",
    "v_x", "v_y", "v_z",
    "w_x", "w_y", "w_z",
    "fc_x", "fc_y", "fc_z",
    "tau_x", "tau_y", "tau_z",
    "T12", "T34", "T5", "alpha0", "alpha1",
    "omega1", "omega2", "omega3", "omega4", "omega5",
    "theta1", "theta2", "theta3",
    "pED_x", "pED_y", "pED_z",
    "pEW_x", "pEW_y", "pEW_z",
    "ep_norm", "ee_error",
    "force_x", "force_y", "force_z",
    "k_s", "fold_event", "saturated", "arm_error",
)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    return f"{float(x):.9g}"


class ReferenceGenerator:
    """Platform pose reference as a function of time."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg.reference
        self.contact = cfg.contact
        r = self.cfg
        self._R = from_euler(0.0, math.radians(r.pitch_deg), math.radians(r.yaw_deg))
        self._wp_R = [from_euler(0.0, math.radians(w.pitch_deg), math.radians(w.yaw_deg)) for w in r.waypoints]

    def __call__(self, t: float) -> PoseReference:
        r = self.cfg
        p = np.array(r.position, dtype=float)
        v = np.zeros(3)
        a = np.zeros(3)
        R = self._R
        if r.kind == "step":
            if t >= r.step_time:
                p = p + np.array(r.step)
        elif r.kind == "sinusoid":
            w = 2.0 * math.pi * r.frequency
            A = np.array(r.amplitude)
            p = p + A * math.sin(w * t)
            v = A * w * math.cos(w * t)
            a = -A * w * w * math.sin(w * t)
        elif r.kind == "waypoints":
            elapsed = 0.0
            idx = len(r.waypoints) - 1
            for i, wp in enumerate(r.waypoints):
                elapsed += wp.hold
                if t < elapsed:
                    idx = i
                    break
            p = np.array(r.waypoints[idx].position, dtype=float)
            R = self._wp_R[idx]
        c = self.contact
        if c is not None and c.push_velocity > 0.0 and t > c.push_start:
            n = np.array(c.surface_normal)
            p = p - n * c.push_velocity * (t - c.push_start)
            v = v - n * c.push_velocity
        return PoseReference(p=p, v=v, a=a, R=R)


class ServoArm:
    """Three hip servos tracking angle targets with a rate-limited first-order response."""

    def __init__(self, geom: DeltaGeometry, theta0, time_constant: float, rate_limit: float):
        self.geom = geom
        self.theta = np.array(theta0, dtype=float)
        self.target = self.theta.copy()
        self.tau = time_constant
        self.rate = rate_limit
        self._tip = forward_kinematics(self.theta, geom)
        self._tip_theta = self.theta.copy()

    def advance(self, dt: float) -> None:
        err = self.target - self.theta
        if not np.any(err):
            return
        gain = 1.0 if self.tau == 0.0 else -math.expm1(-dt / self.tau)
        self.theta = self.theta + np.clip(gain * err, -self.rate * dt, self.rate * dt)

    @property
    def tip(self) -> np.ndarray:
        """End-effector position in frame D from the current servo angles."""
        if not np.array_equal(self.theta, self._tip_theta):
            self._tip = forward_kinematics(self.theta, self.geom, seed=self._tip)
            self._tip_theta = self.theta.copy()
        return self._tip


@dataclass
class SimResult:
    config: ScenarioConfig
    columns: tuple = LOG_COLUMNS
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    fold_events: list = field(default_factory=list)
    error: AerialDeltaError | None = None

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def save_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            self.write_csv(fh)


def _quantiles(x: np.ndarray) -> dict:
    if x.size == 0:
        return {"median": math.nan, "p25": math.nan, "p75": math.nan, "iqr": math.nan}
    p25, med, p75 = np.percentile(x, [25, 50, 75])
    return {"median": float(med), "p25": float(p25), "p75": float(p75), "iqr": float(p75 - p25)}


class Simulation:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        base = Path(cfg.base_dir) if cfg.base_dir else None
        self.params = cfg.inertial.build()
        self.platform = cfg.platform.build()
        self.delta = cfg.delta.build()
        self.mount = cfg.mount.build()
        self.stiffness = cfg.stiffness.build(base)
        self.controller = PoseController(self.params, cfg.gains.build(), cfg.gains.eps_force)
        self.reference = ReferenceGenerator(cfg)
        self.rng = np.random.default_rng(cfg.seed)

        d = cfg.disturbance
        self.dist_amp = np.array(d.amplitude, dtype=float)
        self.dist_phase = self.rng.uniform(0.0, 2.0 * math.pi, 3) if d.random_phase else np.zeros(3)

        self.contact = None
        if cfg.contact is not None:
            self.contact = ContactState(cfg.contact.surface(), self.stiffness, cfg.contact.thresholds())

        self.arm = None
        if cfg.arm.enabled:
            theta0 = inverse_kinematics(self.arm_reference(0.0), self.delta)
            self.arm = ServoArm(self.delta, theta0, cfg.arm.servo_time_constant, cfg.arm.servo_rate_limit)

        i = cfg.initial
        R0 = from_euler(math.radians(i.roll_deg), math.radians(i.pitch_deg), math.radians(i.yaw_deg))
        self.state = RigidBodyState(np.array(i.position, float), R0, R0.T @ np.array(i.velocity, float),
                                    np.array(i.omega, float))

    def arm_reference(self, t: float) -> np.ndarray:
        target = np.array(self.cfg.arm.target, dtype=float)
        if self.cfg.contact is not None:
            target[2] = self.cfg.contact.stiffness_schedule.height(t)
        return target

    def disturbance(self, t: float) -> np.ndarray:
        d = self.cfg.disturbance
        f = self.dist_amp * np.sin(2.0 * math.pi * d.frequency * t + self.dist_phase)
        if d.noise_std > 0.0:
            f = f + self.rng.normal(0.0, d.noise_std, 3)
        return f

    def _actuate(self, out: ControlOutput) -> tuple[ActuatorCommand, WrenchCommand]:
        cmd = allocate(reduced_wrench(out.wrench), self.platform)
        return cmd, apply_actuators(effective_command(cmd, self.platform), self.platform)

    def run(self) -> SimResult:
        cfg = self.cfg
        dt = cfg.rates.physics_dt
        ctrl_div = cfg.rates.divider(cfg.rates.controller_hz, "controller_hz")
        arm_div = cfg.rates.divider(cfg.rates.arm_hz, "arm_hz")
        n_steps = int(round(cfg.duration / dt))
        lag = cfg.platform.actuator_lag
        lag_gain = 1.0 if lag == 0.0 else -math.expm1(-dt / lag)

        result = SimResult(cfg)
        out = cmd = applied = None
        u_act = None
        arm_error = ""
        arm_errors: Counter = Counter()
        saturated_ticks = degenerate_ticks = 0
        ee_err = []
        max_force = 0.0
        s = self.state

        for k in range(n_steps):
            t = k * dt
            ref = self.reference(t)

            if k % ctrl_div == 0:
                out = self.controller(s, ref)
                cmd, applied = self._actuate(out)
                saturated_ticks += cmd.saturated
                degenerate_ticks += out.degenerate is not None
            if lag > 0.0:
                u_cmd = effective_command(cmd, self.platform).u()
                u_act = u_cmd.copy() if u_act is None else u_act + lag_gain * (u_cmd - u_act)
                wr = self.platform.matrix @ u_act
                applied = WrenchCommand(np.array([wr[0], 0.0, wr[1]]), wr[2:].copy())

            p_ref_E_D = self.arm_reference(t)
            if self.arm is not None:
                if k % arm_div == 0:
                    target = p_ref_E_D
                    if cfg.arm.compensation:
                        target = compensate_deviation(p_ref_E_D, out.e_p, s.R, ref.R, self.mount)
                    try:
                        self.arm.target = inverse_kinematics(target, self.delta)
                        arm_error = ""
                    except AerialDeltaError as exc:
                        arm_error = exc.code
                        arm_errors[exc.code] += 1
                tip = self.arm.tip
                theta = self.arm.theta
            else:
                tip, theta = p_ref_E_D, np.full(3, math.nan)

            ee_W = end_effector_world(s, self.mount, tip)
            f_env = np.zeros(3)
            k_s = self.stiffness.evaluate(tip[2])[0]
            if self.contact is not None:
                was_folded = self.contact.folded
                f_env, k_s = self.contact.update(t, ee_W, tip[2])
                if self.contact.folded and not was_folded:
                    result.fold_events.append(self.contact.event)
                max_force = max(max_force, float(np.linalg.norm(f_env)))

            ext = tip_wrench(f_env, s, self.mount, tip)
            dist_W = self.disturbance(t)
            total = WrenchCommand(applied.force + ext.force + s.R.T @ dist_W, applied.torque + ext.torque)

            ee_ref_W = ref.p + ref.R @ self.mount.tip_in_body(p_ref_E_D)
            ee_e = float(np.linalg.norm(ee_W - ee_ref_W))
            if t >= cfg.metrics.start_time:
                ee_err.append(ee_e)

            if k % cfg.log.decimate == 0:
                fold = self.contact.event.kind.value if (self.contact and self.contact.folded) else ""
                result.rows.append((
                    t, *s.p, *to_quat_wxyz(s.R), *s.v, *s.omega,
                    *out.wrench.force, *out.wrench.torque,
                    cmd.T12, cmd.T34, cmd.T5, cmd.alpha0, cmd.alpha1, *cmd.omega,
                    *theta, *tip, *ee_W,
                    float(np.linalg.norm(out.e_p)), ee_e,
                    *f_env, k_s, fold, cmd.saturated, arm_error,
                ))

            try:
                s = step(s, self.params, total, dt)
            except NonFiniteState as exc:
                result.error = exc
                break
            if self.arm is not None:
                self.arm.advance(dt)

        self.state = s
        final_ref = self.reference(n_steps * dt)
        e = np.asarray(ee_err)
        result.summary = {
            "name": cfg.name,
            "seed": cfg.seed,
            "duration": cfg.duration,
            "steps": n_steps,
            "final_position_error": float(np.linalg.norm(final_ref.p - s.p)),
            "ee_error": _quantiles(e),
            "max_contact_force": max_force,
            "fold_events": [
                {"time": ev.time, "kind": ev.kind.value, "force_at_fold": float(ev.force_at_fold), "stiffness": float(ev.stiffness)}
                for ev in result.fold_events
            ],
            "saturated_ticks": saturated_ticks,
            "degenerate_force_ticks": degenerate_ticks,
            "arm_errors": dict(sorted(arm_errors.items())),
            "error": None if result.error is None else result.error.code,
        }
        return result


def run(cfg: ScenarioConfig) -> SimResult:
    return Simulation(cfg).run()
