"""Command-line entry point.

Every subcommand prints JSON on stdout. Failures print a single JSON line
``{"error": <code>, "message": ...}`` on stderr and exit 1; argument errors
exit 2 (argparse's convention).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from aerialdelta import __version__
from aerialdelta.allocation import allocate, max_total_thrust
from aerialdelta.config import ScenarioConfig, load_config, validate_config
from aerialdelta.delta import inverse_kinematics, workspace_sample, write_workspace_csv
from aerialdelta.errors import AerialDeltaError
from aerialdelta.stiffness import StiffnessRangeWarning, fit_samples, read_samples_csv


class _Fail(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _config(path) -> ScenarioConfig:
    return validate_config({}) if path is None else load_config(path)


def _clean(obj):
    """JSON-safe copy: numpy scalars to float, non-finite floats to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _emit(obj) -> None:
    print(json.dumps(_clean(obj), indent=2, allow_nan=False))


def _cmd_sim(args) -> int:
    from aerialdelta.sim import Simulation

    cfg = load_config(args.config)
    if args.decimate is not None:
        cfg = cfg.with_updates(log={"decimate": args.decimate})
    out = Path(args.out) if args.out else Path(f"{cfg.name}.csv")
    result = Simulation(cfg).run()
    try:
        result.save_csv(out)
    except OSError as exc:
        raise _Fail("IOError", f"cannot write {out}: {exc.strerror}") from None
    summary = dict(result.summary, log=str(out), rows=len(result.rows))
    _emit(summary)
    if result.error is not None:
        raise _Fail(result.error.code, str(result.error))
    return 0


def _cmd_ik(args) -> int:
    geom = _config(args.config).delta.build()
    theta = inverse_kinematics((args.x, args.y, args.z), geom)
    _emit({"theta": theta.tolist(), "theta_deg": np.degrees(theta).tolist()})
    return 0


def _cmd_alloc(args) -> int:
    cfg = _config(args.config)
    geom = cfg.platform.build()
    cmd = allocate((args.fx, args.fz, args.mx, args.my, args.mz), geom)
    _emit({
        "T12": cmd.T12, "T34": cmd.T34, "T5": cmd.T5,
        "alpha0": cmd.alpha0, "alpha1": cmd.alpha1,
        "omega": list(cmd.omega), "saturated": cmd.saturated,
        "max_total_thrust_kg": max_total_thrust(geom, cfg.inertial.gravity),
    })
    return 0


def _cmd_stiffness_fit(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            samples = read_samples_csv(fh)
    except OSError as exc:
        raise _Fail("IOError", f"cannot read {args.csv}: {exc.strerror}") from None
    fit = fit_samples(samples)
    m = fit.model
    if args.format == "toml":
        print("[stiffness]")
        print(f"coefficients = [{m.c0!r}, {m.c1!r}, {m.c2!r}]")
        print(f"z_range = [{m.z_lo!r}, {m.z_hi!r}]")
        return 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StiffnessRangeWarning)
        ends = {"k_at_z_lo": m.evaluate(m.z_lo)[0], "k_at_z_hi": m.evaluate(m.z_hi)[0]}
    _emit({**fit.as_dict(), **ends})
    return 0


def _cmd_workspace(args) -> int:
    cfg = load_config(args.config)
    ws = cfg.workspace
    pts = workspace_sample(cfg.delta.build(), ws.x.values(), ws.y.values(), ws.z.values())
    if args.out:
        try:
            with open(args.out, "w", newline="") as fh:
                write_workspace_csv(pts, fh)
        except OSError as exc:
            raise _Fail("IOError", f"cannot write {args.out}: {exc.strerror}") from None
        n = sum(p.reachable for p in pts)
        _emit({"points": len(pts), "reachable": n, "log": args.out})
    else:
        write_workspace_csv(pts, sys.stdout)
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    _emit({"valid": True, "name": cfg.name, "duration": cfg.duration, "seed": cfg.seed})
    return 0


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _finite(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError("must be finite")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aerialdelta", description="Aerial delta-manipulator simulation tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sim", help="run a scenario and write its CSV log")
    s.add_argument("config")
    s.add_argument("--out", help="log path (default: <name>.csv)")
    s.add_argument("--decimate", type=_positive_int, help="keep every N-th physics step in the log")
    s.set_defaults(func=_cmd_sim)

    s = sub.add_parser("ik", help="delta inverse kinematics for one target in frame D")
    for axis in "xyz":
        s.add_argument(f"--{axis}", type=_finite, required=True, help="[m]")
    s.add_argument("--config", help="take the delta geometry from this scenario")
    s.set_defaults(func=_cmd_ik)

    s = sub.add_parser("alloc", help="actuator command for a reduced body wrench")
    for name, unit in (("fx", "N"), ("fz", "N"), ("mx", "N m"), ("my", "N m"), ("mz", "N m")):
        s.add_argument(f"--{name}", type=_finite, default=0.0, help=f"[{unit}]")
    s.add_argument("--config", help="take the platform geometry from this scenario")
    s.set_defaults(func=_cmd_alloc)

    s = sub.add_parser("stiffness-fit", help="fit k_s(z) to a CSV of z, delta_z, F_z rows")
    s.add_argument("csv")
    s.add_argument("--format", choices=("json", "toml"), default="json",
                   help="toml prints a [stiffness] block for a scenario file")
    s.set_defaults(func=_cmd_stiffness_fit)

    s = sub.add_parser("workspace", help="classify the configured grid of arm targets")
    s.add_argument("config")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.set_defaults(func=_cmd_workspace)

    s = sub.add_parser("validate", help="check a scenario file")
    s.add_argument("config")
    s.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AerialDeltaError, _Fail) as exc:
        code, msg = exc.code, str(exc)
    except ValueError as exc:
        code, msg = "InvalidInput", str(exc)
    print(json.dumps({"error": code, "message": msg}), file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
