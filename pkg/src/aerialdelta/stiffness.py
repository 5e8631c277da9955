"""Height-dependent axial stiffness of the origami arm.

Per height, a through-origin linear spring ``F_z = k_s * delta_z`` is fitted;
the stiffnesses are then interpolated by ``k_s(z) = c0 + c1 z + c2 z^2``.
Larger z (more extended arm) is stiffer.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from aerialdelta.errors import DegenerateData

SYNTHETIC_ANCHORS = ((0.080, 80.0), (0.1375, 165.0), (0.195, 290.0))
SYNTHETIC_SEED = 20220512
SYNTHETIC_NOISE_N = 0.02


class StiffnessRangeWarning(UserWarning):
    """Height outside the fitted range; the stiffness was clamped."""


@dataclass(frozen=True)
class StiffnessSample:
    z: float  # end-effector height [m]
    delta: float  # displacement [m]
    force: float  # measured force [N]


@dataclass(frozen=True)
class StiffnessModel:
    c0: float
    c1: float
    c2: float
    z_lo: float
    z_hi: float

    def __post_init__(self):
        if not self.z_lo <= self.z_hi:
            raise ValueError("empty validity range")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return self.c0, self.c1, self.c2

    def evaluate(self, z: float) -> tuple[float, bool]:
        """Stiffness at ``z`` (clamped into range) and whether clamping happened."""
        zc = min(max(z, self.z_lo), self.z_hi)
        return self.c0 + self.c1 * zc + self.c2 * zc * zc, zc != z

    def is_positive(self, n: int = 201) -> bool:
        zs = np.linspace(self.z_lo, self.z_hi, n)
        return bool(np.all(self.c0 + self.c1 * zs + self.c2 * zs**2 > 0.0))


def fit_linear_spring(deltas: Sequence[float], forces: Sequence[float]) -> float:
    d = np.asarray(deltas, dtype=float)
    f = np.asarray(forces, dtype=float)
    if d.size < 2 or d.shape != f.shape:
        raise DegenerateData("need at least two (delta, force) pairs")
    dd = float(d @ d)
    if dd < 1e-12 or np.ptp(d) == 0.0:
        raise DegenerateData("displacements carry no information")
    return float(d @ f) / dd


def fit_polynomial(zs: Sequence[float], ks: Sequence[float]) -> StiffnessModel:
    z = np.asarray(zs, dtype=float)
    k = np.asarray(ks, dtype=float)
    if np.unique(z).size < 3:
        raise DegenerateData("a quadratic needs at least three distinct heights")
    V = np.vander(z, 3, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(V, k, rcond=None)
    if rank < 3:
        raise DegenerateData("height samples are rank deficient")
    model = StiffnessModel(*(float(c) for c in coef), float(z.min()), float(z.max()))
    if not model.is_positive():
        warnings.warn("fitted stiffness is not positive over its range", StiffnessRangeWarning, stacklevel=2)
    return model


def stiffness_at(model: StiffnessModel, z: float) -> float:
    k, clamped = model.evaluate(z)
    if clamped:
        warnings.warn(f"height {z:.4g} m outside [{model.z_lo:.4g}, {model.z_hi:.4g}] m; clamped",
                      StiffnessRangeWarning, stacklevel=2)
    return k


def spring_force(model: StiffnessModel, z_config: float, delta: float) -> float:
    """Compression-only spring force; tension gives zero."""
    if delta <= 0.0:
        return 0.0
    return stiffness_at(model, z_config) * delta


@dataclass(frozen=True)
class StiffnessFit:
    model: StiffnessModel
    heights: tuple
    stiffness: tuple
    spring_rms: tuple  # per-height RMS residual of the linear spring fit [N]
    poly_residuals: tuple  # k_s(z) - fitted polynomial [N/m]

    def as_dict(self) -> dict:
        m = self.model
        return {
            "c0": m.c0, "c1": m.c1, "c2": m.c2,
            "z_lo": m.z_lo, "z_hi": m.z_hi,
            "heights": list(self.heights),
            "stiffness": list(self.stiffness),
            "spring_rms": list(self.spring_rms),
            "poly_residuals": list(self.poly_residuals),
        }


def fit_samples(samples: Iterable[StiffnessSample]) -> StiffnessFit:
    """Spring fit per distinct height, then the quadratic over heights."""
    by_z: dict[float, list[StiffnessSample]] = {}
    for s in samples:
        by_z.setdefault(round(s.z, 9), []).append(s)
    heights, ks, rms = [], [], []
    for z in sorted(by_z):
        rows = by_z[z]
        d = np.array([r.delta for r in rows])
        f = np.array([r.force for r in rows])
        k = fit_linear_spring(d, f)
        heights.append(z)
        ks.append(k)
        rms.append(float(np.sqrt(np.mean((f - k * d) ** 2))))
    model = fit_polynomial(heights, ks)
    res = [k - model.evaluate(z)[0] for z, k in zip(heights, ks)]
    return StiffnessFit(model, tuple(heights), tuple(ks), tuple(rms), tuple(res))


def read_samples_csv(fh) -> list[StiffnessSample]:
    reader = csv.DictReader(fh)
    missing = {"z", "delta_z", "F_z"} - set(reader.fieldnames or ())
    if missing:
        raise DegenerateData(f"stiffness CSV lacks columns {sorted(missing)}")
    out = []
    for row in reader:
        s = StiffnessSample(float(row["z"]), float(row["delta_z"]), float(row["F_z"]))
        if s.delta < 0.0 or s.force < 0.0:
            raise DegenerateData(f"negative displacement or force in row {row}")
        out.append(s)
    return out


def write_samples_csv(samples: Iterable[StiffnessSample], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("z", "delta_z", "F_z"))
    for s in samples:
        w.writerow((f"{s.z:.9g}", f"{s.delta:.9g}", f"{s.force:.9g}"))


def synthetic_truth() -> StiffnessModel:
    """Quadratic through the synthetic anchor points (80 and 290 N/m at the ends)."""
    z, k = np.array(SYNTHETIC_ANCHORS).T
    c = np.linalg.solve(np.vander(z, 3, increasing=True), k)
    return StiffnessModel(float(c[0]), float(c[1]), float(c[2]), float(z[0]), float(z[-1]))


def synthetic_samples(seed: int = SYNTHETIC_SEED, noise: float = SYNTHETIC_NOISE_N) -> list[StiffnessSample]:
    """Load-cell style data: 5 mm height steps over [80, 195] mm, 1 mm pushes up to 10 mm."""
    truth = synthetic_truth()
    rng = np.random.default_rng(seed)
    heights = np.round(np.arange(0.080, 0.1951, 0.005), 6)
    deltas = np.arange(1, 11) * 1e-3
    out = []
    for z in heights:
        k = truth.evaluate(z)[0]
        f = k * deltas + rng.normal(0.0, noise, deltas.size)
        out.extend(StiffnessSample(float(z), float(d), float(max(fi, 0.0))) for d, fi in zip(deltas, f))
    return out


def shipped_samples() -> list[StiffnessSample]:
    text = resources.files("aerialdelta.data").joinpath("stiffness_synthetic.csv").read_text()
    return read_samples_csv(io.StringIO(text))


def default_model() -> StiffnessModel:
    return fit_samples(shipped_samples()).model
