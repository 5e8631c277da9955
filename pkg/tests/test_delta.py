import io
import math

import numpy as np
import pytest
from hypothesis import given
from scipy.optimize import fsolve

from aerialdelta.delta import (
    WORKSPACE_COLUMNS,
    DeltaGeometry,
    distal_length,
    forward_kinematics,
    inverse_kinematics,
    three_sphere_intersection,
    workspace_sample,
    write_workspace_csv,
)
from aerialdelta.errors import (
    AmbiguousSolution,
    JointLimit,
    NoConvergence,
    OutOfParallelogramRange,
    UnreachableTarget,
)
from aerialdelta.se3 import rot_z

from conftest import finite

GEOM = DeltaGeometry()


def classical_axis_ik(z, geom):
    """Textbook delta IK for a target on the central axis: circle intersection in the leg plane.

    The hip sits at (r_DE, 0) in the (reach, height) plane, the knee lies l_p from it and
    l_m + 2 l_e from the target (0, z); the outer intersection is the knee-out pose.
    """
    L = geom.l_m + 2 * geom.l_e
    hip = np.array([geom.r_DE, 0.0])
    tgt = np.array([0.0, z])
    d = np.linalg.norm(tgt - hip)
    a = (geom.l_p**2 - L**2 + d * d) / (2 * d)
    h = math.sqrt(geom.l_p**2 - a * a)
    u = (tgt - hip) / d
    mid = hip + a * u
    perp = np.array([-u[1], u[0]])
    knees = [mid + h * perp, mid - h * perp]
    knee = max(knees, key=lambda k: k[0])
    return math.atan2(knee[1], knee[0] - geom.r_DE)


def classical_fk(theta, geom, L):
    centres = []
    for i, t in enumerate(theta):
        local = np.array([0.0, geom.r_DE + geom.l_p * math.cos(t), geom.l_p * math.sin(t)])
        centres.append(rot_z(2 * math.pi * i / 3) @ local)
    f = lambda p: [np.dot(p - c, p - c) - L * L for c in centres]
    return fsolve(f, [0.0, 0.0, 0.15], xtol=1e-13)


def random_targets(n, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = rng.uniform([-0.06, -0.06, 0.08], [0.06, 0.06, 0.19])
        try:
            out.append((p, inverse_kinematics(p, GEOM)))
        except (UnreachableTarget, JointLimit, OutOfParallelogramRange):
            continue
    return out


def test_distal_length_examples():
    assert distal_length([0, 0, 0.1], 1, GEOM) == pytest.approx(GEOM.l_m + 2 * GEOM.l_e, abs=1e-15)
    end = distal_length([GEOM.l_m, 0, 0.1], 0, GEOM)
    assert end == pytest.approx(math.sqrt(GEOM.l_m**2 + 4 * GEOM.l_e**2), abs=1e-15)
    with pytest.raises(OutOfParallelogramRange):
        distal_length([GEOM.l_m + 1e-6, 0, 0.1], 0, GEOM)


def test_parallel_component_uses_the_hinge_of_each_leg():
    # leg 2's hinge is leg 1's rotated by 120 degrees
    p = rot_z(2 * math.pi / 3) @ np.array([0.05, 0.0, 0.1])
    assert distal_length(p, 1, GEOM) == pytest.approx(distal_length([0.05, 0, 0.1], 0, GEOM), abs=1e-15)


@pytest.mark.parametrize("z", [0.08, 0.1, 0.15, 0.195])
def test_central_axis_matches_classical_delta(z):
    theta = inverse_kinematics([0.0, 0.0, z], GEOM)
    assert np.ptp(theta) <= 1e-12
    assert theta[0] == pytest.approx(classical_axis_ik(z, GEOM), abs=1e-9)


def test_fk_of_central_target():
    theta = inverse_kinematics([0.0, 0.0, 0.15], GEOM)
    np.testing.assert_allclose(forward_kinematics(theta, GEOM), [0.0, 0.0, 0.15], atol=1e-6)


@given(finite(-0.5, 1.2))
def test_equal_angles_land_on_the_axis(t):
    p = forward_kinematics([t, t, t], GEOM)
    assert abs(p[0]) <= 1e-9 and abs(p[1]) <= 1e-9


def test_ideal_delta_limit_matches_three_sphere_solution():
    geom = DeltaGeometry(l_e=1e-12)
    for theta in ([0.3, 0.5, 0.1], [0.0, 0.0, 0.0], [-0.4, 0.2, 0.6]):
        np.testing.assert_allclose(forward_kinematics(theta, geom), classical_fk(theta, geom, geom.l_m), atol=1e-9)


def test_ik_fk_roundtrip_over_random_targets():
    worst_p = worst_t = 0.0
    for p, theta in random_targets(1000):
        q = forward_kinematics(theta, GEOM)
        worst_p = max(worst_p, np.linalg.norm(q - p))
        worst_t = max(worst_t, np.abs(inverse_kinematics(q, GEOM) - theta).max())
    assert worst_p <= 1e-6
    assert worst_t <= 1e-6


@given(finite(-0.05, 0.05), finite(-0.05, 0.05), finite(0.09, 0.17))
def test_rotation_by_leg_spacing_permutes_angles(x, y, z):
    p = np.array([x, y, z])
    try:
        theta = inverse_kinematics(p, GEOM, check_limits=False)
    except (UnreachableTarget, OutOfParallelogramRange):
        return
    turned = inverse_kinematics(rot_z(2 * math.pi / 3) @ p, GEOM, check_limits=False)
    np.testing.assert_allclose(turned, np.roll(theta, 1), atol=1e-12)


def test_angles_are_continuous_along_a_line():
    a, b = np.array([-0.04, 0.03, 0.09]), np.array([0.05, -0.02, 0.17])
    path = [inverse_kinematics(a + s * (b - a), GEOM) for s in np.linspace(0.0, 1.0, 2001)]
    jumps = np.abs(np.diff(np.array(path), axis=0)).max()
    assert jumps < 2e-3


def test_unreachable_and_invalid_targets():
    with pytest.raises(UnreachableTarget):
        inverse_kinematics([0.0, 0.0, 0.5], GEOM)
    with pytest.raises(UnreachableTarget):
        inverse_kinematics([0.0, 0.0, -0.1], GEOM)
    with pytest.raises(UnreachableTarget):
        inverse_kinematics([math.nan, 0.0, 0.1], GEOM)
    with pytest.raises(OutOfParallelogramRange):
        inverse_kinematics([0.13, 0.0, 0.1], GEOM)


def test_joint_limits():
    narrow = DeltaGeometry(theta_min=-0.1, theta_max=0.1)
    with pytest.raises(JointLimit):
        inverse_kinematics([0.0, 0.0, 0.15], narrow)
    theta = inverse_kinematics([0.0, 0.0, 0.15], narrow, check_limits=False)
    assert theta[0] > 0.1


def test_fk_failures():
    with pytest.raises(NoConvergence):
        forward_kinematics([0.3, 0.5, 0.1], GEOM, max_iter=0)
    with pytest.raises(AmbiguousSolution):
        three_sphere_intersection(np.array([[0.1, 0, 0], [-0.05, 0.08, 0], [-0.05, -0.08, 0]]), 0.01)
    with pytest.raises(AmbiguousSolution):
        three_sphere_intersection(np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]]), 5.0)


def test_geometry_validation():
    with pytest.raises(ValueError):
        DeltaGeometry(r_D=0.02, r_E=0.03)
    with pytest.raises(ValueError):
        DeltaGeometry(l_p=0.0)
    with pytest.raises(ValueError):
        DeltaGeometry(theta_min=1.0, theta_max=0.0)


def test_workspace_slices():
    xs = np.linspace(-0.08, 0.08, 17)
    low = workspace_sample(GEOM, xs, xs, [0.08])
    assert any(p.reachable for p in low)
    assert not any(p.reachable for p in workspace_sample(GEOM, xs, xs, [0.0]))
    counts = [sum(p.reachable for p in workspace_sample(GEOM, xs, xs, [z])) for z in np.linspace(0.1, 0.2, 11)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[0] > counts[-1]


def test_workspace_csv():
    pts = workspace_sample(GEOM, [0.0, 0.2], [0.0], [0.15])
    buf = io.StringIO()
    write_workspace_csv(pts, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(WORKSPACE_COLUMNS)
    ok, bad = lines[1].split(","), lines[2].split(",")
    assert ok[3] == "1" and ok[-1] == ""
    assert bad[3] == "0" and bad[4:7] == ["", "", ""] and bad[-1] == "OutOfParallelogramRange"
