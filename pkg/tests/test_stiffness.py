import io
import warnings

import numpy as np
import pytest
from hypothesis import given

from aerialdelta.errors import DegenerateData
from aerialdelta.stiffness import (
    StiffnessModel,
    StiffnessRangeWarning,
    StiffnessSample,
    default_model,
    fit_linear_spring,
    fit_polynomial,
    fit_samples,
    read_samples_csv,
    shipped_samples,
    spring_force,
    stiffness_at,
    synthetic_samples,
    synthetic_truth,
    write_samples_csv,
)

from conftest import finite


def quadratic_through(points):
    z, k = np.array(points).T
    return np.linalg.solve(np.vander(z, 3, increasing=True), k)


def test_exact_spring():
    d = np.linspace(0.001, 0.01, 10)
    assert fit_linear_spring(d, 100.0 * d) == pytest.approx(100.0, rel=1e-12)


def test_noisy_spring():
    rng = np.random.default_rng(11)
    d = np.linspace(0.01, 0.1, 20)
    f = 200.0 * d + rng.normal(0.0, 1.0, d.size)
    assert fit_linear_spring(d, f) == pytest.approx(200.0, abs=5.0)


def test_spring_needs_data():
    with pytest.raises(DegenerateData):
        fit_linear_spring([0.01], [1.0])
    with pytest.raises(DegenerateData):
        fit_linear_spring([0.0, 0.0], [0.0, 0.0])


def test_exact_quadratic_recovery():
    c = (35.7, 52.8, 6432.7)
    z = np.linspace(0.08, 0.195, 9)
    m = fit_polynomial(z, c[0] + c[1] * z + c[2] * z * z)
    np.testing.assert_allclose(m.coefficients, c, rtol=1e-9)
    assert (m.z_lo, m.z_hi) == (0.08, 0.195)


@given(finite(-100, 400), finite(-2000, 2000), finite(-2e4, 2e4))
def test_quadratic_recovery_property(c0, c1, c2):
    z = np.linspace(0.08, 0.195, 7)
    k = c0 + c1 * z + c2 * z * z
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StiffnessRangeWarning)
        m = fit_polynomial(z, k)
    fitted = m.c0 + m.c1 * z + m.c2 * z * z
    assert np.abs(fitted - k).max() <= 1e-9 * max(1.0, np.abs(k).max())


def test_polynomial_needs_three_heights():
    with pytest.raises(DegenerateData):
        fit_polynomial([0.1, 0.1, 0.2], [100.0, 100.0, 200.0])


def test_non_positive_fit_warns():
    with pytest.warns(StiffnessRangeWarning):
        fit_polynomial([0.1, 0.15, 0.2], [10.0, -5.0, 10.0])


def test_shipped_dataset_matches_generator():
    buf = io.StringIO()
    write_samples_csv(synthetic_samples(), buf)
    assert shipped_samples() == read_samples_csv(io.StringIO(buf.getvalue()))


def test_shipped_fit_endpoints():
    m = default_model()
    assert m.evaluate(0.080)[0] == pytest.approx(80.0, rel=0.02)
    assert m.evaluate(0.195)[0] == pytest.approx(290.0, rel=0.02)
    assert m.is_positive()


def test_reverse_orientation_fit_endpoints():
    # a softening curve (stiff when retracted) is fitted just as well
    c = quadratic_through([(0.080, 290.0), (0.1375, 165.0), (0.195, 80.0)])
    rng = np.random.default_rng(5)
    samples = []
    for z in np.arange(0.080, 0.1951, 0.005):
        k = c[0] + c[1] * z + c[2] * z * z
        d = np.arange(1, 11) * 1e-3
        samples += [StiffnessSample(z, di, fi) for di, fi in zip(d, k * d + rng.normal(0, 0.02, d.size))]
    m = fit_samples(samples).model
    assert m.evaluate(0.080)[0] == pytest.approx(290.0, rel=0.02)
    assert m.evaluate(0.195)[0] == pytest.approx(80.0, rel=0.02)


def test_fit_residuals_are_reported():
    fit = fit_samples(shipped_samples())
    assert len(fit.heights) == len(fit.stiffness) == len(fit.spring_rms) == len(fit.poly_residuals) == 24
    for z, k, r in zip(fit.heights, fit.stiffness, fit.poly_residuals):
        assert stiffness_at(fit.model, z) == pytest.approx(k - r, abs=1e-9)
    assert max(fit.spring_rms) < 0.05


def test_clamping_outside_range_warns():
    m = synthetic_truth()
    with pytest.warns(StiffnessRangeWarning):
        assert stiffness_at(m, 0.05) == pytest.approx(80.0)
    with pytest.warns(StiffnessRangeWarning):
        assert stiffness_at(m, 0.3) == pytest.approx(290.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        stiffness_at(m, 0.1)


def test_spring_force_examples():
    flat290 = StiffnessModel(290.0, 0.0, 0.0, 0.08, 0.195)
    flat80 = StiffnessModel(80.0, 0.0, 0.0, 0.08, 0.195)
    assert spring_force(flat290, 0.1, 0.0) == 0.0
    assert spring_force(flat290, 0.1, 0.0138) == pytest.approx(4.0, abs=0.01)
    assert spring_force(flat80, 0.1, 0.025) == pytest.approx(2.0, abs=1e-12)
    assert spring_force(flat80, 0.1, -0.01) == 0.0


@given(finite(0.08, 0.195), finite(0.0, 0.05), finite(0.0, 5.0))
def test_spring_force_is_linear_in_deflection(z, d, s):
    m = synthetic_truth()
    assert spring_force(m, z, s * d) == pytest.approx(s * spring_force(m, z, d), rel=1e-12, abs=1e-15)


def test_csv_roundtrip_and_validation():
    samples = synthetic_samples()[:15]
    buf = io.StringIO()
    write_samples_csv(samples, buf)
    back = read_samples_csv(io.StringIO(buf.getvalue()))
    for a, b in zip(samples, back):
        assert (a.z, a.delta, a.force) == pytest.approx((b.z, b.delta, b.force), rel=1e-8)
    with pytest.raises(DegenerateData):
        read_samples_csv(io.StringIO("z,delta\n0.1,0.01\n"))
    with pytest.raises(DegenerateData):
        read_samples_csv(io.StringIO("z,delta_z,F_z\n0.1,-0.01,1.0\n"))
