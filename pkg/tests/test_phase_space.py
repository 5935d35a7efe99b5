import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import RegularGridInterpolator
from scipy.special import eval_hermite, factorial

from qcatalysis.channels import ExperimentParams, catalysis_pipeline
from qcatalysis.errors import InputError, NumericalConsistencyError
from qcatalysis.fock import (
    DensityMatrix,
    coherent_state,
    displaced_fock,
    fock_state,
    kitten_state,
    mixed_single_photon,
    vacuum,
)
from qcatalysis.phase_space import (
    GridSupportWarning,
    WignerGrid,
    hermite_function_derivatives,
    hermite_functions,
    quadrature_pdf,
    quadrature_pdfs,
    rotate_state,
    wigner_from_density,
)

from conftest import random_density

# several checks use deliberately small or single-point grids
pytestmark = pytest.mark.filterwarnings("ignore::qcatalysis.phase_space.GridSupportWarning")


def test_hermite_functions_against_polynomials():
    x = np.linspace(-6, 6, 101)
    psi = hermite_functions(12, x)
    for n in range(13):
        ref = eval_hermite(n, x) * np.exp(-x * x / 2) / math.sqrt(2.0**n * factorial(n) * math.sqrt(math.pi))
        np.testing.assert_allclose(psi[n], ref, atol=1e-12)


def test_hermite_derivatives_finite_difference():
    x = np.linspace(-4, 4, 2001)
    psi = hermite_functions(6, x)
    d = hermite_function_derivatives(psi)
    np.testing.assert_allclose(d[:, 1:-1], np.gradient(psi[:6], x, axis=1)[:, 1:-1], atol=1e-4)


def test_wigner_extrema():
    origin = np.array([0.0])
    assert wigner_from_density(vacuum(4), origin, origin).values[0, 0] == pytest.approx(1 / math.pi, abs=1e-12)
    one = fock_state(1, 4).projector()
    assert wigner_from_density(one, origin, origin).values[0, 0] == pytest.approx(-1 / math.pi, abs=1e-12)
    two = fock_state(2, 4).projector()
    assert wigner_from_density(two, origin, origin).values[0, 0] == pytest.approx(1 / math.pi, abs=1e-12)


def test_vacuum_gaussian():
    w = wigner_from_density(vacuum(3))
    X, P = np.meshgrid(w.x_axis, w.p_axis, indexing="ij")
    np.testing.assert_allclose(w.values, np.exp(-X**2 - P**2) / math.pi, atol=1e-14)


@pytest.mark.parametrize("make", [
    lambda: vacuum(8),
    lambda: fock_state(3, 8).projector(),
    lambda: coherent_state(1.0 + 0.5j, 15).projector(),
    lambda: mixed_single_photon(0.58, 6),
])
def test_wigner_normalization(make):
    assert wigner_from_density(make()).norm_estimate == pytest.approx(1.0, abs=1e-3)


def test_displaced_fock_translation():
    beta = 0.4 - 0.3j
    axis = np.linspace(-4, 4, 81)
    shifted = wigner_from_density(displaced_fock(1, beta, 25).projector(), axis, axis)
    sx, sp = math.sqrt(2) * beta.real, math.sqrt(2) * beta.imag
    ref = wigner_from_density(fock_state(1, 4).projector(), axis - sx, axis - sp)
    assert np.abs(shifted.values - ref.values).max() < 1e-8


def test_support_warning():
    with pytest.warns(GridSupportWarning):
        wigner_from_density(vacuum(3), np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))


def test_non_hermitian_rejected():
    bad = DensityMatrix(np.array([[0.5, 0.3j], [0.3j, 0.5]]))
    with pytest.raises(NumericalConsistencyError):
        wigner_from_density(bad, np.array([0.5]), np.array([0.5]))


def test_wigner_csv_json_roundtrip(tmp_path):
    w = wigner_from_density(kitten_state(0.3, 0.3, 5).projector(), np.linspace(-3, 3, 7),
                            np.linspace(-2, 2, 5))
    w.to_csv(tmp_path / "w.csv")
    back = WignerGrid.from_csv(tmp_path / "w.csv")
    np.testing.assert_array_equal(back.values, w.values)
    np.testing.assert_array_equal(back.p_axis, w.p_axis)
    assert set(w.to_json_dict()) >= {"x", "p", "w"}
    (tmp_path / "bad.csv").write_text("1,2\n")
    with pytest.raises(InputError):
        WignerGrid.from_csv(tmp_path / "bad.csv")


def test_vacuum_and_coherent_pdfs():
    for theta in (0.0, 1.0, 4.0):
        mean, var = quadrature_pdf(vacuum(4), theta).moments()
        assert mean == pytest.approx(0.0, abs=1e-12) and var == pytest.approx(0.5, abs=1e-6)
    pdf = quadrature_pdf(coherent_state(0.7, 15).projector(), 0.0)
    mean, var = pdf.moments()
    assert mean == pytest.approx(math.sqrt(2) * 0.7, abs=1e-6)
    assert var == pytest.approx(0.5, abs=1e-6)
    assert pdf.integral == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(pdf.cumulative) >= 0)


def test_coherent_phase_direction():
    # at theta = pi/2 the measured quadrature is p, whose mean is sqrt(2) Im(alpha)
    pdf = quadrature_pdf(coherent_state(0.5j, 15).projector(), math.pi / 2)
    assert pdf.moments()[0] == pytest.approx(math.sqrt(2) * 0.5, abs=1e-6)


def test_invalid_state_pdf_rejected():
    bad = DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(NumericalConsistencyError):
        quadrature_pdf(bad, 0.0)


def _radon(w: WignerGrid, theta: float, xs: np.ndarray) -> np.ndarray:
    interp = RegularGridInterpolator((w.x_axis, w.p_axis), w.values, method="cubic",
                                     bounds_error=False, fill_value=0.0)
    s = np.linspace(-6, 6, 1201)
    c, sn = math.cos(theta), math.sin(theta)
    X = xs[:, None] * c - s[None, :] * sn
    P = xs[:, None] * sn + s[None, :] * c
    vals = interp(np.stack([X, P], axis=-1))
    return np.trapezoid(vals, s, axis=1)


@pytest.mark.parametrize("theta", [0.0, 0.7, 2.2])
def test_pdf_is_radon_transform(theta):
    rho = catalysis_pipeline(ExperimentParams()).rho_at_detector
    axis = np.linspace(-6, 6, 241)
    w = wigner_from_density(rho, axis, axis)
    xs = np.linspace(-3, 3, 25)
    ref = _radon(w, theta, xs)
    pdf = quadrature_pdf(rho, theta, xs)
    assert np.abs(pdf.density - ref).max() < 1e-4


def test_marginal_over_p():
    rho = DensityMatrix(random_density(np.random.default_rng(3), 4))
    axis = np.linspace(-7, 7, 561)
    w = wigner_from_density(rho, axis, axis)
    marginal = np.trapezoid(w.values, w.p_axis, axis=1)
    pdf = quadrature_pdf(rho, 0.0, axis)
    assert np.abs(marginal - pdf.density).max() < 1e-4


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_phase_covariance(phi, theta, seed):
    rho = DensityMatrix(random_density(np.random.default_rng(seed), 5))
    x = np.linspace(-5, 5, 101)
    rotated = quadrature_pdf(rotate_state(rho, phi), theta, x).density
    original = quadrature_pdf(rho, theta - phi, x).density
    np.testing.assert_allclose(rotated, original, atol=1e-12)


def test_batch_matches_single():
    rho = DensityMatrix(random_density(np.random.default_rng(8), 5))
    x = np.linspace(-5, 5, 51)
    thetas = [0.1, 1.3, 5.0]
    for th, pdf in zip(thetas, quadrature_pdfs(rho, thetas, x)):
        np.testing.assert_array_equal(pdf.density, quadrature_pdf(rho, th, x).density)


def test_catalysis_state_negativity():
    t = math.sqrt(0.08)
    params = ExperimentParams(alpha=t, eta_photon=1.0, eta_spd=1.0, eta_hd=1.0)
    rho = catalysis_pipeline(params).rho_ideal_conditioned
    assert wigner_from_density(rho).minimum < -0.01
