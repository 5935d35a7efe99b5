"""Wigner functions and homodyne quadrature distributions of Fock-basis states."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, NumericalConsistencyError
from .fock import CONVENTION, DensityMatrix

GRID_HALF_WIDTH = 5.0
GRID_POINTS = 201
PDF_NEGATIVE_TOL = -1e-12


class GridSupportWarning(UserWarning):
    pass


def default_axis(half_width: float = GRID_HALF_WIDTH, points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(-half_width, half_width, points)


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Oscillator eigenfunctions psi_0..psi_nmax at x, shape (nmax + 1, len(x)).

    Normalized recurrence psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1};
    every term stays O(1) so no factorials or overflow appear.
    """
    x = np.asarray(x, float)
    out = np.zeros((nmax + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_function_derivatives(psi: np.ndarray) -> np.ndarray:
    """d/dx psi_n = (sqrt(n) psi_{n-1} - sqrt(n+1) psi_{n+1}) / sqrt(2), for n < len(psi) - 1."""
    nmax = psi.shape[0] - 2
    out = np.zeros((nmax + 1,) + psi.shape[1:])
    for n in range(nmax + 1):
        lower = math.sqrt(n) * psi[n - 1] if n > 0 else 0.0
        out[n] = (lower - math.sqrt(n + 1) * psi[n + 1]) / math.sqrt(2.0)
    return out


def _laguerre_table(nmax: int, alpha: int, u: np.ndarray) -> np.ndarray:
    """L_k^alpha(u) for k = 0..nmax via the three-term recurrence."""
    out = np.empty((nmax + 1,) + u.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 1.0 + alpha - u
    for k in range(1, nmax):
        out[k + 1] = ((2 * k + 1 + alpha - u) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


@dataclass(frozen=True)
class WignerGrid:
    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # values[i, j] = W(x_i, p_j)

    @property
    def norm_estimate(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.p_axis, axis=1), self.x_axis))

    @property
    def minimum(self) -> float:
        return float(self.values.min())

    def value_at(self, x: float, p: float) -> float:
        i = int(np.argmin(np.abs(self.x_axis - x)))
        j = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[i, j])

    def to_csv(self, path: str | Path, header: str = "") -> None:
        lines = [f"# wigner convention={CONVENTION} rows=x cols=p norm_estimate={self.norm_estimate!r}"
                 + (f" {header}" if header else "")]
        lines.append("x," + ",".join(repr(float(v)) for v in self.x_axis))
        lines.append("p," + ",".join(repr(float(v)) for v in self.p_axis))
        for row in self.values:
            lines.append(",".join(repr(float(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "WignerGrid":
        rows = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
        if len(rows) < 3 or not rows[0].startswith("x,") or not rows[1].startswith("p,"):
            raise InputError(f"{path}: not a Wigner grid CSV")
        x = np.array(rows[0].split(",")[1:], float)
        p = np.array(rows[1].split(",")[1:], float)
        vals = np.array([r.split(",") for r in rows[2:]], float)
        if vals.shape != (x.size, p.size):
            raise InputError(f"{path}: value matrix {vals.shape} does not match axes")
        return cls(x, p, vals)

    def to_json_dict(self) -> dict:
        return {"x": self.x_axis.tolist(), "p": self.p_axis.tolist(),
                "w": self.values.tolist(), "convention": CONVENTION}

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n")


def wigner_from_density(rho: DensityMatrix, x_axis=None, p_axis=None) -> WignerGrid:
    """W(x, p) = sum_mn rho_mn W_{|m><n|}(x, p) with Laguerre-polynomial kernels.

    For m >= n the kernel is
        (-1)^n / pi * sqrt(2^(m-n) n!/m!) (x - i p)^(m-n) exp(-r^2) L_n^(m-n)(2 r^2),
    and the m < n kernels are complex conjugates.
    """
    x_axis = default_axis() if x_axis is None else np.asarray(x_axis, float)
    p_axis = default_axis() if p_axis is None else np.asarray(p_axis, float)
    m_el = rho.elements
    dim = rho.dim
    mean_n = float(np.real(np.diag(m_el)) @ np.arange(dim))
    reach = 2.0 * math.sqrt(max(mean_n, 0.0)) + 3.0
    if min(np.abs(x_axis).max(), np.abs(p_axis).max()) < reach:
        warnings.warn(f"Wigner grid half-width below {reach:.2f} may clip the state",
                      GridSupportWarning, stacklevel=2)

    X, P = np.meshgrid(x_axis, p_axis, indexing="ij")
    r2 = X * X + P * P
    gauss = np.exp(-r2) / np.pi
    z = X - 1j * P
    w = np.zeros(X.shape, complex)
    for d in range(dim):
        lag = _laguerre_table(dim - 1 - d, d, 2.0 * r2)
        zd = z**d
        for n in range(dim - d):
            m = n + d
            coeff = (-1) ** n * math.exp(0.5 * (d * math.log(2.0) + math.lgamma(n + 1)
                                                - math.lgamma(m + 1)))
            kern = coeff * zd * lag[n]
            if d == 0:
                w += m_el[n, n] * kern
            else:
                # rho_mn K + rho_nm conj(K); real only when rho is Hermitian
                w += m_el[m, n] * kern + m_el[n, m] * kern.conj()
    w *= gauss
    imag = float(np.abs(w.imag).max())
    if imag > 1e-10:
        raise NumericalConsistencyError(f"Wigner function has imaginary residue {imag:.3g}")
    return WignerGrid(x_axis, p_axis, w.real)


@dataclass(frozen=True)
class QuadraturePdf:
    theta: float
    x_axis: np.ndarray
    density: np.ndarray
    cumulative: np.ndarray

    @property
    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.x_axis))

    def moments(self) -> tuple[float, float]:
        mean = float(np.trapezoid(self.x_axis * self.density, self.x_axis))
        var = float(np.trapezoid((self.x_axis - mean) ** 2 * self.density, self.x_axis))
        return mean, var


def _harmonic_tables(rho: DensityMatrix, x_axis: np.ndarray) -> list[np.ndarray]:
    """c_k(x) = sum_{n - m = k} rho_mn psi_m psi_n for k = 0..dim-1."""
    psi = hermite_functions(rho.dim - 1, x_axis)
    m_el = rho.elements
    out = []
    for k in range(rho.dim):
        acc = np.zeros(x_axis.shape, complex)
        for m in range(rho.dim - k):
            acc += m_el[m, m + k] * psi[m] * psi[m + k]
        out.append(acc)
    return out


def _pdf_from_tables(tables: list[np.ndarray], theta: float) -> np.ndarray:
    dens = tables[0].real.copy()
    for k in range(1, len(tables)):
        dens += 2.0 * np.real(tables[k] * np.exp(1j * k * theta))
    return dens


def _finish_pdf(theta: float, x_axis: np.ndarray, dens: np.ndarray) -> QuadraturePdf:
    low = float(dens.min())
    if low < PDF_NEGATIVE_TOL:
        raise NumericalConsistencyError(
            f"quadrature density negative ({low:.3g}) at theta={theta}; is rho a valid state?")
    dens = np.clip(dens, 0.0, None)
    cells = 0.5 * (dens[1:] + dens[:-1]) * np.diff(x_axis)
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    return QuadraturePdf(float(theta), x_axis, dens, cum)


def quadrature_pdf(rho: DensityMatrix, theta: float, x_axis=None) -> QuadraturePdf:
    """pr(x, theta) = sum_mn rho_mn psi_m(x) psi_n(x) exp(i (n - m) theta).

    theta is the local-oscillator phase: the measured quadrature is
    x cos(theta) + p sin(theta).
    """
    x_axis = default_axis() if x_axis is None else np.asarray(x_axis, float)
    return _finish_pdf(theta, x_axis, _pdf_from_tables(_harmonic_tables(rho, x_axis), theta))


def quadrature_pdfs(rho: DensityMatrix, thetas, x_axis) -> list[QuadraturePdf]:
    """Batch version of quadrature_pdf sharing the Hermite-function tables."""
    x_axis = np.asarray(x_axis, float)
    tables = _harmonic_tables(rho, x_axis)
    return [_finish_pdf(th, x_axis, _pdf_from_tables(tables, th)) for th in thetas]


def rotate_state(rho: DensityMatrix, phi: float) -> DensityMatrix:
    """exp(i phi n) rho exp(-i phi n)."""
    ph = np.exp(1j * phi * np.arange(rho.dim))
    return DensityMatrix(ph[:, None] * rho.elements * ph.conj()[None, :], rho.weight)
