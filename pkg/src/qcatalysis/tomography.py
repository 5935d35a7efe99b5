"""State reconstruction from homodyne records.

Two estimators, both evaluated sample by sample without histogramming:

* filtered back-projection of the Wigner function with a sharp frequency
  cutoff ``k_c``;
* pattern-function sampling of the Fock-basis density matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CoverageError, InputError, NumericalError
from .fock import DensityMatrix
from .homodyne import QuadratureRecord
from .phase_space import WignerGrid, hermite_function_derivatives, hermite_functions

DEFAULT_CUTOFF = 6.4
MIN_PHASE_BINS = 16
PATTERN_X_MAX = 10.0
PATTERN_STEP = 1e-3
SE_WARN = 0.2
_CHUNK = 4096


class StatisticsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ReconstructionSettings:
    cutoff: float = DEFAULT_CUTOFF
    dim: int = 6
    binning: int = 64
    x_axis: np.ndarray = field(default_factory=lambda: np.linspace(-4.0, 4.0, 41))
    p_axis: np.ndarray = field(default_factory=lambda: np.linspace(-4.0, 4.0, 41))
    project_psd: bool = False

    def __post_init__(self):
        if not self.cutoff > 0:
            raise InputError("cutoff must be positive")
        if int(self.dim) < 2:
            raise InputError("reconstruction dim must be >= 2")
        if int(self.binning) < MIN_PHASE_BINS:
            raise InputError(f"binning must be >= {MIN_PHASE_BINS}")
        object.__setattr__(self, "x_axis", np.asarray(self.x_axis, float))
        object.__setattr__(self, "p_axis", np.asarray(self.p_axis, float))


def check_phase_coverage(record: QuadratureRecord, bins: int = 64) -> int:
    """Number of occupied bins of theta mod pi; raises CoverageError below MIN_PHASE_BINS."""
    folded = np.mod(record.thetas, math.pi)
    idx = np.minimum((folded / math.pi * bins).astype(int), bins - 1)
    occupied = int(np.unique(idx).size)
    if occupied < MIN_PHASE_BINS:
        raise CoverageError(
            f"record occupies {occupied} of {bins} phase bins over [0, pi); "
            f"need at least {MIN_PHASE_BINS}")
    return occupied


def fbp_kernel(z, cutoff: float) -> np.ndarray:
    """K(z) = int_0^kc k cos(kz) dk = (cos(kc z) + kc z sin(kc z) - 1) / z^2."""
    z = np.asarray(z, float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    u = cutoff * z
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (np.cos(u) + u * np.sin(u) - 1.0) / (z * z)
    small = np.flatnonzero(np.abs(u) < 1e-2)
    if small.size:
        # removable singularity: kc^2 (1/2 - u^2/8 + u^4/144 - u^6/5760)
        u2 = u.flat[small] ** 2
        out.flat[small] = cutoff**2 * (0.5 - u2 / 8.0 + u2 * u2 / 144.0 - u2**3 / 5760.0)
    return out[0] if scalar else out


def fbp_wigner(record: QuadratureRecord, settings: ReconstructionSettings | None = None) -> WignerGrid:
    """Inverse Radon transform by back-projecting every sample.

    W(x, p) = (1/2pi) * mean_i K(x cos theta_i + p sin theta_i - x_i), which is
    the usual (1/2pi^2) int_0^pi dtheta int dx' pr(x', theta) K(...) with the
    phase integral replaced by the sample mean over a full turn.
    """
    settings = settings or ReconstructionSettings()
    check_phase_coverage(record, settings.binning)
    X, P = np.meshgrid(settings.x_axis, settings.p_axis, indexing="ij")
    gx, gp = X.ravel(), P.ravel()
    acc = np.zeros(gx.size)
    c, s, xs = np.cos(record.thetas), np.sin(record.thetas), record.xs
    for lo in range(0, xs.size, _CHUNK):
        hi = lo + _CHUNK
        z = np.outer(gx, c[lo:hi]) + np.outer(gp, s[lo:hi]) - xs[lo:hi]
        acc += fbp_kernel(z, settings.cutoff).sum(axis=1)
    values = acc.reshape(X.shape) / (2.0 * math.pi * xs.size)
    return WignerGrid(settings.x_axis, settings.p_axis, values)


@lru_cache(maxsize=8)
def _irregular_solutions(nmax: int, x_max: float, points: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Irregular oscillator solutions phi_n and phi_n' on [0, x_max] for n <= nmax.

    phi_n has parity opposite to psi_n, which removes any admixture of the
    regular solution, and Wronskian psi_n phi_n' - psi_n' phi_n = 2. Outward
    integration from the origin follows the dominant (growing) solution and
    is therefore stable.
    """
    grid = np.linspace(0.0, x_max, points)
    at0 = hermite_functions(nmax + 1, np.array([0.0]))[:, 0]
    d0 = hermite_function_derivatives(hermite_functions(nmax + 1, np.array([0.0])))[:, 0]
    phi = np.empty((nmax + 1, points))
    dphi = np.empty((nmax + 1, points))
    for n in range(nmax + 1):
        energy2 = 2.0 * n + 1.0
        if n % 2 == 0:
            y0 = [0.0, 2.0 / at0[n]]
        else:
            y0 = [-2.0 / d0[n], 0.0]
        sol = solve_ivp(lambda x, y, e=energy2: [y[1], (x * x - e) * y[0]],
                        (0.0, x_max), y0, t_eval=grid, method="DOP853",
                        rtol=1e-12, atol=1e-20)
        if not sol.success:
            raise NumericalError(f"irregular solution n={n} failed: {sol.message}")
        phi[n], dphi[n] = sol.y
    return grid, phi, dphi


@lru_cache(maxsize=8)
def pattern_function_table(dim: int, x_max: float = PATTERN_X_MAX,
                           step: float = PATTERN_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Tabulate f_mn(x) = d/dx[psi_m(x) phi_n(x)] (m <= n) on x in [0, x_max].

    Returns (grid, table) with table[m, n] symmetric in (m, n). f_mn has
    parity (-1)^(m+n), which fixes the values for negative x.
    """
    points = int(round(x_max / step)) + 1
    grid, phi, dphi = _irregular_solutions(dim - 1, x_max, points)
    psi = hermite_functions(dim, grid)
    dpsi = hermite_function_derivatives(psi)
    table = np.empty((dim, dim, points))
    for m in range(dim):
        for n in range(m, dim):
            table[m, n] = dpsi[m] * phi[n] + psi[m] * dphi[n]
            table[n, m] = table[m, n]
    table.setflags(write=False)
    return grid, table


def pattern_function(m: int, n: int, x, dim: int | None = None) -> np.ndarray:
    """Evaluate f_mn at arbitrary x (|x| <= PATTERN_X_MAX)."""
    dim = dim or max(m, n) + 1
    grid, table = pattern_function_table(dim)
    return _eval_pattern(grid, table[m, n], (-1) ** (m + n), np.asarray(x, float))


def _eval_pattern(grid, values, parity, x):
    ax = np.abs(x)
    out = np.interp(ax, grid, values)
    if parity < 0:
        out = np.where(x < 0, -out, out)
    return out


@dataclass(frozen=True)
class DensityEstimate:
    rho: DensityMatrix
    stderr: np.ndarray
    n_samples: int

    def significance(self, m: int, n: int) -> float:
        se = self.stderr[m, n]
        return float(abs(self.rho.elements[m, n]) / se) if se > 0 else math.inf


def pattern_density(record: QuadratureRecord,
                    settings: ReconstructionSettings | None = None) -> DensityEstimate:
    """rho_mn = mean_i f_mn(x_i) exp(i (m - n) theta_i), with per-element standard errors.

    The phase factor pairs with pr(x, theta) = sum rho_mn psi_m psi_n
    exp(i (n - m) theta) from the phase_space module.
    """
    settings = settings or ReconstructionSettings()
    check_phase_coverage(record, settings.binning)
    dim = int(settings.dim)
    xs, th = record.xs, record.thetas
    if np.abs(xs).max() > PATTERN_X_MAX:
        raise InputError(f"|x| exceeds the tabulated pattern-function range {PATTERN_X_MAX}")
    grid, table = pattern_function_table(dim)
    n = xs.size
    est = np.zeros((dim, dim), complex)
    se = np.zeros((dim, dim))
    for m in range(dim):
        for k in range(m, dim):
            f = _eval_pattern(grid, table[m, k], (-1) ** (m + k), xs)
            if k == m:
                est[m, m] = f.mean()
                se[m, m] = f.std() / math.sqrt(n)
                continue
            z = f * np.exp(1j * (m - k) * th)
            est[m, k] = z.mean()
            est[k, m] = est[m, k].conjugate()
            se[m, k] = se[k, m] = math.sqrt((z.real.var() + z.imag.var()) / n)
    est = 0.5 * (est + est.conj().T)
    if se.diagonal().max() > SE_WARN:
        warnings.warn(f"diagonal standard error {se.diagonal().max():.2f} exceeds {SE_WARN}: "
                      f"{n} samples are too few for dim={dim}", StatisticsWarning, stacklevel=2)
    rho = DensityMatrix(est)
    if settings.project_psd:
        rho = rho.nearest_psd()
    return DensityEstimate(rho, se, n)
