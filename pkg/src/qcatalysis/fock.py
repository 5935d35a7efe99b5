"""Single-mode states and operators in a truncated Fock basis.

Quadrature convention used throughout the package: x = (a + a^dag)/sqrt(2),
p = (a - a^dag)/(i sqrt(2)), so the vacuum has quadrature variance 1/2 and
W_vac(0, 0) = 1/pi.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc

from .errors import DimensionMismatchError, InputError, NumericalConsistencyError

log = logging.getLogger(__name__)

CONVENTION = "var_vac_0.5"
DEFAULT_DIM = 15
TAIL_THRESHOLD = 1e-8
NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
PSD_TOL = -1e-8


class TruncationWarning(UserWarning):
    """Probability mass beyond the Fock cutoff exceeds the tail threshold."""


def _frozen(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FockKet:
    amplitudes: np.ndarray
    tail_warning: bool = False

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size < 2:
            raise InputError("a FockKet needs a 1-d amplitude vector with dim >= 2")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def projector(self) -> "DensityMatrix":
        psi = self.amplitudes
        return DensityMatrix(np.outer(psi, psi.conj()))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FockKet":
        amps = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
        if amps.size != int(d["dim"]):
            raise InputError("FockKet JSON: dim does not match vector length")
        return cls(amps)


@dataclass(frozen=True)
class DensityMatrix:
    """Fock-basis density matrix.

    ``weight`` is the probability mass the matrix represents. A normalized state
    has weight 1 and unit trace; a sub-normalized branch (for instance the
    unconditioned click branch of a measurement) carries its trace as weight.
    """

    elements: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        m = _frozen(self.elements)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise InputError(f"density matrix must be square with dim >= 2, got {m.shape}")
        object.__setattr__(self, "elements", m)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def populations(self) -> np.ndarray:
        return self.elements.diagonal().real.copy()

    def hermitian_deviation(self) -> float:
        m = self.elements
        return float(np.max(np.abs(m - m.conj().T)))

    def min_eigenvalue(self) -> float:
        m = self.elements
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])

    def check(self, *, normalized: bool = True) -> "DensityMatrix":
        """Raise NumericalConsistencyError unless this is a valid state; returns self."""
        if self.hermitian_deviation() > HERMITIAN_TOL:
            raise NumericalConsistencyError(
                f"density matrix not Hermitian (deviation {self.hermitian_deviation():.3g})")
        if normalized and abs(self.trace - 1.0) > NORM_TOL:
            raise NumericalConsistencyError(f"trace {self.trace!r} != 1")
        if not normalized and abs(self.trace - self.weight) > NORM_TOL:
            raise NumericalConsistencyError(
                f"trace {self.trace!r} does not match weight {self.weight!r}")
        if self.min_eigenvalue() < PSD_TOL:
            raise NumericalConsistencyError(
                f"density matrix has eigenvalue {self.min_eigenvalue():.3g} < {PSD_TOL}")
        return self

    def normalized(self) -> "DensityMatrix":
        tr = self.trace
        if tr <= 0:
            raise NumericalConsistencyError("cannot normalize a state with nonpositive trace")
        return DensityMatrix(self.elements / tr)

    def hermitized(self) -> "DensityMatrix":
        m = self.elements
        return DensityMatrix(0.5 * (m + m.conj().T), self.weight)

    def resized(self, dim: int) -> "DensityMatrix":
        """Zero-pad or crop to ``dim`` (cropping discards the tail without renormalizing)."""
        out = np.zeros((dim, dim), complex)
        k = min(dim, self.dim)
        out[:k, :k] = self.elements[:k, :k]
        return DensityMatrix(out, self.weight)

    def nearest_psd(self) -> "DensityMatrix":
        """Closest unit-trace PSD matrix in Frobenius norm.

        The eigenvalues are projected onto the probability simplex: negative
        weight is removed and the deficit is subtracted evenly from the
        remaining eigenvalues, rather than rescaling them.
        """
        m = 0.5 * (self.elements + self.elements.conj().T)
        w, v = np.linalg.eigh(m)
        u = w[::-1]
        excess = (np.cumsum(u) - 1.0) / np.arange(1, u.size + 1)
        k = int(np.flatnonzero(u - excess > 0)[-1])
        w = np.clip(w - excess[k], 0.0, None)
        m = (v * w) @ v.conj().T
        return DensityMatrix(m / np.trace(m).real)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.elements.real.tolist(),
            "im": self.elements.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityMatrix":
        try:
            m = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
            dim = int(d["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed density-matrix JSON: {exc}") from exc
        if m.shape != (dim, dim):
            raise InputError(f"density-matrix JSON: shape {m.shape} does not match dim {dim}")
        return cls(m)


@dataclass(frozen=True)
class ModeOperator:
    matrix: np.ndarray
    kind: str = "generic"

    KINDS = ("displacement", "povm-element", "generic")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InputError(f"unknown operator kind {self.kind!r}")
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError("operator matrix must be square")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, ket: FockKet) -> FockKet:
        _same_dim(self.dim, ket.dim)
        return FockKet(self.matrix @ ket.amplitudes)

    def conjugate(self, rho: DensityMatrix) -> DensityMatrix:
        """O rho O^dag."""
        _same_dim(self.dim, rho.dim)
        m = self.matrix
        return DensityMatrix(m @ rho.elements @ m.conj().T, rho.weight)

    def unitarity_deviation(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))


@dataclass(frozen=True)
class PhotonStatistics:
    mean: float
    mandel_q: float | None
    distribution: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "mean_photon_number": self.mean,
            "mandel_q": self.mandel_q,
            "photon_distribution": self.distribution.tolist(),
        }


def _same_dim(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatchError(f"dimension mismatch: {a} vs {b}")


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 2:
        raise InputError(f"truncation dim must be >= 2, got {dim}")
    return dim


def _check_unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise InputError(f"{name} must lie in [0, 1], got {value}")
    return value


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def fock_state(n: int, dim: int = DEFAULT_DIM) -> FockKet:
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InputError(f"photon number {n} outside truncated space of dim {dim}")
    amps = np.zeros(dim, complex)
    amps[n] = 1.0
    return FockKet(amps)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Unnormalized-by-truncation amplitudes e^{-|a|^2/2} a^n / sqrt(n!), by recursion."""
    c = np.empty(dim, complex)
    c[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def coherent_tail(alpha: complex, dim: int) -> float:
    """Poisson probability of finding >= dim photons in |alpha>."""
    lam = abs(alpha) ** 2
    return float(gammainc(dim, lam)) if lam > 0 else 0.0


def coherent_state(alpha: complex, dim: int = DEFAULT_DIM) -> FockKet:
    dim = _check_dim(dim)
    c = coherent_amplitudes(complex(alpha), dim)
    tail = coherent_tail(alpha, dim)
    flagged = tail > TAIL_THRESHOLD
    if flagged:
        warnings.warn(
            f"coherent state |{alpha}> loses {tail:.2e} probability beyond dim={dim}",
            TruncationWarning, stacklevel=2)
    return FockKet(c / np.linalg.norm(c), tail_warning=flagged)


def kitten_state(t: float, alpha: complex, dim: int = DEFAULT_DIM) -> FockKet:
    """(t|0> + alpha|1>) / sqrt(t^2 + |alpha|^2): the ideal catalysis output."""
    dim = _check_dim(dim)
    norm = math.sqrt(t * t + abs(alpha) ** 2)
    if norm == 0:
        raise InputError("kitten state undefined for t = alpha = 0")
    amps = np.zeros(dim, complex)
    amps[0], amps[1] = t / norm, alpha / norm
    return FockKet(amps)


def mixed_single_photon(eta: float, dim: int = DEFAULT_DIM) -> DensityMatrix:
    """eta|1><1| + (1 - eta)|0><0|, a single photon prepared with efficiency eta."""
    eta = _check_unit_interval("preparation efficiency", eta)
    dim = _check_dim(dim)
    m = np.zeros((dim, dim), complex)
    m[0, 0], m[1, 1] = 1.0 - eta, eta
    return DensityMatrix(m)


def vacuum(dim: int = DEFAULT_DIM) -> DensityMatrix:
    return fock_state(0, dim).projector()


def displacement_operator(beta: complex, dim: int = DEFAULT_DIM) -> ModeOperator:
    """exp(beta a^dag - beta* a) by dense matrix exponential in the truncated basis."""
    dim = _check_dim(dim)
    beta = complex(beta)
    if abs(beta) ** 2 >= dim / 4:
        warnings.warn(
            f"|beta|^2 = {abs(beta) ** 2:.3g} is not small against dim/4 = {dim / 4}; "
            "displacement matrix elements near the cutoff are unreliable",
            TruncationWarning, stacklevel=2)
    a = annihilation(dim)
    gen = beta * a.conj().T - beta.conjugate() * a
    return ModeOperator(expm(gen), kind="displacement")


def displaced_fock(n: int, beta: complex, dim: int = DEFAULT_DIM) -> FockKet:
    """D(beta)|n>, renormalized after truncation."""
    ket = displacement_operator(beta, dim).apply(fock_state(n, dim))
    return FockKet(ket.amplitudes / ket.norm)


def fidelity(rho: DensityMatrix, ket: FockKet) -> float:
    """<b|rho|b> for a pure reference |b>."""
    _same_dim(rho.dim, ket.dim)
    b = ket.amplitudes
    val = float(np.real(b.conj() @ rho.elements @ b))
    return min(max(val, 0.0), 1.0)


_EIG_RTOL = 1e-12


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(_clip_roundoff(w))) @ v.conj().T


def _clip_roundoff(w: np.ndarray) -> np.ndarray:
    # eigenvalues at roundoff level would otherwise enter as sqrt(1e-17) ~ 3e-9
    floor = _EIG_RTOL * max(float(np.abs(w).max()), 1e-300)
    return np.where(w > floor, w, 0.0)


def state_fidelity(reference: DensityMatrix, other: DensityMatrix, *, clip: bool = True) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(s) r sqrt(s)))^2 with s the reference state.

    Only the reference is square-rooted, so ``other`` may be a raw tomographic
    estimate with small negative eigenvalues; for a pure reference this reduces
    to <psi|other|psi>. Such an estimate can score above 1, so the result is
    clipped to [0, 1] unless ``clip=False``.
    """
    _same_dim(reference.dim, other.dim)
    s = _psd_sqrt(reference.elements)
    inner = s @ other.elements @ s
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    val = float(np.sum(np.sqrt(_clip_roundoff(w))) ** 2)
    return min(max(val, 0.0), 1.0) if clip else val


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _same_dim(a.dim, b.dim)
    d = a.elements - b.elements
    w = np.linalg.eigvalsh(0.5 * (d + d.conj().T))
    return float(0.5 * np.sum(np.abs(w)))


def diagnostics(rho: DensityMatrix) -> PhotonStatistics:
    """Mean photon number, Mandel Q and photon-number distribution.

    Q is reported as None for a state with zero mean photon number.
    """
    p = rho.populations()
    n = np.arange(rho.dim)
    mean = float(p @ n)
    second = float(p @ n**2)
    q = None if abs(mean) < 1e-15 else (second - mean**2 - mean) / mean
    return PhotonStatistics(mean, q, p)


def partial_trace_first(joint: np.ndarray, dim: int) -> np.ndarray:
    """Trace out the first (major) factor of a dim*dim x dim*dim operator."""
    return np.einsum("abac->bc", joint.reshape(dim, dim, dim, dim))


def save_density(path: str | Path, rho: DensityMatrix, stderr: np.ndarray | None = None,
                 extra: dict | None = None) -> None:
    payload = rho.to_dict()
    payload["convention"] = CONVENTION
    if stderr is not None:
        payload["stderr"] = np.asarray(stderr, float).tolist()
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def load_density(path: str | Path) -> DensityMatrix:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read density matrix from {path}: {exc}") from exc
    return DensityMatrix.from_dict(d)
