"""Beamsplitter, threshold-detector conditioning, loss and dark counts.

Mode ordering. The beamsplitter acts on |m, n> with m the photon-input port
and n the coherent-state port. On the output side the first mode feeds the
single-photon detector (SPD) and the second is the signal sent to the
homodyne detector. A two-mode density matrix is stored with the first mode as
the major index, i.e. basis index ``a * dim + b`` for |a>_SPD |b>_signal.

With this literal reading of the transformation,

    B|1, 0> = t|1, 0> + r|0, 1>,     B|0, alpha> = |-alpha r>|alpha t>,

so a photon transmitted by the beamsplitter reaches the SPD and the signal
receives the coherent amplitude alpha t.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import comb

from .errors import InputError, NoStatisticsError, TruncationError
from .fock import (
    DensityMatrix,
    ModeOperator,
    _check_dim,
    _check_unit_interval,
    coherent_state,
    displaced_fock,
    mixed_single_photon,
    partial_trace_first,
)

PIPELINE_DIM = 10
MAX_DISCARDED = 1e-6
MIN_CLICK_PROBABILITY = 1e-15


@dataclass(frozen=True)
class BeamsplitterParams:
    """Real amplitude transmission ``t``; the reflection r = sqrt(1 - t^2) is derived."""

    t: float

    def __post_init__(self):
        _check_unit_interval("beamsplitter transmission t", self.t)
        object.__setattr__(self, "t", float(self.t))

    @property
    def r(self) -> float:
        return math.sqrt(1.0 - self.t * self.t)

    @classmethod
    def from_reflectivity(cls, r2: float) -> "BeamsplitterParams":
        _check_unit_interval("reflectivity r^2", r2)
        return cls(math.sqrt(1.0 - r2))

    @classmethod
    def from_transmissivity(cls, t2: float) -> "BeamsplitterParams":
        _check_unit_interval("transmissivity t^2", t2)
        return cls(math.sqrt(t2))


@dataclass(frozen=True)
class ExperimentParams:
    alpha: complex = 0.3
    bs: BeamsplitterParams = BeamsplitterParams(math.sqrt(0.08))
    eta_spd: float = 0.5
    eta_photon: float = 0.69
    eta_hd: float = 0.91
    p_dark: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        for name in ("eta_spd", "eta_photon", "eta_hd", "p_dark"):
            object.__setattr__(self, name, _check_unit_interval(name, getattr(self, name)))

    def replace(self, **changes) -> "ExperimentParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TwoModeState:
    """Joint (SPD, signal) density matrix; see module docstring for ordering."""

    elements: np.ndarray
    dim: int
    discarded_mass: float = 0.0

    def __post_init__(self):
        m = np.array(self.elements, complex)
        if m.shape != (self.dim**2, self.dim**2):
            raise InputError(f"two-mode state must be {self.dim**2}x{self.dim**2}, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "elements", m)

    @classmethod
    def product(cls, first: DensityMatrix, second: DensityMatrix) -> "TwoModeState":
        if first.dim != second.dim:
            raise InputError("both modes must share the same truncation")
        return cls(np.kron(first.elements, second.elements), first.dim)

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def reduced_second(self) -> DensityMatrix:
        """Signal-mode state (first mode traced out)."""
        return DensityMatrix(partial_trace_first(self.elements, self.dim))

    def reduced_first(self) -> DensityMatrix:
        d = self.dim
        return DensityMatrix(np.einsum("abcb->ac", self.elements.reshape(d, d, d, d)))


def beamsplitter_matrix_element(m: int, n: int, j_out: int, k_out: int,
                                bs: BeamsplitterParams) -> float:
    """<j_out, k_out| B |m, n>.

    Sums the terms of the Fock-basis transformation with j + k = j_out, where j
    photons of the first input and k of the second end up in the first output.
    The (-1)^k sign sits on photons of the second input that reach the first
    output.
    """
    if min(m, n, j_out, k_out) < 0:
        raise InputError("photon numbers must be nonnegative")
    total = m + n
    if j_out + k_out != total:
        return 0.0
    t, r = bs.t, bs.r
    norm = math.sqrt(math.factorial(j_out) * math.factorial(k_out)
                     / (math.factorial(m) * math.factorial(n)))
    acc = 0.0
    for j in range(max(0, j_out - n), min(m, j_out) + 1):
        k = j_out - j
        acc += (comb(m, j, exact=True) * comb(n, k, exact=True) * (-1) ** k
                * t ** (n + j - k) * r ** (m - j + k))
    return norm * acc


@lru_cache(maxsize=64)
def _beamsplitter_unitary(t: float, dim: int) -> np.ndarray:
    bs = BeamsplitterParams(t)
    u = np.zeros((dim * dim, dim * dim))
    for m in range(dim):
        for n in range(dim):
            col = m * dim + n
            for a in range(max(0, m + n - dim + 1), min(dim - 1, m + n) + 1):
                b = m + n - a
                u[a * dim + b, col] = beamsplitter_matrix_element(m, n, a, b, bs)
    u.setflags(write=False)
    return u


def beamsplitter_unitary(bs: BeamsplitterParams, dim: int) -> np.ndarray:
    """Truncated transformation matrix; columns |m, n>, rows |a, b>, all indices < dim.

    Exactly unitary on the block of total photon number <= dim - 1; higher
    blocks lose the components that leave the truncated space.
    """
    return _beamsplitter_unitary(bs.t, _check_dim(dim))


def apply_beamsplitter(state: TwoModeState, bs: BeamsplitterParams) -> TwoModeState:
    u = beamsplitter_unitary(bs, state.dim)
    out = u @ state.elements @ u.T
    kept = float(np.trace(out).real)
    discarded = state.trace - kept + state.discarded_mass
    if discarded > MAX_DISCARDED:
        raise TruncationError(
            f"beamsplitter output lost {discarded:.2e} probability; increase dim (now {state.dim})")
    return TwoModeState(out / kept, state.dim, max(discarded, 0.0))


def spd_povm(eta_spd: float, dim: int) -> tuple[ModeOperator, ModeOperator]:
    """(no-click, click) elements of an on/off detector with efficiency eta_spd."""
    eta_spd = _check_unit_interval("SPD efficiency", eta_spd)
    dim = _check_dim(dim)
    no_click = np.diag((1.0 - eta_spd) ** np.arange(dim)).astype(complex)
    click = np.eye(dim) - no_click
    return ModeOperator(no_click, "povm-element"), ModeOperator(click, "povm-element")


def click_probability(state: TwoModeState, click: ModeOperator) -> float:
    """Tr[(Pi_click x 1) rho]."""
    d = state.dim
    return float(np.einsum("ca,abcb->", click.matrix, state.elements.reshape(d, d, d, d)).real)


def condition_on_click(state: TwoModeState, click: ModeOperator) -> tuple[DensityMatrix, float]:
    """Collapse onto the click outcome: Tr_SPD[(Pi_click x 1) rho] / p_click."""
    d = state.dim
    if click.dim != d:
        raise InputError("click operator dimension does not match the SPD mode")
    rho4 = state.elements.reshape(d, d, d, d)
    branch = np.einsum("ca,abcd->bd", click.matrix, rho4)
    p_click = float(np.trace(branch).real)
    if p_click < MIN_CLICK_PROBABILITY:
        raise NoStatisticsError(f"click probability {p_click:.3g} is zero to working precision")
    rho_s = branch / p_click
    rho_s = 0.5 * (rho_s + rho_s.conj().T)
    return DensityMatrix(rho_s), p_click


def loss_channel(rho: DensityMatrix, eta: float) -> DensityMatrix:
    """Bernoulli (beamsplitter-loss) map with transmission eta."""
    eta = _check_unit_interval("loss-channel efficiency", eta)
    d = rho.dim
    if eta == 1.0:
        return DensityMatrix(rho.elements, rho.weight)
    src = rho.elements
    out = np.zeros_like(src)
    j = np.arange(d)
    for m in range(d):
        size = d - m
        jj, kk = np.meshgrid(j[:size], j[:size], indexing="ij")
        coef = (np.sqrt(comb(jj + m, jj) * comb(kk + m, kk))
                * eta ** ((jj + kk) / 2.0) * (1.0 - eta) ** m)
        out[:size, :size] += coef * src[m:, m:]
    return DensityMatrix(out, rho.weight)


def dark_count_state(params: ExperimentParams, dim: int = PIPELINE_DIM) -> DensityMatrix:
    """Signal state for a dark-count herald: displaced single photon mixed with |alpha t>."""
    t, r = params.bs.t, params.bs.r
    beta = params.alpha * t
    w = params.eta_photon * r * r
    dfs = displaced_fock(1, beta, dim).projector().elements
    coh = coherent_state(beta, dim).projector().elements
    return DensityMatrix(w * dfs + (1.0 - w) * coh)


def unconditioned_signal(params: ExperimentParams, dim: int = PIPELINE_DIM) -> DensityMatrix:
    """Signal-mode state with the SPD outcome ignored."""
    state = TwoModeState.product(mixed_single_photon(params.eta_photon, dim),
                                 coherent_state(params.alpha, dim).projector())
    return apply_beamsplitter(state, params.bs).reduced_second()


@dataclass(frozen=True)
class PipelineResult:
    rho_ideal_conditioned: DensityMatrix
    rho_with_dark: DensityMatrix
    rho_at_detector: DensityMatrix
    p_click: float
    eta_prime: float
    discarded_mass: float
    p_click_photon: float
    p_click_vacuum: float

    def scalars(self) -> dict:
        return {
            "p_click": self.p_click,
            "eta_prime": self.eta_prime,
            "discarded_mass": self.discarded_mass,
            "p_click_photon_branch": self.p_click_photon,
            "p_click_vacuum_branch": self.p_click_vacuum,
        }

    def to_dict(self) -> dict:
        return {
            "rho_ideal_conditioned": self.rho_ideal_conditioned.to_dict(),
            "rho_with_dark": self.rho_with_dark.to_dict(),
            "rho_at_detector": self.rho_at_detector.to_dict(),
            "scalars": self.scalars(),
        }


def catalysis_pipeline(params: ExperimentParams, dim: int = PIPELINE_DIM) -> PipelineResult:
    """Heralded signal state from an imperfect photon and a coherent state.

    eta_prime is evaluated from the click probabilities of the photon and
    vacuum parts of the input, so the mixture of the ideal conditioned state
    with |alpha t> is a consequence of the model rather than an assumption.
    """
    dim = _check_dim(dim)
    coh = coherent_state(params.alpha, dim).projector()
    _, click = spd_povm(params.eta_spd, dim)

    full = apply_beamsplitter(
        TwoModeState.product(mixed_single_photon(params.eta_photon, dim), coh), params.bs)
    rho_s, p_click = condition_on_click(full, click)

    photon_out = apply_beamsplitter(
        TwoModeState.product(mixed_single_photon(1.0, dim), coh), params.bs)
    vacuum_out = apply_beamsplitter(
        TwoModeState.product(mixed_single_photon(0.0, dim), coh), params.bs)
    p1 = click_probability(photon_out, click)
    p0 = click_probability(vacuum_out, click)
    eta = params.eta_photon
    denom = eta * p1 + (1.0 - eta) * p0
    eta_prime = eta * p1 / denom if denom > 0 else float("nan")

    rho_dark = dark_count_state(params, dim)
    mixed = (1.0 - params.p_dark) * rho_s.elements + params.p_dark * rho_dark.elements
    rho_with_dark = DensityMatrix(mixed)
    rho_det = loss_channel(rho_with_dark, params.eta_hd)
    return PipelineResult(
        rho_ideal_conditioned=rho_s,
        rho_with_dark=rho_with_dark,
        rho_at_detector=rho_det,
        p_click=p_click,
        eta_prime=eta_prime,
        discarded_mass=full.discarded_mass,
        p_click_photon=p1,
        p_click_vacuum=p0,
    )
