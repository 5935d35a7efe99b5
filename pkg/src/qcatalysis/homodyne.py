"""Synthetic balanced-homodyne data: seeded quadrature sampling and vacuum calibration."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateRecordError, InputError
from .fock import CONVENTION, DensityMatrix
from .phase_space import quadrature_pdfs

TWO_PI = 2.0 * math.pi
PHASE_BINS = 64
RNG_ALGORITHM = "PCG64"
SAMPLING_HALF_WIDTH = 8.0
SAMPLING_POINTS = 3201


def sampling_axis() -> np.ndarray:
    return np.linspace(-SAMPLING_HALF_WIDTH, SAMPLING_HALF_WIDTH, SAMPLING_POINTS)


@dataclass(frozen=True)
class QuadratureRecord:
    """Homodyne samples (theta_i, x_i) in sample-index order.

    ``vacuum_scale`` is the factor already applied to the raw x values so that
    the vacuum variance is 1/2. ``seed`` is None for externally produced data.
    """

    thetas: np.ndarray
    xs: np.ndarray
    seed: int | None = None
    vacuum_scale: float = 1.0
    source_label: str = ""

    def __post_init__(self):
        th = np.array(self.thetas, float)
        xs = np.array(self.xs, float)
        if th.ndim != 1 or th.shape != xs.shape or th.size == 0:
            raise InputError("record needs equal-length, nonempty theta and x arrays")
        if not np.all(np.isfinite(th)) or not np.all(np.isfinite(xs)):
            raise InputError("record contains non-finite values")
        if th.min() < 0 or th.max() >= TWO_PI:
            raise InputError("phases must lie in [0, 2pi)")
        if not self.vacuum_scale > 0:
            raise InputError("vacuum_scale must be positive")
        th.setflags(write=False)
        xs.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "xs", xs)

    def __len__(self) -> int:
        return self.xs.size

    def header(self) -> str:
        seed = "none" if self.seed is None else str(self.seed)
        line = (f"# seed={seed} vacuum_scale={self.vacuum_scale!r} convention={CONVENTION} "
                f"rng={RNG_ALGORITHM}")
        if self.source_label:
            line += f" label={self.source_label.replace(' ', '_')}"
        return line

    def to_csv(self, path: str | Path) -> None:
        body = "\n".join(f"{t!r},{x!r}" for t, x in zip(self.thetas.tolist(), self.xs.tolist()))
        Path(path).write_text(f"{self.header()}\ntheta,x\n{body}\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "QuadratureRecord":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read quadrature record {path}: {exc}") from exc
        meta = {}
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                meta.update(re.findall(r"(\w+)=(\S+)", line))
                continue
            if line.replace(" ", "") == "theta,x":
                continue
            rows.append(line.split(","))
        try:
            data = np.array(rows, float)
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric quadrature data") from exc
        if data.ndim != 2 or data.shape[1] != 2:
            raise InputError(f"{path}: expected two columns theta,x")
        seed = meta.get("seed")
        return cls(
            np.mod(data[:, 0], TWO_PI),
            data[:, 1],
            seed=None if seed in (None, "none") else int(seed),
            vacuum_scale=float(meta.get("vacuum_scale", 1.0)),
            source_label=meta.get("label", ""),
        )


def ramp_phases(n: int, periods: float = 1.0) -> np.ndarray:
    """Linear local-oscillator phase scan over ``periods`` full turns."""
    return np.mod(TWO_PI * periods * np.arange(n) / n, TWO_PI)


def sample_quadratures(rho: DensityMatrix, n: int, phases="ramp", seed: int = 0, *,
                       periods: float = 1.0, phase_bins: int = PHASE_BINS,
                       x_axis=None, label: str = "") -> QuadratureRecord:
    """Draw n homodyne samples from rho by inverse-CDF lookup.

    Sample i uses the uniform variate u_i, the i-th draw of a PCG64 stream
    seeded with ``seed``, and the tabulated CDF of the phase bin containing
    theta_i (pdf evaluated at the bin centre). The output depends only on
    (rho, phases, seed, binning), never on evaluation order.
    """
    n = int(n)
    if n < 1:
        raise InputError("sample count must be >= 1")
    if isinstance(phases, str):
        if phases != "ramp":
            raise InputError(f"unknown phase model {phases!r}")
        thetas = ramp_phases(n, periods)
    else:
        thetas = np.mod(np.asarray(phases, float), TWO_PI)
        if thetas.shape != (n,):
            raise InputError("explicit phase list must have one entry per sample")
    x_axis = sampling_axis() if x_axis is None else np.asarray(x_axis, float)

    bins = np.minimum((thetas / TWO_PI * phase_bins).astype(int), phase_bins - 1)
    centres = (np.arange(phase_bins) + 0.5) * TWO_PI / phase_bins
    used = np.unique(bins)
    pdfs = dict(zip(used.tolist(), quadrature_pdfs(rho, centres[used], x_axis)))

    rng = np.random.Generator(np.random.PCG64(np.uint64(seed)))
    u = rng.random(n)
    xs = np.empty(n)
    for b, pdf in pdfs.items():
        sel = bins == b
        cum = pdf.cumulative
        xs[sel] = np.interp(u[sel] * cum[-1], cum, x_axis)
    return QuadratureRecord(thetas, xs, seed=int(seed), source_label=label)


def calibrate_vacuum(record: QuadratureRecord) -> float:
    """Scale factor s with var(s x) = 1/2 for a record of vacuum noise."""
    var = float(np.var(record.xs))
    if var < 1e-6:
        raise DegenerateRecordError(f"record variance {var:.3g} too small to calibrate")
    return math.sqrt(0.5 / var)


def apply_vacuum_scale(record: QuadratureRecord, scale: float) -> QuadratureRecord:
    return QuadratureRecord(record.thetas, record.xs * scale, seed=record.seed,
                            vacuum_scale=record.vacuum_scale * scale,
                            source_label=record.source_label)


def estimate_coherent_amplitude(record: QuadratureRecord) -> tuple[complex, float]:
    """Moment estimate beta = sqrt(2) <x e^{i theta}> and its standard error.

    Valid for phases spread uniformly over a full turn.
    """
    z = math.sqrt(2.0) * record.xs * np.exp(1j * record.thetas)
    n = len(record)
    se = float(np.sqrt((z.real.var() + z.imag.var()) / n))
    return complex(z.mean()), se
