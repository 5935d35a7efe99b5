import numpy as np
import pytest
from scipy.linalg import expm


def two_mode_rotation(t: float, dim: int) -> np.ndarray:
    """exp(theta (a2^dag a1 - a1^dag a2)) with cos(theta) = t, on a dim x dim two-mode space.

    Maps a1^dag -> t a1^dag + r a2^dag and a2^dag -> t a2^dag - r a1^dag, the same
    port convention as the combinatorial beamsplitter formula, but built from the
    generator rather than binomial sums.
    """
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    eye = np.eye(dim)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    theta = np.arccos(t)
    return expm(theta * (a2.T @ a1 - a1.T @ a2))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


@pytest.fixture
def rng():
    return np.random.default_rng(20020101)
