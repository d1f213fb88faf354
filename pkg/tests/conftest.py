import itertools

import numpy as np
import pytest

from emc.classical import decompose, make_stochastic, mix_stationary


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    u = np.zeros((n, n), dtype=complex)
    u[i, j] = 1.0
    return u


def diag_units(n: int) -> list[np.ndarray]:
    return [matrix_unit(n, i, i) for i in range(n)]


def all_units(n: int) -> list[np.ndarray]:
    return [matrix_unit(n, i, j) for i, j in itertools.product(range(n), repeat=2)]


def random_dense_chain(n: int, rng: np.random.Generator, floor: float = 0.05):
    """Strictly positive rows: irreducible and aperiodic by construction."""
    p = rng.random((n, n)) + floor
    p /= p.sum(axis=1, keepdims=True)
    return make_stochastic(p)


def unique_stationary(matrix):
    """Stationary mixture of a single-class chain."""
    decomp = decompose(matrix)
    assert decomp.n_classes == 1
    return mix_stationary(decomp, [1.0])


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_psd(rng: np.random.Generator, n: int) -> np.ndarray:
    x = random_complex(rng, (n, n))
    return x @ x.conj().T


def classical_path_probability(matrix, pi_weights, path) -> float:
    value = float(pi_weights[path[0]])
    for a, b in zip(path, path[1:]):
        value *= float(matrix.entries[a, b])
    return value


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)
