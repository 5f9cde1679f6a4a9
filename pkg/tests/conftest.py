import numpy as np
import pytest

from sqbath.model import BasisTag, DensityMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)


def random_hermitian(rng, n=4, scale=1.0):
    b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (b + b.conj().T)


def random_density_matrix(rng, basis=BasisTag.STANDARD, n_pure=4):
    """Mixture of up to n_pure random pure states."""
    m = np.zeros((4, 4), dtype=complex)
    weights = rng.dirichlet(np.ones(n_pure))
    for w in weights:
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        m += w * np.outer(v, v.conj())
    return DensityMatrix.validated(m, basis)


def random_xstate(rng):
    m = np.zeros((4, 4), dtype=complex)
    pops = rng.dirichlet(np.ones(4))
    for k in range(4):
        m[k, k] = pops[k]
    a = rng.uniform() * np.sqrt(pops[0] * pops[3]) * np.exp(2j * np.pi * rng.uniform())
    b = rng.uniform() * np.sqrt(pops[1] * pops[2]) * np.exp(2j * np.pi * rng.uniform())
    m[0, 3], m[3, 0] = a, np.conj(a)
    m[1, 2], m[2, 1] = b, np.conj(b)
    return DensityMatrix.validated(m, BasisTag.STANDARD)


def bell_phi_plus():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[0, 3] = m[3, 0] = m[3, 3] = 0.5
    return DensityMatrix(m, BasisTag.STANDARD)
