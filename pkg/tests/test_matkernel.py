import math

import numpy as np
import pytest

from sqbath.errors import NotHermitian, NotPSD
from sqbath.matkernel import (
    eigvals_general,
    herm_eig,
    matrix_exp,
    matrix_sqrt_psd,
    unvec,
    vec,
)

from conftest import bell_phi_plus, random_hermitian


def test_herm_eig_identity():
    res = herm_eig(np.eye(4))
    np.testing.assert_allclose(res.eigenvalues, np.ones(4), atol=1e-14)


def test_herm_eig_diagonal():
    res = herm_eig(np.diag([0.0, 0.25, 0.25, 0.5]))
    np.testing.assert_allclose(res.eigenvalues, [0.0, 0.25, 0.25, 0.5], atol=1e-14)


def test_herm_eig_vacuum_phi3_state():
    # The phi3-initial vacuum solution at t = ln 2 is diagonal (3/4, 0, 1/4, 0).
    t = math.log(2.0)
    rho = np.diag([1.0 - math.exp(-2 * t), 0.0, math.exp(-2 * t), 0.0])
    res = herm_eig(rho)
    np.testing.assert_allclose(res.eigenvalues, [0.0, 0.0, 0.25, 0.75], atol=1e-14)


@pytest.mark.parametrize("n", [4, 16])
def test_herm_eig_reconstruction_and_unitarity(rng, n):
    for _ in range(25):
        h = random_hermitian(rng, n)
        res = herm_eig(h)
        v, w = res.eigenvectors, res.eigenvalues
        norm = np.linalg.norm(h)
        assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - h) <= 1e-12 * norm
        assert np.linalg.norm(v.conj().T @ v - np.eye(n)) <= 1e-12
        assert np.all(np.diff(w) >= 0.0)


def test_herm_eig_trace_identity(rng):
    for _ in range(50):
        h = random_hermitian(rng, 4)
        h /= max(1.0, np.linalg.norm(h))
        res = herm_eig(h)
        assert abs(res.eigenvalues.sum() - np.trace(h).real) <= 1e-12


def test_herm_eig_rejects_non_hermitian():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(NotHermitian):
        herm_eig(m)


def test_matrix_sqrt_psd_identity_and_diagonal():
    np.testing.assert_allclose(matrix_sqrt_psd(np.eye(4)), np.eye(4), atol=1e-13)
    np.testing.assert_allclose(
        matrix_sqrt_psd(np.diag([4.0, 1.0, 0.0, 0.0])),
        np.diag([2.0, 1.0, 0.0, 0.0]),
        atol=1e-13,
    )


def test_matrix_sqrt_psd_projector_idempotent():
    p = bell_phi_plus().mat
    np.testing.assert_allclose(matrix_sqrt_psd(p), p, atol=1e-12)


def test_matrix_sqrt_psd_roundtrip(rng):
    for _ in range(30):
        h = random_hermitian(rng, 4)
        b = h @ h.conj().T  # PSD
        b = 0.5 * (b + b.conj().T)
        root = matrix_sqrt_psd(b)
        assert np.linalg.norm(root @ root - b) <= 1e-10 * max(1.0, np.linalg.norm(b))
        # sqrt(B.B) recovers a PSD B
        s = matrix_sqrt_psd(root @ root)
        assert np.linalg.norm(s - root) <= 1e-9 * max(1.0, np.linalg.norm(root))


def test_matrix_sqrt_psd_clamps_roundoff_but_rejects_negative():
    near = np.diag([1.0, 0.5, 0.0, -5e-11])
    root = matrix_sqrt_psd(near)
    assert root[3, 3].real == 0.0
    with pytest.raises(NotPSD):
        matrix_sqrt_psd(np.diag([1.0, 0.5, 0.0, -1e-6]))


def test_matrix_exp_trivial_cases():
    np.testing.assert_allclose(matrix_exp(np.zeros((4, 4)), 3.0), np.eye(4), atol=1e-15)
    out = matrix_exp(np.diag([-2.0, -1.0]), 1.0)
    np.testing.assert_allclose(np.diag(out), [math.exp(-2), math.exp(-1)], rtol=1e-14)


def test_matrix_exp_matches_taylor(rng):
    a = random_hermitian(rng, 4, scale=0.5) + 1j * random_hermitian(rng, 4, scale=0.3)
    ref = np.eye(4, dtype=complex)
    term = np.eye(4, dtype=complex)
    for k in range(1, 40):
        term = term @ a / k
        ref = ref + term
    out = matrix_exp(a, 1.0)
    assert np.linalg.norm(out - ref) <= 1e-12 * np.linalg.norm(ref)


def test_matrix_exp_semigroup(rng):
    for _ in range(10):
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        a *= 10.0 / np.linalg.norm(a)
        s, t = rng.uniform(0.0, 2.0, size=2)
        lhs = matrix_exp(a, s + t)
        rhs = matrix_exp(a, s) @ matrix_exp(a, t)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(lhs))


def test_matrix_exp_propagates_vacuum_phi3_population():
    # exp(L t) applied to the phi3 projector reproduces the e^{-2t} decay
    # of the collective-basis (3,3) population at N = 0.
    from sqbath.model import BasisTag, BathParams, InitialStateSpec, build_liouvillian, initial_state

    bath = BathParams(0.0)
    l_mat = build_liouvillian(bath, BasisTag.DFS).mat
    rho0 = initial_state(InitialStateSpec.phi(3), bath, BasisTag.DFS)
    for t in (0.3, 1.0, 2.5):
        out = unvec(matrix_exp(l_mat, t) @ vec(rho0.mat), 4)
        assert abs(out[2, 2].real - math.exp(-2.0 * t)) <= 1e-12


def test_vec_unvec_roundtrip_and_convention(rng):
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    np.testing.assert_array_equal(unvec(vec(x), 4), x)
    # Column stacking: vec(A X B) = (B^T kron A) vec(X).
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    lhs = vec(a @ x @ b)
    rhs = np.kron(b.T, a) @ vec(x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_eigvals_general_matches_hermitian_route(rng):
    h = random_hermitian(rng, 4)
    w_general = np.sort(eigvals_general(h).real)
    w_herm = herm_eig(h).eigenvalues
    np.testing.assert_allclose(w_general, w_herm, atol=1e-10)
    assert np.max(np.abs(eigvals_general(h).imag)) <= 1e-10


def test_eigvals_general_random(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    ours = np.sort_complex(eigvals_general(m))
    ref = np.sort_complex(np.linalg.eigvals(m))
    np.testing.assert_allclose(ours, ref, atol=1e-8)
