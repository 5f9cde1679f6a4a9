"""Entanglement measures for the two-qubit state.

Concurrence is computed four ways that must agree wherever they overlap:
the pure-state overlap |<psi|sigma_y (x) sigma_y|psi*>|, the generic
mixed-state formula max{0, sqrt(l1)-sqrt(l2)-sqrt(l3)-sqrt(l4)}, the
X-state closed form in the standard basis, and the collective-basis
closed forms for the trajectory families. The partial-transpose minimum
eigenvalue supplies the separability criterion, which for two qubits is
necessary and sufficient.

The generic route keeps every spectrum inside the Hermitian eigensolver
by diagonalizing sqrt(rho) rho_tilde sqrt(rho) instead of the
non-Hermitian product rho rho_tilde; the spectra coincide and the
Hermitian route is far better conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotNormalized, NotXState, PatternMismatch
from .matkernel import herm_eig, matrix_sqrt_psd
from .model import SPIN_FLIP, BasisTag, BathParams, DensityMatrix, dfs_unitary

BRANCH_GENERIC = "generic"
BRANCH_X_C1 = "xstate-c1"
BRANCH_X_C2 = "xstate-c2"
BRANCH_DFS_C1 = "dfs-c1"
BRANCH_DFS_C2 = "dfs-c2"
BRANCH_ZERO = "zero"

PPT_TOL = 1e-10
PATTERN_TOL = 1e-10

# Eigenvalues of sqrt(rho) rho_tilde sqrt(rho) this far below the largest
# are rank noise; sqrt() would amplify them from ~1e-16 to ~1e-8, so they
# are zeroed before the square roots.
_EIG_REL_FLOOR = 1e-12

# Density matrices are accepted down to the RK4 positivity floor.
_PSD_TOL = 1e-6

_X_PATTERN = {(0, 0), (0, 3), (1, 1), (1, 2), (2, 1), (2, 2), (3, 0), (3, 3)}


@dataclass(frozen=True)
class ConcurrenceResult:
    """Concurrence value plus which formula branch produced it.

    ``raw`` is the signed argument of the final max{0, ...}: negative in
    dead zones, which is what separates genuine sudden death from
    asymptotic decay through any small threshold. raw_candidates carries
    the (C1, C2) pair when a closed form was used, None for the generic
    route.
    """

    value: float
    branch: str
    raw: float = 0.0
    raw_candidates: tuple[float, float] | None = None


@dataclass(frozen=True)
class PPTResult:
    """Minimum eigenvalue of the partial transpose and its verdict."""

    min_eigenvalue: float
    entangled: bool


def _to_standard_mat(rho: DensityMatrix, bath: BathParams | None) -> np.ndarray:
    if rho.basis == BasisTag.STANDARD:
        return np.asarray(rho.mat)
    if bath is None:
        raise ValueError("bath parameters are required to leave the DFS basis")
    u = dfs_unitary(bath)
    return u @ rho.mat @ u.conj().T


def spin_flip(rho_mat: np.ndarray) -> np.ndarray:
    """rho_tilde = (sigma_y (x) sigma_y) rho* (sigma_y (x) sigma_y)."""
    return SPIN_FLIP @ rho_mat.conj() @ SPIN_FLIP


def concurrence_pure(psi, basis: BasisTag = BasisTag.STANDARD,
                     bath: BathParams | None = None) -> float:
    """Concurrence of a pure state, |<psi | sigma_y(x)sigma_y | psi*>|."""
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if v.size != 4:
        raise ValueError("need a two-qubit state vector of length 4")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-10:
        raise NotNormalized(f"state vector norm {norm} is not 1")
    if basis == BasisTag.DFS:
        if bath is None:
            raise ValueError("bath parameters are required to leave the DFS basis")
        v = dfs_unitary(bath) @ v
    val = abs(np.conj(v) @ SPIN_FLIP @ np.conj(v))
    return float(min(1.0, val))


def concurrence_wootters(rho: DensityMatrix,
                         bath: BathParams | None = None) -> ConcurrenceResult:
    """Generic mixed-state concurrence via the Hermitian route.

    The l_i are the eigenvalues of sqrt(rho) rho_tilde sqrt(rho) (equal to
    those of rho rho_tilde), taken in descending order:

        C = max{0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4)}.
    """
    m = _to_standard_mat(rho, bath)
    m = 0.5 * (m + m.conj().T)
    root = matrix_sqrt_psd(m, neg_tol=_PSD_TOL)
    r = root @ spin_flip(m) @ root
    w = herm_eig(0.5 * (r + r.conj().T)).eigenvalues[::-1]
    w = np.where(w < _EIG_REL_FLOOR * max(w[0], 0.0), 0.0, w)
    roots = np.sqrt(w)
    c = float(roots[0] - roots[1] - roots[2] - roots[3])
    value = max(0.0, c)
    return ConcurrenceResult(
        value=min(1.0, value),
        branch=BRANCH_GENERIC if value > 0.0 else BRANCH_ZERO,
        raw=c,
    )


def concurrence_xstate(rho: DensityMatrix, check_structure: bool = True,
                       bath: BathParams | None = None) -> ConcurrenceResult:
    """Closed-form concurrence for standard-basis X states.

    For states whose only nonzero entries sit on the diagonal and
    anti-diagonal,

        C1 = 2 (sqrt(r23 r32) - sqrt(r11 r44)),
        C2 = 2 (sqrt(r14 r41) - sqrt(r22 r33)),

    and C = max{0, C1, C2}. Off-pattern weight above 1e-10 raises
    NotXState when the structure check is on; below that it is ignored.
    """
    m = _to_standard_mat(rho, bath)
    if check_structure:
        mass = max(
            abs(m[i, j])
            for i in range(4)
            for j in range(4)
            if (i, j) not in _X_PATTERN
        )
        if mass > PATTERN_TOL:
            raise NotXState(f"off-pattern entry of magnitude {mass:.3e}")
    p11 = max(0.0, m[0, 0].real)
    p22 = max(0.0, m[1, 1].real)
    p33 = max(0.0, m[2, 2].real)
    p44 = max(0.0, m[3, 3].real)
    c1 = 2.0 * (abs(m[1, 2]) - math.sqrt(p11 * p44))
    c2 = 2.0 * (abs(m[0, 3]) - math.sqrt(p22 * p33))
    raw = max(c1, c2)
    value = max(0.0, raw)
    if value == 0.0:
        branch = BRANCH_ZERO
    else:
        branch = BRANCH_X_C1 if c1 >= c2 else BRANCH_X_C2
    return ConcurrenceResult(value=min(1.0, value), branch=branch, raw=float(raw),
                             raw_candidates=(float(c1), float(c2)))


_PSI1_PATTERN = {(0, 0), (0, 3), (3, 0), (2, 2), (3, 3)}
_PSI2_PATTERN = _PSI1_PATTERN | {(1, 1), (1, 2), (2, 1)}


def concurrence_dfs_closed(rho: DensityMatrix, bath: BathParams,
                           family: str) -> ConcurrenceResult:
    """Collective-basis closed forms for the two trajectory families.

    family "psi1" covers the phi_3 / phi_4 / psi1 solutions (nonzero
    entries r11, r14, r41, r33, r44); family "psi2" additionally allows
    r22, r23, r32. With M = sqrt(N(N+1)) and G = 2N+1:

        psi1:  C1 = 2 ( r33/2
                        - sqrt((r11 N + r44 (N+1) + 2 r14 M)/G)
                        * sqrt((r44 N + r11 (N+1) - 2 r14 M)/G) )
               C2 = 2 ( |M (r11 - r44) + r14| / G - r33/2 )

        psi2:  C1 = |r33 - r22|
                    - 2 sqrt((N (r11+r44) + r44 + 2 r14 M)/G)
                      * sqrt((N (r11+r44) + r11 - 2 r14 M)/G)
               C2 = (2/G) |M (r11 - r44) + r14|
                    - sqrt((r22 - 2 r23 + r33)(r22 + 2 r23 + r33))

    These are the standard-basis X-state forms re-expressed in collective
    entries, so they must agree with the generic route wherever the
    pattern holds.
    """
    if rho.basis != BasisTag.DFS:
        raise PatternMismatch("closed form takes the state in the DFS basis")
    if family not in ("psi1", "psi2"):
        raise ValueError(f"unknown family {family!r}")
    m = np.asarray(rho.mat)
    pattern = _PSI1_PATTERN if family == "psi1" else _PSI2_PATTERN
    mass = max(
        abs(m[i, j]) for i in range(4) for j in range(4) if (i, j) not in pattern
    )
    if mass > PATTERN_TOL:
        raise PatternMismatch(f"off-pattern entry of magnitude {mass:.3e}")
    imag = max(abs(m[i, j].imag) for (i, j) in pattern)
    if imag > PATTERN_TOL:
        raise PatternMismatch(f"pattern entries must be real, found imag {imag:.3e}")

    n = bath.n_bar
    big_m = bath.m
    g = 2.0 * n + 1.0
    r11 = m[0, 0].real
    r33 = m[2, 2].real
    r44 = m[3, 3].real
    r14 = m[0, 3].real

    if family == "psi1":
        f1 = max(0.0, (r11 * n + r44 * (n + 1.0) + 2.0 * r14 * big_m) / g)
        f2 = max(0.0, (r44 * n + r11 * (n + 1.0) - 2.0 * r14 * big_m) / g)
        c1 = 2.0 * (0.5 * r33 - math.sqrt(f1) * math.sqrt(f2))
        c2 = 2.0 * (abs(big_m * (r11 - r44) + r14) / g - 0.5 * r33)
    else:
        r22 = m[1, 1].real
        r23 = m[1, 2].real
        f1 = max(0.0, (n * (r11 + r44) + r44 + 2.0 * r14 * big_m) / g)
        f2 = max(0.0, (n * (r11 + r44) + r11 - 2.0 * r14 * big_m) / g)
        c1 = abs(r33 - r22) - 2.0 * math.sqrt(f1) * math.sqrt(f2)
        prod = max(0.0, (r22 - 2.0 * r23 + r33) * (r22 + 2.0 * r23 + r33))
        c2 = (2.0 / g) * abs(big_m * (r11 - r44) + r14) - math.sqrt(prod)

    raw = max(c1, c2)
    value = max(0.0, raw)
    if value == 0.0:
        branch = BRANCH_ZERO
    else:
        branch = BRANCH_DFS_C1 if c1 >= c2 else BRANCH_DFS_C2
    return ConcurrenceResult(value=min(1.0, value), branch=branch, raw=float(raw),
                             raw_candidates=(float(c1), float(c2)))


def partial_transpose(rho_mat: np.ndarray, subsystem: int = 2) -> np.ndarray:
    """Transpose one qubit's indices of a standard-basis 4x4 matrix."""
    a = np.asarray(rho_mat, dtype=complex).reshape(2, 2, 2, 2)
    if subsystem == 2:
        a = a.transpose(0, 3, 2, 1)
    elif subsystem == 1:
        a = a.transpose(2, 1, 0, 3)
    else:
        raise ValueError("subsystem must be 1 or 2")
    return a.reshape(4, 4)


def ppt_min_eigenvalue(rho: DensityMatrix,
                       bath: BathParams | None = None) -> PPTResult:
    """Separability criterion: minimum eigenvalue of the partial transpose.

    For two qubits a negative value is necessary and sufficient for
    entanglement, so ``entangled`` is simply min < -1e-10. Which qubit is
    transposed does not change the spectrum's sign structure.
    """
    m = _to_standard_mat(rho, bath)
    pt = partial_transpose(0.5 * (m + m.conj().T), subsystem=2)
    w = herm_eig(pt).eigenvalues
    mn = float(w[0])
    return PPTResult(min_eigenvalue=mn, entangled=mn < -PPT_TOL)
