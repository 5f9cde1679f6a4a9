"""Time evolution of the two-qubit state by three interchangeable routes.

* ``evolve_rk4``  -- classical fixed-step RK4 on the vectorized state.
* ``evolve_exact`` -- matrix-exponential propagation exp(L t); this is the
  authoritative oracle for everything else.
* ``closed_form_vacuum`` -- the analytic solutions for n_bar = 0.
* ``closed_form_general`` -- the tabulated general-N closed-form entry
  expressions, transcribed verbatim. Several of the transcribed
  coefficient blocks are singular at N = 0 and fail to reconstruct the initial
  condition at t = 0, so every call is compared against the exact
  propagator by default and the measured deviation is returned with the
  result rather than silently corrected.

Times are in units of 1/gamma; a non-unit gamma simply rescales t through
the generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matkernel
from .errors import (
    PositivityLost,
    SingularBath,
    StiffStepRejected,
    UnsupportedBath,
    UnsupportedSpec,
    ValidationFailed,
)
from .matkernel import matrix_exp, unvec, vec
from .model import (
    BasisTag,
    BathParams,
    DensityMatrix,
    InitialStateSpec,
    Liouvillian,
    build_liouvillian,
)

METHOD_RK4 = "rk4"
METHOD_EXACT = "exact"
METHOD_CLOSED = "closed"

RK4_POSITIVITY_FLOOR = -1e-6
TRACE_RENORM_THRESHOLD = 1e-12


@dataclass(frozen=True)
class PropagatorSettings:
    """Step-size and sampling controls for the integrators."""

    t_max: float
    dt: float = 1e-3
    sample_stride: int = 10
    method: str = METHOD_RK4

    def __post_init__(self):
        if not (self.t_max > 0.0 and math.isfinite(self.t_max)):
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be a positive integer")


@dataclass(frozen=True)
class Trajectory:
    """Time grid plus the state at each sample, all in one basis."""

    times: np.ndarray
    states: list[DensityMatrix]
    bath: BathParams
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size != len(self.states) or t.size < 2:
            raise ValueError("times and states must align with length >= 2")
        if np.any(np.diff(t) < 0.0):
            raise ValueError("times must be ascending")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @property
    def basis(self) -> BasisTag:
        return self.states[0].basis


def _stiffness_limit(bath: BathParams) -> float:
    # Fastest decay rate in the generator is 2(sqrt(N)+sqrt(N+1))^2 <= 4(2N+1),
    # so cap dt at 0.01/(2N+1) to keep RK4 well inside its stability region.
    return 0.01 / (2.0 * bath.n_bar + 1.0)


def evolve_rk4(rho0: DensityMatrix, bath: BathParams,
               settings: PropagatorSettings) -> Trajectory:
    """Fixed-step classical RK4 on vec(rho).

    Sampled states are re-Hermitized by symmetric averaging (never inside
    the RK4 stages) and trace-renormalized only when the drift exceeds
    1e-12; both drifts are recorded in the trajectory metadata.
    """
    limit = _stiffness_limit(bath)
    if settings.dt > limit * (1.0 + 1e-12):
        raise StiffStepRejected(
            f"dt={settings.dt:g} exceeds stiffness guard {limit:g} "
            f"for n_bar={bath.n_bar:g}"
        )
    l_mat = build_liouvillian(bath, rho0.basis).mat
    dt = settings.dt
    n_steps = max(1, int(round(settings.t_max / dt)))

    v = vec(rho0.mat)
    times = [0.0]
    states = [rho0]
    trace_drift = 0.0
    herm_drift = 0.0
    renormalized = 0

    def sample(step: int, v_now: np.ndarray):
        nonlocal trace_drift, herm_drift, renormalized
        m = unvec(v_now, 4)
        herm = matkernel.frobenius(m - m.conj().T)
        herm_drift = max(herm_drift, herm)
        m = 0.5 * (m + m.conj().T)
        tr = float(np.real(np.trace(m)))
        drift = abs(tr - 1.0)
        trace_drift = max(trace_drift, drift)
        if drift > TRACE_RENORM_THRESHOLD:
            m = m / tr
            renormalized += 1
        state = DensityMatrix(m, rho0.basis)
        if state.min_eigenvalue() < RK4_POSITIVITY_FLOOR:
            raise PositivityLost(
                f"minimum eigenvalue {state.min_eigenvalue():.3e} at t={step * dt:g}"
            )
        times.append(step * dt)
        states.append(state)

    for step in range(1, n_steps + 1):
        k1 = l_mat @ v
        k2 = l_mat @ (v + 0.5 * dt * k1)
        k3 = l_mat @ (v + 0.5 * dt * k2)
        k4 = l_mat @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % settings.sample_stride == 0 or step == n_steps:
            sample(step, v)

    meta = {
        "trace_drift": trace_drift,
        "hermiticity_drift": herm_drift,
        "renormalized_samples": renormalized,
        "dt": dt,
    }
    return Trajectory(np.array(times), states, bath, METHOD_RK4, meta)


class ExactPropagator:
    """Caches the generator so repeated state_at(t) calls stay cheap."""

    def __init__(self, rho0: DensityMatrix, bath: BathParams):
        self.rho0 = rho0
        self.bath = bath
        self.liouvillian: Liouvillian = build_liouvillian(bath, rho0.basis)
        self._v0 = vec(rho0.mat)

    def state_mat(self, t: float) -> np.ndarray:
        if t == 0.0:
            return np.array(self.rho0.mat)
        prop = matrix_exp(self.liouvillian.mat, t)
        m = unvec(prop @ self._v0, 4)
        return 0.5 * (m + m.conj().T)

    def state_at(self, t: float) -> DensityMatrix:
        return DensityMatrix(self.state_mat(t), self.rho0.basis)


def evolve_exact(rho0: DensityMatrix, bath: BathParams, times) -> Trajectory:
    """states[k] = unvec(exp(L t_k) vec(rho0)); no step-size error."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("need at least two sample times")
    if t[0] < 0.0 or np.any(np.diff(t) < 0.0):
        raise ValueError("times must be ascending and non-negative")
    prop = ExactPropagator(rho0, bath)
    states = [prop.state_at(tk) for tk in t]
    return Trajectory(t, states, bath, METHOD_EXACT)


def _vacuum_entries(spec: InitialStateSpec, tau: float) -> np.ndarray:
    e1 = math.exp(-tau)
    e2 = math.exp(-2.0 * tau)
    m = np.zeros((4, 4), dtype=complex)
    if spec.kind == "phi1":
        m[0, 0] = 1.0
    elif spec.kind == "phi2":
        m[1, 1] = 1.0
    elif spec.kind == "phi3":
        m[0, 0] = 1.0 - e2
        m[2, 2] = e2
    elif spec.kind == "phi4":
        m[0, 0] = (math.expm1(2.0 * tau) - 2.0 * tau) * e2
        m[2, 2] = 2.0 * tau * e2
        m[3, 3] = e2
    elif spec.kind == "psi1":
        eps = float(spec.eps)
        w2 = 1.0 - eps * eps
        off = eps * math.sqrt(w2) * e1
        m[0, 0] = 1.0 - (1.0 + 2.0 * tau) * w2 * e2
        m[0, 3] = off
        m[3, 0] = off
        m[2, 2] = 2.0 * tau * w2 * e2
        m[3, 3] = w2 * e2
    elif spec.kind == "psi2":
        eps = float(spec.eps)
        w2 = 1.0 - eps * eps
        off = eps * math.sqrt(w2) * e1
        m[0, 0] = w2 * (1.0 - e2)
        m[1, 1] = eps * eps
        m[1, 2] = off
        m[2, 1] = off
        m[2, 2] = w2 * e2
    else:
        raise UnsupportedSpec(f"no vacuum closed form for {spec.kind!r}")
    return m


def closed_form_vacuum(spec: InitialStateSpec, bath: BathParams, t: float) -> DensityMatrix:
    """Analytic solution at n_bar = 0, assembled in the collective basis.

    Valid for the six named initial states; the squeeze phase is inert at
    N = 0 and gamma enters only through tau = gamma * t.
    """
    if spec.kind == "custom":
        raise UnsupportedSpec("closed forms exist only for the named initial states")
    if bath.n_bar != 0.0:
        raise UnsupportedBath(f"vacuum closed form needs n_bar = 0, got {bath.n_bar}")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return DensityMatrix(_vacuum_entries(spec, bath.gamma * t), BasisTag.DFS)


def evolve_closed_vacuum(spec: InitialStateSpec, bath: BathParams, times) -> Trajectory:
    """Trajectory built from the vacuum closed forms."""
    t = np.asarray(times, dtype=float)
    states = [closed_form_vacuum(spec, bath, tk) for tk in t]
    return Trajectory(t, states, bath, METHOD_CLOSED)


@dataclass(frozen=True)
class GeneralFormValidation:
    """Entrywise |closed - exact| for one general-closed-form evaluation."""

    deviations: np.ndarray
    max_deviation: float
    tolerance: float
    passed: bool


# Entries of the general closed form whose tabulated coefficients are known
# not to reproduce the exact propagator (measured by the validation gate;
# they fail initial-condition reconstruction at t=0 for generic input).
GENERAL_FORM_KNOWN_DEVIATIONS = frozenset(
    {(0, 0), (0, 2), (0, 3), (2, 0), (2, 2), (3, 0)}
)


def _general_entries(rho0: np.ndarray, bath: BathParams, t: float) -> np.ndarray:
    """Verbatim transcription of the tabulated general-N solution.

    Index convention is 0-based on the collective basis (entry (0,0) is
    the phi_1 population). Grouping of a few ambiguous brackets follows
    the most literal reading; the validation gate, not this transcription,
    decides which entries are trustworthy.
    """
    n = bath.n_bar
    tau = bath.gamma * t
    psi = bath.psi
    r = rho0

    root_n = math.sqrt(n)
    root_np1 = math.sqrt(n + 1.0)
    big_m = math.sqrt(n * (n + 1.0))          # sqrt(N(N+1))
    gam = 2.0 * n + 1.0                       # 2N+1
    q = math.sqrt(gam) * math.sqrt(2.0 * n * n + n)   # sqrt(2N+1) sqrt(2N^2+N)
    rate_fast = 2.0 * (root_n + root_np1) ** 2
    rate_slow = 2.0 * (root_n - root_np1) ** 2
    e_fast = math.exp(-rate_fast * tau)
    e_slow = math.exp(-rate_slow * tau)
    e_gam = math.exp(-gam * tau)
    eip = np.exp(1j * psi)
    eim = np.exp(-1j * psi)

    out = np.zeros((4, 4), dtype=complex)

    # Populations and coherences of the invariant phi_2 level.
    out[0, 1] = r[0, 1]
    out[1, 0] = r[1, 0]
    out[1, 1] = r[1, 1]
    out[1, 2] = r[1, 2] * e_gam
    out[1, 3] = r[1, 3] * e_gam
    out[2, 1] = r[2, 1] * e_gam
    out[3, 1] = r[3, 1] * e_gam

    # rho_11.
    s34 = r[3, 3] + r[2, 2]
    pref11 = 4.0 / (big_m * (8.0 * n + 4.0))
    a_plus = ((-gam * s34 * math.sqrt(n * (n + 1.0) / 4.0) + s34) * n * n
              + s34 * n + 0.25 * r[3, 3])
    a_minus = ((-gam * s34 * math.sqrt(n * (n + 1.0) / 4.0) - s34) * n * n
               - s34 * n - 0.25 * r[3, 3])
    const11 = gam * (r[3, 3] + r[2, 2] + r[0, 0]) * big_m
    out[0, 0] = pref11 * (a_plus * e_fast + a_minus * e_slow + const11)

    # rho_13.
    denom13 = root_n * (24.0 * n ** 3 + 36.0 * n ** 2 + 10.0 * n - 1.0)
    pref13 = 12.0 * e_gam / denom13
    half = n + 0.5
    exp13_plus = math.exp(tau * (-math.sqrt(2.0 * n * n + n) * gam
                                 + 4.0 * n * root_np1 * math.sqrt(gam))
                          / math.sqrt(2.0 * n * n + n))
    exp13_minus = math.exp(-tau * (math.sqrt(2.0 * n * n + n) * gam
                                   + 4.0 * n * root_np1 * math.sqrt(gam))
                           / math.sqrt(2.0 * n * n + n))
    t13_1 = (-(2.0 / 3.0) * half * (n * root_np1 + 0.25 * q)
             * (r[3, 2] - eip * r[2, 3]) * exp13_plus)
    t13_2 = (-(2.0 / 3.0) * half * (n * root_np1 - 0.25 * q)
             * (eip * r[2, 3] + r[3, 2]) * exp13_minus)
    t13_3 = (-(1.0 / 3.0) * half * r[2, 3] * eip
             + r[0, 2] * (n * n + n - 1.0 / 12.0)) * q
    t13_4 = (4.0 / 3.0) * half * root_np1 * r[3, 2]
    out[0, 2] = pref13 * (t13_1 + t13_2 + t13_3 + t13_4)

    # rho_14.
    pref14 = 8.0 * e_gam / (gam * (12.0 * n * n + 12.0 * n - 1.0))
    f_plus = (math.exp(-(gam + 4.0 * big_m) * tau)
              * (-0.5 * half * (2.0 * r[3, 3] + r[2, 2]) * big_m
                 + (0.5 * r[3, 3] + r[2, 2]) * (n * n + n)
                 + 0.125 * r[3, 3]))
    f_minus = (-math.exp(-(gam - 4.0 * big_m) * tau)
               * (0.5 * half * (2.0 * r[3, 3] + r[2, 2]) * big_m
                  + (0.5 * r[3, 3] + r[2, 2]) * (n * n + n)
                  + 0.125 * r[3, 3]))
    f_const = 1.5 * (math.sqrt(gam) * r[0, 3] * (n * n + n - 1.0 / 12.0)
                     * math.sqrt(2.0 * n * n + n)
                     + (2.0 / 3.0) * half * (2.0 * r[3, 3] + r[2, 2]) * n * root_np1)
    out[0, 3] = pref14 * (f_plus + f_minus + f_const)

    # rho_31.
    pref31 = -8.0 * eim * e_gam / denom13
    exp31_plus = np.exp((-(gam * tau + 1j * psi) * math.sqrt(2.0 * n * n + n)
                         + 4.0 * tau * n * root_np1 * math.sqrt(gam))
                        / math.sqrt(2.0 * n * n + n))
    exp31_minus = np.exp((-(gam * tau + 1j * psi) * math.sqrt(2.0 * n * n + n)
                          - 4.0 * tau * n * root_np1 * math.sqrt(gam))
                         / math.sqrt(2.0 * n * n + n))
    g1 = ((n * root_np1 - 0.25 * q) * half
          * (eip * r[2, 3] + r[3, 2]) * exp31_plus)
    g2 = (eip * half * (n * root_np1 + 0.25 * q)
          * (eip * r[2, 3] - r[3, 2]) * exp31_minus)
    g3 = (-(2.0 / 3.0) * q
          * (r[2, 0] * eip * (n * n + n - 0.5) - (1.0 / 3.0) * half * r[3, 2]))
    g4 = -gam * n * root_np1 * r[2, 3] * eip
    out[2, 0] = pref31 * (g1 + g2 + g3 + g4)

    # rho_33.
    out[2, 2] = 0.5 * ((r[2, 2] + r[3, 3]) * ((n + 1.0) / big_m) * e_slow
                       + (r[2, 2] - r[3, 3]) * ((n + 1.0) / big_m) * e_fast)

    # rho_34 and rho_43.
    out[2, 3] = (0.5 * (r[2, 3] - eim * r[3, 2]) * e_slow
                 + 0.5 * (r[2, 3] + eim * r[3, 2]) * e_fast)
    out[3, 2] = (0.5 * (r[3, 2] - eip * r[2, 3]) * e_slow
                 + 0.5 * (r[3, 2] + eip * r[2, 3]) * e_fast)

    # rho_41.
    pref41 = 12.0 * e_gam / (n * root_np1 * gam * (12.0 * n * n + 12.0 * n - 1.0))
    mix41 = 0.5 * r[2, 2] + r[3, 3]
    h1 = ((1.0 / 3.0) * n * root_np1
          * (-0.5 * half * mix41 * big_m
             + (2.0 * r[2, 2] + r[3, 3]) * (n * n + n)
             + 0.25 * r[3, 3])
          * math.exp(-(gam + 4.0 * big_m) * tau))
    h2 = (-(1.0 / 3.0) * n * root_np1
          * (gam * mix41 * big_m
             + (2.0 * r[2, 2] + r[3, 3]) * (n * n + n)
             + 0.25 * r[3, 3])
          * n * math.exp(-(gam - 4.0 * big_m) * tau))
    h3 = big_m * (math.sqrt(gam) * r[3, 0] * (n * n - 1.0 / 12.0 + n)
                  * math.sqrt(2.0 * n * n + n)
                  + (4.0 / 3.0) * half * n * root_np1 * n * mix41)
    out[3, 0] = pref41 * (h1 + h2 + h3)

    # rho_44.
    out[3, 3] = ((0.5 * r[3, 3] - (big_m / gam) * r[2, 2]) * e_fast
                 + (0.5 * r[3, 3] + (big_m / gam) * r[2, 2]) * e_slow)

    return out


def closed_form_general(rho0: DensityMatrix, bath: BathParams, t: float, *,
                        validate: bool = True, strict: bool = False,
                        tolerance: float = 1e-8
                        ) -> tuple[DensityMatrix, GeneralFormValidation | None]:
    """Tabulated general-N closed form, gated against the exact propagator.

    Returns the verbatim-transcribed state together with the validation
    report. The matrix is intentionally not invariant-checked: the point
    of the gate is to measure how far the transcribed expressions drift from
    the exact solution (several entries fail t=0 reconstruction; see
    GENERAL_FORM_KNOWN_DEVIATIONS). With ``strict`` the deviation raises
    instead of just being reported.
    """
    if bath.n_bar <= 0.0:
        raise SingularBath(
            f"general closed form needs n_bar > 0 strictly, got {bath.n_bar}"
        )
    if rho0.basis != BasisTag.DFS:
        raise ValueError("general closed form takes the initial state in the DFS basis")
    if t < 0.0:
        raise ValueError("t must be >= 0")

    mat = _general_entries(np.asarray(rho0.mat), bath, t)
    state = DensityMatrix(mat, BasisTag.DFS)
    report = None
    if validate:
        exact = ExactPropagator(rho0, bath).state_mat(t)
        dev = np.abs(mat - exact)
        max_dev = float(np.max(dev))
        report = GeneralFormValidation(
            deviations=dev,
            max_deviation=max_dev,
            tolerance=tolerance,
            passed=max_dev <= tolerance,
        )
        if strict and not report.passed:
            raise ValidationFailed(
                f"closed form deviates from exact propagator by {max_dev:.3e}",
                max_dev,
            )
    return state, report


def steady_time(bath: BathParams, decades: float = 20.0) -> float:
    """Time by which the slowest decaying mode has dropped by ~e^-decades.

    The decay rates are 2N+1 (coherences into the dark plane) and
    2(sqrt(N) -+ sqrt(N+1))^2 (population block); the population rate
    falls like 1/2N for large N, so scales based on 1/(2N+1) alone stop
    being conservative around N of order one.
    """
    n = bath.n_bar
    slow = min(2.0 * n + 1.0,
               2.0 * (math.sqrt(n + 1.0) - math.sqrt(n)) ** 2)
    return decades / (slow * bath.gamma)


