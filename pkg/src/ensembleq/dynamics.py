"""Time evolution: rotations of distributions, reduced transition maps,
purity-conserving (unitary) evolution, and purity-changing flows.

Purity-conserving evolution of the reduced state is an orthogonal rotation of
the Bloch vector, equivalently conjugation of the density matrix by a unitary
U = exp(i alpha_m tau_m); infinitesimally this is the von Neumann equation
d rho/dt = -i [H, rho], on Bloch components d rho_k/dt = 2 eps_lmk H_l rho_m.
The general reduced evolution adds a scaling rate D:

    d rho/dt = -i [H, rho] + D (rho - 1/2),   dP/dt = 2 D P.

Integrators are fixed-step classical 4th order. Constraint violations along a
trajectory (purity above one) abort loudly; nothing is clamped or projected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qmatrix
from .manifolds import BlochState, Ensemble
from .qmatrix import LEVI, PAULI
from .validate import ConstraintViolation, as_float_array, check_rotation


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """H = h_k tau_k + h0 for the two-state system, or an explicit matrix."""

    hk: np.ndarray
    h0: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.hk)
        if arr.ndim == 2:
            if np.abs(arr - arr.conj().T).max() > 1e-12:
                raise ConstraintViolation("Hamiltonian matrix is not Hermitian")
            object.__setattr__(self, "hk", arr.astype(complex))
        else:
            vec = as_float_array(arr, "hk")
            if vec.shape != (3,):
                raise ValueError("component form must be a real 3-vector")
            object.__setattr__(self, "hk", vec)
        object.__setattr__(self, "h0", float(self.h0))

    def matrix(self) -> np.ndarray:
        if self.hk.ndim == 2:
            return self.hk + self.h0 * np.eye(self.hk.shape[0])
        return qmatrix.operator_from_direction(self.hk, self.h0)


def _as_hamiltonian(h) -> Hamiltonian:
    if isinstance(h, Hamiltonian):
        return h
    arr = np.asarray(h)
    if arr.ndim == 2:
        return Hamiltonian(arr)
    return Hamiltonian(as_float_array(arr, "H"))


@dataclass(frozen=True, eq=False)
class ReducedTransition:
    """Linear map rho(t1) -> rho(t2) of reduced states."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_float_array(self.matrix, "S"))

    @property
    def purity_conserving(self) -> bool:
        s = self.matrix
        return float(np.abs(s.T @ s - np.eye(s.shape[0])).max()) <= 1e-10

    def apply(self, state) -> BlochState:
        vec = as_float_array(getattr(state, "rho", state), "rho")
        return BlochState(self.matrix @ vec)


@dataclass(frozen=True)
class FlowParams:
    """Coefficients of the linearised purity flow near the pure fixed point.

    d(1-P)/dt = -D and dD/dt = -a D + b (1-P); the fixed-point regime needs
    a > 0 and 0 < b < a^2/4, giving decay rates (a +- sqrt(a^2-4b))/2.
    """

    a: float
    b: float

    @property
    def rates(self) -> tuple[float, float]:
        disc = self.a * self.a - 4.0 * self.b
        if disc < 0:
            raise ValueError("a^2 - 4b < 0: rates are complex (oscillatory regime)")
        root = math.sqrt(disc)
        return 0.5 * (self.a + root), 0.5 * (self.a - root)

    @property
    def in_fixed_point_regime(self) -> bool:
        return self.a > 0 and 0.0 < self.b < self.a * self.a / 4.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    bloch: np.ndarray
    matrices: np.ndarray | None = None
    d_values: np.ndarray | None = None

    @property
    def purity(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.bloch, self.bloch)

    def to_csv(self, path) -> None:
        from .reporting import write_csv

        k = self.bloch.shape[1]
        cols = ["t"] + [f"rho_{i + 1}" for i in range(k)] + ["P"]
        rows = []
        pur = self.purity
        for i, t in enumerate(self.times):
            row = {"t": t, "P": pur[i]}
            for j in range(k):
                row[f"rho_{j + 1}"] = self.bloch[i, j]
            if self.d_values is not None:
                row["D"] = self.d_values[i]
            rows.append(row)
        if self.d_values is not None:
            cols.append("D")
        write_csv(path, cols, rows)


# ---------------------------------------------------------------------------
# rotations of distributions and reduced transition maps
# ---------------------------------------------------------------------------

def rotate_distribution(ensemble: Ensemble, rotation) -> Ensemble:
    """Rotate every micro-state of a sphere ensemble, carrying probabilities along.

    Commutes with reduction: reduce(rotated) = R reduce(original).
    """
    if ensemble.manifold != "s2":
        raise ValueError("rotation acts on S^2 ensembles")
    rot = check_rotation(rotation)
    return Ensemble("s2", ensemble.points @ rot.T, ensemble.probs)


def reduced_from_micro(transition, ensemble: Ensemble) -> ReducedTransition:
    """Reduced transition matrix induced by a micro-state stochastic matrix.

    With F the matrix of micro-state coordinates and p the current weights,
    S_kl = rho_k(t) rho_l(t') / sum_m rho_m(t')^2 where rho(t) is the reduced
    state of the propagated distribution. The map is exact on this ensemble
    (S rho(t') = rho(t)) but rank one, so it is documented and tested only
    through that contract. Zero purity at t' leaves the quotient undefined.
    """
    trans = as_float_array(transition, "transition")
    n = len(ensemble)
    if trans.shape != (n, n):
        raise ValueError("transition matrix shape does not match the ensemble")
    if np.any(trans < -1e-12):
        raise ConstraintViolation("transition matrix has negative entries")
    col_sums = trans.sum(axis=0)
    if np.abs(col_sums - 1.0).max() > 1e-12:
        raise ConstraintViolation("transition matrix columns must sum to 1")
    rho_before = ensemble.probs @ ensemble.points
    norm2 = float(rho_before @ rho_before)
    if norm2 <= 1e-15:
        raise ConstraintViolation("reduced state at t' has zero purity; map undefined")
    rho_after = (trans @ ensemble.probs) @ ensemble.points
    return ReducedTransition(np.outer(rho_after, rho_before) / norm2)


# ---------------------------------------------------------------------------
# purity-conserving (unitary) evolution
# ---------------------------------------------------------------------------

def rotation_from_generator(alpha) -> np.ndarray:
    """Closed-form Bloch rotation for conjugation by U = exp(i alpha_m tau_m).

    S_kl = (1 - 2 sin^2 g) d_kl + 2 sin^2 g b_k b_l + 2 sin g cos g eps_klm b_m
    with g = |alpha| and b = alpha/g. The handedness (conjugation by
    exp(+i alpha.tau) rotates by -2g about alpha) is fixed by matching the
    matrix conjugation oracle.
    """
    a = as_float_array(alpha, "alpha")
    if a.shape != (3,):
        raise ValueError("alpha must be a real 3-vector")
    gamma = float(np.linalg.norm(a))
    if gamma == 0.0:
        return np.eye(3)
    beta = a / gamma
    s, c = math.sin(gamma), math.cos(gamma)
    return (
        (1.0 - 2.0 * s * s) * np.eye(3)
        + 2.0 * s * s * np.outer(beta, beta)
        + 2.0 * s * c * np.einsum("klm,m->kl", LEVI, beta)
    )


def unitary_step(state, alpha) -> BlochState:
    """Apply the closed-form rotation of ``rotation_from_generator`` to a state."""
    vec = as_float_array(getattr(state, "rho", state), "rho")
    if vec.shape != (3,):
        raise ValueError("unitary_step acts on two-state Bloch vectors")
    return BlochState(rotation_from_generator(alpha) @ vec)


def conjugation_oracle(state, alpha) -> np.ndarray:
    """Bloch vector of U rho U^dagger with U = exp(i alpha_m tau_m)."""
    vec = as_float_array(getattr(state, "rho", state), "rho")
    a = as_float_array(alpha, "alpha")
    gamma = float(np.linalg.norm(a))
    beta = a / gamma if gamma > 0 else a
    u = math.cos(gamma) * np.eye(2) + 1j * math.sin(gamma) * np.einsum("k,kij->ij", beta, PAULI)
    rho = qmatrix.density_from_bloch(vec)
    return qmatrix.bloch_from_density(u @ rho @ u.conj().T)


def _steps(t_span, dt: float) -> tuple[float, float, int]:
    t0, t1 = float(t_span[0]), float(t_span[1])
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    n = max(1, int(round((t1 - t0) / dt)))
    return t0, (t1 - t0) / n, n


def _rk4(y, t, h, rhs):
    k1 = rhs(y, t)
    k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h)
    k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h)
    k4 = rhs(y + h * k3, t + h)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_von_neumann(rho0, hamiltonian, t_span, dt: float) -> Trajectory:
    """Fixed-step 4th-order integration of d rho/dt = -i [H, rho].

    Accepts a density matrix, BlochState or Bloch vector. Trace and
    Hermiticity drift beyond 1e-10 over the span abort the run.
    """
    ham = _as_hamiltonian(hamiltonian).matrix()
    arr = np.asarray(getattr(rho0, "rho", rho0))
    mat = qmatrix.check_density_matrix(arr) if arr.ndim == 2 else qmatrix.density_from_bloch(arr)
    if ham.shape != mat.shape:
        raise ValueError("Hamiltonian and state dimensions differ")
    t0, h, n = _steps(t_span, dt)

    def rhs(y, _t):
        return -1j * (ham @ y - y @ ham)

    times = t0 + h * np.arange(n + 1)
    mats = np.empty((n + 1,) + mat.shape, dtype=complex)
    mats[0] = mat
    for i in range(n):
        mat = _rk4(mat, times[i], h, rhs)
        mats[i + 1] = mat
    if abs(np.trace(mat).real - 1.0) > 1e-10 or np.abs(mat - mat.conj().T).max() > 1e-10:
        raise ConstraintViolation("integrator drifted: trace/Hermiticity broken beyond 1e-10")
    basis = PAULI if mat.shape == (2, 2) else qmatrix.L_BASIS
    bloch = np.einsum("kij,nji->nk", basis, mats).real
    return Trajectory(times, bloch, matrices=mats)


def integrate_bloch(rho0, hk, t_span, dt: float) -> Trajectory:
    """Integrate the component form d rho_k/dt = 2 eps_lmk H_l rho_m directly."""
    vec = as_float_array(getattr(rho0, "rho", rho0), "rho0")
    h_vec = as_float_array(hk, "H")

    def rhs(y, _t):
        return 2.0 * np.cross(h_vec, y)

    t0, h, n = _steps(t_span, dt)
    times = t0 + h * np.arange(n + 1)
    out = np.empty((n + 1, 3))
    out[0] = vec
    for i in range(n):
        vec = _rk4(vec, times[i], h, rhs)
        out[i + 1] = vec
    return Trajectory(times, out)


def hamiltonian_from_rotation(s_of_t, t: float, h: float = 3e-5) -> np.ndarray:
    """Recover H_k from a rotating reduced map via

        H_k = -(1/4) dS_jl/dt S^-1_lm eps_jmk,

    with the time derivative taken by central differences."""
    s_plus = np.asarray(s_of_t(t + h), dtype=float)
    s_minus = np.asarray(s_of_t(t - h), dtype=float)
    s_now = np.asarray(s_of_t(t), dtype=float)
    s_dot = (s_plus - s_minus) / (2.0 * h)
    m = s_dot @ np.linalg.inv(s_now)
    return -0.25 * np.einsum("jm,jmk->k", m, LEVI)


# ---------------------------------------------------------------------------
# purity-changing flows
# ---------------------------------------------------------------------------

def integrate_open(rho0, hamiltonian, d_rate, t_span, dt: float) -> Trajectory:
    """Integrate d rho/dt = -i [H, rho] + D (rho - 1/2) for the two-state system.

    ``d_rate`` is a callable (bloch_vector, t) -> D, or a constant. Purity
    obeys dP/dt = 2 D P along the trajectory. A purity above 1 + 1e-9 aborts
    with a constraint-violation report instead of being projected back.
    """
    ham = _as_hamiltonian(hamiltonian if hamiltonian is not None else np.zeros(3)).matrix()
    arr = np.asarray(getattr(rho0, "rho", rho0))
    mat = qmatrix.check_density_matrix(arr) if arr.ndim == 2 else qmatrix.density_from_bloch(arr)
    if mat.shape != (2, 2):
        raise ValueError("open-system integration is implemented for the two-state system")
    if not callable(d_rate):
        const = float(d_rate)
        d_rate = lambda _rho, _t: const  # noqa: E731
    half = 0.5 * np.eye(2)

    def rhs(y, t):
        bloch = np.einsum("kij,ji->k", PAULI, y).real
        return -1j * (ham @ y - y @ ham) + d_rate(bloch, t) * (y - half)

    t0, h, n = _steps(t_span, dt)
    times = t0 + h * np.arange(n + 1)
    mats = np.empty((n + 1, 2, 2), dtype=complex)
    d_vals = np.empty(n + 1)
    mats[0] = mat
    for i in range(n + 1):
        bloch_i = np.einsum("kij,ji->k", PAULI, mats[i]).real
        d_vals[i] = d_rate(bloch_i, times[i])
        pur = float(bloch_i @ bloch_i)
        if pur > 1.0 + 1e-9:
            raise ConstraintViolation(
                f"purity exceeded 1 at t = {times[i]!r}: P = {pur!r}; "
                "the flow left the physical region"
            )
        if i < n:
            mats[i + 1] = _rk4(mats[i], times[i], h, rhs)
    bloch = np.einsum("kij,nji->nk", PAULI, mats).real
    return Trajectory(times, bloch, matrices=mats, d_values=d_vals)


def syncoherence_flow(p0: float, d0: float, params: FlowParams, t_span, dt: float) -> Trajectory:
    """Integrate the purity flow near the pure-state fixed point.

    State variables are u = 1 - P and D with du/dt = -D, dD/dt = -a D + b u.
    For a > 0, 0 < b < a^2/4 and 0 <= D0 <= eps_1 (1 - P0) the trajectory
    decays exponentially onto (P, D) = (1, 0); other parameter regimes
    integrate but are unvalidated. A purity above 1 + 1e-9 aborts.

    Returns a Trajectory whose ``bloch`` column holds P and ``d_values`` D.
    """
    a, b = params.a, params.b
    u = 1.0 - float(p0)
    d = float(d0)
    if u < 0:
        raise ValueError("initial purity exceeds 1")

    t0, h, n = _steps(t_span, dt)
    times = t0 + h * np.arange(n + 1)
    state = np.array([u, d])

    def rhs(y, _t):
        return np.array([-y[1], -a * y[1] + b * y[0]])

    p_vals = np.empty(n + 1)
    d_vals = np.empty(n + 1)
    for i in range(n + 1):
        if state[0] < -1e-9:
            raise ConstraintViolation(
                f"purity exceeded 1 at t = {times[i]!r}: a pure state cannot get purer"
            )
        p_vals[i] = 1.0 - state[0]
        d_vals[i] = state[1]
        if i < n:
            state = _rk4(state, times[i], h, rhs)
    return Trajectory(times, p_vals.reshape(-1, 1), d_values=d_vals)


def syncoherence_closed_form(p0: float, d0: float, params: FlowParams, times) -> tuple[np.ndarray, np.ndarray]:
    """Exact (P, D) of the linear flow: 1-P and D as two-exponential decays.

    1 - P = x1 exp(-eps_1 t) + x2 exp(-eps_2 t),
    D     = eps_1 x1 exp(-eps_1 t) + eps_2 x2 exp(-eps_2 t),

    with rates eps_{1,2} = (a +- sqrt(a^2 - 4b))/2 and x1, x2 fixed by the
    initial conditions.
    """
    eps1, eps2 = params.rates
    if abs(eps1 - eps2) < 1e-14:
        raise ValueError("degenerate rates: closed form needs eps_1 != eps_2")
    u0 = 1.0 - float(p0)
    x1 = (float(d0) - eps2 * u0) / (eps1 - eps2)
    x2 = u0 - x1
    t = np.asarray(times, dtype=float) - float(times[0])
    u = x1 * np.exp(-eps1 * t) + x2 * np.exp(-eps2 * t)
    d = eps1 * x1 * np.exp(-eps1 * t) + eps2 * x2 * np.exp(-eps2 * t)
    return 1.0 - u, d
