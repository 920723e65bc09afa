"""Products of observables and measurement sequences.

Three product structures coexist on a classical ensemble and none is singled
out as the default:

  * classical product: multiply sharp substate values, then average; needs the
    joint probabilities of a substate extension,
  * pointwise product: multiply per-micro-state means; models measurements
    with no memory between them,
  * conditional product A o B: a first measurement of B reduces the state to
    an eigenstate of B, and A is evaluated there; its expectation equals the
    matrix-side anticommutator value tr({A, B} rho)/2.

The conditional three-point function follows the same pattern with the inner
pair measured first; it equals tr({{A, B}, C} rho)/4 and is symmetric only in
the first two slots. ``measurement_chain`` realises the same numbers as a
series of state-reduction operations, and ``simulate_sequences`` is a seeded
Monte Carlo of the record/reduction/evaluation protocol.

Measurement order convention: in ``[A, B, C]`` the rightmost observable is
measured first, so the list reads like the product A o B o C.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import qmatrix
from .manifolds import BlochState, Ensemble, SubstateEnsemble
from .observables import (
    NoEigenstateError,
    ProductObservable,
    RANDOM,
    RandomObservable,
    TwoLevelObservable,
    has_eigenstates,
    operator_of,
)
from .validate import DimensionMismatch, as_float_array

_SNAP = 1e-12


def _require_unit_spin(obs, name: str) -> TwoLevelObservable:
    if isinstance(obs, RandomObservable):
        raise NoEigenstateError(f"{name} is the random observable: it has no eigenstates")
    if not isinstance(obs, TwoLevelObservable) or not obs.is_unit:
        raise ValueError(f"{name} must be a unit-direction observable with zero offset")
    return obs


def _as_bloch(state, dim: int) -> np.ndarray:
    vec = as_float_array(getattr(state, "rho", state), "state")
    if vec.shape != (dim,):
        raise DimensionMismatch(f"state must have {dim} components")
    return vec


def _state_matrix(state) -> np.ndarray:
    """Density matrix from a BlochState, bare Bloch vector, or matrix."""
    arr = np.asarray(getattr(state, "rho", state))
    if arr.ndim == 2:
        return qmatrix.check_density_matrix(arr)
    return qmatrix.density_from_bloch(as_float_array(arr, "state"))


def _check_chain_dims(seq, mat) -> None:
    want = 3 if mat.shape[0] == 2 else 15
    for obs in seq:
        if isinstance(obs, TwoLevelObservable) and obs.dim != want:
            raise DimensionMismatch("observable dimension does not match the state")


def eigenstate_bloch(obs: TwoLevelObservable, sign: int) -> BlochState:
    """The unique two-state eigenstate of a spin: rho = sign * e."""
    _require_unit_spin(obs, "observable")
    if obs.dim != 3:
        raise DimensionMismatch("only two-state eigenstates are unique")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return BlochState(sign * obs.e)


def conditional_expectation_in_eigenstate(a, b) -> float:
    """<A>_{+B}: mean of A in the +1 eigenstate of B; equals tr(A B)/2."""
    a = _require_unit_spin(a, "A")
    b = _require_unit_spin(b, "B")
    if a.dim != 3 or b.dim != 3:
        raise DimensionMismatch("defined for the two-state system")
    return float(a.e @ b.e)


def conditional_correlation_2pt(a, b, state) -> float:
    """<A o B>: measure B first, then A in the eigenstate selected by B.

    Evaluated through the expectation-value construction

        (1 + <B>)/2 * <A>_{+B}  -  (1 - <B>)/2 * <A>_{-B};

    for the four-state system the eigenstates are degenerate and the value is
    produced by the projective reduction chain instead. Either path agrees
    with tr({A, B} rho)/2 and is symmetric under A <-> B.
    """
    a = _require_unit_spin(a, "A")
    b = _require_unit_spin(b, "B")
    if a.dim != b.dim:
        raise DimensionMismatch("A and B dimensions differ")
    if a.dim == 3:
        rho = _as_bloch(state, 3)
        a_plus_b = float(a.e @ b.e)
        a_minus_b = float(a.e @ (-b.e))
        mean_b = float(b.e @ rho)
        return 0.5 * (1.0 + mean_b) * a_plus_b - 0.5 * (1.0 - mean_b) * a_minus_b
    _, value = measurement_chain([a, b], state)
    return value


def conditional_correlation_3pt(a, b, c, state) -> float:
    """<A o B o C>: C first, then B, then A, with eigenstate reduction between.

    Two-state path: the explicit expectation-value expression built from
    <A>_{+-B}, <B>_{+-C} and <C>. Four-state path: projective reduction chain.
    Equals tr({{A, B}, C} rho)/4; invariant under A <-> B but not B <-> C.
    """
    if isinstance(a, RandomObservable):
        # R o X = R for every X, so the correlation vanishes identically.
        _require_unit_spin(b, "B")
        _require_unit_spin(c, "C")
        return 0.0
    a = _require_unit_spin(a, "A")
    b = _require_unit_spin(b, "B")
    c = _require_unit_spin(c, "C")
    if not (a.dim == b.dim == c.dim):
        raise DimensionMismatch("A, B, C dimensions differ")
    if a.dim == 3:
        rho = _as_bloch(state, 3)
        a_pb = float(a.e @ b.e)
        a_mb = float(a.e @ (-b.e))
        b_pc = float(b.e @ c.e)
        b_mc = float(b.e @ (-c.e))
        mean_c = float(c.e @ rho)
        return 0.25 * (
            a_pb * ((1.0 + b_pc) * (1.0 + mean_c) - (1.0 + b_mc) * (1.0 - mean_c))
            + a_mb * ((1.0 - b_mc) * (1.0 - mean_c) - (1.0 - b_pc) * (1.0 + mean_c))
        )
    _, value = measurement_chain([a, b, c], state)
    return value


def conditional_product(x, y):
    """The observable A o B (B measured first), two-state only.

    The result is again a +-1-valued observable, with one of three shapes:
    the unit observable when the directions coincide, the random observable R
    when they are orthogonal, and in general a mean function constant + spin
    part. Left association (A o B) o C is supported by passing the returned
    object back in; the right factor must always admit eigenstates, so
    A o R raises ``NoEigenstateError``. Directions within 1e-12 of the exact
    parallel/orthogonal cases are snapped onto them.
    """
    if isinstance(y, RandomObservable) or not has_eigenstates(y):
        raise NoEigenstateError(
            "the right factor has no eigenstates, so the conditional product is undefined"
        )
    if isinstance(x, RandomObservable):
        return RANDOM
    y = _require_unit_spin(y, "right factor")
    if y.dim != 3:
        raise DimensionMismatch("conditional products are implemented for the two-state system")
    if isinstance(x, ProductObservable):
        u, d = x.coeff, x.const
    else:
        u, d = x.e, x.e0
    if u.shape != y.e.shape:
        raise DimensionMismatch("factor dimensions differ")
    const = float(u @ y.e)   # mean of x in the +1 eigenstate of y, offset removed
    if abs(d) <= _SNAP:
        if abs(const - 1.0) <= _SNAP:
            return TwoLevelObservable(np.zeros(3), 1.0)
        if abs(const + 1.0) <= _SNAP:
            return TwoLevelObservable(np.zeros(3), -1.0)
        if abs(const) <= _SNAP:
            return RANDOM
        return ProductObservable(np.zeros(3), const)
    if abs(const) <= _SNAP and abs(abs(d) - 1.0) <= _SNAP:
        return TwoLevelObservable(math.copysign(1.0, d) * y.e)
    return ProductObservable(d * y.e, const)


def _two_level_projectors(obs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    op = operator_of(obs)
    eye = np.eye(op.shape[0])
    if np.abs(op @ op - eye).max() > 1e-12:
        raise ValueError("observable operator does not square to 1 (spectrum is not +-1)")
    return op, 0.5 * (eye + op), 0.5 * (eye - op)


def sequence_probabilities(a, b, state) -> dict[str, float]:
    """Probabilities W_{s_A s_B} for measuring B first, then A.

    Keys "++", "+-", "-+", "--" give the A outcome first. The four entries sum
    to one, and W_{++} + W_{--} is independent of the measurement order.
    """
    a = _require_unit_spin(a, "A")
    b = _require_unit_spin(b, "B")
    rho = _state_matrix(state)
    _check_chain_dims([a, b], rho)
    _, pb_plus, pb_minus = _two_level_projectors(b)
    op_a, pa_plus, pa_minus = _two_level_projectors(a)
    out = {}
    for s_b, proj_b in ((1, pb_plus), (-1, pb_minus)):
        w_b = float(np.trace(proj_b @ rho).real)
        if w_b > 1e-15:
            reduced = proj_b @ rho @ proj_b / w_b
        else:
            reduced = proj_b / float(np.trace(proj_b).real)
        for s_a, proj_a in ((1, pa_plus), (-1, pa_minus)):
            key = ("+" if s_a > 0 else "-") + ("+" if s_b > 0 else "-")
            out[key] = float(np.trace(proj_a @ reduced).real) * w_b
    return out


@dataclass(frozen=True)
class WeightedEigenstateSum:
    """Signed combination of eigenstate density matrices from a measurement chain.

    The trace of the signed sum equals the conditional correlation of the
    measured sequence.
    """

    terms: tuple

    def signed_sum(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((2, 2), dtype=complex)
        out = np.zeros_like(self.terms[0][1], dtype=complex)
        for w, mat in self.terms:
            out = out + w * mat
        return out

    def trace(self) -> float:
        return float(np.trace(self.signed_sum()).real)


def measurement_chain(observables, state) -> tuple[WeightedEigenstateSum, float]:
    """Apply the state-reduction maps of a measurement sequence.

    ``observables`` is ordered like the product, rightmost measured first.
    Each measurement splits every branch into the two outcomes, weighting by
    sign times outcome probability and reducing the branch state projectively
    (for the two-state system this is the unique eigenstate). A branch hit
    with probability exactly zero is kept, carrying weight 0 and the canonical
    eigenspace state. The random observable is legal only in the leftmost
    (last measured) position and contributes an empty sum with value 0.
    """
    seq = list(reversed(list(observables)))
    if not seq:
        raise ValueError("empty measurement sequence")
    for obs in seq[:-1]:
        if isinstance(obs, RandomObservable) or not has_eigenstates(obs):
            raise NoEigenstateError(
                "an inner observable has no eigenstates: the sequence is undefined"
            )
    rho = _state_matrix(state)
    _check_chain_dims(seq, rho)
    branches = [(1.0, rho)]
    for obs in seq:
        if isinstance(obs, RandomObservable):
            # Outcomes +-1 with probability 1/2 each cancel exactly.
            branches = []
            break
        _require_unit_spin(obs, "observable")
        _, proj_plus, proj_minus = _two_level_projectors(obs)
        new = []
        for w, mat in branches:
            for s, proj in ((1, proj_plus), (-1, proj_minus)):
                prob = float(np.trace(proj @ mat).real)
                if prob > 1e-15:
                    reduced = proj @ mat @ proj / prob
                else:
                    prob = 0.0
                    reduced = proj / float(np.trace(proj).real)
                new.append((w * s * prob, reduced))
        branches = new
    value = math.fsum(w for w, _ in branches)
    return WeightedEigenstateSum(tuple(branches)), value


def pointwise_correlation(a, b, ensemble: Ensemble) -> float:
    """<A x B> = sum_s p_s  mean_A(s) mean_B(s); memoryless repeated measurement."""
    def _means(obs):
        if isinstance(obs, RandomObservable):
            return np.zeros(len(ensemble))
        if isinstance(obs, ProductObservable):
            return ensemble.points @ obs.coeff + obs.const
        return ensemble.points @ obs.e + obs.e0
    return float(ensemble.probs @ (_means(a) * _means(b)))


def classical_correlation(dir_a, dir_b, substates: SubstateEnsemble) -> float:
    """<A . B> = sum_tau p_tau gamma_tau(a) gamma_tau(b) on a substate ensemble.

    Both directions must be among the ensemble's stored directions (up to the
    hemisphere convention gamma(-g) = -gamma(g)).
    """
    vals_a = substates.sign_values(dir_a)
    vals_b = substates.sign_values(dir_b)
    return float(substates.probs @ (vals_a * vals_b))


# ---------------------------------------------------------------------------
# Monte Carlo simulation of measurement sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementRecord:
    """Outcomes of one simulated sequence, rightmost-measured first in time."""

    outcomes: tuple

    @property
    def value(self) -> int:
        v = 1
        for _, o in self.outcomes:
            v *= o
        return v


@dataclass(frozen=True)
class SequenceEstimate:
    value: float
    stderr: float
    n: int
    seed: int

    def to_json(self) -> str:
        import json

        return json.dumps(
            {"value": self.value, "stderr": self.stderr, "n": self.n, "seed": self.seed},
            sort_keys=True,
        )


def _chain_tables(observables, state) -> list[np.ndarray]:
    """Exact +1-outcome probabilities for every measurement-history prefix.

    Level i holds 2^i entries indexed by the bit pattern of earlier outcomes
    (bit 0 for +1). These are the prob_plus values on the running eigenstate
    chain, computed once so sampling only draws uniforms.
    """
    seq = list(reversed(list(observables)))
    if not seq:
        raise ValueError("empty measurement sequence")
    for obs in seq[:-1]:
        if isinstance(obs, RandomObservable) or not has_eigenstates(obs):
            raise NoEigenstateError("an inner observable has no eigenstates")
    rho = _state_matrix(state)
    _check_chain_dims(seq, rho)
    states = [rho]
    tables = []
    for obs in seq:
        if isinstance(obs, RandomObservable):
            tables.append(np.full(len(states), 0.5))
            states = [None] * (2 * len(states))
            continue
        _require_unit_spin(obs, "observable")
        _, proj_plus, proj_minus = _two_level_projectors(obs)
        level = np.empty(len(states))
        new_states = []
        for j, mat in enumerate(states):
            p_plus = float(np.trace(proj_plus @ mat).real)
            level[j] = min(1.0, max(0.0, p_plus))
            for prob, proj in ((p_plus, proj_plus), (1.0 - p_plus, proj_minus)):
                if prob > 1e-15:
                    new_states.append(proj @ mat @ proj / prob)
                else:
                    new_states.append(proj / float(np.trace(proj).real))
        tables.append(level)
        states = new_states
    return tables


def _block_signs(tables, rng, count: int) -> int:
    m = len(tables)
    u = rng.random((count, m))
    prefix = np.zeros(count, dtype=np.int64)
    sign = np.ones(count, dtype=np.int64)
    for i in range(m):
        plus = u[:, i] < tables[i][prefix]
        sign *= np.where(plus, 1, -1)
        prefix = 2 * prefix + np.where(plus, 0, 1)
    return int(sign.sum())


def simulate_sequences(
    observables,
    state,
    n_samples: int,
    seed: int,
    n_jobs: int = 1,
    block_size: int = 1 << 16,
) -> SequenceEstimate:
    """Monte Carlo estimate of a conditional correlation from sampled sequences.

    Samples are drawn in fixed blocks, block ``j`` from the dedicated stream
    ``default_rng([seed, j])``, so results are bit-identical for a given
    (seed, n_samples) regardless of ``n_jobs``. The estimator mean converges
    to ``measurement_chain``'s closed form at the usual n^(-1/2) rate; the
    reported standard error is the sample standard deviation over sqrt(n).
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    tables = _chain_tables(observables, state)
    n_blocks = (n_samples + block_size - 1) // block_size

    def run_block(j: int) -> int:
        count = min(block_size, n_samples - j * block_size)
        rng = np.random.default_rng([seed, j])
        return _block_signs(tables, rng, count)

    if n_jobs > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            sums = list(pool.map(run_block, range(n_blocks)))
    else:
        sums = [run_block(j) for j in range(n_blocks)]
    total = sum(sums)
    mean = total / n_samples
    if n_samples > 1:
        var = max(0.0, 1.0 - mean * mean) * n_samples / (n_samples - 1)
        stderr = math.sqrt(var / n_samples)
    else:
        stderr = float("nan")
    return SequenceEstimate(value=mean, stderr=stderr, n=n_samples, seed=seed)


def sample_measurement_records(observables, state, n: int, seed: int) -> list[MeasurementRecord]:
    """Draw full outcome records for n simulated sequences (small n)."""
    seq = list(reversed(list(observables)))
    tables = _chain_tables(observables, state)
    labels = [getattr(o, "label", "A") for o in seq]
    rng = np.random.default_rng([int(seed), 0])
    u = rng.random((int(n), len(seq)))
    records = []
    for row in u:
        prefix = 0
        outcomes = []
        for i in range(len(seq)):
            plus = row[i] < tables[i][prefix]
            outcomes.append((labels[i], 1 if plus else -1))
            prefix = 2 * prefix + (0 if plus else 1)
        records.append(MeasurementRecord(tuple(outcomes)))
    return records
