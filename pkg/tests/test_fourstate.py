import math

import numpy as np
import pytest

from ensembleq import qmatrix
from ensembleq.correlations import simulate_sequences
from ensembleq.fourstate import (
    basis_expectations_three_ways,
    basis_psi,
    bell_check,
    classical_pair_correlator,
    entangled_bloch,
    entangled_psi,
    entangled_state,
    exchange_matrix,
    exchange_symmetry,
    interference_bloch,
    interference_evolution,
    interference_trajectory,
    is_exchange_symmetric,
    outcomes_from_t,
    quantum_pair_correlator,
    rotated_spin_correlation,
    rotated_spin_observables,
    rotated_spin_operators,
    symmetrized_hidden_ensemble,
)
from ensembleq.manifolds import Ensemble, microstate_four, reduce_ensemble

SQ2 = 1.0 / math.sqrt(2.0)


def random_four_state_bloch(rng, n_pure=4):
    psis = rng.normal(size=(n_pure, 4)) + 1j * rng.normal(size=(n_pure, 4))
    psis /= np.linalg.norm(psis, axis=1, keepdims=True)
    w = rng.random(n_pure)
    w /= w.sum()
    return sum(wi * qmatrix.bloch_from_psi(psi) for wi, psi in zip(w, psis))


class TestOutcomeTables:
    def test_anticorrelated(self):
        table = outcomes_from_t(0.0, 0.0, -1.0)
        assert table.w_pm == 0.5 and table.w_mp == 0.5
        assert table.w_pp == 0.0 and table.w_mm == 0.0

    def test_both_bits_up(self):
        table = outcomes_from_t(1.0, 1.0, 1.0)
        assert table.w_pp == 1.0

    def test_centre(self):
        table = outcomes_from_t(0.0, 0.0, 0.0)
        assert set(table.as_dict().values()) == {0.25}

    def test_infeasible(self):
        with pytest.raises(ValueError):
            outcomes_from_t(1.0, 1.0, -1.0)


class TestEntangledState:
    def test_matrix_equals_tensor_form(self):
        t = qmatrix.PAULI
        want = 0.25 * (np.eye(4) - np.kron(t[0], t[0]) - np.kron(t[1], t[1])
                       - np.kron(t[2], t[2]))
        np.testing.assert_array_equal(entangled_state(-1), want)

    def test_matrix_matches_wavefunction_dyad(self):
        for sign in (1, -1):
            dyad = qmatrix.pure_state_matrix(entangled_psi(sign))
            np.testing.assert_allclose(entangled_state(sign), dyad, atol=1e-15)

    def test_bit_expectations_exact(self):
        rho = entangled_state(-1)
        assert qmatrix.qm_expectation(qmatrix.l_operator(1), rho) == 0.0
        assert qmatrix.qm_expectation(qmatrix.l_operator(2), rho) == 0.0
        assert qmatrix.qm_expectation(qmatrix.l_operator(3), rho) == -1.0

    def test_bloch_components(self):
        for sign in (1, -1):
            vec = entangled_bloch(sign).rho
            assert vec[2] == -1.0 and vec[11] == sign and vec[13] == -sign
            assert np.count_nonzero(vec) == 3
            assert entangled_bloch(sign).purity == 3.0

    def test_anticorrelation_conditionals(self):
        # conditional probability of bit 2 given bit 1 from the outcome table
        rho = entangled_state(-1)
        t_vals = [qmatrix.qm_expectation(qmatrix.l_operator(m), rho) for m in (1, 2, 3)]
        w = outcomes_from_t(*t_vals)
        p_up = w.w_pp + w.w_pm
        assert w.w_pp / p_up == 0.0       # p(+1; +1)
        assert w.w_pm / p_up == 1.0       # p(-1; +1)
        p_down = w.w_mp + w.w_mm
        assert w.w_mp / p_down == 1.0     # p(+1; -1)
        assert w.w_mm / p_down == 0.0


class TestRotatedSpins:
    def test_operators_square_to_one(self):
        a, b = rotated_spin_operators(0.7, 1.9)
        np.testing.assert_allclose(a @ a, np.eye(4), atol=1e-15)
        np.testing.assert_allclose(b @ b, np.eye(4), atol=1e-15)

    def test_equal_angles_fully_anticorrelated(self):
        bloch = entangled_bloch(-1)
        for theta in (0.0, 0.4, 2.2):
            assert abs(rotated_spin_correlation(theta, theta, bloch) + 1.0) < 1e-15

    def test_right_angle_uncorrelated(self):
        bloch = entangled_bloch(-1)
        val = rotated_spin_correlation(math.pi / 2.0, 0.0, bloch)
        assert abs(val) < 1e-15

    def test_specific_angles(self):
        bloch = entangled_bloch(-1)
        val = rotated_spin_correlation(math.pi / 2.0, math.pi / 4.0, bloch)
        assert abs(val + SQ2) < 1e-15

    def test_minus_cosine_over_random_angles(self):
        rng = np.random.default_rng(0)
        bloch = entangled_bloch(-1)
        for _ in range(100):
            th, ph = rng.uniform(0.0, 2.0 * math.pi, size=2)
            assert abs(rotated_spin_correlation(th, ph, bloch) + math.cos(th - ph)) < 1e-12

    def test_component_combination_matches_anticommutator(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            bloch = random_four_state_bloch(rng)
            th, ph = rng.uniform(0.0, 2.0 * math.pi, size=2)
            a, b = rotated_spin_operators(th, ph)
            rho = qmatrix.density_from_bloch(bloch)
            oracle = qmatrix.anticommutator_expectation(a, b, rho)
            assert abs(rotated_spin_correlation(th, ph, bloch) - oracle) < 1e-12


class TestBellHarness:
    def test_quantum_violation_at_marked_angles(self):
        corr = quantum_pair_correlator(entangled_bloch(-1))
        res = bell_check(corr, math.pi / 2.0, math.pi / 4.0)
        assert res.violated
        assert abs(res.lhs - SQ2) < 1e-12
        assert abs(res.rhs - (1.0 - SQ2)) < 1e-12
        assert res.lhs - res.rhs > 0.414 - 1e-9

    def test_zero_correlator_satisfies(self):
        res = bell_check(lambda _t: 0.0, math.pi / 2.0, math.pi / 4.0)
        assert not res.violated and res.lhs == 0.0 and res.rhs == 1.0

    def test_classical_correlators_satisfy(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            ens = symmetrized_hidden_ensemble(rng, n_base=3, order=int(rng.integers(3, 7)))
            corr = classical_pair_correlator(ens)
            t1, t2 = rng.uniform(0.0, 2.0 * math.pi, size=2)
            res = bell_check(corr, t1, t2)
            assert not res.violated

    def test_classical_correlator_is_stationary(self):
        # pair correlations of the symmetrised ensemble depend only on the
        # angle difference, which is what the single-angle Bell form assumes
        rng = np.random.default_rng(3)
        ens = symmetrized_hidden_ensemble(rng, n_base=4, order=5)
        corr = classical_pair_correlator(ens)
        from ensembleq.correlations import classical_correlation
        from ensembleq.manifolds import extend_to_substates
        from ensembleq.fourstate import plane_direction

        for t1, t2 in ((0.9, 0.3), (2.5, 1.1)):
            sub = extend_to_substates(ens, [plane_direction(t1), plane_direction(t2)])
            pairwise = -classical_correlation(plane_direction(t1), plane_direction(t2), sub)
            assert abs(pairwise - corr(t1 - t2)) < 1e-12

    def test_classical_coincident_angles(self):
        rng = np.random.default_rng(4)
        corr = classical_pair_correlator(symmetrized_hidden_ensemble(rng))
        assert corr(0.0) == -1.0
        assert corr(math.pi) == 1.0   # antipodal analyser, anticorrelated pair


class TestInterference:
    def test_oscillation_values(self):
        delta = 1.0
        assert interference_evolution(delta, 0.0)[1] == 1.0
        assert abs(interference_evolution(delta, math.pi / 2.0)[1]) < 1e-8
        assert abs(interference_evolution(delta, math.pi)[1] + 1.0) < 1e-8

    def test_matches_cosine_over_period(self):
        delta = 1.0
        times, f2, _f5 = interference_trajectory(delta, 2.0 * math.pi, 4096)
        assert np.abs(f2 - np.cos(delta * times)).max() < 1e-8

    def test_density_matrix_form(self):
        # rho = (1 + L1 + cos(dt)(L2 + L3) - sin(dt)(L5 + L7)) / 4
        delta, t = 0.8, 1.3
        state, _ = interference_evolution(delta, t)
        l = qmatrix.L_BASIS
        want = 0.25 * (np.eye(4) + l[0] + math.cos(delta * t) * (l[1] + l[2])
                       - math.sin(delta * t) * (l[4] + l[6]))
        np.testing.assert_allclose(qmatrix.density_from_bloch(state.rho), want, atol=1e-8)

    def test_state_stays_pure(self):
        times, f2, f5 = interference_trajectory(1.0, 5.0, 4096)
        for i in range(0, len(times), 512):
            assert abs(interference_bloch(f2[i], f5[i]).purity - 3.0) < 1e-8


class TestExchangeSymmetry:
    def test_classifications(self):
        assert is_exchange_symmetric(entangled_psi(-1)) == "fermionic"
        assert is_exchange_symmetric(entangled_psi(1)) == "bosonic"
        assert is_exchange_symmetric(basis_psi(1)) == "bosonic"
        assert is_exchange_symmetric(basis_psi(4)) == "bosonic"
        combo = (entangled_psi(1) + basis_psi(1) + basis_psi(4)) / math.sqrt(3.0)
        assert is_exchange_symmetric(combo) == "bosonic"

    def test_superposition_forbidden(self):
        mixed = 0.6 * entangled_psi(-1) + 0.8 * entangled_psi(1)
        assert is_exchange_symmetric(mixed) == "forbidden"
        assert is_exchange_symmetric(basis_psi(2)) == "forbidden"

    def test_symmetric_mixed_state(self):
        rho = 0.5 * entangled_state(1) + 0.5 * entangled_state(-1)
        assert is_exchange_symmetric(rho) == "symmetric"

    def test_index_map_matches_conjugation(self):
        ex = exchange_matrix()
        perm = [exchange_symmetry(np.eye(15)[k]) for k in range(15)]
        for k in range(15):
            conj = ex @ qmatrix.L_BASIS[k] @ ex
            want = sum(perm[k][l] * qmatrix.L_BASIS[l] for l in range(15))
            np.testing.assert_array_equal(conj, want)

    def test_index_map_on_wavefunctions(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            psi = rng.normal(size=4) + 1j * rng.normal(size=4)
            psi /= np.linalg.norm(psi)
            f_swapped = qmatrix.bloch_from_psi(exchange_matrix() @ psi)
            np.testing.assert_allclose(
                f_swapped, exchange_symmetry(qmatrix.bloch_from_psi(psi)), atol=1e-13
            )

    def test_involution(self):
        rng = np.random.default_rng(6)
        f = rng.normal(size=15)
        np.testing.assert_array_equal(exchange_symmetry(exchange_symmetry(f)), f)


class TestBasisExpectations:
    def test_three_ways_agree(self):
        rng = np.random.default_rng(7)
        states, probs = [], rng.random(5)
        probs /= probs.sum()
        for _ in range(5):
            psi = rng.normal(size=4) + 1j * rng.normal(size=4)
            states.append(microstate_four(psi / np.linalg.norm(psi)))
        ens = Ensemble.from_states(states, probs)
        by_sum, by_state, by_trace = basis_expectations_three_ways(ens)
        np.testing.assert_allclose(by_sum, by_state, atol=1e-12)
        np.testing.assert_allclose(by_state, by_trace, atol=1e-12)


class TestMonteCarloOnEntangled:
    def test_reproduces_minus_cosine(self):
        rng = np.random.default_rng(8)
        bloch = entangled_bloch(-1)
        for _ in range(3):
            th, ph = rng.uniform(0.0, 2.0 * math.pi, size=2)
            a, b = rotated_spin_observables(th, ph)
            est = simulate_sequences([a, b], bloch, 1_000_000, seed=int(rng.integers(1e6)))
            assert abs(est.value + math.cos(th - ph)) <= 5.0 * est.stderr

    def test_pure_point_mass_realises_entangled_state(self):
        # the entangled reduced state comes from a single classical micro-state
        ens = Ensemble.point_mass(microstate_four(entangled_psi(-1)))
        np.testing.assert_allclose(reduce_ensemble(ens).rho, entangled_bloch(-1).rho,
                                   atol=1e-14)
