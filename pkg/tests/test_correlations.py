import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensembleq import qmatrix
from ensembleq.correlations import (
    classical_correlation,
    conditional_correlation_2pt,
    conditional_correlation_3pt,
    conditional_expectation_in_eigenstate,
    conditional_product,
    eigenstate_bloch,
    measurement_chain,
    pointwise_correlation,
    sample_measurement_records,
    sequence_probabilities,
    simulate_sequences,
)
from ensembleq.manifolds import (
    Ensemble,
    SubstateEnsemble,
    extend_to_substates,
    grid_ensemble,
    microstate_s2,
)
from ensembleq.observables import (
    NoEigenstateError,
    ProductObservable,
    RANDOM,
    TwoLevelObservable,
    basis_spin,
    expectation,
    operator_of,
    spin,
)

SQ2 = 1.0 / math.sqrt(2.0)
A1, A2, A3 = basis_spin(1), basis_spin(2), basis_spin(3)
DIAG = spin(np.array([SQ2, SQ2, 0.0]))


def random_unit(rng, dim=3):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_bloch(rng):
    return random_unit(rng) * rng.uniform(0.0, 1.0)


class TestEigenstateExpectations:
    def test_same_observable(self):
        assert conditional_expectation_in_eigenstate(A1, A1) == 1.0

    def test_orthogonal(self):
        assert conditional_expectation_in_eigenstate(A1, A2) == 0.0

    def test_quarter_angle(self):
        assert abs(conditional_expectation_in_eigenstate(A1, DIAG) - SQ2) < 1e-15

    def test_equals_half_trace_and_eigenstate_value(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b = spin(random_unit(rng)), spin(random_unit(rng))
            val = conditional_expectation_in_eigenstate(a, b)
            half_tr = 0.5 * np.trace(operator_of(a) @ operator_of(b)).real
            via_state = qmatrix.qm_expectation(
                operator_of(a), qmatrix.density_from_bloch(eigenstate_bloch(b, 1).rho)
            )
            assert abs(val - half_tr) < 1e-14
            assert abs(val - via_state) < 1e-14


class TestConditional2pt:
    def test_same_spin_any_state(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            assert conditional_correlation_2pt(A1, A1, random_bloch(rng)) == 1.0

    def test_orthogonal_spins(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            assert conditional_correlation_2pt(A1, A2, random_bloch(rng)) == 0.0

    def test_state_independent_quarter_angle(self):
        rng = np.random.default_rng(3)
        b = spin(np.array([SQ2, 0.0, SQ2]))
        for _ in range(20):
            val = conditional_correlation_2pt(A1, b, random_bloch(rng))
            assert abs(val - SQ2) < 1e-14

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_oracle_and_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = spin(random_unit(rng)), spin(random_unit(rng))
        rho_vec = random_bloch(rng)
        val = conditional_correlation_2pt(a, b, rho_vec)
        rev = conditional_correlation_2pt(b, a, rho_vec)
        oracle = qmatrix.anticommutator_expectation(
            operator_of(a), operator_of(b), qmatrix.density_from_bloch(rho_vec)
        )
        assert abs(val - oracle) < 1e-12
        assert abs(val - rev) < 1e-12


class TestConditional3pt:
    def test_repeated_pair_reads_component(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            rho_vec = random_bloch(rng)
            # the expectation-expression path rounds at the last bit; the
            # product-algebra route gives the identity exactly
            assert abs(conditional_correlation_3pt(A1, A1, A3, rho_vec) - rho_vec[2]) < 1e-15
            via_product = expectation(
                conditional_product(conditional_product(A1, A1), A3), rho_vec
            )
            assert via_product == rho_vec[2]

    def test_orthogonal_pair_vanishes(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            assert conditional_correlation_3pt(A1, A2, spin(random_unit(rng)),
                                               random_bloch(rng)) == 0.0

    def test_order_sensitivity(self):
        rho_vec = np.array([0.2, 0.1, 0.6])
        assert conditional_correlation_3pt(A1, A3, A1, rho_vec) == 0.0
        assert abs(conditional_correlation_3pt(A1, A1, A3, rho_vec) - rho_vec[2]) < 1e-15

    def test_swap_of_first_two_invariant(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            a, b, c = (spin(random_unit(rng)) for _ in range(3))
            rho_vec = random_bloch(rng)
            assert abs(conditional_correlation_3pt(a, b, c, rho_vec)
                       - conditional_correlation_3pt(b, a, c, rho_vec)) < 1e-13

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (spin(random_unit(rng)) for _ in range(3))
        rho_vec = random_bloch(rng)
        val = conditional_correlation_3pt(a, b, c, rho_vec)
        oracle = qmatrix.nested_anticommutator_expectation(
            operator_of(a), operator_of(b), operator_of(c),
            qmatrix.density_from_bloch(rho_vec),
        )
        assert abs(val - oracle) < 1e-12

    def test_random_observable_slots(self):
        rho_vec = np.array([0.1, 0.0, 0.3])
        assert conditional_correlation_3pt(RANDOM, A1, A3, rho_vec) == 0.0
        with pytest.raises(NoEigenstateError):
            conditional_correlation_3pt(A1, RANDOM, A3, rho_vec)
        with pytest.raises(NoEigenstateError):
            conditional_correlation_3pt(A1, A3, RANDOM, rho_vec)


class TestConditionalProduct:
    def test_repeated_is_unit(self):
        out = conditional_product(A1, A1)
        assert isinstance(out, TwoLevelObservable)
        assert out.e0 == 1.0 and out.norm == 0.0

    def test_orthogonal_is_random(self):
        assert conditional_product(A1, A2) is RANDOM

    def test_antipodal_is_minus_unit(self):
        out = conditional_product(A1, spin(np.array([-1.0, 0.0, 0.0])))
        assert out.e0 == -1.0 and out.norm == 0.0

    def test_random_absorbs(self):
        assert conditional_product(RANDOM, A1) is RANDOM

    def test_product_with_random_undefined(self):
        with pytest.raises(NoEigenstateError):
            conditional_product(A1, RANDOM)

    def test_general_angle_constant_mean(self):
        out = conditional_product(A1, DIAG)
        assert isinstance(out, ProductObservable)
        assert abs(out.const - SQ2) < 1e-15
        rng = np.random.default_rng(7)
        for _ in range(10):
            assert abs(expectation(out, random_bloch(rng)) - SQ2) < 1e-15

    def test_left_association_identities(self):
        # (A o A) o C = C and (A o B) o C = R for orthogonal A, B
        out = conditional_product(conditional_product(A1, A1), A3)
        assert isinstance(out, TwoLevelObservable)
        np.testing.assert_array_equal(out.e, A3.e)
        assert conditional_product(conditional_product(A1, A2), A3) is RANDOM

    def test_left_association_general(self):
        # mean function of (A o B) o C is (e_A.e_B)(e_C.f)
        out = conditional_product(conditional_product(A1, DIAG), A3)
        assert isinstance(out, ProductObservable)
        np.testing.assert_allclose(out.coeff, SQ2 * A3.e, atol=1e-15)
        assert out.const == 0.0

    def test_right_association_undefined(self):
        inner = conditional_product(A2, A3)   # random observable
        with pytest.raises(NoEigenstateError):
            conditional_product(A1, inner)

    def test_product_expectation_is_one_for_every_state(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            a = spin(random_unit(rng))
            assert expectation(conditional_product(a, a), random_bloch(rng)) == 1.0


class TestSequenceProbabilities:
    def test_order_asymmetry_example(self):
        rho_vec = np.array([0.0, 0.0, 1.0])
        w_ab = sequence_probabilities(A3, A1, rho_vec)   # first A1, then A3
        w_ba = sequence_probabilities(A1, A3, rho_vec)   # first A3, then A1
        assert abs(w_ab["++"] - 0.25) < 1e-15
        assert abs(w_ba["++"] - 0.5) < 1e-15

    def test_repeated_measurement_in_eigenstate(self):
        w = sequence_probabilities(A3, A3, np.array([0.0, 0.0, 1.0]))
        assert w["++"] == 1.0
        assert w["+-"] == w["-+"] == w["--"] == 0.0

    def test_orthogonal_at_center(self):
        w = sequence_probabilities(A1, A2, np.zeros(3))
        for key in ("++", "+-", "-+", "--"):
            assert abs(w[key] - 0.25) < 1e-15

    def test_sum_and_order_symmetric_combination(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            a, b = spin(random_unit(rng)), spin(random_unit(rng))
            rho_vec = random_bloch(rng)
            w_ab = sequence_probabilities(a, b, rho_vec)
            w_ba = sequence_probabilities(b, a, rho_vec)
            assert abs(sum(w_ab.values()) - 1.0) < 1e-14
            # the probability of product value +1 forgets the order
            assert abs((w_ab["++"] + w_ab["--"]) - (w_ba["++"] + w_ba["--"])) < 1e-13


class TestMeasurementChain:
    def test_single_measurement(self):
        rho_vec = np.array([0.2, -0.3, 0.4])
        wes, value = measurement_chain([A3], rho_vec)
        assert abs(value - rho_vec[2]) < 1e-14
        assert abs(wes.trace() - value) < 1e-14
        assert len(wes.terms) == 2

    def test_two_chain_matches_2pt(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            a, b = spin(random_unit(rng)), spin(random_unit(rng))
            rho_vec = random_bloch(rng)
            _, value = measurement_chain([a, b], rho_vec)
            assert abs(value - conditional_correlation_2pt(a, b, rho_vec)) < 1e-12

    def test_three_chain_matches_3pt(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            a, b, c = (spin(random_unit(rng)) for _ in range(3))
            rho_vec = random_bloch(rng)
            _, value = measurement_chain([a, b, c], rho_vec)
            assert abs(value - conditional_correlation_3pt(a, b, c, rho_vec)) < 1e-12

    def test_three_chain_example(self):
        rho_vec = np.array([0.1, 0.2, 0.5])
        _, value = measurement_chain([A1, A1, A3], rho_vec)
        assert abs(value - 0.5) < 1e-14

    def test_degenerate_first_measurement_keeps_zero_branch(self):
        wes, value = measurement_chain([A3], np.array([0.0, 0.0, 1.0]))
        weights = sorted(w for w, _ in wes.terms)
        assert weights == [0.0, 1.0]
        assert value == 1.0

    def test_random_leftmost_allowed(self):
        wes, value = measurement_chain([RANDOM, A1], np.array([0.3, 0.0, 0.2]))
        assert value == 0.0
        assert wes.trace() == 0.0

    def test_random_inner_rejected(self):
        with pytest.raises(NoEigenstateError):
            measurement_chain([A1, RANDOM], np.array([0.3, 0.0, 0.2]))

    def test_luders_identity(self):
        # projective reduction reproduces the anticommutator: for spectrum
        # +-1, P+ rho P+ - P- rho P- = {A, rho}/2 in both dimensions
        rng = np.random.default_rng(12)
        for dim in (3, 15):
            if dim == 3:
                e = random_unit(rng)
                rho = qmatrix.density_from_bloch(random_bloch(rng))
            else:
                e = np.zeros(15)
                e[0], e[7] = math.cos(0.6), math.sin(0.6)
                psi = rng.normal(size=4) + 1j * rng.normal(size=4)
                psi /= np.linalg.norm(psi)
                rho = qmatrix.pure_state_matrix(psi)
            op = qmatrix.operator_from_direction(e)
            eye = np.eye(op.shape[0])
            p_plus, p_minus = 0.5 * (eye + op), 0.5 * (eye - op)
            lhs = p_plus @ rho @ p_plus - p_minus @ rho @ p_minus
            rhs = 0.5 * (op @ rho + rho @ op)
            np.testing.assert_allclose(lhs, rhs, atol=1e-13)


class TestPointwise:
    def test_point_masses(self):
        north = Ensemble.point_mass(microstate_s2([0.0, 0.0, 1.0]))
        east = Ensemble.point_mass(microstate_s2([1.0, 0.0, 0.0]))
        assert pointwise_correlation(A3, A3, north) == 1.0
        assert pointwise_correlation(A3, A3, east) == 0.0

    def test_uniform_grid_third(self):
        ens = grid_ensemble(128)
        assert abs(pointwise_correlation(A3, A3, ens) - 1.0 / 3.0) < 1e-4

    def test_bounded_by_one(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            pts = rng.normal(size=(6, 3))
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)
            p = rng.random(6)
            p /= p.sum()
            ens = Ensemble("s2", pts, p)
            a = spin(random_unit(rng))
            assert pointwise_correlation(a, a, ens) <= 1.0 + 1e-12

    def test_saturation_needs_support_on_axis(self):
        e = np.array([0.0, 0.0, 1.0])
        both_poles = Ensemble.from_states(
            [microstate_s2(e), microstate_s2(-e)], [0.3, 0.7]
        )
        assert pointwise_correlation(A3, A3, both_poles) == 1.0
        tilted = Ensemble.from_states(
            [microstate_s2(e), microstate_s2([1.0, 0.0, 0.0])], [0.9, 0.1]
        )
        assert pointwise_correlation(A3, A3, tilted) < 1.0


class TestClassicalCorrelation:
    def test_same_direction_is_one(self):
        rng = np.random.default_rng(14)
        pts = rng.normal(size=(4, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        p = rng.random(4)
        p /= p.sum()
        sub = extend_to_substates(Ensemble("s2", pts, p), [[0.0, 0.0, 1.0]])
        assert abs(classical_correlation([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], sub) - 1.0) < 1e-14

    def test_product_form_factorizes(self):
        # orthogonal directions, both orthogonal to the supported point
        sub = extend_to_substates(
            Ensemble.point_mass(microstate_s2([0.0, 0.0, 1.0])),
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        )
        assert classical_correlation([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], sub) == 0.0

    def test_product_form_matches_pointwise(self):
        rng = np.random.default_rng(15)
        pts = rng.normal(size=(5, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        p = rng.random(5)
        p /= p.sum()
        ens = Ensemble("s2", pts, p)
        ga, gb = random_unit(rng), random_unit(rng)
        sub = extend_to_substates(ens, [ga, gb])
        got = classical_correlation(ga, gb, sub)
        want = pointwise_correlation(spin(ga), spin(gb), ens)
        assert abs(got - want) < 1e-12

    def test_unknown_direction(self):
        sub = extend_to_substates(
            Ensemble.point_mass(microstate_s2([0.0, 0.0, 1.0])), [[1.0, 0.0, 0.0]]
        )
        with pytest.raises(ValueError):
            classical_correlation([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], sub)

    def test_witness_same_probabilistic_observable_different_correlations(self):
        # two sharp-valued assignments with identical per-state means (both
        # mean zero on the single occupied micro-state) correlate differently
        # with a third observable: the classical product is not a function of
        # the probabilistic observables alone
        f = np.array([0.0, 0.0, 1.0])
        g1 = np.array([1.0, 0.0, 0.0])
        g2 = np.array([0.0, 1.0, 0.0])
        g3 = np.array([SQ2, SQ2, 0.0])
        rows = [
            (f, [1, 1, 1], 0.25),
            (f, [1, -1, 1], 0.25),
            (f, [-1, 1, -1], 0.25),
            (f, [-1, -1, -1], 0.25),
        ]
        sub = SubstateEnsemble.from_rows([g1, g2, g3], rows)
        # both g1 and g2 realise the mean-zero observable on this support
        assert float(sub.mean_sign(g1)[0]) == 0.0
        assert float(sub.mean_sign(g2)[0]) == 0.0
        c1 = classical_correlation(g1, g3, sub)
        c2 = classical_correlation(g2, g3, sub)
        assert c1 == 1.0
        assert c2 == 0.0


class TestSimulation:
    def test_repeated_chain_exact(self):
        est = simulate_sequences([A1, A1], np.array([0.3, 0.0, 0.1]), 100000, seed=0)
        assert est.value == 1.0
        assert est.stderr == 0.0

    def test_orthogonal_within_five_se(self):
        est = simulate_sequences([A1, A2], np.array([0.3, 0.0, 0.1]), 1_000_000, seed=1)
        assert abs(est.value - 0.0) <= 5.0 * est.stderr

    def test_quarter_angle_within_five_se(self):
        b = spin(np.array([SQ2, 0.0, SQ2]))
        est = simulate_sequences([A1, b], np.array([0.1, 0.2, 0.3]), 1_000_000, seed=2)
        assert abs(est.value - SQ2) <= 5.0 * est.stderr

    def test_three_chain_within_five_se(self):
        rng = np.random.default_rng(16)
        a, b, c = (spin(random_unit(rng)) for _ in range(3))
        rho_vec = random_bloch(rng)
        closed = conditional_correlation_3pt(a, b, c, rho_vec)
        est = simulate_sequences([a, b, c], rho_vec, 500_000, seed=3)
        assert abs(est.value - closed) <= 5.0 * est.stderr

    def test_deterministic_and_jobs_independent(self):
        args = ([A1, DIAG], np.array([0.0, 0.1, 0.4]), 200_000)
        first = simulate_sequences(*args, seed=4)
        again = simulate_sequences(*args, seed=4)
        sharded = simulate_sequences(*args, seed=4, n_jobs=4)
        assert first.value == again.value == sharded.value

    def test_unbiased_over_seeds(self):
        b = spin(np.array([SQ2, 0.0, SQ2]))
        rho_vec = np.array([0.0, 0.0, 0.5])
        closed = conditional_correlation_2pt(A1, b, rho_vec)
        n, seeds = 20_000, 50
        estimates = [simulate_sequences([A1, b], rho_vec, n, seed=s) for s in range(seeds)]
        pooled_dev = sum(e.value for e in estimates) / seeds - closed
        pooled_se = math.sqrt(sum(e.stderr ** 2 for e in estimates)) / seeds
        assert abs(pooled_dev) <= 5.0 * pooled_se

    def test_estimate_json_schema(self):
        est = simulate_sequences([A1, A2], np.zeros(3), 1000, seed=5)
        payload = json.loads(est.to_json())
        assert set(payload) == {"value", "stderr", "n", "seed"}
        assert payload["n"] == 1000 and payload["seed"] == 5

    def test_records(self):
        records = sample_measurement_records([A1, A1], np.array([0.0, 0.0, 0.0]), 10, seed=6)
        assert len(records) == 10
        for rec in records:
            assert rec.value == 1   # repeated measurement always agrees
            assert len(rec.outcomes) == 2

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            simulate_sequences([A1, A2], np.zeros(3), 0, seed=1)
        with pytest.raises(ValueError):
            simulate_sequences([A1, A2], np.zeros(3), 10, seed=-1)
