import math
from fractions import Fraction

import numpy as np
import pytest

from ensembleq.finite import (
    HALF_SQRT2,
    CartesianSpinEnsemble,
    Q2,
    SPIN_VALUES,
    cartesian_measure_sz,
    cartesian_purity,
    integrate_out,
    pure_system,
    realizable_region_check,
    reduce_to_rho,
    rho_components,
    zn_step_evolution,
    zn_system,
)

SQ2 = 1.0 / math.sqrt(2.0)
THIRD = Fraction(1, 3)


class TestQ2:
    def test_arithmetic(self):
        x = Q2(1, Fraction(1, 2))          # 1 + sqrt(2)/2
        y = HALF_SQRT2                      # 1/sqrt(2) = sqrt(2)/2
        assert x - 1 == y
        assert y * y == Q2(Fraction(1, 2))
        assert float(y) == pytest.approx(SQ2)

    def test_ordering(self):
        assert Q2(0, 1) > 1                  # sqrt 2 > 1
        assert Q2(0, 1) < Fraction(3, 2)     # sqrt 2 < 1.5
        assert Q2(-3, 2) < 0                 # 2 sqrt 2 < 3
        assert Q2(-1, 1) > 0                 # sqrt 2 > 1


class TestZnSystems:
    def test_table_means_n8(self):
        sys8 = zn_system(8, exact=True)
        table = sys8.mean_table()
        # axis spin in the four axis states, then the diagonal states
        assert table[0][:4] == [Q2(1), Q2(-1), Q2(0), Q2(0)]
        assert table[0][4:] == [HALF_SQRT2, HALF_SQRT2, -HALF_SQRT2, -HALF_SQRT2]
        # second spin
        assert table[1][:4] == [Q2(0), Q2(0), Q2(1), Q2(-1)]
        assert table[1][4:] == [HALF_SQRT2, -HALF_SQRT2, HALF_SQRT2, -HALF_SQRT2]
        # first diagonal spin
        assert table[2][:4] == [HALF_SQRT2, -HALF_SQRT2, HALF_SQRT2, -HALF_SQRT2]
        assert table[2][4:] == [Q2(1), Q2(0), Q2(0), Q2(-1)]
        # second diagonal spin
        assert table[3][:4] == [HALF_SQRT2, -HALF_SQRT2, -HALF_SQRT2, HALF_SQRT2]
        assert table[3][4:] == [Q2(0), Q2(1), Q2(-1), Q2(0)]

    def test_probability_validation(self):
        with pytest.raises(ValueError):
            zn_system(4, probs=(0.5, 0.5, 0.5, -0.5))


class TestRegion:
    def test_n4_summed_mean_bound(self):
        region = realizable_region_check(zn_system(4, exact=True))
        assert region.max_mean_sum == Q2(1)

    def test_n8_vertex_target_realizable(self):
        region = realizable_region_check(zn_system(8), target=(SQ2, SQ2))
        assert region.target_realizable

    def test_outside_target_not_realizable(self):
        region = realizable_region_check(zn_system(8), target=(0.9, 0.9))
        assert not region.target_realizable

    def test_n8_inradius_in_purity_terms(self):
        region = realizable_region_check(zn_system(8, exact=True))
        want = (Q2(2) + Q2(0, 1)) * Fraction(1, 4)   # (2 + sqrt 2)/4
        assert region.inradius_squared == want
        assert abs(region.inradius - math.cos(math.pi / 8.0)) < 1e-12

    def test_inradius_converges_to_one(self):
        previous = 0.0
        for n in (8, 16, 32, 64):
            region = realizable_region_check(zn_system(n))
            assert abs(region.inradius - math.cos(math.pi / n)) < 1e-12
            assert region.inradius > previous
            previous = region.inradius
        assert previous > 0.998

    def test_json_export(self):
        import json

        payload = json.loads(realizable_region_check(zn_system(8)).to_json())
        assert len(payload["polygon"]) == 8
        assert payload["max_mean_sum"] == pytest.approx(1.0 + math.sqrt(2.0))


class TestIntegrateOut:
    def test_pure_diagonal_negative_weights(self):
        eff = integrate_out(pure_system(8, 1, exact=True))
        # weights on (0), (pi), (pi/2), (-pi/2)
        assert eff.probs[0] == HALF_SQRT2 * Fraction(1, 2)
        assert eff.probs[1] == -HALF_SQRT2 * Fraction(1, 2)
        assert eff.probs[2] == HALF_SQRT2 * Fraction(1, 2)
        assert eff.probs[3] == -HALF_SQRT2 * Fraction(1, 2)
        assert eff.signed
        assert min(eff.probs) == -HALF_SQRT2 * Fraction(1, 2)

    def test_axis_mass_unchanged(self):
        probs = (Fraction(1, 4),) * 4 + (Fraction(0),) * 4
        sys8 = zn_system(8, probs=probs, exact=True)
        eff = integrate_out(sys8)
        assert eff.probs == (Fraction(1, 4),) * 4

    def test_expectations_preserved_for_any_coefficients(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            raw = [Fraction(int(x), 32) for x in rng.integers(0, 5, size=8)]
            raw[-1] = 1 - sum(raw[:-1])
            if raw[-1] < 0:
                continue
            sys8 = zn_system(8, probs=tuple(raw), exact=True)
            alpha = Fraction(int(rng.integers(-8, 9)), 8)
            beta = Fraction(int(rng.integers(-8, 9)), 8)
            eff = integrate_out(sys8, alpha, beta)
            assert sys8.expectations() == eff.expectations()

    def test_nonnegativity_costs_total_sqrt2(self):
        eff = integrate_out(pure_system(8, 1, exact=True), Fraction(1), Fraction(1))
        assert all(Q2.of(w) >= 0 for w in eff.probs)
        assert sum(eff.probs, Q2(0)) == Q2(0, 1)   # exactly sqrt 2
        # and any alpha, beta >= 1 keeps the total at or above sqrt 2
        eff2 = integrate_out(pure_system(8, 1, exact=True), Fraction(3, 2), Fraction(5, 4))
        assert sum(eff2.probs, Q2(0)) >= Q2(0, 1)

    def test_requires_full_z8(self):
        with pytest.raises(ValueError):
            integrate_out(zn_system(4))


class TestReduceToRho:
    def test_pure_states(self):
        state = reduce_to_rho(pure_system(8, 0))
        np.testing.assert_allclose(state.rho, [1.0, 0.0, 0.0], atol=1e-15)
        state = reduce_to_rho(pure_system(8, 1))
        np.testing.assert_allclose(state.rho, [SQ2, SQ2, 0.0], atol=1e-15)

    def test_uniform_is_centred(self):
        state = reduce_to_rho(zn_system(8))
        assert np.abs(state.rho).max() < 1e-15

    def test_independent_of_coarse_graining_coefficients(self):
        rng = np.random.default_rng(1)
        raw = [Fraction(int(x), 32) for x in rng.integers(0, 5, size=8)]
        raw[-1] = 1 - sum(raw[:-1])
        sys8 = zn_system(8, probs=tuple(raw), exact=True)
        direct = rho_components(sys8)
        for alpha, beta in ((Fraction(1, 2), Fraction(1, 2)), (Fraction(2), Fraction(-1))):
            eff = integrate_out(sys8, alpha, beta)
            assert (eff.probs[0] - eff.probs[1], eff.probs[2] - eff.probs[3]) == direct


class TestZnSteps:
    def test_one_step_rotates_pure_state(self):
        stepped = zn_step_evolution(pure_system(8, 0), 1)
        assert stepped.probs == pure_system(8, 1).probs

    def test_full_cycle_is_identity(self):
        rng = np.random.default_rng(2)
        p = rng.random(8)
        p /= p.sum()
        sys8 = zn_system(8, probs=tuple(p))
        assert zn_step_evolution(sys8, 8).probs == pytest.approx(sys8.probs)

    def test_reduced_state_rotates(self):
        rng = np.random.default_rng(3)
        p = rng.random(8)
        p /= p.sum()
        sys8 = zn_system(8, probs=tuple(p))
        before = reduce_to_rho(sys8).rho
        after = reduce_to_rho(zn_step_evolution(sys8, 1)).rho
        angle = math.pi / 4.0
        rot = np.array([
            [math.cos(angle), -math.sin(angle), 0.0],
            [math.sin(angle), math.cos(angle), 0.0],
            [0.0, 0.0, 1.0],
        ])
        np.testing.assert_allclose(after, rot @ before, atol=1e-12)
        assert abs(float(after @ after) - float(before @ before)) < 1e-14


class TestCartesianPurity:
    def test_uniform_is_zero(self):
        assert cartesian_purity([Fraction(1, 8)] * 8) == 0

    def test_point_mass_is_three(self):
        assert cartesian_purity([1, 0, 0, 0, 0, 0, 0, 0]) == 3
        assert cartesian_purity([0, 0, 0, 0, 0, 0, 0, 1]) == 3

    def test_scenario_third(self):
        assert cartesian_purity([THIRD, 0, 0, 0, THIRD, 0, 0, THIRD]) == THIRD

    def test_polynomial_identity_random(self):
        rng = np.random.default_rng(4)
        p = rng.random((10000, 8))
        p /= p.sum(axis=1, keepdims=True)
        direct = cartesian_purity(p)
        s = np.array(SPIN_VALUES, dtype=float)
        via_spins = ((p @ s.T) ** 2).sum(axis=1)
        assert np.abs(direct - via_spins).max() < 1e-12

    def test_exact_identity_on_fractions(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            raw = [Fraction(int(x), 16) for x in rng.integers(0, 4, size=8)]
            raw[-1] = 1 - sum(raw[:-1])
            if raw[-1] < 0:
                continue
            ens = CartesianSpinEnsemble(tuple(raw))
            sx, sy, sz = ens.spin_expectations()
            assert cartesian_purity(raw) == sx * sx + sy * sy + sz * sz


class TestCartesianMeasurement:
    SCENARIO = [THIRD, 0, 0, 0, THIRD, 0, 0, THIRD]

    def test_classical_rule_violates_purity(self):
        out = cartesian_measure_sz(self.SCENARIO, "classical")
        assert out.probs == (1, 0, 0, 0, 0, 0, 0, 0)
        assert out.purity_after == 3
        assert out.constraint_violated

    def test_quantum_rule_restores_purity_one(self):
        out = cartesian_measure_sz(self.SCENARIO, "quantum")
        assert out.purity_after == 1
        assert not out.constraint_violated
        assert out.pair_sums == (Fraction(1, 2),) * 4
        ens = CartesianSpinEnsemble(out.probs)
        assert ens.spin_expectations() == [0, 0, 1]

    def test_quantum_rule_free_parameter(self):
        out = cartesian_measure_sz(self.SCENARIO, "quantum", free_p1=Fraction(1, 8))
        assert out.probs[:4] == (Fraction(1, 8), Fraction(3, 8), Fraction(3, 8), Fraction(1, 8))
        assert out.purity_after == 1
        with pytest.raises(ValueError):
            cartesian_measure_sz(self.SCENARIO, "quantum", free_p1=Fraction(3, 4))

    def test_negative_outcome_mirrored(self):
        probs = [0, 0, 0, 0, 0.4, 0.3, 0.2, 0.1]
        out = cartesian_measure_sz(probs, "quantum", outcome=-1)
        ens = CartesianSpinEnsemble(out.probs)
        sx, sy, sz = ens.spin_expectations()
        assert (sx, sy, sz) == (0.0, 0.0, -1.0)

    def test_zero_outcome_probability(self):
        probs = [0, 0, 0, 0, 0.5, 0.5, 0, 0]
        with pytest.raises(ValueError):
            cartesian_measure_sz(probs, "classical", outcome=1)

    def test_classical_rule_keeps_relative_weights(self):
        probs = [0.2, 0.1, 0.05, 0.05, 0.3, 0.1, 0.1, 0.1]
        out = cartesian_measure_sz(probs, "classical")
        np.testing.assert_allclose(out.probs[:4], np.array([0.2, 0.1, 0.05, 0.05]) / 0.4)
        assert out.probs[4:] == (0.0, 0.0, 0.0, 0.0)


class TestCompleteness:
    def test_joint_probabilities_reproduce_classical_correlations(self):
        rng = np.random.default_rng(6)
        p = rng.random(8)
        p /= p.sum()
        ens = CartesianSpinEnsemble(tuple(p))
        from ensembleq.finite import ENVIRONMENT_VALUES

        for spin_vals in SPIN_VALUES:
            for env_vals in ENVIRONMENT_VALUES:
                joint = ens.joint_probabilities(spin_vals, env_vals)
                assert abs(sum(joint.values()) - 1.0) < 1e-12
                corr = sum(a * b * w for (a, b), w in joint.items())
                direct = sum(a * b * w for a, b, w in zip(spin_vals, env_vals, p))
                assert abs(corr - direct) < 1e-14

    def test_environment_observables_square_to_one(self):
        from ensembleq.finite import ENVIRONMENT_VALUES

        for env_vals in ENVIRONMENT_VALUES:
            assert all(v in (1, -1) for v in env_vals)
