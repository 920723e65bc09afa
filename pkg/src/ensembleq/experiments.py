"""Named, seeded, reproducible experiment runs.

Every experiment emits a CSV table plus a JSON report that echoes the config,
carries the closed-form reference value next to each measured value, and
records a pass/fail check per tolerance. Outputs are byte-identical for a
fixed (config, seed); wall time is reported on the console only so files stay
deterministic.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import correlations, dynamics, finite, fourstate, manifolds, observables, qmatrix
from .reporting import write_csv, write_json


class ConfigError(ValueError):
    """Invalid experiment name or parameter."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str = "."


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    reference: float
    tolerance: float

    def as_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": self.value,
            "reference": self.reference,
            "tolerance": self.tolerance,
        }


@dataclass
class RunReport:
    config: ExperimentConfig
    columns: list
    rows: list
    results: dict
    checks: list
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def payload(self) -> dict:
        return {
            "experiment": self.config.experiment,
            "seed": self.config.seed,
            "params": self.config.params,
            "results": self.results,
            "checks": [c.as_dict() for c in self.checks],
            "passed": self.passed,
        }


def _merge_params(defaults: dict, given: dict, name: str) -> dict:
    params = dict(defaults)
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"unknown parameter {key!r} for experiment {name!r}")
        params[key] = value
    return params


def _tol_check(name, value, reference, tol) -> Check:
    return Check(name, abs(value - reference) <= tol, float(value), float(reference), tol)


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------

def _bell_sweep(params, seed):
    p = _merge_params({"steps": 16, "classical_trials": 100}, params, "bell-sweep")
    steps = int(p["steps"])
    if steps < 2:
        raise ConfigError("steps must be >= 2")
    state = fourstate.entangled_bloch(-1)
    angles = [2.0 * math.pi * k / steps for k in range(steps)]
    quantum = fourstate.quantum_pair_correlator(state)
    rows = []
    worst = 0.0
    for t1 in angles:
        for t2 in angles:
            res = fourstate.bell_check(quantum, t1, t2)
            worst = max(worst, abs(fourstate.rotated_spin_correlation(t1, t2, state) + math.cos(t1 - t2)))
            rows.append({"theta1": t1, "theta2": t2, "lhs": res.lhs, "rhs": res.rhs,
                         "violated": res.violated})
    marked = fourstate.bell_check(quantum, math.pi / 2.0, math.pi / 4.0)
    rng = np.random.default_rng(seed)
    satisfied = 0
    trials = int(p["classical_trials"])
    for _ in range(trials):
        ens = fourstate.symmetrized_hidden_ensemble(rng, n_base=3, order=int(rng.integers(3, 7)))
        corr = fourstate.classical_pair_correlator(ens)
        t1, t2 = rng.uniform(0.0, 2.0 * math.pi, size=2)
        if not fourstate.bell_check(corr, t1, t2).violated:
            satisfied += 1
    checks = [
        _tol_check("correlator equals -cos(theta1-theta2)", worst, 0.0, 1e-12),
        Check("violation at (pi/2, pi/4)", marked.violated and marked.lhs - marked.rhs > 0.414 - 1e-9,
              marked.lhs - marked.rhs, 2.0 ** 0.5 - 1.0, 1e-9),
        Check("classical correlators satisfy the inequality", satisfied == trials,
              float(satisfied), float(trials), 0.0),
    ]
    results = {"lhs_at_mark": marked.lhs, "rhs_at_mark": marked.rhs,
               "classical_satisfied": satisfied, "classical_trials": trials}
    return ["theta1", "theta2", "lhs", "rhs", "violated"], rows, results, checks


def _interference(params, seed):
    p = _merge_params({"delta": 1.0, "t_final": 2.0 * math.pi, "points": 256}, params, "interference")
    delta, t_final, points = float(p["delta"]), float(p["t_final"]), int(p["points"])
    if points < 2 or t_final <= 0:
        raise ConfigError("need points >= 2 and t_final > 0")
    n_steps = max(points * 16, 1024)
    times, f2, f5 = fourstate.interference_trajectory(delta, t_final, n_steps)
    idx = np.linspace(0, n_steps, points).round().astype(int)
    rows = []
    worst = 0.0
    for i in idx:
        ref = math.cos(delta * times[i])
        worst = max(worst, abs(f2[i] - ref))
        rows.append({"t": float(times[i]), "T2": float(f2[i]), "T2_ref": ref,
                     "f5": float(f5[i])})
    checks = [_tol_check("<T2> equals cos(delta t)", worst, 0.0, 1e-6)]
    return ["t", "T2", "T2_ref", "f5"], rows, {"max_abs_error": worst}, checks


def _decoherence(params, seed):
    p = _merge_params(
        {"d": -0.35, "rho0": [0.4, -0.2, 0.5], "t_final": 5.0, "dt": 0.005}, params, "decoherence"
    )
    d = float(p["d"])
    if d >= 0:
        raise ConfigError("decoherence needs a negative rate d")
    rho0 = np.asarray(p["rho0"], dtype=float)
    traj = dynamics.integrate_open(rho0, None, d, (0.0, float(p["t_final"])), float(p["dt"]))
    decay = np.exp(d * traj.times)
    rows = []
    worst = 0.0
    for i, t in enumerate(traj.times):
        ref = rho0 * decay[i]
        worst = max(worst, float(np.abs(traj.bloch[i] - ref).max()))
        rows.append({"t": float(t), "rho1": traj.bloch[i, 0], "rho2": traj.bloch[i, 1],
                     "rho3": traj.bloch[i, 2], "P": float(traj.purity[i]),
                     "P_ref": float(rho0 @ rho0) * float(np.exp(2 * d * t)), "D": float(d)})
    checks = [_tol_check("rho_k(t) equals rho_k(0) exp(D t)", worst, 0.0, 1e-8)]
    return ["t", "rho1", "rho2", "rho3", "P", "P_ref", "D"], rows, {"max_abs_error": worst}, checks


def _syncoherence(params, seed):
    p = _merge_params(
        {"a": 3.0, "b": 2.0, "p0": 0.9, "d0": 0.1, "t_final": 6.0, "dt": 0.001},
        params, "syncoherence",
    )
    flow = dynamics.FlowParams(float(p["a"]), float(p["b"]))
    if not flow.in_fixed_point_regime:
        raise ConfigError("fixed-point regime requires a > 0 and 0 < b < a^2/4")
    traj = dynamics.syncoherence_flow(float(p["p0"]), float(p["d0"]), flow,
                                      (0.0, float(p["t_final"])), float(p["dt"]))
    p_ref, d_ref = dynamics.syncoherence_closed_form(float(p["p0"]), float(p["d0"]), flow, traj.times)
    rows = []
    worst = 0.0
    for i, t in enumerate(traj.times):
        pv, dv = float(traj.bloch[i, 0]), float(traj.d_values[i])
        worst = max(worst,
                    abs(pv - p_ref[i]) / (abs(p_ref[i]) + 1e-12),
                    abs(dv - d_ref[i]) / (abs(d_ref[i]) + 1e-12))
        rows.append({"t": float(t), "P": pv, "D": dv, "P_ref": float(p_ref[i]), "D_ref": float(d_ref[i])})
    eps1, eps2 = flow.rates
    checks = [_tol_check("flow matches the two-exponential closed form (rel)", worst, 0.0, 1e-6)]
    return (["t", "P", "D", "P_ref", "D_ref"], rows,
            {"eps1": eps1, "eps2": eps2, "max_rel_error": worst}, checks)


def _precession(params, seed):
    p = _merge_params({"omega": 1.0, "t_final": 10.0, "dt": 0.002}, params, "precession")
    omega = float(p["omega"])
    ham = dynamics.Hamiltonian(np.array([0.0, 0.0, omega]))
    traj = dynamics.integrate_von_neumann(np.array([1.0, 0.0, 0.0]), ham,
                                          (0.0, float(p["t_final"])), float(p["dt"]))
    rows = []
    worst = 0.0
    for i, t in enumerate(traj.times):
        ref1, ref2 = math.cos(2 * omega * t), math.sin(2 * omega * t)
        worst = max(worst, abs(traj.bloch[i, 0] - ref1), abs(traj.bloch[i, 1] - ref2),
                    abs(traj.bloch[i, 2]))
        rows.append({"t": float(t), "rho1": traj.bloch[i, 0], "rho2": traj.bloch[i, 1],
                     "rho3": traj.bloch[i, 2], "P": float(traj.purity[i]),
                     "rho1_ref": ref1, "rho2_ref": ref2})
    drift = float(np.abs(traj.purity - traj.purity[0]).max())

    def s_of_t(t):
        return dynamics.rotation_from_generator(np.array([0.0, 0.0, -omega * t]))

    h_err = float(np.abs(dynamics.hamiltonian_from_rotation(s_of_t, 0.7)
                         - np.array([0.0, 0.0, omega])).max())
    checks = [
        _tol_check("trajectory equals (cos 2wt, sin 2wt, 0)", worst, 0.0, 1e-8),
        _tol_check("purity drift", drift, 0.0, 1e-10),
        _tol_check("Hamiltonian recovered from the rotation", h_err, 0.0, 1e-8),
    ]
    return (["t", "rho1", "rho2", "rho3", "P", "rho1_ref", "rho2_ref"], rows,
            {"purity_drift": drift, "h_recovery_error": h_err}, checks)


def _cartesian_spins(params, seed):
    p = _merge_params({"probs": None, "free_p1": 0.25}, params, "cartesian-spins")
    if p["probs"] is None:
        third = Fraction(1, 3)
        probs = [third, 0, 0, 0, third, 0, 0, third]
    else:
        probs = [float(x) for x in p["probs"]]
    before = finite.cartesian_purity(probs)
    classical = finite.cartesian_measure_sz(probs, "classical")
    quantum = finite.cartesian_measure_sz(probs, "quantum", free_p1=p["free_p1"]
                                          if p["probs"] is not None else Fraction(1, 4))
    rows = []
    for label, vec, pur in (
        ("before", probs, before),
        ("classical", classical.probs, classical.purity_after),
        ("quantum", quantum.probs, quantum.purity_after),
    ):
        row = {"state": label, "purity": float(pur)}
        for i in range(8):
            row[f"p{i + 1}"] = float(vec[i])
        rows.append(row)
    checks = [
        _tol_check("quantum-rule purity is 1", float(quantum.purity_after), 1.0, 1e-12),
        Check("classical rule flagged iff purity exceeds 1",
              classical.constraint_violated == (float(classical.purity_after) > 1.0 + 1e-9),
              float(classical.purity_after), 1.0, 0.0),
        _tol_check("pair sums equal 1/2",
                   max(abs(float(s) - 0.5) for s in quantum.pair_sums), 0.0, 1e-12),
    ]
    results = {
        "purity_before": float(before),
        "purity_classical": float(classical.purity_after),
        "purity_quantum": float(quantum.purity_after),
        "classical_flagged": classical.constraint_violated,
        "pair_sums": [float(s) for s in quantum.pair_sums],
    }
    cols = ["state"] + [f"p{i + 1}" for i in range(8)] + ["purity"]
    return cols, rows, results, checks


def _pseudo_quantum_region(params, seed):
    p = _merge_params({"sizes": [4, 8, 16, 32, 64]}, params, "pseudo-quantum-region")
    sizes = [int(n) for n in p["sizes"]]
    if any(n < 3 for n in sizes):
        raise ConfigError("polygon sizes must be >= 3")
    rows = []
    worst = 0.0
    polygons = {}
    for n in sizes:
        region = finite.realizable_region_check(finite.zn_system(n))
        ref = math.cos(math.pi / n)
        worst = max(worst, abs(region.inradius - ref))
        rows.append({"N": n, "inradius": region.inradius, "inradius_ref": ref,
                     "max_mean_sum": float(region.max_mean_sum)})
        polygons[str(n)] = [[x, y] for x, y in region.vertices]
    region4 = finite.realizable_region_check(finite.zn_system(4, exact=True))
    pure_diag = finite.pure_system(8, 1, exact=True)
    eff = finite.integrate_out(pure_diag)
    min_w = float(min(eff.probs))
    eff_11 = finite.integrate_out(pure_diag, Fraction(1), Fraction(1))
    total_11 = float(sum(eff_11.probs, finite.Q2(0)))
    checks = [
        Check("N=4 summed-mean bound equals 1", region4.max_mean_sum == finite.Q2(1),
              float(region4.max_mean_sum), 1.0, 0.0),
        _tol_check("inradius equals cos(pi/N)", worst, 0.0, 1e-12),
        _tol_check("most negative effective weight", min_w, -1.0 / (2.0 * math.sqrt(2.0)), 1e-15),
        Check("alpha=beta=1 nonnegative weights cost total sqrt(2)",
              total_11 >= math.sqrt(2.0) - 1e-15, total_11, math.sqrt(2.0), 1e-15),
    ]
    results = {"polygons": polygons, "min_effective_weight": min_w, "total_alpha_beta_1": total_11}
    return ["N", "inradius", "inradius_ref", "max_mean_sum"], rows, results, checks


def _correlation_table(params, seed):
    p = _merge_params({"rho": [0.3, 0.1, 0.2], "grid_resolution": 48}, params, "correlation-table")
    rho_vec = np.asarray(p["rho"], dtype=float)
    state = manifolds.BlochState(rho_vec)
    rho_mat = qmatrix.density_from_bloch(rho_vec)
    axis = rho_vec / np.linalg.norm(rho_vec) if np.linalg.norm(rho_vec) > 0 else np.array([0.0, 0.0, 1.0])
    kappa = 3.0 * np.linalg.norm(rho_vec)

    def density(points):
        return np.exp(kappa * (points @ axis))

    ens = manifolds.grid_ensemble(int(p["grid_resolution"]), density)
    pool = {
        "A1": observables.basis_spin(1),
        "A2": observables.basis_spin(2),
        "A3": observables.basis_spin(3),
        "A12": observables.combine(1 / math.sqrt(2), observables.basis_spin(1),
                                   1 / math.sqrt(2), observables.basis_spin(2)),
    }
    sub = manifolds.extend_to_substates(ens, [pool[k].e for k in pool])
    rows = []
    worst = 0.0
    for name_a, a in pool.items():
        for name_b, b in pool.items():
            conditional = correlations.conditional_correlation_2pt(a, b, state)
            oracle = qmatrix.anticommutator_expectation(
                observables.operator_of(a), observables.operator_of(b), rho_mat
            )
            worst = max(worst, abs(conditional - oracle))
            pointwise = correlations.pointwise_correlation(a, b, ens)
            classical = correlations.classical_correlation(a.e, b.e, sub)
            rows.append({"A": name_a, "B": name_b, "conditional": conditional,
                         "oracle": oracle, "pointwise": pointwise, "classical": classical})
    checks = [_tol_check("conditional equals anticommutator oracle", worst, 0.0, 1e-12)]
    results = {"rho": [float(x) for x in rho_vec], "max_oracle_gap": worst}
    return ["A", "B", "conditional", "oracle", "pointwise", "classical"], rows, results, checks


def _mc_sequences(params, seed):
    p = _merge_params({"angles": [0.0, math.pi / 4.0], "rho": [0.0, 0.0, 0.6],
                       "n": 1_000_000, "jobs": 1}, params, "mc-sequences")
    angles = [float(a) for a in p["angles"]]
    if not 2 <= len(angles) <= 6:
        raise ConfigError("chain length must be between 2 and 6")
    rho_vec = np.asarray(p["rho"], dtype=float)
    chain = [observables.TwoLevelObservable(np.array([math.sin(a), 0.0, math.cos(a)]))
             for a in angles]
    _, closed = correlations.measurement_chain(chain, rho_vec)
    est = correlations.simulate_sequences(chain, rho_vec, int(p["n"]), int(seed),
                                          n_jobs=int(p["jobs"]))
    sigmas = abs(est.value - closed) / est.stderr if est.stderr > 0 else 0.0
    rows = [{"chain": "/".join(f"{a:.6g}" for a in angles), "n": est.n, "value": est.value,
             "stderr": est.stderr, "closed_form": closed, "sigmas": sigmas}]
    checks = [Check("empirical mean within 5 standard errors", sigmas <= 5.0,
                    est.value, closed, 5.0 * est.stderr if est.stderr > 0 else 0.0)]
    results = {"value": est.value, "stderr": est.stderr, "closed_form": closed,
               "n": est.n, "seed": est.seed}
    return ["chain", "n", "value", "stderr", "closed_form", "sigmas"], rows, results, checks


EXPERIMENTS = {
    "bell-sweep": _bell_sweep,
    "interference": _interference,
    "decoherence": _decoherence,
    "syncoherence": _syncoherence,
    "precession": _precession,
    "cartesian-spins": _cartesian_spins,
    "pseudo-quantum-region": _pseudo_quantum_region,
    "correlation-table": _correlation_table,
    "mc-sequences": _mc_sequences,
}


def run(config: ExperimentConfig) -> RunReport:
    """Execute one experiment and write ``<name>.csv`` and ``<name>.report.json``."""
    if config.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {config.experiment!r}; "
                          f"choose from {sorted(EXPERIMENTS)}")
    t0 = time.perf_counter()
    try:
        columns, rows, results, checks = EXPERIMENTS[config.experiment](config.params, config.seed)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid parameters for {config.experiment!r}: {exc}") from exc
    report = RunReport(config, columns, rows, results, checks, wall_time=time.perf_counter() - t0)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"{config.experiment}.csv", columns, rows)
    write_json(out / f"{config.experiment}.report.json", report.payload())
    return report
