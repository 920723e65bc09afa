"""ensembleq: classical statistical ensembles with two- and four-state quantum behavior.

Finite weighted ensembles of micro-states on the circle, the sphere, or the
four-state manifold carry probabilistic two-level observables. Reducing an
ensemble to its basis-observable expectation values reproduces the full
quantum formalism for the corresponding two- or four-state system: trace-rule
expectation values, conditional correlations equal to (anti)commutator
expressions, unitary evolution from purity conservation, entanglement and
Bell-inequality violation. Every classical-side result is cross-checked
against the matrix oracle in ``qmatrix``.
"""

from .manifolds import (
    BlochState,
    Ensemble,
    MicroState,
    SubstateEnsemble,
    extend_to_substates,
    grid_ensemble,
    microstate_four,
    microstate_s1,
    microstate_s2,
    mix,
    purity,
    reduce_ensemble,
)
from .observables import (
    NoEigenstateError,
    ProductObservable,
    RANDOM,
    RandomObservable,
    TwoLevelObservable,
    basic_state_probability,
    basis_spin,
    combine,
    expectation,
    mean_in_state,
    moment,
    prob_minus,
    prob_plus,
    scale,
    shift,
    spin,
)
from .correlations import (
    MeasurementRecord,
    SequenceEstimate,
    WeightedEigenstateSum,
    classical_correlation,
    conditional_correlation_2pt,
    conditional_correlation_3pt,
    conditional_expectation_in_eigenstate,
    conditional_product,
    measurement_chain,
    pointwise_correlation,
    sequence_probabilities,
    simulate_sequences,
)
from .dynamics import (
    FlowParams,
    Hamiltonian,
    ReducedTransition,
    Trajectory,
    integrate_open,
    integrate_von_neumann,
    reduced_from_micro,
    rotate_distribution,
    syncoherence_closed_form,
    syncoherence_flow,
    unitary_step,
)
from .finite import (
    CartesianSpinEnsemble,
    FiniteSpinSystem,
    cartesian_measure_sz,
    cartesian_purity,
    integrate_out,
    realizable_region_check,
    reduce_to_rho,
    zn_step_evolution,
    zn_system,
)
from .fourstate import (
    BellCheck,
    OutcomeTable,
    bell_check,
    bit_observable,
    entangled_bloch,
    entangled_psi,
    entangled_state,
    exchange_symmetry,
    interference_evolution,
    is_exchange_symmetric,
    outcomes_from_t,
    rotated_spin_correlation,
)
from .validate import ConstraintViolation, DimensionMismatch

__version__ = "0.1.0"

__all__ = [
    "BellCheck", "BlochState", "CartesianSpinEnsemble", "ConstraintViolation",
    "DimensionMismatch", "Ensemble", "FiniteSpinSystem", "FlowParams",
    "Hamiltonian", "MeasurementRecord", "MicroState", "NoEigenstateError",
    "OutcomeTable", "ProductObservable", "RANDOM", "RandomObservable",
    "ReducedTransition", "SequenceEstimate", "SubstateEnsemble", "Trajectory",
    "TwoLevelObservable", "WeightedEigenstateSum", "basic_state_probability",
    "basis_spin", "bell_check", "bit_observable", "cartesian_measure_sz",
    "cartesian_purity", "classical_correlation", "combine",
    "conditional_correlation_2pt", "conditional_correlation_3pt",
    "conditional_expectation_in_eigenstate", "conditional_product",
    "entangled_bloch", "entangled_psi", "entangled_state", "exchange_symmetry",
    "expectation", "extend_to_substates", "grid_ensemble", "integrate_open",
    "integrate_out", "integrate_von_neumann", "interference_evolution",
    "is_exchange_symmetric", "mean_in_state", "measurement_chain",
    "microstate_four", "microstate_s1", "microstate_s2", "mix", "moment",
    "outcomes_from_t", "pointwise_correlation", "prob_minus", "prob_plus",
    "purity", "realizable_region_check", "reduce_ensemble", "reduce_to_rho",
    "reduced_from_micro", "rotate_distribution", "rotated_spin_correlation",
    "scale", "sequence_probabilities", "shift", "simulate_sequences", "spin",
    "syncoherence_closed_form", "syncoherence_flow", "unitary_step",
    "zn_step_evolution", "zn_system",
]
