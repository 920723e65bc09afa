"""Matrix oracle for the two- and four-state systems.

Everything the classical-ensemble side of the package computes is cross-checked
against plain Hermitian matrix algebra living here:

  * the Pauli basis tau_1..tau_3 and the fifteen 4x4 basis matrices L_1..L_15
    (L_k^2 = 1, tr L_k = 0, tr(L_k L_l) = 4 delta_kl),
  * density matrices rho = (1 + rho_k tau_k)/2 and rho = (1 + rho_k L_k)/4
    built from a vector of basis-observable expectation values,
  * expectation values tr(A rho), wave functions for pure states, transition
    probabilities |<a|b>|^2 and (anti)commutator product expectations.

Functions here take and return bare numpy arrays so that the module has no
dependency on the rest of the package; objects exposing a ``.rho`` or ``.e``
attribute are accepted where a vector is expected.
"""
from __future__ import annotations

import numpy as np

from .validate import ConstraintViolation, DimensionMismatch

PAULI = np.array(
    [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=complex,
)
PAULI.setflags(write=False)

LEVI = np.zeros((3, 3, 3))
LEVI[0, 1, 2] = LEVI[1, 2, 0] = LEVI[2, 0, 1] = 1.0
LEVI[0, 2, 1] = LEVI[2, 1, 0] = LEVI[1, 0, 2] = -1.0
LEVI.setflags(write=False)


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = a
    m[2:, 2:] = b
    return m


def _exchange(m: np.ndarray, i: int, j: int) -> np.ndarray:
    out = m.copy()
    out[[i, j]] = out[[j, i]]
    out[:, [i, j]] = out[:, [j, i]]
    return out


def _build_l_basis() -> np.ndarray:
    t1, t2 = PAULI[0], PAULI[1]
    basis = np.zeros((15, 4, 4), dtype=complex)
    basis[0] = np.diag([1, 1, -1, -1])
    basis[1] = np.diag([1, -1, 1, -1])
    basis[2] = np.diag([1, -1, -1, 1])
    basis[3] = _block_diag(t1, t1)
    basis[4] = _block_diag(t2, t2)
    basis[5] = _block_diag(t1, -t1)
    basis[6] = _block_diag(t2, -t2)
    # L_8..L_11: second and third rows/columns of L_4..L_7 exchanged,
    # L_12..L_15: second and fourth rows/columns exchanged.
    for k in range(4):
        basis[7 + k] = _exchange(basis[3 + k], 1, 2)
        basis[11 + k] = _exchange(basis[3 + k], 1, 3)
    return basis


L_BASIS = _build_l_basis()
L_BASIS.setflags(write=False)


def l_operator(k: int) -> np.ndarray:
    """Return L_k by its conventional 1-based index."""
    if not 1 <= k <= 15:
        raise ValueError("L index must be in 1..15")
    return L_BASIS[k - 1]


def basis_identity_error(basis: np.ndarray | None = None) -> float:
    """Largest deviation from L_k^2 = 1, tr L_k = 0, tr(L_k L_l) = 4 delta_kl.

    Exactly zero for the built-in basis; pass a candidate basis to audit it.
    """
    b = L_BASIS if basis is None else np.asarray(basis, dtype=complex)
    eye = np.eye(4)
    worst = 0.0
    for k in range(15):
        worst = max(worst, float(np.abs(b[k] @ b[k] - eye).max()))
        worst = max(worst, abs(complex(np.trace(b[k]))))
        worst = max(worst, float(np.abs(b[k] - b[k].conj().T).max()))
        for l in range(15):
            want = 4.0 if k == l else 0.0
            worst = max(worst, abs(complex(np.trace(b[k] @ b[l])) - want))
    return worst


def _direction(e) -> np.ndarray:
    return np.asarray(getattr(e, "e", e), dtype=float)


def _bloch_vector(state) -> np.ndarray:
    return np.asarray(getattr(state, "rho", state), dtype=float)


def operator_from_direction(e, e0: float = 0.0) -> np.ndarray:
    """Hermitian operator e_k tau_k + e0 (3 components) or e_k L_k + e0 (15)."""
    vec = _direction(e)
    if vec.shape == (3,):
        return np.einsum("k,kij->ij", vec, PAULI) + e0 * np.eye(2)
    if vec.shape == (15,):
        return np.einsum("k,kij->ij", vec, L_BASIS) + e0 * np.eye(4)
    raise DimensionMismatch(f"direction must have 3 or 15 components, got {vec.shape}")


def direction_from_operator(op: np.ndarray) -> tuple[np.ndarray, float]:
    """Invert ``operator_from_direction`` via the trace formulas.

    e_k = tr(A tau_k)/2 for 2x2, e_k = tr(A L_k)/4 for 4x4; e0 = tr(A)/dim.
    """
    op = np.asarray(op, dtype=complex)
    if op.shape == (2, 2):
        e = np.array([np.trace(op @ PAULI[k]).real / 2.0 for k in range(3)])
        return e, float(np.trace(op).real / 2.0)
    if op.shape == (4, 4):
        e = np.array([np.trace(op @ L_BASIS[k]).real / 4.0 for k in range(15)])
        return e, float(np.trace(op).real / 4.0)
    raise DimensionMismatch("operator must be 2x2 or 4x4")


def density_from_bloch(state) -> np.ndarray:
    """Density matrix (1 + rho_k tau_k)/2 or (1 + rho_k L_k)/4 from a Bloch vector.

    Rejects vectors violating the purity bound or positivity beyond 1e-12.
    """
    rho_vec = _bloch_vector(state)
    if rho_vec.shape == (3,):
        if float(rho_vec @ rho_vec) > 1.0 + 1e-12:
            raise ConstraintViolation("two-state purity bound exceeded: sum rho_k^2 > 1")
        return 0.5 * (np.eye(2) + np.einsum("k,kij->ij", rho_vec, PAULI))
    if rho_vec.shape == (15,):
        if float(rho_vec @ rho_vec) > 3.0 + 1e-12:
            raise ConstraintViolation("four-state purity bound exceeded: sum rho_k^2 > 3")
        mat = 0.25 * (np.eye(4) + np.einsum("k,kij->ij", rho_vec, L_BASIS))
        if np.linalg.eigvalsh(mat).min() < -1e-12:
            raise ConstraintViolation("Bloch vector maps to a non-positive matrix")
        return mat
    raise DimensionMismatch("Bloch vector must have 3 or 15 components")


def bloch_from_density(rho: np.ndarray) -> np.ndarray:
    """Expectation values of the basis operators, inverting ``density_from_bloch``."""
    rho = check_density_matrix(rho)
    if rho.shape == (2, 2):
        return np.einsum("kij,ji->k", PAULI, rho).real
    return np.einsum("kij,ji->k", L_BASIS, rho).real


def check_density_matrix(rho, tol: float = 1e-12) -> np.ndarray:
    mat = np.asarray(rho, dtype=complex)
    if mat.shape not in ((2, 2), (4, 4)):
        raise DimensionMismatch("density matrix must be 2x2 or 4x4")
    if np.abs(mat - mat.conj().T).max() > tol:
        raise ConstraintViolation("density matrix is not Hermitian")
    if abs(np.trace(mat).real - 1.0) > tol or abs(np.trace(mat).imag) > tol:
        raise ConstraintViolation("density matrix trace is not 1")
    ev = np.linalg.eigvalsh(mat)
    if ev.min() < -tol:
        raise ConstraintViolation(f"density matrix has a negative eigenvalue {ev.min()!r}")
    if float(np.trace(mat @ mat).real) > 1.0 + tol:
        raise ConstraintViolation("tr rho^2 exceeds 1")
    return mat


def qm_expectation(op: np.ndarray, rho: np.ndarray, tol: float = 1e-12) -> float:
    """tr(A rho); the imaginary part must vanish for Hermitian A."""
    op = np.asarray(op, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if op.shape != rho.shape:
        raise DimensionMismatch("operator and density matrix dimensions differ")
    val = complex(np.trace(op @ rho))
    if np.abs(op - op.conj().T).max() <= tol and abs(val.imag) > 1e-12:
        raise ConstraintViolation(f"expectation of Hermitian operator not real: {val!r}")
    return val.real


def fix_phase(psi: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Make the first component with modulus > tol real and positive."""
    psi = np.asarray(psi, dtype=complex)
    for c in psi:
        if abs(c) > tol:
            return psi * (c.conjugate() / abs(c))
    raise ValueError("wave function is numerically zero")


def wavefunction_from_pure(rho, tol: float = 1e-9) -> np.ndarray:
    """Wave function psi with psi psi^dagger = rho, for a pure density matrix.

    The 2x2 case is solved in closed form from the Bloch vector; the 4x4 case
    uses the LAPACK Hermitian eigensolver. Mixed input (tr rho^2 < 1 - tol) is
    rejected. The free global phase is fixed by ``fix_phase``.
    """
    mat = check_density_matrix(rho, tol=1e-9)
    pur = float(np.trace(mat @ mat).real)
    if pur < 1.0 - tol:
        raise ConstraintViolation(f"not a pure state: tr rho^2 = {pur!r}")
    if mat.shape == (2, 2):
        r = np.einsum("kij,ji->k", PAULI, mat).real
        if 1.0 + r[2] > tol:
            psi = np.array([1.0 + r[2], r[0] + 1j * r[1]], dtype=complex)
        else:
            psi = np.array([0.0, 1.0], dtype=complex)
        psi = psi / np.linalg.norm(psi)
    else:
        evals, evecs = np.linalg.eigh(mat)
        psi = evecs[:, int(np.argmax(evals))]
    return fix_phase(psi, tol=tol)


def pure_state_matrix(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > 1e-12:
        raise ConstraintViolation(f"wave function not normalised: |psi| = {nrm!r}")
    return np.outer(psi, psi.conj())


def bloch_from_psi(psi: np.ndarray) -> np.ndarray:
    """Basis-observable values f_k = psi^dagger (tau or L)_k psi of a pure state."""
    psi = np.asarray(psi, dtype=complex)
    basis = PAULI if psi.shape == (2,) else L_BASIS
    if psi.shape not in ((2,), (4,)):
        raise DimensionMismatch("wave function must have 2 or 4 components")
    return np.einsum("i,kij,j->k", psi.conj(), basis, psi).real


def transition_probability(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 between two normalised wave functions."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch("wave functions have different dimensions")
    return float(abs(np.vdot(a, b)) ** 2)


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator_expectation(a, b, rho) -> float:
    """tr({A, B} rho)/2, the matrix-side value of the conditional 2-point correlation."""
    return float(np.trace(anticommutator(a, b) @ rho).real) / 2.0


def nested_anticommutator_expectation(a, b, c, rho) -> float:
    """tr({{A, B}, C} rho)/4, the matrix-side value of the conditional 3-point correlation."""
    return float(np.trace(anticommutator(anticommutator(a, b), c) @ rho).real) / 4.0


def operator_product_expectations(a, b, c, rho) -> dict[str, float]:
    """Real parts of operator-product expectations.

    re_ab  = Re tr(A B rho)   = tr({A,B} rho)/2
    re_abc = Re tr(A B C rho) = tr(({{A,B},C} + [[A,B],C]) rho)/4

    re_abc mixes measurement orders; the single-order sequential value is
    ``nested_anticommutator_expectation``.
    """
    re_ab = anticommutator_expectation(a, b, rho)
    sym = anticommutator(anticommutator(a, b), c)
    antisym = commutator(commutator(a, b), c)
    re_abc = float(np.trace((sym + antisym) @ rho).real) / 4.0
    return {"re_ab": re_ab, "re_abc": re_abc}


def matrix_to_json(mat) -> str:
    """Serialise a 2x2 or 4x4 complex matrix as [[re, im], ...] in row-major order."""
    import json

    arr = np.asarray(mat, dtype=complex)
    if arr.shape not in ((2, 2), (4, 4)):
        raise DimensionMismatch("matrix must be 2x2 or 4x4")
    pairs = [[float(c.real), float(c.imag)] for c in arr.reshape(-1)]
    return json.dumps(pairs)


def matrix_from_json(text: str) -> np.ndarray:
    import json

    pairs = json.loads(text)
    n = {4: 2, 16: 4}.get(len(pairs))
    if n is None:
        raise ValueError("expected 4 or 16 [re, im] pairs")
    flat = np.array([complex(re, im) for re, im in pairs])
    return flat.reshape(n, n)


def quantum_product(a, b) -> tuple[float, np.ndarray]:
    """Coefficients of the operator product of two offset-free two-state observables.

    For A = a_k tau_k and B = b_k tau_k the product is A B = (a.b) + i eps_klm
    a_l b_m tau_k; returns (scalar part, complex 3-vector part).
    """
    ea = _direction(a)
    eb = _direction(b)
    if ea.shape != (3,) or eb.shape != (3,):
        raise DimensionMismatch("quantum_product is defined for the two-state system")
    e0 = float(ea @ eb)
    evec = 1j * np.einsum("klm,l,m->k", LEVI, ea, eb).astype(complex)
    return e0, evec
