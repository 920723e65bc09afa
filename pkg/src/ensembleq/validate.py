"""Shared input-validation helpers and error types.

Inputs that break an invariant are rejected, never silently repaired:
probability vectors are not renormalised, norms are not rescaled.
"""
from __future__ import annotations

import math

import numpy as np

TOL = 1e-12


class ConstraintViolation(ValueError):
    """A numerical invariant (normalisation, purity bound, positivity) is broken."""


class DimensionMismatch(ValueError):
    """Operands live in different state spaces (e.g. 3- vs 15-component)."""


def as_float_array(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_unit_vector(v, name: str = "e", tol: float = TOL) -> np.ndarray:
    arr = as_float_array(v, name)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector")
    nrm2 = float(arr @ arr)
    if abs(nrm2 - 1.0) > tol:
        raise ConstraintViolation(f"{name} is not unit norm: |{name}|^2 = {nrm2!r}")
    return arr


def check_probabilities(p, tol: float = TOL) -> np.ndarray:
    """Validate a probability vector: entries >= 0 and an (fsum-)exact total of 1."""
    arr = as_float_array(p, "probabilities")
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("probabilities must be a non-empty 1-d vector")
    if np.any(arr < -tol):
        raise ConstraintViolation(f"negative probability: min = {arr.min()!r}")
    total = math.fsum(arr.tolist())
    if abs(total - 1.0) > tol:
        raise ConstraintViolation(f"probabilities sum to {total!r}, not 1")
    return arr


def check_rotation(m, tol: float = 1e-12) -> np.ndarray:
    arr = as_float_array(m, "rotation")
    if arr.shape != (3, 3):
        raise ValueError("rotation must be a 3x3 matrix")
    if np.abs(arr.T @ arr - np.eye(3)).max() > tol:
        raise ConstraintViolation("matrix is not orthogonal")
    if abs(np.linalg.det(arr) - 1.0) > 1e-10:
        raise ConstraintViolation("matrix is orthogonal but not a proper rotation (det != +1)")
    return arr


def check_in_range(x: float, lo: float, hi: float, name: str) -> float:
    x = float(x)
    if not (lo <= x <= hi):
        raise ValueError(f"{name} = {x!r} outside [{lo}, {hi}]")
    return x
