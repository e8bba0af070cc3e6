"""Normal-equations factorization and the universal tangent direction.

For an interior point (x, s) and any right-hand side d, the direction
(dx, ds, dy) solves

    X ds + S dx = d,   A dx = 0,   ds + A^T dy = 0.

Eliminating gives Sigma dy = -A S^{-1} d with Sigma = A X S^{-1} A^T, then
ds = -A^T dy and dx = S^{-1} (d - X ds). Sigma is factored once per iterate
and reused for every right-hand side at that iterate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.blas import dsyrk
from scipy.linalg.lapack import dpotrf

from .errors import DimensionError, FactorizationError
from .lp_core import LpInstance, PrimalDualPoint

PIVOT_TOL = 1e-13
RIDGE_SCALE = 1e-12


@dataclass(frozen=True)
class ScalingState:
    A: np.ndarray
    x: np.ndarray
    s: np.ndarray
    chol: np.ndarray  # lower-triangular factor of Sigma
    ridge: float = 0.0

    def sigma(self) -> np.ndarray:
        return self.chol @ self.chol.T


@dataclass(frozen=True)
class Direction:
    dx: np.ndarray
    ds: np.ndarray
    dy: np.ndarray

    def __add__(self, other: "Direction") -> "Direction":
        return Direction(self.dx + other.dx, self.ds + other.ds, self.dy + other.dy)

    def __mul__(self, t: float) -> "Direction":
        return Direction(t * self.dx, t * self.ds, t * self.dy)

    __rmul__ = __mul__


def normal_matrix(A: np.ndarray, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Sigma = A diag(x/s) A^T, accumulated symmetrically."""
    scaled = A * np.sqrt(x / s)
    lower = dsyrk(1.0, scaled, lower=1)
    return np.tril(lower) + np.tril(lower, -1).T


def factorize(inst: LpInstance, u: PrimalDualPoint, ridge: bool = False) -> ScalingState:
    """Cholesky-factor the normal-equations matrix at ``u``.

    Raises FactorizationError (with the 0-based pivot index) when a pivot is
    not larger than ``PIVOT_TOL * max(diag(Sigma))``; this signals rank
    deficiency of A or extreme scaling. ``ridge=True`` adds a tiny diagonal
    shift for diagnostics only.
    """
    if inst.n <= inst.m:
        raise DimensionError("normal equations require m < n")
    x = np.asarray(u.x, dtype=float)
    s = np.asarray(u.s, dtype=float)
    if x.shape != (inst.n,) or s.shape != (inst.n,):
        raise DimensionError("x and s must have length n")
    if np.any(x <= 0) or np.any(s <= 0):
        raise FactorizationError("x and s must be strictly positive")

    sigma = normal_matrix(inst.A, x, s)
    shift = 0.0
    if ridge:
        shift = RIDGE_SCALE * np.trace(sigma) / inst.m
        sigma[np.diag_indices_from(sigma)] += shift
    dmax = float(np.max(np.diag(sigma)))
    if not np.isfinite(dmax) or dmax <= 0:
        raise FactorizationError("normal matrix has a non-positive diagonal", 0)

    L, info = dpotrf(sigma, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise FactorizationError(f"non-positive pivot at index {info - 1}", info - 1)
    if info < 0:
        raise FactorizationError(f"dpotrf argument error {info}")
    pivots = np.diag(L) ** 2
    bad = np.flatnonzero(pivots <= PIVOT_TOL * dmax)
    if bad.size:
        k = int(bad[0])
        raise FactorizationError(
            f"pivot {pivots[k]:.3e} at index {k} below {PIVOT_TOL:g} * max diagonal", k
        )
    return ScalingState(inst.A, x, s, L, shift)


def solve_utd(state: ScalingState, d) -> Direction:
    d = np.asarray(d, dtype=float)
    dy = -cho_solve((state.chol, True), state.A @ (d / state.s))
    ds = -(state.A.T @ dy)
    dx = (d - state.x * ds) / state.s
    return Direction(dx, ds, dy)


def direction_residuals(state: ScalingState, d, direction: Direction) -> dict:
    """Infinity-norm residuals of the three defining equations plus <dx, ds>."""
    d = np.asarray(d, dtype=float)
    return {
        "null": float(np.max(np.abs(state.A @ direction.dx))),
        "range": float(np.max(np.abs(direction.ds + state.A.T @ direction.dy))),
        "comp": float(np.max(np.abs(state.x * direction.ds + state.s * direction.dx - d))),
        "inner": float(np.dot(direction.dx, direction.ds)),
    }
