"""Optimal-basis guessing from indicator vectors, with exact verification.

Near a nondegenerate optimum the m largest entries of an indicator vector
(x, 1/s or x/s) sit on the optimal basis. Ordering one gives a trial basis
B; solving A_B x_B = b and A_B^T y = c_B yields a complementary candidate.
It is accepted only after its signs and residuals check out, since the
nondegeneracy assumptions themselves cannot be observed.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, cho_factor, cho_solve, lu_factor, lu_solve

from .lp_core import LpInstance, PrimalDualPoint

log = logging.getLogger(__name__)

INDICATORS = ("ratio_xs", "primal_x", "dual_inv_s")
LU_PIVOT_TOL = 1e-12
VERIFY_TOL = 1e-8


@dataclass
class BasisCandidate:
    indicator: str
    basis: np.ndarray  # sorted 0-based column indices
    x_star: np.ndarray
    s_star: np.ndarray
    y_star: np.ndarray
    accepted: bool
    reason: str = ""
    primal_residual: float = math.nan
    dual_residual: float = math.nan
    gap: float = math.nan
    route: str = "lu"

    def to_dict(self) -> dict:
        return {
            "indicator": self.indicator,
            "route": self.route,
            "basis": [int(i) + 1 for i in self.basis],
            "accepted": self.accepted,
            "reason": self.reason,
            "x_star": self.x_star.tolist(),
            "s_star": self.s_star.tolist(),
            "y_star": self.y_star.tolist(),
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
        }


@dataclass(frozen=True)
class Activation:
    primal_x: bool
    dual_inv_s: bool
    ratio_xs: bool
    beta_indicator: float

    def fires(self, indicator: str) -> bool:
        if indicator == "ratio_xs":
            return self.beta_indicator >= 1.0
        return getattr(self, indicator)

    @property
    def any(self) -> bool:
        return self.primal_x or self.dual_inv_s or self.ratio_xs


def indicator_vector(u: PrimalDualPoint, kind: str) -> np.ndarray:
    if kind == "primal_x":
        return np.array(u.x, dtype=float)
    if kind == "dual_inv_s":
        return 1.0 / u.s
    if kind == "ratio_xs":
        return u.x / u.s
    raise ValueError(f"unknown indicator {kind!r}")


def trial_basis(a, m: int) -> np.ndarray:
    """Indices of the m largest entries; ties go to the smaller index."""
    a = np.asarray(a, dtype=float)
    if m > a.size:
        raise ValueError("basis size exceeds vector length")
    order = np.argsort(-a, kind="stable")
    return np.sort(order[:m])


def _complete(inst: LpInstance, basis, x_b, y, indicator, eps, route) -> BasisCandidate:
    n = inst.n
    nonbasic = np.setdiff1d(np.arange(n), basis)
    x = np.zeros(n)
    x[basis] = x_b
    s = np.zeros(n)
    s[nonbasic] = inst.c[nonbasic] - inst.A[:, nonbasic].T @ y

    rp = float(np.max(np.abs(inst.A @ x - inst.b)))
    rd = float(np.max(np.abs(s + inst.A.T @ y - inst.c)))
    gap = float(np.dot(inst.c, x) - np.dot(inst.b, y))
    floor = -eps / 100.0
    reason = ""
    if x.min() < floor:
        reason = f"x* has a negative entry {x.min():.3e}"
    elif s.min() < floor:
        reason = f"s* has a negative entry {s.min():.3e}"
    elif rp > VERIFY_TOL * (1 + np.max(np.abs(inst.b))):
        reason = f"primal residual {rp:.3e} too large"
    elif rd > VERIFY_TOL * (1 + np.max(np.abs(inst.c))):
        reason = f"dual residual {rd:.3e} too large"
    elif abs(gap) > VERIFY_TOL * (1 + abs(float(np.dot(inst.c, x)))):
        reason = f"duality gap {gap:.3e} too large"
    return BasisCandidate(
        indicator, np.asarray(basis), x, s, y, accepted=not reason, reason=reason,
        primal_residual=rp, dual_residual=rd, gap=gap, route=route,
    )


def _rejected(inst, basis, indicator, reason, route) -> BasisCandidate:
    return BasisCandidate(
        indicator, np.asarray(basis), np.zeros(inst.n), np.zeros(inst.n), np.zeros(inst.m),
        accepted=False, reason=reason, route=route,
    )


def candidate_point(inst: LpInstance, basis, eps: float = 1e-8,
                    indicator: str = "direct") -> BasisCandidate:
    """Basic solution for ``basis`` via dense LU of A_B with partial pivoting."""
    basis = np.sort(np.asarray(basis, dtype=int))
    if basis.size != inst.m:
        raise ValueError(f"basis must have {inst.m} indices, got {basis.size}")
    AB = inst.A[:, basis]
    scale = float(np.max(np.abs(AB)))
    try:
        with warnings.catch_warnings():
            # an exactly singular A_B is reported through the pivot check below
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(AB, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        return _rejected(inst, basis, indicator, f"singular basis matrix: {exc}", "lu")
    umin = float(np.min(np.abs(np.diag(lu))))
    if scale == 0.0 or umin <= LU_PIVOT_TOL * scale:
        return _rejected(inst, basis, indicator,
                         f"singular basis matrix (pivot {umin:.3e})", "lu")
    x_b = lu_solve((lu, piv), inst.b)
    y = lu_solve((lu, piv), inst.c[basis], trans=1)
    return _complete(inst, basis, x_b, y, indicator, eps, "lu")


def candidate_point_via_sigma(inst: LpInstance, u: PrimalDualPoint, basis,
                              eps: float = 1e-8) -> BasisCandidate:
    """Same candidate through the symmetric matrix A_B X_B S_B^{-1} A_B^T.

    Falls back to :func:`candidate_point` when the Cholesky factorization fails.
    """
    basis = np.sort(np.asarray(basis, dtype=int))
    AB = inst.A[:, basis]
    dB = u.x[basis] / u.s[basis]
    sig = (AB * dB) @ AB.T
    sig = 0.5 * (sig + sig.T)
    try:
        fac = cho_factor(sig, lower=True, check_finite=True)
        if np.min(np.diag(fac[0])) ** 2 <= 1e-13 * np.max(np.diag(sig)):
            raise LinAlgError("tiny pivot")
    except (LinAlgError, ValueError) as exc:
        log.info("sigma route failed (%s); falling back to LU", exc)
        cand = candidate_point(inst, basis, eps, indicator="ratio_xs")
        cand.route = "lu-fallback"
        return cand
    x_b = dB * (AB.T @ cho_solve(fac, inst.b))
    y = cho_solve(fac, AB @ (dB * inst.c[basis]))
    return _complete(inst, basis, x_b, y, "ratio_xs", eps, "sigma")


def activation_tests(u: PrimalDualPoint, m: int, n: int) -> Activation:
    x, s = u.x, u.s

    bx = np.zeros(n, dtype=bool)
    bx[trial_basis(x, m)] = True
    test_x = x[bx].sum() >= m ** 2 * x[~bx].sum()

    bs = np.zeros(n, dtype=bool)
    bs[trial_basis(1.0 / s, m)] = True
    test_s = s[~bs].sum() >= (n - m) ** 2 * s[bs].sum()

    ratio = x / s
    bxs = np.zeros(n, dtype=bool)
    bxs[trial_basis(ratio, m)] = True
    on, off = ratio[bxs].sum(), ratio[~bxs].sum()
    test_xs = on >= m ** 3 * off
    beta = math.inf if off == 0 else on / off / m ** 3
    return Activation(bool(test_x), bool(test_s), bool(test_xs), float(beta))


def try_finite_termination(inst: LpInstance, u: PrimalDualPoint, eps: float = 1e-8,
                           policy: str = "awake_tests",
                           indicators: Sequence[str] = INDICATORS,
                           attempts: Optional[list] = None) -> Optional[BasisCandidate]:
    """Return the first verified candidate, or None.

    Indicators are tried in the order ratio_xs, primal_x, dual_inv_s
    (restricted to ``indicators``). With ``policy="awake_tests"`` an indicator
    is tried only when its activation inequality holds. Every built candidate
    is appended to ``attempts`` when a list is given.
    """
    if policy not in ("always", "awake_tests"):
        raise ValueError(f"unknown activation policy {policy!r}")
    act = activation_tests(u, inst.m, inst.n) if policy == "awake_tests" else None
    for kind in INDICATORS:
        if kind not in indicators:
            continue
        if act is not None and not act.fires(kind):
            continue
        basis = trial_basis(indicator_vector(u, kind), inst.m)
        if kind == "ratio_xs":
            cand = candidate_point_via_sigma(inst, u, basis, eps)
        else:
            cand = candidate_point(inst, basis, eps, indicator=kind)
        if attempts is not None:
            attempts.append(cand)
        if cand.accepted:
            return cand
    return None
