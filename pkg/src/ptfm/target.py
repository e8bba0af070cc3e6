"""Parabolic target space: control points, residuals and proximity measures.

A target ``w = (v0, v)`` lives in the parabolic set ``v0 > ||v||^2``. Together
with an interior point ``u`` it forms a full state ``z = (u, w)`` whose residual
vector is

    r[0] = v0 - <s, x>,    r[i] = x_i s_i - v_i^2   (i = 1..n)

and sums to ``(n + 1) * rho(w)``. The state is exactly centered when every
residual equals ``rho(w)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutsideDomainError
from .lp_core import LpInstance, PrimalDualPoint

NEG_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class TargetPoint:
    v0: float
    v: np.ndarray

    @property
    def v_norm_sq(self) -> float:
        return float(np.dot(self.v, self.v))

    def is_valid(self) -> bool:
        return self.v0 > self.v_norm_sq

    def shrink(self, alpha: float) -> "TargetPoint":
        """Greedy update w <- (1 - alpha) w."""
        t = 1.0 - alpha
        return TargetPoint(t * self.v0, t * self.v)


@dataclass(frozen=True)
class FullState:
    u: PrimalDualPoint
    w: TargetPoint

    @property
    def n(self) -> int:
        return self.u.x.size


@dataclass(frozen=True)
class ProximitySnapshot:
    rho: float
    r: np.ndarray
    chi0: float
    chi1: float
    chi2: float
    delta: float
    psi: float
    mu_star: float


def rho(w: TargetPoint, n: int) -> float:
    return (w.v0 - w.v_norm_sq) / (n + 1)


def mu_star(w: TargetPoint) -> float:
    return w.v0 ** 2 / (w.v0 - w.v_norm_sq)


def omega_star(tau: float) -> float:
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"omega_star is defined on [0, 1), got {tau}")
    return -tau - math.log1p(-tau)


def starting_target(u: PrimalDualPoint) -> TargetPoint:
    """Target whose analytic center is ``u`` itself."""
    xs = u.x * u.s
    sigma = float(xs.min())
    v0 = float(xs.sum()) + sigma
    v = np.sqrt(np.maximum(xs - sigma, 0.0))
    return TargetPoint(v0, v)


def raw_residuals(z: FullState) -> np.ndarray:
    x, s = z.u.x, z.u.s
    r = np.empty(x.size + 1)
    r[0] = z.w.v0 - float(np.dot(s, x))
    r[1:] = x * s - z.w.v ** 2
    return r


def residuals(inst, z: FullState) -> np.ndarray:
    """Residual vector; tiny negative roundoff is clipped to zero.

    ``inst`` is accepted for interface symmetry with the barrier and is not
    used: on F_0 the gap <s, x> stands in for <c, x> - <b, y>.
    """
    r = raw_residuals(z)
    floor = -NEG_RESIDUAL_TOL * (1.0 + abs(z.w.v0))
    if np.any(r < floor):
        i = int(np.argmin(r))
        raise OutsideDomainError(f"residual {i} = {r[i]:.3e} is negative; state outside F")
    return np.maximum(r, 0.0)


def chi(r: np.ndarray, rho_w: float, k: int) -> float:
    dev = r - rho_w
    return float(math.sqrt(np.sum(dev * dev / (r ** k * rho_w ** (2 - k)))))


def psi_from_residuals(r: np.ndarray, rho_w: float) -> float:
    """Functional proximity as the explicit sum -sum ln(r_i / rho)."""
    if np.any(r <= 0):
        return math.inf
    return float(-np.sum(np.log(r / rho_w)))


def proximity(z: FullState, r: np.ndarray = None) -> ProximitySnapshot:
    if r is None:
        r = residuals(None, z)
    n = z.n
    rho_w = rho(z.w, n)
    if np.any(r <= 0):
        raise OutsideDomainError("proximity needs strictly positive residuals")
    c0 = chi(r, rho_w, 0)
    c1 = chi(r, rho_w, 1)
    c2 = chi(r, rho_w, 2)
    delta = c1 * c1 / c2 if c2 > 0 else 0.0
    return ProximitySnapshot(
        rho=rho_w, r=r, chi0=c0, chi1=c1, chi2=c2, delta=delta,
        psi=psi_from_residuals(r, rho_w), mu_star=mu_star(z.w),
    )


def phi(w: TargetPoint, n: int) -> float:
    """Minimum of the barrier over u at fixed w."""
    return -(n + 1) * math.log(rho(w, n))


def barrier_F(inst: LpInstance, z: FullState) -> float:
    x, s, y = z.u.x, z.u.s, z.u.y
    prod = x * s - z.w.v ** 2
    gap_arg = z.w.v0 - float(np.dot(inst.c, x)) + float(np.dot(inst.b, y))
    if np.any(prod <= 0) or gap_arg <= 0:
        raise OutsideDomainError("barrier evaluated outside the interior of F")
    return float(-np.sum(np.log(prod)) - math.log(gap_arg))


def psi_via_barrier(inst: LpInstance, z: FullState) -> float:
    return barrier_F(inst, z) - phi(z.w, z.n)
