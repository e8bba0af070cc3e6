"""Greedy parabolic target-following methods.

Three predictor-corrector schemes share one loop:

* ``tptfm``  - tangential predictor along the universal tangent direction,
* ``acptfm`` - auto-correcting predictor whose right-hand side also absorbs
  the current centering residual,
* ``ptfm2``  - second-order predictor ``u + a*D1 + a^2*D2``.

Every iteration factors the normal matrix once. A centered state
(delta <= beta_k) takes a predictor step sized so that the functional
proximity of the shifted state equals ``omega_star(r)``; otherwise a single
corrector step minimizes the barrier along the centering direction.
The proximity along a predictor ray has a closed form in the step length, so
the step search never refactors.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import finite_term
from .errors import FactorizationError, OutsideDomainError, StallError
from .lp_core import LpInstance, PrimalDualPoint, duality_gap
from .newton import Direction, ScalingState, factorize, solve_utd
from .target import (
    FullState,
    omega_star,
    proximity,
    psi_from_residuals,
    raw_residuals,
    residuals,
    rho,
    starting_target,
)

log = logging.getLogger(__name__)

METHODS = ("tptfm", "acptfm", "ptfm2")
STEP_CAP = 1.0 - 1e-12
MIN_STEP = 1e-14
CORRECTOR_TOL = 1e-4
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class MethodConfig:
    method: str = "ptfm2"
    r: float = 6.0 / 7.0
    beta_policy: str = "constant"  # or "proportional"
    beta_scale: float = 1.0
    eps: float = 1e-8
    max_outer: int = 500
    ls_rel_tol: float = 1e-3
    finite_termination: bool = False
    activation_policy: str = "awake_tests"
    ft_indicators: Sequence[str] = finite_term.INDICATORS
    ft_min_iter: int = 3
    debug_checks: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.r < 1.0:
            raise ValueError("r must lie in (0, 1)")
        if self.beta_policy not in ("constant", "proportional"):
            raise ValueError(f"unknown beta policy {self.beta_policy!r}")
        if self.activation_policy not in ("always", "awake_tests"):
            raise ValueError(f"unknown activation policy {self.activation_policy!r}")
        if self.eps <= 0 or self.max_outer < 1 or not 0 < self.ls_rel_tol < 1:
            raise ValueError("eps, max_outer and ls_rel_tol must be positive")
        self.ft_indicators = tuple(self.ft_indicators)

    @property
    def A_psi(self) -> float:
        return omega_star(self.r)

    @property
    def beta(self) -> float:
        return self.r / (2.0 + self.r)

    def beta_k(self, v0: float, v0_init: float) -> float:
        if self.method != "tptfm":
            return self.beta
        level = 0.99 * self.beta
        if self.beta_policy == "proportional":
            level = min(level, self.beta_scale * v0 / v0_init)
        return level


@dataclass(frozen=True)
class PredictorCoeffs:
    """Coefficients of the method vector V(a) in

        psi(a) = -sum_i ln(1 + V_i(a) / rho(w(a))),
        rho(w(a)) = ((1-a) v0 - (1-a)^2 |v|^2) / (n+1).

    tptfm:  V(a) = base + a^2 g
    acptfm: V(a) = (1-a) base + a^2 g
    ptfm2:  V(a) = (1-a) base + a^3 g1 + a^4 g2
    """

    method: str
    base: np.ndarray
    rho0: float
    v0: float
    v_norm_sq: float
    g: Optional[np.ndarray] = None
    g1: Optional[np.ndarray] = None
    g2: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.base.size - 1

    def rho_at(self, alpha: float) -> float:
        t = 1.0 - alpha
        return (t * self.v0 - t * t * self.v_norm_sq) / (self.n + 1)

    def vector(self, alpha: float) -> np.ndarray:
        if self.method == "tptfm":
            return self.base + alpha ** 2 * self.g
        if self.method == "acptfm":
            return (1.0 - alpha) * self.base + alpha ** 2 * self.g
        return (1.0 - alpha) * self.base + alpha ** 3 * self.g1 + alpha ** 4 * self.g2


@dataclass
class IterationRecord:
    k: int
    kind: str
    alpha: float
    v0_after: float
    gap_after: float
    delta_after: float
    psi_after: float
    mu_star_after: float
    wall_time: float


@dataclass
class SolveReport:
    method: str
    records: List[IterationRecord] = field(default_factory=list)
    predictor_count: int = 0
    corrector_count: int = 0
    termination: str = "max_iter"
    message: str = ""
    final_gap: float = math.nan
    final_v0: float = math.nan
    u: Optional[PrimalDualPoint] = None
    basis_candidate: Optional[finite_term.BasisCandidate] = None
    ft_attempts: int = 0
    warnings: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def success(self) -> bool:
        return self.termination in ("eps_reached", "finite_term_success")

    def warn(self, key: str, msg: str, *args) -> None:
        self.warnings[key] = self.warnings.get(key, 0) + 1
        log.debug(msg, *args)

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "termination": self.termination,
            "message": self.message,
            "predictor_count": self.predictor_count,
            "corrector_count": self.corrector_count,
            "final_gap": self.final_gap,
            "final_v0": self.final_v0,
            "ft_attempts": self.ft_attempts,
            "warnings": dict(self.warnings),
            "wall_time": self.wall_time,
            "records": [asdict(rec) for rec in self.records],
            "solution": None,
            "exact_solution": None,
        }
        if self.u is not None:
            d["solution"] = {"x": self.u.x.tolist(), "s": self.u.s.tolist(), "y": self.u.y.tolist()}
        if self.basis_candidate is not None:
            d["exact_solution"] = self.basis_candidate.to_dict()
        return d


# ------------------------------------------------------- right-hand sides

def rhs_corrector(z: FullState) -> np.ndarray:
    r = raw_residuals(z)
    return rho(z.w, z.n) - r[1:]


def rhs_predictor_tptfm(z: FullState) -> np.ndarray:
    n = z.n
    v = z.w.v
    return (z.w.v_norm_sq / (n + 1) - rho(z.w, n)) - 2.0 * v * v


def rhs_predictor_acptfm(z: FullState) -> np.ndarray:
    v = z.w.v
    return z.w.v_norm_sq / (z.n + 1) - v * v - z.u.x * z.u.s


def rhs_predictor2_hat(z: FullState, tilde: Direction) -> np.ndarray:
    v = z.w.v
    return v * v - z.w.v_norm_sq / (z.n + 1) - tilde.dx * tilde.ds


def predictor_coeffs(z: FullState, method: str, directions: Sequence[Direction],
                     r: Optional[np.ndarray] = None) -> PredictorCoeffs:
    n = z.n
    w = z.w
    if r is None:
        r = raw_residuals(z)
    rho0 = rho(w, n)
    vsq = w.v_norm_sq
    base = r - rho0
    common = dict(method=method, base=base, rho0=rho0, v0=w.v0, v_norm_sq=vsq)
    if method in ("tptfm", "acptfm"):
        d = directions[0]
        g = np.empty(n + 1)
        g[1:] = d.dx * d.ds - w.v ** 2 + vsq / (n + 1)
        # <dx, ds> vanishes only in exact arithmetic; keeping it makes the gap
        # entry match the iterate once rho(w(a)) is tiny, and <e, g> = 0 exactly
        g[0] = vsq / (n + 1) - float(np.dot(d.dx, d.ds))
        return PredictorCoeffs(g=g, **common)
    if method == "ptfm2":
        t, h = directions
        g1 = np.zeros(n + 1)
        g2 = np.zeros(n + 1)
        g1[1:] = h.dx * t.ds + h.ds * t.dx
        g2[1:] = h.dx * h.ds
        g1[0] = -float(np.sum(g1[1:]))
        g2[0] = -float(np.sum(g2[1:]))
        return PredictorCoeffs(g1=g1, g2=g2, **common)
    raise ValueError(f"unknown method {method!r}")


def psi_along(coeffs: PredictorCoeffs, alpha: float) -> float:
    """Proximity of the shifted state; +inf when it leaves the domain."""
    rho_a = coeffs.rho_at(alpha)
    if not rho_a > 0:
        return math.inf
    args = 1.0 + coeffs.vector(alpha) / rho_a
    if np.any(args <= 0):
        return math.inf
    return float(-np.sum(np.log(args)))


def predictor_search(coeffs: PredictorCoeffs, A_psi: float, ls_rel_tol: float = 1e-3,
                     alpha0: float = 0.1,
                     feasible: Optional[Callable[[float], bool]] = None) -> float:
    """Largest bracketed step with psi(alpha) <= A_psi.

    The search works on the odds t = a / (1 - a): it doubles t from ``alpha0``
    until psi exceeds the level (or the step leaves the domain), then bisects
    ln t until the bracket is narrower than ``ls_rel_tol``. This resolves a
    relative width in both a and 1 - a, which matters once steps approach 1.
    """

    def ok(a: float) -> bool:
        if psi_along(coeffs, a) > A_psi:
            return False
        return feasible is None or feasible(a)

    if ok(STEP_CAP):
        return STEP_CAP
    hi_t = STEP_CAP / (1.0 - STEP_CAP)
    a = min(max(alpha0, 1e-6), 0.5)
    t = a / (1.0 - a)
    if ok(a):
        lo_t = t
        while True:
            t = 2.0 * lo_t
            if t >= hi_t:
                break
            if ok(t / (1.0 + t)):
                lo_t = t
            else:
                hi_t = t
                break
    else:
        hi_t = t
        while True:
            t *= 0.5
            a = t / (1.0 + t)
            if a < MIN_STEP:
                raise StallError("no admissible predictor step")
            if ok(a):
                lo_t = t
                break
            hi_t = t
    while math.log(hi_t / lo_t) > ls_rel_tol:
        mid = math.sqrt(lo_t * hi_t)
        if ok(mid / (1.0 + mid)):
            lo_t = mid
        else:
            hi_t = mid
    return lo_t / (1.0 + lo_t)


# --------------------------------------------------------------- corrector

def _quad_terms(z: FullState, d: np.ndarray, direction: Direction):
    """Barrier along u + a*D at fixed w is -sum ln(q0 + q1 a + q2 a^2)."""
    r = raw_residuals(z)
    q0 = r
    q1 = np.empty_like(r)
    q2 = np.empty_like(r)
    q1[0] = -float(np.sum(d))
    q1[1:] = d
    q2[0] = -float(np.dot(direction.dx, direction.ds))
    q2[1:] = direction.dx * direction.ds
    return q0, q1, q2


def _first_root(q0, q1, q2) -> float:
    """Smallest a > 0 at which some q0 + q1 a + q2 a^2 reaches zero."""
    best = math.inf
    lin = q2 == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        mask = lin & (q1 < 0)
        if np.any(mask):
            best = min(best, float(np.min(-q0[mask] / q1[mask])))
        quad = ~lin
        if np.any(quad):
            a, b, c = q2[quad], q1[quad], q0[quad]
            disc = b * b - 4 * a * c
            real = disc >= 0
            sq = np.sqrt(np.where(real, disc, 0.0))
            # numerically stable pair of roots
            qq = -0.5 * (b + np.copysign(sq, b))
            r1 = np.where(qq != 0, qq / a, np.inf)
            r2 = np.where(qq != 0, c / qq, np.inf)
            for root in (r1, r2):
                cand = root[real & (root > 0)]
                if cand.size:
                    best = min(best, float(cand.min()))
    return best


def _barrier_line(q0, q1, q2):
    def f(a):
        args = q0 + a * (q1 + a * q2)
        if np.any(args <= 0):
            return math.inf
        return float(-np.sum(np.log(args)))

    def derivs(a):
        args = q0 + a * (q1 + a * q2)
        da = q1 + 2 * a * q2
        return float(-np.sum(da / args)), float(np.sum((da / args) ** 2 - 2 * q2 / args))

    return f, derivs


def corrector_step(inst: LpInstance, z: FullState, state: ScalingState,
                   tol: float = CORRECTOR_TOL):
    """One centering step at fixed w. Returns ``(u_next, alpha)``."""
    d = rhs_corrector(z)
    if not np.any(d):
        return z.u, 0.0
    direction = solve_utd(state, d)
    q0, q1, q2 = _quad_terms(z, d, direction)
    f, derivs = _barrier_line(q0, q1, q2)
    upper = _first_root(q0, q1, q2)
    if not math.isfinite(upper):
        upper = 4.0
    upper *= 1.0 - 1e-10
    f0 = f(0.0)

    lo, hi = 0.0, upper
    a1 = hi - _GOLDEN * (hi - lo)
    a2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(a1), f(a2)
    while hi - lo > tol * max(hi, 1e-300):
        if f1 <= f2:
            hi, a2, f2 = a2, a1, f1
            a1 = hi - _GOLDEN * (hi - lo)
            f1 = f(a1)
        else:
            lo, a1, f1 = a1, a2, f2
            a2 = lo + _GOLDEN * (hi - lo)
            f2 = f(a2)
    alpha, fa = (a1, f1) if f1 <= f2 else (a2, f2)
    g, h = derivs(alpha)
    if h > 0:
        polished = alpha - g / h
        if 0.0 < polished < upper:
            fp = f(polished)
            if fp < fa:
                alpha, fa = polished, fp
    if not fa <= f0:
        return z.u, 0.0
    return z.u.step(alpha, direction.dx, direction.ds, direction.dy), alpha


# ------------------------------------------------------------- constants

def gamma_monitor(n: int, r: float, method: str) -> float:
    """Theoretical per-predictor contraction constant of mu_star.

    ``tptfm`` uses the auto-correcting constant as a step-size scale only.
    """
    beta = r / (2.0 + r)
    n_r = 25.0 / 6.0 + n / (1.0 - beta)
    if method in ("tptfm", "acptfm"):
        n_tilde = (n + 1) / 2.0 + n_r
        return 1.0 / (1.0 + math.sqrt(n_tilde / r))
    if method == "ptfm2":
        n_hat = math.sqrt(16.0 / 27.0 * (n + 1) + 0.5 * n_r ** 2)
        n_bar = max(n_hat, n_r)
        k1 = (r / 2.0 * math.sqrt(1.0 - beta)) ** (1.0 / 3.0)
        k2 = 1.0 + (r / (2.0 * (1.0 - beta))) ** (1.0 / 3.0) / 6.0
        return k1 / (math.sqrt(n_bar) * k2 + k1)
    raise ValueError(f"unknown method {method!r}")


# -------------------------------------------------------------- main loop

def _predictor_directions(z: FullState, method: str, state: ScalingState) -> List[Direction]:
    if method == "tptfm":
        return [solve_utd(state, rhs_predictor_tptfm(z))]
    tilde = solve_utd(state, rhs_predictor_acptfm(z))
    if method == "acptfm":
        return [tilde]
    return [tilde, solve_utd(state, rhs_predictor2_hat(z, tilde))]


def _advance(u: PrimalDualPoint, dirs: Sequence[Direction], alpha: float) -> PrimalDualPoint:
    u = u.step(alpha, dirs[0].dx, dirs[0].ds, dirs[0].dy)
    if len(dirs) > 1:
        u = u.step(alpha * alpha, dirs[1].dx, dirs[1].ds, dirs[1].dy)
    return u


def run(inst: LpInstance, u0: PrimalDualPoint, config: Optional[MethodConfig] = None,
        callback: Optional[Callable[..., None]] = None) -> SolveReport:
    """Solve ``inst`` from the strictly feasible ``u0``.

    ``callback(kind, z_before, z_after, alpha, config)`` is invoked after
    every accepted predictor or corrector step.
    """
    cfg = config or MethodConfig()
    report = SolveReport(method=cfg.method)
    t_start = time.perf_counter()
    A_psi = cfg.A_psi
    n = inst.n
    gamma = gamma_monitor(n, cfg.r, cfg.method)

    u = PrimalDualPoint(np.array(u0.x, float), np.array(u0.s, float), np.array(u0.y, float))
    w = starting_target(u)
    v0_init = w.v0
    last_alpha = gamma

    try:
        for k in range(cfg.max_outer):
            z = FullState(u, w)
            snap = proximity(z, residuals(inst, z))
            beta_k = cfg.beta_k(w.v0, v0_init)
            centered = snap.delta <= beta_k

            if centered and w.v0 <= cfg.eps:
                report.termination = "eps_reached"
                break

            if centered and cfg.finite_termination and k >= cfg.ft_min_iter:
                attempts: list = []
                cand = finite_term.try_finite_termination(
                    inst, u, cfg.eps, cfg.activation_policy, cfg.ft_indicators, attempts
                )
                report.ft_attempts += len(attempts)
                if cand is not None:
                    report.basis_candidate = cand
                    report.termination = "finite_term_success"
                    break

            state = factorize(inst, u)

            if centered and snap.psi <= A_psi:
                dirs = _predictor_directions(z, cfg.method, state)
                coeffs = predictor_coeffs(z, cfg.method, dirs, snap.r)

                def feasible(a, u=u, dirs=dirs):
                    trial = _advance(u, dirs, a)
                    return bool(np.all(trial.x > 0) and np.all(trial.s > 0))

                alpha = predictor_search(coeffs, A_psi, cfg.ls_rel_tol,
                                         alpha0=min(last_alpha, 0.5), feasible=feasible)
                u_new = _advance(u, dirs, alpha)
                w_new = w.shrink(alpha)
                kind = "predictor"
                last_alpha = alpha
                report.predictor_count += 1
                if cfg.debug_checks:
                    _check_predictor(report, coeffs, alpha, FullState(u_new, w_new))
            else:
                u_new, alpha = corrector_step(inst, z, state)
                w_new = w
                kind = "corrector"
                report.corrector_count += 1

            z_new = FullState(u_new, w_new)
            snap_new = proximity(z_new, residuals(inst, z_new))
            _monitor(report, cfg, kind, snap, snap_new, alpha, gamma, beta_k, A_psi)
            report.records.append(IterationRecord(
                k=k, kind=kind, alpha=float(alpha), v0_after=w_new.v0,
                gap_after=duality_gap(inst, u_new), delta_after=snap_new.delta,
                psi_after=snap_new.psi, mu_star_after=snap_new.mu_star,
                wall_time=time.perf_counter() - t_start,
            ))
            if callback is not None:
                callback(kind, z, z_new, alpha, cfg)
            u, w = u_new, w_new
        else:
            report.termination = "max_iter"
    except (FactorizationError, OutsideDomainError) as exc:
        report.termination = "numerical_failure"
        report.message = str(exc)
    except StallError as exc:
        report.termination = "stall"
        report.message = str(exc)

    report.u = u
    report.final_gap = duality_gap(inst, u)
    report.final_v0 = w.v0
    if report.basis_candidate is not None:
        report.final_gap = report.basis_candidate.gap
    report.wall_time = time.perf_counter() - t_start
    return report


def _check_predictor(report: SolveReport, coeffs: PredictorCoeffs, alpha: float,
                     z_new: FullState) -> None:
    closed = psi_along(coeffs, alpha)
    direct = psi_from_residuals(raw_residuals(z_new), rho(z_new.w, z_new.n))
    if abs(closed - direct) > 1e-8 * max(1.0, abs(direct)):
        report.warn("psi_closed_form", "closed-form psi %.12g vs direct %.12g", closed, direct)
    for a in (0.25 * alpha, 0.5 * alpha, alpha):
        vec = coeffs.vector(a)
        if abs(vec.sum()) > 1e-9 * (coeffs.n + 1) * max(coeffs.rho0, np.max(np.abs(vec))):
            report.warn("zero_sum", "<e, V(%g)> = %.3e", a, vec.sum())


def _monitor(report, cfg, kind, before, after, alpha, gamma, beta_k, A_psi) -> None:
    if kind == "predictor":
        if after.psi > A_psi + 1e-6:
            report.warn("psi_after_predictor", "psi %.6g exceeds level after predictor", after.psi)
        if cfg.method != "tptfm":
            if after.mu_star > before.mu_star / (1.0 + gamma) * (1 + 1e-12):
                report.warn("mu_contraction", "mu* contraction below theory at alpha=%g", alpha)
    else:
        if after.delta <= beta_k:
            lo = (1.0 - beta_k) * after.rho
            hi = after.rho / (1.0 - beta_k)
            if np.any(after.r < lo * (1 - 1e-12)) or np.any(after.r > hi * (1 + 1e-12)):
                report.warn("sandwich", "centered state violates residual sandwich")
            if after.chi1 > beta_k / math.sqrt(1 - beta_k) or after.chi0 > beta_k / (1 - beta_k):
                report.warn("chi_bounds", "chi bounds exceeded at delta=%g", after.delta)
        if after.delta > before.delta:
            report.warn("corrector_delta_increase", "corrector increased delta")
