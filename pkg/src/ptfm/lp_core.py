"""Standard-form LP data, primal-dual points and the JSON problem format.

The primal-dual pair is

    min <c, x>  s.t.  A x = b, x >= 0
    max <b, y>  s.t.  s + A^T y = c, s >= 0

with dense ``A`` of shape ``(m, n)`` and ``m < n``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import IO, Optional, Tuple, Union

import numpy as np

from .errors import DimensionError, InfeasiblePointError, NonFiniteError

FEAS_TOL = 1e-9


def _vector(data, length: int, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 1 or arr.size != length:
        raise DimensionError(f"{name} must have length {length}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class LpInstance:
    """Dense standard-form LP. Arrays are copied and made read-only."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2:
            raise DimensionError(f"A must be 2-D, got shape {A.shape}")
        m, n = A.shape
        if m < 1 or n <= m:
            raise DimensionError(f"need 1 <= m < n, got m={m}, n={n}")
        if not np.all(np.isfinite(A)):
            raise NonFiniteError("A contains non-finite entries")
        b = _vector(self.b, m, "b").copy()
        c = _vector(self.c, n, "c").copy()
        for arr in (A, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class PrimalDualPoint:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray

    def step(self, alpha: float, dx, ds, dy) -> "PrimalDualPoint":
        return PrimalDualPoint(self.x + alpha * dx, self.s + alpha * ds, self.y + alpha * dy)


@dataclass(frozen=True)
class FeasibilityReport:
    primal_residual: float
    dual_residual: float
    min_x: float
    min_s: float
    ok: bool


def duality_gap(inst: LpInstance, u: PrimalDualPoint) -> float:
    """Return <s, x>, which equals <c, x> - <b, y> for feasible ``u``."""
    return float(np.dot(u.s, u.x))


def objective_gap(inst: LpInstance, u: PrimalDualPoint) -> float:
    return float(np.dot(inst.c, u.x) - np.dot(inst.b, u.y))


def check_feasibility(inst: LpInstance, u: PrimalDualPoint, tol: float = FEAS_TOL) -> FeasibilityReport:
    x, s, y = (np.asarray(v, dtype=float) for v in (u.x, u.s, u.y))
    if x.shape != (inst.n,) or s.shape != (inst.n,) or y.shape != (inst.m,):
        raise DimensionError(
            f"point shapes x{x.shape} s{s.shape} y{y.shape} do not match m={inst.m}, n={inst.n}"
        )
    rp = float(np.max(np.abs(inst.A @ x - inst.b)))
    rd = float(np.max(np.abs(s + inst.A.T @ y - inst.c)))
    ok = (
        rp <= tol * (1.0 + np.max(np.abs(inst.b)))
        and rd <= tol * (1.0 + np.max(np.abs(inst.c)))
        and bool(np.all(x > 0))
        and bool(np.all(s > 0))
    )
    return FeasibilityReport(rp, rd, float(x.min()), float(s.min()), bool(ok))


# ---------------------------------------------------------------- JSON I/O

def instance_to_dict(inst: LpInstance, u0: Optional[PrimalDualPoint] = None) -> dict:
    # float repr is the shortest string that round-trips, so dumps is lossless
    d = {
        "m": inst.m,
        "n": inst.n,
        "A": inst.A.ravel().tolist(),
        "b": inst.b.tolist(),
        "c": inst.c.tolist(),
    }
    if u0 is not None:
        d["x0"] = np.asarray(u0.x, dtype=float).tolist()
        d["s0"] = np.asarray(u0.s, dtype=float).tolist()
        d["y0"] = np.asarray(u0.y, dtype=float).tolist()
    return d


def instance_from_dict(d: dict, tol: float = FEAS_TOL) -> Tuple[LpInstance, Optional[PrimalDualPoint]]:
    try:
        m, n = int(d["m"]), int(d["n"])
        flat = d["A"]
        b, c = d["b"], d["c"]
    except (KeyError, TypeError) as exc:
        raise DimensionError(f"malformed problem object: {exc}") from exc
    if m < 1 or n <= m:
        raise DimensionError(f"need 1 <= m < n, got m={m}, n={n}")
    A = _vector(flat, m * n, "A").reshape(m, n)
    inst = LpInstance(A, b, c)

    keys = [k in d for k in ("x0", "s0", "y0")]
    if not any(keys):
        return inst, None
    if not all(keys):
        raise DimensionError("x0, s0 and y0 must be given together")
    u0 = PrimalDualPoint(
        _vector(d["x0"], n, "x0"), _vector(d["s0"], n, "s0"), _vector(d["y0"], m, "y0")
    )
    rep = check_feasibility(inst, u0, tol)
    if not rep.ok:
        raise InfeasiblePointError(
            f"supplied starting point is not strictly feasible "
            f"(primal {rep.primal_residual:.3g}, dual {rep.dual_residual:.3g}, "
            f"min x {rep.min_x:.3g}, min s {rep.min_s:.3g})"
        )
    return inst, u0


def load_instance(source: Union[str, os.PathLike, IO[str]], tol: float = FEAS_TOL):
    """Read a JSON problem file. Returns ``(instance, u0_or_None)``."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"cannot parse problem file: {exc}") from exc
    if not isinstance(d, dict):
        raise DimensionError("problem file must hold a JSON object")
    return instance_from_dict(d, tol)


def save_instance(target: Union[str, os.PathLike, IO[str]], inst: LpInstance,
                  u0: Optional[PrimalDualPoint] = None) -> None:
    text = json.dumps(instance_to_dict(inst, u0))
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w") as fh:
            fh.write(text)
