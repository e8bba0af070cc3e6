"""Random instance generator and batched iteration-count experiments.

Instances follow the classic recipe: draw x_hat, s_hat ~ U(0, 1)^n and
A ~ U(-1, 1)^{m x n}, then set b = A x_hat and c = s_hat so that
u0 = (x_hat, s_hat, 0) is strictly feasible by construction.

Random numbers come from the Philox4x64-10 counter-based generator
(Random123 family, as shipped in numpy). Each (seed, instance index,
stream) triple gets its own key, so instances are independent of how a
grid is traversed. Raw 64-bit words map to floats through their 53 high
bits: ``U = ((word >> 11) + 0.5) * 2**-53``. U is never zero, which keeps
x_hat and s_hat strictly positive; the top word rounds to exactly 1.0.
``U(-1, 1) = 2 U - 1``.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .lp_core import LpInstance, PrimalDualPoint
from .methods import MethodConfig, SolveReport, run

STREAM_X, STREAM_S, STREAM_A = 0, 1, 2
_MASK64 = (1 << 64) - 1

# (m, n) cells of the reference experiment grid
FULL_GRID = [
    (32, 64), (32, 128), (32, 256), (32, 512), (32, 1024),
    (64, 128), (64, 256), (64, 512), (64, 1024),
    (128, 256), (128, 512), (128, 1024),
    (256, 512), (256, 1024),
    (512, 1024),
]
DEFAULT_GRID = [(32, 64), (32, 128), (64, 128), (32, 256), (64, 256), (128, 256)]

CSV_HEADER = ["m", "n", "method", "count", "mean_pred", "rel_std_pct", "mean_corr",
              "ft_count", "forecast", "abs_dev"]


@dataclass(frozen=True)
class GenConfig:
    m: int
    n: int
    seed: int = 0
    count: int = 100

    def __post_init__(self):
        if not 1 <= self.m <= self.n // 2:
            raise ValueError(f"generator needs 1 <= m <= n/2, got m={self.m}, n={self.n}")
        if self.count < 1:
            raise ValueError("count must be positive")


def raw_stream(seed: int, k: int, stream: int, size: int) -> np.ndarray:
    """``size`` raw 64-bit words for (seed, instance k, stream id)."""
    key = np.array([seed & _MASK64, ((k << 8) | stream) & _MASK64], dtype=np.uint64)
    bitgen = np.random.Philox(key=key)
    return bitgen.random_raw(size)


def uniform01(words: np.ndarray) -> np.ndarray:
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def generate(cfg: GenConfig, k: int) -> Tuple[LpInstance, PrimalDualPoint]:
    m, n = cfg.m, cfg.n
    x_hat = uniform01(raw_stream(cfg.seed, k, STREAM_X, n))
    s_hat = uniform01(raw_stream(cfg.seed, k, STREAM_S, n))
    A = (2.0 * uniform01(raw_stream(cfg.seed, k, STREAM_A, m * n)) - 1.0).reshape(m, n)
    inst = LpInstance(A, A @ x_hat, s_hat)
    return inst, PrimalDualPoint(x_hat, s_hat, np.zeros(m))


def forecast(m: int, n: int) -> float:
    """Predicted predictor-step count for PTFM2 on an (m, n) random instance."""
    return (25.0 + math.log2(m) * math.log2(n / 16.0)) / 4.0


@dataclass
class RunSummary:
    k: int
    termination: str
    predictors: int
    correctors: int
    final_gap: float
    wall_time: float
    ft_basis: Optional[List[int]] = None
    ft_check: Optional[dict] = None


@dataclass
class CellStats:
    m: int
    n: int
    method: str
    count: int
    mean_predictors: float
    rel_std: float
    mean_correctors: float
    corr_per_pred: float
    ft_success_count: int
    failures: int
    mean_gap: float
    mean_time: float
    total_time: float
    runs: List[RunSummary] = field(default_factory=list)

    @property
    def forecast(self) -> float:
        return forecast(self.m, self.n)

    @property
    def abs_dev(self) -> float:
        return abs(self.mean_predictors - self.forecast)

    @property
    def failed(self) -> bool:
        return self.failures > 0.05 * self.count

    def csv_row(self) -> dict:
        return {
            "m": self.m, "n": self.n, "method": self.method, "count": self.count,
            "mean_pred": self.mean_predictors, "rel_std_pct": self.rel_std,
            "mean_corr": self.mean_correctors, "ft_count": self.ft_success_count,
            "forecast": self.forecast, "abs_dev": self.abs_dev,
        }


def _solve_one(args) -> RunSummary:
    gen, k, method_config = args
    inst, u0 = generate(gen, k)
    rep: SolveReport = run(inst, u0, method_config)
    basis = check = None
    cand = rep.basis_candidate
    if cand is not None:
        basis = [int(i) + 1 for i in cand.basis]
        check = {
            "primal_residual": cand.primal_residual,
            "dual_residual": cand.dual_residual,
            "gap": cand.gap,
            "objective": float(inst.c @ cand.x_star),
            "min_x": float(cand.x_star.min()),
            "min_s": float(cand.s_star.min()),
            "complementarity": float(np.max(np.abs(cand.x_star * cand.s_star))),
        }
    return RunSummary(k, rep.termination, rep.predictor_count, rep.corrector_count,
                      rep.final_gap, rep.wall_time, basis, check)


def _pairwise_sum(values: np.ndarray) -> float:
    # numpy's reduction is pairwise, which keeps aggregation order-stable
    return float(np.add.reduce(values))


def run_cell(gen: GenConfig, method_config: MethodConfig, jobs: int = 1) -> CellStats:
    tasks = [(gen, k, method_config) for k in range(gen.count)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_solve_one, tasks))
    else:
        runs = [_solve_one(t) for t in tasks]
    runs.sort(key=lambda r: r.k)

    good = [r for r in runs if r.termination in ("eps_reached", "finite_term_success")]
    failures = len(runs) - len(good)
    preds = np.array([r.predictors for r in good], dtype=float)
    corrs = np.array([r.correctors for r in good], dtype=float)
    times = np.array([r.wall_time for r in runs], dtype=float)
    gaps = np.array([r.final_gap for r in good], dtype=float)
    if preds.size:
        mean = _pairwise_sum(preds) / preds.size
        std = float(np.sqrt(_pairwise_sum((preds - mean) ** 2) / preds.size))
        rel = 100.0 * std / mean if mean > 0 else 0.0
        mean_corr = _pairwise_sum(corrs) / corrs.size
        ratio = _pairwise_sum(corrs) / max(_pairwise_sum(preds), 1.0)
        mean_gap = _pairwise_sum(gaps) / gaps.size
    else:
        mean = rel = mean_corr = ratio = mean_gap = math.nan
    return CellStats(
        m=gen.m, n=gen.n, method=method_config.method, count=gen.count,
        mean_predictors=mean, rel_std=rel, mean_correctors=mean_corr,
        corr_per_pred=ratio,
        ft_success_count=sum(r.termination == "finite_term_success" for r in runs),
        failures=failures, mean_gap=mean_gap,
        mean_time=_pairwise_sum(times) / times.size, total_time=_pairwise_sum(times),
        runs=runs,
    )


def emit_report(cells: Sequence[CellStats], out_dir, stem: str = "bench"):
    """Write ``<stem>.csv`` (one row per cell) and ``<stem>.json`` (full runs)."""
    if not cells:
        raise ValueError("emit_report needs at least one cell")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for cell in cells:
            writer.writerow(cell.csv_row())
    bundle = []
    for cell in cells:
        d = asdict(cell)
        d["forecast"] = cell.forecast
        d["abs_dev"] = cell.abs_dev
        bundle.append(d)
    with open(json_path, "w") as fh:
        json.dump({"cells": bundle}, fh, indent=1)
    return csv_path, json_path


def read_csv_report(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
