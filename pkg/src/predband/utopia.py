"""Width-minimising aggregation of candidate bands.

Every routine here returns a band with 100% empirical coverage on the data it
was fitted to; shrinking to a target level is done by ``calibration``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .convex import QcProgram, solve_qc
from .lp import LpProblem, solve_lp
from .model import BandModel, CandidateFunction, Dataset, TwoSidedBand


class InfeasibleAggregation(RuntimeError):
    """No combination of the candidates covers every optimisation point."""

    status = "infeasible"


@dataclass(frozen=True, eq=False)
class Aggregate:
    band: BandModel
    objective: float  # sum over the fitting points of the fitted squared half-width
    report: dict


def candidate_matrix(cands: Sequence[CandidateFunction], X) -> np.ndarray:
    if not cands:
        return np.zeros((len(X), 0))
    return np.column_stack([f(X) for f in cands])


def two_step_weights(F: np.ndarray, s: np.ndarray):
    """Solve min 1^T F a  s.t.  F a >= s, a >= 0.

    Solved through the dual (max s^T z s.t. F^T z <= F^T 1, z >= 0), whose
    normal matrix is K x K; the weights are the dual's row multipliers.
    """
    F = np.asarray(F, dtype=float)
    s = np.asarray(s, dtype=float)
    n, K = F.shape
    prob = LpProblem(c=-s, A=-F.T, b=-F.sum(axis=0))
    sol = solve_lp(prob)
    if sol.status == "unbounded":
        raise InfeasibleAggregation("no nonnegative combination of the width candidates covers all points")
    if not sol.optimal:
        raise RuntimeError(f"aggregation LP ended with status {sol.status}")
    a = np.maximum(sol.duals, 0.0)
    fit = F @ a
    # interior-point multipliers are feasible only to solver tolerance; a
    # uniform rescale by (1 + O(tol)) restores exact coverage
    pos = fit > 0
    if np.any(s > 0) and np.any(pos):
        bad = (s > 0) & ~pos
        if np.any(bad):
            raise InfeasibleAggregation("aggregated width vanishes at a point with positive residual")
        a = a * max(1.0, float(np.max(s[pos] / fit[pos])))
    return a, {"lp_iterations": sol.iterations, "lp_status": sol.status,
               "dual_objective": -sol.objective}


def aggregate_two_step(width_cands: Sequence[CandidateFunction], mean: CandidateFunction | None,
                       opt: Dataset, delta: float = 0.0) -> Aggregate:
    """Fix the mean, then find the cheapest nonnegative width combination covering ``opt``."""
    if not width_cands:
        raise ValueError("need at least one width candidate")
    m = mean(opt.x) if mean is not None else np.zeros(opt.n)
    s = (opt.y - m) ** 2
    F = candidate_matrix(width_cands, opt.x)
    a, rep = two_step_weights(F, s)
    means = [mean] if mean is not None else []
    band = BandModel(np.ones(len(means)), a, means, width_cands, delta=delta, lam=1.0, d=opt.d)
    return Aggregate(band, float(F.sum(axis=0) @ a), rep)


def aggregate_one_step(width_cands: Sequence[CandidateFunction], mean_cands: Sequence[CandidateFunction],
                       opt: Dataset, delta: float = 0.0) -> Aggregate:
    """Jointly choose width weights a >= 0 and mean weights beta (convex QC program)."""
    F = candidate_matrix(width_cands, opt.x)
    M = candidate_matrix(mean_cands, opt.x)
    a, beta, rep = solve_qc(QcProgram(F, M, opt.y))
    band = BandModel(beta, a, list(mean_cands), list(width_cands), delta=delta, lam=1.0, d=opt.d)
    return Aggregate(band, float(F.sum(axis=0) @ a), rep)


def scale_single(f: CandidateFunction, mean: CandidateFunction | None, opt: Dataset) -> float:
    """Smallest c with c * f(x_i) >= (y_i - m(x_i))^2 on every point of ``opt``."""
    m = mean(opt.x) if mean is not None else np.zeros(opt.n)
    return scale_single_values(f(opt.x), (opt.y - m) ** 2)


def scale_single_values(fvals, s) -> float:
    fvals = np.asarray(fvals, dtype=float)
    s = np.asarray(s, dtype=float)
    need = s > 0
    if not np.any(need):
        return 0.0
    if np.any(fvals[need] <= 0):
        raise InfeasibleAggregation("candidate vanishes at a point with positive residual")
    return float(np.max(s[need] / fvals[need]))


def aggregate_asymmetric(lower_cands: Sequence[CandidateFunction], upper_cands: Sequence[CandidateFunction],
                         opt: Dataset) -> TwoSidedBand:
    """min sum_i (f_hi(x_i) - f_lo(x_i))  s.t.  f_lo(x_i) <= y_i <= f_hi(x_i) over two linear spans."""
    Flo = candidate_matrix(lower_cands, opt.x)
    Fhi = candidate_matrix(upper_cands, opt.x)
    k1, k2 = Flo.shape[1], Fhi.shape[1]
    n = opt.n
    c = np.concatenate([-Flo.sum(axis=0), Fhi.sum(axis=0)])
    A = np.block([[-Flo, np.zeros((n, k2))], [np.zeros((n, k1)), Fhi]])
    b = np.concatenate([-opt.y, opt.y])
    sol = solve_lp(LpProblem(c=c, A=A, b=b, lower=np.full(k1 + k2, -np.inf)))
    if sol.status == "infeasible":
        raise InfeasibleAggregation("candidate spans cannot bracket the data")
    if not sol.optimal:
        raise RuntimeError(f"asymmetric aggregation LP ended with status {sol.status}")
    return TwoSidedBand(sol.x[:k1], sol.x[k1:], list(lower_cands), list(upper_cands), d=opt.d)
