"""Random fixture generators shared by unit and acceptance tests."""

import numpy as np

from predband.lp import LpProblem
from predband.model import CandidateFunction


def random_lp(rng: np.random.Generator, max_vars=5, max_rows=8, bounded=True) -> LpProblem:
    """Integer LP in [-5, 5] made feasible by construction around an integer point."""
    m = int(rng.integers(1, max_vars + 1))
    k = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, (k, m)).astype(float)
    x0 = rng.integers(0, 4, m).astype(float)
    b = A @ x0 - rng.integers(0, 3, k)
    c = rng.integers(-5, 6, m).astype(float)
    upper = np.full(m, 10.0) if bounded else None
    return LpProblem(c=c, A=A, b=b, upper=upper)


def random_two_step_fixture(rng: np.random.Generator, max_n=30, max_k=4):
    """Width matrix F (n x K, one strictly positive column) and targets s >= 0."""
    n = int(rng.integers(2, max_n + 1))
    K = int(rng.integers(1, max_k + 1))
    F = rng.uniform(0.0, 3.0, (n, K))
    F[:, 0] += 0.1
    y = rng.normal(0.0, 1.0, n) * np.sqrt(F @ rng.uniform(0.2, 1.0, K))
    return F, y


def random_ratio_set(rng: np.random.Generator, lo=3, hi=200):
    n = int(rng.integers(lo, hi + 1))
    kind = rng.integers(0, 3)
    if kind == 0:
        r = rng.uniform(0.0, 1.0, n)
    elif kind == 1:
        # heavy ties
        r = rng.integers(0, 5, n) / 4.0
    else:
        r = np.round(rng.uniform(0, 1, n), 2)
    return r


def table_candidate(xs, vals) -> CandidateFunction:
    """Width candidate taking value vals[i] at xs[i] (nearest-anchor smoother)."""
    anchors = np.asarray(xs, dtype=float).reshape(-1, 1)
    return CandidateFunction("kernel_smoother", 1, anchors=anchors, values=np.array(vals, float), bandwidth=1e-4,
                             nonneg_floor=0.0)
