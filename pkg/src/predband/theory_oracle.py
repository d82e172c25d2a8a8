"""Exact population computations on finite-support distributions.

These back two population facts used throughout the package:

* with alpha = 0 the narrowest band with full coverage is [min y | x, max y | x];
* for a mean m, the smallest squared half-width covering everything,
  f_m(x) = max (y - m(x))^2 given x, equals (sqrt(f_0) + |m_0 - m|)^2 when
  the conditional law is symmetric about m_0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import SplitMix64

LEMMA_TOL = 1e-12


@dataclass(frozen=True)
class FiniteDistribution:
    """Support points (x_k, y_k) with probabilities p_k. x is scalar here."""

    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x, y, p = (np.asarray(a, dtype=float).ravel() for a in (self.x, self.y, self.p))
        if not (x.shape == y.shape == p.shape) or x.size == 0:
            raise ValueError("x, y, p must be nonempty and of equal length")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("support points must be finite")
        if np.any(p <= 0):
            raise ValueError("probabilities must be positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_triples(cls, triples) -> "FiniteDistribution":
        arr = np.asarray(triples, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def xs(self) -> np.ndarray:
        return np.unique(self.x)

    def marginal(self) -> dict[float, float]:
        return {float(v): float(self.p[self.x == v].sum()) for v in self.xs()}

    def conditional_mean(self) -> dict[float, float]:
        out = {}
        for v in self.xs():
            sel = self.x == v
            out[float(v)] = float(np.sum(self.p[sel] * self.y[sel]) / np.sum(self.p[sel]))
        return out


def population_optimal_band(dist: FiniteDistribution) -> dict[float, tuple[float, float]]:
    """Per-x (l*, u*) = (min, max) of the conditional support."""
    return {float(v): (float(dist.y[dist.x == v].min()), float(dist.y[dist.x == v].max()))
            for v in dist.xs()}


def population_fm(dist: FiniteDistribution, m: Callable[[float], float]) -> dict[float, float]:
    """Per-x max over the conditional support of (y - m(x))^2."""
    return {float(v): float(np.max((dist.y[dist.x == v] - m(float(v))) ** 2)) for v in dist.xs()}


def population_f0(dist: FiniteDistribution) -> dict[float, float]:
    m0 = dist.conditional_mean()
    return population_fm(dist, lambda v: m0[v])


def closed_form_fm(f0: float, m0: float, m: float) -> float:
    return (np.sqrt(f0) + abs(m0 - m)) ** 2


def symmetric_fixture(rng: SplitMix64, max_x: int = 5, max_pairs: int = 6):
    """Random finite distribution symmetric about its conditional means, plus a mean function.

    Returns (dist, m0, m) where m0 and m are dicts keyed by x value.
    Values are dyadic rationals so the symmetric pairs are exact in floating point.
    """
    n_x = 1 + int(rng.uniform() * max_x)
    xs = np.sort(np.unique(np.round(rng.uniforms(n_x) * 8.0 - 4.0, 0)))
    triples, m0, m = [], {}, {}
    px = rng.uniforms(len(xs)) + 0.1
    px = px / px.sum()
    for xv, pxv in zip(xs, px):
        center = np.round(rng.uniform() * 16.0 - 8.0) / 4.0
        n_pairs = 1 + int(rng.uniform() * max_pairs)
        offsets = np.round(rng.uniforms(n_pairs) * 32.0) / 8.0
        w = rng.uniforms(n_pairs) + 0.1
        w = w / w.sum() * pxv / 2.0
        for off, wk in zip(offsets, w):
            triples.append((xv, center - off, wk))
            triples.append((xv, center + off, wk))
        m0[float(xv)] = float(center)
        m[float(xv)] = float(center + np.round(rng.uniform() * 24.0 - 12.0) / 4.0)
    arr = np.array(triples)
    # renormalise exactly-ish; residual float error stays far below 1e-12
    arr[:, 2] /= arr[:, 2].sum()
    return FiniteDistribution(arr[:, 0], arr[:, 1], arr[:, 2]), m0, m


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    passed: bool
    fixtures: int
    max_error: float

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.fixtures} fixtures, max error {self.max_error:.3g})"


def check_optimal_band(n_fixtures: int = 50, seed: int = 20240101) -> LemmaCheck:
    rng = SplitMix64(seed)
    ok, worst = True, 0.0
    for _ in range(n_fixtures):
        dist, _, _ = symmetric_fixture(rng)
        band = population_optimal_band(dist)
        for xv, (lo, hi) in band.items():
            ys = [y for x, y in zip(dist.x, dist.y) if x == xv]
            err = max(abs(lo - min(ys)), abs(hi - max(ys)))
            worst = max(worst, err)
            # full coverage: every support point lies inside
            ok &= err == 0.0 and all(lo <= y <= hi for y in ys)
    return LemmaCheck("optimal_band", bool(ok), n_fixtures, worst)


def check_qm(n_fixtures: int = 50, seed: int = 20240102) -> LemmaCheck:
    rng = SplitMix64(seed)
    ok, worst = True, 0.0
    for _ in range(n_fixtures):
        dist, m0, m = symmetric_fixture(rng)
        f0 = population_fm(dist, lambda v: m0[v])
        fm = population_fm(dist, lambda v: m[v])
        marg = dist.marginal()
        for xv in fm:
            err = abs(fm[xv] - closed_form_fm(f0[xv], m0[xv], m[xv]))
            worst = max(worst, err)
            ok &= err <= LEMMA_TOL
        lhs = sum(marg[v] * fm[v] for v in fm)
        rhs = sum(marg[v] * (f0[v] + (m[v] - m0[v]) ** 2) for v in fm)
        ok &= lhs >= rhs - LEMMA_TOL
    return LemmaCheck("Q_m", bool(ok), n_fixtures, worst)


def verify_lemmas(n_fixtures: int = 50) -> list[LemmaCheck]:
    return [check_optimal_band(n_fixtures), check_qm(n_fixtures)]
