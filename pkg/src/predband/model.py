"""Shared domain types: datasets, splits, candidate functions and bands."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from math import comb
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .rng import SplitMix64

DEFAULT_FLOOR = 1e-8
DEFAULT_TRUNC = 1e6


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` observations of covariates ``x`` (n x d) and response ``y``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2:
            raise ValueError(f"x must be 2-d, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("dataset needs n >= 1 and d >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.x[idx], self.y[idx])

    def concat(self, *others: "Dataset") -> "Dataset":
        parts = (self,) + others
        return Dataset(np.vstack([p.x for p in parts]), np.concatenate([p.y for p in parts]))

    def to_csv(self, path_or_stream) -> None:
        """Write ``x1,...,xd,y`` rows with round-trip float formatting."""
        if hasattr(path_or_stream, "write"):
            self._write_rows(path_or_stream)
            return
        with open(path_or_stream, "w", newline="", encoding="utf-8") as fh:
            self._write_rows(fh)

    def _write_rows(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(self.d)] + ["y"])
        for xi, yi in zip(self.x, self.y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        d = len(header) - 1
        expected = [f"x{j + 1}" for j in range(d)] + ["y"]
        if d < 1 or header != expected:
            raise ValueError(f"{path}: header must be {','.join(expected) or 'x1,...,xd,y'}, got {','.join(header)}")
        body = [r for r in rows[1:] if r]
        for k, r in enumerate(body, start=2):
            if len(r) != d + 1:
                raise ValueError(f"{path}:{k}: expected {d + 1} fields, got {len(r)}")
        if not body:
            raise ValueError(f"{path}: no data rows")
        arr = np.array([[float(v) for v in r] for r in body])
        return cls(arr[:, :d], arr[:, d])


@dataclass(frozen=True)
class SplitPlan:
    n_pre: int = 1000
    n_opt: int = 100
    n_adj: int = 100
    n_test: int = 1000

    def __post_init__(self):
        for name in ("n_pre", "n_opt", "n_adj", "n_test"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.n_pre + self.n_opt + self.n_adj + self.n_test

    def sizes(self) -> tuple[int, int, int, int]:
        return (self.n_pre, self.n_opt, self.n_adj, self.n_test)


def split_dataset(ds: Dataset, plan: SplitPlan, rng: SplitMix64 | None = None,
                  sequential: bool = False) -> tuple[Dataset | None, ...]:
    """Partition ``ds`` into (pre, opt, adj, test) by a random permutation.

    With ``sequential=True`` the rows are taken in their stored order
    (chronological splits for time-indexed data) and ``rng`` is unused.
    Empty parts are returned as ``None``.
    """
    if plan.total != ds.n:
        raise ValueError(f"split plan sums to {plan.total} but dataset has {ds.n} rows")
    if sequential:
        order = np.arange(ds.n)
    else:
        if rng is None:
            raise ValueError("a random split needs an rng")
        order = rng.permutation(ds.n)
    bounds = np.cumsum((0,) + plan.sizes())
    return tuple(ds.subset(order[lo:hi]) if hi > lo else None
                 for lo, hi in zip(bounds[:-1], bounds[1:]))


# ---------------------------------------------------------------------------
# Feature maps and kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureMap:
    """Monomials of total degree <= ``degree`` in ``d`` variables, graded lex order."""

    d: int
    degree: int

    def __post_init__(self):
        if self.degree < 0 or self.d < 1:
            raise ValueError("FeatureMap needs d >= 1 and degree >= 0")

    @classmethod
    def linear(cls, d: int) -> "FeatureMap":
        return cls(d, 1)

    @property
    def n_features(self) -> int:
        return comb(self.d + self.degree, self.degree)

    def exponents(self) -> list[tuple[int, ...]]:
        out = []
        for deg in range(self.degree + 1):
            for combo in itertools.combinations_with_replacement(range(self.d), deg):
                e = [0] * self.d
                for j in combo:
                    e[j] += 1
                out.append(tuple(e))
        return out

    def __call__(self, X) -> np.ndarray:
        X = as_points(X, self.d)
        cols = [np.ones(X.shape[0])]
        prev = [(np.ones(X.shape[0]), -1)]
        # degree-k monomials extend degree-(k-1) ones by a non-decreasing variable index
        for _ in range(self.degree):
            nxt = []
            for col, last in prev:
                for j in range(max(last, 0), self.d):
                    nxt.append((col * X[:, j], j))
            cols.extend(c for c, _ in nxt)
            prev = nxt
        return np.column_stack(cols)


def polynomial_features(x, degree: int) -> np.ndarray:
    """Monomial features of a single point (or rows of a matrix), constant first."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    X = np.atleast_2d(arr.reshape(1, -1) if single else arr)
    Phi = FeatureMap(X.shape[1], degree)(X)
    return Phi[0] if single else Phi


def as_points(X, d: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(1, -1) if d is not None and d > 1 and X.shape[0] == d else X.reshape(-1, 1)
    if d is not None and X.shape[1] != d:
        raise DimensionError(f"expected points of dimension {d}, got {X.shape[1]}")
    return X


def sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d2, 0.0)


def gaussian_kernel(A, B, bandwidth: float) -> np.ndarray:
    return np.exp(-sq_dists(np.asarray(A, float), np.asarray(B, float)) / (2.0 * bandwidth**2))


# ---------------------------------------------------------------------------
# Candidate functions
# ---------------------------------------------------------------------------

CANDIDATE_KINDS = ("basis", "kernel_smoother", "kernel_quadratic", "constant")


@dataclass(frozen=True, eq=False)
class CandidateFunction:
    """An evaluable member of a width class (role "width") or mean class (role "mean").

    kinds
      basis             sum_k coef[k] * phi_k(x) over a polynomial FeatureMap
      kernel_smoother   Nadaraya-Watson average of ``values`` at ``anchors``
      kernel_quadratic  ||factor^T k_x||^2, i.e. <k_x, B k_x> with B = factor factor^T
      constant          ``value`` everywhere

    Width outputs are clipped to [nonneg_floor, trunc_level], mean outputs to
    [-trunc_level, trunc_level]. ``scale`` multiplies the raw output before
    clipping.
    """

    kind: str
    d: int
    role: str = "width"
    value: float = 0.0
    coef: np.ndarray | None = None
    degree: int = 0
    anchors: np.ndarray | None = None
    values: np.ndarray | None = None
    factor: np.ndarray | None = None
    bandwidth: float = 1.0
    kernel: str = "gaussian"
    scale: float = 1.0
    nonneg_floor: float = DEFAULT_FLOOR
    trunc_level: float = DEFAULT_TRUNC
    label: str = ""

    def __post_init__(self):
        if self.kind not in CANDIDATE_KINDS:
            raise ValueError(f"unknown candidate kind {self.kind!r}")
        if self.role not in ("width", "mean"):
            raise ValueError(f"unknown candidate role {self.role!r}")
        if self.nonneg_floor < 0 or self.trunc_level <= 0 or self.nonneg_floor > self.trunc_level:
            raise ValueError("need 0 <= nonneg_floor <= trunc_level and trunc_level > 0")
        if self.kernel != "gaussian":
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if self.kind == "basis":
            coef = np.asarray(self.coef, dtype=float).ravel()
            if coef.shape[0] != FeatureMap(self.d, self.degree).n_features:
                raise DimensionError("coefficient count does not match the feature map")
            object.__setattr__(self, "coef", coef)
        if self.kind in ("kernel_smoother", "kernel_quadratic"):
            if not self.bandwidth > 0:
                raise ValueError("bandwidth must be positive")
            object.__setattr__(self, "anchors", as_points(self.anchors, self.d))

    def raw(self, X) -> np.ndarray:
        X = as_points(X, self.d)
        if self.kind == "constant":
            out = np.full(X.shape[0], float(self.value))
        elif self.kind == "basis":
            out = FeatureMap(self.d, self.degree)(X) @ self.coef
        elif self.kind == "kernel_smoother":
            # log-domain weights so far-away queries fall back to the nearest anchors
            logw = -sq_dists(X, self.anchors) / (2.0 * self.bandwidth**2)
            logw -= logw.max(axis=1, keepdims=True)
            w = np.exp(logw)
            out = (w @ self.values) / np.maximum(w.sum(axis=1), 1e-300)
        else:
            Kx = gaussian_kernel(X, self.anchors, self.bandwidth)
            out = ((Kx @ self.factor) ** 2).sum(axis=1)
        return self.scale * out

    def __call__(self, X) -> np.ndarray:
        out = self.raw(X)
        if self.role == "width":
            return np.clip(out, self.nonneg_floor, self.trunc_level)
        return np.clip(out, -self.trunc_level, self.trunc_level)

    def scaled(self, c: float) -> "CandidateFunction":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return replace(self, scale=self.scale * c)


def evaluate_candidate(f: CandidateFunction, x) -> float:
    """Evaluate ``f`` at a single point ``x`` of length d."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != f.d:
        raise DimensionError(f"candidate expects dimension {f.d}, got point of length {x.shape[0]}")
    return float(f(x.reshape(1, -1))[0])


def constant(c: float, d: int = 1, role: str = "width") -> CandidateFunction:
    return CandidateFunction("constant", d, role=role, value=float(c), label=f"const({c:g})")


# ---------------------------------------------------------------------------
# Bands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictionInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, y) -> bool:
        return self.lo <= y <= self.hi


class Band(Protocol):
    d: int

    def intervals(self, X) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True, eq=False)
class BandModel:
    """Symmetric band m(x) +/- sqrt(lam * (f(x) + delta)).

    m(x) = sum_l mean_weights[l] * mean_candidates[l](x) (identically 0 when L = 0)
    f(x) = sum_j width_weights[j] * width_candidates[j](x)
    """

    mean_weights: np.ndarray
    width_weights: np.ndarray
    mean_candidates: Sequence[CandidateFunction]
    width_candidates: Sequence[CandidateFunction]
    delta: float = 0.0
    lam: float = 1.0
    d: int = field(default=0)

    def __post_init__(self):
        mw = np.asarray(self.mean_weights, dtype=float).ravel()
        ww = np.asarray(self.width_weights, dtype=float).ravel()
        if mw.shape[0] != len(self.mean_candidates) or ww.shape[0] != len(self.width_candidates):
            raise ValueError("weight vectors must match candidate counts")
        if np.any(ww < 0):
            raise ValueError("width weights must be nonnegative")
        if self.delta < 0 or self.lam < 0:
            raise ValueError("delta and lambda must be nonnegative")
        cands = list(self.mean_candidates) + list(self.width_candidates)
        dims = {c.d for c in cands}
        if len(dims) > 1:
            raise DimensionError("candidates disagree on input dimension")
        d = dims.pop() if dims else (self.d or 1)
        object.__setattr__(self, "mean_weights", mw)
        object.__setattr__(self, "width_weights", ww)
        object.__setattr__(self, "mean_candidates", tuple(self.mean_candidates))
        object.__setattr__(self, "width_candidates", tuple(self.width_candidates))
        object.__setattr__(self, "d", d)

    def mean(self, X) -> np.ndarray:
        X = as_points(X, self.d)
        out = np.zeros(X.shape[0])
        for w, m in zip(self.mean_weights, self.mean_candidates):
            out += w * m(X)
        return out

    def width_fn(self, X) -> np.ndarray:
        """The fitted squared half-width f(x) (before delta and lambda)."""
        X = as_points(X, self.d)
        out = np.zeros(X.shape[0])
        for w, f in zip(self.width_weights, self.width_candidates):
            out += w * f(X)
        return out

    def half_width(self, X) -> np.ndarray:
        return np.sqrt(self.lam * (self.width_fn(X) + self.delta))

    def intervals(self, X):
        m = self.mean(X)
        h = self.half_width(X)
        return m - h, m + h

    def with_lambda(self, lam: float) -> "BandModel":
        return replace(self, lam=float(lam))

    def with_delta(self, delta: float) -> "BandModel":
        return replace(self, delta=float(delta))


def predict_interval(b: BandModel, x) -> PredictionInterval:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != b.d:
        raise DimensionError(f"band expects dimension {b.d}, got point of length {x.shape[0]}")
    lo, hi = b.intervals(x.reshape(1, -1))
    return PredictionInterval(float(lo[0]), float(hi[0]))


def squared_residuals(y, m_values) -> np.ndarray:
    return (np.asarray(y, float) - np.asarray(m_values, float)) ** 2


def load_dataset(path: str | Path) -> Dataset:
    return Dataset.from_csv(path)


@dataclass(frozen=True, eq=False)
class TwoSidedBand:
    """Band [lo(x), hi(x)] from two weighted candidate sums.

    Endpoints that cross at a query point are swapped there, so the reported
    interval always has lo <= hi.
    """

    lower_weights: np.ndarray
    upper_weights: np.ndarray
    lower_candidates: Sequence[CandidateFunction]
    upper_candidates: Sequence[CandidateFunction]
    d: int = 1

    def _side(self, weights, cands, X):
        X = as_points(X, self.d)
        out = np.zeros(X.shape[0])
        for w, f in zip(weights, cands):
            out += w * f(X)
        return out

    def raw_lower(self, X):
        return self._side(self.lower_weights, self.lower_candidates, X)

    def raw_upper(self, X):
        return self._side(self.upper_weights, self.upper_candidates, X)

    def intervals(self, X):
        lo, hi = self.raw_lower(X), self.raw_upper(X)
        return np.minimum(lo, hi), np.maximum(lo, hi)

    def mean(self, X):
        lo, hi = self.intervals(X)
        return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class ConstantWidthBand:
    """m(x) +/- q; q may be +inf (everything covered)."""

    center: CandidateFunction
    q: float
    d: int = 1

    def intervals(self, X):
        m = self.center(as_points(X, self.d))
        return m - self.q, m + self.q

    def mean(self, X):
        return self.center(as_points(X, self.d))
