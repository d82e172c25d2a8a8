"""Seed-reproducible simulation setups and their true-function oracles.

Setups 1-3 are univariate with x ~ Unif(-1, 1); the multivariate variants
draw x uniformly on the unit sphere in R^3 and apply the same formulas to the
projection t = x @ beta.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .model import CandidateFunction, Dataset, FeatureMap
from .rng import SplitMix64

SETUP_IDS = ("setup1", "setup2", "setup3", "mv1", "mv2", "mv3")
MV_BETA = np.array([1.0, 1.0, -1.0]) / np.sqrt(3.0)
MAX_REJECTION_ATTEMPTS = 10**6

# 1-d polynomial coefficients (constant first) of the conditional centres
_MEAN_POLY = {1: (0.0,), 2: (1.0, 0.0, 0.0, 5.0), 3: (0.0, 0.0, 1.0, 0.0, 5.0)}


@dataclass(frozen=True)
class SetupSpec:
    id: str
    laplace_scale: str = "scale"  # or "std": sigma(x) is the standard deviation
    truncation: str = "literal"  # or "mean": truncate to m(x) +/- 2 sigma(x)

    def __post_init__(self):
        if self.id not in SETUP_IDS:
            raise ValueError(f"unknown setup {self.id!r}; choose from {', '.join(SETUP_IDS)}")
        if self.laplace_scale not in ("scale", "std"):
            raise ValueError("laplace_scale must be 'scale' or 'std'")
        if self.truncation not in ("literal", "mean"):
            raise ValueError("truncation must be 'literal' or 'mean'")

    @property
    def multivariate(self) -> bool:
        return self.id.startswith("mv")

    @property
    def number(self) -> int:
        return int(self.id[-1])

    @property
    def d(self) -> int:
        return 3 if self.multivariate else 1

    @property
    def beta(self) -> np.ndarray | None:
        return MV_BETA.copy() if self.multivariate else None

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.d)
        return X @ MV_BETA if self.multivariate else X[:, 0]


def parse_setup(name) -> SetupSpec:
    """Accept ``setup2``, ``2``, ``mv1`` and similar spellings."""
    s = str(name).strip().lower()
    if s in ("1", "2", "3"):
        s = "setup" + s
    return SetupSpec(s)


def v0(t):
    return 1.0 + 25.0 * np.asarray(t, dtype=float) ** 4


def _center(number, t):
    return np.polynomial.polynomial.polyval(t, _MEAN_POLY[number])


def _sample_x(spec: SetupSpec, n: int, rng: SplitMix64) -> np.ndarray:
    if spec.multivariate:
        g = rng.normals(3 * n).reshape(n, 3)
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    return (2.0 * rng.uniforms(n) - 1.0)[:, None]


def _laplace(u, loc, scale):
    v = u - 0.5
    return loc - scale * np.sign(v) * np.log1p(-2.0 * np.abs(v))


def generate(spec: SetupSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` observations of ``spec`` from the splitmix64 stream seeded by ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = SplitMix64(seed)
    X = _sample_x(spec, n, rng)
    t = spec.project(X)
    sd = np.sqrt(v0(t))
    if spec.number in (1, 2):
        xi = 2.0 * rng.uniforms(n) - 1.0
        y = _center(spec.number, t) + sd * xi
        return Dataset(X, y)

    loc = _center(3, t)
    scale = sd / np.sqrt(2.0) if spec.laplace_scale == "std" else sd
    lo, hi = (-2.0 * sd, 2.0 * sd) if spec.truncation == "literal" else (loc - 2.0 * sd, loc + 2.0 * sd)
    y = np.empty(n)
    pending = np.arange(n)
    attempts = 0
    while pending.size:
        attempts += 1
        if attempts > MAX_REJECTION_ATTEMPTS:
            raise RuntimeError("rejection sampling exceeded the attempt limit")
        z = _laplace(rng.open_uniforms(pending.size), loc[pending], scale[pending])
        ok = (z >= lo[pending]) & (z <= hi[pending])
        y[pending[ok]] = z[ok]
        pending = pending[~ok]
    return Dataset(X, y)


def oracle_functions(spec: SetupSpec, X) -> tuple[np.ndarray, np.ndarray]:
    """True (m0(x), f0(x)) where f0 is the squared half-width of the 100% band."""
    t = spec.project(X)
    m = _center(spec.number, t)
    f = v0(t) if spec.number in (1, 2) else 4.0 * v0(t)
    return m, f


def _projected_coefficients(coeffs_1d, beta) -> tuple[np.ndarray, int]:
    """Expand p(beta @ x) into the graded-lex monomial basis of x."""
    degree = len(coeffs_1d) - 1
    fmap = FeatureMap(len(beta), degree)
    out = np.zeros(fmap.n_features)
    for idx, e in enumerate(fmap.exponents()):
        k = sum(e)
        if coeffs_1d[k] == 0:
            continue
        multinom = factorial(k)
        for ej in e:
            multinom //= factorial(ej)
        out[idx] = coeffs_1d[k] * multinom * np.prod([b**ej for b, ej in zip(beta, e)])
    return out, degree


def oracle_mean_candidate(spec: SetupSpec) -> CandidateFunction:
    """The true conditional centre as a basis-expansion mean candidate."""
    coeffs = _MEAN_POLY[spec.number]
    beta = MV_BETA if spec.multivariate else np.ones(1)
    coef, degree = _projected_coefficients(coeffs, beta)
    return CandidateFunction("basis", spec.d, role="mean", coef=coef, degree=degree, label="oracle-mean")
