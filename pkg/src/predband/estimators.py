"""Candidate estimators fitted on the pre-training split.

Width candidates target the conditional law of the squared residual
s = (y - m(x))^2: linear quantile regressions of s on polynomial features, a
Nadaraya-Watson estimate of E[s | x], and constants. Mean candidates are
ridge-penalised polynomial least squares fits.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .lp import LpProblem, solve_lp
from .model import CandidateFunction, Dataset, FeatureMap, constant, polynomial_features

__all__ = [
    "EstimatorSpec",
    "DEFAULT_MENU",
    "polynomial_features",
    "fit_mean_ridge",
    "fit_quantile_candidate",
    "fit_kernel_second_moment",
    "constant_candidate",
    "pinball_fit",
    "pinball_loss",
    "silverman_bandwidth",
    "build_width_candidates",
]


class LpFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class EstimatorSpec:
    """One entry of a candidate menu.

    kind is one of ``quantile`` (tau, degree), ``kernel`` (bandwidth, None for
    the default rule), ``constant`` (value) or ``ridge_mean`` (degree, ridge).
    """

    kind: str
    tau: float | None = None
    degree: int | None = None
    bandwidth: float | None = None
    value: float | None = None
    ridge: float | None = None

    def __post_init__(self):
        k = self.kind
        if k == "quantile":
            if self.tau is None or not 0 < self.tau < 1:
                raise ValueError("quantile estimator needs tau in (0, 1)")
            if self.degree is None or self.degree < 0:
                raise ValueError("quantile estimator needs degree >= 0")
        elif k == "kernel":
            if self.bandwidth is not None and not self.bandwidth > 0:
                raise ValueError("kernel bandwidth must be positive")
        elif k == "constant":
            if self.value is None or self.value < 0:
                raise ValueError("constant estimator needs value >= 0")
        elif k == "ridge_mean":
            if self.degree is None or self.degree < 0:
                raise ValueError("ridge_mean needs degree >= 0")
            if self.ridge is None or self.ridge < 0:
                raise ValueError("ridge_mean needs ridge >= 0")
        else:
            raise ValueError(f"unknown estimator kind {k!r}")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorSpec":
        allowed = {"kind", "tau", "degree", "bandwidth", "value", "ridge"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown estimator keys: {', '.join(sorted(unknown))}")
        return cls(**d)


DEFAULT_MENU = (
    EstimatorSpec("quantile", tau=0.6, degree=4),
    EstimatorSpec("quantile", tau=0.7, degree=4),
    EstimatorSpec("quantile", tau=0.8, degree=4),
    EstimatorSpec("quantile", tau=0.9, degree=4),
    EstimatorSpec("kernel"),
    EstimatorSpec("constant", value=1.0),
)


# ---------------------------------------------------------------------------
# mean
# ---------------------------------------------------------------------------


def fit_mean_ridge(pre: Dataset, degree: int, ridge: float = 0.0) -> CandidateFunction:
    """Polynomial least squares with penalty ``ridge * ||theta||^2`` (normal equations)."""
    fmap = FeatureMap(pre.d, degree)
    if fmap.n_features > pre.n:
        raise ValueError(f"{fmap.n_features} features but only {pre.n} observations")
    Phi = fmap(pre.x)
    G = Phi.T @ Phi + ridge * np.eye(fmap.n_features)
    if ridge == 0 and np.linalg.cond(G) > 1e13:
        raise np.linalg.LinAlgError("singular normal matrix; use a positive ridge penalty")
    theta = np.linalg.solve(G, Phi.T @ pre.y)
    return CandidateFunction("basis", pre.d, role="mean", coef=theta, degree=degree,
                             label=f"ridge(deg={degree})")


# ---------------------------------------------------------------------------
# pinball regression
# ---------------------------------------------------------------------------


def pinball_loss(u, tau) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.sum(u * (tau - (u < 0))))


def pinball_fit(Phi: np.ndarray, s: np.ndarray, tau: float) -> np.ndarray:
    """Coefficients minimising sum rho_tau(s - Phi theta).

    The primal LP splits the residual into positive/negative slacks,
    ``Phi theta + u+ - u- = s``. Its dual

        max s^T d   s.t.  Phi^T d = 0,  tau - 1 <= d <= tau

    has only ``Phi.shape[1]`` equality rows, so that is what gets solved;
    theta is read off the equality multipliers.
    """
    Phi = np.asarray(Phi, dtype=float)
    s = np.asarray(s, dtype=float)
    n, p = Phi.shape
    prob = LpProblem(c=-s, A_eq=Phi.T, b_eq=np.zeros(p),
                     lower=np.full(n, tau - 1.0), upper=np.full(n, tau))
    sol = solve_lp(prob)
    if not sol.optimal:
        raise LpFailure(f"pinball LP ended with status {sol.status}")
    return -sol.duals_eq


def fit_quantile_candidate(pre: Dataset, mean: CandidateFunction | None, tau: float, degree: int,
                           targets: np.ndarray | None = None) -> CandidateFunction:
    """Linear tau-quantile regression of the squared residuals on polynomial features."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    s = targets if targets is not None else _targets(pre, mean)
    fmap = FeatureMap(pre.d, degree)
    theta = pinball_fit(fmap(pre.x), s, tau)
    return CandidateFunction("basis", pre.d, role="width", coef=theta, degree=degree,
                             label=f"quantile(tau={tau:g},deg={degree})")


# ---------------------------------------------------------------------------
# kernel smoother and constants
# ---------------------------------------------------------------------------


def silverman_bandwidth(X) -> float:
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    sd = float(np.mean(X.std(axis=0)))
    return max(sd, 1e-12) * X.shape[0] ** (-0.2)


def fit_kernel_second_moment(pre: Dataset, mean: CandidateFunction | None, bandwidth: float | None = None,
                             targets: np.ndarray | None = None) -> CandidateFunction:
    """Nadaraya-Watson estimate of E[(y - m(x))^2 | x] with a Gaussian kernel."""
    h = silverman_bandwidth(pre.x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    s = targets if targets is not None else _targets(pre, mean)
    return CandidateFunction("kernel_smoother", pre.d, role="width", anchors=pre.x.copy(),
                             values=np.asarray(s, float).copy(), bandwidth=h, label=f"kernel(h={h:.4g})")


def constant_candidate(c: float, d: int = 1) -> CandidateFunction:
    if c < 0:
        raise ValueError("constant width candidate must be nonnegative")
    return constant(c, d, role="width")


def _targets(pre: Dataset, mean: CandidateFunction | None) -> np.ndarray:
    m = mean(pre.x) if mean is not None else np.zeros(pre.n)
    return (pre.y - m) ** 2


def build_width_candidates(menu, pre: Dataset, mean: CandidateFunction | None) -> list[CandidateFunction]:
    """Fit every width entry of ``menu``; ``ridge_mean`` entries are skipped."""
    s = _targets(pre, mean)
    out = []
    for spec in menu:
        if spec.kind == "quantile":
            out.append(fit_quantile_candidate(pre, mean, spec.tau, spec.degree, targets=s))
        elif spec.kind == "kernel":
            out.append(fit_kernel_second_moment(pre, mean, spec.bandwidth, targets=s))
        elif spec.kind == "constant":
            out.append(constant_candidate(spec.value, pre.d))
    return out
