"""Comparison methods: linear quantile regression, split conformal, kernel SDP."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationResult, calibrate
from .convex import PSD_INFEASIBLE, PsdProgram, PsdReport, default_trace_budget, solve_psd
from .estimators import fit_mean_ridge, pinball_fit
from .model import (BandModel, CandidateFunction, ConstantWidthBand, Dataset, FeatureMap, TwoSidedBand,
                    gaussian_kernel, sq_dists)

SDP_MAX_N = 300


def fit_lqr(train: Dataset, alpha: float) -> TwoSidedBand:
    """Band between linear quantile fits at alpha/2 and 1 - alpha/2."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    fmap = FeatureMap.linear(train.d)
    Phi = fmap(train.x)
    sides = []
    for tau in (alpha / 2.0, 1.0 - alpha / 2.0):
        theta = pinball_fit(Phi, train.y, tau)
        sides.append(CandidateFunction("basis", train.d, role="mean", coef=theta, degree=1,
                                       label=f"lqr(tau={tau:g})"))
    return TwoSidedBand(np.ones(1), np.ones(1), [sides[0]], [sides[1]], d=train.d)


def conformal_rank(alpha: float, n_cal: int) -> int:
    # guard against (1 - alpha) * (n + 1) landing a hair above an integer
    return int(math.ceil((1.0 - alpha) * (n_cal + 1) - 1e-9))


def split_conformal_quantile(scores, alpha: float) -> float:
    """The ceil((1 - alpha)(n + 1))-th smallest score, +inf when that rank exceeds n."""
    scores = np.sort(np.asarray(scores, dtype=float))
    k = conformal_rank(alpha, scores.shape[0])
    if k > scores.shape[0]:
        warnings.warn(f"conformal rank {k} exceeds {scores.shape[0]} calibration scores; band is unbounded",
                      RuntimeWarning, stacklevel=2)
        return math.inf
    return float(scores[max(k, 1) - 1])


def fit_split_conformal(ds: Dataset, alpha: float, degree: int = 4, ridge: float = 1e-6) -> ConstantWidthBand:
    """Fit a ridge mean on the first half of ``ds``, calibrate |y - m(x)| on the second half."""
    if ds.n < 2:
        raise ValueError("split conformal needs at least two observations")
    half = ds.n // 2
    fit_part = ds.subset(np.arange(half))
    cal = ds.subset(np.arange(half, ds.n))
    mean = fit_mean_ridge(fit_part, degree, ridge)
    scores = np.abs(cal.y - mean(cal.x))
    return ConstantWidthBand(mean, split_conformal_quantile(scores, alpha), d=ds.d)


def median_bandwidth(X) -> float:
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    d = np.sqrt(sq_dists(X, X))
    iu = np.triu_indices(X.shape[0], k=1)
    med = float(np.median(d[iu])) if iu[0].size else 1.0
    return med if med > 0 else 1.0


def default_sdp_delta(s) -> float:
    """mean(s) / sqrt(log n): decays to 0 with n and carries the units of s."""
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    if n < 2:
        return 0.0
    return float(s.mean() / np.sqrt(np.log(n)))


@dataclass(frozen=True, eq=False)
class SdpFit:
    band: BandModel
    calibration: CalibrationResult | None
    report: PsdReport
    bandwidth: float
    trace_budget: float
    delta: float


def fit_kernel_sdp(opt: Dataset, mean: CandidateFunction | None, alpha: float, adj: Dataset | None = None,
                   bandwidth: float | None = None, trace_budget: float | None = None,
                   delta: float | None = None, rank: int | None = None, select: bool = True) -> SdpFit:
    """Kernel quadratic-form band f(x) = <k_x, B k_x> from the PSD program on ``opt``.

    When ``adj`` is given the band is shrunk to level 1 - alpha there with
    extension ``delta``; otherwise it is returned at 100% (lam = 1). The
    kernel class is not VC, so by default ``delta`` is positive:
    :func:`default_sdp_delta`.
    """
    if opt.n > SDP_MAX_N:
        raise ValueError(f"kernel SDP is capped at {SDP_MAX_N} optimisation points, got {opt.n}")
    sigma = median_bandwidth(opt.x) if bandwidth is None else float(bandwidth)
    m = mean(opt.x) if mean is not None else np.zeros(opt.n)
    s = (opt.y - m) ** 2
    K = gaussian_kernel(opt.x, opt.x, sigma)
    r = default_trace_budget(K, s) if trace_budget is None else float(trace_budget)
    if delta is None:
        delta = default_sdp_delta(s)
    if r <= 0:
        # all-zero targets: any positive budget admits B = 0
        r = 1.0
    V, rep = solve_psd(PsdProgram(K, s, r), rank=rank)
    if rep.status == PSD_INFEASIBLE:
        raise RuntimeError(f"kernel SDP infeasible: trace budget {r:g} below the certified lower bound")
    width = CandidateFunction("kernel_quadratic", opt.d, role="width", anchors=opt.x.copy(), factor=V,
                              bandwidth=sigma, nonneg_floor=0.0, label=f"kernel-sdp(sigma={sigma:.4g})")
    means = [mean] if mean is not None else []
    band = BandModel(np.ones(len(means)), np.ones(1), means, [width], delta=delta, lam=1.0, d=opt.d)
    cal = None
    if adj is not None:
        band, cal = calibrate(band, adj, alpha, delta, select)
    return SdpFit(band, cal, rep, sigma, r, delta)
