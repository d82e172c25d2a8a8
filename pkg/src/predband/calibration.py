"""Shrinking a 100% band to level 1 - alpha.

The shrink factor is the smallest lambda whose exceedance frequency among the
calibration ratios r_i = (y_i - m(x_i))^2 / (f(x_i) + delta) is at most alpha.
By default only calibration points already inside the 100% band enter the
ratio set, which keeps every ratio (and hence lambda) in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BandModel, Dataset


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationResult:
    lam: float
    selected_count: int
    adj_count: int
    empirical_miscoverage_on_selected: float

    def __post_init__(self):
        if self.selected_count > self.adj_count:
            raise ValueError("selected_count cannot exceed adj_count")


def allowed_exceedances(alpha: float, n: int) -> int:
    """Largest k with k / n <= alpha, using the same float comparison as the definition."""
    k = int(math.floor(alpha * n))
    while k + 1 <= n and (k + 1) / n <= alpha:
        k += 1
    while k > 0 and k / n > alpha:
        k -= 1
    return k


def quantile_lambda(ratios, alpha: float) -> float:
    """inf{lam : mean(ratios > lam) <= alpha}, i.e. the (k+1)-th largest ratio."""
    r = np.asarray(ratios, dtype=float)
    n = r.shape[0]
    if n == 0:
        raise CalibrationError("no in-band calibration points")
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    k = allowed_exceedances(alpha, n)
    if k >= n:
        return 0.0
    return float(np.sort(r)[::-1][k])


def brute_force_lambda(ratios, alpha: float) -> float:
    """Scan lam over {0} and the ratios themselves; the infimum is attained there."""
    r = np.asarray(ratios, dtype=float)
    n = r.shape[0]
    for lam in sorted({0.0, *r.tolist()}):
        if np.sum(r > lam) / n <= alpha:
            return float(lam)
    raise AssertionError("unreachable: lam = max ratio always qualifies")


def calibration_ratios(band: BandModel, adj: Dataset, delta: float | None = None, select: bool = True):
    """Return (ratios, selected_mask) on the adjustment split."""
    delta = band.delta if delta is None else float(delta)
    res = (adj.y - band.mean(adj.x)) ** 2
    denom = band.width_fn(adj.x) + delta
    inside = res <= denom
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(denom > 0, res / np.where(denom > 0, denom, 1.0), np.where(res > 0, np.inf, 0.0))
    mask = inside if select else np.ones(adj.n, dtype=bool)
    return r[mask], mask


def calibrate_lambda(band: BandModel, adj: Dataset, alpha: float, delta: float | None = None,
                     select: bool = True) -> CalibrationResult:
    """Empirical-quantile shrink factor for ``band`` (fitted with lam = 1)."""
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    r, mask = calibration_ratios(band, adj, delta, select)
    if r.shape[0] == 0:
        raise CalibrationError("no in-band calibration points")
    lam = quantile_lambda(r, alpha)
    miss = float(np.mean(r > lam))
    return CalibrationResult(lam, int(mask.sum()), adj.n, miss)


def calibrate(band: BandModel, adj: Dataset, alpha: float, delta: float | None = None,
              select: bool = True) -> tuple[BandModel, CalibrationResult]:
    """Calibrated copy of ``band`` plus the calibration bookkeeping."""
    delta = band.delta if delta is None else float(delta)
    res = calibrate_lambda(band, adj, alpha, delta, select)
    return band.with_delta(delta).with_lambda(res.lam), res
