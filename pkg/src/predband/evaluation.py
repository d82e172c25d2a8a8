"""Coverage and width metrics, experiment orchestration, CSV and SVG output."""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import fit_kernel_sdp, fit_lqr, fit_split_conformal
from .calibration import calibrate
from .config import ExperimentConfig
from .estimators import build_width_candidates, fit_mean_ridge
from .model import Band, Dataset, constant, split_dataset
from .rng import SplitMix64
from .synthetic import generate, oracle_mean_candidate
from .utopia import aggregate_one_step, aggregate_two_step

log = logging.getLogger(__name__)

CSV_HEADER = ("method", "coverage", "avg_width", "n_test", "seed", "ms")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def coverage(band: Band, test: Dataset) -> float:
    """Fraction of test responses inside their interval (endpoints count as inside)."""
    if test.n == 0:
        raise ValueError("empty test set")
    lo, hi = band.intervals(test.x)
    return float(np.mean((test.y >= lo) & (test.y <= hi)))


def average_width(band: Band, test: Dataset) -> float:
    if test.n == 0:
        raise ValueError("empty test set")
    lo, hi = band.intervals(test.x)
    return float(np.mean(hi - lo))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalRow:
    method: str
    coverage: float
    avg_width: float
    n_test: int
    seed: int
    ms: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage {self.coverage!r} outside [0, 1]")
        if not self.avg_width >= 0.0:
            raise ValueError(f"average width {self.avg_width!r} is negative")


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    bands: dict[str, Band] = field(default_factory=dict)
    test: Dataset | None = None

    def row(self, method: str) -> EvalRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)


def format_report_csv(report: EvalReport, timing: bool = False) -> str:
    """CSV text; ``ms`` is written as 0 unless ``timing`` so output is byte-reproducible."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in report.rows:
        ms = repr(round(r.ms, 3)) if timing else "0"
        w.writerow([r.method, repr(r.coverage), repr(r.avg_width), r.n_test, r.seed, ms])
    return buf.getvalue()


def write_report_csv(report: EvalReport, path, timing: bool = False) -> None:
    Path(path).write_text(format_report_csv(report, timing), encoding="utf-8")


def read_report_csv(path) -> list[EvalRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: header must be {','.join(CSV_HEADER)}")
    out = []
    for k, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != len(CSV_HEADER):
            raise ValueError(f"{path}:{k}: expected {len(CSV_HEADER)} fields")
        out.append(EvalRow(r[0], float(r[1]), float(r[2]), int(r[3]), int(r[4]), float(r[5])))
    return out


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

SVG_W, SVG_H, SVG_PAD = 800, 600, 50


def render_svg_band(band: Band, test: Dataset, path=None, beta=None, title: str = "") -> str:
    """Scatter of ``test``, band polygon and centre line, against x (d = 1) or x @ beta.

    Returns the SVG text and writes it to ``path`` when given.
    """
    if test.d > 1 and beta is None:
        raise ValueError("multivariate data needs a projection direction beta")
    t = test.x[:, 0] if test.d == 1 else test.x @ np.asarray(beta, dtype=float)
    order = np.argsort(t, kind="stable")
    X = test.x[order]
    t = t[order]
    lo, hi = band.intervals(X)
    mid = band.mean(X) if hasattr(band, "mean") else 0.5 * (lo + hi)
    y = test.y[order]
    finite = np.concatenate([y, lo[np.isfinite(lo)], hi[np.isfinite(hi)]])
    ymin, ymax = float(finite.min()), float(finite.max())
    if ymax == ymin:
        ymin, ymax = ymin - 1.0, ymax + 1.0
    tmin, tmax = float(t.min()), float(t.max())
    if tmax == tmin:
        tmin, tmax = tmin - 1.0, tmax + 1.0

    def px(v):
        return SVG_PAD + (v - tmin) / (tmax - tmin) * (SVG_W - 2 * SVG_PAD)

    def py(v):
        v = np.clip(v, ymin, ymax)
        return SVG_H - SVG_PAD - (v - ymin) / (ymax - ymin) * (SVG_H - 2 * SVG_PAD)

    def pts(a, b):
        return " ".join(f"{px(u):.2f},{py(v):.2f}" for u, v in zip(a, b))

    poly = pts(np.concatenate([t, t[::-1]]), np.concatenate([hi, lo[::-1]]))
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_W}" height="{SVG_H}" '
        f'viewBox="0 0 {SVG_W} {SVG_H}">',
        f'<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<polygon class="band" points="{poly}" fill="#9ecae1" fill-opacity="0.5" stroke="#3182bd"/>',
        '<g class="points" fill="#333333">',
        *(f'<circle cx="{px(u):.2f}" cy="{py(v):.2f}" r="1.5"/>' for u, v in zip(t, y)),
        "</g>",
        f'<polyline class="mean" points="{pts(t, mid)}" fill="none" stroke="#d62728" stroke-width="1.5"/>',
        f'<line x1="{SVG_PAD}" y1="{SVG_H - SVG_PAD}" x2="{SVG_W - SVG_PAD}" y2="{SVG_H - SVG_PAD}" stroke="black"/>',
        f'<line x1="{SVG_PAD}" y1="{SVG_PAD}" x2="{SVG_PAD}" y2="{SVG_H - SVG_PAD}" stroke="black"/>',
        f'<text x="{SVG_W / 2}" y="{SVG_H - 12}" text-anchor="middle" font-size="14">'
        f'{"x" if test.d == 1 else "x @ beta"}</text>',
    ]
    if title:
        parts.append(f'<text x="{SVG_W / 2}" y="28" text-anchor="middle" font-size="16">{title}</text>')
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# experiment pipeline
# ---------------------------------------------------------------------------


def thread_count(n_tasks: int) -> int:
    raw = os.environ.get("UTOPIA_THREADS", "0").strip() or "0"
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"UTOPIA_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ValueError("UTOPIA_THREADS must be >= 0")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def load_data(cfg: ExperimentConfig) -> Dataset:
    spec = cfg.setup_spec()
    if spec is not None:
        return generate(spec, cfg.plan().total, cfg.seed)
    return Dataset.from_csv(cfg.source)


class _Stages:
    """Shared pipeline stages, each computed once."""

    def __init__(self, cfg: ExperimentConfig, parts):
        self.cfg = cfg
        self.pre, self.opt, self.adj, self.test = parts
        self._mean = None
        self._widths = None

    def need(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise ValueError(f"split part '{name}' is empty")

    def mean(self):
        if self._mean is None:
            cfg = self.cfg
            spec = cfg.setup_spec()
            mode = cfg.mean
            if mode == "auto":
                # the true centre is known (and zero) for the first setups
                mode = "oracle" if spec is not None and spec.number == 1 else "ridge"
            if mode == "oracle":
                self._mean = oracle_mean_candidate(spec)
            else:
                self.need("pre")
                self._mean = fit_mean_ridge(self.pre, cfg.mean_degree, cfg.mean_ridge)
        return self._mean

    def widths(self):
        if self._widths is None:
            self.need("pre")
            self._widths = build_width_candidates(self.cfg.menu, self.pre, self.mean())
            if not self._widths:
                raise ValueError("candidate menu has no width estimators")
        return self._widths

    def train_union(self) -> Dataset:
        parts = [p for p in (self.pre, self.opt, self.adj) if p is not None]
        if not parts:
            raise ValueError("no training data")
        return parts[0].concat(*parts[1:])


def _fit_method(method: str, st: _Stages) -> Band:
    cfg = st.cfg
    if method in ("utopia", "utopia-two-step"):
        st.need("opt", "adj")
        agg = aggregate_two_step(st.widths(), st.mean(), st.opt, cfg.delta)
        return calibrate(agg.band, st.adj, cfg.alpha, cfg.delta, cfg.select)[0]
    if method == "utopia-one-step":
        st.need("opt", "adj")
        mean_cands = [st.mean(), constant(1.0, st.opt.d, role="mean")]
        agg = aggregate_one_step(st.widths(), mean_cands, st.opt, cfg.delta)
        return calibrate(agg.band, st.adj, cfg.alpha, cfg.delta, cfg.select)[0]
    if method == "lqr":
        return fit_lqr(st.train_union(), cfg.alpha)
    if method == "splitcf":
        return fit_split_conformal(st.train_union(), cfg.alpha, cfg.mean_degree, cfg.mean_ridge)
    if method == "sdp":
        st.need("opt", "adj")
        p = cfg.sdp
        opt = st.opt.subset(np.arange(min(p.n_opt, st.opt.n)))
        fit = fit_kernel_sdp(opt, st.mean(), cfg.alpha, st.adj, bandwidth=p.sigma, trace_budget=p.r,
                             delta=p.delta, rank=p.rank, select=cfg.select)
        return fit.band
    raise ValueError(f"unknown method {method!r}")


def run_experiment(cfg: ExperimentConfig, keep_bands: bool = True) -> EvalReport:
    """Generate or load data, split, fit every requested method and score it on the test split."""
    ds = load_data(cfg)
    plan = cfg.plan()
    if plan.total != ds.n:
        raise ValueError(f"split plan sums to {plan.total} but the data has {ds.n} rows")
    # split stream is independent of the generator stream for the same seed
    rng = SplitMix64(cfg.seed).spawn()
    parts = split_dataset(ds, plan, rng, sequential=cfg.sequential)
    st = _Stages(cfg, parts)
    if st.test is None:
        raise ValueError("test split is empty")
    # shared stages are evaluated up front so worker threads only read them
    for stage in (st.mean, st.widths):
        try:
            stage()
        except Exception as exc:  # recorded per method below
            log.debug("shared stage failed: %s", exc)

    def task(method):
        t0 = time.perf_counter()
        try:
            band = _fit_method(method, st)
            row = EvalRow(method, coverage(band, st.test), average_width(band, st.test), st.test.n, cfg.seed,
                          1000.0 * (time.perf_counter() - t0))
            return method, row, band, None
        except Exception as exc:
            return method, None, None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=thread_count(len(cfg.methods))) as pool:
        results = list(pool.map(task, cfg.methods))

    report = EvalReport(test=st.test)
    for method, row, band, err in results:
        if err is not None:
            report.errors[method] = err
            continue
        report.rows.append(row)
        if keep_bands:
            report.bands[method] = band
    return report
