"""Acceptance gate: one test and one PASS/FAIL line per criterion.

Seeds 1..5 are fixed in advance. Thresholds are the stated ones and are not tuned.
"""

import time
from functools import lru_cache

import numpy as np
import pytest
from scipy.integrate import quad

from _fixtures import random_lp, random_ratio_set, random_two_step_fixture, table_candidate
from predband.calibration import brute_force_lambda, quantile_lambda
from predband.config import ExperimentConfig, SdpParams
from predband.estimators import DEFAULT_MENU, build_width_candidates, fit_mean_ridge
from predband.evaluation import format_report_csv, run_experiment
from predband.lp import OPTIMAL, enumerate_vertices_oracle, solve_lp
from predband.model import CandidateFunction, Dataset, constant
from predband.rng import SplitMix64
from predband.synthetic import generate, parse_setup
from predband.theory_oracle import verify_lemmas
from predband.utopia import aggregate_asymmetric, aggregate_one_step, aggregate_two_step, scale_single

pytestmark = pytest.mark.slow

SEEDS = (1, 2, 3, 4, 5)
BASE_METHODS = ("utopia-two-step", "splitcf", "lqr")

# 95% band width of setup 1 under the true mean: mean of 2 * 0.95 * sqrt(1 + 25 x^4), x ~ Unif(-1, 1)
ORACLE_WIDTH_SETUP1 = 4.027321226158088


def report(capsys, number, passed, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if passed else 'FAIL'} | {detail}")


@lru_cache(maxsize=None)
def timed_run(source, seed, methods=BASE_METHODS, sdp=False):
    cfg = ExperimentConfig(source=source, seed=seed, methods=methods)
    if sdp:
        cfg = ExperimentConfig(source=source, seed=seed, methods=methods, sdp=SdpParams(n_opt=100))
    t0 = time.perf_counter()
    rep = run_experiment(cfg, keep_bands=False)
    return rep, time.perf_counter() - t0


def rows(source, method, **kw):
    out = []
    for s in SEEDS:
        rep, secs = timed_run(source, s, **kw)
        assert not rep.errors, rep.errors
        out.append((rep.row(method), secs))
    return out


def fmt(values):
    return "/".join(f"{v:.3f}" for v in values)


def test_quadrature_oracle_frozen():
    val, _ = quad(lambda x: 0.5 * 2 * 0.95 * np.sqrt(1 + 25 * x**4), -1, 1)
    assert val == pytest.approx(ORACLE_WIDTH_SETUP1, abs=1e-12)


def test_criterion_1_setup1(capsys):
    u = rows("setup1", "utopia-two-step")
    sc = [r for r, _ in rows("setup1", "splitcf")]
    cov = [r.coverage for r, _ in u]
    wid = [r.avg_width for r, _ in u]
    secs = [t for _, t in u]
    ok_cov = all(0.92 <= c <= 0.98 for c in cov)
    ok_ratio = all(w <= 0.85 * s.avg_width for w, s in zip(wid, sc))
    ok_range = all(3.8 <= w <= 6.5 for w in wid)
    ok_time = all(t <= 60 for t in secs)
    passed = ok_cov and ok_ratio and ok_range and ok_time
    report(capsys, 1, passed, f"coverage {fmt(cov)}; width {fmt(wid)} vs splitcf {fmt(s.avg_width for s in sc)}; "
                              f"oracle {ORACLE_WIDTH_SETUP1:.3f}; max {max(secs):.1f}s")
    assert passed


def test_criterion_2_setup2(capsys):
    u = [r for r, _ in rows("setup2", "utopia-two-step")]
    sc = [r for r, _ in rows("setup2", "splitcf")]
    cov = [r.coverage for r in u]
    ok_cov = all(0.92 <= c <= 0.98 for c in cov)
    ok_ratio = all(a.avg_width <= 0.7 * b.avg_width for a, b in zip(u, sc))
    passed = ok_cov and ok_ratio
    report(capsys, 2, passed, f"coverage {fmt(cov)}; width {fmt(r.avg_width for r in u)} "
                              f"vs splitcf {fmt(r.avg_width for r in sc)}")
    assert passed


def test_criterion_3_setup3(capsys):
    u = [r for r, _ in rows("setup3", "utopia-two-step")]
    sc = [r for r, _ in rows("setup3", "splitcf")]
    lq = [r for r, _ in rows("setup3", "lqr")]
    cov = [r.coverage for r in u]
    ok_cov = all(0.91 <= c <= 0.99 for c in cov)
    ordered = sum(a.avg_width <= b.avg_width and a.avg_width <= c.avg_width for a, b, c in zip(u, sc, lq))
    passed = ok_cov and ordered >= 4
    report(capsys, 3, passed, f"coverage {fmt(cov)}; ordering holds on {ordered}/5 seeds; width "
                              f"{fmt(r.avg_width for r in u)} vs lqr {fmt(r.avg_width for r in lq)} "
                              f"vs splitcf {fmt(r.avg_width for r in sc)}")
    assert passed


def test_criterion_4_mv1(capsys):
    u = [r for r, _ in rows("mv1", "utopia-two-step")]
    sc = [r for r, _ in rows("mv1", "splitcf")]
    lq = [r for r, _ in rows("mv1", "lqr")]
    cov = [r.coverage for r in u]
    ok_cov = all(0.92 <= c <= 0.98 for c in cov)
    ok_order = all(a.avg_width < b.avg_width and a.avg_width < c.avg_width for a, b, c in zip(u, sc, lq))
    passed = ok_cov and ok_order
    report(capsys, 4, passed, f"coverage {fmt(cov)}; width {fmt(r.avg_width for r in u)} vs splitcf "
                              f"{fmt(r.avg_width for r in sc)} vs lqr {fmt(r.avg_width for r in lq)}")
    assert passed


def test_criterion_5_sdp(capsys):
    methods = ("utopia-two-step", "sdp")
    u = [r for r, _ in rows("setup1", "utopia-two-step", methods=methods, sdp=True)]
    sd = [r for r, _ in rows("setup1", "sdp", methods=methods, sdp=True)]
    cov = [r.coverage for r in sd]
    ok_cov = all(c >= 0.93 for c in cov)
    ok_width = all(a.avg_width >= b.avg_width for a, b in zip(sd, u))
    passed = ok_cov and ok_width
    report(capsys, 5, passed, f"sdp coverage {fmt(cov)}; sdp width {fmt(r.avg_width for r in sd)} "
                              f"vs utopia {fmt(r.avg_width for r in u)}")
    assert passed


def test_criterion_6_solver_oracles(capsys):
    lp_err, lp_bad = 0.0, 0
    for seed in range(100):
        p = random_lp(np.random.default_rng(90_000 + seed))
        s, o = solve_lp(p), enumerate_vertices_oracle(p)
        if s.status != o.status:
            lp_bad += 1
        elif o.status == OPTIMAL:
            lp_err = max(lp_err, abs(s.objective - o.objective))
    qc_err = 0.0
    for seed in range(50):
        F, y = random_two_step_fixture(np.random.default_rng(91_000 + seed))
        x = np.arange(len(y), dtype=float)
        cands = [table_candidate(x, F[:, j]) for j in range(F.shape[1])]
        opt = Dataset(x[:, None], y)
        one = aggregate_one_step(cands, [], opt)
        two = aggregate_two_step(cands, None, opt)
        qc_err = max(qc_err, abs(one.objective - two.objective))
    passed = lp_bad == 0 and lp_err <= 1e-6 and qc_err <= 1e-5
    report(capsys, 6, passed, f"LP max gap {lp_err:.2e} ({lp_bad} status mismatches); "
                              f"one-step vs two-step max gap {qc_err:.2e}")
    assert passed


def test_criterion_7_calibration_oracle(capsys):
    alphas = np.round(np.arange(0.0, 0.51, 0.05), 2)
    mismatches, over = 0, 0
    for seed in range(200):
        r = random_ratio_set(np.random.default_rng(92_000 + seed))
        for a in alphas:
            lam = quantile_lambda(r, a)
            mismatches += lam != brute_force_lambda(r, a)
            over += np.mean(r > lam) > a
    passed = mismatches == 0 and over == 0
    report(capsys, 7, passed, f"200 sets x {len(alphas)} alphas; {mismatches} closed-form mismatches; "
                              f"{over} miscoverage violations")
    assert passed


def test_criterion_8_lemmas(capsys):
    checks = verify_lemmas(50)
    passed = all(c.passed for c in checks)
    report(capsys, 8, passed, "; ".join(c.line() for c in checks))
    assert passed


def _candidates(setup, seed):
    spec = parse_setup(setup)
    pre, opt = generate(spec, 400, seed), generate(spec, 100, seed + 10_000)
    mean = fit_mean_ridge(pre, 4, 1e-6)
    return build_width_candidates(DEFAULT_MENU, pre, mean), mean, opt


def test_criterion_9_structural(capsys):
    worst_cov, dom_fail, worst_rescale = np.inf, 0, 0.0
    lin = [constant(1.0, role="mean"), CandidateFunction("basis", 1, role="mean", coef=[0.0, 1.0], degree=1)]
    for setup in ("setup1", "setup2", "setup3"):
        for seed in SEEDS:
            cands, mean, opt = _candidates(setup, seed)
            s = (opt.y - mean(opt.x)) ** 2
            two = aggregate_two_step(cands, mean, opt)
            one = aggregate_one_step(cands, [mean, constant(1.0, role="mean")], opt).band
            asym = aggregate_asymmetric(lin, lin, opt)
            worst_cov = min(worst_cov, np.min(two.band.width_fn(opt.x) - s),
                            np.min(one.width_fn(opt.x) - (opt.y - one.mean(opt.x)) ** 2),
                            np.min(opt.y - asym.raw_lower(opt.x)), np.min(asym.raw_upper(opt.x) - opt.y))
            for f in cands:
                dom_fail += two.objective > scale_single(f, mean, opt) * float(np.sum(f(opt.x))) + 1e-6
            c = np.random.default_rng(seed).uniform(0.1, 10.0, len(cands))
            alt = aggregate_two_step([f.scaled(float(k)) for f, k in zip(cands, c)], mean, opt).band
            worst_rescale = max(worst_rescale, np.max(np.abs(alt.width_fn(opt.x) - two.band.width_fn(opt.x))))
    first = SplitMix64(0).next_u64()
    same = True
    for seed in SEEDS:
        cfg = ExperimentConfig(source="setup2", seed=seed, methods=BASE_METHODS)
        same &= format_report_csv(run_experiment(cfg)) == format_report_csv(run_experiment(cfg))
    passed = (worst_cov >= -1e-6 and dom_fail == 0 and worst_rescale <= 1e-6
              and first == 0xE220A8397B1DCDAF and same)
    report(capsys, 9, passed, f"min training residual {worst_cov:.2e}; {dom_fail} domination failures; "
                              f"rescaling gap {worst_rescale:.2e}; rng 0x{first:016X}; byte-identical {same}")
    assert passed
