import numpy as np
import pytest

from _fixtures import random_two_step_fixture
from predband.convex import (PSD_INFEASIBLE, CannotInitializeError, PsdProgram, QcProgram, SolverError,
                             default_trace_budget, solve_psd, solve_qc)
from predband.model import gaussian_kernel
from predband.utopia import two_step_weights

# --- quadratically constrained aggregation ---------------------------------


def test_qc_chebyshev_centre():
    a, beta, rep = solve_qc(QcProgram(np.ones((2, 1)), np.ones((2, 1)), np.array([0.0, 2.0])))
    assert beta[0] == pytest.approx(1.0, abs=1e-6)
    assert a[0] == pytest.approx(1.0, abs=1e-6)
    assert rep["objective"] == pytest.approx(2.0, abs=1e-6)


def test_qc_exact_mean_fit_gives_zero_width():
    M = np.array([[1.0], [2.0], [3.0]])
    a, beta, rep = solve_qc(QcProgram(np.ones((3, 1)), M, M[:, 0].copy()))
    assert beta[0] == pytest.approx(1.0, abs=1e-4)
    assert rep["objective"] == pytest.approx(0.0, abs=1e-6)


def test_qc_single_constant_matches_max_ratio():
    y = np.array([1.0, -3.0, 2.0])
    a, beta, rep = solve_qc(QcProgram(np.ones((3, 1)), None, y))
    assert beta.shape == (0,)
    assert a[0] == pytest.approx(9.0, rel=1e-7)


def test_qc_cannot_initialize_without_positive_column():
    F = np.array([[1.0], [0.0]])
    with pytest.raises(CannotInitializeError):
        solve_qc(QcProgram(F, None, np.array([1.0, 1.0])))
    assert issubclass(CannotInitializeError, SolverError)


def test_qc_rejects_negative_width_column():
    with pytest.raises(ValueError):
        QcProgram(np.array([[-1.0]]), None, np.array([1.0]))


@pytest.mark.parametrize("seed", range(50))
def test_qc_without_mean_agrees_with_lp(seed):
    F, y = random_two_step_fixture(np.random.default_rng(seed))
    a, _, rep = solve_qc(QcProgram(F, None, y))
    a_lp, _ = two_step_weights(F, y**2)
    obj_lp = float(F.sum(axis=0) @ a_lp)
    assert abs(rep["objective"] - obj_lp) <= 1e-5
    assert np.all(a >= 0)
    assert np.min(F @ a - y**2) >= -1e-7


@pytest.mark.parametrize("seed", range(10))
def test_qc_column_rescaling_invariance(seed):
    rng = np.random.default_rng(100 + seed)
    F, y = random_two_step_fixture(rng)
    M = np.column_stack([np.ones(len(y)), rng.normal(size=len(y))])
    _, _, rep = solve_qc(QcProgram(F, M, y))
    c = rng.uniform(0.01, 100.0, F.shape[1])
    _, _, rep2 = solve_qc(QcProgram(F * c, M, y))
    assert abs(rep["objective"] - rep2["objective"]) <= 1e-5 * max(1.0, rep["objective"])


@pytest.mark.parametrize("seed", range(10))
def test_qc_constraints_satisfied(seed):
    rng = np.random.default_rng(200 + seed)
    F, y = random_two_step_fixture(rng)
    M = np.column_stack([np.ones(len(y)), rng.normal(size=len(y))])
    a, beta, rep = solve_qc(QcProgram(F, M, y))
    assert np.min(F @ a - (y - M @ beta) ** 2) >= -1e-7
    assert rep["min_residual"] >= -1e-7


# --- PSD program -------------------------------------------------------------


def test_psd_scalar():
    V, rep = solve_psd(PsdProgram(np.array([[1.0]]), np.array([4.0]), 10.0))
    assert (V @ V.T)[0, 0] == pytest.approx(4.0, rel=1e-5)
    assert rep.objective == pytest.approx(4.0, rel=1e-5)


def test_psd_identity_kernel_decouples():
    V, rep = solve_psd(PsdProgram(np.eye(2), np.array([1.0, 2.0]), 10.0))
    B = V @ V.T
    # the off-diagonal of B does not enter tr(KBK) or the constraints when K = I
    assert np.diag(B) == pytest.approx([1.0, 2.0], rel=1e-5)
    assert rep.objective == pytest.approx(3.0, rel=1e-5)


def test_psd_infeasible_budget():
    V, rep = solve_psd(PsdProgram(np.array([[1.0]]), np.array([4.0]), 3.0))
    assert V is None and rep.status == PSD_INFEASIBLE


def test_psd_zero_targets():
    V, rep = solve_psd(PsdProgram(np.eye(3), np.zeros(3), 1.0))
    assert np.all(V == 0) and rep.objective == 0.0


def test_psd_rejects_asymmetric_kernel():
    with pytest.raises(ValueError):
        PsdProgram(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2), 5.0)


@pytest.mark.parametrize("seed", range(3))
def test_psd_gaussian_kernel_feasibility(seed):
    rng = np.random.default_rng(seed)
    n = 25
    X = rng.uniform(-1, 1, (n, 1))
    s = (rng.uniform(-1, 1, n) ** 2) * (1 + 25 * X[:, 0] ** 4)
    K = gaussian_kernel(X, X, 0.5)
    r = default_trace_budget(K, s)
    V, rep = solve_psd(PsdProgram(K, s, r))
    B = V @ V.T
    fit = np.einsum("ij,jk,ik->i", K, B, K)
    assert np.all(fit >= s - 1e-5 * np.maximum(1.0, s))
    assert np.trace(K @ B) <= r + 1e-6
    assert np.linalg.eigvalsh(B).min() >= -1e-8
    assert rep.max_violation >= 0


def test_psd_rank_respected():
    rng = np.random.default_rng(9)
    X = rng.uniform(-1, 1, (12, 1))
    K = gaussian_kernel(X, X, 0.4)
    s = rng.uniform(0, 2, 12)
    V, _ = solve_psd(PsdProgram(K, s, default_trace_budget(K, s)), rank=3)
    assert V.shape == (12, 3)
