"""Solvers for the two non-linear programs.

``solve_qc``   joint (width weights, mean weights) aggregation:
               linear objective, convex quadratic constraints; log-barrier
               interior method with damped Newton steps.
``solve_psd``  kernel quadratic-form program over B >= 0; Burer-Monteiro
               factorisation B = V V^T with an augmented Lagrangian for the
               inequality constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .rng import SplitMix64


class SolverError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class CannotInitializeError(SolverError):
    pass


# ---------------------------------------------------------------------------
# quadratically constrained aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QcProgram:
    """min 1^T F a  s.t.  F a >= (y - M beta)^2 elementwise,  a >= 0."""

    F: np.ndarray
    M: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        n = y.shape[0]
        if F.shape[0] != n:
            F = F.reshape(n, -1)
        M = np.asarray(self.M, dtype=float) if self.M is not None else np.zeros((n, 0))
        M = M.reshape(n, -1) if M.size else np.zeros((n, 0))
        if F.shape[0] != n or M.shape[0] != n:
            raise ValueError("F, M and y must have the same number of rows")
        if F.shape[1] < 1:
            raise ValueError("need at least one width candidate")
        if np.any(F < 0):
            raise ValueError("width candidate evaluations must be nonnegative")
        for name, a in (("F", F), ("M", M), ("y", y)):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "y", y)

    @property
    def K(self):
        return self.F.shape[1]

    @property
    def L(self):
        return self.M.shape[1]

    def residuals(self, a, beta):
        """Constraint values F a - (y - M beta)^2 (nonnegative when feasible)."""
        return self.F @ a - (self.y - self.M @ beta) ** 2

    def objective(self, a):
        return float(self.F.sum(axis=0) @ a)


# centering counts as converged at this decrement when no further progress is
# measurable in floating point
FP_DECREMENT = 1e-6


def solve_qc(p: QcProgram, gap_tol: float = 1e-8, mu: float = 10.0, max_newton: int = 100):
    """Log-barrier interior method for :class:`QcProgram`.

    Returns ``(a, beta, report)``. The iterate stays strictly feasible, so the
    returned point satisfies every constraint.
    """
    n, K, L = p.F.shape[0], p.K, p.L
    # column and response scaling: a' = a * colscale / ys^2, beta' = beta / ys
    colscale = p.F.max(axis=0)
    colscale = np.where(colscale > 0, colscale, 1.0)
    F = p.F / colscale
    ys = max(1.0, float(np.max(np.abs(p.y))))
    y = p.y / ys
    M = p.M
    cvec = F.sum(axis=0)

    positive = np.flatnonzero(F.min(axis=0) > 0)
    if positive.size == 0:
        raise CannotInitializeError("cannot initialize: no width candidate is strictly positive on the data")
    j0 = positive[np.argmax(F[:, positive].min(axis=0))]
    a = np.full(K, 1e-3)
    a[j0] = float(np.max(y**2 / F[:, j0])) + 1.0
    beta = np.zeros(L)

    m_con = n + K

    def dphi(a, beta, g, da, db, t, s):
        # barrier change phi(z + s dz) - phi(z) in relative form; the absolute
        # values reach ~1e10 at large t and would swamp the Armijo test
        a1 = a + s * da
        g1 = F @ a1 - (y - M @ (beta + s * db)) ** 2
        if np.any(g1 <= 0) or np.any(a1 <= 0):
            return np.inf
        return t * s * (cvec @ da) - np.sum(np.log(g1 / g)) - np.sum(np.log1p(s * da / a))

    obj0 = cvec @ a
    t = max(1.0, m_con / max(obj0, 1e-12))
    newton_total = 0
    outer = 0
    while True:
        outer += 1
        for _ in range(max_newton):
            r = y - M @ beta
            g = F @ a - r**2
            Ja = F / g[:, None]
            Jb = 2.0 * (r / g)[:, None] * M
            grad = np.concatenate([t * cvec - Ja.sum(axis=0) - 1.0 / a, -Jb.sum(axis=0)])
            Jfull = np.hstack([Ja, Jb])
            H = Jfull.T @ Jfull
            H[:K, :K] += np.diag(1.0 / a**2)
            if L:
                H[K:, K:] += 2.0 * (M / g[:, None]).T @ M
            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, grad, rcond=None)[0]
            lam2 = float(-grad @ step)
            newton_total += 1
            if lam2 / 2.0 <= 1e-10:
                break
            da, db = step[:K], step[K:]
            s = 1.0
            while s > 1e-14:
                if dphi(a, beta, g, da, db, t, s) <= -0.25 * s * lam2:
                    break
                s *= 0.5
            else:
                if lam2 <= FP_DECREMENT:
                    break
                raise SolverError("Newton step stalled in barrier centering",
                                  {"t": t, "decrement": lam2, "objective": cvec @ a})
            a = a + s * da
            beta = beta + s * db
        else:
            if lam2 > FP_DECREMENT:
                raise SolverError("Newton iteration cap reached in barrier centering",
                                  {"t": t, "decrement": lam2, "objective": cvec @ a})
        obj = cvec @ a
        if m_con / t <= gap_tol * max(1.0, obj):
            break
        t *= mu

    a_out = a * ys**2 / colscale
    beta_out = beta * ys
    resid = p.residuals(a_out, beta_out)
    report = {
        "objective": p.objective(a_out),
        "duality_gap": m_con / t * ys**2,
        "outer_iterations": outer,
        "newton_steps": newton_total,
        "min_residual": float(resid.min()),
    }
    return a_out, beta_out, report


# ---------------------------------------------------------------------------
# kernel PSD program
# ---------------------------------------------------------------------------

FEASIBLE = "feasible"
PSD_INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class PsdProgram:
    """min tr(K B K)  s.t.  <K_i, B K_i> >= s_i,  tr(K B) <= r,  B >= 0."""

    K: np.ndarray
    s: np.ndarray
    r: float

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        s = np.asarray(self.s, dtype=float).ravel()
        if K.shape != (s.shape[0], s.shape[0]):
            raise ValueError("kernel matrix must be n x n with n = len(s)")
        if np.max(np.abs(K - K.T), initial=0.0) > 1e-10:
            raise ValueError("kernel matrix must be symmetric")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("targets must be finite and nonnegative")
        if not self.r > 0:
            raise ValueError("trace budget must be positive")
        object.__setattr__(self, "K", 0.5 * (K + K.T))
        object.__setattr__(self, "s", s)

    @property
    def n(self):
        return self.s.shape[0]

    def diag_requirement(self) -> float:
        """tr(KB) of the diagonal feasible point B = diag(s_i / K_ii^2)."""
        kd = np.diag(self.K)
        return float(np.sum(self.s / kd))


def default_trace_budget(K, s) -> float:
    s = np.asarray(s, float)
    return float(2.0 * s.mean() * s.shape[0] / np.mean(np.diag(K)))


@dataclass(eq=False)
class PsdReport:
    status: str
    objective: float = np.nan
    trace: float = np.nan
    max_violation: float = np.nan
    outer_iterations: int = 0
    extra: dict = field(default_factory=dict)


def solve_psd(p: PsdProgram, rank: int | None = None, feas_tol: float = 1e-7,
              max_outer: int = 60, seed: int = 0):
    """Burer-Monteiro augmented-Lagrangian solve of :class:`PsdProgram`.

    Returns ``(V, report)`` with B = V V^T (``V`` has ``rank`` columns), or
    ``(None, report)`` with status ``infeasible`` when the trace budget is
    below the certified lower bound max_i s_i / K_ii.
    """
    n = p.n
    rank = min(n, 10) if rank is None else int(rank)
    if rank < 1:
        raise ValueError("rank must be at least 1")
    K = p.K + 1e-10 * np.eye(n)
    kd = np.diag(K)
    if np.any(kd <= 0):
        raise ValueError("kernel diagonal must be positive")
    # K >= K_i K_i^T / K_ii, so tr(KB) >= s_i / K_ii for every feasible B
    need = float(np.max(p.s / kd)) if n else 0.0
    if p.r < need * (1 - 1e-12):
        return None, PsdReport(PSD_INFEASIBLE, extra={"required_trace_lower_bound": need})
    smax = float(p.s.max()) if n else 0.0
    if smax == 0.0:
        V = np.zeros((n, rank))
        return V, PsdReport(FEASIBLE, objective=0.0, trace=0.0, max_violation=0.0)

    s = p.s / smax
    r = p.r / smax
    K2 = K @ K

    # start from the diagonal feasible point, truncated to `rank` columns
    b0 = s / kd**2
    order = np.argsort(-b0, kind="stable")
    V = np.zeros((n, rank))
    for col, i in enumerate(order[:rank]):
        V[i, col] = np.sqrt(b0[i])
    V += 1e-3 * (SplitMix64(seed).uniforms(n * rank).reshape(n, rank) - 0.5)

    lam = np.zeros(n)
    lam0 = 0.0
    rho = 10.0
    wobj = 1.0 / n

    def unpack(vec):
        return vec.reshape(n, rank)

    def lagrangian(vec, lam, lam0, rho):
        V = unpack(vec)
        Q = K @ V
        q = (Q * Q).sum(axis=1)
        tr = float((V * Q).sum())
        f = wobj * float((Q * Q).sum())
        pi = np.maximum(0.0, lam + rho * (s - q))
        pi0 = max(0.0, lam0 + rho * (tr - r))
        val = f + (np.sum(pi**2) - np.sum(lam**2)) / (2 * rho) + (pi0**2 - lam0**2) / (2 * rho)
        grad = 2.0 * wobj * (K @ Q) - 2.0 * (K @ (pi[:, None] * Q)) + 2.0 * pi0 * Q
        return val, grad.ravel()

    def violations(V):
        Q = K @ V
        q = (Q * Q).sum(axis=1)
        tr = float((V * Q).sum())
        return q, tr, np.maximum(0.0, s - q), max(0.0, tr - r)

    prev_viol = np.inf
    outer = 0
    converged = False
    for outer in range(1, max_outer + 1):
        res = minimize(lagrangian, V.ravel(), args=(lam, lam0, rho), jac=True, method="L-BFGS-B",
                       options={"maxiter": 2000, "gtol": 1e-10, "ftol": 1e-15, "maxcor": 20})
        V = unpack(res.x)
        q, tr, cv, tv = violations(V)
        viol = max(float(cv.max()), tv)
        lam = np.maximum(0.0, lam + rho * (s - q))
        lam0 = max(0.0, lam0 + rho * (tr - r))
        comp = float(np.max(lam * np.abs(s - q))) if n else 0.0
        if viol <= feas_tol and comp <= 1e-6:
            converged = True
            break
        if viol > 0.25 * prev_viol:
            rho = min(rho * 10.0, 1e10)
        prev_viol = viol

    # remove residual infeasibility of the inequality rows by a uniform rescale
    q, tr, cv, tv = violations(V)
    pos = q > 0
    if np.any(pos):
        gamma = max(1.0, float(np.max(s[pos] / q[pos])))
        if tr * gamma <= r * (1 + 1e-9) or tr * gamma - tr < 1e-6 / smax:
            V = V * np.sqrt(gamma)
    q, tr, cv, tv = violations(V)
    Vout = V * np.sqrt(smax)
    Q = K @ Vout
    report = PsdReport(
        FEASIBLE,
        objective=float((Q * Q).sum()),
        trace=tr * smax,
        max_violation=float(np.max(np.maximum(0.0, p.s - (Q * Q).sum(axis=1)))),
        outer_iterations=outer,
        extra={"converged": converged, "rho": rho, "trace_violation": tv * smax},
    )
    tol_ok = np.all((Q * Q).sum(axis=1) >= p.s - 1e-5 * np.maximum(1.0, p.s)) and report.trace <= p.r + 1e-6
    if not tol_ok:
        raise SolverError(f"augmented Lagrangian did not reach feasibility (max violation "
                          f"{report.max_violation:.3g}, trace {report.trace:.6g} vs budget {p.r:.6g})",
                          report.__dict__)
    return Vout, report
