"""Dense linear programming.

``solve_lp`` is a homogeneous self-dual primal-dual interior-point method with
Mehrotra predictor-corrector steps. Problems are stated as

    minimize    c @ x
    subject to  A @ x >= b          (inequality rows)
                A_eq @ x == b_eq    (optional equality rows)
                lower <= x <= upper

and internally rewritten in bounded standard form ``Ax = b, 0 <= x <= u``
with upper bounds handled implicitly, so the normal matrix has one row per
constraint row and never grows with the number of bounded variables.
Infeasibility and unboundedness are detected from the embedding's
(tau, kappa) pair rather than from iterate divergence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpStalledError(RuntimeError):
    """Raised when the iteration cap is reached before convergence."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        m = c.shape[0]
        A = np.zeros((0, m)) if self.A is None else np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).ravel()
        Aeq = np.zeros((0, m)) if self.A_eq is None else np.atleast_2d(np.asarray(self.A_eq, dtype=float))
        beq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        if A.size == 0:
            A = A.reshape(0, m)
        if Aeq.size == 0:
            Aeq = Aeq.reshape(0, m)
        lo = np.zeros(m) if self.lower is None else np.broadcast_to(np.asarray(self.lower, float), (m,)).copy()
        hi = np.full(m, np.inf) if self.upper is None else np.broadcast_to(np.asarray(self.upper, float), (m,)).copy()
        if A.shape != (b.shape[0], m) or Aeq.shape != (beq.shape[0], m):
            raise ValueError(f"inconsistent LP dimensions: c has {m} entries, A {A.shape}, b {b.shape}, "
                             f"A_eq {Aeq.shape}, b_eq {beq.shape}")
        for name, arr in (("c", c), ("A", A), ("b", b), ("A_eq", Aeq), ("b_eq", beq)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"LP data {name} has non-finite entries")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("invalid variable bounds")
        for name, val in (("c", c), ("A", A), ("b", b), ("lower", lo), ("upper", hi), ("A_eq", Aeq), ("b_eq", beq)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass(eq=False)
class LpSolution:
    x: np.ndarray | None
    objective: float
    status: str
    max_primal_violation: float = np.inf
    max_dual_violation: float = np.inf
    complementarity: float = np.inf
    iterations: int = 0
    duals: np.ndarray | None = None  # multipliers of the >= rows (nonnegative)
    duals_eq: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# conversion to bounded standard form
# ---------------------------------------------------------------------------


@dataclass
class _Std:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    u: np.ndarray  # inf where unbounded above
    offset: np.ndarray  # x = offset + T @ xbar
    T: np.ndarray
    const: float
    n_ub: int


def _standard_form(p: LpProblem) -> _Std:
    m = p.n_vars
    cols = []  # (original index, sign)
    ubar = []
    offset = np.zeros(m)
    for j in range(m):
        lo, hi = p.lower[j], p.upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            ubar.append(hi - lo)
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
            ubar.append(np.inf)
        else:
            cols.append((j, 1.0))
            ubar.append(np.inf)
            cols.append((j, -1.0))
            ubar.append(np.inf)
    T = np.zeros((m, len(cols)))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    k_ub, k_eq = p.A.shape[0], p.A_eq.shape[0]
    rows = np.vstack([p.A, p.A_eq]) if k_ub + k_eq else np.zeros((0, m))
    rhs = np.concatenate([p.b, p.b_eq]) - rows @ offset
    A = np.hstack([rows @ T, np.vstack([-np.eye(k_ub), np.zeros((k_eq, k_ub))])])
    c = np.concatenate([T.T @ p.c, np.zeros(k_ub)])
    u = np.concatenate([ubar, np.full(k_ub, np.inf)])
    return _Std(A, rhs, c, u, offset, T, float(p.c @ offset), k_ub)


def _equilibrate(A, iters=12):
    """Ruiz row/column max-abs scaling; returns (row_scale, col_scale)."""
    k, n = A.shape
    r = np.ones(k)
    s = np.ones(n)
    B = A.copy()
    for _ in range(iters):
        rmax = np.abs(B).max(axis=1) if n else np.zeros(k)
        cmax = np.abs(B).max(axis=0) if k else np.zeros(n)
        rf = np.where(rmax > 0, 1.0 / np.sqrt(np.where(rmax > 0, rmax, 1.0)), 1.0)
        cf = np.where(cmax > 0, 1.0 / np.sqrt(np.where(cmax > 0, cmax, 1.0)), 1.0)
        B = rf[:, None] * B * cf[None, :]
        r *= rf
        s *= cf
        if np.all(np.abs(rf - 1) < 1e-3) and np.all(np.abs(cf - 1) < 1e-3):
            break
    return r, s


# ---------------------------------------------------------------------------
# interior point core
# ---------------------------------------------------------------------------


def _factor(N):
    k = N.shape[0]
    if k == 0:
        return None
    reg = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(N)))))
    for _ in range(8):
        try:
            return sla.cho_factor(N + reg * np.eye(k), lower=True, check_finite=False)
        except (sla.LinAlgError, np.linalg.LinAlgError):
            reg *= 100.0
    return ("lstsq", N)


def _solve(fac, rhs):
    if fac is None:
        return np.zeros(0)
    if isinstance(fac, tuple) and len(fac) == 2 and isinstance(fac[0], str):
        return np.linalg.lstsq(fac[1], rhs, rcond=None)[0]
    return sla.cho_solve(fac, rhs, check_finite=False)


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _hsd(A, b, c, u, tol=1e-9, max_iter=200):
    k, n = A.shape
    B = np.flatnonzero(np.isfinite(u))
    uB = u[B]
    ufull = np.zeros(n)
    ufull[B] = uB

    x = np.ones(n)
    if B.size:
        x[B] = np.where(uB > 0, np.minimum(1.0, uB / 2.0), 1.0)
    z = np.ones(n)
    v = np.where(uB - x[B] > 0, uB - x[B], 1.0) if B.size else np.ones(0)
    w = np.ones(B.size)
    y = np.zeros(k)
    tau, kappa = 1.0, 1.0
    nu = n + B.size + 1

    nb, nc, nu_ = np.linalg.norm(b), np.linalg.norm(c), np.linalg.norm(uB)

    def residuals(x, y, z, v, w, tau, kappa):
        rp = b * tau - A @ x
        ru = uB * tau - x[B] - v
        wfull = np.zeros(n)
        wfull[B] = w
        rd = c * tau - A.T @ y - z + wfull
        G = c @ x - b @ y + uB @ w + kappa
        return rp, ru, rd, G, wfull

    rp0, ru0, rd0, G0, _ = residuals(x, y, z, v, w, tau, kappa)
    n_rp0 = max(1.0, np.linalg.norm(rp0))
    n_ru0 = max(1.0, np.linalg.norm(ru0))
    n_rd0 = max(1.0, np.linalg.norm(rd0))
    n_G0 = max(1.0, abs(G0))
    mu0 = (x @ z + v @ w + tau * kappa) / nu

    status = None
    it = 0
    hist = {}
    for it in range(1, max_iter + 1):
        rp, ru, rd, G, wfull = residuals(x, y, z, v, w, tau, kappa)
        mu = (x @ z + v @ w + tau * kappa) / nu

        xh, yh, wh = x / tau, y / tau, w / tau
        pobj = c @ xh
        dobj = b @ yh - uB @ wh
        pinf = np.linalg.norm(rp) / tau / (1.0 + nb)
        uinf = np.linalg.norm(ru) / tau / (1.0 + nu_)
        dinf = np.linalg.norm(rd) / tau / (1.0 + nc)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        hist = dict(pinf=pinf, uinf=uinf, dinf=dinf, gap=gap, tau=tau, kappa=kappa, mu=mu)
        if max(pinf, uinf, dinf, gap) <= tol:
            status = OPTIMAL
            break
        rho_p = np.linalg.norm(rp) / n_rp0
        rho_u = np.linalg.norm(ru) / n_ru0
        rho_d = np.linalg.norm(rd) / n_rd0
        rho_g = abs(G) / n_G0
        rho_mu = mu / mu0
        if max(rho_p, rho_u, rho_d, rho_g) <= tol and tau <= tol * max(1.0, kappa):
            status = "infeasible_or_unbounded"
            break
        if rho_mu <= tol and tau <= tol * min(1.0, kappa):
            status = "infeasible_or_unbounded"
            break

        theta_inv = z / x
        if B.size:
            theta_inv[B] += w / v
        theta = 1.0 / theta_inv
        ADA = (A * theta[None, :]) @ A.T
        fac = _factor(ADA)
        chat = -c.copy()
        if B.size:
            chat[B] += w * uB / v
        q = _solve(fac, b - A @ (theta * chat))

        def direction(eta, rxz, rvw, rtk):
            rdt = eta * rd - rxz / x
            if B.size:
                rdt[B] += (rvw - w * eta * ru) / v
            p_ = _solve(fac, eta * rp + A @ (theta * rdt))
            dx0 = theta * (A.T @ p_ - rdt)
            dx1 = theta * (A.T @ q + chat)
            dw0 = (rvw - w * eta * ru + w * dx0[B]) / v if B.size else np.zeros(0)
            dw1 = w * (dx1[B] - uB) / v if B.size else np.zeros(0)
            num = -eta * G - c @ dx0 + b @ p_ - uB @ dw0 - rtk / tau
            den = c @ dx1 - b @ q + uB @ dw1 - kappa / tau
            dtau = num / den
            dx = dx0 + dx1 * dtau
            dy = p_ + q * dtau
            dw = dw0 + dw1 * dtau
            dv = eta * ru + uB * dtau - dx[B]
            dz = (rxz - z * dx) / x
            dkappa = (rtk - kappa * dtau) / tau
            return dx, dy, dz, dv, dw, dtau, dkappa

        def steplen(d):
            dx, dy, dz, dv, dw, dtau, dkappa = d
            a = min(_max_step(x, dx), _max_step(z, dz), _max_step(v, dv), _max_step(w, dw),
                    _max_step(np.array([tau]), np.array([dtau])),
                    _max_step(np.array([kappa]), np.array([dkappa])))
            return a

        # predictor
        aff = direction(1.0, -x * z, -v * w, -tau * kappa)
        a_aff = min(1.0, steplen(aff))
        dx, _, dz, dv, dw, dtau, dkappa = aff
        mu_aff = ((x + a_aff * dx) @ (z + a_aff * dz) + (v + a_aff * dv) @ (w + a_aff * dw)
                  + (tau + a_aff * dtau) * (kappa + a_aff * dkappa)) / nu
        gamma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        # corrector
        d = direction(1.0 - gamma,
                      -x * z + gamma * mu - dx * dz,
                      -v * w + gamma * mu - dv * dw,
                      -tau * kappa + gamma * mu - dtau * dkappa)
        if not all(np.all(np.isfinite(t)) for t in d[:5]) or not np.isfinite(d[5]):
            d = aff
            gamma = 0.0
        a = min(1.0, 0.99995 * steplen(d))
        dx, dy, dz, dv, dw, dtau, dkappa = d
        x = x + a * dx
        y = y + a * dy
        z = z + a * dz
        v = v + a * dv
        w = w + a * dw
        tau = tau + a * dtau
        kappa = kappa + a * dkappa
        # keep strictly positive against round-off
        tiny = 1e-300
        x = np.maximum(x, tiny)
        z = np.maximum(z, tiny)
        v = np.maximum(v, tiny)
        w = np.maximum(w, tiny)
        tau = max(tau, tiny)
        kappa = max(kappa, tiny)
    else:
        raise LpStalledError(f"interior point method stalled after {max_iter} iterations", hist)

    if status != OPTIMAL:
        dual_ray = b @ y - uB @ w
        primal_ray = c @ x
        if dual_ray > 0 and (primal_ray >= 0 or dual_ray >= -primal_ray):
            status = INFEASIBLE
        else:
            status = UNBOUNDED
    return status, x / tau, y / tau, z / tau, v / tau, w / tau, it, hist


def solve_lp(p: LpProblem, tol: float = 1e-9, max_iter: int = 200) -> LpSolution:
    """Solve ``p`` to a relative KKT tolerance ``tol``.

    Returns an :class:`LpSolution` with status ``optimal``, ``infeasible`` or
    ``unbounded``; raises :class:`LpStalledError` if ``max_iter`` is reached.
    """
    std = _standard_form(p)
    r, s = _equilibrate(std.A)
    A = r[:, None] * std.A * s[None, :]
    b = r * std.b
    c = s * std.c
    u = std.u / s
    bscale = max(1.0, float(np.max(np.abs(b)))) if b.size else 1.0
    cscale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    status, xs, ys, zs, vs, ws, it, hist = _hsd(A, b / bscale, c / cscale, u / bscale, tol, max_iter)
    if status != OPTIMAL:
        return LpSolution(None, np.nan, status, iterations=it, info=hist)

    xbar = s * xs * bscale
    y = r * ys * cscale
    x = std.offset + std.T @ xbar[: std.T.shape[1]]
    # reduced-cost multipliers in unscaled standard form
    zbar = zs * cscale / s
    B = np.flatnonzero(np.isfinite(std.u))
    wbar = np.zeros_like(zbar)
    wbar[B] = ws * cscale / s[B]

    k_ub = std.n_ub
    obj = float(p.c @ x)
    sol = LpSolution(x, obj, OPTIMAL, iterations=it, duals=y[:k_ub], duals_eq=y[k_ub:], info=hist)
    sol.max_primal_violation = primal_violation(p, x)
    cnorm = 1.0 + float(np.max(np.abs(std.c))) if std.c.size else 1.0
    rd = std.c - std.A.T @ y - zbar + wbar
    dual_neg = max(0.0, -float(np.min(y[:k_ub]))) if k_ub else 0.0
    sol.max_dual_violation = max(float(np.max(np.abs(rd))) / cnorm if rd.size else 0.0, dual_neg / cnorm)
    slack_lo = xbar
    slack_hi = np.where(np.isfinite(std.u), std.u - xbar, 0.0)
    comp = np.concatenate([np.abs(slack_lo * zbar), np.abs(slack_hi * wbar)])
    sol.complementarity = float(comp.max()) / (1.0 + abs(obj)) if comp.size else 0.0
    return sol


def primal_violation(p: LpProblem, x: np.ndarray) -> float:
    """Largest constraint or bound violation, each relative to max(1, |rhs|)."""
    viol = [0.0]
    if p.A.shape[0]:
        viol.append(float(np.max((p.b - p.A @ x) / np.maximum(1.0, np.abs(p.b)))))
    if p.A_eq.shape[0]:
        viol.append(float(np.max(np.abs(p.A_eq @ x - p.b_eq) / np.maximum(1.0, np.abs(p.b_eq)))))
    fin = np.isfinite(p.lower)
    if np.any(fin):
        viol.append(float(np.max((p.lower[fin] - x[fin]) / np.maximum(1.0, np.abs(p.lower[fin])))))
    fin = np.isfinite(p.upper)
    if np.any(fin):
        viol.append(float(np.max((x[fin] - p.upper[fin]) / np.maximum(1.0, np.abs(p.upper[fin])))))
    return max(viol)


# ---------------------------------------------------------------------------
# test oracle
# ---------------------------------------------------------------------------

_BOX = 1e7


def enumerate_vertices_oracle(p: LpProblem, feas_tol: float = 1e-9) -> LpSolution:
    """Exact optimum of a tiny LP by enumerating basic feasible points.

    Every constraint (rows, equalities, finite bounds) is collected as
    ``g @ x >= h``; each choice of ``n_vars`` linearly independent tight
    constraints gives a candidate vertex. Unboundedness is detected by adding a
    large box and checking whether the best vertex touches it. Intended for
    tests only; limited to 6 variables and 10 constraint rows.
    """
    m = p.n_vars
    if m > 6 or p.A.shape[0] + p.A_eq.shape[0] > 10:
        raise ValueError("vertex enumeration is limited to 6 variables and 10 rows")
    G, h, is_box = [], [], []
    for a, bb in zip(p.A, p.b):
        G.append(a); h.append(bb); is_box.append(False)
    for a, bb in zip(p.A_eq, p.b_eq):
        G.append(a); h.append(bb); is_box.append(False)
        G.append(-a); h.append(-bb); is_box.append(False)
    for j in range(m):
        e = np.zeros(m); e[j] = 1.0
        if np.isfinite(p.lower[j]):
            G.append(e); h.append(p.lower[j]); is_box.append(False)
        else:
            G.append(e); h.append(-_BOX); is_box.append(True)
        if np.isfinite(p.upper[j]):
            G.append(-e); h.append(-p.upper[j]); is_box.append(False)
        else:
            G.append(-e); h.append(-_BOX); is_box.append(True)
    G = np.array(G)
    h = np.array(h)
    best_x, best_val = None, np.inf
    for S in itertools.combinations(range(G.shape[0]), m):
        GS = G[list(S)]
        if abs(np.linalg.det(GS)) < 1e-12:
            continue
        x = np.linalg.solve(GS, h[list(S)])
        slack = G @ x - h
        if np.all(slack >= -feas_tol * np.maximum(1.0, np.abs(h))):
            val = float(p.c @ x)
            if val < best_val - 1e-12:
                best_val, best_x = val, x
    if best_x is None:
        return LpSolution(None, np.nan, INFEASIBLE)
    box_tight = [i for i in range(G.shape[0]) if is_box[i] and abs(G[i] @ best_x - h[i]) < 1e-6 * _BOX]
    if box_tight:
        return LpSolution(None, -np.inf, UNBOUNDED)
    return LpSolution(best_x, best_val, OPTIMAL, max_primal_violation=primal_violation(p, best_x),
                      max_dual_violation=0.0, complementarity=0.0)
