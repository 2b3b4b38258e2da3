"""Log-barrier interior-point method for the allocation IR.

Solves ``min c@x`` subject to grouped log-sum-exp rows ``lse_g(F x + f) <= 0``,
``G x <= h`` and box bounds with damped Newton steps on

    tc@x - sum_g log(-lse_g) - sum_k log(h_k - G_k x) - sum log(x - lb) - sum log(ub - x).

Rows touching many variables (budget sums, an aggregate risk group) are kept
out of the sparse Hessian and handled with a Woodbury correction so the
factorisation stays as sparse as the network.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import InfeasibleProblemError, SolverError

DENSE_ROW_NNZ = 64


@dataclass
class BarrierOutput:
    x: np.ndarray
    status: str
    iterations: int
    gap: float
    time: float


class _Program:
    """IR restricted to free (non-fixed) columns."""

    def __init__(self, c, F, f, group, n_groups, G, h, lb, ub):
        self.c = c
        self.F = F.tocsr()
        self.f = f
        self.group = group
        self.n_groups = n_groups
        self.G = G.tocsr()
        self.h = h
        self.lb = lb
        self.ub = ub
        self.n = c.shape[0]
        self.has_lb = np.isfinite(lb)
        self.has_ub = np.isfinite(ub)
        self.n_ineq = n_groups + G.shape[0] + int(self.has_lb.sum() + self.has_ub.sum())
        K = F.shape[0]
        self.S = sp.csr_matrix((np.ones(K), (group, np.arange(K))), shape=(n_groups, K))
        # groups whose gradient is dense go to the low-rank part
        support = (self.S @ (abs(self.F) > 0).astype(float)).tocsr()
        support.data[:] = 1.0
        self.dense_group = np.asarray(support.sum(axis=1)).ravel() > DENSE_ROW_NNZ
        self.dense_row = np.diff(self.G.indptr) > DENSE_ROW_NNZ

    def slacks(self, x):
        a = self.F @ x + self.f
        mx = np.full(self.n_groups, -np.inf)
        np.maximum.at(mx, self.group, a)
        e = np.exp(a - mx[self.group])
        s = np.bincount(self.group, weights=e, minlength=self.n_groups)
        lse = mx + np.log(s)
        lin = self.h - self.G @ x
        return lse, lin, a, e, s

    def feasible(self, x) -> bool:
        if np.any(x[self.has_lb] <= self.lb[self.has_lb]) or np.any(x[self.has_ub] >= self.ub[self.has_ub]):
            return False
        lse, lin, *_ = self.slacks(x)
        return bool(np.all(lse < 0) and np.all(lin > 0))

    def value(self, x, t):
        lse, lin, *_ = self.slacks(x)
        if np.any(lse >= 0) or np.any(lin <= 0):
            return np.inf
        dl = x[self.has_lb] - self.lb[self.has_lb]
        du = self.ub[self.has_ub] - x[self.has_ub]
        if np.any(dl <= 0) or np.any(du <= 0):
            return np.inf
        return (t * (self.c @ x) - np.log(-lse).sum() - np.log(lin).sum()
                - np.log(dl).sum() - np.log(du).sum())

    def newton_step(self, x, t):
        lse, lin, a, e, s = self.slacks(x)
        pi = e / s[self.group]
        J = sp.csr_matrix((pi, (self.group, np.arange(pi.size))), shape=(self.n_groups, pi.size)) @ self.F
        J = J.tocsr()
        w = -1.0 / lse                      # > 0
        grad = t * self.c + J.T @ w + self.G.T @ (1.0 / lin)
        diag = np.zeros(self.n)
        dl = x[self.has_lb] - self.lb[self.has_lb]
        du = self.ub[self.has_ub] - x[self.has_ub]
        grad[self.has_lb] -= 1.0 / dl
        grad[self.has_ub] += 1.0 / du
        diag[self.has_lb] += 1.0 / dl**2
        diag[self.has_ub] += 1.0 / du**2
        # sum_g w_g (F^T diag(pi_g) F - J_g^T J_g) + sum_g J_g^T J_g / lse_g^2
        H = self.F.T @ sp.diags(w[self.group] * pi) @ self.F
        coef = 1.0 / lse**2 - w
        sparse_g = ~self.dense_group
        Js = J[sparse_g]
        H = H + Js.T @ sp.diags(coef[sparse_g]) @ Js
        Gs = self.G[~self.dense_row]
        H = H + Gs.T @ sp.diags(1.0 / lin[~self.dense_row] ** 2) @ Gs
        H = (H + sp.diags(diag)).tocsc()
        # low-rank part: U diag(d) U^T
        U_cols, d = [], []
        if self.dense_group.any():
            U_cols.append(J[self.dense_group].T.toarray())
            d.append(coef[self.dense_group])
        if self.dense_row.any():
            U_cols.append(self.G[self.dense_row].T.toarray())
            d.append(1.0 / lin[self.dense_row] ** 2)
        scale = max(1.0, float(abs(H.diagonal()).max(initial=1.0)))
        reg = 1e-14 * scale
        H = H + reg * sp.identity(self.n, format="csc")
        try:
            lu = spla.splu(H, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolverError(f"barrier Hessian is singular: {exc}") from exc
        rhs = -grad
        dx = lu.solve(rhs)
        if U_cols:
            U = np.hstack(U_cols)
            d = np.concatenate(d)
            HiU = lu.solve(U)
            # (H + U D U^T)^{-1} = H^{-1} - H^{-1} U (D^{-1} + U^T H^{-1} U)^{-1} U^T H^{-1}
            cap = np.diag(1.0 / d) + U.T @ HiU
            corr = sla.solve(cap, U.T @ dx)
            dx = dx - HiU @ corr
        dec = float(-grad @ dx)
        return dx, dec


def _line_search(prog: _Program, x, dx, t, f0, dec, alpha=0.01, beta=0.5):
    # largest step keeping box bounds strict
    step = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        neg = dx < 0
        m = prog.has_lb & neg
        if m.any():
            step = min(step, 0.99 * float(np.min((prog.lb[m] - x[m]) / dx[m])))
        m = prog.has_ub & ~neg & (dx > 0)
        if m.any():
            step = min(step, 0.99 * float(np.min((prog.ub[m] - x[m]) / dx[m])))
    while step > 1e-9:
        xn = x + step * dx
        fn = prog.value(xn, t)
        if fn <= f0 - alpha * step * dec:
            return xn, fn, step
        step *= beta
    return x, f0, 0.0


def _barrier(prog: _Program, x, *, mu=20.0, gap_tol=1e-8, newton_tol=1e-9, max_newton=400,
             t0=None, stop=None, deadline=None):
    if not prog.feasible(x):
        raise SolverError("barrier method needs a strictly feasible start")
    m = max(prog.n_ineq, 1)
    obj_scale = 1.0 + abs(float(prog.c @ x))
    t = t0 if t0 is not None else max(1.0, m / (1e3 * obj_scale))
    total = 0
    while True:
        f = prog.value(x, t)
        for _ in range(max_newton):
            dx, dec = prog.newton_step(x, t)
            if dec / 2.0 <= newton_tol:
                break
            x, f, step = _line_search(prog, x, dx, t, f, dec)
            total += 1
            if step < 1e-8:
                # rounding in the barrier value stalls the search; the point is centred
                break
            if stop is not None and stop(x):
                return x, "stopped", total, m / t
            if deadline is not None and time.perf_counter() > deadline:
                return x, "time_limit", total, m / t
        gap = m / t
        if gap <= gap_tol * (1.0 + abs(float(prog.c @ x))):
            return x, "optimal", total, gap
        if stop is not None and stop(x):
            return x, "stopped", total, gap
        t *= mu


def _interior(x, lb, ub):
    """Pull ``x`` strictly inside the box."""
    x = x.copy()
    width = np.where(np.isfinite(lb) & np.isfinite(ub), ub - lb, np.inf)
    margin = np.minimum(1e-3 * np.where(np.isfinite(width), width, 1.0), 1e-3)
    lo = np.where(np.isfinite(lb), lb + margin, -np.inf)
    hi = np.where(np.isfinite(ub), ub - margin, np.inf)
    return np.clip(x, lo, hi)


def solve_barrier(c, F, f, group, n_groups, G, h, lb, ub, x0, *, gap_tol=1e-8,
                  time_limit=None) -> BarrierOutput:
    """Two-phase barrier solve. Columns with ``lb == ub`` are eliminated first."""
    start = time.perf_counter()
    deadline = None if time_limit is None else start + time_limit
    N = c.shape[0]
    fixed = np.isfinite(lb) & np.isfinite(ub) & (ub - lb <= 1e-14 * (1 + np.abs(lb)))
    free = ~fixed
    xfix = np.where(fixed, lb, 0.0)
    F = sp.csr_matrix(F)
    G = sp.csr_matrix(G)
    f_red = f + F[:, fixed] @ xfix[fixed]
    h_red = h - G[:, fixed] @ xfix[fixed]
    Ff, Gf = F[:, free], G[:, free]
    c_f, lb_f, ub_f = c[free], lb[free], ub[free]
    x = _interior(np.asarray(x0, dtype=float)[free], lb_f, ub_f)

    main = _Program(c_f, Ff, f_red, group, n_groups, Gf, h_red, lb_f, ub_f)
    iters = 0
    if not main.feasible(x):
        # phase I: min s  s.t. lse_g <= s, G x - h <= s, s >= -1
        lse, lin, *_ = main.slacks(x)
        s0 = max(float(lse.max(initial=-np.inf)), float((-lin).max(initial=-np.inf)), 0.0) + 1.0
        K = Ff.shape[0]
        F1 = sp.hstack([Ff, sp.csr_matrix(-np.ones((K, 1)))]).tocsr()
        G1 = sp.hstack([Gf, sp.csr_matrix(-np.ones((Gf.shape[0], 1)))]).tocsr()
        c1 = np.zeros(Ff.shape[1] + 1)
        c1[-1] = 1.0
        ph1 = _Program(c1, F1, f_red, group, n_groups, G1, h_red,
                       np.append(lb_f, -1.0), np.append(ub_f, np.inf))
        x1 = np.append(x, s0)
        x1, status, it, _ = _barrier(ph1, x1, gap_tol=1e-6, stop=lambda z: z[-1] < -1e-6,
                                     deadline=deadline)
        iters += it
        if x1[-1] >= -1e-9:
            if status == "time_limit":
                raise SolverError("barrier phase I hit the time limit")
            raise InfeasibleProblemError(
                f"no strictly feasible allocation (phase I optimum {x1[-1]:.3e} >= 0)")
        x = x1[:-1]
    x, status, it, gap = _barrier(main, x, gap_tol=gap_tol, deadline=deadline)
    iters += it
    out = xfix.copy()
    out[free] = x
    return BarrierOutput(x=out, status=status, iterations=iters, gap=float(gap),
                         time=time.perf_counter() - start)
