"""Solve the allocation IR and map the optimum back to natural units."""

from __future__ import annotations

import json
import os
import time
import warnings
from dataclasses import dataclass, field
from typing import IO

import numpy as np
import scipy.sparse as sp

from ..costgo import compute_cost_to_go, coupling_residual
from ..errors import InfeasibleProblemError, SolverError
from ..model import matrix_from_rates
from .barrier import solve_barrier
from .problem import ConvexProgram, Variant, natural_from_x
from .transform import NaturalValues, TransformedVariables, lse_residuals, transform_variables

NONZERO_THRESHOLD = 1e-6
RESULT_TOL = 1e-6
TOL_ENV = "SPREADRISK_SOLVER_TOL"
DEFAULT_TOL = 1e-7


def default_tolerance() -> float:
    value = os.environ.get(TOL_ENV)
    if value is None:
        return DEFAULT_TOL
    tol = float(value)
    if not 0 < tol < 1:
        raise ValueError(f"{TOL_ENV} must lie in (0, 1), got {value!r}")
    return tol


@dataclass(eq=False)
class AllocationResult:
    natural: NaturalValues
    transformed: TransformedVariables
    objective: float
    risk: float
    p_direct: np.ndarray | None
    residuals: dict[str, float]
    nonzero: dict[str, int]
    status: str
    iterations: int
    solve_time: float
    backend: str
    x: np.ndarray
    vaccination: dict[int, float] = field(default_factory=dict)
    node_risk: np.ndarray | None = None

    @property
    def p(self) -> np.ndarray:
        return self.natural.p

    @property
    def risk_per_node(self) -> np.ndarray:
        """``p_i lambda_i tau_i``; for the spectral variant ``p`` is the cost-to-go at ``r_max``."""
        if self.node_risk is not None:
            return self.node_risk
        nv = self.natural
        return nv.p * nv.lam * nv.tau

    def to_json(self, node_ids=None, edges=None) -> dict:
        nv, tv = self.natural, self.transformed
        n = nv.p.shape[0]
        node_ids = list(range(n)) if node_ids is None else list(node_ids)

        def num(a):
            return [float(f"{float(v):.12g}") for v in np.asarray(a).ravel()]

        out = {
            "status": self.status,
            "backend": self.backend,
            "objective": float(f"{self.objective:.12g}"),
            "risk": float(f"{self.risk:.12g}"),
            "r": float(f"{nv.r:.12g}"),
            "rho": float(f"{tv.rho:.12g}"),
            "iterations": self.iterations,
            "solve_time": self.solve_time,
            "residuals": {k: float(f"{v:.12g}") for k, v in self.residuals.items()},
            "nonzero": dict(self.nonzero),
            "nodes": {
                "id": node_ids, "p": num(nv.p), "delta": num(nv.delta), "lambda": num(nv.lam),
                "tau": num(nv.tau), "v": num(tv.v), "z": num(tv.z), "sigma": num(tv.sigma),
                "y": [None if not np.isfinite(v) else float(f"{v:.12g}") for v in tv.y],
            },
            "edges": {"beta": num(nv.beta), "u": num(tv.u)},
        }
        if edges is not None:
            out["edges"]["from"] = [node_ids[int(j)] for j in edges[0]]
            out["edges"]["to"] = [node_ids[int(i)] for i in edges[1]]
        if self.vaccination:
            out["vaccination"] = {str(node_ids[k]): float(f"{v:.12g}") for k, v in self.vaccination.items()}
        return out

    def write_json(self, fh: IO[str], node_ids=None, edges=None) -> None:
        json.dump(self.to_json(node_ids, edges), fh, indent=2)
        fh.write("\n")


def _solve_cvxpy(prog: ConvexProgram, solver: str, tol: float, time_limit=None):
    import cvxpy as cp

    x = cp.Variable(prog.n_vars)
    cons = []
    K = prog.F.shape[0]
    if prog.n_groups:
        S = sp.csr_matrix((np.ones(K), (prog.group, np.arange(K))), shape=(prog.n_groups, K))
        cons.append(S @ cp.exp(prog.F @ x + prog.f) <= 1)
    if prog.G.shape[0]:
        cons.append(prog.G @ x <= prog.h)
    lo = np.flatnonzero(np.isfinite(prog.lb))
    hi = np.flatnonzero(np.isfinite(prog.ub))
    if lo.size:
        cons.append(x[lo] >= prog.lb[lo])
    if hi.size:
        cons.append(x[hi] <= prog.ub[hi])
    problem = cp.Problem(cp.Minimize(prog.c @ x), cons)
    opts: dict = {}
    if solver == "CLARABEL":
        opts = dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=500)
        if time_limit is not None:
            opts["time_limit"] = float(time_limit)
    elif solver == "SCS":
        opts = dict(eps_abs=tol, eps_rel=tol, max_iters=200000)
    try:
        problem.solve(solver=solver, **opts)
    except cp.error.SolverError as exc:
        raise SolverError(f"{solver} failed: {exc}", status="solver_error") from exc
    status = problem.status
    stats = problem.solver_stats
    iters = int(stats.num_iters or 0) if stats is not None else 0
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        raise InfeasibleProblemError(f"allocation problem is infeasible ({solver}: {status})")
    if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        raise SolverError(f"allocation problem reported unbounded ({solver})", status=status)
    if x.value is None:
        raise SolverError(f"{solver} returned no solution (status {status})", status=status)
    return np.asarray(x.value, dtype=float), status, iters


_CLARABEL_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "optimal_inaccurate",
    "InsufficientProgress": "insufficient_progress",
    "MaxIterations": "max_iterations",
    "MaxTime": "time_limit",
    "NumericalError": "numerical_error",
}


def _solve_clarabel(prog: ConvexProgram, tol: float, time_limit=None, verbose: bool = False):
    """Pose the IR as an exponential-cone program and call Clarabel directly.

    Each term ``k`` gets an epigraph variable ``e_k >= exp(F_k x + f_k)`` and
    each group adds ``sum_k e_k <= 1``. The last iterate is returned for every
    status except infeasibility so the caller can verify it.
    """
    import clarabel

    N = prog.n_vars
    K = prog.F.shape[0]
    nv = N + K
    blocks, rhs = [], []
    # nonnegative cone rows: b - A v >= 0
    if prog.n_groups:
        S = sp.csr_matrix((np.ones(K), (prog.group, np.arange(K))), shape=(prog.n_groups, K))
        blocks.append(sp.hstack([sp.csr_matrix((prog.n_groups, N)), S]))
        rhs.append(np.ones(prog.n_groups))
    if prog.G.shape[0]:
        blocks.append(sp.hstack([prog.G, sp.csr_matrix((prog.G.shape[0], K))]))
        rhs.append(prog.h)
    lo = np.flatnonzero(np.isfinite(prog.lb))
    hi = np.flatnonzero(np.isfinite(prog.ub))
    if lo.size:
        blocks.append(sp.csr_matrix((-np.ones(lo.size), (np.arange(lo.size), lo)), shape=(lo.size, nv)))
        rhs.append(-prog.lb[lo])
    if hi.size:
        blocks.append(sp.csr_matrix((np.ones(hi.size), (np.arange(hi.size), hi)), shape=(hi.size, nv)))
        rhs.append(prog.ub[hi])
    n_nonneg = sum(blk.shape[0] for blk in blocks)
    # exponential cone (a, 1, e): exp(a) <= e, with a = F x + f
    if K:
        Fk = sp.hstack([-prog.F, sp.csr_matrix((K, K))]).tocsr()
        ek = sp.hstack([sp.csr_matrix((K, N)), -sp.identity(K, format="csr")]).tocsr()
        rows = sp.vstack([Fk, sp.csr_matrix((K, nv)), ek]).tocsr()
        # interleave to (a_k, 1, e_k) per cone
        order = np.arange(3 * K).reshape(3, K).T.ravel()
        blocks.append(rows[order])
        b_exp = np.zeros(3 * K)
        b_exp[0::3] = prog.f
        b_exp[1::3] = 1.0
        rhs.append(b_exp)
    A = sp.vstack(blocks).tocsc() if blocks else sp.csc_matrix((0, nv))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    cones = []
    if n_nonneg:
        cones.append(clarabel.NonnegativeConeT(n_nonneg))
    cones.extend(clarabel.ExponentialConeT() for _ in range(K))
    q = np.concatenate([prog.c, np.zeros(K)])
    settings = clarabel.DefaultSettings()
    settings.verbose = verbose
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_iter = 500
    if time_limit is not None:
        settings.time_limit = float(time_limit)
    solver = clarabel.DefaultSolver(sp.csc_matrix((nv, nv)), q, A, b, cones, settings)
    sol = solver.solve()
    name = str(sol.status).split(".")[-1]
    if name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        raise InfeasibleProblemError(f"allocation problem is infeasible (clarabel: {name})")
    if name in ("DualInfeasible", "AlmostDualInfeasible"):
        raise SolverError(f"allocation problem reported unbounded (clarabel: {name})", status=name)
    x = np.asarray(sol.x, dtype=float)[:N]
    if not np.all(np.isfinite(x)):
        raise SolverError(f"clarabel returned no usable point (status {name})", status=name)
    return x, _CLARABEL_STATUS.get(name, name), int(sol.iterations)


def solve_allocation(prog: ConvexProgram, *, backend: str = "auto", tol: float | None = None,
                     time_limit: float | None = None, check: bool = True) -> AllocationResult:
    """Solve the IR with ``backend`` in {auto, clarabel, cvxpy, scs, barrier}.

    ``clarabel`` calls the conic solver directly, ``cvxpy`` and ``scs`` go
    through the modelling layer. A point with a non-optimal status is kept
    only if it passes :func:`verify_result`. ``auto`` uses Clarabel and falls
    back to the built-in barrier method when that check fails.
    """
    tol = default_tolerance() if tol is None else tol
    backend = backend.lower()
    if backend not in ("auto", "clarabel", "cvxpy", "scs", "barrier"):
        raise ValueError(f"unknown backend {backend!r}")
    start = time.perf_counter()
    x = None
    used = backend
    if backend != "barrier":
        try:
            if backend in ("auto", "clarabel"):
                used = "clarabel"
                x, status, iters = _solve_clarabel(prog, tol, time_limit)
            else:
                used = "scs" if backend == "scs" else "cvxpy-clarabel"
                x, status, iters = _solve_cvxpy(prog, "SCS" if backend == "scs" else "CLARABEL",
                                                tol, time_limit)
            if status != "optimal":
                # keep a loosely converged point only if it passes our own checks
                trial = build_result(prog, np.clip(x, prog.lb, prog.ub), check=False)
                issues = verify_result(prog, trial)
                if issues:
                    if backend != "auto":
                        raise SolverError(f"{used} stopped with status {status} at an infeasible "
                                          f"point ({'; '.join(issues)})", status=status,
                                          residuals=trial.residuals)
                    warnings.warn(f"{used} status {status}; retrying with the barrier method")
                    x = None
        except (SolverError, ImportError) as exc:
            if backend != "auto":
                raise
            warnings.warn(f"{used} failed ({exc}); using the barrier method")
            x = None
    if x is None:
        out = solve_barrier(prog.c, prog.F, prog.f, prog.group, prog.n_groups, prog.G, prog.h,
                            prog.lb, prog.ub, prog.x_init, gap_tol=max(tol, 1e-7),
                            time_limit=time_limit)
        x, status, iters, used = out.x, out.status, out.iterations, "barrier"
        if status != "optimal":
            raise SolverError(f"barrier method stopped with status {status}", status=status)
    elapsed = time.perf_counter() - start
    # tiny excursions past box bounds are solver noise
    x = np.clip(x, prog.lb, prog.ub)
    return build_result(prog, x, status=status, iterations=iters, solve_time=elapsed,
                        backend=used, check=check)


def build_result(prog: ConvexProgram, x: np.ndarray, *, status="optimal", iterations=0,
                 solve_time=0.0, backend="", check=True) -> AllocationResult:
    spec = prog.problem
    net = spec.network
    L = prog.layout
    y, u, v, z, sigma, rho, s = natural_from_x(prog, x)
    tv = TransformedVariables(y=y, u=u, v=v, z=z, sigma=sigma, rho=rho)
    nv = transform_variables(net, tv, direction="inverse")
    spectral = spec.variant is Variant.MIN_SPECTRAL_BOUND
    # spectral rows carry no cost: p is a Perron certificate p^T A <= r p^T
    C_rows = np.zeros(net.n) if spectral else spec.cost

    A = matrix_from_rates(net.n, net.src, net.dst, nv.beta, nv.delta)
    coupling = coupling_residual(A, nv.p, C_rows, nv.r)
    scale = np.maximum(nv.p * (net.delta_ceiling + nv.r), 1e-300)
    q = lse_residuals(tv, net, C_rows)
    live = ~L.zero_nodes
    try:
        r_eval = spec.budgets.r_max if spectral else nv.r
        p_direct = compute_cost_to_go(A, spec.cost, r_eval).p
    except Exception:
        p_direct = None

    bnd = prog.bounds
    bound_viol = 0.0
    for val, upper in ((u, bnd.u), (v, bnd.v), (z, bnd.z), (sigma, bnd.sigma)):
        if val.size:
            bound_viol = max(bound_viol, float(np.max(-val)), float(np.max(val - upper)))
    bound_viol = max(bound_viol, bnd.rho_lo - rho, rho - bnd.rho_hi)
    budget_viol = 0.0
    cap_viol = 0.0
    Gx = prog.G @ x - prog.h
    for k, kind in enumerate(prog.row_kind):
        if kind.startswith("budget"):
            budget_viol = max(budget_viol, float(Gx[k]))
        elif kind == "risk-cap":
            cap_viol = max(cap_viol, float(Gx[k]))
    for g, kind in enumerate(prog.group_kind):
        if kind == "risk-cap":
            cap_viol = max(cap_viol, float(prog.lse_values(x)[g]))
    back = transform_variables(net, NaturalValues(p=np.where(live, nv.p, 1.0), beta=nv.beta,
                                                  delta=nv.delta, lam=nv.lam, tau=nv.tau, r=nv.r))
    roundtrip = max(
        float(np.max(np.abs(back.u - u), initial=0.0)), float(np.max(np.abs(back.v - v), initial=0.0)),
        float(np.max(np.abs(back.z - z), initial=0.0)),
        float(np.max(np.abs(back.sigma - sigma), initial=0.0)),
        float(np.max(np.abs(back.y[live] - y[live]), initial=0.0)), abs(back.rho - rho),
    )
    residuals = {
        "q_max": float(np.max(q[live], initial=-np.inf)),
        "coupling_relative": float(np.max(coupling[live] / scale[live], initial=-np.inf)),
        "coupling_max": float(np.max(coupling, initial=-np.inf)),
        "bounds": bound_viol,
        "budgets": budget_viol,
        "risk_cap": cap_viol,
        "roundtrip": roundtrip,
    }
    nonzero = {
        "beta": int(np.sum(u > NONZERO_THRESHOLD)),
        "delta": int(np.sum(v > NONZERO_THRESHOLD)),
        "lambda": int(np.sum(z > NONZERO_THRESHOLD)),
        "tau": int(np.sum(sigma > NONZERO_THRESHOLD)),
    }
    vacc = {}
    if L.s.size:
        nonzero["vaccination"] = int(np.sum(s > NONZERO_THRESHOLD))
        vacc = {int(i): float(val) for i, val in zip(L.s_nodes, s)}

    p_risk = nv.p
    if spectral:
        p_risk = p_direct if p_direct is not None else np.full(net.n, np.nan)
    risk_nodes = p_risk * nv.lam * nv.tau
    x0 = spec.known_outbreak
    if spec.variant is Variant.KNOWN_OUTBREAK_RISK or (
            spec.variant is Variant.MIN_RESOURCES_RISK_CAP and x0 is not None):
        risk = float(nv.p @ x0)
    else:
        risk = float(risk_nodes.max(initial=0.0))
    result = AllocationResult(
        natural=nv, transformed=tv, objective=float(prog.c @ x), risk=risk, p_direct=p_direct,
        residuals=residuals, nonzero=nonzero, status=status, iterations=iterations,
        solve_time=solve_time, backend=backend, x=x, vaccination=vacc, node_risk=risk_nodes,
    )
    if check:
        bad = {k: val for k, val in residuals.items()
               if k != "coupling_max" and val > (RESULT_TOL if k != "roundtrip" else 1e-9)}
        if bad:
            result.status = status if "inaccurate" in status else f"{status}_inaccurate"
            warnings.warn(f"allocation residuals above tolerance: {bad}")
    return result


def verify_result(prog: ConvexProgram, result: AllocationResult, tol: float = RESULT_TOL) -> list[str]:
    """Re-check a result against the unweighted constraints; empty list means feasible."""
    r = result.residuals
    issues = []
    for key in ("q_max", "coupling_relative", "bounds", "budgets", "risk_cap"):
        if r[key] > tol:
            issues.append(f"{key}={r[key]:.3e}")
    if r["roundtrip"] > 1e-9:
        issues.append(f"roundtrip={r['roundtrip']:.3e}")
    return issues


__all__ = ["AllocationResult", "build_result", "default_tolerance", "solve_allocation",
           "verify_result"]
