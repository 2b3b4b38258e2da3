"""Discounted cost-to-go of the linear spreading model and its feasibility.

For a Metzler ``A`` and discount rate ``r`` with ``A - rI`` Hurwitz, the
discounted linear cost from ``x(0)`` is ``p . x(0)`` with
``p^T = C (rI - A)^{-1}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import linprog

from .errors import InfeasibleDiscountError, NumericalError
from .model import SpreadingNetwork, SystemMatrix, _check_within

FEASIBILITY_MARGIN = 1e-10
RESIDUAL_TOL = 1e-8
DENSE_EIG_MAX_N = 200


@dataclass(frozen=True, eq=False)
class CostToGo:
    p: np.ndarray
    r: float
    residual: float
    method: str = "direct"

    @property
    def t_d(self) -> float:
        return np.inf if self.r == 0 else 1.0 / self.r


def _as_sparse(A) -> sp.csc_matrix:
    if isinstance(A, SystemMatrix):
        return A.matrix
    if sp.issparse(A):
        return sp.csc_matrix(A)
    return sp.csc_matrix(np.asarray(A, dtype=float))


def _cost_vector(C, n) -> np.ndarray:
    C = np.broadcast_to(np.asarray(C, dtype=float), (n,)).copy()
    if np.any(C < 0) or not np.all(np.isfinite(C)):
        raise ValueError("cost vector must be finite and nonnegative")
    return C


def coupling_residual(A, p, C, r) -> np.ndarray:
    """Per-column ``(p^T A - r p^T + C)_j``; nonpositive means feasible."""
    A = _as_sparse(A)
    p = np.asarray(p, dtype=float)
    return A.T @ p - r * p + np.asarray(C, dtype=float)


def spectral_abscissa(A, *, tol: float = 1e-12, max_iter: int = 20000) -> float:
    """Largest real part of the eigenvalues of a Metzler matrix (its Perron root).

    Small matrices go through a dense eigensolver. Larger ones use power
    iteration on the nonnegative shift ``A + cI`` with Collatz-Wielandt
    bounds as the stopping test, then ARPACK if the bracket does not close.
    """
    A = _as_sparse(A)
    n = A.shape[0]
    if n == 0:
        return -np.inf
    if n <= DENSE_EIG_MAX_N:
        return float(np.max(np.linalg.eigvals(A.toarray()).real))
    diag = A.diagonal()
    shift = float(max(0.0, -diag.min())) + 1e-2 * (1.0 + abs(diag).max())
    B = (A + shift * sp.identity(n, format="csc")).tocsr()
    if (B.data < 0).any():
        raise ValueError("spectral_abscissa expects a Metzler matrix")
    x = np.ones(n)
    upper = np.inf
    stalled = 0
    for it in range(1, max_iter + 1):
        y = B @ x
        ratios = y / x
        prev, upper = upper, ratios.max()
        lower = ratios.min()
        if upper - lower <= tol * (1.0 + abs(upper)):
            return float(0.5 * (upper + lower) - shift)
        # reducible matrices never close the bracket; hand over to ARPACK
        stalled = stalled + 1 if abs(prev - upper) <= tol * (1.0 + abs(upper)) else 0
        if stalled >= 50:
            break
        s = y.max()
        if s == 0:
            return float(-shift)
        x = y / s
        # keep iterates strictly positive so the bounds stay defined
        np.maximum(x, 1e-300, out=x)
    try:
        vals = spla.eigs(B, k=1, which="LM", v0=x, tol=tol, maxiter=max(1000, 10 * n),
                         return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise NumericalError(
            f"eigensolver did not converge after {max_iter} power iterations and ARPACK "
            f"({exc})"
        ) from exc
    rho = float(np.max(vals.real))
    return min(rho, float(upper)) - shift


def check_feasibility(A, r: float, margin: float = FEASIBILITY_MARGIN) -> tuple[bool, float]:
    """``(feasible, abscissa)``; feasible iff ``abscissa < r - margin``."""
    a = spectral_abscissa(A)
    return bool(a < r - margin), a


def _factor(M):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            return spla.splu(sp.csc_matrix(M))
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        raise NumericalError(f"singular system in cost-to-go solve: {exc}") from exc


def compute_cost_to_go(A, C, r: float, *, check: bool = True) -> CostToGo:
    """Solve ``(rI - A)^T p = C^T`` directly.

    Feasibility is certified by an exact M-matrix test: ``rI - A`` is a
    nonsingular M-matrix iff ``(rI - A)^T q = 1`` has a strictly positive
    solution, which holds iff ``r`` exceeds the spectral abscissa.
    """
    A = _as_sparse(A)
    n = A.shape[0]
    C = _cost_vector(C, n)
    M = (r * sp.identity(n, format="csc") - A).T.tocsc()
    try:
        lu = _factor(M)
    except NumericalError:
        raise InfeasibleDiscountError(r, spectral_abscissa(A)) from None
    if check:
        q = lu.solve(np.ones(n))
        if not np.all(np.isfinite(q)) or np.any(q <= 0):
            raise InfeasibleDiscountError(r, spectral_abscissa(A))
    p = lu.solve(C)
    if not np.all(np.isfinite(p)):
        raise NumericalError("non-finite cost-to-go")
    res = coupling_residual(A, p, C, r)
    tol = RESIDUAL_TOL * (1.0 + np.abs(C).max(initial=0.0))
    if np.abs(res).max(initial=0.0) > tol:
        # one step of iterative refinement
        p = p - lu.solve(-res)
        res = coupling_residual(A, p, C, r)
        if np.abs(res).max(initial=0.0) > tol:
            raise NumericalError(
                f"cost-to-go residual {np.abs(res).max():.3e} exceeds {tol:.1e}; rI - A is "
                "numerically singular"
            )
    p = np.maximum(p, 0.0)
    return CostToGo(p=p, r=float(r), residual=float(res.max(initial=-np.inf)))


def cost_to_go_lp_check(A, C, r: float) -> CostToGo:
    """Minimal ``||p||_1`` over ``p >= 0, p^T A - r p^T <= -C`` (HiGHS LP)."""
    A = _as_sparse(A)
    n = A.shape[0]
    C = _cost_vector(C, n)
    M = (A - r * sp.identity(n, format="csc")).T.tocsr()
    res = linprog(np.ones(n), A_ub=M, b_ub=-C, bounds=[(0, None)] * n, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status in (2, 3):
        raise InfeasibleDiscountError(r, spectral_abscissa(A))
    if res.status != 0:
        raise NumericalError(f"LP solver failed: {res.message}")
    p = np.maximum(res.x, 0.0)
    if not np.all(C > 0):
        # zero costs admit p = 0 even when A - rI is unstable
        compute_cost_to_go(A, np.ones(n), r)
    residual = coupling_residual(A, p, C, r)
    return CostToGo(p=p, r=float(r), residual=float(residual.max(initial=-np.inf)), method="lp")


def removal_cost_vector(net: SpreadingNetwork, delta) -> np.ndarray:
    """Cost vector counting removed nodes: ``C = delta``."""
    delta = np.asarray(delta, dtype=float).reshape(-1)
    if delta.shape != (net.n,):
        raise ValueError("delta must have one entry per node")
    _check_within(delta, net.delta_lo, net.delta_hi, "delta", lambda k: f"node {net.node_ids[k]!r}")
    return delta.copy()


__all__ = [
    "CostToGo",
    "check_feasibility",
    "compute_cost_to_go",
    "cost_to_go_lp_check",
    "coupling_residual",
    "removal_cost_vector",
    "spectral_abscissa",
]
