"""Logarithmic change of variables that turns the allocation problem convex.

    y_i   = log p_i
    u_ij  = w_ij  log(beta_hi_ij / beta_ij)
    v_i   = w_ii  log((D - delta_lo_i) / (D - delta_i))
    z_i   = wl_i  log(lambda_hi_i / lambda_i)
    sig_i = wt_i  log(tau_hi_i / tau_i)
    rho   = log(D + r)

with ``D`` the network's ``delta_ceiling``. Resource values are zero at the
zero-resource point (``beta_hi``, ``delta_lo``, ``lambda_hi``, ``tau_hi``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..model import SpreadingNetwork


@dataclass(frozen=True, eq=False)
class NaturalValues:
    p: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    lam: np.ndarray
    tau: np.ndarray
    r: float


@dataclass(frozen=True, eq=False)
class TransformedVariables:
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    sigma: np.ndarray
    rho: float


@dataclass(frozen=True, eq=False)
class ResourceBounds:
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    sigma: np.ndarray
    rho_lo: float
    rho_hi: float


def resource_bounds(net: SpreadingNetwork, r_max: float, r_min: float = 0.0) -> ResourceBounds:
    D = net.delta_ceiling
    with np.errstate(divide="ignore"):
        return ResourceBounds(
            u=net.w_beta * np.log(net.beta_hi / net.beta_lo),
            v=net.w_delta * np.log((D - net.delta_lo) / (D - net.delta_hi)),
            z=net.w_lambda * np.log(net.lambda_hi / net.lambda_lo),
            sigma=net.w_tau * np.log(net.tau_hi / net.tau_lo),
            rho_lo=float(np.log(D + r_min)),
            rho_hi=float(np.log(D + r_max)),
        )


def _log_positive(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        k = int(np.flatnonzero(~(np.atleast_1d(x) > 0))[0])
        raise DomainError(f"log of nonpositive {name} (index {k}: {np.atleast_1d(x)[k]!r})")
    return np.log(x)


def transform_variables(net: SpreadingNetwork, values, direction: str = "forward"):
    """Map ``NaturalValues`` to ``TransformedVariables`` or back (``direction='inverse'``)."""
    D = net.delta_ceiling
    if direction == "forward":
        v = values
        return TransformedVariables(
            y=_log_positive(v.p, "p"),
            u=net.w_beta * (np.log(net.beta_hi) - _log_positive(v.beta, "beta")),
            v=net.w_delta * (np.log(D - net.delta_lo) - _log_positive(D - np.asarray(v.delta), "D - delta")),
            z=net.w_lambda * (np.log(net.lambda_hi) - _log_positive(v.lam, "lambda")),
            sigma=net.w_tau * (np.log(net.tau_hi) - _log_positive(v.tau, "tau")),
            rho=float(_log_positive(D + v.r, "D + r")),
        )
    if direction == "inverse":
        t = values
        return NaturalValues(
            p=np.exp(np.asarray(t.y, dtype=float)),
            beta=net.beta_hi * np.exp(-np.asarray(t.u) / net.w_beta),
            delta=D - (D - net.delta_lo) * np.exp(-np.asarray(t.v) / net.w_delta),
            lam=net.lambda_hi * np.exp(-np.asarray(t.z) / net.w_lambda),
            tau=net.tau_hi * np.exp(-np.asarray(t.sigma) / net.w_tau),
            r=float(np.exp(t.rho) - D),
        )
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def group_logsumexp(values: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
    """``log(sum(exp(values[groups == g])))`` for every group; empty groups give ``-inf``."""
    values = np.asarray(values, dtype=float)
    mx = np.full(n_groups, -np.inf)
    np.maximum.at(mx, groups, values)
    shift = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        s = np.bincount(groups, weights=np.exp(values - shift[groups]), minlength=n_groups)
    with np.errstate(divide="ignore"):
        out = shift + np.log(s)
    out[mx == -np.inf] = -np.inf
    out[mx == np.inf] = np.inf
    return out


def lse_residuals(tv: TransformedVariables, net: SpreadingNetwork, C=None) -> np.ndarray:
    """Per-node coupling constraint ``q_j``; ``q_j <= 0`` iff column ``j`` of
    ``p^T A - r p^T <= -C`` holds for the inverse-transformed variables.

    Nodes with ``c_j = 0`` simply lack the cost term. A node with ``p_j = 0``
    (``y_j = -inf``) gets ``-inf`` when its constraint holds and ``+inf`` otherwise.
    """
    C = net.cost if C is None else np.broadcast_to(np.asarray(C, dtype=float), (net.n,))
    D = net.delta_ceiling
    y = np.asarray(tv.y, dtype=float)
    rho = float(tv.rho)
    n = net.n
    dead = np.isneginf(y)
    ysafe = np.where(dead, 0.0, y)
    with np.errstate(divide="ignore"):
        edge_vals = (y[net.dst] + np.log(net.beta_hi) - np.asarray(tv.u) / net.w_beta
                     - ysafe[net.src] - rho)
        delta_vals = np.log(D - net.delta_lo) - np.asarray(tv.v) / net.w_delta - rho
        logc = np.log(C)
    has_c = C > 0
    vals = np.concatenate([edge_vals, delta_vals, (logc - ysafe - rho)[has_c]])
    groups = np.concatenate([net.src, np.arange(n), np.flatnonzero(has_c)])
    q = group_logsumexp(vals, groups, n)
    if dead.any():
        # p_j = 0: constraint reads sum_i p_i beta_ij + c_j <= 0
        beta = net.beta_hi * np.exp(-np.asarray(tv.u) / net.w_beta)
        inflow = np.bincount(net.src, weights=np.exp(y[net.dst]) * beta, minlength=n) + C
        q[dead] = np.where(inflow[dead] > 0, np.inf, -np.inf)
    return q
