"""Reweighted l1 iterations that cut the number of nonzero allocations.

Each pass replaces the sum of a channel's allocations with
``sum_k x_k / (x_k_prev + eps)``, which approximates counting nonzeros.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .allocate.problem import AllocationProblem, ConvexProgram, Variant, assemble_problem
from .allocate.solve import (NONZERO_THRESHOLD, AllocationResult, build_result, solve_allocation,
                             verify_result)
from .errors import InfeasibleProblemError, SolverError

log = logging.getLogger(__name__)

CHANNEL_COLUMNS = {"beta": "u", "delta": "v", "lambda": "z", "tau": "sigma", "vaccination": "s"}
MODES = ("objective", "replace", "join")


@dataclass(frozen=True)
class SparsifyConfig:
    """Settings of the reweighting loop.

    ``mode`` picks how the reweighted sum enters: ``objective`` minimises it
    at no more than the base risk, ``replace`` swaps the channel budget rows
    for ``sum <= M`` and ``join`` adds that row next to the budgets.
    """

    eps: float | None = None
    max_iters: int = 10
    threshold: float = NONZERO_THRESHOLD
    M: float | None = None
    mode: str = "objective"
    channels: tuple[str, ...] = ("beta", "delta", "lambda", "tau", "vaccination")
    risk_rtol: float = 1e-6
    backend: str = "auto"

    def __post_init__(self):
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode != "objective" and self.M is None:
            raise ValueError(f"mode {self.mode!r} needs M")
        unknown = set(self.channels) - set(CHANNEL_COLUMNS)
        if unknown:
            raise ValueError(f"unknown channels {sorted(unknown)}")


@dataclass(eq=False)
class SparsifyRun:
    iterates: list[AllocationResult]
    log: list[dict] = field(default_factory=list)
    converged: bool = False

    @property
    def final(self) -> AllocationResult:
        return self.iterates[-1]

    @property
    def base(self) -> AllocationResult:
        return self.iterates[0]


def reweight_weights(u_prev, cfg: SparsifyConfig | None = None, eps: float | None = None) -> np.ndarray:
    """Multipliers ``1 / (u_prev + eps)``."""
    u_prev = np.asarray(u_prev, dtype=float)
    if np.any(u_prev < 0):
        raise ValueError("previous allocations must be nonnegative")
    if eps is None:
        eps = cfg.eps if cfg is not None and cfg.eps is not None else None
    if eps is None:
        raise ValueError("eps must be given directly or through the config")
    return 1.0 / (u_prev + eps)


def reweighted_sum(u, u_prev, eps: float) -> float:
    return float(np.sum(np.asarray(u) * reweight_weights(u_prev, eps=eps)))


def _columns(prog: ConvexProgram, channels) -> np.ndarray:
    L = prog.layout
    cols = [getattr(L, CHANNEL_COLUMNS[ch]) for ch in channels]
    cols = np.concatenate([c[c >= 0] for c in cols]) if cols else np.zeros(0, dtype=np.int64)
    return np.unique(cols.astype(np.int64))


def _count(res: AllocationResult, channels, threshold) -> dict[str, int]:
    tv = res.transformed
    arrays = {"beta": tv.u, "delta": tv.v, "lambda": tv.z, "tau": tv.sigma,
              "vaccination": np.array(list(res.vaccination.values()))}
    return {ch: int(np.sum(arrays[ch] > threshold)) for ch in channels}


def _support(res: AllocationResult, prog: ConvexProgram, cols, threshold) -> frozenset:
    return frozenset(int(c) for c in cols if res.x[c] > threshold)


def _reweighted_program(prog: ConvexProgram, base_x: np.ndarray, cols: np.ndarray,
                        weights: np.ndarray, cfg: SparsifyConfig) -> ConvexProgram:
    spec = prog.problem
    G, h, kinds = prog.G, prog.h, list(prog.row_kind)
    wvec = np.zeros(prog.n_vars)
    wvec[cols] = weights / weights.max()
    extra_rows, extra_h, extra_kinds = [], [], []
    if cfg.mode == "objective":
        c = wvec
        if spec.variant is not Variant.MIN_RESOURCES_RISK_CAP:
            # keep the original objective (log risk or rho) at its base value
            slack = 0.1 * cfg.risk_rtol
            extra_rows.append(prog.c)
            extra_h.append(float(prog.c @ base_x) + slack)
            extra_kinds.append("base-objective")
    else:
        c = prog.c
        row = np.zeros(prog.n_vars)
        row[cols] = weights
        extra_rows.append(row)
        extra_h.append(float(cfg.M))
        extra_kinds.append("budget:reweighted")
        if cfg.mode == "replace":
            chans = {f"budget:{ch}" for ch in cfg.channels}
            keep = np.array([k not in chans for k in kinds], dtype=bool)
            G, h = G[keep], h[keep]
            kinds = [k for k, flag in zip(kinds, keep) if flag]
    if extra_rows:
        G = sp.vstack([G, sp.csr_matrix(np.vstack(extra_rows))]).tocsr()
        h = np.concatenate([h, extra_h])
        kinds = kinds + extra_kinds
    x_init = base_x.copy()
    return replace(prog, c=c, G=G, h=h, row_kind=kinds, x_init=x_init)


def sparsify_allocation(spec: AllocationProblem, base: AllocationResult,
                        cfg: SparsifyConfig | None = None, prog: ConvexProgram | None = None) -> SparsifyRun:
    """Run reweighted passes starting from ``base``.

    An iterate is accepted only if it satisfies every constraint of the
    original (unweighted) problem, its risk is within ``risk_rtol`` of the
    base risk and it has no more nonzeros than the last accepted iterate.
    """
    cfg = cfg or SparsifyConfig()
    prog = prog or assemble_problem(spec)
    channels = [ch for ch in cfg.channels]
    cols = _columns(prog, channels)
    run = SparsifyRun(iterates=[base])
    count0 = _count(base, channels, cfg.threshold)
    run.log.append({"iteration": 0, "nonzero": count0, "risk": base.risk, "accepted": True})
    log.info("iteration 0: nonzero %s, risk %.12g", count0, base.risk)
    if cols.size == 0:
        run.converged = True
        return run
    eps = cfg.eps if cfg.eps is not None else 1e-4 * float(np.mean(prog.ub[cols]))
    if not np.isfinite(eps) or eps <= 0:
        eps = 1e-4
    prev_x = base.x
    last_support = _support(base, prog, cols, cfg.threshold)
    last_total = len(last_support)
    for k in range(1, cfg.max_iters + 1):
        weights = reweight_weights(np.maximum(prev_x[cols], 0.0), eps=eps)
        sub = _reweighted_program(prog, base.x, cols, weights, cfg)
        try:
            trial = solve_allocation(sub, backend=cfg.backend, check=False)
        except (InfeasibleProblemError, SolverError) as exc:
            warnings.warn(f"reweighted pass {k} failed ({exc}); keeping the last feasible iterate")
            run.log.append({"iteration": k, "nonzero": None, "risk": None, "accepted": False,
                            "reason": str(exc)})
            break
        res = build_result(prog, trial.x, status=trial.status, iterations=trial.iterations,
                           solve_time=trial.solve_time, backend=trial.backend, check=False)
        issues = verify_result(prog, res)
        base_risk = base.risk
        if res.risk > base_risk * (1.0 + cfg.risk_rtol) + 1e-300:
            issues.append(f"risk {res.risk:.12g} above base {base_risk:.12g}")
        support = _support(res, prog, cols, cfg.threshold)
        counts = _count(res, channels, cfg.threshold)
        entry = {"iteration": k, "nonzero": counts, "risk": res.risk}
        if issues:
            entry.update(accepted=False, reason="; ".join(issues))
            run.log.append(entry)
            log.info("iteration %d: rejected (%s)", k, entry["reason"])
            if any(not s.startswith("risk") for s in issues) or cfg.mode != "objective":
                warnings.warn(f"reweighted pass {k} is infeasible for the original problem "
                              f"({entry['reason']}); keeping the last feasible iterate")
                break
            prev_x = res.x
            continue
        prev_x = res.x
        if len(support) > last_total:
            entry.update(accepted=False, reason="more nonzeros than the last accepted iterate")
            run.log.append(entry)
            continue
        entry["accepted"] = True
        run.log.append(entry)
        run.iterates.append(res)
        log.info("iteration %d: nonzero %s, risk %.12g", k, counts, res.risk)
        if support == last_support:
            run.converged = True
            break
        last_support, last_total = support, len(support)
    return run


__all__ = ["SparsifyConfig", "SparsifyRun", "reweight_weights", "reweighted_sum",
           "sparsify_allocation"]
