"""Risk maps, maximum revisit intervals and schedule audits.

Risk of an undetected outbreak at node ``i`` is ``p_i * lambda_i * tau_i``:
impact times the linearised probability of at least one outbreak during
a revisit interval of length ``tau_i``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import ScheduleError

GAP_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class RiskAssessment:
    p: np.ndarray
    lam: np.ndarray
    tau: np.ndarray
    risk: np.ndarray

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.risk))

    @property
    def max(self) -> float:
        return float(self.risk.max(initial=0.0))

    @property
    def revisit_rate(self) -> np.ndarray:
        return 1.0 / self.tau


@dataclass(frozen=True)
class SurveillanceConfig:
    """Risk budget ``R_max`` and residual risk ``eps_R`` left right after a visit."""

    R_max: float
    eps_R: float | None = None

    def __post_init__(self):
        if not self.R_max > 0:
            raise ValueError(f"R_max must be > 0, got {self.R_max}")
        if self.eps_R is None:
            object.__setattr__(self, "eps_R", 1e-6 * self.R_max)
        if not self.eps_R >= 0:
            raise ValueError(f"eps_R must be >= 0, got {self.eps_R}")


@dataclass(frozen=True)
class Violation:
    node: int
    start: float
    end: float
    gap: float
    limit: float

    def __str__(self) -> str:
        return (f"node {self.node}: gap {self.gap:.12g} on [{self.start:.12g}, {self.end:.12g}] "
                f"exceeds max interval {self.limit:.12g}")


def _vectors(*arrays):
    out = [np.atleast_1d(np.asarray(a, dtype=float)) for a in arrays]
    shape = np.broadcast_shapes(*(a.shape for a in out))
    if any(a.shape not in (shape, (1,)) for a in out):
        raise ValueError(f"length mismatch: {[a.shape for a in out]}")
    return [np.broadcast_to(a, shape).astype(float) for a in out]


def risk_map(p, lam, tau) -> RiskAssessment:
    p, lam, tau = _vectors(p, lam, tau)
    if np.any(p < 0) or np.any(lam < 0) or np.any(tau < 0):
        raise ValueError("p, lambda and tau must be nonnegative")
    return RiskAssessment(p=p, lam=lam, tau=tau, risk=p * lam * tau)


def max_revisit_intervals(p, lam, cfg: SurveillanceConfig) -> np.ndarray:
    """Largest revisit interval per node keeping the risk at or below ``R_max``."""
    p, lam = _vectors(p, lam)
    if np.any(p < 0) or np.any(lam < 0):
        raise ValueError("p and lambda must be nonnegative")
    denom = p * lam + cfg.eps_R
    if np.any(denom <= 0):
        bad = np.flatnonzero(denom <= 0)
        raise ZeroDivisionError(
            f"p*lambda + eps_R = 0 at nodes {bad.tolist()[:10]}; use eps_R > 0 to keep "
            "revisit intervals finite"
        )
    return cfg.R_max / denom


def outbreak_probability(lam, t):
    """Exact ``1 - exp(-lambda t)`` and its linear bound ``lambda t``."""
    lam, t = np.asarray(lam, dtype=float), np.asarray(t, dtype=float)
    if np.any(lam < 0) or np.any(t < 0):
        raise ValueError("lambda and t must be nonnegative")
    x = lam * t
    exact = -np.expm1(-x)
    if exact.ndim == 0:
        return float(exact), float(x)
    return exact, x


def audit_schedule(
    visits: Sequence[Sequence[float]],
    p,
    lam,
    cfg: SurveillanceConfig,
    horizon: float,
) -> list[Violation]:
    """Every gap (including ``0 -> first`` and ``last -> horizon``) longer than allowed.

    An empty list certifies ``R_i <= R_max`` on ``[0, horizon]`` for all nodes.
    """
    tau = max_revisit_intervals(p, lam, cfg)
    if len(visits) != tau.shape[0]:
        raise ValueError(f"visits given for {len(visits)} nodes, expected {tau.shape[0]}")
    out: list[Violation] = []
    for i, times in enumerate(visits):
        times = np.asarray(times, dtype=float).reshape(-1)
        if times.size and np.any(np.diff(times) < 0):
            raise ScheduleError(f"visit times for node {i} are not sorted")
        if times.size and (times[0] < 0 or times[-1] > horizon):
            raise ScheduleError(f"visit times for node {i} fall outside [0, {horizon}]")
        marks = np.concatenate([[0.0], times, [horizon]])
        gaps = np.diff(marks)
        limit = tau[i] * (1.0 + GAP_RTOL)
        for k in np.flatnonzero(gaps > limit):
            out.append(Violation(i, float(marks[k]), float(marks[k + 1]), float(gaps[k]),
                                 float(tau[i])))
    return out


def periodic_schedule(tau, horizon: float, phase=None) -> list[np.ndarray]:
    """Visit node ``i`` every ``tau_i`` starting at ``phase_i`` (default ``tau_i``)."""
    tau = np.asarray(tau, dtype=float)
    phase = tau if phase is None else np.broadcast_to(np.asarray(phase, dtype=float), tau.shape)
    out = []
    for t_i, ph in zip(tau, phase):
        k = np.arange(int(np.floor((horizon - ph) / t_i + 1e-9)) + 1) if ph <= horizon else np.arange(0)
        out.append(ph + k * t_i)
    return out


def write_revisit_csv(fh: IO[str], node_ids, p, lam, tau, risk=None) -> None:
    """Columns ``node,p,lambda,tau_max,revisit_rate,risk`` at 12 significant digits."""
    p, lam, tau = _vectors(p, lam, tau)
    risk = p * lam * tau if risk is None else np.asarray(risk, dtype=float)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["node", "p", "lambda", "tau_max", "revisit_rate", "risk"])
    for k, nid in enumerate(node_ids):
        w.writerow([nid] + [f"{v:.12g}" for v in (p[k], lam[k], tau[k], 1.0 / tau[k], risk[k])])
