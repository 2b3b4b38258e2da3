"""Stochastic SIR, mean-field and linear integrators, Poisson sampling and
Monte Carlo harnesses for the risk bounds.

The stochastic model is sampled in discrete time: per step a susceptible node
is infected with probability ``sum_j beta_ij X_j dt`` and an infected node is
removed with probability ``delta_i dt``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
import scipy.sparse as sp

from .costgo import compute_cost_to_go
from .errors import ScheduleError, TimestepError
from .model import SpreadingNetwork, SystemMatrix, matrix_from_rates
from .surveillance import SurveillanceConfig, audit_schedule, max_revisit_intervals, periodic_schedule

WARN_STEP_PROB = 0.2
BOX_TOL = 1e-6


@dataclass(eq=False)
class SimulationTrace:
    """States on a time grid. ``infected``/``removed`` have shape ``(len(t), n)``."""

    t: np.ndarray
    infected: np.ndarray
    removed: np.ndarray | None
    kind: str
    dt: float
    seed: int | None = None

    def write_csv(self, fh: IO[str]) -> None:
        """Long format ``t,node,X,Z``."""
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "node", "X", "Z"])
        Z = self.removed if self.removed is not None else np.zeros_like(self.infected)
        for k, tk in enumerate(self.t):
            for i in range(self.infected.shape[1]):
                w.writerow([f"{tk:.12g}", i, f"{self.infected[k, i]:.12g}", f"{Z[k, i]:.12g}"])


@dataclass(eq=False)
class MonteCarloStats:
    runs: int
    t: np.ndarray
    mean_infected: np.ndarray
    costs: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.costs.mean())

    @property
    def se(self) -> float:
        if self.runs < 2:
            return float("nan")
        return float(self.costs.std(ddof=1) / math.sqrt(self.runs))

    def to_json(self) -> dict:
        return {"runs": self.runs, "mean": self.mean, "se": self.se,
                "t": self.t.tolist(), "mean_infected_fraction": self.mean_infected.tolist()}


@dataclass(frozen=True, eq=False)
class PoissonSample:
    rate: float
    horizon: float
    times: np.ndarray

    def count(self, t) -> np.ndarray | int:
        """``N(t)``: number of events in ``[0, t]``."""
        out = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        return int(out) if np.ndim(out) == 0 else out


# ----------------------------------------------------------------- helpers


def _rates(net: SpreadingNetwork, beta, delta):
    beta = net.beta_hi if beta is None else np.broadcast_to(np.asarray(beta, dtype=float), (net.m,))
    delta = net.delta_lo if delta is None else np.broadcast_to(np.asarray(delta, dtype=float), (net.n,))
    return np.asarray(beta, dtype=float), np.asarray(delta, dtype=float)


def _spread_matrix(net: SpreadingNetwork, beta) -> sp.csr_matrix:
    """``B[i, j] = beta_ij``: infection pressure on ``i`` is ``B @ X``."""
    return sp.csr_matrix((beta, (net.dst, net.src)), shape=(net.n, net.n))


def default_dt(net: SpreadingNetwork, beta=None, delta=None) -> float:
    """``0.01 / max(delta, row sum of beta)`` over all nodes."""
    beta, delta = _rates(net, beta, delta)
    row = np.bincount(net.dst, weights=beta, minlength=net.n)
    scale = max(float(delta.max(initial=0.0)), float(row.max(initial=0.0)))
    return 0.01 / scale if scale > 0 else 0.01


def _step_grid(T: float, dt: float) -> np.ndarray:
    steps = int(math.ceil(T / dt - 1e-9))
    return np.linspace(0.0, steps * dt, steps + 1)


def _check_probability(pmax: float, dt: float, warned: list) -> None:
    if pmax > 1.0:
        raise TimestepError(f"per-step probability {pmax:.3g} > 1 at dt={dt:.3g}; reduce dt")
    if pmax > WARN_STEP_PROB and not warned:
        warned.append(True)
        warnings.warn(f"per-step probability {pmax:.3g} exceeds {WARN_STEP_PROB} at dt={dt:.3g}")


def _initial_set(x0, n) -> np.ndarray:
    """Boolean mask from a mask or an index list."""
    x0 = np.asarray(x0)
    if x0.dtype == bool:
        if x0.shape != (n,):
            raise ValueError(f"infected mask must have length {n}")
        return x0.copy()
    idx = np.atleast_1d(x0).astype(np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("initially infected node out of range")
    out = np.zeros(n, dtype=bool)
    out[idx] = True
    return out


# ----------------------------------------------------------------- stochastic


def _sir_batch(B: sp.csr_matrix, delta, X, Z, dt, steps, rng, *, on_step=None):
    """Advance ``runs`` independent chains in place. ``X``, ``Z`` are ``(runs, n)``."""
    warned: list = []
    pd = delta * dt
    _check_probability(float(pd.max(initial=0.0)), dt, warned)
    Bt = B.T.tocsr()
    for k in range(steps):
        pressure = (X.astype(float) @ Bt) * dt if X.any() else np.zeros(X.shape)
        _check_probability(float(pressure.max(initial=0.0)), dt, warned)
        u1 = rng.random(X.shape)
        u2 = rng.random(X.shape)
        S = ~(X | Z)
        new_inf = S & (u1 < pressure)
        new_rem = X & (u2 < pd)
        X &= ~new_rem
        Z |= new_rem
        X |= new_inf
        if on_step is not None and on_step(k + 1, X, Z) is False:
            break


def run_stochastic(net: SpreadingNetwork, beta=None, delta=None, x0=(0,), T: float = 10.0,
                   dt: float | None = None, seed: int = 0) -> SimulationTrace:
    """One stochastic SIR realisation from the infected set ``x0``."""
    beta, delta = _rates(net, beta, delta)
    dt = default_dt(net, beta, delta) if dt is None else float(dt)
    t = _step_grid(T, dt)
    n = net.n
    X = _initial_set(x0, n)[None, :].copy()
    Z = np.zeros_like(X)
    Xs = np.zeros((t.size, n), dtype=np.int8)
    Zs = np.zeros((t.size, n), dtype=np.int8)
    Xs[0], Zs[0] = X[0], Z[0]

    def record(k, X_, Z_):
        Xs[k], Zs[k] = X_[0], Z_[0]

    rng = np.random.default_rng(seed)
    _sir_batch(_spread_matrix(net, beta), delta, X, Z, dt, t.size - 1, rng, on_step=record)
    return SimulationTrace(t=t, infected=Xs, removed=Zs, kind="stochastic", dt=dt, seed=seed)


def _trapezoid_weights(t: np.ndarray, r: float) -> np.ndarray:
    w = np.zeros(t.size)
    h = np.diff(t)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w * np.exp(-r * t)


def stochastic_costs(net: SpreadingNetwork, beta, delta, x0, C, r: float, runs: int, *, T=None,
                     dt=None, seed: int = 0, batch: int = 500) -> MonteCarloStats:
    """Discounted cost ``int exp(-rt) C.X(t) dt`` for ``runs`` independent chains."""
    beta, delta = _rates(net, beta, delta)
    dt = default_dt(net, beta, delta) if dt is None else float(dt)
    T = _default_horizon(r) if T is None else float(T)
    t = _step_grid(T, dt)
    wts = _trapezoid_weights(t, r)
    C = np.broadcast_to(np.asarray(C, dtype=float), (net.n,))
    B = _spread_matrix(net, beta)
    rng = np.random.default_rng(seed)
    x_init = _initial_set(x0, net.n)
    costs = np.zeros(runs)
    mean_inf = np.zeros(t.size)
    done = 0
    while done < runs:
        b = min(batch, runs - done)
        X = np.repeat(x_init[None, :], b, axis=0)
        Z = np.zeros_like(X)
        acc = wts[0] * (X.astype(float) @ C)
        mean_inf[0] += X.sum() / net.n

        def on_step(k, X_, Z_):
            nonlocal acc
            acc = acc + wts[k] * (X_.astype(float) @ C)
            mean_inf[k] += X_.sum() / net.n

        _sir_batch(B, delta, X, Z, dt, t.size - 1, rng, on_step=on_step)
        costs[done:done + b] = acc
        done += b
    return MonteCarloStats(runs=runs, t=t, mean_infected=mean_inf / runs, costs=costs)


def _default_horizon(r: float) -> float:
    return 20.0 / r if r > 0 else 200.0


# ----------------------------------------------------------------- ODEs


def _rk4(f, y0, t, check=None):
    out = np.zeros((t.size,) + np.shape(y0))
    y = np.asarray(y0, dtype=float).copy()
    out[0] = y
    for k in range(t.size - 1):
        h = t[k + 1] - t[k]
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if check is not None:
            check(y, t[k + 1])
        out[k + 1] = y
    return out


def integrate_meanfield(net: SpreadingNetwork, beta=None, delta=None, chi0=None, z0=None,
                        T: float = 10.0, dt: float | None = None) -> SimulationTrace:
    """RK4 for ``chi' = (1 - chi - z) B chi - delta chi``, ``z' = delta chi``."""
    beta, delta = _rates(net, beta, delta)
    n = net.n
    chi0 = np.zeros(n) if chi0 is None else np.broadcast_to(np.asarray(chi0, dtype=float), (n,))
    z0 = np.zeros(n) if z0 is None else np.broadcast_to(np.asarray(z0, dtype=float), (n,))
    if np.any(chi0 < 0) or np.any(z0 < 0) or np.any(chi0 + z0 > 1 + 1e-12):
        raise ValueError("initial state must satisfy chi, z >= 0 and chi + z <= 1")
    dt = default_dt(net, beta, delta) if dt is None else float(dt)
    t = _step_grid(T, dt)
    B = _spread_matrix(net, beta)

    def f(y):
        chi, z = y[:n], y[n:]
        return np.concatenate([(1.0 - chi - z) * (B @ chi) - delta * chi, delta * chi])

    def check(y, tk):
        chi, z = y[:n], y[n:]
        lo = min(chi.min(initial=0.0), z.min(initial=0.0))
        hi = (chi + z).max(initial=0.0)
        if lo < -BOX_TOL or hi > 1 + BOX_TOL:
            raise TimestepError(f"mean-field state left [0, 1] at t={tk:.6g}; reduce dt")

    Y = _rk4(f, np.concatenate([chi0, z0]), t, check)
    return SimulationTrace(t=t, infected=Y[:, :n], removed=Y[:, n:], kind="meanfield", dt=dt)


def integrate_linear(A, x0, T: float = 10.0, dt: float = 0.01) -> SimulationTrace:
    """RK4 for ``x' = A x``."""
    M = A.matrix if isinstance(A, SystemMatrix) else sp.csr_matrix(A)
    M = sp.csr_matrix(M)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if np.any(x0 < 0):
        raise ValueError("x0 must be nonnegative")
    t = _step_grid(T, dt)

    def check(y, tk):
        if y.min(initial=0.0) < -BOX_TOL * (1.0 + np.abs(y).max(initial=0.0)):
            raise TimestepError(f"linear state lost positivity at t={tk:.6g}; reduce dt")

    X = _rk4(lambda y: M @ y, x0, t, check)
    return SimulationTrace(t=t, infected=X, removed=None, kind="linear", dt=float(dt))


def discounted_cost(trace: SimulationTrace, C, r: float) -> float:
    """Trapezoid rule for ``int exp(-rt) C.state(t) dt`` over the trace."""
    if r < 0:
        raise ValueError("r must be >= 0")
    C = np.broadcast_to(np.asarray(C, dtype=float), (trace.infected.shape[1],))
    vals = trace.infected.astype(float) @ C
    T = float(trace.t[-1])
    scale = np.abs(vals).max(initial=0.0)
    if scale > 0 and math.exp(-r * T) * abs(vals[-1]) > 1e-3 * scale:
        warnings.warn(f"horizon T={T:.4g} is short for r={r:.4g}: discounted tail is not negligible")
    return float(np.sum(_trapezoid_weights(trace.t, r) * vals))


# ----------------------------------------------------------------- validation


@dataclass(eq=False)
class OrderingReport:
    runs: int
    stochastic_mean: float
    stochastic_se: float
    meanfield: float
    linear: float
    cost_to_go: float
    stochastic_ok: bool
    meanfield_ok: bool

    @property
    def holds(self) -> bool:
        return self.stochastic_ok and self.meanfield_ok

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("runs", "stochastic_mean", "stochastic_se", "meanfield",
                                              "linear", "cost_to_go", "stochastic_ok", "meanfield_ok")} | {
            "holds": self.holds}


def monte_carlo_validate(net: SpreadingNetwork, beta=None, delta=None, x0=(0,), C=None,
                         r: float = 1.0, runs: int = 1000, seed: int = 0, *, dt=None,
                         T=None) -> OrderingReport:
    """Stochastic vs mean-field vs linear discounted cost from the same start."""
    if runs < 100:
        raise ValueError("monte_carlo_validate needs at least 100 runs")
    beta, delta = _rates(net, beta, delta)
    C = net.cost if C is None else np.broadcast_to(np.asarray(C, dtype=float), (net.n,))
    dt = default_dt(net, beta, delta) if dt is None else float(dt)
    T = _default_horizon(r) if T is None else float(T)
    x_init = _initial_set(x0, net.n).astype(float)
    stats = stochastic_costs(net, beta, delta, x_init.astype(bool), C, r, runs, T=T, dt=dt, seed=seed)
    mf = discounted_cost(integrate_meanfield(net, beta, delta, x_init, None, T, dt), C, r)
    A = matrix_from_rates(net.n, net.src, net.dst, beta, delta)
    lin = discounted_cost(integrate_linear(A, x_init, T, dt), C, r)
    try:
        p = compute_cost_to_go(A, C, r).p
        ctg = float(p @ x_init)
    except Exception:
        ctg = float("nan")
    se = stats.se
    return OrderingReport(
        runs=runs, stochastic_mean=stats.mean, stochastic_se=se, meanfield=mf, linear=lin,
        cost_to_go=ctg, stochastic_ok=bool(stats.mean <= mf + 3 * se + 1e-12),
        meanfield_ok=bool(mf <= lin + 1e-6),
    )


def sample_poisson_outbreaks(lam: float, horizon: float, seed: int | np.random.Generator = 0) -> PoissonSample:
    """Event times of a rate-``lam`` Poisson process on ``[0, horizon]`` (exponential gaps)."""
    if lam < 0 or horizon < 0:
        raise ValueError("rate and horizon must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if lam == 0 or horizon == 0:
        return PoissonSample(float(lam), float(horizon), np.zeros(0))
    times = []
    t = 0.0
    chunk = max(16, int(lam * horizon * 1.1) + 16)
    while True:
        gaps = rng.exponential(1.0 / lam, chunk)
        cum = t + np.cumsum(gaps)
        keep = cum[cum <= horizon]
        times.append(keep)
        if keep.size < chunk:
            break
        t = float(cum[-1])
    return PoissonSample(float(lam), float(horizon), np.concatenate(times))


# ----------------------------------------------------------------- detection


@dataclass(eq=False)
class DetectionReport:
    """Per-node empirical risk per revisit interval."""

    mean_risk: np.ndarray
    se: np.ndarray
    intervals: np.ndarray
    R_max: float
    compliant_schedule: bool

    @property
    def max_risk(self) -> float:
        return float(self.mean_risk.max(initial=0.0))

    @property
    def within_bound(self) -> bool:
        return bool(np.all(self.mean_risk <= self.R_max + 3 * self.se))

    @property
    def exceeds_bound(self) -> bool:
        return bool(np.any(self.mean_risk > self.R_max + 3 * self.se))


def detection_experiment(net: SpreadingNetwork | None, p, lam, schedule: Sequence[Sequence[float]],
                         cfg: SurveillanceConfig, runs: int = 100, seed: int = 0) -> DetectionReport:
    """Poisson outbreaks per node, each detected at the node's next visit.

    The realised risk of an interval is ``p_i`` if at least one outbreak
    started in it and 0 otherwise; intervals include ``0 -> first visit``.
    The time after the last visit is ignored (nothing detects it).
    """
    p = np.asarray(p, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if net is not None and p.size != net.n:
        raise ScheduleError(f"p has {p.size} entries, network has {net.n} nodes")
    if len(schedule) != p.size:
        raise ScheduleError(f"schedule covers {len(schedule)} nodes, expected {p.size}")
    schedule = [np.asarray(v, dtype=float).reshape(-1) for v in schedule]
    compliant = True
    for i, v in enumerate(schedule):
        if v.size and np.any(np.diff(v) < 0):
            raise ScheduleError(f"visit times for node {i} are not sorted")
        if v.size and v[0] < 0:
            raise ScheduleError(f"visit times for node {i} start before 0")
        # the time after the last visit is never charged, so audit up to it
        if v.size and audit_schedule([v], p[i:i + 1], lam[i:i + 1], cfg, float(v[-1])):
            compliant = False
    rng = np.random.default_rng(seed)
    mean = np.zeros(p.size)
    se = np.zeros(p.size)
    count = np.zeros(p.size, dtype=np.int64)
    for i in range(p.size):
        visits = np.asarray(schedule[i], dtype=float)
        if visits.size == 0:
            continue
        marks = np.concatenate([[0.0], visits])
        hits = []
        for _ in range(runs):
            ev = sample_poisson_outbreaks(lam[i], float(visits[-1]), rng).times
            occurred = np.zeros(visits.size, dtype=bool)
            if ev.size:
                k = np.searchsorted(marks, ev, side="left") - 1
                occurred[np.clip(k, 0, visits.size - 1)] = True
            hits.append(occurred)
        h = p[i] * np.concatenate(hits)
        count[i] = h.size
        mean[i] = h.mean()
        se[i] = h.std(ddof=1) / math.sqrt(h.size) if h.size > 1 else 0.0
    return DetectionReport(mean_risk=mean, se=se, intervals=count, R_max=cfg.R_max,
                           compliant_schedule=compliant)


@dataclass(eq=False)
class ResponseReport:
    """Outcome of seeded outbreaks spreading until the first visit of a burning cell."""

    costs: np.ndarray
    detection_delay: np.ndarray
    warning_time: np.ndarray
    outbreak_rate: float

    @property
    def mean(self) -> float:
        return float(self.costs.mean())

    @property
    def se(self) -> float:
        return float(self.costs.std(ddof=1) / math.sqrt(self.costs.size))

    def to_json(self) -> dict:
        return {"runs": int(self.costs.size), "mean_cost": self.mean, "se": self.se,
                "outbreak_rate": self.outbreak_rate,
                "mean_detection_delay": float(self.detection_delay.mean()),
                "median_warning_time": float(np.median(self.warning_time))}


def outbreak_response_experiment(net: SpreadingNetwork, beta, delta, lam, tau, phase, C, r: float,
                                 runs: int = 200, seed: int = 0, *, dt: float | None = None,
                                 max_time: float | None = None, high_cost: float = 0.25,
                                 footprint: int = 1) -> ResponseReport:
    """Simulate one outbreak per run and charge its discounted cost until detection.

    The ignition cell is drawn with probability proportional to ``lam`` and
    the ignition time uniformly over one cycle of the slowest visit period.
    Node ``i`` is visited at ``phase_i + k tau_i``; an outbreak is detected at
    the first visit of a burning cell. On a grid with ``footprint > 1`` a visit
    covers a ``footprint x footprint`` block and the block is visited as often
    as its most demanding cell. The realised cost of a run is its discounted
    cost times the total outbreak rate, which estimates the expected cost per
    unit time. After detection the fire keeps spreading unchecked only to
    record the warning time until it reaches a cell with cost ``>= high_cost``.
    """
    beta, delta = _rates(net, beta, delta)
    lam = np.asarray(lam, dtype=float)
    tau = np.asarray(tau, dtype=float).copy()
    phase = np.broadcast_to(np.asarray(phase, dtype=float), tau.shape).copy()
    C = np.broadcast_to(np.asarray(C, dtype=float), (net.n,))
    if footprint > 1:
        if net.grid_shape is None:
            raise ValueError("footprint needs a grid network")
        h, w = net.grid_shape
        rows, cols = np.divmod(np.arange(net.n), w)
        block = (rows // footprint) * ((w + footprint - 1) // footprint) + cols // footprint
        best = np.full(block.max() + 1, np.inf)
        np.minimum.at(best, block, tau)
        arg = np.zeros(block.max() + 1, dtype=np.int64)
        for i in np.argsort(-tau):
            arg[block[i]] = i
        tau = best[block]
        phase = phase[arg[block]]
    if dt is None:
        row = np.bincount(net.dst, weights=beta, minlength=net.n)
        dt = 0.1 / max(float(row.max(initial=0.0)), float(delta.max(initial=0.0)), 1e-12)
    cycle = float(tau.max())
    max_time = cycle + 10.0 * cycle if max_time is None else float(max_time)
    rng = np.random.default_rng(seed)
    Lam = float(lam.sum())
    ign = rng.choice(net.n, size=runs, p=lam / Lam)
    t0 = rng.uniform(0.0, cycle, size=runs)
    B = _spread_matrix(net, beta)
    X = np.zeros((runs, net.n), dtype=bool)
    Z = np.zeros_like(X)
    started = np.zeros(runs, dtype=bool)
    detected = np.full(runs, np.nan)
    reached = np.full(runs, np.nan)
    cost = np.zeros(runs)
    hc = C >= high_cost
    steps = int(math.ceil((cycle + max_time) / dt))
    warned: list = []
    pd = delta * dt
    _check_probability(float(pd.max(initial=0.0)), dt, warned)
    Bt = B.T.tocsr()
    t = 0.0
    for k in range(steps):
        t_next = t + dt
        start_now = (~started) & (t0 < t_next)
        if start_now.any():
            X[start_now, ign[start_now]] = True
            started |= start_now
        # visits in (t, t_next]
        visited = np.floor((t_next - phase) / tau) > np.floor((t - phase) / tau)
        visited &= t_next >= phase
        active = started & np.isnan(detected)
        if visited.any():
            hit = (X[:, visited]).any(axis=1) & active
            detected[hit] = t_next
        burning = X.astype(float)
        live = started & np.isnan(detected)
        if live.any():
            rate = burning[live] @ C
            cost[live] += dt * np.exp(-r * np.maximum(t - t0[live], 0.0)) * rate
        newly = started & np.isnan(reached) & (X[:, hc].any(axis=1) if hc.any() else False)
        reached[newly] = t_next
        # a run is finished once its fire is out or it has been both detected and
        # has reached a high-cost cell
        burning_any = X.any(axis=1)
        if np.all(started & (~burning_any | (~np.isnan(detected) & ~np.isnan(reached)))):
            break
        pressure = (burning @ Bt) * dt
        _check_probability(float(pressure.max(initial=0.0)), dt, warned)
        S = ~(X | Z)
        new_inf = S & (rng.random(X.shape) < pressure)
        new_rem = X & (rng.random(X.shape) < pd)
        X &= ~new_rem
        Z |= new_rem
        X |= new_inf
        t = t_next
    # extinct before detection: detection never needed
    delay = np.where(np.isnan(detected), 0.0, detected - t0)
    # no warning when the fire reaches a high-cost cell before it is seen; runs that
    # never reach one are censored at max_time
    warning = np.where(np.isnan(reached), max_time,
                       np.maximum(reached - np.where(np.isnan(detected), t0, detected), 0.0))
    return ResponseReport(costs=Lam * cost, detection_delay=delay, warning_time=warning,
                          outbreak_rate=Lam)


@dataclass(eq=False)
class ComparisonReport:
    """Risk-based arm versus spectral arm under equal budgets."""

    risk_arm: ResponseReport
    spectral_arm: ResponseReport
    tau_risk: np.ndarray
    tau_uniform: float
    allocations: dict = field(default_factory=dict)

    @property
    def separation(self) -> float:
        """Difference of mean costs (spectral minus risk-based) in pooled standard errors."""
        a, b = self.risk_arm, self.spectral_arm
        return float((b.mean - a.mean) / math.hypot(a.se, b.se))

    def to_json(self) -> dict:
        return {"risk_based": self.risk_arm.to_json(), "spectral": self.spectral_arm.to_json(),
                "separation_se": self.separation, "tau_uniform": self.tau_uniform,
                "allocations": self.allocations}


def wildfire_comparison(net: SpreadingNetwork, budgets, r: float, runs: int = 200, seed: int = 0, *,
                        high_cost: float = 0.25, footprint: int = 1, backend: str = "auto") -> ComparisonReport:
    """Monte Carlo comparison of the two allocation strategies on one landscape.

    Risk-based arm: MinMaxRisk over the beta, lambda and tau channels, then
    every cell is revisited at its largest interval keeping the risk at the
    achieved maximum. Spectral arm: the same beta budget minimises the spectral
    bound, the lambda budget is spread evenly over all cells and a lawnmower
    sweep visits every cell at one common interval with the same total visit
    rate as the risk-based arm.
    """
    from .allocate import AllocationProblem, Budgets, assemble_problem, solve_allocation

    B = budgets
    risk = solve_allocation(assemble_problem(AllocationProblem(net, "min-max-risk", B)), backend=backend)
    spec = solve_allocation(assemble_problem(AllocationProblem(
        net, "min-spectral-bound", Budgets(beta=B.beta, r_max=B.r_max))), backend=backend)
    A, S = risk.natural, spec.natural
    cfg = SurveillanceConfig(R_max=float(np.max(risk.risk_per_node)))
    tau_a = np.minimum(max_revisit_intervals(A.p, A.lam, cfg), net.tau_hi)
    tau_u = float(net.n / np.sum(1.0 / tau_a))
    z_max = np.log(net.lambda_hi / net.lambda_lo) * net.w_lambda
    z = np.minimum(z_max, B.lam / net.n) if np.isfinite(B.lam) else z_max
    lam_s = net.lambda_hi * np.exp(-z / net.w_lambda)
    rng = np.random.default_rng(seed)
    phase_a = rng.uniform(0.0, 1.0, net.n) * tau_a
    phase_u = tau_u * (np.arange(net.n) + 1) / net.n
    arm_a = outbreak_response_experiment(net, A.beta, A.delta, A.lam, tau_a, phase_a, net.cost, r,
                                         runs, seed + 1, high_cost=high_cost, footprint=footprint)
    arm_s = outbreak_response_experiment(net, S.beta, S.delta, lam_s, np.full(net.n, tau_u), phase_u,
                                         net.cost, r, runs, seed + 2, high_cost=high_cost,
                                         footprint=footprint)
    info = {"risk_based": {"status": risk.status, "max_risk": risk.risk, "nonzero": risk.nonzero},
            "spectral": {"status": spec.status, "r": S.r, "nonzero": spec.nonzero}}
    return ComparisonReport(arm_a, arm_s, tau_a, tau_u, info)


def revisit_schedule_from_tau(p, lam, cfg: SurveillanceConfig, horizon: float, multiple: float = 1.0):
    """Periodic schedule visiting node ``i`` every ``multiple * tau_i``."""
    tau = max_revisit_intervals(p, lam, cfg) * multiple
    return periodic_schedule(tau, horizon)


__all__ = [
    "ComparisonReport", "DetectionReport", "MonteCarloStats", "OrderingReport", "PoissonSample", "ResponseReport",
    "SimulationTrace", "default_dt", "detection_experiment", "discounted_cost", "integrate_linear",
    "integrate_meanfield", "monte_carlo_validate", "outbreak_response_experiment",
    "revisit_schedule_from_tau", "run_stochastic", "sample_poisson_outbreaks", "stochastic_costs", "wildfire_comparison",
]
