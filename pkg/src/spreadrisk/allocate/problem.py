"""Allocation problem specifications and their convex program IR.

The IR is a plain exponential-cone-representable program over a vector ``x``:

    minimize    c @ x
    subject to  log sum_{k in group g} exp(F[k] @ x + f[k]) <= 0   for every group g
                G @ x <= h
                lb <= x <= ub

Any backend that handles log-sum-exp inequalities (exponential cones or a
smooth barrier) can solve it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order

from ..costgo import check_feasibility, compute_cost_to_go
from ..errors import InfeasibleDiscountError, InfeasibleProblemError
from ..model import SpreadingNetwork, build_system_matrix, matrix_from_rates
from .transform import ResourceBounds, resource_bounds

CHANNELS = ("beta", "delta", "lambda", "tau")


class Variant(str, Enum):
    MIN_MAX_RISK = "min-max-risk"
    MIN_RESOURCES_RISK_CAP = "min-resources-risk-cap"
    MIN_SPECTRAL_BOUND = "min-spectral-bound"
    KNOWN_OUTBREAK_RISK = "known-outbreak-risk"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "minmaxrisk": cls.MIN_MAX_RISK,
            "minresourcesriskcap": cls.MIN_RESOURCES_RISK_CAP,
            "minspectralbound": cls.MIN_SPECTRAL_BOUND,
            "knownoutbreakrisk": cls.KNOWN_OUTBREAK_RISK,
        }
        for v in cls:
            if v.value == key:
                return v
        if key.replace("-", "") in aliases:
            return aliases[key.replace("-", "")]
        raise ValueError(f"unknown allocation variant {value!r}")


@dataclass(frozen=True)
class Budgets:
    """Resource budgets per channel plus the discount-rate upper bound ``r_max``.

    A channel whose budget is 0 is inactive and its allocation is pinned to
    zero. ``inf`` activates a channel without a budget row.
    """

    beta: float = 0.0
    delta: float = 0.0
    lam: float = 0.0
    tau: float = 0.0
    vaccination: float = 0.0
    r_max: float = 1.0

    def __post_init__(self):
        for name in ("beta", "delta", "lam", "tau", "vaccination"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"budget {name} must be >= 0")
        if not (np.isfinite(self.r_max) and self.r_max >= 0):
            raise ValueError("r_max must be finite and >= 0")

    def get(self, channel: str) -> float:
        return {"beta": self.beta, "delta": self.delta, "lambda": self.lam, "tau": self.tau,
                "vaccination": self.vaccination}[channel]

    def active(self, channel: str) -> bool:
        return self.get(channel) > 0


@dataclass(frozen=True, eq=False)
class AllocationProblem:
    network: SpreadingNetwork
    variant: Variant = Variant.MIN_MAX_RISK
    budgets: Budgets = field(default_factory=Budgets)
    cost: np.ndarray | None = None
    risk_cap: float | np.ndarray | None = None
    x0: np.ndarray | None = None
    seed_node: int | None = None
    vaccination: tuple[int, ...] = ()
    channel_weights: Mapping[str, float] = field(default_factory=dict)
    # extra log-headroom on p above its zero-resource value
    y_headroom: float = float(np.log(10.0))
    # spectral variant: log-range each y may drop below its starting value
    spectral_headroom: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        n = self.network.n
        C = self.network.cost if self.cost is None else self.cost
        C = np.broadcast_to(np.asarray(C, dtype=float), (n,)).copy()
        if np.any(C < 0):
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "cost", C)
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float).reshape(-1)
            if x0.shape != (n,) or np.any(x0 < 0):
                raise ValueError("x0 must be a nonnegative vector with one entry per node")
            object.__setattr__(self, "x0", x0)
        if self.seed_node is not None and not 0 <= int(self.seed_node) < n:
            raise ValueError(f"seed node {self.seed_node} out of range")
        object.__setattr__(self, "vaccination", tuple(int(i) for i in self.vaccination))
        if self.variant is Variant.MIN_RESOURCES_RISK_CAP and self.risk_cap is None:
            raise ValueError("min-resources-risk-cap needs a risk cap")
        if self.variant is Variant.KNOWN_OUTBREAK_RISK and self.x0 is None and self.seed_node is None:
            raise ValueError("known-outbreak-risk needs x0 or a seed node")

    @property
    def known_outbreak(self) -> np.ndarray | None:
        """Initial condition used by the known-outbreak risk expression, if any."""
        if self.x0 is not None:
            return self.x0
        if self.seed_node is not None:
            e = np.zeros(self.network.n)
            e[int(self.seed_node)] = 1.0
            return e
        return None

    def weight(self, channel: str) -> float:
        return float(self.channel_weights.get(channel, 1.0))


@dataclass(eq=False)
class VariableLayout:
    """Where each natural variable lives in ``x`` (-1: pinned to zero / absent)."""

    y: np.ndarray
    rho: int
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    sigma: np.ndarray
    t: int
    s: np.ndarray           # vaccination column per group
    s_nodes: np.ndarray     # node of each vaccination group
    u_group: np.ndarray     # vaccination group driving each edge, -1 if none
    v_group: np.ndarray
    zero_nodes: np.ndarray  # nodes whose cost-to-go is identically zero


@dataclass(eq=False)
class ConvexProgram:
    n_vars: int
    c: np.ndarray
    F: sp.csr_matrix
    f: np.ndarray
    group: np.ndarray
    n_groups: int
    group_kind: list[str]
    G: sp.csr_matrix
    h: np.ndarray
    row_kind: list[str]
    lb: np.ndarray
    ub: np.ndarray
    x_init: np.ndarray
    layout: VariableLayout
    problem: AllocationProblem
    bounds: ResourceBounds
    baseline_abscissa: float
    p_baseline: np.ndarray
    names: list[str] = field(default_factory=list)

    @property
    def n_inequalities(self) -> int:
        return self.n_groups + self.G.shape[0] + int(np.isfinite(self.lb).sum() + np.isfinite(self.ub).sum())

    def lse_values(self, x: np.ndarray) -> np.ndarray:
        from .transform import group_logsumexp
        return group_logsumexp(self.F @ x + self.f, self.group, self.n_groups)

    def max_violation(self, x: np.ndarray) -> float:
        parts = [0.0]
        if self.n_groups:
            parts.append(float(self.lse_values(x).max()))
        if self.G.shape[0]:
            parts.append(float((self.G @ x - self.h).max()))
        parts.append(float(np.max(self.lb - x, initial=-np.inf)))
        parts.append(float(np.max(x - self.ub, initial=-np.inf)))
        return max(parts)


def zero_impact_nodes(net: SpreadingNetwork, C: np.ndarray) -> np.ndarray:
    """Nodes that cannot infect (directly or transitively) any node with positive cost.

    Their cost-to-go is exactly zero for every admissible allocation.
    """
    n = net.n
    alive = np.zeros(n, dtype=bool)
    seeds = np.flatnonzero(C > 0)
    if seeds.size:
        # reversed infection edges: dst -> src
        R = sp.csr_matrix((np.ones(net.m), (net.dst, net.src)), shape=(n, n))
        # attach a virtual root pointing at every positive-cost node
        root = sp.csr_matrix((np.ones(seeds.size), (np.zeros(seeds.size, dtype=int), seeds + 1)),
                             shape=(1, n + 1))
        big = sp.vstack([root, sp.hstack([sp.csr_matrix((n, 1)), R])]).tocsr()
        order = breadth_first_order(big, 0, directed=True, return_predecessors=False)
        alive[order[order > 0] - 1] = True
    return ~alive


class _Rows:
    """Accumulates sparse rows ``sum coef * x[col] + const``."""

    def __init__(self):
        self.r: list[np.ndarray] = []
        self.c: list[np.ndarray] = []
        self.v: list[np.ndarray] = []
        self.const: list[np.ndarray] = []
        self.n_rows = 0

    def new(self, k: int) -> np.ndarray:
        idx = np.arange(self.n_rows, self.n_rows + k)
        self.n_rows += k
        self.const.append(np.zeros(k))
        return idx

    def add(self, rows, cols, vals):
        rows, cols, vals = np.broadcast_arrays(np.asarray(rows), np.asarray(cols), np.asarray(vals, dtype=float))
        keep = cols >= 0
        self.r.append(rows[keep].ravel())
        self.c.append(cols[keep].ravel())
        self.v.append(vals[keep].ravel())

    def matrix(self, n_cols: int) -> tuple[sp.csr_matrix, np.ndarray]:
        if self.r:
            r, c, v = np.concatenate(self.r), np.concatenate(self.c), np.concatenate(self.v)
        else:
            r = c = np.zeros(0, dtype=int)
            v = np.zeros(0)
        M = sp.csr_matrix((v, (r, c)), shape=(self.n_rows, n_cols))
        M.sum_duplicates()
        const = np.concatenate(self.const) if self.const else np.zeros(0)
        return M, const

    def add_const(self, rows, vals):
        const = np.concatenate(self.const) if self.const else np.zeros(0)
        np.add.at(const, np.asarray(rows), np.asarray(vals, dtype=float))
        self.const = [const]


def _vaccination_groups(net: SpreadingNetwork, nodes: Sequence[int]):
    nodes = [int(i) for i in nodes]
    for i in nodes:
        if not 0 <= i < net.n:
            raise ValueError(f"vaccination group references missing node {i}")
    if len(set(nodes)) != len(nodes):
        raise ValueError("vaccination groups must name distinct nodes")
    return np.asarray(nodes, dtype=np.int64)


def assemble_problem(spec: AllocationProblem) -> ConvexProgram:
    """Build the convex program for ``spec``.

    Raises :class:`InfeasibleDiscountError` when the zero-resource network is
    not stable at ``r = r_max``.
    """
    net = spec.network
    n, m = net.n, net.m
    C = spec.cost
    budgets = spec.budgets
    variant = spec.variant
    D = net.delta_ceiling
    R = budgets.r_max

    A0 = build_system_matrix(net)
    ok, abscissa = check_feasibility(A0, R)
    if not ok:
        raise InfeasibleDiscountError(
            R, abscissa,
            f"zero-resource network is infeasible at r_max={R:.12g}: spectral abscissa "
            f"{abscissa:.12g} >= r_max",
        )
    spectral = variant is Variant.MIN_SPECTRAL_BOUND
    # the eigenvalue depends on every node, so nothing is dropped for the spectral variant
    zero = np.zeros(n, dtype=bool) if spectral else zero_impact_nodes(net, C)
    if zero.all():
        raise ValueError("every node has zero cost-to-go (no node with positive cost is reachable)")
    p_base = compute_cost_to_go(A0, C, R).p

    r_min = -float(net.delta_hi.max()) if spectral else 0.0
    bnd = resource_bounds(net, R, r_min)

    vacc_nodes = _vaccination_groups(net, spec.vaccination)
    use_vacc = vacc_nodes.size > 0 and budgets.active("vaccination")
    u_group = np.full(m, -1, dtype=np.int64)
    v_group = np.full(n, -1, dtype=np.int64)
    if use_vacc:
        pos = {int(i): g for g, i in enumerate(vacc_nodes)}
        for k in range(m):
            u_group[k] = pos.get(int(net.dst[k]), -1)
        v_group[vacc_nodes] = np.arange(vacc_nodes.size)

    live_edge = ~zero[net.dst]
    # --- column layout
    ncol = 0

    def take(mask):
        nonlocal ncol
        cols = np.full(mask.shape[0], -1, dtype=np.int64)
        k = int(mask.sum())
        cols[mask] = np.arange(ncol, ncol + k)
        ncol += k
        return cols

    y_col = take(~zero)
    rho_col = ncol
    ncol += 1
    u_col = take(budgets.active("beta") & live_edge & (bnd.u > 0) & (u_group < 0))
    v_col = take(budgets.active("delta") & ~zero & (bnd.v > 0) & (v_group < 0))
    z_col = take(np.full(n, budgets.active("lambda")) & ~zero & (bnd.z > 0))
    s_col = np.zeros(0, dtype=np.int64)
    s_ub = np.zeros(0)
    if use_vacc:
        s_ub = np.full(vacc_nodes.size, np.inf)
        for g, i in enumerate(vacc_nodes):
            edges = np.flatnonzero((u_group == g) & live_edge)
            caps = list(bnd.u[edges]) + [bnd.v[i]]
            s_ub[g] = min(caps)
        s_col = take(s_ub > 0)
        s_live = np.append(s_col >= 0, False)
        u_group = np.where(s_live[u_group], u_group, -1)
        v_group = np.where(s_live[v_group], v_group, -1)
    sig_col = take(np.full(n, budgets.active("tau")) & ~zero & (bnd.sigma > 0))
    x0_known = spec.known_outbreak
    risk_is_known = x0_known is not None and variant in (Variant.KNOWN_OUTBREAK_RISK,
                                                         Variant.MIN_RESOURCES_RISK_CAP)
    single_seed = None
    if risk_is_known:
        support = np.flatnonzero((x0_known > 0) & ~zero)
        if support.size == 0:
            raise ValueError("known outbreak cannot reach any node with positive cost; risk is zero")
        if support.size == 1 and x0_known[support[0]] == 1.0:
            single_seed = int(support[0])
    need_t = variant is Variant.MIN_MAX_RISK or (
        variant is Variant.KNOWN_OUTBREAK_RISK and single_seed is None)
    t_col = -1
    if need_t:
        t_col = ncol
        ncol += 1
    N = ncol

    # index -1 (no vaccination group) maps to the trailing -1
    s_ext = np.append(s_col, -1)

    def ucol(e):
        """Column driving u_e (own column or the vaccination column)."""
        e = np.asarray(e)
        return np.where(u_col[e] >= 0, u_col[e], s_ext[u_group[e]])

    def vcol(j):
        j = np.asarray(j)
        return np.where(v_col[j] >= 0, v_col[j], s_ext[v_group[j]])

    # --- log-sum-exp terms
    lse = _Rows()
    group_of_node = np.full(n, -1, dtype=np.int64)
    live_nodes = np.flatnonzero(~zero)
    group_of_node[live_nodes] = np.arange(live_nodes.size)
    group_kind = [f"q:{net.node_ids[j]}" for j in live_nodes]
    term_group = []

    E = np.flatnonzero(live_edge)
    rows = lse.new(E.size)
    term_group.append(group_of_node[net.src[E]])
    lse.add(rows, y_col[net.dst[E]], 1.0)
    lse.add(rows, y_col[net.src[E]], -1.0)
    lse.add(rows, ucol(E), -1.0 / net.w_beta[E])
    lse.add(rows, rho_col, -1.0)
    lse.add_const(rows, np.log(net.beta_hi[E]))

    rows = lse.new(live_nodes.size)
    term_group.append(group_of_node[live_nodes])
    lse.add(rows, vcol(live_nodes), -1.0 / net.w_delta[live_nodes])
    lse.add(rows, rho_col, -1.0)
    lse.add_const(rows, np.log(D - net.delta_lo[live_nodes]))

    # without cost terms the rows read p^T A <= r p^T: a Perron certificate for r
    costly = np.zeros(0, dtype=np.int64) if spectral else np.flatnonzero((C > 0) & ~zero)
    rows = lse.new(costly.size)
    term_group.append(group_of_node[costly])
    lse.add(rows, y_col[costly], -1.0)
    lse.add(rows, rho_col, -1.0)
    lse.add_const(rows, np.log(C[costly]))
    n_groups = live_nodes.size

    lin = _Rows()
    row_kind: list[str] = []

    def risk_rows(nodes, rhs_extra, with_t):
        rr = lin.new(nodes.size)
        lin.add(rr, y_col[nodes], 1.0)
        lin.add(rr, z_col[nodes], -1.0 / net.w_lambda[nodes])
        lin.add(rr, sig_col[nodes], -1.0 / net.w_tau[nodes])
        if with_t:
            lin.add(rr, t_col, -1.0)
        lin.add_const(rr, -(rhs_extra - np.log(net.lambda_hi[nodes]) - np.log(net.tau_hi[nodes])))
        row_kind.extend(["risk"] * nodes.size)

    known = None
    if risk_is_known and single_seed is None:
        known = np.flatnonzero((x0_known > 0) & ~zero)

    if variant is Variant.MIN_MAX_RISK:
        risk_rows(live_nodes, 0.0, True)
    elif variant is Variant.KNOWN_OUTBREAK_RISK and known is not None:
        rows = lse.new(known.size)
        term_group.append(np.full(known.size, n_groups))
        lse.add(rows, y_col[known], 1.0)
        lse.add(rows, t_col, -1.0)
        lse.add_const(rows, np.log(x0_known[known]))
        group_kind.append("risk")
        n_groups += 1
    elif variant is Variant.MIN_RESOURCES_RISK_CAP:
        cap = spec.risk_cap
        if risk_is_known:
            cap = float(np.max(cap))
            if not cap > 0:
                raise InfeasibleProblemError("risk cap must be positive")
            if single_seed is not None:
                rr = lin.new(1)
                lin.add(rr, y_col[single_seed], 1.0)
                lin.add_const(rr, -np.log(cap))
                row_kind.append("risk-cap")
            else:
                rows = lse.new(known.size)
                term_group.append(np.full(known.size, n_groups))
                lse.add(rows, y_col[known], 1.0)
                lse.add_const(rows, np.log(x0_known[known]) - np.log(cap))
                group_kind.append("risk-cap")
                n_groups += 1
        else:
            capv = np.broadcast_to(np.asarray(cap, dtype=float), (n,))
            if np.any(~(capv > 0)):
                raise InfeasibleProblemError("risk cap must be positive")
            risk_rows(live_nodes, np.log(capv[live_nodes]), False)
            for k in range(len(row_kind)):
                if row_kind[k] == "risk":
                    row_kind[k] = "risk-cap"

    def budget_row(cols, budget, label):
        cols = cols[cols >= 0]
        if cols.size and np.isfinite(budget):
            rr = lin.new(1)
            lin.add(np.full(cols.size, rr[0]), cols, 1.0)
            lin.add_const(rr, -budget)
            row_kind.append(f"budget:{label}")

    budget_row(u_col, budgets.beta, "beta")
    budget_row(v_col, budgets.delta, "delta")
    budget_row(z_col, budgets.lam, "lambda")
    budget_row(sig_col, budgets.tau, "tau")
    budget_row(s_col, budgets.vaccination, "vaccination")

    F, f = lse.matrix(N)
    group = np.concatenate(term_group) if term_group else np.zeros(0, dtype=np.int64)
    G, gconst = lin.matrix(N)
    h = -gconst

    # --- bounds
    lb = np.full(N, -np.inf)
    ub = np.full(N, np.inf)
    headroom = spec.spectral_headroom if spectral else spec.y_headroom
    live = ~zero
    y_ub = np.log(np.maximum(p_base[live], 1e-300)) + headroom
    lb[rho_col], ub[rho_col] = bnd.rho_lo, bnd.rho_hi
    for cols, upper in ((u_col, bnd.u), (v_col, bnd.v), (z_col, bnd.z), (sig_col, bnd.sigma)):
        sel = cols >= 0
        lb[cols[sel]] = 0.0
        ub[cols[sel]] = upper[sel]
    sel = s_col >= 0
    lb[s_col[sel]] = 0.0
    ub[s_col[sel]] = s_ub[sel]

    # --- objective
    c = np.zeros(N)
    if variant is Variant.MIN_MAX_RISK or (variant is Variant.KNOWN_OUTBREAK_RISK and t_col >= 0):
        c[t_col] = 1.0
    elif variant is Variant.KNOWN_OUTBREAK_RISK:
        c[y_col[single_seed]] = 1.0
    elif variant is Variant.MIN_SPECTRAL_BOUND:
        c[rho_col] = 1.0
    else:
        for cols, ch in ((u_col, "beta"), (v_col, "delta"), (z_col, "lambda"), (sig_col, "tau"),
                         (s_col, "vaccination")):
            c[cols[cols >= 0]] = spec.weight(ch)

    layout = VariableLayout(y=y_col, rho=rho_col, u=u_col, v=v_col, z=z_col, sigma=sig_col,
                            t=t_col, s=s_col, s_nodes=vacc_nodes if use_vacc else np.zeros(0, dtype=np.int64),
                            u_group=u_group, v_group=v_group, zero_nodes=zero)
    prog = ConvexProgram(
        n_vars=N, c=c, F=F, f=f, group=group.astype(np.int64), n_groups=n_groups,
        group_kind=group_kind, G=G, h=h, row_kind=row_kind, lb=lb, ub=ub,
        x_init=np.zeros(N), layout=layout, problem=spec, bounds=bnd,
        baseline_abscissa=float(abscissa), p_baseline=p_base,
    )
    prog.x_init = _initial_point(prog, y_ub)
    yc = y_col[live]
    if spectral:
        # scale-free rows: fix the scale with y <= 0 and keep y bounded below
        prog.x_init[yc] -= prog.x_init[yc].max() + 1.0
        ub[yc] = 0.0
        lb[yc] = prog.x_init[yc] - headroom
    else:
        ub[yc] = np.maximum(y_ub, prog.x_init[yc] + 1.0)
    return prog


def apply_vaccination_coupling(spec: AllocationProblem, groups: Sequence[int]) -> ConvexProgram:
    """Assemble ``spec`` with one shared resource variable per vaccinated node.

    Vaccinating node ``i`` spends ``s_i`` once from the vaccination budget and
    sets ``v_i = s_i`` and ``u_ij = s_i`` on every edge into ``i``, so the
    recovery rate rises and all incoming spreading rates fall together, each
    scaled by its own weight.
    """
    _vaccination_groups(spec.network, groups)
    return assemble_problem(replace(spec, vaccination=tuple(int(g) for g in groups)))


# ----------------------------------------------------------------- start point


def natural_from_x(prog: ConvexProgram, x: np.ndarray):
    """Natural-variable arrays ``(y, u, v, z, sigma, rho, s)`` implied by ``x``."""
    L = prog.layout
    net = prog.problem.network

    def pick(cols, default=0.0):
        out = np.full(cols.shape[0], default, dtype=float)
        sel = cols >= 0
        out[sel] = x[cols[sel]]
        return out

    y = pick(L.y, -np.inf)
    s = pick(L.s) if L.s.size else np.zeros(0)
    u = pick(L.u)
    sel = L.u_group >= 0
    u[sel] = s[L.u_group[sel]]
    v = pick(L.v)
    sel = L.v_group >= 0
    v[sel] = s[L.v_group[sel]]
    z = pick(L.z)
    sigma = pick(L.sigma)
    rho = float(x[L.rho])
    assert u.shape == (net.m,)
    return y, u, v, z, sigma, rho, s


def _initial_point(prog: ConvexProgram, y_ub: np.ndarray) -> np.ndarray:
    """Interior point for the barrier solver: partial resources, slightly inflated p."""
    spec = prog.problem
    net = spec.network
    L = prog.layout
    x = np.zeros(prog.n_vars)
    budgets = spec.budgets
    for cols, label in ((L.u, "beta"), (L.v, "delta"), (L.z, "lambda"), (L.sigma, "tau"),
                        (L.s, "vaccination")):
        cols = cols[cols >= 0]
        if not cols.size:
            continue
        total = prog.ub[cols].sum()
        budget = budgets.get(label)
        frac = 0.5 if not np.isfinite(budget) else min(0.5, 0.5 * budget / total)
        x[cols] = frac * prog.ub[cols]
    R = budgets.r_max
    r_lo = np.exp(prog.bounds.rho_lo) - net.delta_ceiling
    r0 = max(R - 0.01 * (R - prog.baseline_abscissa), 0.5 * (R + r_lo))
    r0 = min(r0, R)
    x[L.rho] = np.log(net.delta_ceiling + r0)
    x[L.rho] = min(max(x[L.rho], prog.lb[L.rho] + 1e-9 * (prog.ub[L.rho] - prog.lb[L.rho])),
                   prog.ub[L.rho] - 1e-9 * (prog.ub[L.rho] - prog.lb[L.rho]))
    r0 = float(np.exp(x[L.rho]) - net.delta_ceiling)
    y, u, v, z, sigma, rho, s = natural_from_x(prog, x)
    beta = net.beta_hi * np.exp(-u / net.w_beta)
    delta = net.delta_ceiling - (net.delta_ceiling - net.delta_lo) * np.exp(-v / net.w_delta)
    C = spec.cost
    C_boost = C * 1.001 + 1e-6 * C.max()
    A = matrix_from_rates(net.n, net.src, net.dst, beta, delta)
    try:
        p = compute_cost_to_go(A, C_boost, r0, check=False).p
    except Exception:
        p = np.exp(y_ub)
    live = ~L.zero_nodes
    p = np.where(p > 0, p, np.exp(y_ub.min()) if y_ub.size else 1.0)
    x[L.y[live]] = np.log(p[live])
    if L.t >= 0:
        # epigraph variable sits above every row it bounds
        lhs = prog.G @ x - prog.h
        lse = prog.lse_values(x) if prog.n_groups else np.zeros(0)
        worst = max(lhs.max(initial=-np.inf), lse.max(initial=-np.inf))
        x[L.t] = max(worst, 0.0) + 1.0 if np.isfinite(worst) else 1.0
    return x
