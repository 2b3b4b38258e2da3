"""Network data model, parameter bounds and the linearised system matrix.

Edge orientation: an edge ``(i, j)`` means node ``j`` can infect node ``i``,
so it contributes ``a_ij = beta_ij`` to the state matrix. Internally each edge
is stored as ``src`` (the infecting node ``j``) and ``dst`` (the infected node
``i``). File formats use ``from`` = ``src`` and ``to`` = ``dst``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from typing import IO, Any, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    BoundsViolationError,
    NetworkParseError,
    NetworkValidationError,
)

# relative slack when checking that a rate lies inside its range
BOUND_RTOL = 1e-12

NODE_DEFAULTS = {"cost": 1.0, "delta": 1.0, "lambda": 1.0, "tau": 1.0}


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpreadingNetwork:
    """Directed spreading graph with per-edge and per-node rate ranges.

    All per-edge arrays have length ``m`` and all per-node arrays length ``n``.
    Rates are per ``time_unit``.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    beta_lo: np.ndarray
    beta_hi: np.ndarray
    w_beta: np.ndarray
    delta_lo: np.ndarray
    delta_hi: np.ndarray
    w_delta: np.ndarray
    lambda_lo: np.ndarray
    lambda_hi: np.ndarray
    w_lambda: np.ndarray
    tau_lo: np.ndarray
    tau_hi: np.ndarray
    w_tau: np.ndarray
    cost: np.ndarray
    delta_ceiling: float
    node_ids: tuple = ()
    coords: np.ndarray | None = None
    grid_shape: tuple[int, int] | None = None
    time_unit: str = "day"
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "n", int(self.n))
        set_(self, "src", _frozen(self.src, np.int64).reshape(-1))
        set_(self, "dst", _frozen(self.dst, np.int64).reshape(-1))
        for name in ("beta_lo", "beta_hi", "w_beta", "delta_lo", "delta_hi", "w_delta",
                     "lambda_lo", "lambda_hi", "w_lambda", "tau_lo", "tau_hi", "w_tau", "cost"):
            set_(self, name, _frozen(getattr(self, name)).reshape(-1))
        set_(self, "delta_ceiling", float(self.delta_ceiling))
        if not self.node_ids:
            set_(self, "node_ids", tuple(range(self.n)))
        else:
            set_(self, "node_ids", tuple(self.node_ids))
        if self.coords is not None:
            set_(self, "coords", _frozen(self.coords).reshape(self.n, 2))
        for name, size in (("src", self.m), ("dst", self.m), ("beta_lo", self.m), ("beta_hi", self.m),
                           ("w_beta", self.m)):
            if getattr(self, name).shape != (size,):
                raise ValueError(f"{name} must have length {size}")
        for name in ("delta_lo", "delta_hi", "w_delta", "lambda_lo", "lambda_hi", "w_lambda",
                     "tau_lo", "tau_hi", "w_tau", "cost"):
            if getattr(self, name).shape != (self.n,):
                raise ValueError(f"{name} must have length n={self.n}, got {getattr(self, name).shape}")

    @property
    def m(self) -> int:
        return int(self.src.shape[0])

    @property
    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of ``(i, j)`` pairs: ``j`` infects ``i``."""
        return np.column_stack([self.dst, self.src])

    def with_updates(self, **changes) -> "SpreadingNetwork":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return SpreadingNetwork(**data)

    def out_degree(self) -> np.ndarray:
        """Number of nodes each node can infect."""
        return np.bincount(self.src, minlength=self.n)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n)

    def baseline_rates(self) -> tuple[np.ndarray, np.ndarray]:
        """Zero-resource rates: fastest spreading, slowest recovery."""
        return self.beta_hi.copy(), self.delta_lo.copy()


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Metzler state matrix ``A`` of the linearised dynamics (CSC storage)."""

    matrix: sp.csc_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()


@dataclass(frozen=True)
class DiscountSpec:
    r: float
    r_max: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0:
            raise ValueError(f"discount rate must be finite and >= 0, got {self.r}")
        if self.r_max is not None and self.r_max < self.r:
            raise ValueError("r_max must be >= r")

    @property
    def t_d(self) -> float:
        return np.inf if self.r == 0 else 1.0 / self.r


def make_network(
    n: int,
    src: Sequence[int],
    dst: Sequence[int],
    beta_hi,
    *,
    beta_lo=None,
    w_beta=None,
    delta_lo=None,
    delta_hi=None,
    w_delta=None,
    lambda_lo=None,
    lambda_hi=None,
    w_lambda=None,
    tau_lo=None,
    tau_hi=None,
    w_tau=None,
    cost=None,
    delta_ceiling: float | None = None,
    validate: bool = True,
    **extra,
) -> SpreadingNetwork:
    """Build a network from arrays, filling absent fields with the defaults.

    Defaults: ``beta_lo = 0.01 beta_hi``, ``delta_hi = delta_lo``,
    ``lambda_lo = 0.01 lambda_hi``, ``tau_lo = tau_hi / 8``, all weights 1 and
    ``delta_ceiling = 2 max(delta_hi)``. Scalars broadcast.
    """
    src = np.asarray(src, dtype=np.int64).reshape(-1)
    dst = np.asarray(dst, dtype=np.int64).reshape(-1)
    m = src.shape[0]

    def edge_arr(v, default):
        return np.broadcast_to(np.asarray(default if v is None else v, dtype=float), (m,)).copy()

    def node_arr(v, default):
        return np.broadcast_to(np.asarray(default if v is None else v, dtype=float), (n,)).copy()

    beta_hi = edge_arr(beta_hi, 0.0)
    beta_lo = edge_arr(beta_lo, 0.01 * beta_hi)
    delta_lo = node_arr(delta_lo, NODE_DEFAULTS["delta"])
    delta_hi = node_arr(delta_hi, delta_lo)
    lambda_hi = node_arr(lambda_hi, NODE_DEFAULTS["lambda"])
    lambda_lo = node_arr(lambda_lo, 0.01 * lambda_hi)
    tau_hi = node_arr(tau_hi, NODE_DEFAULTS["tau"])
    tau_lo = node_arr(tau_lo, tau_hi / 8.0)
    if delta_ceiling is None:
        delta_ceiling = 2.0 * float(np.max(delta_hi)) if n else 1.0
    net = SpreadingNetwork(
        n=n,
        src=src,
        dst=dst,
        beta_lo=beta_lo,
        beta_hi=beta_hi,
        w_beta=edge_arr(w_beta, 1.0),
        delta_lo=delta_lo,
        delta_hi=delta_hi,
        w_delta=node_arr(w_delta, 1.0),
        lambda_lo=lambda_lo,
        lambda_hi=lambda_hi,
        w_lambda=node_arr(w_lambda, 1.0),
        tau_lo=tau_lo,
        tau_hi=tau_hi,
        w_tau=node_arr(w_tau, 1.0),
        cost=node_arr(cost, NODE_DEFAULTS["cost"]),
        delta_ceiling=delta_ceiling,
        **extra,
    )
    if validate:
        problems = validate_network(net)
        if problems:
            raise NetworkValidationError(problems)
    return net


def validate_network(net: SpreadingNetwork) -> list[str]:
    """Return one message per violated invariant; empty iff the network is valid."""
    out: list[str] = []
    ids = net.node_ids

    def node(i):
        return f"node {ids[i]!r}"

    def edge(k):
        return f"edge {ids[net.src[k]]!r}->{ids[net.dst[k]]!r}"

    if np.any((net.src < 0) | (net.src >= net.n) | (net.dst < 0) | (net.dst >= net.n)):
        out.append("edge endpoint out of range")
        return out
    for k in np.flatnonzero(net.src == net.dst):
        out.append(f"{edge(k)}: self-loop not allowed")
    keys = net.dst * net.n + net.src
    uniq, counts = np.unique(keys, return_counts=True)
    for key in uniq[counts > 1]:
        out.append(f"edge {ids[key % net.n]!r}->{ids[key // net.n]!r}: duplicate edge")

    def check_range(lo, hi, label, where):
        for k in np.flatnonzero(~(lo > 0)):
            out.append(f"{where(k)}: {label}_lower must be > 0 (log resource model undefined at 0)")
        for k in np.flatnonzero(lo > hi):
            out.append(f"{where(k)}: {label}_lower must be <= {label}_upper")

    check_range(net.beta_lo, net.beta_hi, "beta", edge)
    check_range(net.delta_lo, net.delta_hi, "delta", node)
    check_range(net.lambda_lo, net.lambda_hi, "lambda", node)
    check_range(net.tau_lo, net.tau_hi, "tau", node)
    for k in np.flatnonzero(~(net.delta_hi < net.delta_ceiling)):
        out.append(f"{node(k)}: delta_upper must be < delta_ceiling ({net.delta_ceiling:g})")
    for k in np.flatnonzero(~(net.cost >= 0)):
        out.append(f"{node(k)}: cost must be >= 0")
    for label, w, where in (("w", net.w_beta, edge), ("w_delta", net.w_delta, node),
                            ("w_lambda", net.w_lambda, node), ("w_tau", net.w_tau, node)):
        for k in np.flatnonzero(~(w > 0)):
            out.append(f"{where(k)}: weight {label} must be > 0")
    arrays = [net.beta_lo, net.beta_hi, net.delta_lo, net.delta_hi, net.lambda_lo,
              net.lambda_hi, net.tau_lo, net.tau_hi, net.cost]
    if not all(np.all(np.isfinite(a)) for a in arrays) or not np.isfinite(net.delta_ceiling):
        out.append("all rates, bounds and costs must be finite")
    return out


def _check_within(values, lo, hi, label, names) -> None:
    tol_lo = BOUND_RTOL * np.abs(lo)
    tol_hi = BOUND_RTOL * np.abs(hi)
    bad = np.flatnonzero((values < lo - tol_lo) | (values > hi + tol_hi) | ~np.isfinite(values))
    if bad.size:
        k = int(bad[0])
        raise BoundsViolationError(
            f"{label} for {names(k)} = {values[k]:.12g} outside [{lo[k]:.12g}, {hi[k]:.12g}]"
            + (f" ({bad.size} violations)" if bad.size > 1 else "")
        )


def build_system_matrix(net: SpreadingNetwork, beta=None, delta=None) -> SystemMatrix:
    """Assemble ``A`` with ``a_ij = beta_ij`` on edges and ``a_ii = -delta_i``.

    ``beta`` / ``delta`` default to the zero-resource baseline
    (``beta_hi``, ``delta_lo``).
    """
    beta = net.beta_hi if beta is None else np.asarray(beta, dtype=float).reshape(-1)
    delta = net.delta_lo if delta is None else np.asarray(delta, dtype=float).reshape(-1)
    if beta.shape != (net.m,) or delta.shape != (net.n,):
        raise ValueError("beta must have one entry per edge and delta one per node")
    ids = net.node_ids
    _check_within(beta, net.beta_lo, net.beta_hi, "beta",
                  lambda k: f"edge {ids[net.src[k]]!r}->{ids[net.dst[k]]!r}")
    _check_within(delta, net.delta_lo, net.delta_hi, "delta", lambda k: f"node {ids[k]!r}")
    return matrix_from_rates(net.n, net.src, net.dst, beta, delta)


def matrix_from_rates(n, src, dst, beta, delta) -> SystemMatrix:
    """Unchecked assembly used by the solvers and simulators."""
    rows = np.concatenate([np.asarray(dst), np.arange(n)])
    cols = np.concatenate([np.asarray(src), np.arange(n)])
    vals = np.concatenate([np.asarray(beta, dtype=float), -np.asarray(delta, dtype=float)])
    A = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    A.sum_duplicates()
    A.sort_indices()
    offdiag = A - sp.diags(A.diagonal())
    if (offdiag.data < 0).any() or not (A.diagonal() < 0).all():
        raise BoundsViolationError("system matrix is not Metzler with a negative diagonal")
    return SystemMatrix(A)


# --------------------------------------------------------------------------- io


def _pair(value, field_name, line=None):
    """Parse ``[lo, hi]`` or a scalar into ``(lo, hi)``; ``None`` entries defer."""
    if value is None:
        return None, None
    if isinstance(value, (int, float)):
        return None, float(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = value
        return (None if lo is None else float(lo)), (None if hi is None else float(hi))
    raise NetworkParseError("expected a number or a [lo, hi] pair", line=line, field=field_name)


def _network_from_json_obj(obj: Mapping[str, Any], directed: bool | None = None) -> SpreadingNetwork:
    if not isinstance(obj, Mapping):
        raise NetworkParseError("top-level JSON value must be an object")
    nodes = obj.get("nodes")
    if nodes is None:
        if "n" not in obj:
            raise NetworkParseError("either 'n' or 'nodes' is required", field="n")
        nodes = [{"id": k} for k in range(int(obj["n"]))]
    if not isinstance(nodes, list):
        raise NetworkParseError("'nodes' must be a list", field="nodes")
    n = len(nodes)
    if "n" in obj and int(obj["n"]) != n:
        raise NetworkParseError(f"'n'={obj['n']} but {n} node records given", field="n")
    ids = []
    index: dict[Any, int] = {}
    cols = {k: np.full(n, np.nan) for k in (
        "cost", "delta_lo", "delta_hi", "lambda_lo", "lambda_hi", "tau_lo", "tau_hi",
        "w_delta", "w_lambda", "w_tau")}
    for k, rec in enumerate(nodes):
        if not isinstance(rec, Mapping):
            raise NetworkParseError(f"node record {k} must be an object", field="nodes")
        nid = rec.get("id", k)
        if nid in index:
            raise NetworkParseError(f"duplicate node id {nid!r}", field=f"nodes[{k}].id")
        index[nid] = k
        ids.append(nid)
        try:
            cols["cost"][k] = float(rec.get("cost", NODE_DEFAULTS["cost"]))
            for key, default in (("delta", "delta"), ("lambda", "lambda"), ("tau", "tau")):
                raw = rec.get(key)
                lo, hi = _pair(raw, f"nodes[{k}].{key}")
                if key == "delta":
                    # a scalar delta is the current rate with no room for improvement
                    if isinstance(raw, (int, float)):
                        lo = hi
                    lo = NODE_DEFAULTS["delta"] if lo is None else lo
                    hi = lo if hi is None else hi
                else:
                    hi = NODE_DEFAULTS[default] if hi is None else hi
                    if lo is None:
                        lo = 0.01 * hi if key == "lambda" else hi / 8.0
                cols[f"{key}_lo"][k], cols[f"{key}_hi"][k] = lo, hi
            cols["w_delta"][k] = float(rec.get("w_delta", 1.0))
            cols["w_lambda"][k] = float(rec.get("w_lambda", 1.0))
            cols["w_tau"][k] = float(rec.get("w_tau", 1.0))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, NetworkParseError):
                raise
            raise NetworkParseError(str(exc), field=f"nodes[{k}]") from exc
    edges = obj.get("edges", [])
    if not isinstance(edges, list):
        raise NetworkParseError("'edges' must be a list", field="edges")
    directed = obj.get("directed", True) if directed is None else directed
    src, dst, b_lo, b_hi, w = [], [], [], [], []
    for k, rec in enumerate(edges):
        try:
            a, b = rec["from"], rec["to"]
        except (KeyError, TypeError) as exc:
            raise NetworkParseError("edge needs 'from' and 'to'", field=f"edges[{k}]") from exc
        if a not in index or b not in index:
            raise NetworkParseError(f"unknown node in edge {a!r}->{b!r}", field=f"edges[{k}]")
        if "beta" not in rec:
            raise NetworkParseError("edge needs 'beta'", field=f"edges[{k}].beta")
        lo, hi = _pair(rec["beta"], f"edges[{k}].beta")
        if hi is None:
            raise NetworkParseError("beta upper bound required", field=f"edges[{k}].beta")
        lo = 0.01 * hi if lo is None else lo
        pairs = [(index[a], index[b])] if directed else [(index[a], index[b]), (index[b], index[a])]
        for s_, d_ in pairs:
            src.append(s_)
            dst.append(d_)
            b_lo.append(lo)
            b_hi.append(hi)
            w.append(float(rec.get("w", 1.0)))
    ceiling = obj.get("delta_ceiling")
    coords = obj.get("coords")
    grid_shape = obj.get("grid_shape")
    return make_network(
        n, src, dst, np.array(b_hi, dtype=float), beta_lo=np.array(b_lo, dtype=float),
        w_beta=np.array(w, dtype=float),
        delta_lo=cols["delta_lo"], delta_hi=cols["delta_hi"], w_delta=cols["w_delta"],
        lambda_lo=cols["lambda_lo"], lambda_hi=cols["lambda_hi"], w_lambda=cols["w_lambda"],
        tau_lo=cols["tau_lo"], tau_hi=cols["tau_hi"], w_tau=cols["w_tau"],
        cost=cols["cost"],
        delta_ceiling=None if ceiling is None else float(ceiling),
        node_ids=tuple(ids),
        coords=None if coords is None else np.asarray(coords, dtype=float),
        grid_shape=None if grid_shape is None else tuple(grid_shape),
        time_unit=str(obj.get("time_unit", "day")),
    )


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    with open(os.fspath(source), "r", encoding="utf-8") as fh:
        return fh.read()


def _csv_rows(text: str, required: Sequence[str]):
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise NetworkParseError("empty CSV", line=1)
    header = [h.strip() for h in reader.fieldnames]
    missing = [h for h in required if h not in header]
    if missing:
        raise NetworkParseError(f"missing columns {missing}; header is {header}", line=1)
    reader.fieldnames = header
    for row in reader:
        yield reader.line_num, {k: (v.strip() if isinstance(v, str) else v) for k, v in row.items()}


def _node_index(ids_seen: dict, key: str) -> int:
    if key not in ids_seen:
        ids_seen[key] = len(ids_seen)
    return ids_seen[key]


def _parse_float(row, col, line) -> float:
    try:
        return float(row[col])
    except (TypeError, ValueError) as exc:
        raise NetworkParseError(f"not a number: {row[col]!r}", line=line, field=col) from exc


def _edge_csv(text: str, directed: bool, node_defaults: Mapping[str, float]) -> SpreadingNetwork:
    ids: dict[str, int] = {}
    src, dst, lo, hi, w = [], [], [], [], []
    for line, row in _csv_rows(text, ["from", "to", "beta_hi"]):
        a = _node_index(ids, row["from"])
        b = _node_index(ids, row["to"])
        bh = _parse_float(row, "beta_hi", line)
        bl = _parse_float(row, "beta_lo", line) if row.get("beta_lo") not in (None, "") else 0.01 * bh
        wt = _parse_float(row, "weight", line) if row.get("weight") not in (None, "") else 1.0
        pairs = [(a, b)] if directed else [(a, b), (b, a)]
        for s_, d_ in pairs:
            src.append(s_)
            dst.append(d_)
            lo.append(bl)
            hi.append(bh)
            w.append(wt)
    return _with_node_defaults(len(ids), src, dst, hi, lo, w, tuple(ids), node_defaults)


def _with_node_defaults(n, src, dst, hi, lo, w, ids, node_defaults, cost=None):
    d = dict(NODE_DEFAULTS)
    d.update(node_defaults or {})
    return make_network(
        n, src, dst, np.array(hi, dtype=float), beta_lo=np.array(lo, dtype=float),
        w_beta=np.array(w, dtype=float),
        delta_lo=d["delta"], delta_hi=d.get("delta_hi", d["delta"]),
        lambda_hi=d["lambda"], tau_hi=d["tau"],
        cost=d["cost"] if cost is None else cost,
        delta_ceiling=d.get("delta_ceiling"),
        node_ids=ids,
    )


def _air_csv(text: str, directed: bool, node_defaults: Mapping[str, float]) -> SpreadingNetwork:
    """Route table ``origin,dest,pax``: one directed edge per row.

    Weights are passengers normalised to mean 1 (busier routes cost more to
    restrict); node cost is passengers served normalised to a maximum of 1.
    """
    d = {"beta": 0.25, "delta": 0.0352 + 0.0279, "lambda": 1.0, "tau": 1.0}
    d.update(node_defaults or {})
    ids: dict[str, int] = {}
    src, dst, pax = [], [], []
    for line, row in _csv_rows(text, ["origin", "dest", "pax"]):
        a = _node_index(ids, row["origin"])
        b = _node_index(ids, row["dest"])
        value = _parse_float(row, "pax", line)
        if value <= 0:
            raise NetworkParseError("pax must be positive", line=line, field="pax")
        pairs = [(a, b)] if directed else [(a, b), (b, a)]
        for s_, d_ in pairs:
            src.append(s_)
            dst.append(d_)
            pax.append(value)
    n = len(ids)
    pax = np.asarray(pax, dtype=float)
    served = np.bincount(np.asarray(src), weights=pax, minlength=n) + np.bincount(
        np.asarray(dst), weights=pax, minlength=n)
    cost = served / served.max() if n else served
    beta = np.full(len(src), d["beta"])
    return _with_node_defaults(
        n, src, dst, beta, 0.01 * beta, pax / pax.mean(), tuple(ids),
        {"delta": d["delta"], "lambda": d["lambda"], "tau": d["tau"],
         **({"delta_ceiling": d["delta_ceiling"]} if "delta_ceiling" in d else {})},
        cost=cost,
    )


def load_network(
    source: str | os.PathLike | IO[str] | Mapping[str, Any],
    fmt: str | None = None,
    *,
    directed: bool | None = None,
    node_defaults: Mapping[str, float] | None = None,
) -> SpreadingNetwork:
    """Load a network from ``network-json``, ``edge-csv`` or ``air-csv``.

    ``fmt`` is inferred from the file suffix when omitted. ``directed=False``
    expands every listed edge into both directions. CSV inputs carry no node
    data, so per-node values come from ``node_defaults``
    (keys ``cost``, ``delta``, ``lambda``, ``tau``, ``delta_ceiling``).
    """
    if isinstance(source, Mapping):
        return _network_from_json_obj(source, directed)
    if fmt is None:
        name = str(getattr(source, "name", source))
        fmt = "edge-csv" if name.endswith(".csv") else "network-json"
    text = _read_text(source)
    if fmt == "network-json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise NetworkParseError(exc.msg, line=exc.lineno) from exc
        return _network_from_json_obj(obj, directed)
    if fmt == "edge-csv":
        return _edge_csv(text, True if directed is None else directed, node_defaults or {})
    if fmt == "air-csv":
        return _air_csv(text, True if directed is None else directed, node_defaults or {})
    raise NetworkParseError(f"unknown network format {fmt!r}")


def network_to_json(net: SpreadingNetwork) -> dict:
    """Inverse of the ``network-json`` loader (always directed)."""
    ids = net.node_ids
    nodes = []
    for i in range(net.n):
        nodes.append({
            "id": ids[i],
            "cost": float(net.cost[i]),
            "delta": [float(net.delta_lo[i]), float(net.delta_hi[i])],
            "lambda": [float(net.lambda_lo[i]), float(net.lambda_hi[i])],
            "tau": [float(net.tau_lo[i]), float(net.tau_hi[i])],
            "w_delta": float(net.w_delta[i]),
            "w_lambda": float(net.w_lambda[i]),
            "w_tau": float(net.w_tau[i]),
        })
    edges = [
        {"from": ids[int(net.src[k])], "to": ids[int(net.dst[k])],
         "beta": [float(net.beta_lo[k]), float(net.beta_hi[k])], "w": float(net.w_beta[k])}
        for k in range(net.m)
    ]
    out = {"n": net.n, "directed": True, "time_unit": net.time_unit,
           "delta_ceiling": net.delta_ceiling, "nodes": nodes, "edges": edges}
    if net.coords is not None:
        out["coords"] = net.coords.tolist()
    if net.grid_shape is not None:
        out["grid_shape"] = list(net.grid_shape)
    return out
