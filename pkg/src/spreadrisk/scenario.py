"""Example networks: small epidemic graphs, wildfire grids and a synthetic air network.

Every parameter not fixed by the original examples is set here and listed in
``SCENARIO_MANIFEST`` so that the reconstructions are auditable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import IO, Any, Mapping

import numpy as np

from .errors import UnsupportedNetworkError
from .model import SpreadingNetwork, make_network

VEGETATION, CITY, WATER = 0, 1, 2
CLASS_NAMES = {VEGETATION: "vegetation", CITY: "city", WATER: "water"}
CLASS_CODES = {v: k for k, v in CLASS_NAMES.items()}

DIAGONAL_FACTOR = 0.83
WIND_COEFFS = (0.045, 0.131)
CITY_BETA = 0.5
# outbreak rate floor for cells where no ignition is expected (rates must stay > 0)
LAMBDA_FLOOR = 1e-4

COMPASS = {"W": 270.0, "N": 0.0, "E": 90.0, "S": 180.0}


@dataclass(frozen=True, eq=False)
class GridLandscape:
    """Raster landscape, row-major with row 0 at the north edge.

    ``wind_dir`` is the compass bearing the wind comes from (270 = westerly).
    """

    width: int
    height: int
    cls: np.ndarray
    value: np.ndarray
    cost: np.ndarray
    lam: np.ndarray
    wind_speed: float = 0.0
    wind_dir: float = 270.0

    def __post_init__(self):
        shape = (self.height, self.width)
        for name in ("cls", "value", "cost", "lam"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != shape:
                arr = arr.reshape(shape)
            object.__setattr__(self, name, arr.astype(np.int64 if name == "cls" else float))
        if self.width < 2 or self.height < 2:
            raise ValueError("landscape must be at least 2x2")
        veg = self.cls == VEGETATION
        if np.any((self.value[veg] < 0) | (self.value[veg] > 1)):
            raise ValueError("vegetation values must lie in [0, 1]")
        if np.any(self.cost < 0) or np.any(self.lam < 0):
            raise ValueError("cost and outbreak rate must be nonnegative")
        if self.wind_speed < 0:
            raise ValueError("wind speed must be >= 0")

    @property
    def n(self) -> int:
        return self.width * self.height

    def spread_base(self) -> np.ndarray:
        """Spreading rate into each cell before direction corrections."""
        base = np.where(self.cls == VEGETATION, 2.0 * self.value, 0.0)
        base = np.where(self.cls == CITY, CITY_BETA, base)
        return np.where(self.cls == WATER, 0.0, base)

    def to_json(self) -> dict:
        cells = [
            {"class": CLASS_NAMES[int(c)], "value": float(v), "cost": float(co), "lambda": float(la)}
            for c, v, co, la in zip(self.cls.ravel(), self.value.ravel(), self.cost.ravel(),
                                    self.lam.ravel())
        ]
        return {"width": self.width, "height": self.height,
                "wind": {"speed": self.wind_speed, "from": self.wind_dir}, "cells": cells}


def load_landscape(source: str | os.PathLike | IO[str] | Mapping[str, Any]) -> GridLandscape:
    """Read a landscape JSON: ``{"width", "height", "cells": [{class, value, cost, lambda}], "wind"}``."""
    if isinstance(source, Mapping):
        obj = source
    elif hasattr(source, "read"):
        obj = json.load(source)
    else:
        with open(os.fspath(source), "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    w, h = int(obj["width"]), int(obj["height"])
    cells = obj["cells"]
    if len(cells) != w * h:
        raise ValueError(f"expected {w * h} cells, got {len(cells)}")
    cls = np.array([CLASS_CODES[c.get("class", "vegetation")] for c in cells])
    wind = obj.get("wind", {}) or {}
    return GridLandscape(
        width=w, height=h, cls=cls,
        value=np.array([float(c.get("value", 0.0)) for c in cells]),
        cost=np.array([float(c.get("cost", 0.0)) for c in cells]),
        lam=np.array([float(c.get("lambda", 0.0)) for c in cells]),
        wind_speed=float(wind.get("speed", 0.0)), wind_dir=float(wind.get("from", 270.0)),
    )


def grid_neighbours(height: int, width: int):
    """All ordered 8-neighbour pairs ``(src, dst, is_diagonal)`` in row-major indexing."""
    rows, cols = np.divmod(np.arange(height * width), width)
    src, dst, diag = [], [], []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r2, c2 = rows + dr, cols + dc
            ok = (r2 >= 0) & (r2 < height) & (c2 >= 0) & (c2 < width)
            src.append(np.flatnonzero(ok))
            dst.append(r2[ok] * width + c2[ok])
            diag.append(np.full(int(ok.sum()), dr != 0 and dc != 0))
    return np.concatenate(src), np.concatenate(dst), np.concatenate(diag)


def build_grid_network(
    land: GridLandscape,
    delta: float = 0.5,
    *,
    diagonal_factor: float = DIAGONAL_FACTOR,
    tau_hi: float = 1.0,
    tau_lo: float | None = None,
    delta_hi: float | None = None,
    delta_ceiling: float | None = None,
    beta_lo_ratio: float = 0.01,
    with_wind: bool = True,
) -> SpreadingNetwork:
    """8-neighbour grid network; edges whose target cannot burn are dropped.

    The spreading rate from cell ``j`` into its neighbour ``i`` is the base
    rate of ``i``, scaled by ``diagonal_factor`` for diagonal neighbours.
    Water cells neither receive nor pass on fire and carry zero cost. Wind from
    the landscape is applied when ``with_wind`` is set.
    """
    h, w = land.height, land.width
    base = land.spread_base().ravel()
    src, dst, diag = grid_neighbours(h, w)
    water = (land.cls == WATER).ravel()
    beta = base[dst] * np.where(diag, diagonal_factor, 1.0)
    keep = (beta > 0) & ~water[src]
    src, dst, beta = src[keep], dst[keep], beta[keep]
    rows, cols = np.divmod(np.arange(h * w), w)
    cost = np.where(water, 0.0, land.cost.ravel())
    lam = np.maximum(land.lam.ravel(), LAMBDA_FLOOR)
    net = make_network(
        h * w, src, dst, beta, beta_lo=beta_lo_ratio * beta,
        delta_lo=delta, delta_hi=delta if delta_hi is None else delta_hi,
        lambda_hi=lam, tau_hi=tau_hi, tau_lo=tau_hi / 8.0 if tau_lo is None else tau_lo,
        cost=cost, delta_ceiling=delta_ceiling,
        node_ids=tuple(f"r{r}c{c}" for r, c in zip(rows, cols)),
        coords=np.column_stack([cols, rows]).astype(float),
        grid_shape=(h, w),
    )
    if with_wind and land.wind_speed > 0:
        net = apply_wind(net, (land.wind_speed, land.wind_dir))
    return net


def wind_multiplier(theta, speed: float, coeffs=WIND_COEFFS):
    """``exp(c1 V) exp(c2 V (cos(theta) - 1))`` for the angle ``theta`` between
    the wind's blowing direction and the direction of spread."""
    c1, c2 = coeffs
    return np.exp(c1 * speed) * np.exp(c2 * speed * (np.cos(theta) - 1.0))


def apply_wind(net: SpreadingNetwork, wind, coeffs=WIND_COEFFS) -> SpreadingNetwork:
    """Scale every edge rate by the wind multiplier of its direction.

    ``wind = (speed, from)`` with ``from`` a compass bearing in degrees or one
    of ``"N"``, ``"E"``, ``"S"``, ``"W"``. Grid coordinates are ``(column, row)``
    with rows increasing southward.
    """
    if net.coords is None:
        raise UnsupportedNetworkError("wind needs a network with grid coordinates")
    speed, bearing = wind
    if isinstance(bearing, str):
        bearing = COMPASS[bearing.upper()]
    speed = float(speed)
    if speed < 0:
        raise ValueError("wind speed must be >= 0")
    if speed == 0:
        return net
    b = np.deg2rad(float(bearing))
    # wind from bearing b blows toward b + 180; (east, south) components
    blow = np.array([-np.sin(b), np.cos(b)])
    d = net.coords[net.dst] - net.coords[net.src]
    cos_t = (d @ blow) / np.linalg.norm(d, axis=1)
    factor = wind_multiplier(np.arccos(np.clip(cos_t, -1.0, 1.0)), speed, coeffs)
    return net.with_updates(beta_hi=net.beta_hi * factor, beta_lo=net.beta_lo * factor,
                            meta={**dict(net.meta), "wind": {"speed": speed, "from": float(bearing)}})


# ----------------------------------------------------------------- landscapes


def wildfire_landscape(height: int = 50, width: int = 80, wind_speed: float = 8.0,
                       wind_dir: float = 270.0) -> GridLandscape:
    """Fictional landscape with a river, a lake, a city, a village, a eucalyptus
    stand upwind of the city and a few ignition hot spots.

    Features are defined on the unit square so any resolution gives the same map.
    """
    y, x = np.meshgrid((np.arange(height) + 0.5) / height, (np.arange(width) + 0.5) / width,
                       indexing="ij")
    veg = (0.22 + 0.08 * np.sin(2 * np.pi * (1.3 * x + 0.4 * y)) * np.cos(2 * np.pi * 1.7 * y)
           + 0.05 * np.cos(2 * np.pi * (2.1 * x - 1.1 * y)))
    # dry grass plain in the north-east, dense eucalyptus west of the city
    veg = np.where((x > 0.72) & (y < 0.3), 0.12, veg)
    euc = ((x - 0.47) / 0.07) ** 2 + ((y - 0.42) / 0.12) ** 2 <= 1.0
    veg = np.where(euc, 0.6, veg)
    veg = np.clip(veg, 0.05, 1.0)

    cls = np.full((height, width), VEGETATION)
    city_d = ((x - 0.63) / 0.09) ** 2 + ((y - 0.42) / 0.13) ** 2
    village_d = ((x - 0.16) / 0.04) ** 2 + ((y - 0.78) / 0.06) ** 2
    cls[city_d <= 1.0] = CITY
    cls[village_d <= 1.0] = CITY
    river = np.abs(x - (0.28 + 0.05 * np.sin(2 * np.pi * 1.2 * y))) <= 0.018
    lake = ((x - 0.82) / 0.08) ** 2 + ((y - 0.76) / 0.11) ** 2 <= 1.0
    cls[river | lake] = WATER

    cost = 0.02 + 0.03 * veg
    cost = np.where(city_d <= 1.0, 1.0 - 0.5 * city_d, cost)
    cost = np.where(village_d <= 1.0, 0.6, cost)
    cost = np.where(cls == WATER, 0.0, cost)

    lam = 0.05 + 0.1 * veg
    road = np.abs(y - 0.6) <= 0.02
    lam = np.where(road, 0.5, lam)
    for cx, cy, s, peak in ((0.38, 0.25, 0.05, 1.0), (0.1, 0.35, 0.04, 0.7), (0.55, 0.8, 0.05, 0.6)):
        lam = lam + peak * np.exp(-(((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s)))
    lam = np.where(cls == CITY, 0.2, lam)
    lam = np.where(cls == WATER, 0.0, lam)
    return GridLandscape(width=width, height=height, cls=cls, value=np.where(cls == VEGETATION, veg, 0.0),
                         cost=cost, lam=lam, wind_speed=wind_speed, wind_dir=wind_dir)


def uniform_landscape(height: int, width: int, vegetation: float = 0.2, cost: float = 1.0,
                      lam: float = 1.0) -> GridLandscape:
    shape = (height, width)
    return GridLandscape(width=width, height=height, cls=np.full(shape, VEGETATION),
                         value=np.full(shape, vegetation), cost=np.full(shape, cost),
                         lam=np.full(shape, lam))


GRID_SIZES = {250: (10, 25), 1000: (25, 40), 4000: (50, 80)}


def grid_shape_for(n: int) -> tuple[int, int]:
    """Grid dimensions for ``n`` cells; the 5:8 aspect where it divides evenly."""
    if n in GRID_SIZES:
        return GRID_SIZES[n]
    h = int(round(np.sqrt(n * 5 / 8)))
    while h > 1 and n % h:
        h -= 1
    if h < 2 or n // h < 2:
        raise ValueError(f"cannot lay {n} cells out as a grid of at least 2x2")
    return h, n // h


# ----------------------------------------------------------------- small graphs

# 1-indexed undirected edges of the 16-node graph
SIXTEEN_EDGES = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4), (3, 5), (4, 6), (5, 6), (5, 7), (6, 7), (6, 8),
                 (7, 9), (8, 9), (8, 10), (9, 11), (10, 11), (10, 12), (11, 13), (12, 13), (12, 14),
                 (13, 15), (14, 15), (14, 16), (15, 16), (13, 14), (4, 5)]
SIXTEEN_FAST = {(10, 12), (11, 13), (12, 13), (13, 14), (13, 15), (14, 15), (15, 16)}
SIXTEEN_MIN_R = 1.6439
SIXTEEN_VARIANTS = ("uniform", "cost", "spreading", "outbreak")


def _undirected(edges, n):
    src, dst = [], []
    for a, b in edges:
        src += [a - 1, b - 1]
        dst += [b - 1, a - 1]
    return np.asarray(src), np.asarray(dst)


def _hops(edges, n, start):
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a - 1].append(b - 1)
        adj[b - 1].append(a - 1)
    dist = np.full(n, -1)
    dist[start] = 0
    frontier = [start]
    while frontier:
        nxt = []
        for i in frontier:
            for j in adj[i]:
                if dist[j] < 0:
                    dist[j] = dist[i] + 1
                    nxt.append(j)
        frontier = nxt
    return dist


def sixteen_node(variant: str = "uniform") -> SpreadingNetwork:
    """16-node example in four parameterisations.

    ``uniform``: c = 1, beta = 0.5, lambda = 1. ``cost``: c = 1 on nodes 14, 15
    and 0.1 elsewhere. ``spreading``: additionally beta = 0.8 on the edges of
    ``SIXTEEN_FAST`` and 0.2 elsewhere. ``outbreak``: additionally lambda
    halves with every hop away from node 3. The common recovery rate puts the
    spectral abscissa of the ``spreading``/``outbreak`` matrices at 1.6439.
    """
    if variant not in SIXTEEN_VARIANTS:
        raise ValueError(f"unknown sixteen-node variant {variant!r}; choose from {SIXTEEN_VARIANTS}")
    n = 16
    src, dst = _undirected(SIXTEEN_EDGES, n)
    fast = np.array([(min(s, d) + 1, max(s, d) + 1) in SIXTEEN_FAST for s, d in zip(src, dst)])
    mixed = np.where(fast, 0.8, 0.2)
    delta = _sixteen_delta(src, dst, mixed)
    beta = np.full(src.shape[0], 0.5) if variant in ("uniform", "cost") else mixed
    cost = np.ones(n)
    if variant != "uniform":
        cost = np.full(n, 0.1)
        cost[[13, 14]] = 1.0
    lam = np.ones(n)
    if variant == "outbreak":
        lam = 0.5 ** _hops(SIXTEEN_EDGES, n, 2).astype(float)
    return make_network(n, src, dst, beta, delta_lo=delta, lambda_hi=lam, cost=cost,
                        node_ids=tuple(range(1, n + 1)), meta={"scenario": f"sixteen-node/{variant}"})


def _sixteen_delta(src, dst, beta) -> float:
    B = np.zeros((16, 16))
    B[dst, src] = beta
    return float(np.max(np.linalg.eigvalsh(B)) - SIXTEEN_MIN_R)


SEVEN_EDGES = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4), (2, 5), (3, 5), (4, 5), (1, 6), (6, 7)]


def seven_node() -> SpreadingNetwork:
    """Seven-node epidemic graph: a clustered community (2-5), a high outbreak
    node 1 bridging to a caretaker 6 who looks after the high-cost node 7.
    The 6-7 link carries weight 10 in both directions."""
    n = 7
    src, dst = _undirected(SEVEN_EDGES, n)
    w = np.where(((src == 5) & (dst == 6)) | ((src == 6) & (dst == 5)), 10.0, 1.0)
    lam = np.array([1.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.01])
    cost = np.array([0.01] * 6 + [1.0])
    return make_network(n, src, dst, 0.3, w_beta=w, delta_lo=0.3, delta_hi=0.9, lambda_hi=lam,
                        cost=cost, delta_ceiling=1.0, node_ids=tuple(range(1, n + 1)),
                        meta={"scenario": "seven-node", "r": 1.3, "budget_beta": 1.0})


def synthetic_air(n: int = 50, m_attach: int = 2, seed: int = 0, *, beta: float = 0.25,
                  recovery: float = 0.0352, death: float = 0.0279) -> SpreadingNetwork:
    """Scale-free route network with passenger counts.

    Routes come from a preferential-attachment graph. Passenger volume on a
    route grows with the product of its endpoint degrees (lognormal noise).
    Weights are passengers over the mean and node cost is passengers served
    over the maximum, as for the air-csv loader.
    """
    import networkx as nx

    g = nx.barabasi_albert_graph(n, m_attach, seed=seed)
    rng = np.random.default_rng(seed)
    deg = np.array([d for _, d in sorted(g.degree())], dtype=float)
    und = np.array(sorted(g.edges()), dtype=np.int64)
    pax = 1e4 * deg[und[:, 0]] * deg[und[:, 1]] * rng.lognormal(0.0, 0.5, und.shape[0])
    src = np.concatenate([und[:, 0], und[:, 1]])
    dst = np.concatenate([und[:, 1], und[:, 0]])
    pax2 = np.concatenate([pax, pax])
    served = np.bincount(src, weights=pax2, minlength=n)
    return make_network(
        n, src, dst, beta, w_beta=pax2 / pax2.mean(), delta_lo=recovery + death,
        cost=served / served.max(), node_ids=tuple(f"A{k:03d}" for k in range(n)),
        meta={"scenario": "synthetic-air", "seed": seed, "pax": pax2.tolist()},
    )


SCENARIO_MANIFEST: dict[str, dict[str, Any]] = {
    "sixteen-node": {
        "edges": SIXTEEN_EDGES, "fast_edges": sorted(SIXTEEN_FAST),
        "beta": {"uniform": 0.5, "fast": 0.8, "slow": 0.2},
        "delta": "lambda_max(B_mixed) - 1.6439 (about 0.4435), shared by all variants",
        "lambda_outbreak": "0.5 ** hops(node, 3)", "cost": {"high": [14, 15], "low": 0.1},
        "r": 2.0,
    },
    "seven-node": {
        "edges": SEVEN_EDGES, "beta": 0.3, "w_67": 10.0, "delta": [0.3, 0.9], "delta_ceiling": 1.0,
        "lambda": [1.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.01], "cost": [0.01] * 6 + [1.0],
        "r": 1.3, "budget_beta": 1.0,
        "note": "node 7 outbreak rate 0.01 instead of 0 so its log-range stays finite",
    },
    "grid-wildfire": {
        "shape": [50, 80], "delta": 0.5, "r": 4.0, "diagonal_factor": DIAGONAL_FACTOR,
        "wind": {"speed": 8.0, "from": "W", "coeffs": list(WIND_COEFFS)},
        "budgets": {"beta": 2000.0, "lambda": 500.0, "tau": 1500.0}, "tau": [0.125, 1.0],
    },
    "synthetic-air": {"n": 50, "m_attach": 2, "beta": 0.25, "delta": 0.0352 + 0.0279, "r": 10.7},
}

BUILTINS = ("sixteen-node", "seven-node", "grid-wildfire", "synthetic-air")


def builtin_examples(name: str, **params) -> SpreadingNetwork:
    """Build a named example network. Extra keyword arguments go to its generator."""
    if name == "sixteen-node":
        return sixteen_node(**params)
    if name == "seven-node":
        return seven_node(**params)
    if name == "grid-wildfire":
        shape = params.pop("shape", None)
        if shape is None and "n" in params:
            shape = grid_shape_for(int(params.pop("n")))
        h, w = shape or (50, 80)
        wind = params.pop("wind", (8.0, 270.0))
        speed, bearing = wind
        if isinstance(bearing, str):
            bearing = COMPASS[bearing.upper()]
        land = wildfire_landscape(h, w, wind_speed=float(speed), wind_dir=float(bearing))
        net = build_grid_network(land, **params)
        return net.with_updates(meta={**dict(net.meta), "scenario": "grid-wildfire"})
    if name == "synthetic-air":
        return synthetic_air(**params)
    raise ValueError(f"unknown example {name!r}; choose from {BUILTINS}")


def scale_budgets(n: int, reference_n: int = 4000, **budgets: float) -> dict[str, float]:
    """Budgets proportional to network size, relative to the 4000-cell example."""
    return {k: v * n / reference_n for k, v in budgets.items()}
