from __future__ import annotations

import io
import json
import math

import numpy as np
import pytest

from spreadrisk.allocate import zero_impact_nodes
from spreadrisk.costgo import compute_cost_to_go
from spreadrisk.errors import UnsupportedNetworkError
from spreadrisk.model import build_system_matrix, make_network
from spreadrisk.scenario import (CITY, WATER, GridLandscape, apply_wind, build_grid_network,
                                 builtin_examples, load_landscape, scale_budgets, uniform_landscape,
                                 wildfire_landscape, wind_multiplier)


def cell(net, r, c):
    return r * net.grid_shape[1] + c


def risk_grid(net, r=4.0):
    p = compute_cost_to_go(build_system_matrix(net), net.cost, r).p
    return (p * net.lambda_hi * net.tau_hi).reshape(net.grid_shape)


def test_grid_degrees():
    net = build_grid_network(uniform_landscape(5, 6), 0.5)
    deg = net.in_degree()
    assert deg[cell(net, 2, 3)] == 8
    for r, c in ((0, 0), (0, 5), (4, 0), (4, 5)):
        assert deg[cell(net, r, c)] == 3
    assert deg[cell(net, 0, 2)] == 5
    assert np.all(net.delta_lo == 0.5)


def test_vegetation_rate_and_diagonal_factor():
    net = build_grid_network(uniform_landscape(3, 3, vegetation=1.0), 0.5, diagonal_factor=0.83)
    centre = cell(net, 1, 1)
    into = net.dst == centre
    horiz = into & (net.src == cell(net, 1, 0))
    diag = into & (net.src == cell(net, 0, 0))
    assert net.beta_hi[horiz][0] == pytest.approx(2.0)
    assert net.beta_hi[diag][0] == pytest.approx(2.0 * 0.83)


def test_city_rate():
    land = uniform_landscape(3, 3)
    cls = land.cls.copy()
    cls[1, 1] = CITY
    land = GridLandscape(3, 3, cls, land.value, land.cost, land.lam)
    net = build_grid_network(land, 0.5)
    horiz = (net.dst == cell(net, 1, 1)) & (net.src == cell(net, 1, 2))
    assert net.beta_hi[horiz][0] == pytest.approx(0.5)


def test_water_cell_isolated():
    land = uniform_landscape(4, 4, vegetation=0.5)
    cls = land.cls.copy()
    cls[1, 2] = WATER
    land = GridLandscape(4, 4, cls, land.value, land.cost, land.lam)
    net = build_grid_network(land, 0.5)
    w = cell(net, 1, 2)
    assert not np.any(net.dst == w) and not np.any(net.src == w)
    assert net.cost[w] == 0.0
    assert zero_impact_nodes(net, net.cost)[w]


def test_wind_multiplier_values():
    assert wind_multiplier(0.0, 8.0) == pytest.approx(math.exp(0.36), rel=1e-12)
    assert wind_multiplier(0.0, 8.0) == pytest.approx(1.433, abs=5e-4)
    assert wind_multiplier(math.pi, 8.0) == pytest.approx(math.exp(0.36 - 2.096), rel=1e-12)
    assert wind_multiplier(math.pi, 8.0) == pytest.approx(0.176, abs=5e-4)
    assert np.all(wind_multiplier(np.linspace(0, np.pi, 7), 0.0) == 1.0)


def test_westerly_wind_boosts_eastward_spread():
    base = build_grid_network(uniform_landscape(3, 3), 0.5)
    windy = apply_wind(base, (8.0, "W"))
    c = cell(base, 1, 1)
    east = (base.src == c) & (base.dst == cell(base, 1, 2))
    west = (base.src == c) & (base.dst == cell(base, 1, 0))
    north = (base.src == c) & (base.dst == cell(base, 0, 1))
    ratio = windy.beta_hi / base.beta_hi
    assert ratio[east][0] == pytest.approx(math.exp(0.36))
    assert ratio[west][0] == pytest.approx(math.exp(0.36 - 2.096))
    assert ratio[north][0] == pytest.approx(math.exp(0.36 - 1.048))
    assert apply_wind(base, (0.0, "W")) is base


def test_wind_needs_grid():
    with pytest.raises(UnsupportedNetworkError):
        apply_wind(make_network(2, [0], [1], [0.5]), (8.0, 270.0))


def test_rotating_wind_rotates_risk_map():
    land = uniform_landscape(9, 9, vegetation=0.3)
    west = risk_grid(apply_wind(build_grid_network(land, 0.5), (8.0, "W")))
    north = risk_grid(apply_wind(build_grid_network(land, 0.5), (8.0, "N")))
    # a clockwise quarter turn maps eastward spread onto southward spread
    assert np.allclose(np.rot90(west, k=-1), north, rtol=1e-10)


def test_uniform_risk_map_symmetric():
    g = risk_grid(build_grid_network(uniform_landscape(7, 7, vegetation=0.3), 0.5))
    for img in (np.flipud(g), np.fliplr(g), g.T, np.rot90(g)):
        assert np.allclose(img, g, rtol=1e-10)
    assert np.unravel_index(np.argmax(g), g.shape) == (3, 3)


def test_grid_deterministic():
    a = builtin_examples("grid-wildfire", n=250)
    b = builtin_examples("grid-wildfire", n=250)
    assert np.array_equal(a.beta_hi, b.beta_hi) and np.array_equal(a.src, b.src)


def test_builtin_sixteen_uniform():
    net = builtin_examples("sixteen-node")
    assert net.n == 16
    assert np.all(net.cost == 1.0) and np.all(net.beta_hi == 0.5) and np.all(net.lambda_hi == 1.0)


def test_builtin_sixteen_variants():
    cost = builtin_examples("sixteen-node", variant="cost")
    assert cost.cost[13] == cost.cost[14] == 1.0 and np.allclose(np.delete(cost.cost, [13, 14]), 0.1)
    spread = builtin_examples("sixteen-node", variant="spreading")
    assert set(np.unique(spread.beta_hi)) == {0.2, 0.8}
    outbreak = builtin_examples("sixteen-node", variant="outbreak")
    assert int(np.argmax(outbreak.lambda_hi)) == 2


def test_builtin_seven_node():
    net = builtin_examples("seven-node")
    assert net.n == 7
    ids = net.node_ids
    w67 = [net.w_beta[k] for k in range(net.m) if {ids[net.src[k]], ids[net.dst[k]]} == {6, 7}]
    assert w67 == [10.0, 10.0]
    assert int(np.argmax(net.lambda_hi)) == 0 and int(np.argmax(net.cost)) == 6


def test_builtin_grid_size():
    assert builtin_examples("grid-wildfire").n == 4000
    assert builtin_examples("grid-wildfire", n=1000).grid_shape == (25, 40)


def test_builtin_synthetic_air_scale_free():
    net = builtin_examples("synthetic-air", n=200, seed=1)
    deg = net.out_degree()
    assert net.n == 200 and deg.max() >= 5 * np.median(deg)
    assert net.w_beta.mean() == pytest.approx(1.0)


def test_builtin_unknown():
    with pytest.raises(ValueError):
        builtin_examples("nope")


def test_landscape_round_trip():
    land = wildfire_landscape(10, 16)
    back = load_landscape(io.StringIO(json.dumps(land.to_json())))
    assert np.array_equal(back.cls, land.cls) and np.allclose(back.cost, land.cost)
    assert back.wind_speed == land.wind_speed


def test_landscape_validation():
    with pytest.raises(ValueError):
        uniform_landscape(1, 5)
    with pytest.raises(ValueError):
        uniform_landscape(3, 3, vegetation=1.5)


def test_scale_budgets():
    assert scale_budgets(1000, beta=2000, lam=500) == {"beta": 500.0, "lam": 125.0}
