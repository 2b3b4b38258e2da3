from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadrisk.costgo import (check_feasibility, compute_cost_to_go, cost_to_go_lp_check,
                               coupling_residual, removal_cost_vector, spectral_abscissa)
from spreadrisk.errors import InfeasibleDiscountError
from spreadrisk.model import build_system_matrix, make_network
from spreadrisk.scenario import grid_neighbours, sixteen_node
from spreadrisk.simulate import discounted_cost, integrate_linear

from conftest import dense_abscissa, random_network

A2 = np.array([[-1.0, 0.0], [0.5, -1.0]])


def cycle4():
    src = [0, 1, 2, 3, 1, 2, 3, 0]
    dst = [1, 2, 3, 0, 0, 1, 2, 3]
    return build_system_matrix(make_network(4, src, dst, 0.5, delta_lo=1.0))


def test_scalar_cost_to_go():
    assert compute_cost_to_go([[-1.0]], [1.0], 1.0).p == pytest.approx([0.5])


def test_two_node_hand_inverse():
    # (rI - A) = [[2, 0], [-0.5, 2]]; transpose solve by hand gives p2 = 1/2, p1 = (1 + 0.25)/2
    ctg = compute_cost_to_go(A2, [1.0, 1.0], 1.0)
    assert ctg.p == pytest.approx([0.625, 0.5], abs=1e-14)
    assert ctg.residual <= 1e-12


def test_zero_cost_gives_zero():
    assert np.all(compute_cost_to_go(A2, [0.0, 0.0], 1.0).p == 0.0)


def test_lp_scalar_and_two_node():
    assert cost_to_go_lp_check([[-1.0]], [1.0], 1.0).p == pytest.approx([0.5], rel=1e-9)
    assert cost_to_go_lp_check(A2, [1.0, 1.0], 1.0).p == pytest.approx([0.625, 0.5], rel=1e-9)


def test_lp_matches_direct_random_n20():
    rng = np.random.default_rng(7)
    net = random_network(rng, 20, 0.2)
    A = build_system_matrix(net)
    r = max(spectral_abscissa(A), 0.0) + 0.3
    direct = compute_cost_to_go(A, net.cost, r).p
    lp = cost_to_go_lp_check(A, net.cost, r).p
    assert np.allclose(lp, direct, rtol=1e-6, atol=1e-12)


def test_infeasible_discount_reports_abscissa():
    A = cycle4()
    with pytest.raises(InfeasibleDiscountError) as err:
        compute_cost_to_go(A, np.ones(4), -0.1)
    assert err.value.abscissa == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InfeasibleDiscountError):
        cost_to_go_lp_check(A, np.ones(4), -0.1)


def test_abscissa_diagonal():
    assert spectral_abscissa(np.diag([-0.5, -2.0, -1.0])) == pytest.approx(-0.5)


def test_abscissa_four_cycle():
    # circulant oracle: adjacency eigenvalue 2, so 2 * 0.5 - 1 = 0
    assert spectral_abscissa(cycle4()) == pytest.approx(0.0, abs=1e-12)


def test_abscissa_sixteen_node_reconstruction():
    A = build_system_matrix(sixteen_node("spreading"))
    assert spectral_abscissa(A) == pytest.approx(1.6439, abs=1e-9)


def test_abscissa_power_iteration_matches_dense():
    # 20 x 20 grid: above the dense cut-off, so the power iteration path runs
    src, dst, diag = grid_neighbours(20, 20)
    rng = np.random.default_rng(0)
    beta = rng.uniform(0.1, 0.6, src.size)
    A = build_system_matrix(make_network(400, src, dst, beta, delta_lo=rng.uniform(0.5, 1.5, 400)))
    assert spectral_abscissa(A) == pytest.approx(dense_abscissa(A), abs=1e-8)


def test_check_feasibility():
    ok, a = check_feasibility([[-1.0]], 0.5)
    assert ok and a == pytest.approx(-1.0)
    ok, a = check_feasibility(cycle4(), 0.0)
    assert not ok
    ok, _ = check_feasibility(cycle4(), 1e-6)
    assert ok
    assert np.all(compute_cost_to_go(cycle4(), np.ones(4), 1e-6).p > 0)


def test_removal_cost_vector():
    net = make_network(3, [0], [1], [0.5], delta_lo=[0.5, 0.2, 1.0], delta_hi=[1.0, 0.4, 1.5])
    delta = np.array([0.7, 0.3, 1.2])
    assert np.array_equal(removal_cost_vector(net, delta), delta)
    one = make_network(1, [], [], [], delta_lo=1.0)
    C = removal_cost_vector(one, [1.0])
    # p = delta / (r + delta) at r = 0: total removal probability 1
    assert compute_cost_to_go([[-1.0]], C, 0.0).p == pytest.approx([1.0])


def test_coupling_residual_zero_at_solution():
    rng = np.random.default_rng(1)
    net = random_network(rng, 15, 0.3)
    A = build_system_matrix(net)
    r = spectral_abscissa(A) + 0.5
    p = compute_cost_to_go(A, net.cost, r).p
    res = coupling_residual(A, p, net.cost, r)
    assert np.abs(res).max() <= 1e-8 * (1 + net.cost.max())


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**31))
def test_monotone_in_cost_and_discount(n, seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n, 0.3)
    A = build_system_matrix(net)
    r = spectral_abscissa(A) + rng.uniform(0.05, 1.0)
    p = compute_cost_to_go(A, net.cost, r).p
    C2 = net.cost.copy()
    C2[rng.integers(n)] += rng.uniform(0.1, 1.0)
    assert np.all(compute_cost_to_go(A, C2, r).p >= p - 1e-12)
    assert np.all(compute_cost_to_go(A, net.cost, r + 0.3).p <= p + 1e-12)


def test_quadrature_matches_cost_to_go():
    rng = np.random.default_rng(5)
    for _ in range(5):
        net = random_network(rng, int(rng.integers(2, 11)), 0.3)
        A = build_system_matrix(net)
        r = max(spectral_abscissa(A), 0.0) + 1.0
        x0 = rng.uniform(0, 1, net.n)
        quad = discounted_cost(integrate_linear(A, x0, 20.0 / r, 0.01), net.cost, r)
        exact = float(compute_cost_to_go(A, net.cost, r).p @ x0)
        assert quad == pytest.approx(exact, rel=1e-4)
