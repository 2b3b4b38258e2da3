from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadrisk.allocate import (NaturalValues, TransformedVariables, lse_residuals, resource_bounds,
                                 transform_variables)
from spreadrisk.costgo import compute_cost_to_go, coupling_residual, spectral_abscissa
from spreadrisk.errors import DomainError
from spreadrisk.model import build_system_matrix, make_network

from conftest import random_network


def natural_at(net, p, beta, delta, lam, tau, r):
    return NaturalValues(p=np.asarray(p, float), beta=np.asarray(beta, float), delta=np.asarray(delta, float),
                         lam=np.asarray(lam, float), tau=np.asarray(tau, float), r=float(r))


def test_zero_resource_point():
    net = random_network(np.random.default_rng(0), 6, 0.4, ranges=True)
    nv = natural_at(net, np.ones(6), net.beta_hi, net.delta_lo, net.lambda_hi, net.tau_hi, 0.0)
    tv = transform_variables(net, nv)
    for arr in (tv.u, tv.v, tv.z, tv.sigma):
        assert np.all(arr == 0.0)


def test_log_two_values():
    net = make_network(2, [0], [1], [0.5], delta_lo=1.0, delta_ceiling=2.0)
    nv = natural_at(net, [1, 1], [0.25], [1, 1], [1, 1], [1, 1], 0.0)
    tv = transform_variables(net, nv)
    assert tv.u[0] == pytest.approx(math.log(2), rel=1e-15)
    assert tv.rho == pytest.approx(math.log(2), rel=1e-15)


def test_domain_error_names_variable():
    net = make_network(2, [0], [1], [0.5], delta_lo=1.0)
    nv = natural_at(net, [1, 1], [-0.1], [1, 1], [1, 1], [1, 1], 0.0)
    with pytest.raises(DomainError, match="beta"):
        transform_variables(net, nv)
    nv = natural_at(net, [0, 1], [0.1], [1, 1], [1, 1], [1, 1], 0.0)
    with pytest.raises(DomainError, match="p"):
        transform_variables(net, nv)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31))
def test_round_trip_and_monotonicity(n, seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n, 0.4, ranges=True)
    nv = natural_at(net, rng.uniform(0.1, 5, n), rng.uniform(net.beta_lo, net.beta_hi),
                    rng.uniform(net.delta_lo, net.delta_hi), rng.uniform(net.lambda_lo, net.lambda_hi),
                    rng.uniform(net.tau_lo, net.tau_hi), rng.uniform(0, 3))
    tv = transform_variables(net, nv)
    back = transform_variables(net, tv, "inverse")
    for name in ("p", "beta", "delta", "lam", "tau"):
        assert np.allclose(getattr(back, name), getattr(nv, name), rtol=1e-12, atol=0), name
    assert back.r == pytest.approx(nv.r, rel=1e-12, abs=1e-12)
    b = resource_bounds(net, 3.0)
    assert np.all((tv.u >= -1e-12) & (tv.u <= b.u + 1e-12))
    assert np.all((tv.v >= -1e-12) & (tv.v <= b.v + 1e-12))
    assert np.all((tv.z >= -1e-12) & (tv.z <= b.z + 1e-12))
    assert np.all((tv.sigma >= -1e-12) & (tv.sigma <= b.sigma + 1e-12))
    # less beta, more delta, less lambda, less tau -> more resource
    more = natural_at(net, nv.p, nv.beta * 0.99, nv.delta + 1e-3 * (net.delta_ceiling - nv.delta),
                      nv.lam * 0.99, nv.tau * 0.99, nv.r)
    tv2 = transform_variables(net, more)
    assert np.all(tv2.u > tv.u) and np.all(tv2.v > tv.v)
    assert np.all(tv2.z > tv.z) and np.all(tv2.sigma > tv.sigma)


def one_node():
    return make_network(1, [], [], [], delta_lo=0.5, delta_hi=1.5, delta_ceiling=2.0, cost=1.0)


def test_lse_scalar_boundary():
    net = one_node()
    tv = transform_variables(net, natural_at(net, [0.5], [], [1.0], [1.0], [1.0], 1.0))
    # terms (2 - 1)/3 and 1/(0.5 * 3)
    assert lse_residuals(tv, net)[0] == pytest.approx(math.log(1 / 3 + 2 / 3), abs=1e-14)


def test_lse_scalar_strict():
    net = one_node()
    tv = transform_variables(net, natural_at(net, [1.0], [], [1.0], [1.0], [1.0], 1.0))
    q = lse_residuals(tv, net)[0]
    assert q == pytest.approx(math.log(2 / 3), abs=1e-14) and q < 0


def test_lse_zero_cost_term_dropped():
    net = make_network(2, [0], [1], [0.5], delta_lo=1.0, cost=[0.0, 1.0])
    ctg = compute_cost_to_go(build_system_matrix(net), net.cost, 1.0).p
    tv = transform_variables(net, natural_at(net, ctg, [0.5], [1, 1], [1, 1], [1, 1], 1.0))
    q = lse_residuals(tv, net)
    assert np.all(np.isfinite(q)) and np.allclose(q, 0.0, atol=1e-12)


def test_lse_sign_matches_coupling():
    rng = np.random.default_rng(2024)
    checked = feasible = 0
    for _ in range(100):
        n = int(rng.integers(2, 15))
        net = random_network(rng, n, 0.3, ranges=True)
        beta = rng.uniform(net.beta_lo, net.beta_hi)
        delta = rng.uniform(net.delta_lo, net.delta_hi)
        A = build_system_matrix(net, beta, delta)
        r = max(spectral_abscissa(A), 0.0) + rng.uniform(0.05, 1.0)
        p = compute_cost_to_go(A, np.maximum(net.cost, 1e-3), r).p * rng.uniform(0.8, 1.25, n)
        tv = transform_variables(net, natural_at(net, p, beta, delta, net.lambda_hi, net.tau_hi, r))
        q = lse_residuals(tv, net)
        res = coupling_residual(A, p, net.cost, r)
        clear = np.abs(res) > 1e-9
        assert np.array_equal(q[clear] <= 0, res[clear] <= 0)
        checked += int(clear.sum())
        feasible += int((res[clear] <= 0).sum())
    assert 0 < feasible < checked
