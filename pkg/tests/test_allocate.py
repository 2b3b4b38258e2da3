from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from spreadrisk.allocate import (AllocationProblem, Budgets, Variant, apply_vaccination_coupling,
                                 assemble_problem, solve_allocation)
from spreadrisk.costgo import compute_cost_to_go, coupling_residual, spectral_abscissa
from spreadrisk.errors import InfeasibleDiscountError
from spreadrisk.model import build_system_matrix, make_network, matrix_from_rates
from spreadrisk.scenario import seven_node, synthetic_air

from conftest import random_network


def two_node_pair():
    """Bidirectional 2-node chain whose beta channel has log-range 1 per edge."""
    bh = np.array([0.8, 0.6])
    return make_network(2, [0, 1], [1, 0], bh, beta_lo=bh / math.e, delta_lo=1.0,
                        cost=[1.0, 0.4], lambda_hi=[1.0, 1.5])


def grid_oracle(net, r, budget, step=1e-3):
    """Brute force: log max_i p_i lam_i tau_i over u on a grid with u1 + u2 <= budget."""
    g = np.arange(0.0, 1.0 + step / 2, step)
    u1, u2 = np.meshgrid(g, g, indexing="ij")
    ok = u1 + u2 <= budget + 1e-12
    b10 = net.beta_hi[0] * np.exp(-u1[ok])      # 0 infects 1
    b01 = net.beta_hi[1] * np.exp(-u2[ok])      # 1 infects 0
    d0, d1 = net.delta_lo
    c0, c1 = net.cost
    # p^T (rI - A) = C with rI - A = [[r + d0, -b01], [-b10, r + d1]]
    det = (r + d0) * (r + d1) - b01 * b10
    p0 = (c0 * (r + d1) + c1 * b10) / det
    p1 = (c1 * (r + d0) + c0 * b01) / det
    risk = np.maximum(p0 * net.lambda_hi[0] * net.tau_hi[0], p1 * net.lambda_hi[1] * net.tau_hi[1])
    return float(np.log(risk.min()))


def solve(net, variant="min-max-risk", backend="auto", **kw):
    budgets = kw.pop("budgets")
    return solve_allocation(assemble_problem(AllocationProblem(net, variant, budgets, **kw)), backend=backend)


def test_zero_budget_is_baseline():
    net = random_network(np.random.default_rng(4), 8, 0.3, ranges=True)
    A = build_system_matrix(net)
    r = max(spectral_abscissa(A), 0.0) + 0.5
    res = solve(net, budgets=Budgets(r_max=r))
    p = compute_cost_to_go(A, net.cost, r).p
    assert res.objective == pytest.approx(math.log(np.max(p * net.lambda_hi * net.tau_hi)), abs=1e-6)
    assert np.allclose(res.natural.beta, net.beta_hi) and np.allclose(res.natural.delta, net.delta_lo)
    assert np.allclose(res.natural.lam, net.lambda_hi) and np.allclose(res.natural.tau, net.tau_hi)
    assert sum(res.nonzero.values()) == 0


def test_zero_budget_ir_pins_resources():
    net = random_network(np.random.default_rng(5), 6, 0.3, ranges=True)
    prog = assemble_problem(AllocationProblem(net, "min-max-risk", Budgets(r_max=2.0)))
    L = prog.layout
    for cols in (L.u, L.v, L.z, L.sigma):
        assert np.all(cols < 0)


def test_tau_upper_one_bounds_sigma():
    net = make_network(2, [0], [1], [0.5], delta_lo=1.0, tau_hi=1.0)
    prog = assemble_problem(AllocationProblem(net, "min-max-risk", Budgets(tau=1.0, r_max=1.0)))
    sig = prog.layout.sigma
    assert np.allclose(prog.ub[sig], np.log(8.0)) and np.all(prog.lb[sig] == 0)


def test_risk_cap_ir_has_single_row():
    net = synthetic_air(30, seed=1)
    spec = AllocationProblem(net, "min-resources-risk-cap", Budgets(beta=np.inf, r_max=10.7),
                             risk_cap=0.01, seed_node=3)
    prog = assemble_problem(spec)
    assert prog.row_kind.count("risk-cap") == 1
    assert not any(k.startswith("budget") for k in prog.row_kind)


def test_brute_force_two_variables():
    net = two_node_pair()
    budget = 1.0            # half the total log-range
    res = solve(net, budgets=Budgets(beta=budget, r_max=1.0))
    oracle = grid_oracle(net, 1.0, budget)
    assert res.objective <= oracle + 1e-6
    assert oracle - res.objective <= 1e-3
    assert res.transformed.u.sum() <= budget + 1e-6


@pytest.mark.parametrize("backend", ["clarabel", "barrier", "cvxpy"])
def test_backends_agree_on_brute_force(backend):
    net = two_node_pair()
    res = solve(net, backend=backend, budgets=Budgets(beta=1.0, r_max=1.0))
    assert res.objective == pytest.approx(grid_oracle(net, 1.0, 1.0), abs=1e-3)


def test_budget_monotonicity():
    rng = np.random.default_rng(11)
    for _ in range(5):
        net = random_network(rng, int(rng.integers(3, 10)), 0.35, ranges=True)
        r = max(spectral_abscissa(build_system_matrix(net)), 0.0) + 0.5
        objs = [solve(net, budgets=Budgets(beta=g, lam=g, r_max=r)).objective for g in (0, 0.5, 1, 2)]
        assert all(b <= a + 1e-6 for a, b in zip(objs, objs[1:]))


@pytest.mark.parametrize("variant", ["min-max-risk", "min-spectral-bound", "known-outbreak-risk"])
def test_round_trip_feasibility(variant):
    rng = np.random.default_rng(8)
    net = random_network(rng, 12, 0.3, ranges=True, cost=(0.1, 1.0))
    r = max(spectral_abscissa(build_system_matrix(net)), 0.0) + 0.5
    kw = {"x0": rng.uniform(0, 1, 12)} if variant == "known-outbreak-risk" else {}
    res = solve(net, variant, budgets=Budgets(beta=2.0, delta=1.0, lam=1.0, tau=1.0, r_max=r), **kw)
    nv = res.natural
    A = matrix_from_rates(net.n, net.src, net.dst, nv.beta, nv.delta)
    C = np.zeros(net.n) if variant == "min-spectral-bound" else net.cost
    resid = coupling_residual(A, nv.p, C, nv.r)
    assert np.all(resid <= 1e-6 * np.maximum(nv.p * (net.delta_ceiling + nv.r), 1.0))
    assert res.residuals["roundtrip"] <= 1e-9
    assert res.residuals["budgets"] <= 1e-6 and res.residuals["bounds"] <= 1e-6
    assert res.status == "optimal"


def test_known_outbreak_risk_is_weighted_cost_to_go():
    rng = np.random.default_rng(9)
    net = random_network(rng, 10, 0.3, ranges=True, cost=(0.1, 1.0))
    r = max(spectral_abscissa(build_system_matrix(net)), 0.0) + 0.5
    x0 = rng.uniform(0, 1, 10)
    res = solve(net, "known-outbreak-risk", budgets=Budgets(beta=1.0, r_max=r), x0=x0)
    nv = res.natural
    p = compute_cost_to_go(matrix_from_rates(10, net.src, net.dst, nv.beta, nv.delta), net.cost, nv.r).p
    assert res.risk == pytest.approx(float(p @ x0), rel=1e-5)
    seeded = solve(net, "known-outbreak-risk", budgets=Budgets(beta=1.0, r_max=r), seed_node=2)
    assert seeded.objective == pytest.approx(math.log(seeded.natural.p[2]), abs=1e-6)


def test_risk_cap_met_with_fewer_resources():
    net = synthetic_air(30, seed=1)
    r = 10.7
    p0 = compute_cost_to_go(build_system_matrix(net), net.cost, r).p
    pmin = compute_cost_to_go(build_system_matrix(net, beta=net.beta_lo), net.cost, r).p
    cap = p0[3] - 0.5 * (p0[3] - pmin[3])
    res = solve(net, "min-resources-risk-cap", budgets=Budgets(beta=np.inf, r_max=r), risk_cap=cap, seed_node=3)
    assert res.risk <= cap * (1 + 1e-6)
    assert 0 < res.transformed.u.sum() < np.sum(np.log(net.beta_hi / net.beta_lo) * net.w_beta)


def test_spectral_dominates_min_max_risk():
    rng = np.random.default_rng(21)
    for _ in range(4):
        net = random_network(rng, 10, 0.35, ranges=True, cost=(0.1, 1.0))
        r = max(spectral_abscissa(build_system_matrix(net)), 0.0) + 0.5
        b = Budgets(beta=1.5, r_max=r)
        spec = solve(net, "min-spectral-bound", budgets=b).natural
        risk = solve(net, budgets=b).natural
        a_spec = spectral_abscissa(matrix_from_rates(10, net.src, net.dst, spec.beta, spec.delta))
        a_risk = spectral_abscissa(matrix_from_rates(10, net.src, net.dst, risk.beta, risk.delta))
        assert a_spec <= a_risk + 1e-6
        # the optimal discount rate sits on the abscissa
        assert spec.r == pytest.approx(a_spec, abs=1e-4)


def test_infeasible_baseline_reports_abscissa():
    # directed 4-cycle: abscissa beta - delta = 0.5
    net = make_network(4, [0, 1, 2, 3], [1, 2, 3, 0], 1.0, delta_lo=0.5)
    a = spectral_abscissa(build_system_matrix(net))
    assert a == pytest.approx(0.5)
    with pytest.raises(InfeasibleDiscountError, match="spectral abscissa"):
        assemble_problem(AllocationProblem(net, "min-max-risk", Budgets(beta=1.0, r_max=a - 0.01)))


def test_variant_parse():
    assert Variant.parse("MinMaxRisk") is Variant.MIN_MAX_RISK
    assert Variant.parse("min_spectral_bound") is Variant.MIN_SPECTRAL_BOUND
    with pytest.raises(ValueError):
        Variant.parse("nope")
    with pytest.raises(ValueError):
        AllocationProblem(seven_node(), "min-resources-risk-cap")


def test_vaccination_zero_budget_is_baseline():
    net = seven_node()
    base = solve(net, budgets=Budgets(r_max=1.3))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vac = solve_allocation(apply_vaccination_coupling(
            AllocationProblem(net, "min-max-risk", Budgets(r_max=1.3)), range(7)))
    assert vac.objective == pytest.approx(base.objective, abs=1e-9)
    assert vac.vaccination == {}


def star():
    leaves = np.arange(1, 5)
    src = np.concatenate([np.zeros(4, int), leaves])
    dst = np.concatenate([leaves, np.zeros(4, int)])
    return make_network(5, src, dst, 0.4, delta_lo=0.3, delta_hi=0.9, delta_ceiling=1.0,
                        cost=[1.0, 0.1, 0.1, 0.1, 0.1])


def single_vaccination_objective(net, node, s, r):
    D = net.delta_ceiling
    beta = net.beta_hi.copy()
    into = net.dst == node
    beta[into] *= np.exp(-s / net.w_beta[into])
    delta = net.delta_lo.copy()
    delta[node] = D - (D - net.delta_lo[node]) * math.exp(-s / net.w_delta[node])
    p = compute_cost_to_go(matrix_from_rates(net.n, net.src, net.dst, beta, delta), net.cost, r).p
    return math.log(np.max(p * net.lambda_hi * net.tau_hi))


def test_star_vaccinates_centre_first():
    net = star()
    r, budget = 1.0, 0.5
    oracle = [single_vaccination_objective(net, i, budget, r) for i in range(5)]
    assert int(np.argmin(oracle)) == 0
    res = solve_allocation(apply_vaccination_coupling(
        AllocationProblem(net, "min-max-risk", Budgets(vaccination=budget, r_max=r)), range(5)))
    assert max(res.vaccination, key=res.vaccination.get) == 0
    assert res.objective <= min(oracle) + 1e-6
    # one shared variable drives delta and every incoming beta of the centre
    s0 = res.vaccination[0]
    assert res.transformed.v[0] == pytest.approx(s0)
    assert np.allclose(res.transformed.u[net.dst == 0], s0)


def test_vaccination_budget_counts_shared_variable_once():
    net = star()
    prog = apply_vaccination_coupling(AllocationProblem(net, "min-max-risk", Budgets(vaccination=0.5, r_max=1.0)),
                                      [0])
    row = prog.row_kind.index("budget:vaccination")
    G = prog.G.toarray()
    assert G[row].sum() == 1.0 and G[row, prog.layout.s[0]] == 1.0


def test_seven_node_vaccination_picks_one_and_six():
    net = seven_node()
    res = solve_allocation(apply_vaccination_coupling(
        AllocationProblem(net, "min-max-risk", Budgets(vaccination=1.0, r_max=1.3)), range(7)))
    chosen = {net.node_ids[i] for i, s in res.vaccination.items() if s > 0.05}
    assert {1, 6} <= chosen and 7 not in chosen


def test_vaccination_missing_node():
    with pytest.raises(ValueError):
        apply_vaccination_coupling(AllocationProblem(seven_node(), "min-max-risk", Budgets(vaccination=1.0)), [9])


def test_result_json_has_both_units():
    net = seven_node()
    res = solve(net, budgets=Budgets(beta=1.0, r_max=1.3))
    js = res.to_json(net.node_ids, (net.src, net.dst))
    assert {"objective", "residuals", "nonzero", "nodes", "edges"} <= set(js)
    assert {"beta", "u", "from", "to"} <= set(js["edges"])
    assert {"p", "delta", "v", "lambda", "z", "tau", "sigma", "y"} <= set(js["nodes"])
    k = int(np.argmax(res.transformed.u))
    assert js["edges"]["u"][k] == pytest.approx(res.transformed.u[k], rel=1e-11)
    assert (js["edges"]["from"][k], js["edges"]["to"][k]) == (net.node_ids[net.src[k]], net.node_ids[net.dst[k]])
