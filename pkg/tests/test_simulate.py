from __future__ import annotations

import io
import math
import warnings

import numpy as np
import pytest
from scipy.integrate import simpson

from spreadrisk.allocate import Budgets
from spreadrisk.costgo import compute_cost_to_go, spectral_abscissa
from spreadrisk.errors import ScheduleError, TimestepError
from spreadrisk.model import build_system_matrix, make_network
from spreadrisk.scenario import builtin_examples, scale_budgets
from spreadrisk.simulate import (default_dt, detection_experiment, discounted_cost, integrate_linear,
                                 integrate_meanfield, monte_carlo_validate, run_stochastic,
                                 sample_poisson_outbreaks, stochastic_costs, wildfire_comparison)
from spreadrisk.surveillance import SurveillanceConfig, max_revisit_intervals, periodic_schedule

from conftest import random_network


def single(delta=1.0):
    return make_network(1, [], [], [], delta_lo=delta)


def pair(beta=0.5):
    return make_network(2, [0], [1], [beta], delta_lo=1.0)


# ---------------------------------------------------------------- stochastic


def test_no_infected_neighbour_stays_susceptible():
    tr = run_stochastic(pair(), x0=[1], T=5.0, seed=3)
    assert np.all(tr.infected[:, 0] == 0) and np.all(tr.removed[:, 0] == 0)


def test_exponential_removal_mean():
    # with C = 1 and r = 0 the cost of one chain is its infectious period
    stats = stochastic_costs(single(), None, None, [0], [1.0], 0.0, 10_000, T=20.0, dt=0.01, seed=1)
    assert abs(stats.mean - 1.0) <= 3 * stats.se
    assert stats.se == pytest.approx(stats.costs.std(ddof=1) / 100.0)


def test_binomial_infection_frequency():
    dt, runs = 0.1, 4000
    hits = sum(int(run_stochastic(pair(), x0=[0], T=dt, dt=dt, seed=k).infected[1, 1]) for k in range(runs))
    prob = 0.5 * dt
    sd = math.sqrt(runs * prob * (1 - prob))
    assert abs(hits - runs * prob) <= 3 * sd


def test_state_invariants_and_conservation():
    rng = np.random.default_rng(0)
    net = random_network(rng, 15, 0.3, beta_max=1.5)
    tr = run_stochastic(net, x0=[0, 1, 2], T=10.0, seed=9)
    X, Z = tr.infected.astype(int), tr.removed.astype(int)
    assert np.all(X * Z == 0)
    assert np.all(np.diff(Z, axis=0) >= 0)
    S = 1 - X - Z
    assert np.all(S >= 0) and np.all(S + X + Z == 1)
    assert np.all((S.sum(1) + X.sum(1) + Z.sum(1)) == net.n)
    # a susceptible node only becomes infected, never removed directly
    assert np.all(~((S[:-1] == 1) & (Z[1:] == 1)))


def test_determinism():
    net = random_network(np.random.default_rng(1), 12, 0.3, beta_max=1.0)
    a = run_stochastic(net, x0=[0], T=5.0, seed=42)
    b = run_stochastic(net, x0=[0], T=5.0, seed=42)
    assert a.infected.tobytes() == b.infected.tobytes() and a.removed.tobytes() == b.removed.tobytes()
    s1 = stochastic_costs(net, None, None, [0], net.cost, 1.0, 300, seed=7)
    s2 = stochastic_costs(net, None, None, [0], net.cost, 1.0, 300, seed=7)
    assert s1.costs.tobytes() == s2.costs.tobytes()


def test_timestep_checks():
    with pytest.raises(TimestepError):
        run_stochastic(pair(), x0=[0], T=2.0, dt=1.5)
    with pytest.warns(UserWarning, match="dt"):
        run_stochastic(pair(), x0=[0], T=1.0, dt=0.5)


def test_default_dt():
    net = make_network(3, [0, 1], [2, 2], [0.5, 1.5], delta_lo=[1.0, 1.0, 0.5])
    assert default_dt(net) == pytest.approx(0.01 / 2.0)


def test_trace_csv():
    tr = run_stochastic(pair(), x0=[0], T=0.02, dt=0.01, seed=0)
    buf = io.StringIO()
    tr.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,node,X,Z" and lines[1] == "0,0,1,0" and len(lines) == 1 + 3 * 2


# ---------------------------------------------------------------- ODEs


def test_meanfield_zero_equilibrium():
    net = random_network(np.random.default_rng(2), 6, 0.4)
    tr = integrate_meanfield(net, T=5.0, dt=0.01)
    assert np.all(tr.infected == 0) and np.all(tr.removed == 0)


def test_meanfield_scalar_closed_form():
    tr = integrate_meanfield(single(), chi0=[1.0], T=5.0, dt=0.01)
    assert np.allclose(tr.infected[:, 0], np.exp(-tr.t), atol=1e-9)
    assert np.allclose(tr.removed[:, 0], 1 - np.exp(-tr.t), atol=1e-9)


def test_removed_equals_integral_of_recoveries():
    net = random_network(np.random.default_rng(3), 8, 0.4, beta_max=1.0)
    chi0 = np.zeros(8)
    chi0[:2] = 0.5
    tr = integrate_meanfield(net, chi0=chi0, T=8.0, dt=0.005)
    integral = simpson(net.delta_lo[None, :] * tr.infected, x=tr.t, axis=0)
    assert np.allclose(tr.removed[-1] - tr.removed[0], integral, atol=1e-6)


def test_meanfield_box_and_monotone_removed():
    net = random_network(np.random.default_rng(4), 10, 0.5, beta_max=2.0)
    tr = integrate_meanfield(net, chi0=np.full(10, 0.3), z0=np.full(10, 0.1), T=10.0)
    assert tr.infected.min() >= -1e-9 and (tr.infected + tr.removed).max() <= 1 + 1e-9
    assert np.all(np.diff(tr.removed, axis=0) >= -1e-12)


def test_meanfield_rejects_bad_start():
    with pytest.raises(ValueError):
        integrate_meanfield(single(), chi0=[0.8], z0=[0.5])


def test_rk4_fourth_order():
    net = random_network(np.random.default_rng(5), 6, 0.5, beta_max=1.0)
    ends = [integrate_meanfield(net, chi0=np.full(6, 0.2), T=4.0, dt=h).infected[-1] for h in (0.2, 0.1, 0.05)]
    ratio = np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2])
    assert 12 < ratio < 20


def test_linear_zero_and_scalar():
    assert np.all(integrate_linear(np.array([[-1.0]]), [0.0], T=3.0).infected == 0)
    lin = integrate_linear(np.array([[-1.0]]), [1.0], T=5.0, dt=0.01)
    mf = integrate_meanfield(single(), chi0=[1.0], T=5.0, dt=0.01)
    assert np.allclose(lin.infected, np.exp(-lin.t)[:, None], atol=1e-9)
    assert np.allclose(lin.infected, mf.infected, atol=1e-12)


def test_linear_dominates_meanfield():
    rng = np.random.default_rng(6)
    for _ in range(10):
        n = int(rng.integers(2, 11))
        net = random_network(rng, n, 0.4, beta_max=1.0)
        x0 = rng.uniform(0, 0.5, n)
        lin = integrate_linear(build_system_matrix(net), x0, T=5.0, dt=0.01)
        mf = integrate_meanfield(net, chi0=x0, T=5.0, dt=0.01)
        assert np.all(lin.infected >= mf.infected - 1e-9)
        assert lin.infected.min() >= -1e-9


# ---------------------------------------------------------------- costs


def test_discounted_cost_values():
    lin = integrate_linear(np.array([[-1.0]]), [1.0], T=20.0, dt=0.01)
    assert discounted_cost(lin, [0.0], 1.0) == 0.0
    assert discounted_cost(lin, [1.0], 1.0) == pytest.approx(0.5, abs=1e-4)


def test_discounted_cost_matches_cost_to_go():
    net = random_network(np.random.default_rng(7), 8, 0.3)
    A = build_system_matrix(net)
    r = max(spectral_abscissa(A), 0.0) + 1.0
    x0 = np.random.default_rng(8).uniform(0, 1, 8)
    quad = discounted_cost(integrate_linear(A, x0, 20 / r, 0.01), net.cost, r)
    assert quad == pytest.approx(float(compute_cost_to_go(A, net.cost, r).p @ x0), rel=1e-4)


def test_short_horizon_warns():
    lin = integrate_linear(np.array([[-0.1]]), [1.0], T=1.0, dt=0.01)
    with pytest.warns(UserWarning, match="horizon"):
        discounted_cost(lin, [1.0], 0.1)


def test_validate_single_node_all_equal():
    rep = monte_carlo_validate(single(), x0=[0], C=[1.0], r=1.0, runs=2000, seed=3)
    assert rep.linear == pytest.approx(0.5, abs=1e-4)
    assert rep.meanfield == pytest.approx(rep.linear, abs=1e-12)
    assert abs(rep.stochastic_mean - rep.meanfield) <= 3 * rep.stochastic_se + 0.005
    assert rep.holds


def test_validate_zero_start():
    net = random_network(np.random.default_rng(9), 5, 0.4)
    rep = monte_carlo_validate(net, x0=[], C=net.cost, r=1.0, runs=100)
    assert rep.stochastic_mean == rep.meanfield == rep.linear == 0.0


def test_validate_needs_runs():
    with pytest.raises(ValueError):
        monte_carlo_validate(single(), runs=10)


# ---------------------------------------------------------------- Poisson and detection


def test_poisson_zero_rate():
    assert sample_poisson_outbreaks(0.0, 100.0).times.size == 0


def test_poisson_count_and_counting_function():
    s = sample_poisson_outbreaks(1.0, 1e4, seed=5)
    assert abs(s.times.size - 1e4) <= 3 * math.sqrt(1e4)
    assert s.count(0.0) == 0 and s.count(1e4) == s.times.size
    assert np.all(np.diff(s.times) >= 0)
    assert s.times.max() <= 1e4


def test_poisson_interval_probability():
    lam, t, k = 2.0, 0.3, 20_000
    s = sample_poisson_outbreaks(lam, t * k, seed=6)
    hit = np.zeros(k, dtype=bool)
    hit[np.minimum((s.times // t).astype(int), k - 1)] = True
    exact = 1 - math.exp(-lam * t)
    se = math.sqrt(exact * (1 - exact) / k)
    assert abs(hit.mean() - exact) <= 3 * se


def test_poisson_exponential_gaps():
    s = sample_poisson_outbreaks(3.0, 5e3, seed=7)
    gaps = np.diff(np.concatenate([[0.0], s.times]))
    assert abs(gaps.mean() - 1 / 3) <= 3 * gaps.std() / math.sqrt(gaps.size)


def detection_setup(multiple):
    p, lam = np.array([1.0, 0.4]), np.array([0.5, 2.0])
    cfg = SurveillanceConfig(R_max=0.2, eps_R=0.0)
    tau = max_revisit_intervals(p, lam, cfg) * multiple
    return p, lam, cfg, periodic_schedule(tau, 2000 * tau.max())


def test_detection_compliant_schedule_within_bound():
    p, lam, cfg, sched = detection_setup(1.0)
    rep = detection_experiment(None, p, lam, sched, cfg, runs=20, seed=1)
    assert rep.compliant_schedule and rep.within_bound
    assert rep.intervals.min() >= 20 * 2000


def test_detection_double_interval_exceeds():
    p, lam, cfg, sched = detection_setup(2.0)
    rep = detection_experiment(None, p, lam, sched, cfg, runs=20, seed=1)
    assert not rep.compliant_schedule and rep.exceeds_bound


def test_detection_schedule_errors():
    cfg = SurveillanceConfig(1.0)
    with pytest.raises(ScheduleError):
        detection_experiment(None, [1.0, 1.0], [1.0, 1.0], [[1.0]], cfg)
    with pytest.raises(ScheduleError):
        detection_experiment(None, [1.0], [1.0], [[2.0, 1.0]], cfg)


def test_risk_schedule_beats_lawnmower_on_small_landscape():
    n = 250
    net = builtin_examples("grid-wildfire", n=n)
    budgets = Budgets(r_max=4.0, **scale_budgets(n, beta=2000, lam=500, tau=1500))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = wildfire_comparison(net, budgets, 4.0, runs=200, seed=0)
    assert rep.risk_arm.mean < rep.spectral_arm.mean
    assert rep.separation >= 2.0
    assert np.all(rep.risk_arm.warning_time >= 0)
