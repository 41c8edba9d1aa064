import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schrodinger_lab import (Density, build_circle_grid, dual_ascent, dual_objective,
                             ipfp_solve, q_apply, verify_attainment)
from schrodinger_lab.duality import AscentError, dual_gradient
from schrodinger_lab.oracle import two_point_scan_cost


def test_q_at_time_zero(circle64, rng):
    u = rng.normal(size=64)
    np.testing.assert_allclose(q_apply(circle64, u, 0.3, 0.0), u, atol=1e-13)


def test_q_laws(circle64, rng):
    for _ in range(10):
        u = rng.normal(size=64) * 3
        c = rng.normal() * 10
        s, t = rng.uniform(0, 0.5, 2)
        np.testing.assert_allclose(q_apply(circle64, u + c, 0.2, t), q_apply(circle64, u, 0.2, t) + c,
                                   atol=1e-10)
        np.testing.assert_allclose(q_apply(circle64, q_apply(circle64, u, 0.2, s), 0.2, t),
                                   q_apply(circle64, u, 0.2, s + t), atol=1e-10)
        v = u + np.abs(rng.normal(size=64))
        assert np.all(q_apply(circle64, u, 0.2, t) <= q_apply(circle64, v, 0.2, t) + 1e-12)


def test_uniform_objective_zero(circle64):
    u = Density(circle64, np.ones(64))
    sol = ipfp_solve(circle64, u, u, 0.4)
    assert abs(dual_objective(circle64, np.zeros(64), sol.mu0, sol.mu1, 0.4)) < 1e-14
    rep = verify_attainment(circle64, sol)
    assert rep.ok and rep.q_gap == 0.0


def test_objective_shift_invariant(circle64, smooth64, rng):
    u = rng.normal(size=64)
    for orient in ("forward", "backward"):
        a = dual_objective(circle64, u, smooth64.mu0, smooth64.mu1, 0.2, orient)
        b = dual_objective(circle64, u + 4.2, smooth64.mu0, smooth64.mu1, 0.2, orient)
        assert abs(a - b) < 1e-12


def test_two_point_objective_below_scan(two_point, two_point_solution, rng):
    sol = two_point_solution
    scan = two_point_scan_cost(two_point, sol.mu0, sol.mu1, 1.0)
    for _ in range(25):
        u = rng.normal(size=2) * rng.choice([0.1, 1.0, 10.0])
        assert dual_objective(two_point, u, sol.mu0, sol.mu1, 1.0) <= scan + 1e-8


def test_attainment_randomized(circle64, rng):
    worst = 0.0
    for k in range(50):
        eps = (0.2, 1.0)[k % 2]
        sol = ipfp_solve(circle64, Density(circle64, rng.uniform(0.2, 2, 64)),
                         Density(circle64, rng.uniform(0.2, 2, 64)), eps)
        rep = verify_attainment(circle64, sol)
        assert rep.ok
        worst = max(worst, rep.forward_gap, rep.backward_gap)
    assert worst <= 1e-8


def test_attainment_gauge_robust(circle64, smooth64):
    for c in (-2.0, 0.5, 7.0):
        assert verify_attainment(circle64, smooth64.regauged(c)).ok


def test_fixed_point_at_phi0(circle64, smooth64):
    g = dual_gradient(circle64, smooth64.phi0, smooth64.mu0, smooth64.mu1, 0.2)
    assert np.abs(g).max() <= 1e-9
    u = dual_ascent(circle64, smooth64.mu0, smooth64.mu1, 0.2, u=smooth64.phi0, steps=20)
    assert np.ptp(u - smooth64.phi0) <= 1e-9


def test_ascent_recovers_phi0_two_point(two_point, two_point_solution):
    sol = two_point_solution
    history = []
    u = dual_ascent(two_point, sol.mu0, sol.mu1, 1.0, steps=500, history=history)
    assert np.ptp(u - sol.phi0) <= 1e-6
    assert max(history) <= sol.cost + 1e-12
    assert np.all(np.diff(history) >= -1e-12)


def test_ascent_on_circle(circle64, smooth64):
    history = []
    u = dual_ascent(circle64, smooth64.mu0, smooth64.mu1, 0.2, steps=1500, history=history)
    assert np.ptp(u - smooth64.phi0) <= 1e-6
    assert max(history) <= smooth64.cost + 1e-12


def test_ascent_divergence_reported(circle64, smooth64):
    with pytest.raises(AscentError, match="reduce the rate"):
        dual_ascent(circle64, smooth64.mu0, smooth64.mu1, 0.2, steps=50, rate=50.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1e-3, 1.0, 30.0, 1e3]),
       st.sampled_from(["forward", "backward"]))
def test_weak_duality(seed, scale, orientation):
    sp = build_circle_grid(24, 1.0)
    r = np.random.default_rng(seed)
    sol = ipfp_solve(sp, Density(sp, r.uniform(0.2, 2, 24)), Density(sp, r.uniform(0.2, 2, 24)),
                     float(r.choice([0.2, 1.0])))
    u = r.normal(size=24) * scale
    assert dual_objective(sp, u, sol.mu0, sol.mu1, sol.eps, orientation) <= sol.cost + 1e-10
