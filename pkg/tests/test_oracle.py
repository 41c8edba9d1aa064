import io

import numpy as np
import pytest

from schrodinger_lab import build_circle_grid, build_interval_grid, w2_exact_1d, w2_lp_small, \
    zero_noise_sweep
from schrodinger_lab.oracle import SweepPairingError, write_sweep_csv


def bump(c):
    return lambda x: np.exp(-(x - c) ** 2 / 0.02)


def gaussian_entropic_cost(eps, var, shift):
    """Closed-form eps*I_eps between N(0, var) and N(shift, var) on the line."""
    c = (-eps + np.sqrt(eps**2 + 4 * var**2)) / 2
    return (0.5 * shift**2 + var - c + eps / 2 * np.log(2 * np.pi * eps)
            - eps / 2 * np.log((2 * np.pi * np.e) ** 2 * (var**2 - c**2)))


def test_exact_1d_trivial_cases():
    x = np.linspace(0, 1, 5)
    mu = np.array([0.1, 0.2, 0.3, 0.2, 0.2])
    assert w2_exact_1d(x, mu, mu) == 0.0
    assert w2_exact_1d([0.2, 1.7], [1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.5 * 1.5**2)


def test_exact_1d_rejects_circle():
    sp = build_circle_grid(8, 1.0)
    with pytest.raises(ValueError, match="interval"):
        w2_exact_1d(sp, np.ones(8), np.ones(8))


def test_lp_trivial_cases():
    d = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert w2_lp_small(d, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.5)
    assert abs(w2_lp_small(d, [0.3, 0.7], [0.3, 0.7])) < 1e-12
    with pytest.raises(ValueError, match="n <= 64"):
        w2_lp_small(np.zeros((65, 65)), np.ones(65), np.ones(65))


def test_exact_matches_lp(rng):
    for _ in range(10):
        x = np.sort(rng.uniform(0, 1, 12))
        mu0, mu1 = rng.uniform(0, 1, (2, 12))
        mu0, mu1 = mu0 / mu0.sum(), mu1 / mu1.sum()
        d = np.abs(x[:, None] - x[None, :])
        assert abs(w2_exact_1d(x, mu0, mu1) - w2_lp_small(d, mu0, mu1)) < 1e-9


def test_pairing_rule():
    with pytest.raises(SweepPairingError, match="eps >= 10 h"):
        zero_noise_sweep(bump(0.3), bump(0.7), [0.1, 0.01], 100)


def test_identical_marginals_cost_vanishes():
    rows = zero_noise_sweep(bump(0.5), bump(0.5), [0.4, 0.2, 0.1], 200)
    costs = [r.cost for r in rows]
    assert all(r.w2sq_half == 0 for r in rows)
    assert costs[0] > costs[1] > costs[2] > 0
    np.testing.assert_allclose([r.gap for r in rows], costs)


def test_sweep_entropic_bounds():
    for r in zero_noise_sweep(bump(0.3), bump(0.7), [0.4, 0.1], 400):
        assert r.cost >= r.w2sq_half


def test_gaussian_closed_form_against_grid():
    # bumps sit far from the ends, so the interval behaves like the line
    var, shift = 0.01, 0.4
    prof0 = lambda x: np.exp(-(x - 0.8) ** 2 / (2 * var))
    prof1 = lambda x: np.exp(-(x - 0.8 - shift) ** 2 / (2 * var))
    rows = zero_noise_sweep(prof0, prof1, [0.1, 0.05], 1000, length=2.0, tol=1e-10)
    for row in rows:
        exact = gaussian_entropic_cost(row.eps, var, shift)
        assert abs(row.cost - exact) < 1e-4 * exact
        # the entropic excess over W2^2/2 is first order in eps
        assert row.gap > 0.5 * row.eps


def test_sweep_csv():
    buf = io.StringIO()
    write_sweep_csv(zero_noise_sweep(bump(0.3), bump(0.7), [0.4], 100), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "eps,n,cost,w2sq_half,gap" and len(lines) == 2
