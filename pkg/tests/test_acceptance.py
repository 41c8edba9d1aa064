"""Acceptance criteria 1-13, one test each; every test prints a PASS/FAIL line."""

import hashlib
import os

import numpy as np
import pytest

from schrodinger_lab import (build_circle_grid, build_graph, build_interval_grid,
                             dyn_representations, heat_apply, interpolate, ipfp_solve,
                             zero_noise_sweep)
from schrodinger_lab.cli import main
from schrodinger_lab.config import load_config, profile_values
from schrodinger_lab.verify import run_tier_a, run_tier_b

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
SMOOTH = os.path.join(CONFIGS, "circle_smooth.json")
TWO_POINT = os.path.join(CONFIGS, "two_point.json")
SWEEP = os.path.join(CONFIGS, "sweep.json")


@pytest.fixture
def announce(capsys):
    def say(number, title, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:>2} [{title}]: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return say


def checks_by_name(*groups):
    out = {}
    for group in groups:
        for c in group:
            out.setdefault(c.name, []).append(c)
    return out


@pytest.fixture(scope="module")
def tier_a():
    return checks_by_name(run_tier_a(load_config(SMOOTH)), run_tier_a(load_config(TWO_POINT)))


@pytest.fixture(scope="module")
def tier_b():
    return checks_by_name(run_tier_b(load_config(SMOOTH)))


def judge_a(tier_a, names):
    cs = [c for name in names for c in tier_a[name]]
    worst = max(cs, key=lambda c: c.measured / c.tol)
    return all(c.passed for c in cs), f"worst {worst.name} {worst.measured:.2e} <= {worst.tol:.0e}"


def random_space(rng):
    kind = rng.integers(3)
    n = int(rng.integers(3, 257))
    if kind == 0:
        return build_circle_grid(n, float(rng.uniform(0.5, 3)))
    if kind == 1:
        return build_interval_grid(n, float(rng.uniform(0.5, 3)))
    n = min(n, 96)
    edges = [(i, (i + 1) % n, rng.uniform(0.2, 3)) for i in range(n - 1)]
    edges += [(i, j, rng.uniform(0.2, 3)) for i, j in rng.integers(0, n, (n, 2)) if i != j]
    return build_graph(edges, rng.uniform(0.3, 3, n))


def test_criterion_01_heat_flow(announce):
    rng = np.random.default_rng(1)
    worst = dict(semigroup=0.0, mass=0.0, max_principle=0.0, symmetry=0.0, self_adjoint=0.0)
    for _ in range(100):
        sp = random_space(rng)
        w, n = sp.weights, sp.n
        # times measured in units of the slowest relaxation, capped for fine grids
        s, t = rng.uniform(0, 1, 2) / max(1.0, sp.spectral_radius) ** 0.5
        f, g = rng.uniform(0, 1, n), rng.normal(size=n)
        hf = heat_apply(sp, t, f)
        worst["semigroup"] = max(worst["semigroup"],
                                 np.abs(heat_apply(sp, s, hf) - heat_apply(sp, s + t, f)).max())
        worst["mass"] = max(worst["mass"], abs(hf @ w - f @ w) / abs(f @ w))
        worst["max_principle"] = max(worst["max_principle"], hf.max() - f.max(), f.min() - hf.min())
        kern = heat_apply(sp, t, np.diag(1 / w))
        worst["symmetry"] = max(worst["symmetry"], np.abs(kern - kern.T).max() / np.abs(kern).max())
        worst["self_adjoint"] = max(worst["self_adjoint"],
                                    abs(hf * g @ w - f * heat_apply(sp, t, g) @ w)
                                    / max(1.0, np.abs(g).max()))
    ok = all(v <= 1e-10 for v in worst.values())
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    assert announce(1, "heat flow, 100 random spaces", ok, detail)


def test_criterion_02_integration_by_parts(announce, tier_a):
    ok, detail = judge_a(tier_a, ["integration_by_parts"])
    assert announce(2, "integration by parts", ok, detail)


def test_criterion_03_schrodinger_system(announce, tier_a):
    ok, detail = judge_a(tier_a, ["ipfp_residual", "coupling_marginals", "cost_swap_symmetry",
                                  "cost_gauge_invariance"])
    assert announce(3, "Schrödinger system", ok, detail)


def test_criterion_04_entropic_cost_forms(announce, tier_a):
    ok, detail = judge_a(tier_a, ["entcost_static_vs_potentials"])
    assert announce(4, "static vs potential cost, 50 instances", ok,
                    detail + " (ratio to max(1e-8, 10 residual))")


def test_criterion_05_interpolation(announce, tier_a):
    ok, detail = judge_a(tier_a, ["interp_mass", "interp_potential_identity",
                                  "interp_time_reversal"])
    assert announce(5, "interpolation identities", ok, detail)


def test_criterion_06_kantorovich(announce, tier_a):
    ok, detail = judge_a(tier_a, ["kantorovich_q_attainment", "kantorovich_dual_attainment",
                                  "kantorovich_dual_bound", "kantorovich_cash_invariance",
                                  "kantorovich_q_semigroup"])
    assert announce(6, "Kantorovich duality", ok, detail)


def test_criterion_07_two_point_scan(announce, tier_a):
    ok, detail = judge_a(tier_a, ["two_point_scan_oracle"])
    assert announce(7, "two-point scan oracle", ok, detail)


def test_criterion_08_dynamic_representations(announce):
    spec = load_config(SMOOTH)
    levels, spreads = (128, 256, 512), []
    for n in levels:
        space = spec.build_space(n)
        sol = ipfp_solve(space, *spec.marginals(space), spec.eps)
        vals = (*dyn_representations(space, interpolate(space, sol, n)), sol.cost)
        spreads.append(max(abs(p - q) for p in vals for q in vals) / abs(sol.cost))
    factors = [a / b for a, b in zip(spreads, spreads[1:])]
    ok = spreads[-1] <= 0.02 and min(factors) >= 1.5
    detail = ("spread " + " ".join(f"{s:.2e}" for s in spreads)
              + " factors " + " ".join(f"{f:.2f}" for f in factors))
    assert announce(8, "threefold dynamic cost, n=128/256/512", ok, detail)


def test_criterion_09_pde_residuals(announce, tier_b):
    names = ["pde_heat_dt_order", "pde_hjb_phi", "pde_hjb_psi", "pde_theta_gamma",
             "pde_theta_generator", "pde_continuity"]
    cs = [tier_b[n][0] for n in names]
    heat = cs[0]
    detail = f"heat dt factor {heat.factor:.2f}; " + " ".join(
        f"{c.name[4:]}:{'ok' if c.passed else 'not decreasing'}" for c in cs[1:])
    assert announce(9, "PDE residuals", all(c.passed for c in cs), detail)


def test_criterion_10_benamou_brenier(announce, tier_b):
    cs = [tier_b[n][0] for n in ("bb_psi", "bb_phi", "bb_theta")]
    detail = " ".join(f"{c.name}={c.values[-1]:.2e}<={c.threshold}" for c in cs)
    assert announce(10, "Benamou-Brenier attainment at n=256", all(c.passed for c in cs), detail)


def test_criterion_11_hjb_fpe_duality(announce, tier_b):
    rand, sat = tier_b["hjb_fpe_random_margin"][0], tier_b["hjb_fpe_saturating_gap"][0]
    detail = (f"random min gap/tol {rand.values[0]:.1f} >= 10 on n={rand.levels[0]}, K=512; "
              "saturating gap " + " ".join(f"{v:.2e}" for v in sat.values))
    assert announce(11, "HJB-FPE duality", rand.passed and sat.passed, detail)


def test_criterion_12_zero_noise(announce):
    spec = load_config(SWEEP)
    L = spec.space["length"]
    rows = zero_noise_sweep(lambda x: profile_values(spec.rho0, x, L, "interval"),
                            lambda x: profile_values(spec.rho1, x, L, "interval"),
                            spec.sweep["eps"], spec.sweep["n"], length=L, tol=spec.tol)
    gaps = [r.gap for r in rows]
    rel = gaps[-1] / rows[-1].w2sq_half
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = decreasing and rel <= 0.15
    detail = (f"gaps {' '.join(f'{g:.4f}' for g in gaps)} "
              f"({'strictly decreasing' if decreasing else 'not monotone'}); "
              f"relative gap at eps={rows[-1].eps} is {rel:.1%} (limit 15%)")
    assert announce(12, "zero-noise sweep", ok, detail)


def test_criterion_13_cli_determinism(announce, tmp_path, capsys):
    digests = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["verify", "--tier", "all", "--config", SMOOTH, "--out", str(out)])
        main(["interpolate", "--config", SMOOTH, "--out", str(out)])
        digests.append(tuple(hashlib.sha256((out / f).read_bytes()).hexdigest()
                             for f in ("report.json", "path.csv")))
    capsys.readouterr()
    ok = digests[0] == digests[1]
    assert announce(13, "CLI determinism", ok,
                    f"report sha256 {digests[0][0][:16]} vs {digests[1][0][:16]}")
