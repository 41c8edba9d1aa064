"""Verification suites behind ``verify``.

Tier A checks identities that are exact on any finite reversible space, so
tolerances are at floating-point level.  Tier B checks continuum identities
that only hold in the limit; they run on a sequence of circle or interval
grids, refining the time grid with the space grid (``K = n``).
"""

from dataclasses import dataclass

import numpy as np

from . import __version__
from .calculus import carre_du_champ, entropy, integrate
from .config import ConfigError, config_hash
from .duality import dual_objective, q_apply, verify_attainment
from .dynamics import (DensityPath, PotentialPath, build_supersolution, check_hjb_fpe_duality,
                       integrate_fpe, path_action)
from .interpolation import dyn_representations, interpolate, pde_residuals
from .oracle import two_point_scan_cost
from .schrodinger import coupling, entropic_cost_potentials, entropic_cost_static, ipfp_solve
from .space import Density, build_graph, heat_apply

__all__ = ["CheckA", "CheckB", "VerificationReport", "run_tier_a", "run_tier_b", "run_verify",
           "random_smooth_potential", "random_duality_pair", "two_point_instances"]


@dataclass(frozen=True)
class CheckA:
    name: str
    measured: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.measured) and self.measured <= self.tol)

    def to_json(self):
        return {"name": self.name, "measured": float(self.measured), "tol": self.tol,
                "pass": self.passed}

    def row(self):
        return f"{'PASS' if self.passed else 'FAIL'}  A  {self.name:<32} {self.measured:10.3e}  <= {self.tol:.1e}"


@dataclass(frozen=True)
class CheckB:
    """Values per refinement level; ``rule`` says how they are judged.

    ``shrink``: final value <= threshold and every ratio >= min_factor;
    ``decrease``: strictly decreasing; ``final``: final value <= threshold;
    ``ratio``: the single ratio lies in [min_factor, threshold];
    ``at_least``: final value >= threshold.
    """

    name: str
    levels: tuple
    values: tuple
    rule: str
    threshold: float = None
    min_factor: float = None

    @property
    def factors(self):
        v = np.abs(np.asarray(self.values, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            return tuple(float(x) for x in v[:-1] / v[1:])

    @property
    def factor(self):
        return min(self.factors) if self.factors else float("nan")

    @property
    def passed(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            return False
        if self.rule == "shrink":
            return bool(abs(v[-1]) <= self.threshold and self.factor >= self.min_factor)
        if self.rule == "decrease":
            return bool(np.all(np.diff(v) < 0))
        if self.rule == "final":
            return bool(abs(v[-1]) <= self.threshold)
        if self.rule == "at_least":
            return bool(v[-1] >= self.threshold)
        if self.rule == "ratio":
            return bool(self.min_factor <= self.factor <= self.threshold)
        raise ValueError(self.rule)

    def to_json(self):
        return {"name": self.name, "levels": list(self.levels),
                "values": [float(x) for x in self.values], "factors": list(self.factors),
                "rule": self.rule, "threshold": self.threshold, "min_factor": self.min_factor,
                "pass": self.passed}

    def row(self):
        vals = " ".join(f"{x:.3e}" for x in self.values)
        tail = f"  factor {self.factor:.2f}" if self.factors else ""
        return f"{'PASS' if self.passed else 'FAIL'}  B  {self.name:<32} [{vals}]{tail}"


@dataclass(frozen=True)
class VerificationReport:
    tier_a: tuple
    tier_b: tuple
    provenance: dict

    @property
    def ok(self):
        return all(c.passed for c in self.tier_a + self.tier_b)

    def to_json(self):
        return {"provenance": self.provenance, "ok": self.ok,
                "tier_a": [c.to_json() for c in self.tier_a],
                "tier_b": [c.to_json() for c in self.tier_b]}

    def table(self):
        lines = [c.row() for c in self.tier_a + self.tier_b]
        lines.append(f"overall: {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(lines)


def two_point_instances(rng, count=10):
    """Random two-point spaces, marginals and noise levels."""
    out = []
    for _ in range(count):
        space = build_graph([(0, 1, rng.uniform(0.3, 3.0))], rng.uniform(0.3, 2.0, 2))
        rho0 = Density(space, rng.uniform(0.1, 1.0, 2))
        rho1 = Density(space, rng.uniform(0.1, 1.0, 2))
        out.append((space, rho0, rho1, float(rng.uniform(0.2, 2.0))))
    return out


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


def run_tier_a(spec, rng=None):
    """Exact identities on the configured space and marginals."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    space = spec.build_space()
    rho0, rho1 = spec.marginals(space)
    eps, w, n = spec.eps, space.weights, space.n
    checks = []
    add = checks.append

    # heat flow
    times = rng.uniform(0.0, 0.5, size=(20, 2)) / max(1.0, eps)
    fs = rng.uniform(0.0, 1.0, size=(n, 20))
    gs = rng.normal(size=(n, 20))
    semi = mass = maxp = adj = 0.0
    for k, (s, t) in enumerate(times):
        f, g = fs[:, k], gs[:, k]
        hf = heat_apply(space, t, f)
        semi = max(semi, np.abs(heat_apply(space, s, hf) - heat_apply(space, s + t, f)).max())
        mass = max(mass, _rel(np.dot(hf, w), np.dot(f, w)))
        maxp = max(maxp, f.min() - hf.min(), hf.max() - f.max(), 0.0)
        lhs, rhs = np.dot(hf * g, w), np.dot(f * heat_apply(space, t, g), w)
        adj = max(adj, _rel(lhs, rhs))
    cols = heat_apply(space, eps / 2, np.diag(1.0 / w))
    sym = np.abs(cols - cols.T).max() / np.abs(cols).max()
    add(CheckA("heat_semigroup", semi, 1e-10))
    add(CheckA("heat_mass", mass, 1e-12))
    add(CheckA("heat_max_principle", maxp, 1e-12))
    add(CheckA("heat_kernel_symmetry", sym, 1e-10))
    add(CheckA("heat_self_adjoint", adj, 1e-10))

    ibp = 0.0
    for _ in range(10):
        u, v = rng.normal(size=n), rng.normal(size=n)
        lhs = integrate(space, carre_du_champ(space, u, v))
        rhs = -integrate(space, u * (space.generator @ v))
        ibp = max(ibp, abs(lhs - rhs) / max(1.0, abs(lhs)))
    add(CheckA("integration_by_parts", ibp, 1e-10))

    # Schrödinger system
    sol = ipfp_solve(space, rho0, rho1, eps, tol=spec.tol, max_iter=spec.max_iter)
    add(CheckA("ipfp_residual", sol.marginal_residual, max(spec.tol, 1e-12)))
    gam = coupling(space, sol)
    marg = max(np.abs(gam.row_marginal / sol.mu0 - 1).max(),
               np.abs(gam.col_marginal / sol.mu1 - 1).max())
    add(CheckA("coupling_marginals", marg, max(spec.tol, 1e-12) + 1e-13))
    swapped = ipfp_solve(space, rho1, rho0, eps, tol=spec.tol, max_iter=spec.max_iter)
    add(CheckA("cost_swap_symmetry", abs(sol.cost - swapped.cost), 1e-9))
    gauge = max(abs(entropic_cost_potentials(sol.regauged(c)) - sol.cost)
                for c in (-1.3, 0.4, 2.7))
    add(CheckA("cost_gauge_invariance", gauge, 1e-12))

    ent = 0.0
    for k in range(50):
        inst = (rho0, rho1) if k == 0 else (
            Density(space, rng.uniform(0.2, 2.0, n)), Density(space, rng.uniform(0.2, 2.0, n)))
        s = sol if k == 0 else ipfp_solve(space, *inst, eps, tol=spec.tol, max_iter=spec.max_iter)
        diff = abs(entropic_cost_static(space, coupling(space, s), eps) - s.cost)
        ent = max(ent, diff / max(1e-8, 10 * s.marginal_residual))
    add(CheckA("entcost_static_vs_potentials", ent, 1.0))

    # interpolation
    K = spec.K
    path = interpolate(space, sol, K)
    add(CheckA("interp_mass", np.abs(path.rho @ w - 1).max(), 1e-12))
    ident = 0.0
    for k, t in enumerate(path.times):
        ft = heat_apply(space, eps * t / 2, np.exp((sol.phi0 - sol.phi0.max()) / eps))
        gt = heat_apply(space, eps * (1 - t) / 2, np.exp((sol.psi1 - sol.psi1.max()) / eps))
        direct = eps * np.log(ft * gt) + sol.phi0.max() + sol.psi1.max()
        ident = max(ident, np.abs(path.phi[k] + path.psi[k] - direct).max())
    add(CheckA("interp_potential_identity", ident, 1e-12 * max(1.0, np.abs(path.phi).max())))
    back = interpolate(space, swapped, K)
    add(CheckA("interp_time_reversal", np.abs(back.rho[::-1] - path.rho).max()
               / path.rho.max(), 1e-10))

    # Kantorovich duality
    rep = verify_attainment(space, sol)
    add(CheckA("kantorovich_q_attainment", rep.q_gap, 1e-10))
    add(CheckA("kantorovich_dual_attainment", max(rep.forward_gap, rep.backward_gap), 1e-8))
    worst = 0.0
    for k in range(100):
        u = rng.normal(size=n) * (10.0 ** rng.uniform(-2, 2))
        if k % 4 == 0:
            u = sol.phi0 + 1e-3 * rng.normal(size=n)
        orient = "forward" if k % 2 == 0 else "backward"
        worst = max(worst, dual_objective(space, u, sol.mu0, sol.mu1, eps, orient) - sol.cost)
    add(CheckA("kantorovich_dual_bound", max(worst, 0.0), 1e-10))
    cash = semi_q = 0.0
    for _ in range(10):
        u = rng.normal(size=n)
        c = rng.normal() * 5
        s, t = rng.uniform(0, 0.5, 2)
        cash = max(cash, np.abs(q_apply(space, u + c, eps, t) - q_apply(space, u, eps, t) - c).max())
        semi_q = max(semi_q, np.abs(q_apply(space, q_apply(space, u, eps, s), eps, t)
                                    - q_apply(space, u, eps, s + t)).max())
    add(CheckA("kantorovich_cash_invariance", cash, 1e-10))
    add(CheckA("kantorovich_q_semigroup", semi_q, 1e-10))

    scan = 0.0
    for sp2, r0, r1, e in two_point_instances(rng):
        s2 = ipfp_solve(sp2, r0, r1, e)
        scan = max(scan, abs(s2.cost - two_point_scan_cost(sp2, s2.mu0, s2.mu1, e)))
    add(CheckA("two_point_scan_oracle", scan, 1e-6))
    return tuple(checks)


def random_smooth_potential(rng, x, length, modes=3, amplitude=1.0):
    """Random trigonometric polynomial with sup norm at most ``amplitude``."""
    k = np.arange(1, modes + 1)
    a, b = rng.normal(size=(2, modes)) / k
    arg = 2 * np.pi * np.outer(x / length, k)
    u = np.cos(arg) @ a + np.sin(arg) @ b
    return amplitude * u / max(np.abs(u).max(), 1e-300)


def random_duality_pair(space, rho0, eps, K, rng):
    """A random certified backward supersolution and forward Fokker-Planck flow."""
    x, L = space.coords, space.length
    w = random_smooth_potential(rng, x, L)
    sup = build_supersolution(space, w, eps, delta=float(rng.uniform(0, 0.1)),
                              s=float(rng.uniform(0, 0.05)), direction="backward", K=K)
    u0, u1 = (random_smooth_potential(rng, x, L) for _ in range(2))
    times = np.linspace(0.0, 1.0, K + 1)
    drift = PotentialPath(times, np.outer(1 - times, u0) + np.outer(times, u1))
    fpe = integrate_fpe(space, rho0, drift, eps / 2, "forward")
    return sup, fpe, drift


def _level(spec, n):
    space = spec.build_space(n)
    rho0, rho1 = spec.marginals(space)
    sol = ipfp_solve(space, rho0, rho1, spec.eps, tol=spec.tol, max_iter=spec.max_iter)
    return space, sol


def run_tier_b(spec, rng=None):
    """Refinement checks on the grid family of the config (``K = n`` per level)."""
    if not spec.refinable:
        raise ConfigError("tier B needs a circle or interval space with analytic marginal profiles")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    levels, eps = tuple(spec.levels), spec.eps
    spread, pde, bb, sat = [], [], [], []
    heat_ratio = None
    for n in levels:
        space, sol = _level(spec, n)
        path = interpolate(space, sol, n)
        A, B, C = dyn_representations(space, path)
        vals = (A, B, C, sol.cost)
        spread.append(max(abs(p - q) for p in vals for q in vals) / abs(sol.cost))
        pde.append(pde_residuals(space, path))
        H0, H1 = entropy(space, sol.rho0), entropy(space, sol.rho1)
        dens = DensityPath(path.times, path.rho, "forward", eps / 2)
        act_psi = path_action(space, dens, PotentialPath(path.times, path.psi))
        act_phi = path_action(space, dens, PotentialPath(path.times, path.phi))
        act_theta = path_action(space, dens, PotentialPath(path.times, path.theta)) \
            + eps**2 / 4 * path_action(space, dens, PotentialPath(path.times, path.log_rho))
        bb.append((abs(act_psi / (sol.cost - eps * H0) - 1),
                   abs(act_phi / (sol.cost - eps * H1) - 1),
                   abs(act_theta / (sol.cost - eps * (H0 + H1) / 2) - 1)))
        drift = PotentialPath(path.times, path.psi)
        fpe = integrate_fpe(space, sol.rho0, drift, eps / 2, "forward")
        sup = build_supersolution(space, sol.psi1, eps, direction="backward", K=n)
        gap = check_hjb_fpe_duality(space, sup, fpe, drift, eps)
        sat.append(gap.gap if gap.ok else float("nan"))
        if heat_ratio is None:
            coarse = pde_residuals(space, interpolate(space, sol, 64))["heat_f"]
            fine = pde_residuals(space, interpolate(space, sol, 128))["heat_f"]
            heat_ratio = (coarse, fine)

    checks = [CheckB("dyn_representations_spread", levels, tuple(spread), "shrink", 0.02, 1.5),
              CheckB("pde_heat_dt_order", (64, 128), heat_ratio, "ratio", 5.0, 3.0)]
    for key in ("hjb_phi", "hjb_psi", "theta_gamma", "theta_generator", "continuity"):
        checks.append(CheckB(f"pde_{key}", levels, tuple(r[key] for r in pde), "decrease"))
    for k, (name, thr) in enumerate((("bb_psi", 0.02), ("bb_phi", 0.02), ("bb_theta", 0.03))):
        checks.append(CheckB(name, levels, tuple(b[k] for b in bb), "final", thr))
    checks.append(CheckB("hjb_fpe_saturating_gap", levels, tuple(sat), "decrease"))

    # the centred drift flux keeps densities positive only while
    # |u[y] - u[x]| <= eps on every edge; random potentials have |u'| <= ~20
    n_rand = max(levels[0], 2 ** int(np.ceil(np.log2(20.0 * spec.space["length"] / eps))))
    space, sol = _level(spec, n_rand)
    margins = []
    for _ in range(20):
        g = check_hjb_fpe_duality(space, *random_duality_pair(space, sol.rho0, eps, 512, rng), eps)
        margins.append(g.gap / g.tol)
    checks.append(CheckB("hjb_fpe_random_margin", (n_rand,), (min(margins),), "at_least", 10.0))
    return tuple(checks)


def run_verify(spec, tier="all"):
    """Run the requested tiers and assemble a deterministic report."""
    if tier not in ("a", "b", "all"):
        raise ConfigError(f"tier must be a, b or all; got {tier!r}")
    rng = np.random.default_rng(spec.seed)
    tier_a = run_tier_a(spec, rng) if tier in ("a", "all") else ()
    tier_b = run_tier_b(spec, rng) if tier in ("b", "all") else ()
    prov = {"config_sha256": config_hash(spec), "seed": spec.seed, "version": __version__,
            "tier": tier}
    return VerificationReport(tier_a=tier_a, tier_b=tier_b, provenance=prov)
