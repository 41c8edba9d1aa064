"""Schrödinger system solver (iterative proportional fitting) and entropic costs.

The reference coupling is ``R[i, j] = r[i, j] * w[i] * w[j]`` with ``r`` the
heat kernel at time ``eps / 2``.  The optimal coupling has the product form
``f[i] * g[j] * R[i, j]`` where ``(f, g)`` solve

    f * h(g) = rho0,        g * h(f) = rho1,        h = heat flow at eps / 2.

Everything is stored as ``eps * I_eps``; the potentials are
``phi0 = eps * log f`` and ``psi1 = eps * log g``.
"""

from dataclasses import dataclass, field

import numpy as np

from .space import heat_kernel, log_heat_apply

__all__ = [
    "ConvergenceError",
    "SchrodingerSolution",
    "Coupling",
    "ipfp_solve",
    "coupling",
    "entropic_cost_static",
    "entropic_cost_potentials",
]


class ConvergenceError(RuntimeError):
    """IPFP did not reach the requested tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SchrodingerSolution:
    eps: float
    phi0: np.ndarray
    psi1: np.ndarray
    rho0: np.ndarray
    rho1: np.ndarray
    weights: np.ndarray
    cost: float
    iterations: int
    marginal_residual: float
    gauge: float
    residual_history: np.ndarray = field(repr=False, default=None)

    @property
    def f(self):
        return np.exp(self.phi0 / self.eps)

    @property
    def g(self):
        return np.exp(self.psi1 / self.eps)

    @property
    def mu0(self):
        return self.rho0 * self.weights

    @property
    def mu1(self):
        return self.rho1 * self.weights

    def regauged(self, c):
        """Equivalent solution with ``(f, g) -> (e^(c/eps) f, e^(-c/eps) g)``."""
        return _replace(self, phi0=self.phi0 + c, psi1=self.psi1 - c, gauge=self.gauge + c)

    def to_json(self):
        return {
            "eps": self.eps,
            "f": self.f.tolist(),
            "g": self.g.tolist(),
            "phi0": self.phi0.tolist(),
            "psi1": self.psi1.tolist(),
            "cost": self.cost,
            "iterations": self.iterations,
            "marginal_residual": self.marginal_residual,
            "gauge": self.gauge,
        }


def _replace(sol, **changes):
    from dataclasses import replace
    return replace(sol, **changes)


@dataclass(frozen=True)
class Coupling:
    """Joint mass matrix ``matrix[i, j]`` of a coupling between two marginals."""

    matrix: np.ndarray

    @property
    def row_marginal(self):
        return self.matrix.sum(axis=1)

    @property
    def col_marginal(self):
        return self.matrix.sum(axis=0)


def _marginal(space, rho, name):
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (space.n,):
        raise ValueError(f"{name} must have {space.n} entries")
    if np.any(rho <= 0):
        raise ValueError(f"{name} has zero entries; IPFP needs strictly positive "
                         "marginals (mix with the uniform density using a floor)")
    mass = float(np.dot(rho, space.weights))
    if abs(mass - 1.0) > 1e-9:
        raise ValueError(f"{name} is not a probability density (mass {mass!r})")
    return rho / mass


def ipfp_solve(space, rho0, rho1, eps, tol=1e-12, max_iter=50000):
    """Solve the Schrödinger system by alternating marginal fitting in log domain.

    Parameters
    ----------
    space : Space
    rho0, rho1 : array_like or Density
        Strictly positive probability densities with respect to ``space.weights``.
    eps : float
        Noise level; the reference kernel is taken at time ``eps / 2``.
    tol : float
        Stop when the sup-norm relative error of both marginals is below ``tol``.
    max_iter : int

    Returns
    -------
    SchrodingerSolution
        In the symmetric gauge ``int phi0 dmu0 == int psi1 dmu1``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    rho0 = _marginal(space, rho0, "rho0")
    rho1 = _marginal(space, rho1, "rho1")
    t = eps / 2
    log_r0, log_r1 = np.log(rho0), np.log(rho1)
    a = np.zeros(space.n)  # log f
    b = np.zeros(space.n)  # log g
    history = []
    residual = np.inf
    for it in range(max_iter + 1):
        lhg = log_heat_apply(space, t, b)
        if it > 0:
            residual = float(np.abs(np.expm1(a + lhg - log_r0)).max())
            history.append(residual)
            if residual <= tol:
                break
        if it == max_iter:
            raise ConvergenceError(
                f"IPFP did not converge in {max_iter} iterations "
                f"(last marginal residual {residual:.3e})", residual)
        a = log_r0 - lhg
        b = log_r1 - log_heat_apply(space, t, a)
    res1 = float(np.abs(np.expm1(b + log_heat_apply(space, t, a) - log_r1)).max())

    phi0, psi1 = eps * a, eps * b
    mu0, mu1 = rho0 * space.weights, rho1 * space.weights
    c = 0.5 * (np.dot(psi1, mu1) - np.dot(phi0, mu0))
    phi0, psi1 = phi0 + c, psi1 - c
    cost = float(np.dot(phi0, mu0) + np.dot(psi1, mu1))
    return SchrodingerSolution(
        eps=float(eps), phi0=phi0, psi1=psi1, rho0=rho0, rho1=rho1,
        weights=np.array(space.weights), cost=cost, iterations=it,
        marginal_residual=max(residual, res1), gauge=float(c),
        residual_history=np.array(history))


def coupling(space, solution):
    """Optimal coupling ``f[i] r[i, j] g[j] w[i] w[j]``."""
    r = heat_kernel(space, solution.eps / 2)
    w = space.weights
    log_fg = (solution.phi0[:, None] + solution.psi1[None, :]) / solution.eps
    return Coupling(np.exp(log_fg) * r * np.outer(w, w))


def entropic_cost_static(space, gamma, eps):
    """``eps * H(gamma | R)`` for a coupling given as a mass matrix, ``0 log 0 = 0``."""
    gamma = gamma.matrix if isinstance(gamma, Coupling) else np.asarray(gamma, dtype=float)
    R = heat_kernel(space, eps / 2) * np.outer(space.weights, space.weights)
    mask = gamma > 0
    return float(eps * np.sum(gamma[mask] * np.log(gamma[mask] / R[mask])))


def entropic_cost_potentials(solution, mu0=None, mu1=None):
    """``int phi0 dmu0 + int psi1 dmu1`` (marginals as mass vectors)."""
    mu0 = solution.mu0 if mu0 is None else np.asarray(mu0, dtype=float)
    mu1 = solution.mu1 if mu1 is None else np.asarray(mu1, dtype=float)
    return float(np.dot(solution.phi0, mu0) + np.dot(solution.psi1, mu1))


def marginal_residual(space, solution):
    """Sup-norm relative error of both marginals of the product coupling."""
    t = solution.eps / 2
    a, b = solution.phi0 / solution.eps, solution.psi1 / solution.eps
    e0 = np.expm1(a + log_heat_apply(space, t, b) - np.log(solution.rho0))
    e1 = np.expm1(b + log_heat_apply(space, t, a) - np.log(solution.rho1))
    return float(max(np.abs(e0).max(), np.abs(e1).max()))


