"""Entropic interpolation, Schrödinger potentials and their dynamical identities.

On a uniform grid ``0 = t_0 < ... < t_K = 1``:

    phi_t = eps log h_{eps t/2} f,      psi_t = eps log h_{eps (1-t)/2} g,
    rho_t = exp((phi_t + psi_t) / eps), theta_t = (psi_t - phi_t) / 2.

Every slice comes straight from the spectral heat flow; nothing is time-stepped.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .calculus import carre_du_champ, entropy
from .space import log_heat_apply

__all__ = ["InterpolationPath", "interpolate", "dyn_representations", "pde_residuals",
           "write_path_csv", "trapezoid"]


def trapezoid(values, times):
    """Trapezoid rule along the first axis."""
    return np.trapezoid(values, times, axis=0)


@dataclass(frozen=True)
class InterpolationPath:
    eps: float
    times: np.ndarray
    phi: np.ndarray    # (K+1, n)
    psi: np.ndarray

    @property
    def K(self):
        return len(self.times) - 1

    @property
    def f(self):
        return np.exp(self.phi / self.eps)

    @property
    def g(self):
        return np.exp(self.psi / self.eps)

    @property
    def rho(self):
        return np.exp((self.phi + self.psi) / self.eps)

    @property
    def log_rho(self):
        return (self.phi + self.psi) / self.eps

    @property
    def theta(self):
        return 0.5 * (self.psi - self.phi)


def interpolate(space, solution, K):
    """Sample the entropic interpolation of ``solution`` on ``K + 1`` uniform times."""
    if K < 2:
        raise ValueError("time grid needs K >= 2")
    eps = solution.eps
    times = np.linspace(0.0, 1.0, K + 1)
    a, b = solution.phi0 / eps, solution.psi1 / eps
    phi = np.empty((K + 1, space.n))
    psi = np.empty((K + 1, space.n))
    for k, t in enumerate(times):
        phi[k] = eps * log_heat_apply(space, eps * t / 2, a)
        psi[k] = eps * log_heat_apply(space, eps * (1 - t) / 2, b)
    return InterpolationPath(eps=eps, times=times, phi=phi, psi=psi)


def _action(space, u, rho, times):
    """Trapezoid-in-time of ``int 1/2 Gamma(u_t) rho_t dm``."""
    gam = carre_du_champ(space, u.T)                 # (n, K+1)
    per_time = 0.5 * (space.weights @ (gam * rho.T))
    return float(trapezoid(per_time, times))


def dyn_representations(space, path, mu0=None, mu1=None):
    """The three dynamical expressions of the entropic cost.

    Returns ``(A, B, C)``::

        A = eps/2 (H0 + H1) + int int (Gamma(theta)/2 + eps^2/8 Gamma(log rho)) rho
        B = eps H0 + int int Gamma(psi)/2 rho
        C = eps H1 + int int Gamma(phi)/2 rho

    with ``H0 = H(mu0 | m)``, ``H1 = H(mu1 | m)``; marginals default to the
    path endpoints.
    """
    eps, times, rho = path.eps, path.times, path.rho
    rho0 = rho[0] if mu0 is None else np.asarray(mu0) / space.weights
    rho1 = rho[-1] if mu1 is None else np.asarray(mu1) / space.weights
    H0, H1 = entropy(space, rho0), entropy(space, rho1)
    fisher = _action(space, path.log_rho, rho, times)
    A = 0.5 * eps * (H0 + H1) + _action(space, path.theta, rho, times) + eps**2 / 4 * fisher
    B = eps * H0 + _action(space, path.psi, rho, times)
    C = eps * H1 + _action(space, path.phi, rho, times)
    return A, B, C


def _time_derivative(values, times):
    """Central differences at interior grid times, shape ``(K-1, n)``."""
    dt = times[1] - times[0]
    return (values[2:] - values[:-2]) / (2 * dt)


def pde_residuals(space, path):
    """Max residuals of the PDE system along the path (interior grid times).

    Keys: ``heat_f``, ``heat_g`` (exact up to O(dt^2)), ``hjb_phi``, ``hjb_psi``,
    ``theta_gamma`` / ``theta_generator`` (two discretizations of the
    Fisher-type right side), ``continuity``.
    """
    if path.K < 32:
        raise ValueError("PDE residuals need K >= 32")
    eps, times = path.eps, path.times
    inner = slice(1, -1)
    L = space.generator

    def lap(u):
        return (L @ u.T).T

    def gamma(u, v=None):
        return carre_du_champ(space, u.T, None if v is None else v.T).T

    f, g = path.f, path.g
    phi, psi, theta, rho, log_rho = path.phi, path.psi, path.theta, path.rho, path.log_rho
    out = {}
    out["heat_f"] = _time_derivative(f, times) - eps / 2 * lap(f[inner])
    out["heat_g"] = _time_derivative(g, times) + eps / 2 * lap(g[inner])
    out["hjb_phi"] = _time_derivative(phi, times) - (0.5 * gamma(phi[inner]) + eps / 2 * lap(phi[inner]))
    out["hjb_psi"] = -_time_derivative(psi, times) - (0.5 * gamma(psi[inner]) + eps / 2 * lap(psi[inner]))
    lhs_theta = _time_derivative(theta, times) + 0.5 * gamma(theta[inner])
    gam_lr = gamma(log_rho[inner])
    out["theta_gamma"] = lhs_theta + eps**2 / 8 * (2 * lap(log_rho[inner]) + gam_lr)
    out["theta_generator"] = lhs_theta + eps**2 / 8 * (2 * lap(rho[inner]) / rho[inner] - gam_lr)
    # weak form: d/dt (rho w) = A(theta)^T (rho w), A(u) f = Gamma(f, u)
    drift = np.stack([_drift_adjoint(space, theta[k], rho[k]) for k in range(1, path.K)])
    out["continuity"] = _time_derivative(rho, times) - drift
    return {k: float(np.abs(v).max()) for k, v in out.items()}


def _drift_adjoint(space, u, rho):
    """Density rate ``-div(rho grad u)`` dual to ``f -> int Gamma(f, u) rho dm``.

    ``(d/dt rho)[z] = 1/2 sum_y L[z, y] (rho[z] + rho[y]) (u[y] - u[z])``, up to sign.
    """
    rows, cols, rates = space.edges
    flux = rates * (rho[rows] + rho[cols]) * (u[cols] - u[rows])
    return -0.5 * np.bincount(rows, weights=flux, minlength=space.n)


def write_path_csv(path, fh):
    """Write one row per (t, point): ``t,x,rho,phi,psi,theta``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "x", "rho", "phi", "psi", "theta"])
    rho, theta = path.rho, path.theta
    for k, t in enumerate(path.times):
        for i in range(rho.shape[1]):
            writer.writerow([repr(float(t)), i, repr(float(rho[k, i])), repr(float(path.phi[k, i])),
                             repr(float(path.psi[k, i])), repr(float(theta[k, i]))])


