"""Fokker-Planck flows with gradient drifts, kinetic actions and HJB duality.

A drift is always a gradient ``X_t = grad u_t`` stored as a potential path.
In mass variables ``M = rho * w`` the weak Fokker-Planck equation

    sigma d/dt sum_x f[x] M[x] = sum_x (Gamma(f, u_t)[x] + c (L f)[x]) M[x]

is a linear ODE.  In density variables it reads

    sigma d/dt rho[z] = -1/2 sum_y L[z, y] (rho[z] + rho[y]) (u[y] - u[z]) + c (L rho)[z],

with ``sigma = +1`` (forward) or ``-1`` (backward).
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.sparse import csr_matrix

from .calculus import carre_du_champ
from .interpolation import trapezoid
from .space import log_heat_apply

__all__ = [
    "FPEInstabilityError",
    "PotentialPath",
    "DensityPath",
    "DualityGap",
    "integrate_fpe",
    "path_action",
    "hjb_violation",
    "build_supersolution",
    "check_hjb_fpe_duality",
]

_DIRECTIONS = {"forward": 1, "backward": -1}


class FPEInstabilityError(FloatingPointError):
    """Explicit time stepping produced a negative density."""


def _sigma(direction):
    try:
        return _DIRECTIONS[direction]
    except KeyError:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}") from None


def _uniform_times(times):
    times = np.asarray(times, dtype=float)
    K = len(times) - 1
    if K < 1 or times[0] != 0.0 or times[-1] != 1.0 or not np.allclose(
            np.diff(times), 1.0 / K, rtol=1e-9, atol=0):
        raise ValueError("times must be a uniform grid from 0 to 1")
    return times


@dataclass(frozen=True)
class PotentialPath:
    """Scalar field ``u_t`` on a uniform time grid, shape ``(K+1, n)``.

    ``slack`` and ``direction`` are set for certified HJB supersolutions.
    """

    times: np.ndarray
    values: np.ndarray
    slack: float = None
    direction: str = None

    def __post_init__(self):
        times = _uniform_times(self.times)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != len(times):
            raise ValueError("values must have one row per grid time")
        if not np.all(np.isfinite(values)):
            raise ValueError("potential path has non-finite values")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def K(self):
        return len(self.times) - 1

    @cached_property
    def _spline(self):
        return CubicSpline(self.times, self.values, axis=0)

    def at(self, t):
        """Values at time(s) ``t``; cubic spline between grid times."""
        return self._spline(t)


@dataclass(frozen=True)
class DensityPath:
    """Densities ``rho_t`` on a uniform grid, shape ``(K+1, n)``."""

    times: np.ndarray
    rho: np.ndarray
    direction: str
    diffusion: float
    substeps: int = field(default=1, compare=False)

    @property
    def K(self):
        return len(self.times) - 1


@dataclass(frozen=True)
class DualityGap:
    """``gap = rhs - lhs``; ``ok`` means ``gap >= -tol``."""

    lhs: float
    rhs: float
    gap: float
    tol: float
    ok: bool
    slack: float = None

    def to_json(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "gap": self.gap, "tol": self.tol,
                "ok": self.ok, "slack": self.slack}


def _generator_csr(space):
    return csr_matrix(space.generator)


def _drift_bound(space, values):
    """Gershgorin bound of the drift part over all times of ``values``."""
    rows, cols, rates = space.edges
    du = np.abs(values[:, cols] - values[:, rows]) * rates
    per_row = np.stack([np.bincount(rows, weights=d, minlength=space.n) for d in du])
    return float(per_row.max())


def integrate_fpe(space, rho_init, drift, c, direction="forward", K=None):
    """Solve the Fokker-Planck (``c > 0``) or continuity (``c = 0``) equation.

    Parameters
    ----------
    space : Space
    rho_init : array_like or Density
        Density at ``t = 0`` (forward) or ``t = 1`` (backward).
    drift : PotentialPath
        Potential ``u_t`` of the drift ``grad u_t``.
    c : float
        Diffusion coefficient, ``eps / 2`` for Fokker-Planck.
    direction : {'forward', 'backward'}
    K : int, optional
        Output grid; defaults to the drift grid.

    Returns
    -------
    DensityPath
        Classical RK4 with ``m`` substeps per output interval, ``m`` chosen so
        that ``dt * (c * spectral_radius + drift bound) <= 0.5``.
    """
    sigma = _sigma(direction)
    if c < 0:
        raise ValueError("diffusion coefficient must be nonnegative")
    K = drift.K if K is None else int(K)
    if K < 1:
        raise ValueError("K must be positive")
    rho = np.array(rho_init, dtype=float)
    if rho.shape != (space.n,):
        raise ValueError(f"initial density must have {space.n} entries")

    times = np.linspace(0.0, 1.0, K + 1)
    stiff = c * space.spectral_radius + _drift_bound(space, drift.values)
    m = max(1, int(np.ceil(stiff / K / 0.5)))
    h = 1.0 / (K * m)

    Lc = c * _generator_csr(space)
    rows, cols, rates = space.edges
    n = space.n

    def rhs(rate_du, r):
        flux = rate_du * (r[rows] + r[cols])
        return sigma * (-0.5 * np.bincount(rows, weights=flux, minlength=n) + Lc @ r)

    out = np.empty((K + 1, n))
    order = range(K) if sigma > 0 else range(K, 0, -1)
    step = sigma * h
    out[0 if sigma > 0 else K] = rho
    for k in order:
        t0 = times[k]
        stage_t = t0 + step * np.arange(2 * m + 1) / 2
        u = drift.at(np.clip(stage_t, 0.0, 1.0))
        rate_du = rates * (u[:, cols] - u[:, rows])
        for j in range(m):
            a, b, e = rate_du[2 * j], rate_du[2 * j + 1], rate_du[2 * j + 2]
            k1 = rhs(a, rho)
            k2 = rhs(b, rho + 0.5 * step * k1)
            k3 = rhs(b, rho + 0.5 * step * k2)
            k4 = rhs(e, rho + step * k3)
            rho = rho + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if rho.min() < -1e-8:
            raise FPEInstabilityError(
                f"negative density {rho.min():.3e} at t={t0 + m * step:.4g}; "
                "increase K or smooth the drift")
        out[k + sigma] = rho
    return DensityPath(times=times, rho=out, direction=direction, diffusion=float(c), substeps=m)


def _kinetic(space, values, rho):
    """``int 1/2 Gamma(u_t) rho_t dm`` at every grid time."""
    gam = carre_du_champ(space, values.T)
    return 0.5 * np.einsum("i,it,ti->t", space.weights, gam, rho)


def path_action(space, density_path, drift):
    """Trapezoid-in-time of ``int 1/2 Gamma(u_t) rho_t dm``."""
    if density_path.K != drift.K:
        raise ValueError("density and drift grids differ")
    return float(trapezoid(_kinetic(space, drift.values, density_path.rho), drift.times))


def _time_derivative(values, times):
    return np.gradient(values, times, axis=0, edge_order=2)


def hjb_violation(space, path, eps, direction):
    """Pointwise defect of the HJB supersolution inequality, ``<= 0`` when satisfied.

    Backward: ``d/dt phi + 1/2 Gamma(phi) + eps/2 L phi``;
    forward: ``-d/dt phi + 1/2 Gamma(phi) + eps/2 L phi``.
    """
    sigma = _sigma(direction)
    phi = path.values
    dphi = _time_derivative(phi, path.times)
    spatial = 0.5 * carre_du_champ(space, phi.T).T + 0.5 * eps * (space.generator @ phi.T).T
    return spatial - sigma * dphi


def build_supersolution(space, w, eps, delta=0.0, s=0.0, direction="backward", K=64):
    """Certified discrete HJB supersolution from the regularized log-heat flow.

    Backward: ``phi_t = eps log(h_{eps(1-t)/2+s} e^{w/eps} + delta) + a (1-t)``;
    forward: ``phi_t = eps log(h_{eps t/2+s} e^{w/eps} + delta) + a t``.
    The slack ``a >= 0`` is the largest violation of the discrete inequality
    before lifting, so the lifted path satisfies it at every grid point.
    """
    sigma = _sigma(direction)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if delta < 0 or s < 0:
        raise ValueError("delta and s must be nonnegative")
    times = np.linspace(0.0, 1.0, K + 1)
    a0 = np.asarray(w, dtype=float) / eps
    clock = (1 - times) if sigma < 0 else times
    log_f = np.stack([log_heat_apply(space, eps * tau / 2 + s, a0) for tau in clock])
    if delta > 0:
        log_f = np.logaddexp(log_f, np.log(delta))
    raw = PotentialPath(times, eps * log_f)
    slack = max(0.0, float(hjb_violation(space, raw, eps, direction).max()))
    lifted = raw.values + slack * clock[:, None]
    return PotentialPath(times, lifted, slack=slack, direction=direction)


def _fd4_error(values, times):
    """Estimate of the central-difference error from a fourth-order stencil."""
    d2 = _time_derivative(values, times)
    if len(times) < 5:
        return np.abs(d2) * 0
    dt = times[1] - times[0]
    d4 = d2.copy()
    v = values
    d4[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * dt)
    return np.abs(d2 - d4)


def check_hjb_fpe_duality(space, supersolution, fpe, drift, eps):
    """Gap of the HJB / Fokker-Planck duality inequality.

    A backward supersolution pairs with a forward flow,
    ``int phi_1 dnu_1 - int phi_0 dnu_0 <= int int 1/2 Gamma(u) dnu``; a forward
    one with a backward flow, with the left side negated.  The tolerance
    estimates time discretization only: the trapezoid error of the action
    (grid against its even-index subgrid) plus the central-difference error
    in the supersolution's time derivative.
    """
    direction = supersolution.direction or "backward"
    sigma = _sigma(direction)
    if fpe.direction == direction:
        raise ValueError("a backward supersolution pairs with a forward flow and vice versa")
    if supersolution.K != fpe.K or drift.K != fpe.K:
        raise ValueError("supersolution, flow and drift grids differ")
    if not np.isclose(fpe.diffusion, eps / 2, rtol=1e-12, atol=0):
        raise ValueError("the flow must have diffusion eps/2")
    w, times, nu = space.weights, fpe.times, fpe.rho
    phi = supersolution.values
    end = float(np.dot(phi[-1], nu[-1] * w) - np.dot(phi[0], nu[0] * w))
    lhs = end if sigma < 0 else -end
    kin = _kinetic(space, drift.values, nu)
    rhs = float(trapezoid(kin, times))
    tol = 0.0
    if fpe.K % 2 == 0 and fpe.K >= 4:
        tol += abs(rhs - float(trapezoid(kin[::2], times[::2])))
    cert = np.einsum("ti,ti->t", _fd4_error(phi, times), nu * w)
    tol += float(trapezoid(cert, times))
    tol = 2 * tol + 1e-12
    gap = rhs - lhs
    return DualityGap(lhs=lhs, rhs=rhs, gap=gap, tol=tol, ok=bool(gap >= -tol),
                      slack=supersolution.slack)
