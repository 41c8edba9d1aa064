"""Entropic Hopf-Lax operator and the Kantorovich-type dual of the entropic cost.

    Q_t u = eps log h_{eps t/2} e^{u/eps}

    forward:   J(u) = eps H(mu1|m) + int u dmu0 - int Q_1 u dmu1
    backward:  J(u) = eps H(mu0|m) + int u dmu1 - int Q_1 u dmu0

Both are bounded by ``eps * I_eps``; the forward form attains it at ``phi0``
and the backward form at ``psi1``.
"""

from dataclasses import dataclass

import numpy as np

from .calculus import relative_entropy
from .space import heat_apply, log_heat_apply

__all__ = ["AscentError", "AttainmentReport", "q_apply", "dual_objective",
           "dual_gradient", "verify_attainment", "dual_ascent"]


class AscentError(RuntimeError):
    """Dual ascent failed to increase the objective."""


def q_apply(space, u, eps, t=1.0):
    """Entropic Hopf-Lax operator ``Q_t u``, evaluated with max-subtraction."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    u = np.asarray(u, dtype=float)
    return eps * log_heat_apply(space, eps * t / 2, u / eps)


def _oriented(mu0, mu1, orientation):
    if orientation == "forward":
        return mu0, mu1
    if orientation == "backward":
        return mu1, mu0
    raise ValueError(f"orientation must be 'forward' or 'backward', got {orientation!r}")


def dual_objective(space, u, mu0, mu1, eps, orientation="forward"):
    """Dual objective; ``mu0``, ``mu1`` are mass vectors."""
    src, dst = _oriented(np.asarray(mu0, float), np.asarray(mu1, float), orientation)
    u = np.asarray(u, dtype=float)
    ent = relative_entropy(dst, space.weights)
    return float(eps * ent + np.dot(u, src) - np.dot(q_apply(space, u, eps), dst))


def dual_gradient(space, u, mu0, mu1, eps, orientation="forward"):
    """Gradient of the dual objective in the ``m``-metric (a density).

    ``rho_src - e^{u/eps} h(rho_dst / h(e^{u/eps}))``; zero exactly at the optimum.
    """
    src, dst = _oriented(np.asarray(mu0, float), np.asarray(mu1, float), orientation)
    w = space.weights
    a = np.asarray(u, dtype=float) / eps
    e = np.exp(a - a.max())
    push = e * heat_apply(space, eps / 2, (dst / w) / heat_apply(space, eps / 2, e))
    return src / w - push


@dataclass(frozen=True)
class AttainmentReport:
    q_gap: float
    forward_gap: float
    backward_gap: float
    tol: float

    @property
    def ok(self):
        return self.q_gap <= 1e-10 and max(self.forward_gap, self.backward_gap) <= self.tol

    def to_json(self):
        return {"q_gap": self.q_gap, "forward_gap": self.forward_gap,
                "backward_gap": self.backward_gap, "tol": self.tol, "ok": self.ok}


def verify_attainment(space, solution, mu0=None, mu1=None):
    """Check that the dual is attained by the Schrödinger potentials.

    ``q_gap`` compares ``Q_1 phi0`` with ``eps log h_{eps/2} f`` evaluated
    without log-domain shifting; the two objective gaps compare the forward
    form at ``phi0`` and the backward form at ``psi1`` with ``eps * I_eps``.
    """
    eps = solution.eps
    mu0 = solution.mu0 if mu0 is None else np.asarray(mu0, float)
    mu1 = solution.mu1 if mu1 is None else np.asarray(mu1, float)
    scale = solution.phi0.max()
    phi1 = scale + eps * np.log(heat_apply(space, eps / 2, np.exp((solution.phi0 - scale) / eps)))
    q_gap = float(np.abs(q_apply(space, solution.phi0, eps) - phi1).max())
    fwd = dual_objective(space, solution.phi0, mu0, mu1, eps, "forward")
    bwd = dual_objective(space, solution.psi1, mu0, mu1, eps, "backward")
    tol = max(1e-8, 10 * solution.marginal_residual)
    return AttainmentReport(q_gap=q_gap, forward_gap=abs(fwd - solution.cost),
                            backward_gap=abs(bwd - solution.cost), tol=tol)


def dual_ascent(space, mu0, mu1, eps, u=None, steps=1000, rate=None,
                orientation="forward", slack=1e-12, history=None):
    """Fixed-rate gradient ascent on the concave dual objective.

    The iterate is shifted to ``int u dm = 0`` after each step.  Raises
    ``AscentError`` when the objective drops by more than ``slack`` (relative
    to its magnitude) in a step.  Pass a list as ``history`` to collect the
    objective values.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    rate = 0.5 * eps if rate is None else float(rate)
    w = space.weights
    u = np.zeros(space.n) if u is None else np.array(u, dtype=float)
    u -= np.dot(u, w) / w.sum()
    J = dual_objective(space, u, mu0, mu1, eps, orientation)
    if history is not None:
        history.append(J)
    for k in range(steps):
        u = u + rate * dual_gradient(space, u, mu0, mu1, eps, orientation)
        u -= np.dot(u, w) / w.sum()
        J_new = dual_objective(space, u, mu0, mu1, eps, orientation)
        if J_new < J - slack * max(1.0, abs(J)):
            raise AscentError(f"objective decreased by {J - J_new:.3e} at step {k}; "
                              f"reduce the rate (currently {rate:g})")
        J = J_new
        if history is not None:
            history.append(J)
    return u
