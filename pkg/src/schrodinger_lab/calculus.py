"""Discrete first-order calculus on a finite reversible space.

The carré du champ is built from the off-diagonal generator rates,

    Gamma(u, v)(x) = 1/2 * sum_y L[x, y] (u[y] - u[x]) (v[y] - v[x]),

which makes ``sum_x w[x] Gamma(u, v)(x) = -sum_x w[x] u[x] (L v)(x)`` hold
exactly on every reversible space.  ``Gamma(u)`` plays the role of
``|grad u|^2`` and only agrees with it in the grid-refinement limit.
"""

import numpy as np

__all__ = [
    "carre_du_champ",
    "laplacian",
    "integrate",
    "relative_entropy",
    "entropy",
    "fisher_information",
]


def carre_du_champ(space, u, v=None):
    """Square field ``Gamma(u, v)``; ``Gamma(u, u)`` when ``v`` is omitted.

    Both arguments may be ``(n,)`` vectors or ``(n, m)`` arrays of columns.
    """
    u = np.asarray(u, dtype=float)
    v = u if v is None else np.asarray(v, dtype=float)
    rows, cols, rates = space.edges
    du = u[cols] - u[rows]
    dv = du if v is u else v[cols] - v[rows]
    if du.ndim == 1:
        return 0.5 * np.bincount(rows, weights=rates * du * dv, minlength=space.n)
    return 0.5 * (space.edge_gather @ (rates[:, None] * du * dv))


def laplacian(space, u):
    """Generator applied to ``u`` (vector or column array)."""
    return space.generator @ np.asarray(u, dtype=float)


def integrate(space, f, density=None):
    """``sum_i f[i] * density[i] * weights[i]``; the reference measure if no density."""
    f = np.asarray(f, dtype=float)
    w = space.weights if density is None else np.asarray(density, dtype=float) * space.weights
    return float(np.dot(f, w)) if f.ndim == 1 else w @ f


def relative_entropy(p, q):
    """Relative entropy ``sum p log(p / q)`` of two measures given as mass vectors.

    Uses ``0 log 0 = 0`` and returns ``inf`` when ``p`` charges a point where
    ``q`` vanishes.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((p > 0) & (q <= 0)):
        return np.inf
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def entropy(space, density):
    """Entropy ``H(rho m | m)`` of a density with respect to the reference measure."""
    rho = np.asarray(density, dtype=float)
    return relative_entropy(rho * space.weights, space.weights)


def fisher_information(space, density):
    """Fisher information ``int Gamma(log rho) rho dm`` of a strictly positive density."""
    rho = np.asarray(density, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("Fisher information needs a strictly positive density")
    log_rho = np.log(rho)
    return integrate(space, carre_du_champ(space, log_rho), rho)
