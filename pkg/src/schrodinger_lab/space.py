"""Finite reversible metric measure spaces and their heat semigroup.

A space is a finite set of points carrying a distance matrix, a positive
reference measure (``weights``) and a Markov generator which is reversible
with respect to that measure.  The heat flow ``exp(t * generator)`` is
evaluated exactly through the spectrum of the weight-symmetrized generator,
computed once at construction.
"""

from __future__ import annotations

from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

__all__ = [
    "Space",
    "Density",
    "SpaceError",
    "build_circle_grid",
    "build_interval_grid",
    "build_graph",
    "read_edge_list",
    "heat_apply",
    "heat_kernel",
    "log_heat_apply",
]


class SpaceError(ValueError):
    """Raised for invalid space data (bad stencil parameters, graphs, distances)."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class Space:
    """Finite reversible metric measure space.

    Parameters
    ----------
    generator : ndarray (n, n)
        Markov generator: nonnegative off-diagonal entries, zero row sums,
        reversible with respect to ``weights``.
    weights : ndarray (n,)
        Strictly positive reference measure.
    dist : ndarray (n, n)
        Symmetric distance matrix with zero diagonal.
    coords : ndarray (n,), optional
        Real coordinates, set by the grid builders.
    geometry : str
        ``"interval"``, ``"circle"`` or ``"graph"``.
    """

    def __init__(self, generator, weights, dist, coords=None, geometry="graph",
                 length=None, check_triangle=True):
        generator = np.asarray(generator, dtype=float)
        weights = np.asarray(weights, dtype=float)
        dist = np.asarray(dist, dtype=float)
        n = weights.shape[0]
        if generator.shape != (n, n) or dist.shape != (n, n):
            raise SpaceError("generator, weights and dist have inconsistent shapes")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise SpaceError("weights must be finite and strictly positive")
        off = generator - np.diag(np.diag(generator))
        if np.any(off < 0):
            raise SpaceError("off-diagonal generator entries must be nonnegative")
        scale = max(np.abs(generator).max(), 1.0)
        if np.abs(generator.sum(axis=1)).max() > 1e-10 * scale:
            raise SpaceError("generator rows must sum to zero")
        flux = weights[:, None] * generator
        if np.abs(flux - flux.T).max() > 1e-10 * scale * weights.max():
            raise SpaceError("generator is not reversible with respect to weights")
        _check_distance(dist, triangle=check_triangle)
        ncomp, _ = connected_components(csr_matrix(off > 0), directed=False)
        if ncomp != 1:
            raise SpaceError("heat kernel not strictly positive; IPFP may diverge "
                             f"(graph has {ncomp} connected components)")

        self.n = n
        self.generator = _frozen(generator)
        self.weights = _frozen(weights)
        self.dist = _frozen(dist)
        self.coords = None if coords is None else _frozen(coords)
        self.geometry = geometry
        self.length = length

        # symmetrized generator S = D L D^-1 with D = diag(sqrt(w))
        sq = np.sqrt(weights)
        sym = sq[:, None] * generator / sq[None, :]
        sym = 0.5 * (sym + sym.T)
        evals, evecs = np.linalg.eigh(sym)
        evals[evals > 0] = 0.0
        self.eigenvalues = _frozen(evals)
        self.eigenvectors = _frozen(evecs)
        self._sqrt_w = _frozen(sq)

    def __repr__(self):
        return f"Space(n={self.n}, geometry={self.geometry!r}, mass={self.total_mass:.6g})"

    @property
    def total_mass(self):
        return float(self.weights.sum())

    @cached_property
    def edges(self):
        """Off-diagonal generator entries as ``(rows, cols, rates)`` arrays."""
        off = self.generator - np.diag(np.diag(self.generator))
        rows, cols = np.nonzero(off)
        return rows, cols, off[rows, cols]

    @cached_property
    def edge_gather(self):
        """Sparse ``(n, n_edges)`` matrix summing per-edge terms into their row vertex."""
        rows = self.edges[0]
        k = np.arange(rows.size)
        return csr_matrix((np.ones(rows.size), (rows, k)), shape=(self.n, rows.size))

    @cached_property
    def spectral_radius(self):
        return float(-self.eigenvalues.min())

    @property
    def spacing(self):
        """Grid spacing h for grid geometries, ``None`` for general graphs."""
        if self.geometry in ("circle", "interval"):
            return self.length / self.n
        return None


class Density:
    """Probability density with respect to the reference measure of a space.

    The represented measure is ``values[i] * weights[i]``.  Arrays are
    normalized on construction.  Instances convert transparently to numpy
    arrays, so every operation accepting a density also accepts a plain
    vector.
    """

    def __init__(self, space, values, floor=0.0, strict=False):
        values = np.asarray(values, dtype=float)
        if values.shape != (space.n,):
            raise ValueError(f"density needs {space.n} values, got shape {values.shape}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite and nonnegative")
        mass = float(np.dot(values, space.weights))
        if mass <= 0:
            raise ValueError("density has zero mass")
        values = values / mass
        if floor > 0:
            # mix with the uniform probability density and renormalize
            values = (values + floor / space.total_mass) / (1.0 + floor)
        if strict and values.min() <= 0:
            raise ValueError("density must be strictly positive; use a floor to regularize")
        self.values = _frozen(values)
        self.strict = bool(values.min() > 0)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)

    def measure(self, space):
        return self.values * space.weights


def _check_distance(dist, triangle=True):
    if np.abs(dist - dist.T).max() > 1e-12 * max(dist.max(), 1.0):
        raise SpaceError("distance matrix must be symmetric")
    if np.any(np.diag(dist) != 0) or np.any(dist < 0):
        raise SpaceError("distance matrix must be nonnegative with zero diagonal")
    if triangle:
        # d[i,k] <= d[i,j] + d[j,k] for all i, j, k
        n = dist.shape[0]
        tol = 1e-12 * max(dist.max(), 1.0)
        for j in range(n):
            if np.any(dist > dist[:, j][:, None] + dist[j, :][None, :] + tol):
                raise SpaceError("distance matrix violates the triangle inequality")


def build_circle_grid(n, length):
    """Periodic grid of ``n`` points on a circle of circumference ``length``.

    Weights are the spacing h, the generator is the three-point second
    difference with wrap-around scaled by 1/h^2, and distances are arc
    lengths.
    """
    if n < 3:
        raise SpaceError("circle grid needs n >= 3")
    if not length > 0:
        raise SpaceError("length must be positive")
    h = length / n
    gen = np.zeros((n, n))
    idx = np.arange(n)
    gen[idx, (idx + 1) % n] += 1.0
    gen[idx, (idx - 1) % n] += 1.0
    gen[idx, idx] = -2.0
    gen /= h * h
    x = idx * h
    d = np.abs(x[:, None] - x[None, :])
    d = np.minimum(d, length - d)
    return Space(gen, np.full(n, h), d, coords=x, geometry="circle", length=length,
                 check_triangle=False)


def build_interval_grid(n, length, boundary="neumann"):
    """Cell-centred grid of ``n`` points on ``[0, length]`` with reflecting ends."""
    if boundary != "neumann":
        raise SpaceError(f"unsupported boundary condition {boundary!r}")
    if n < 2:
        raise SpaceError("interval grid needs n >= 2")
    if not length > 0:
        raise SpaceError("length must be positive")
    h = length / n
    gen = np.zeros((n, n))
    idx = np.arange(n - 1)
    gen[idx, idx + 1] = 1.0
    gen[idx + 1, idx] = 1.0
    gen[np.arange(n), np.arange(n)] = -gen.sum(axis=1)
    gen /= h * h
    x = (np.arange(n) + 0.5) * h
    d = np.abs(x[:, None] - x[None, :])
    return Space(gen, np.full(n, h), d, coords=x, geometry="interval", length=length,
                 check_triangle=False)


def build_graph(edges, weights, dist=None):
    """Weighted graph with generator ``conductance(i, j) / weights[i]``.

    Parameters
    ----------
    edges : iterable of (i, j, conductance)
        Undirected edges; repeated edges add their conductances.
    weights : array_like (n,)
        Reference measure on the vertices.
    dist : array_like (n, n), optional
        Distance matrix.  Defaults to the shortest-path distance with unit
        edge lengths.
    """
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    cond = np.zeros((n, n))
    for i, j, c in edges:
        i, j, c = int(i), int(j), float(c)
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise SpaceError(f"invalid edge ({i}, {j})")
        if not c > 0:
            raise SpaceError(f"conductance of edge ({i}, {j}) must be positive")
        cond[i, j] += c
        cond[j, i] += c
    if np.any(weights <= 0):
        raise SpaceError("weights must be strictly positive")
    gen = cond / weights[:, None]
    gen[np.arange(n), np.arange(n)] = -gen.sum(axis=1)
    ncomp, _ = connected_components(csr_matrix(cond > 0), directed=False)
    if ncomp != 1:
        raise SpaceError("heat kernel not strictly positive; IPFP may diverge "
                         f"(graph has {ncomp} connected components)")
    if dist is None:
        dist = shortest_path(csr_matrix((cond > 0).astype(float)), directed=False)
    return Space(gen, weights, dist, geometry="graph")


def read_edge_list(path):
    """Build a graph space from a plain-text edge list.

    Format (``#`` starts a comment)::

        0 1 1.0            # one "i j conductance" triple per line
        1 2 0.5
        weights 1 1 2      # reference measure, one value per vertex
        dist               # optional: n rows of n distances follow
        0 1 2
        1 0 1
        2 1 0
    """
    edges, weights, dist_rows = [], None, None
    lines = Path(path).read_text().splitlines()
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if dist_rows is not None:
                dist_rows.append([float(t) for t in tokens])
            elif tokens[0] == "weights":
                weights = [float(t) for t in tokens[1:]]
            elif tokens[0] == "dist":
                dist_rows = []
            elif len(tokens) == 3:
                edges.append((int(tokens[0]), int(tokens[1]), float(tokens[2])))
            else:
                raise ValueError("expected 'i j conductance'")
        except ValueError as exc:
            raise SpaceError(f"{path}:{lineno}: {exc}") from None
    if weights is None:
        raise SpaceError(f"{path}: missing 'weights' line")
    dist = None
    if dist_rows is not None:
        dist = np.array(dist_rows)
        if dist.shape != (len(weights), len(weights)):
            raise SpaceError(f"{path}: distance block must be {len(weights)}x{len(weights)}")
    return build_graph(edges, weights, dist)


def heat_apply(space, t, f):
    """Heat flow ``exp(t * generator) @ f`` through the cached spectrum.

    ``f`` may be a vector or an ``(n, m)`` array of column vectors.
    """
    if t < 0:
        raise ValueError("heat flow time must be nonnegative")
    f = np.asarray(f, dtype=float)
    if t == 0:
        return f.copy()
    sq, V = space._sqrt_w, space.eigenvectors
    decay = np.exp(t * space.eigenvalues)
    # constants are fixed exactly: flow only the part above the minimum
    base = f.min(axis=0)
    g = f - base
    if f.ndim == 1:
        return base + (V @ (decay * (V.T @ (sq * g)))) / sq
    return base + (V @ (decay[:, None] * (V.T @ (sq[:, None] * g)))) / sq[:, None]


def heat_kernel(space, t):
    """Heat kernel density ``r_t[x](y)`` with respect to ``weights``.

    ``heat_apply(space, t, f)[x] == sum_y r[x, y] * f[y] * weights[y]``.
    """
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    V = space.eigenvectors
    r = (V * np.exp(t * space.eigenvalues)) @ V.T
    r /= np.outer(space._sqrt_w, space._sqrt_w)
    return 0.5 * (r + r.T)


def log_heat_apply(space, t, a):
    """``log(heat_apply(space, t, exp(a)))`` with max-subtraction.

    Works column-wise for 2-D input.
    """
    a = np.asarray(a, dtype=float)
    if t == 0:
        return a.copy()
    top = a.max(axis=0)
    val = heat_apply(space, t, np.exp(a - top))
    if np.any(val <= 0):
        raise FloatingPointError(
            "heat flow of a positive vector lost positivity to round-off; "
            "the kernel is too concentrated for this grid (increase eps or coarsen)")
    return np.log(val) + top
