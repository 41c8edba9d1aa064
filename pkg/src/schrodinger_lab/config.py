"""Problem configuration: a JSON document describing space, marginals and solver.

Schema (fields not listed are rejected)::

    {
      "space": {"type": "circle" | "interval", "n": int, "length": float}
             | {"type": "graph", "edges": [[i, j, c], ...], "weights": [...], "dist": [[...]]?}
             | {"type": "edgelist", "path": str},
      "marginals": {"rho0": <profile>, "rho1": <profile>},
      "eps": float,
      "solver": {"tol": float, "max_iter": int, "floor": float},     optional
      "K": int,                                                      optional, default 64
      "seed": int,                                                   optional, default 0
      "sweep": {"eps": [...], "n": int | [...], "out": str},         optional
      "verify": {"levels": [int, ...]}                               optional
    }

    <profile> = {"profile": "uniform"}
              | {"profile": "sine" | "cosine", "amplitude": a, "frequency": k, "phase": p}
              | {"profile": "gaussian", "center": c, "spread": s}
              | {"values": [...]}

Sine profiles are ``1 + a sin(2 pi k x / length + p)``; Gaussian profiles are
``exp(-d(x, c)^2 / s)`` with ``d`` the arc distance on circles.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .space import Density, build_circle_grid, build_graph, build_interval_grid, read_edge_list

__all__ = ["ConfigError", "ProblemSpec", "load_config", "parse_config", "config_hash",
           "profile_values"]

GRID_TYPES = ("circle", "interval")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class ProblemSpec:
    space: dict
    rho0: dict
    rho1: dict
    eps: float
    tol: float = 1e-12
    max_iter: int = 50000
    floor: float = 0.0
    K: int = 64
    seed: int = 0
    sweep: dict = None
    levels: tuple = (64, 128, 256)
    base_dir: str = field(default=".", compare=False)

    @property
    def refinable(self):
        return self.space["type"] in GRID_TYPES and "values" not in self.rho0 \
            and "values" not in self.rho1

    def canonical(self):
        """Plain-data view used for hashing and reports."""
        return {"space": self.space, "rho0": self.rho0, "rho1": self.rho1, "eps": self.eps,
                "tol": self.tol, "max_iter": self.max_iter, "floor": self.floor, "K": self.K,
                "seed": self.seed, "sweep": self.sweep, "levels": list(self.levels)}

    def build_space(self, n=None):
        """Space from the spec; ``n`` overrides the grid size of grid spaces."""
        s = self.space
        kind = s["type"]
        if kind == "circle":
            return build_circle_grid(n or s["n"], s["length"])
        if kind == "interval":
            return build_interval_grid(n or s["n"], s["length"])
        if n is not None:
            raise ConfigError("only circle and interval spaces can be refined")
        if kind == "graph":
            return build_graph([tuple(e) for e in s["edges"]], s["weights"], s.get("dist"))
        path = s["path"]
        if not os.path.isabs(path):
            path = os.path.join(self.base_dir, path)
        return read_edge_list(path)

    def marginals(self, space):
        """``(rho0, rho1)`` as Density objects on ``space``."""
        return (Density(space, _profile(space, self.rho0, "marginals.rho0"), floor=self.floor),
                Density(space, _profile(space, self.rho1, "marginals.rho1"), floor=self.floor))


def profile_values(spec, x, length, geometry):
    """Evaluate an analytic marginal profile at coordinates ``x``."""
    kind = spec["profile"]
    if kind == "uniform":
        return np.ones(len(x))
    if kind in ("sine", "cosine"):
        fn = np.sin if kind == "sine" else np.cos
        arg = 2 * np.pi * spec.get("frequency", 1) * x / length + spec.get("phase", 0.0)
        return 1.0 + spec["amplitude"] * fn(arg)
    d = np.abs(x - spec["center"])
    if geometry == "circle":
        d = np.minimum(d, length - d)
    return np.exp(-d**2 / spec["spread"])


def _profile(space, spec, where):
    if "values" in spec:
        values = np.asarray(spec["values"], dtype=float)
        if values.shape != (space.n,):
            raise ConfigError(f"{where}.values: expected {space.n} entries, got {values.size}")
        return values
    if spec["profile"] == "uniform":
        return np.ones(space.n)
    if space.coords is None or space.geometry not in GRID_TYPES:
        raise ConfigError(f"{where}: profile {spec['profile']!r} needs a circle or interval space")
    return profile_values(spec, space.coords, space.length, space.geometry)


def _require(obj, key, where, kinds):
    if key not in obj:
        raise ConfigError(f"missing field '{where}{key}'")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        names = " or ".join(k.__name__ for k in (kinds if isinstance(kinds, tuple) else (kinds,)))
        raise ConfigError(f"field '{where}{key}' must be {names}")
    return value


def _number(obj, key, where, default=None, lo=None, strict_lo=False, integer=False):
    if key not in obj and default is not None:
        return default
    value = _require(obj, key, where, int if integer else (int, float))
    if lo is not None and (value <= lo if strict_lo else value < lo):
        op = ">" if strict_lo else ">="
        raise ConfigError(f"field '{where}{key}' must be {op} {lo}, got {value!r}")
    return int(value) if integer else float(value)


def _no_extra(obj, allowed, where):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field '{where}{extra[0]}'")


def _parse_space(raw):
    s = _require(raw, "space", "", dict)
    kind = _require(s, "type", "space.", str)
    if kind in GRID_TYPES:
        _no_extra(s, ("type", "n", "length"), "space.")
        lo = 3 if kind == "circle" else 2
        return {"type": kind, "n": _number(s, "n", "space.", lo=lo, integer=True),
                "length": _number(s, "length", "space.", default=1.0, lo=0, strict_lo=True)}
    if kind == "graph":
        _no_extra(s, ("type", "edges", "weights", "dist"), "space.")
        edges = _require(s, "edges", "space.", list)
        for k, e in enumerate(edges):
            if not (isinstance(e, list) and len(e) == 3):
                raise ConfigError(f"field 'space.edges[{k}]' must be [i, j, conductance]")
        out = {"type": kind, "edges": edges, "weights": _require(s, "weights", "space.", list)}
        if "dist" in s:
            out["dist"] = _require(s, "dist", "space.", list)
        return out
    if kind == "edgelist":
        _no_extra(s, ("type", "path"), "space.")
        return {"type": kind, "path": _require(s, "path", "space.", str)}
    raise ConfigError(f"field 'space.type' must be one of circle, interval, graph, edgelist; "
                      f"got {kind!r}")


def _parse_profile(p, where):
    if not isinstance(p, dict):
        raise ConfigError(f"field '{where}' must be an object")
    if "values" in p:
        _no_extra(p, ("values",), where + ".")
        vals = _require(p, "values", where + ".", list)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise ConfigError(f"field '{where}.values' must hold numbers")
        return {"values": [float(v) for v in vals]}
    kind = _require(p, "profile", where + ".", str)
    w = where + "."
    if kind == "uniform":
        _no_extra(p, ("profile",), w)
        return {"profile": kind}
    if kind in ("sine", "cosine"):
        _no_extra(p, ("profile", "amplitude", "frequency", "phase"), w)
        amp = _number(p, "amplitude", w, default=0.5)
        if not abs(amp) <= 1:
            raise ConfigError(f"field '{w}amplitude' must lie in [-1, 1] for a nonnegative profile")
        return {"profile": kind, "amplitude": amp,
                "frequency": _number(p, "frequency", w, default=1, lo=0, integer=True),
                "phase": _number(p, "phase", w, default=0.0)}
    if kind == "gaussian":
        _no_extra(p, ("profile", "center", "spread"), w)
        return {"profile": kind, "center": _number(p, "center", w),
                "spread": _number(p, "spread", w, lo=0, strict_lo=True)}
    raise ConfigError(f"field '{w}profile' must be uniform, sine, cosine or gaussian; got {kind!r}")


def parse_config(raw, base_dir="."):
    """Validate a decoded JSON document and return a ProblemSpec."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    _no_extra(raw, ("space", "marginals", "eps", "solver", "K", "seed", "sweep", "verify"), "")
    space = _parse_space(raw)
    marg = _require(raw, "marginals", "", dict)
    _no_extra(marg, ("rho0", "rho1"), "marginals.")
    rho0 = _parse_profile(_require(marg, "rho0", "marginals.", dict), "marginals.rho0")
    rho1 = _parse_profile(_require(marg, "rho1", "marginals.", dict), "marginals.rho1")
    eps = _number(raw, "eps", "", lo=0, strict_lo=True)
    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("field 'solver' must be an object")
    _no_extra(solver, ("tol", "max_iter", "floor"), "solver.")
    kwargs = dict(
        tol=_number(solver, "tol", "solver.", default=1e-12, lo=0, strict_lo=True),
        max_iter=_number(solver, "max_iter", "solver.", default=50000, lo=1, integer=True),
        floor=_number(solver, "floor", "solver.", default=0.0, lo=0),
        K=_number(raw, "K", "", default=64, lo=2, integer=True),
        seed=_number(raw, "seed", "", default=0, lo=0, integer=True),
    )
    if "sweep" in raw:
        sw = _require(raw, "sweep", "", dict)
        _no_extra(sw, ("eps", "n", "out"), "sweep.")
        eps_list = _require(sw, "eps", "sweep.", list)
        if not eps_list or not all(isinstance(e, (int, float)) and e > 0 for e in eps_list):
            raise ConfigError("field 'sweep.eps' must be a nonempty list of positive numbers")
        n = _require(sw, "n", "sweep.", (int, list))
        kwargs["sweep"] = {"eps": [float(e) for e in eps_list], "n": n,
                           "out": sw.get("out", "sweep.csv")}
    if "verify" in raw:
        ver = _require(raw, "verify", "", dict)
        _no_extra(ver, ("levels",), "verify.")
        levels = _require(ver, "levels", "verify.", list)
        if len(levels) < 2 or not all(isinstance(v, int) and v >= 8 for v in levels) \
                or sorted(levels) != levels:
            raise ConfigError("field 'verify.levels' must be at least two increasing grid sizes >= 8")
        kwargs["levels"] = tuple(levels)
    return ProblemSpec(space=space, rho0=rho0, rho1=rho1, eps=eps, base_dir=base_dir, **kwargs)


def load_config(path):
    """Read and validate a JSON config file; errors name the file and line or field."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_hash(spec):
    """SHA-256 of the canonical JSON form of a ProblemSpec."""
    blob = json.dumps(spec.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
