"""Command-line entry point: ``solve``, ``verify``, ``interpolate``, ``sweep``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(including a failed verification).
"""

import argparse
import json
import os
import sys
from dataclasses import replace

from . import __version__
from .config import ConfigError, config_hash, load_config, profile_values
from .interpolation import interpolate, write_path_csv
from .oracle import write_sweep_csv, zero_noise_sweep
from .schrodinger import ConvergenceError, ipfp_solve
from .verify import run_verify

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


def _sci(x):
    """Compact scientific notation, e.g. ``1.234500e-3``."""
    mant, exp = f"{x:.6e}".split("e")
    return f"{mant}e{int(exp)}"


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load(args):
    spec = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.floor is not None:
        if args.floor < 0:
            raise ConfigError("--floor must be nonnegative")
        changes["floor"] = args.floor
    if args.K is not None:
        if args.K < 2:
            raise ConfigError("--K must be at least 2")
        changes["K"] = args.K
    return replace(spec, **changes)


def _solve(spec):
    space = spec.build_space()
    rho0, rho1 = spec.marginals(space)
    return space, ipfp_solve(space, rho0, rho1, spec.eps, tol=spec.tol, max_iter=spec.max_iter)


def cmd_solve(spec, out):
    _, sol = _solve(spec)
    doc = sol.to_json()
    doc["config_sha256"] = config_hash(spec)
    _write_json(os.path.join(out, "solution.json"), doc)
    print(f"cost={_sci(sol.cost)} iters={sol.iterations} residual={_sci(sol.marginal_residual)}")
    return EXIT_OK


def cmd_verify(spec, out, tier):
    report = run_verify(spec, tier)
    _write_json(os.path.join(out, "report.json"), report.to_json())
    print(report.table())
    return EXIT_OK if report.ok else EXIT_NUMERIC


def cmd_interpolate(spec, out):
    space, sol = _solve(spec)
    path = interpolate(space, sol, spec.K)
    target = os.path.join(out, "path.csv")
    with open(target, "w", encoding="utf-8", newline="") as fh:
        write_path_csv(path, fh)
    print(f"wrote {target} rows={(spec.K + 1) * space.n}")
    return EXIT_OK


def cmd_sweep(spec, out):
    if spec.sweep is None:
        raise ConfigError("missing field 'sweep'")
    if spec.space["type"] != "interval" or not spec.refinable:
        raise ConfigError("sweep needs an interval space with analytic marginal profiles")
    sw = spec.sweep
    L = spec.space["length"]
    rows = zero_noise_sweep(lambda x: profile_values(spec.rho0, x, L, "interval"),
                            lambda x: profile_values(spec.rho1, x, L, "interval"),
                            sw["eps"], sw["n"], length=L, tol=spec.tol,
                            max_iter=spec.max_iter, floor=spec.floor)
    target = sw["out"] if os.path.isabs(sw["out"]) else os.path.join(out, sw["out"])
    with open(target, "w", encoding="utf-8", newline="") as fh:
        write_sweep_csv(rows, fh)
    for r in rows:
        print(f"eps={_sci(r.eps)} n={r.n} cost={_sci(r.cost)} w2sq_half={_sci(r.w2sq_half)} "
              f"gap={_sci(r.gap)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="schrodinger-lab",
        description="Entropic optimal transport on finite reversible spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON problem configuration")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--floor", type=float, help="mix marginals with this much uniform mass")
    common.add_argument("--K", type=int, help="override the time-grid size")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve the Schrödinger system")
    ver = sub.add_parser("verify", parents=[common], help="run the verification suites")
    ver.add_argument("--tier", choices=("a", "b", "all"), default="all")
    sub.add_parser("interpolate", parents=[common], help="write the entropic interpolation")
    sub.add_parser("sweep", parents=[common], help="run the zero-noise sweep")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        spec = _load(args)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "solve":
            return cmd_solve(spec, args.out)
        if args.command == "verify":
            return cmd_verify(spec, args.out, args.tier)
        if args.command == "interpolate":
            return cmd_interpolate(spec, args.out)
        return cmd_sweep(spec, args.out)
    except (ConvergenceError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
