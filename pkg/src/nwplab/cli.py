"""Command-line interface: verification suites, state transforms, amplitudes.

Exit codes: 0 when every report row passes, 2 when any row fails its
tolerance, 1 for usage or configuration errors.  Errors print a
machine-readable JSON object with a code and message.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import actions, harness, localization as loc
from .lattice import DomainError, FockSum, load_state, save_state

__all__ = ["cli_main", "main"]

_SUITES = {
    "verify-algebra": harness.run_algebra_suite,
    "verify-identities": harness.run_identity_suite,
    "verify-kernels": harness.run_kernel_suite,
    "verify-covariance": harness.run_covariance_suite,
    "verify-all": harness.run_all,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nwplab",
        description="Conformal-group laboratory for the massless scalar field "
                    "in momentum and position (NWP) representations.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in _SUITES:
        p = sub.add_parser(name, help=f"run the {name.split('-', 1)[1]} suite")
        _add_config_flags(p)

    p = sub.add_parser("transform", help="apply a conformal transformation to a state")
    p.add_argument("--state", required=True, help="input state container")
    p.add_argument("--element", required=True,
                   help="JSON {y: [y0,y1,y2,y3], R: name|matrix, alpha: float}")
    p.add_argument("--out", required=True, help="output state container")
    p.add_argument("--report", help="optional JSON report path (default stdout)")
    p.add_argument("--interpolation", default="spectral", choices=["spectral", "linear"])

    p = sub.add_parser("amplitude", help="evaluate localization amplitudes")
    p.add_argument("--state", help="one-particle state container")
    p.add_argument("--fock", help="JSON manifest of a k-particle product sum")
    p.add_argument("--points", required=True,
                   help="JSON list of spacetime points [[t, x1, x2, x3], ...]")
    p.add_argument("--time", type=float, help="override the time of every point")
    p.add_argument("--density", help="write the full |amplitude|^2 array (state container)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    return parser


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--grid", type=int, help="points per axis")
    p.add_argument("--box", type=float, help="coordinate box length")
    p.add_argument("--dim", type=int, help="spatial dimension")
    p.add_argument("--tol-profile", choices=sorted(harness.TOLERANCE_PROFILES),
                   help="tolerance profile")
    p.add_argument("--seed", type=int, help="recipe seed")
    p.add_argument("--refinement", action="store_true",
                   help="add coarse-vs-fine refinement rows (algebra suite)")
    p.add_argument("--out", help="report output path (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def _config_from_args(args) -> dict:
    overrides: dict = {}
    grid: dict = {}
    if args.grid is not None:
        grid["points_per_axis"] = args.grid
    if args.box is not None:
        grid["box_length"] = args.box
    if args.dim is not None:
        grid["n"] = args.dim
    if grid:
        overrides["grid"] = grid
    if args.tol_profile:
        overrides["tol_profile"] = args.tol_profile
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "refinement", False):
        overrides["refinement_check"] = True
    return harness.load_config(args.config, overrides)


def _emit_error(code: str, message: str) -> int:
    print(json.dumps({"error": {"code": code, "message": message}}, sort_keys=True),
          file=sys.stderr)
    return 1


def _write(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command in _SUITES:
            return _run_suite(args)
        if args.command == "transform":
            return _run_transform(args)
        if args.command == "amplitude":
            return _run_amplitude(args)
    except (DomainError, ValueError, KeyError, OSError) as exc:
        return _emit_error("config", str(exc))
    return _emit_error("usage", f"unknown command {args.command!r}")


def _run_suite(args) -> int:
    config = _config_from_args(args)
    report = _SUITES[args.command](config)
    text = report.to_json() if args.format == "json" else report.to_csv()
    _write(text, args.out)
    return 0 if report.passed else 2


def _run_transform(args) -> int:
    state = load_state(args.state)
    spec = json.loads(args.element)
    y = np.asarray(spec.get("y", [0.0] * (state.grid.n + 1)), dtype=float)
    R = actions.named_rotation(spec.get("R", "identity"))
    alpha = float(spec.get("alpha", 0.0))
    if state.grid.n == 3:
        element = actions.PoincareElement(y, R)
        out = actions.combined_action(state, element, alpha,
                                      scheme=args.interpolation)
    else:
        out = actions.translate(state, y)
        if alpha:
            out = actions.dilate(out, alpha)
    save_state(out, args.out)
    from . import generators as gen
    from .lattice import inner_product

    report = {
        "input_norm": state.norm(),
        "output_norm": out.norm(),
        "interpolation": args.interpolation,
        "element": {"y": list(map(float, y)), "alpha": alpha,
                    "R": np.asarray(R).tolist()},
        "energy_expectation": {
            "input": inner_product(state, gen.apply(gen.P0(), state)).real,
            "output": inner_product(out, gen.apply(gen.P0(), out)).real,
        },
    }
    _write(json.dumps(report, sort_keys=True, indent=2), args.report)
    return 0


def _load_fock(path) -> FockSum:
    with open(path) as fh:
        manifest = json.load(fh)
    terms = []
    for term in manifest["terms"]:
        weight = complex(term["weight"][0], term["weight"][1])
        factors = tuple(load_state(p) for p in term["factors"])
        terms.append((weight, factors))
    return FockSum(manifest["k"], tuple(terms))


def _run_amplitude(args) -> int:
    if bool(args.state) == bool(args.fock):
        return _emit_error("usage", "provide exactly one of --state or --fock")
    with open(args.points) as fh:
        raw_points = json.load(fh)
    if args.state:
        state = load_state(args.state)
        n = state.grid.n
        points = [loc.SpacetimePoint(args.time if args.time is not None else p[0],
                                     np.asarray(p[1:1 + n], dtype=float))
                  for p in raw_points]
        values = [loc.amplitude_one(state, pt) for pt in points]
        if args.density:
            t = args.time if args.time is not None else points[0].t
            dens = loc.position_density(state, t)
            from .lattice import CoordinateState
            save_state(CoordinateState(state.grid, dens.astype(complex)), args.density)
    else:
        fock = _load_fock(args.fock)
        n = fock.grid.n
        k = fock.k
        points, values = [], []
        for p in raw_points:
            pts = []
            flat = p[1:]
            t = args.time if args.time is not None else p[0]
            for i in range(k):
                pts.append(loc.SpacetimePoint(t, np.asarray(flat[i * n:(i + 1) * n])))
            points.append(pts[0])
            values.append(loc.amplitude_k(fock, pts))
        if args.density:
            return _emit_error("usage", "--density applies to one-particle states only")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["t"] + [f"x{i+1}" for i in range(n)] + ["re", "im", "abs2"])
    for pt, val in zip(points, values):
        writer.writerow([repr(pt.t)] + [repr(float(c)) for c in pt.x]
                        + [repr(val.real), repr(val.imag), repr(abs(val) ** 2)])
    _write(buf.getvalue(), args.out)
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
