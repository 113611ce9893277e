"""Verification suites: conformal algebra table, identities, kernels, covariance.

Suites consume a plain configuration dictionary (grid geometry, tolerance
profile, state recipe parameters, seed) and emit a :class:`Report` whose JSON
rendering is byte-stable for a fixed configuration, modulo the timestamp.
Tolerance profiles are data: residual classes are keyed by the highest
derivative order entering a check, with thresholds recorded alongside every
row so a report is self-contained.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import actions, generators as gen, kernels, localization as loc
from .lattice import (DomainError, GridSpec, MomentumState, check_margins,
                      inner_product, make_gaussian_ring)
from .spectral import to_coordinate, to_momentum

__all__ = [
    "TOLERANCE_PROFILES",
    "default_config",
    "load_config",
    "Report",
    "Row",
    "standard_states",
    "algebra_table",
    "run_algebra_suite",
    "run_identity_suite",
    "run_kernel_suite",
    "run_covariance_suite",
    "run_all",
]

SCHEMA_VERSION = 1

TOLERANCE_PROFILES = {
    "strict": {
        "exact": 1e-12,
        "first": 1e-8,
        "second": 1e-5,
        "identity_first": 1e-9,
        "identity_second": 1e-5,
        "conjugation_first": 1e-9,
        "conjugation_second": 1e-5,
        "unitary_exact": 1e-12,
        "unitary_interp": 1e-4,
        "covariance_exact": 1e-12,
        "covariance_dilate": 1e-4,
        "covariance_combined": 1e-3,
        "density": 1e-10,
        "kernel_coefficient": 1e-4,
        "kernel_pointwise": 1e-6,
        "bessel": 1e-7,
        "l63_final": 5e-3,
    },
    "smoke": {},
}
TOLERANCE_PROFILES["smoke"] = {k: v * 100 for k, v in TOLERANCE_PROFILES["strict"].items()}


def default_config() -> dict:
    return {
        "grid": {"n": 3, "points_per_axis": 64, "box_length": 20.0},
        "tol_profile": "strict",
        "seed": 7,
        "recipe": {
            # reference ring parameters at momentum extent ~10; scaled to the grid
            "radii": [3.45, 3.55, 3.65],
            "widths": [0.76, 0.78, 0.74],
            "suppression_scale": 2.0,
            "suppression_power": 2,
            "directions": [None, [1.0, 0.0, 0.0], [0.0, 0.7071067811865476, 0.7071067811865476]],
            "anisotropy": 0.35,
            "reference_extent": 10.053096491487338,
        },
        "refinement_check": False,
        "conjugation_grid": {"n": 3, "points_per_axis": 96, "box_length": 30.0},
        "interpolation": "spectral",
        "l63": {"y0": 0.5, "ladder": [0.2, 0.1, 0.05]},
    }


def load_config(path=None, overrides=None) -> dict:
    cfg = default_config()
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        _deep_update(cfg, user)
    if overrides:
        _deep_update(cfg, overrides)
    profile = cfg["tol_profile"]
    if profile not in TOLERANCE_PROFILES:
        raise ValueError(f"unknown tolerance profile {profile!r}")
    cfg.setdefault("tolerances", dict(TOLERANCE_PROFILES[profile]))
    return cfg


def _deep_update(base: dict, extra: dict) -> None:
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value


def _grid_from(cfg_grid: dict) -> GridSpec:
    return GridSpec(cfg_grid["n"], cfg_grid["points_per_axis"], cfg_grid["box_length"])


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class Row:
    name: str
    suite: str
    residual: float
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"name": self.name, "suite": self.suite, "residual": self.residual,
               "tolerance": self.tolerance, "passed": self.passed}
        if self.extra:
            out["extra"] = _jsonable(self.extra)
        return out


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


@dataclass
class Report:
    metadata: dict
    rows: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "generated_at": self.metadata.get("generated_at"),
            "metadata": {k: _jsonable(v) for k, v in self.metadata.items()
                         if k != "generated_at"},
            "rows": [r.as_dict() for r in self.rows],
            "passed": self.passed,
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=indent)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["suite", "name", "residual", "tolerance", "passed"])
        for r in self.rows:
            writer.writerow([r.suite, r.name, repr(r.residual), repr(r.tolerance),
                             int(r.passed)])
        return buf.getvalue()

    @staticmethod
    def merge(reports, metadata) -> "Report":
        rows = [r for rep in reports for r in rep.rows]
        return Report(metadata, rows)


def _new_metadata(cfg: dict, suite: str) -> dict:
    return {
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "suite": suite,
        "config": {k: v for k, v in cfg.items() if k != "tolerances"},
        "tolerances": cfg["tolerances"],
        "interpolation": cfg.get("interpolation", "spectral"),
    }


# ---------------------------------------------------------------------------
# state recipes
# ---------------------------------------------------------------------------

def standard_states(grid: GridSpec, cfg: dict, *, margin_threshold=None) -> list:
    """Three distinct ring states scaled to the grid's momentum extent.

    Every number is regenerable from the recipe in the config; no binary
    fixtures.  Margins are measured by the caller rather than asserted so
    deliberately under-resolved refinement grids stay usable.
    """
    states = []
    for r0, width, kwargs in _ring_params(cfg["recipe"], grid):
        states.append(make_gaussian_ring(grid, r0, width,
                                         margin_threshold=margin_threshold, **kwargs))
    return states


def _ring_params(rec: dict, grid: GridSpec) -> list:
    """Recipe parameters scaled to the grid's momentum extent.

    Widths are clamped so the ring support respects r0 - 4 sigma > dp on
    coarse boxes.
    """
    scale = grid.momentum_extent / rec["reference_extent"]
    out = []
    for r0, width, direction in zip(rec["radii"], rec["widths"], rec["directions"]):
        r0 = scale * r0
        width = min(scale * width, (r0 - 1.25 * grid.dp) / 4.0)
        kwargs = dict(
            direction=None if direction is None else np.asarray(direction)[: grid.n],
            suppression_scale=scale * rec["suppression_scale"],
            suppression_power=rec["suppression_power"],
            anisotropy=rec.get("anisotropy", 0.35),
        )
        out.append((r0, width, kwargs))
    return out


# ---------------------------------------------------------------------------
# conformal algebra table
# ---------------------------------------------------------------------------

def _spatial_m(a: int, b: int):
    """M_ab for spatial 1-based a != b as (sign, Generator)."""
    if a < b:
        return 1.0, gen.Mrot(a, b)
    return -1.0, gen.Mrot(b, a)


def conformal_bracket(A: gen.Generator, B: gen.Generator):
    """Expected [A, B] as a list of (coefficient, Generator) terms.

    Encodes the conformal algebra with metric (+,-,-,-), M_j0 the boosts and
    M_ik the rotations; antisymmetry is used to reduce to a canonical order.
    """
    terms = _bracket_canonical(A, B)
    if terms is None:
        flipped = _bracket_canonical(B, A)
        if flipped is None:
            raise ValueError(f"bracket [{A.name},{B.name}] not in table")
        terms = [(-c, g) for c, g in flipped]
    return terms


def _bracket_canonical(A: gen.Generator, B: gen.Generator):
    ta, tb = A.tag, B.tag
    ia = A.indices
    ib = B.indices
    d = lambda x, y: 1.0 if x == y else 0.0
    # translations commute
    if ta in ("P0", "P") and tb in ("P0", "P"):
        return []
    if ta in ("P0", "P") and tb == "Mboost":
        j = ib[0]
        if ta == "P0":
            return [(-1j, gen.P(j))]
        return [(-1j * d(ia[0], j), gen.P0())] if ia[0] == j else []
    if ta in ("P0", "P") and tb == "Mrot":
        i, k = ib
        if ta == "P0":
            return []
        l = ia[0]
        out = []
        if l == i:
            out.append((-1j, gen.P(k)))
        if l == k:
            out.append((1j, gen.P(i)))
        return out
    if ta in ("P0", "P") and tb == "D":
        return [(1j, A)]
    if ta in ("K0", "K") and tb == "D":
        return [(-1j, A)]
    if ta in ("P0", "P") and tb in ("K0", "K"):
        if ta == "P0" and tb == "K0":
            return [(2j, gen.D())]
        if ta == "P0":
            return [(2j, gen.Mboost(ib[0]))]
        if tb == "K0":
            return [(-2j, gen.Mboost(ia[0]))]
        j, k = ia[0], ib[0]
        if j == k:
            return [(-2j, gen.D())]
        s, m = _spatial_m(j, k)
        return [(-2j * s, m)]
    if ta == "Mboost" and tb == "Mboost":
        i, j = ia[0], ib[0]
        if i == j:
            return []
        s, m = _spatial_m(i, j)
        return [(-1j * s, m)]
    if ta == "Mrot" and tb == "Mboost":
        i, k = ia
        j = ib[0]
        out = []
        if k == j:
            out.append((-1j, gen.Mboost(i)))
        if i == j:
            out.append((1j, gen.Mboost(k)))
        return out
    if ta == "Mrot" and tb == "Mrot":
        i, k = ia
        j, l = ib
        out = []
        for sign, a, b in ((-1j * d(i, l), k, j), (-1j * d(k, j), i, l),
                           (1j * d(i, j), k, l), (1j * d(k, l), i, j)):
            if sign != 0 and a != b:
                s, m = _spatial_m(a, b)
                out.append((sign * s, m))
        return out
    if ta in ("K0", "K") and tb == "Mboost":
        j = ib[0]
        if ta == "K0":
            return [(-1j, gen.K(j))]
        return [(-1j, gen.K0())] if ia[0] == j else []
    if ta in ("K0", "K") and tb == "Mrot":
        i, k = ib
        if ta == "K0":
            return []
        l = ia[0]
        out = []
        if l == i:
            out.append((-1j, gen.K(k)))
        if l == k:
            out.append((1j, gen.K(i)))
        return out
    if ta in ("K0", "K") and tb in ("K0", "K"):
        return []
    if ta == "D" and tb in ("Mboost", "Mrot"):
        return []
    return None


def _operator_list(n: int = 3) -> list:
    ops = [gen.P0()] + [gen.P(j) for j in range(1, n + 1)]
    ops += [gen.Mboost(j) for j in range(1, n + 1)]
    ops += [gen.Mrot(i, k) for i in range(1, n + 1) for k in range(i + 1, n + 1)]
    ops += [gen.D(), gen.K0()] + [gen.K(j) for j in range(1, n + 1)]
    return ops


_DERIVATIVE_ORDER = {"P0": 0, "P": 0, "V": 0, "N": 0,
                     "X": 1, "Mboost": 1, "Mrot": 1, "D": 1,
                     "K0": 2, "K": 2}


def _residual_class(A: gen.Generator, B: gen.Generator) -> str:
    """Tolerance class from the derivative order of the composed check.

    A bracket of two first-order generators is a second-derivative object
    numerically, so it belongs with the K-family tolerances.
    """
    total = _DERIVATIVE_ORDER[A.tag] + _DERIVATIVE_ORDER[B.tag]
    if total == 0:
        return "exact"
    if total == 1:
        return "first"
    return "second"


def algebra_table(n: int = 3) -> list:
    """All canonical generator pairs with expected brackets and residual class."""
    ops = _operator_list(n)
    table = []
    for i, A in enumerate(ops):
        for B in ops[i + 1:]:
            table.append({
                "A": A,
                "B": B,
                "expected": conformal_bracket(A, B),
                "class": _residual_class(A, B),
            })
    return table


def _table_residuals(grid: GridSpec, states: list, table: list) -> dict:
    """Worst-case relative residual per table entry over the given states."""
    out = {}
    for state in states:
        cache = {}
        ops = {}
        for entry in table:
            for g in (entry["A"], entry["B"]):
                if g.name not in cache:
                    ops[g.name] = g
                    cache[g.name] = gen.apply(g, state)
            for _, g in entry["expected"]:
                if g.name not in cache:
                    ops[g.name] = g
                    cache[g.name] = gen.apply(g, state)
        nrm = np.linalg.norm(np.asarray(state.samples))
        for entry in table:
            A, B = entry["A"], entry["B"]
            lhs = (gen.apply(A, cache[B.name]).samples
                   - gen.apply(B, cache[A.name]).samples)
            rhs = sum((c * np.asarray(cache[g.name].samples) for c, g in entry["expected"]),
                      start=np.zeros(grid.shape, dtype=complex))
            res = float(np.linalg.norm(np.asarray(lhs) - rhs) / nrm)
            key = f"[{A.name},{B.name}]"
            out[key] = max(out.get(key, 0.0), res)
    return out


def run_algebra_suite(config: dict) -> Report:
    """Residuals of every conformal bracket against the expected combination."""
    cfg = config
    grid = _grid_from(cfg["grid"])
    if grid.n != 3:
        raise DomainError("the conformal algebra suite requires n = 3 "
                          "(D and K are defined only there)")
    tols = cfg["tolerances"]
    states = standard_states(grid, cfg)
    for s in states:
        if abs(s.samples[grid.zero_index]) > 1e-12:
            raise DomainError("state carries amplitude on the zero mode; "
                              "inadmissible for 1/omega entries")
    table = algebra_table(grid.n)
    residuals = _table_residuals(grid, states, table)
    meta = _new_metadata(cfg, "algebra")
    meta["state_margins"] = [float(check_margins(s, threshold=np.inf)) for s in states]
    rows = []
    for entry in table:
        key = f"[{entry['A'].name},{entry['B'].name}]"
        tol = tols[entry["class"]]
        res = residuals[key]
        rows.append(Row(key, "algebra", res, tol, res < tol,
                        {"class": entry["class"],
                         "expected": [[c.real, c.imag, g.name] for c, g in entry["expected"]]}))
    if cfg.get("refinement_check"):
        rows.extend(_refinement_rows(cfg, grid, table, residuals))
    return Report(meta, rows)


def _refinement_rows(cfg: dict, grid: GridSpec, table: list, res_fine: dict) -> list:
    """Compare per-entry residuals against a half-resolution run.

    Each grid uses the standard recipe adapted to it, exactly as a user
    refining a real computation would; entries at the round-off floor on
    both grids count as passing.
    """
    coarse = GridSpec(grid.n, grid.points_per_axis // 2, grid.box_length)
    coarse_states = standard_states(coarse, cfg)
    res_coarse = _table_residuals(coarse, coarse_states, table)
    floor = 1e-12
    rows = []
    for entry in table:
        key = f"[{entry['A'].name},{entry['B'].name}]"
        fine, crs = res_fine[key], res_coarse[key]
        ok = fine < crs or (fine < floor and crs < floor)
        rows.append(Row(f"refine:{key}", "algebra", fine, crs, ok,
                        {"coarse": crs, "fine": fine,
                         "coarse_grid": coarse.points_per_axis}))
    return rows


# ---------------------------------------------------------------------------
# identity suite (product forms, conjugations, dressing)
# ---------------------------------------------------------------------------

def run_identity_suite(config: dict) -> Report:
    cfg = config
    grid = _grid_from(cfg["grid"])
    if grid.n != 3:
        raise DomainError("the identity suite requires n = 3")
    tols = cfg["tolerances"]
    states = standard_states(grid, cfg)
    rows = []

    idents = []
    for j in (1, 2, 3):
        idents.append((gen.identity("Mboost-product", j), "identity_first"))
    for idx in (1, 2, 3):
        idents.append((gen.identity("Mrot-product", idx), "identity_first"))
    idents.append((gen.identity("D-product"), "identity_first"))
    idents.append((gen.identity("K0-product"), "identity_second"))
    for j in (1, 2, 3):
        idents.append((gen.identity("Kj-product", j), "identity_second"))

    for ident, cls in idents:
        res = max(gen.identity_residual(ident, s) for s in states)
        extra = {}
        if ident.lhs.tag in ("K0", "K"):
            extra["alt_sign_residual"] = _alternate_sign_residual(ident, states)
        rows.append(Row(f"id:{ident.name}", "identities", res, tols[cls],
                        res < tols[cls], extra))

    # time-conjugation identities on a roomier grid (light-cone tails wrap
    # on the default box and would mask the identity's own accuracy)
    cgrid = _grid_from(cfg["conjugation_grid"])
    cstates = standard_states(cgrid, cfg)
    for x0 in (0.3, 0.7):
        res = max(_conjugation_residual(gen.D(), actions.time_conjugated_D(x0), x0, s)
                  for s in cstates)
        tol = tols["conjugation_first"]
        rows.append(Row(f"conjugation:D@x0={x0}", "identities", res, tol, res < tol))
        for mu in (0, 1):
            target = actions.time_conjugated_K(mu, x0)
            source = gen.K0() if mu == 0 else gen.K(mu)
            res = max(_conjugation_residual(source, target, x0, s) for s in cstates)
            tol = tols["conjugation_second"]
            rows.append(Row(f"conjugation:K{mu}@x0={x0}", "identities", res, tol, res < tol))

    # sqrt(2 omega) dressing maps the derivative pipeline to the massive-form
    # position operator with its p_j/(2 omega^2) term
    res = max(_dressing_residual(s, j) for s in states for j in (1, 2, 3))
    rows.append(Row("dressing:nwp-form", "identities", res, tols["identity_first"],
                    res < tols["identity_first"]))

    # self-adjointness of every generator on admissible states
    worst = 0.0
    for g in _operator_list(grid.n) + [gen.X(1), gen.V(2), gen.N()]:
        for s in states:
            worst = max(worst, gen.self_adjointness_defect(g, s))
    rows.append(Row("self-adjointness", "identities", worst, 1e-10, worst < 1e-10))

    return Report(_new_metadata(cfg, "identities"), rows)


def _alternate_sign_residual(ident: gen.GeneratorIdentity, states: list) -> float:
    """Residual under the opposite reading of the contracted X-pair sign.

    Reported as a diagnostic so the table records which index reading the
    data actually satisfies rather than silently hard-coding one.
    """
    if ident.lhs.tag == "K0":
        flipped = gen.identity("K0-product", alt_xx=True)
    else:
        flipped = gen.identity("Kj-product", ident.lhs.indices[0], alt_xx=True)
    return max(gen.identity_residual(flipped, s) for s in states)


def _conjugation_residual(source, target_op, x0: float, state: MomentumState) -> float:
    lhs = actions.conjugate_by_time_translation(source, x0, state)
    rhs = target_op.apply(state)
    return float(np.linalg.norm(np.asarray(lhs.samples) - np.asarray(rhs.samples))
                 / np.linalg.norm(np.asarray(state.samples)))


def _dressing_residual(state: MomentumState, j: int) -> float:
    from .lattice import convert_normalization

    grid = state.grid
    inner = convert_normalization(state, "to_covariant")
    mid = gen.apply(gen.X(j), inner)
    lhs = convert_normalization(mid, "to_noncovariant")
    w = grid.omega()
    winv2 = np.divide(1.0, w * w, out=np.zeros_like(w), where=w > 0)
    pj = grid.momentum_axes()[j - 1]
    rhs = np.asarray(gen.apply(gen.X(j), state).samples) \
        + 0.5j * pj * winv2 * np.asarray(state.samples)
    return float(np.linalg.norm(np.asarray(lhs.samples) - rhs)
                 / np.linalg.norm(np.asarray(state.samples)))


# ---------------------------------------------------------------------------
# kernel suite
# ---------------------------------------------------------------------------

def run_kernel_suite(config: dict) -> Report:
    cfg = config
    tols = cfg["tolerances"]
    rows = []

    ladder = [0.2, 0.1, 0.05, 0.025, 0.0125]
    for lam, r in ((-1.0, 2.0), (-0.5, 1.0), (0.5, 1.0)):
        target = kernels.gs_coefficient(lam, 3) * r ** (-2 * lam - 3)
        values = [kernels.radial_quadrature_oracle(lam, e, r) for e in ladder]
        extrap = kernels.richardson(ladder, values)
        res = abs(extrap - target) / abs(target)
        tol = tols["kernel_coefficient"]
        rows.append(Row(f"gs:lambda={lam}", "kernels", float(res), tol, res < tol,
                        {"target": target, "extrapolated": float(np.real(extrap)),
                         "ladder": ladder}))

    # closed-form identity: the lambda = 1/2 coefficient is exactly -1/pi^2
    res = abs(kernels.gs_coefficient(0.5, 3) + 1.0 / math.pi ** 2)
    rows.append(Row("gs:omega-coefficient", "kernels", float(res), 1e-13, res < 1e-13))
    res = abs(kernels.omega_kernel(np.array([1.0, 0.0, 0.0])) + 1.0 / math.pi ** 2)
    rows.append(Row("omega-kernel:r=1", "kernels", float(res), 1e-13, res < 1e-13))

    # regularized time kernel against its distributional limit, off the cone
    worst = 0.0
    eps_ladder = [0.08, 0.04, 0.02, 0.01, 0.005]
    for r, y0 in ((2.0, 1.0), (1.5, 0.5), (0.7, 1.3)):
        vals = [kernels.time_kernel(np.array([r, 0.0, 0.0]), y0, e) for e in eps_ladder]
        extrap = kernels.richardson(eps_ladder, vals)
        target = 1j * y0 / (math.pi ** 2 * (r * r - y0 * y0) ** 2)
        worst = max(worst, abs(extrap - target) / abs(target))
    tol = tols["kernel_pointwise"]
    rows.append(Row("time-kernel:richardson", "kernels", float(worst), tol, worst < tol))

    for f_value in (1.0, 2.0):
        rep = kernels.bessel_limit_check(f_value, [1e-1, 1e-2, 1e-3, 1e-4])
        ok = rep.monotone and rep.final_error < tols["bessel"]
        rows.append(Row(f"bessel:f={f_value}", "kernels", rep.final_error,
                        tols["bessel"], ok, {"errors": list(rep.errors),
                                             "monotone": rep.monotone}))

    rows.extend(_sampled_kernel_rows(cfg))
    return Report(_new_metadata(cfg, "kernels"), rows)


def _sampled_kernel_rows(cfg: dict) -> list:
    """Sampled-closed-form convolutions against the momentum pipelines.

    The |x|^(-4) kernels are only distributionally defined; their punctured
    lattice sums carry an O(1/dx) constant absorbed by the puncture plus a
    slowly varying remainder, so agreement is first-order in dx.  The rows
    gate on the measured level and on refinement improving it.
    """
    grid = _grid_from(cfg["grid"])
    coarse = GridSpec(grid.n, grid.points_per_axis // 2, grid.box_length)
    rows = []
    for name, make_kernel in (("omega-tilde", kernels.omega_tilde_kernel),
                              ("velocity-tilde", lambda n: kernels.velocity_tilde_kernel(0, n))):
        # the same physical ring, admissible on the coarse grid, sampled on both
        r0, width, kwargs = _ring_params(cfg["recipe"], coarse)[0]
        kwargs["direction"] = None
        errs = {}
        for g in (coarse, grid):
            kernel = make_kernel(g.n)
            state = make_gaussian_ring(g, r0, width, margin_threshold=None, **kwargs)
            f = to_coordinate(state)
            conv = np.asarray(kernels.convolve_coordinate(kernel, f, route="sampled").samples)
            if name == "velocity-tilde":
                conv = -1j * conv  # V_j = -i (omega_tilde_j * .)
                target_sym = -np.asarray(g.momentum_axes()[0]) * np.divide(
                    1.0, g.omega(), out=np.zeros(g.shape), where=g.omega() > 0)
            else:
                target_sym = g.omega()
            target = np.asarray(to_coordinate(
                state.with_samples(np.asarray(state.samples) * target_sym)).samples)
            errs[g.points_per_axis] = float(
                np.linalg.norm(conv - target) / np.linalg.norm(target))
        fine = errs[grid.points_per_axis]
        crs = errs[coarse.points_per_axis]
        order = math.log(crs / fine, 2.0) if fine > 0 else float("inf")
        tol = cfg.get("sampled_kernel_tolerance", 0.7)
        ok = fine < tol and fine < crs
        rows.append(Row(f"conv:{name}", "kernels", fine, tol, ok,
                        {"coarse": crs, "fine": fine, "order": order}))
    return rows


# ---------------------------------------------------------------------------
# covariance suite
# ---------------------------------------------------------------------------

def run_covariance_suite(config: dict) -> Report:
    cfg = config
    grid = _grid_from(cfg["grid"])
    if grid.n != 3:
        raise DomainError("the covariance suite requires n = 3")
    tols = cfg["tolerances"]
    states = standard_states(grid, cfg)
    state = states[0]
    rows = []

    rows.extend(_l63_rows(cfg, grid, states[0]))

    # Theorem t2: exact covariance under lattice translations and quarter turns
    y = np.zeros(4)
    y[0] = 0.4
    y[1:] = grid.dx * np.array([2, -3, 1])
    element = actions.PoincareElement(y, np.eye(3))
    point = loc.SpacetimePoint(0.3, grid.dx * np.array([4.0, 1.0, -2.0]))
    res = loc.covariance_check(state, element, 0.0, point)
    rows.append(Row("t2:translation", "covariance", res, tols["covariance_exact"],
                    res < tols["covariance_exact"]))

    element = actions.PoincareElement(np.zeros(4), actions.named_rotation("quarter-z"))
    res = loc.covariance_check(state, element, 0.0, point)
    rows.append(Row("t2:quarter-turn", "covariance", res, tols["covariance_exact"],
                    res < tols["covariance_exact"]))

    # Theorem t3: dilatation covariance with the exp(3 alpha / 2) factor
    alpha = 0.2
    res = loc.covariance_check(state, actions.PoincareElement.identity(), alpha, point)
    rows.append(Row("t3:dilatation", "covariance", res, tols["covariance_dilate"],
                    res < tols["covariance_dilate"],
                    {"alpha": alpha, "factor": math.exp(1.5 * alpha)}))

    # combined law: quarter turn + lattice translation + dilatation
    element = actions.PoincareElement(y, actions.named_rotation("quarter-z"))
    res = loc.covariance_check(state, element, alpha, point)
    rows.append(Row("covariance:combined", "covariance", res, tols["covariance_combined"],
                    res < tols["covariance_combined"]))

    rows.extend(_unitarity_rows(cfg, grid, state))
    rows.extend(_density_rows(cfg, grid, state))
    rows.extend(_semigroup_rows(cfg, grid, states[1]))

    # qualitative superluminal-spread observation, reported not asserted
    wide = _localized_state(grid)
    frac = loc.outside_cone_fraction(wide, 0.25 * grid.box_length / 10.0)
    rows.append(Row("superluminal:outside-cone-fraction", "covariance", frac,
                    float("inf"), True, {"asserted": False}))

    return Report(_new_metadata(cfg, "covariance"), rows)


def _localized_state(grid: GridSpec) -> MomentumState:
    # broad momentum envelope -> tightly localized coordinate profile
    w = grid.omega()
    width = 0.35 * grid.momentum_extent
    samples = np.exp(-(w ** 2) / (2 * width ** 2)).astype(complex)
    nrm = math.sqrt(float(np.sum(np.abs(samples) ** 2)) * grid.dp ** grid.n)
    return MomentumState(grid, samples / nrm)


def _l63_rows(cfg: dict, grid: GridSpec, state: MomentumState) -> list:
    """Time-translation kernel equivalence ladder.

    Production route: convolution by the kernel's analytic symbol
    exp(-(eps + i y0) omega) compared against the exact undamped momentum
    phase.  The deviation is exactly the exp(-eps omega) damping, monotone
    along the ladder; the stated final threshold is gated only at the
    configuration it was stated for (see the decisions ledger).  The sampled
    closed-form route is reported alongside as a diagnostic.
    """
    y0 = cfg["l63"]["y0"]
    ladder = list(cfg["l63"]["ladder"])
    f = to_coordinate(state)
    target = to_coordinate(actions.evolve_time(state, y0))
    tnorm = np.linalg.norm(np.asarray(target.samples))
    errs, errs_sampled = [], []
    for eps in ladder:
        kernel = kernels.time_translation_kernel(y0, eps)
        conv = kernels.convolve_coordinate(kernel, f, route="symbol")
        errs.append(float(np.linalg.norm(np.asarray(conv.samples)
                                         - np.asarray(target.samples)) / tnorm))
        conv_s = kernels.convolve_coordinate(kernel, f, route="sampled")
        errs_sampled.append(float(np.linalg.norm(np.asarray(conv_s.samples)
                                                 - np.asarray(target.samples)) / tnorm))
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    final_tol = cfg["tolerances"]["l63_final"]
    reference_cfg = (grid.points_per_axis == 64 and grid.box_length == 20.0)
    passed = monotone and (errs[-1] < final_tol if reference_cfg else True)
    return [Row("l63:kernel-equivalence", "covariance", errs[-1], final_tol, passed,
                {"ladder": ladder, "errors": errs, "sampled_errors": errs_sampled,
                 "monotone": monotone, "gated_on_final": reference_cfg, "y0": y0})]


def _unitarity_rows(cfg: dict, grid: GridSpec, state: MomentumState) -> list:
    tols = cfg["tolerances"]
    rows = []
    y = np.zeros(grid.n + 1)
    y[0] = 0.7
    y[1] = 0.31 * grid.dx
    drift = abs(actions.translate(state, y).norm() - state.norm())
    rows.append(Row("unitarity:translate", "covariance", drift,
                    tols["unitary_exact"], drift < tols["unitary_exact"]))
    if grid.n == 3:
        drift = abs(actions.dilate(state, 0.2, scheme=cfg["interpolation"]).norm()
                    - state.norm())
        rows.append(Row("unitarity:dilate", "covariance", drift,
                        tols["unitary_interp"], drift < tols["unitary_interp"]))
        R = actions.named_rotation(("z", 30.0))
        drift = abs(actions.rotate_state(state, R).norm() - state.norm())
        rows.append(Row("unitarity:rotate", "covariance", drift,
                        tols["unitary_interp"], drift < tols["unitary_interp"]))
    return rows


def _density_rows(cfg: dict, grid: GridSpec, state: MomentumState) -> list:
    tol = cfg["tolerances"]["density"]
    worst = max(abs(loc.density_total(state, t) - 1.0) for t in (0.0, 0.4, 1.1))
    return [Row("density:conservation", "covariance", worst, tol, worst < tol,
                {"times": [0.0, 0.4, 1.1]})]


def _semigroup_rows(cfg: dict, grid: GridSpec, state: MomentumState) -> list:
    """Finite actions against their generators: first-order difference quotients."""
    rows = []
    nrm = np.linalg.norm(np.asarray(state.samples))

    def fd_error(action, generator_apply, delta):
        moved = action(delta)
        quot = (np.asarray(moved.samples) - np.asarray(state.samples)) / delta
        return float(np.linalg.norm(quot - generator_apply) / nrm)

    checks = []
    zero = np.zeros(grid.n)
    iP0 = 1j * np.asarray(gen.apply(gen.P0(), state).samples)
    checks.append(("translate", lambda d: actions.translate(
        state, np.concatenate(([d], zero))), iP0))
    if grid.n == 3:
        iD = 1j * np.asarray(gen.apply(gen.D(), state).samples)
        checks.append(("dilate", lambda d: actions.dilate(state, d), iD))
        mrot = -1j * np.asarray(gen.apply(gen.Mrot(1, 2), state).samples)
        checks.append(("rotate", lambda d: actions.rotate_state(
            state, actions.named_rotation(("z", math.degrees(d)))), mrot))
    for name, action, target in checks:
        e1 = fd_error(action, target, 1e-3)
        e2 = fd_error(action, target, 5e-4)
        rate = e1 / e2 if e2 > 0 else float("inf")
        ok = e1 < 0.05 and 1.4 < rate < 2.8
        rows.append(Row(f"semigroup:{name}", "covariance", e1, 0.05, ok,
                        {"rate": rate, "deltas": [1e-3, 5e-4],
                         "generator_sign": -1 if name == "rotate" else 1}))
    return rows


def run_all(config: dict) -> Report:
    reports = [
        run_kernel_suite(config),
        run_identity_suite(config),
        run_algebra_suite(config),
        run_covariance_suite(config),
    ]
    meta = _new_metadata(config, "all")
    return Report.merge(reports, meta)
