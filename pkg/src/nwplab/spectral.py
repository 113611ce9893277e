"""Base change between the two representations and the operator pipeline engine.

The transform pair realized here is

    f(x) = (2 pi)^(-n/2) sum_p  exp(+i p.x) phi(p) dp^n
    phi(p) = (2 pi)^(-n/2) sum_x exp(-i p.x) f(x) dx^n

on grids centered at zero, which is exactly unitary (Parseval to round-off)
thanks to the lattice duality dx dp L = 2 pi.  Every generator of the theory
is expressed as a composition of diagonal multiplications in one space or the
other; the :class:`Pipeline` machinery inserts base changes lazily so that
adjacent same-space multiplications never pay for a transform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

from .lattice import (CoordinateState, DomainError, GridSpec, MomentumState,
                      _cached, _State)

__all__ = [
    "to_coordinate",
    "to_momentum",
    "Symbol",
    "MultiplyMomentum",
    "MultiplyCoordinate",
    "Scale",
    "Pipeline",
    "OperatorSum",
    "apply_pipeline",
    "rescale",
    "rotate",
    "is_signed_permutation",
    "SymbolEvaluationError",
]


class SymbolEvaluationError(ValueError):
    """A pipeline symbol produced a non-finite value off the zero mode."""


# ---------------------------------------------------------------------------
# centered transforms
# ---------------------------------------------------------------------------

def _alternating(L: int) -> np.ndarray:
    return (-1.0) ** np.arange(L)


def _apply_alternating(arr: np.ndarray, axes=None) -> np.ndarray:
    sgn = _alternating(arr.shape[0])
    axes = range(arr.ndim) if axes is None else axes
    for ax in axes:
        shape = [1] * arr.ndim
        shape[ax] = arr.shape[ax]
        arr = arr * sgn.reshape(shape)
    return arr


def to_coordinate(state: MomentumState) -> CoordinateState:
    """Base change momentum -> coordinate (NWP) representation."""
    g = state.grid
    L, n = g.points_per_axis, g.n
    arr = _apply_alternating(np.asarray(state.samples))
    arr = _fft.ifftn(arr)
    arr = _apply_alternating(arr)
    factor = (2 * math.pi) ** (-n / 2) * g.dp ** n * L ** n * (1j ** (L % 4)) ** n
    return CoordinateState(g, arr * factor)


def to_momentum(state: CoordinateState) -> MomentumState:
    """Base change coordinate -> momentum representation (exact inverse)."""
    g = state.grid
    L, n = g.points_per_axis, g.n
    arr = _apply_alternating(np.asarray(state.samples))
    arr = _fft.fftn(arr)
    arr = _apply_alternating(arr)
    factor = (2 * math.pi) ** (-n / 2) * g.dx ** n * ((-1j) ** (L % 4)) ** n
    return MomentumState(g, arr * factor)


def _axis_dual(arr: np.ndarray, axis: int, L: int, forward: bool) -> np.ndarray:
    """Centered plane-wave analysis/synthesis along one axis (inverse pair)."""
    arr = _apply_alternating(arr, axes=(axis,))
    if forward:
        arr = _fft.fft(arr, axis=axis) * ((-1j) ** (L % 4) / L)
    else:
        arr = _fft.ifft(arr, axis=axis) * ((1j) ** (L % 4) * L)
    return _apply_alternating(arr, axes=(axis,))


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

def _momentum_component(grid: GridSpec, axis: int) -> np.ndarray:
    return grid.momentum_axes()[axis]


def _coordinate_component(grid: GridSpec, axis: int) -> np.ndarray:
    return grid.coordinate_axes()[axis]


def _omega_inv(grid: GridSpec, power: int) -> np.ndarray:
    w = grid.omega()
    out = np.divide(1.0, w ** power, out=np.zeros(grid.shape), where=w > 0)
    return out


_BUILDERS = {
    "one": lambda grid: np.ones(grid.shape),
    "omega": lambda grid: grid.omega(),
    "omega_inv": lambda grid: _omega_inv(grid, 1),
    "omega_inv_sq": lambda grid: _omega_inv(grid, 2),
    "momentum": lambda grid, axis: _momentum_component(grid, axis) * np.ones(grid.shape),
    "momentum_over_omega": lambda grid, axis:
        _momentum_component(grid, axis) * _omega_inv(grid, 1),
    "momentum_over_omega_sq": lambda grid, axis:
        _momentum_component(grid, axis) * _omega_inv(grid, 2),
    "coordinate": lambda grid, axis: _coordinate_component(grid, axis) * np.ones(grid.shape),
    "radius_sq": lambda grid: sum(a * a for a in grid.coordinate_axes())
        * np.ones(grid.shape),
}

_PUNCTURED = {"omega_inv", "omega_inv_sq", "momentum_over_omega", "momentum_over_omega_sq"}


@dataclass(frozen=True)
class Symbol:
    """Named, grid-evaluable multiplication symbol.

    Named symbols come from the registry and serialize to JSON; a raw
    callable ``fn(grid) -> array`` may be wrapped for ad-hoc use but cannot
    be serialized.
    """

    name: str
    params: tuple = ()
    conjugated: bool = False
    fn: object = None

    @staticmethod
    def named(name: str, **params) -> "Symbol":
        if name not in _BUILDERS:
            raise KeyError(f"unknown symbol {name!r}")
        return Symbol(name, tuple(sorted(params.items())))

    @staticmethod
    def from_callable(fn, label: str = "custom") -> "Symbol":
        return Symbol(label, (), False, fn)

    def conj(self) -> "Symbol":
        return Symbol(self.name, self.params, not self.conjugated, self.fn)

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        if self.fn is not None:
            arr = np.asarray(self.fn(grid))
        else:
            key = ("symbol", self.name, self.params)
            arr = _cached(grid, key, lambda: _BUILDERS[self.name](grid, **dict(self.params)))
        _check_finite(arr, grid, self.name)
        return np.conj(arr) if self.conjugated else arr

    def describe(self) -> dict:
        if self.fn is not None:
            raise ValueError(f"symbol {self.name!r} wraps a raw callable and has no "
                             "serializable description")
        out = {"symbol": self.name}
        out.update(dict(self.params))
        if self.conjugated:
            out["conjugated"] = True
        return out


def _check_finite(arr: np.ndarray, grid: GridSpec, name: str) -> None:
    bad = ~np.isfinite(arr)
    if not bad.any():
        return
    bad = bad.copy()
    bad[grid.zero_index] = False  # zero-mode policy owns that cell
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SymbolEvaluationError(f"symbol {name!r} is non-finite at index {idx}")


# ---------------------------------------------------------------------------
# pipeline steps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplyMomentum:
    symbol: Symbol
    space = "momentum"


@dataclass(frozen=True)
class MultiplyCoordinate:
    symbol: Symbol
    space = "coordinate"


@dataclass(frozen=True)
class Scale:
    factor: complex
    space = None


def mul_p(name: str, **params) -> MultiplyMomentum:
    return MultiplyMomentum(Symbol.named(name, **params))


def mul_x(name: str, **params) -> MultiplyCoordinate:
    return MultiplyCoordinate(Symbol.named(name, **params))


@dataclass(frozen=True)
class Pipeline:
    """Ordered product of multiplication steps; base changes are implicit.

    Steps apply left to right.  Application is linear in the state and the
    number of base changes is the minimum compatible with the step order.
    """

    steps: tuple = ()

    def then(self, step) -> "Pipeline":
        return Pipeline(self.steps + (step,))

    def compose_after(self, other: "Pipeline") -> "Pipeline":
        """Operator product self o other: apply ``other`` first."""
        return Pipeline(other.steps + self.steps)

    def adjoint(self) -> "Pipeline":
        out = []
        for step in reversed(self.steps):
            if isinstance(step, Scale):
                out.append(Scale(np.conj(step.factor)))
            elif isinstance(step, MultiplyMomentum):
                out.append(MultiplyMomentum(step.symbol.conj()))
            else:
                out.append(MultiplyCoordinate(step.symbol.conj()))
        return Pipeline(tuple(out))

    def apply(self, state: _State) -> _State:
        arr = np.asarray(state.samples)
        grid = state.grid
        space = state.space
        scale = 1.0 + 0.0j
        for step in self.steps:
            if isinstance(step, Scale):
                scale *= step.factor
                continue
            if step.space != space:
                arr = _raw_change(arr, grid, to=step.space)
                space = step.space
            arr = arr * step.symbol.evaluate(grid)
        if space != state.space:
            arr = _raw_change(arr, grid, to=state.space)
        if scale != 1.0:
            arr = arr * scale
        return state.with_samples(arr)

    def describe(self) -> list:
        out = []
        for step in self.steps:
            if isinstance(step, Scale):
                out.append({"scale": [step.factor.real, step.factor.imag]})
            elif isinstance(step, MultiplyMomentum):
                out.append({"multiply_momentum": step.symbol.describe()})
            else:
                out.append({"multiply_coordinate": step.symbol.describe()})
        return out


def _raw_change(arr: np.ndarray, grid: GridSpec, to: str) -> np.ndarray:
    if to == "coordinate":
        return np.asarray(to_coordinate(MomentumState(grid, arr)).samples)
    return np.asarray(to_momentum(CoordinateState(grid, arr)).samples)


def apply_pipeline(pipeline, state: _State) -> _State:
    """Apply a Pipeline or OperatorSum to a state."""
    return pipeline.apply(state)


@dataclass(frozen=True)
class OperatorSum:
    """Complex-weighted sum of pipelines: the general linear operator here.

    Products of generators distribute over the terms, so compositions stay
    in this class.
    """

    terms: tuple = ()   # ((weight, Pipeline), ...)

    @staticmethod
    def of(*terms) -> "OperatorSum":
        return OperatorSum(tuple((complex(w), p) for w, p in terms))

    @staticmethod
    def chain(weight, *steps) -> "OperatorSum":
        return OperatorSum(((complex(weight), Pipeline(tuple(steps))),))

    @staticmethod
    def identity() -> "OperatorSum":
        return OperatorSum.chain(1.0)

    def apply(self, state: _State) -> _State:
        acc = None
        for weight, pipe in self.terms:
            piece = pipe.apply(state)
            arr = np.asarray(piece.samples) * weight
            acc = arr if acc is None else acc + arr
        if acc is None:
            acc = np.zeros(state.grid.shape, dtype=complex)
        return state.with_samples(acc)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        return OperatorSum(self.terms + other.terms)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "OperatorSum":
        return OperatorSum(tuple((w * complex(scalar), p) for w, p in self.terms))

    __rmul__ = __mul__

    def compose_after(self, other: "OperatorSum") -> "OperatorSum":
        """Operator product self o other (apply ``other`` first)."""
        terms = []
        for wa, pa in self.terms:
            for wb, pb in other.terms:
                terms.append((wa * wb, pa.compose_after(pb)))
        return OperatorSum(tuple(terms))

    def adjoint(self) -> "OperatorSum":
        return OperatorSum(tuple((np.conj(w), p.adjoint()) for w, p in self.terms))

    def describe(self) -> dict:
        return {"terms": [{"weight": [w.real, w.imag], "pipeline": p.describe()}
                          for w, p in self.terms]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.describe(), sort_keys=True, **kwargs)


# ---------------------------------------------------------------------------
# finite rescaling (dilatations) and rotations
# ---------------------------------------------------------------------------

def _zoom_matrix(grid: GridSpec, alpha: float) -> np.ndarray:
    """Band-limited evaluation of the trig interpolant at scaled sample points."""
    L = grid.points_per_axis
    x = grid.coordinate_values()
    p = grid.momentum_values()
    analysis = np.exp(-1j * np.outer(x, p))
    synthesis = np.exp(1j * np.outer(math.exp(alpha) * p, x))
    return (synthesis @ analysis) / L


def _linear_resample_1d(samples: np.ndarray, grid: GridSpec, alpha: float,
                        axis: int) -> np.ndarray:
    L = grid.points_per_axis
    pos = math.exp(alpha) * (np.arange(L) - L // 2) + L // 2
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    lo = np.clip(lo, -1, L - 1)
    hi = lo + 1
    take = lambda idx: np.take(samples, np.clip(idx, 0, L - 1), axis=axis)
    vlo = np.where(((lo >= 0) & (lo < L)).reshape([-1 if a == axis else 1 for a in range(samples.ndim)]),
                   take(lo), 0.0)
    vhi = np.where(((hi >= 0) & (hi < L)).reshape([-1 if a == axis else 1 for a in range(samples.ndim)]),
                   take(hi), 0.0)
    shape = [1] * samples.ndim
    shape[axis] = L
    return vlo * (1 - frac.reshape(shape)) + vhi * frac.reshape(shape)


def rescale(state: _State, alpha: float, scheme: str = "spectral") -> _State:
    """Unitary rescaling: momentum action phi(p) -> e^(n a / 2) phi(e^a p).

    On coordinate states the same unitary acts as f(x) -> e^(-n a / 2)
    f(e^-a x).  The default scheme evaluates the band-limited (trigonometric)
    interpolant at the scaled points; "linear" is a cheaper per-axis linear
    interpolation, flagged in reports by the caller.
    """
    g = state.grid
    n = g.n
    if state.space == "momentum":
        eff_alpha, prefactor = alpha, math.exp(n * alpha / 2.0)
        extent = g.momentum_extent
    else:
        eff_alpha, prefactor = -alpha, math.exp(-n * alpha / 2.0)
        extent = g.box_length / 2.0
    _check_rescale_support(state, eff_alpha, extent)
    arr = np.asarray(state.samples)
    if scheme == "spectral":
        T = _cached(g, ("zoom", round(eff_alpha, 15)), lambda: _zoom_matrix(g, eff_alpha))
        for axis in range(n):
            arr = np.moveaxis(np.tensordot(T, arr, axes=(1, axis)), 0, axis)
    elif scheme == "linear":
        for axis in range(n):
            arr = _linear_resample_1d(arr, g, eff_alpha, axis)
    else:
        raise ValueError(f"unknown interpolation scheme {scheme!r}")
    return state.with_samples(prefactor * arr)


def _check_rescale_support(state: _State, alpha: float, extent: float) -> None:
    g = state.grid
    spacing = g.dp if state.space == "momentum" else g.dx
    safe = (extent - 4.0 * spacing) * math.exp(-abs(alpha))
    axes = g.momentum_axes() if state.space == "momentum" else g.coordinate_axes()
    radius2 = sum(a * a for a in axes)
    outside = radius2 > safe * safe
    peak = np.max(np.abs(state.samples))
    level = float(np.max(np.abs(np.asarray(state.samples)[outside])) / peak) if outside.any() else 0.0
    # escape threshold at the interpolation-tolerance scale of the finite actions
    if level > 1e-4:
        raise DomainError(
            f"rescale by alpha={alpha:+.3f} would move support past the 4-cell margin "
            f"(amplitude {level:.2e} beyond radius {safe:.3f})")


def is_signed_permutation(R: np.ndarray, tol: float = 1e-12) -> bool:
    R = np.asarray(R, dtype=float)
    near_int = np.all(np.abs(R - np.round(R)) < tol)
    return near_int and np.all(np.isin(np.round(R), (-1, 0, 1))) \
        and np.allclose(np.abs(np.round(R)).sum(axis=0), 1) \
        and np.allclose(np.abs(np.round(R)).sum(axis=1), 1)


def _check_rotation(R: np.ndarray, n: int) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (n, n):
        raise ValueError(f"rotation matrix must be {n}x{n}")
    if not np.allclose(R.T @ R, np.eye(n), atol=1e-12):
        raise ValueError("matrix is not orthogonal")
    if not math.isclose(float(np.linalg.det(R)), 1.0, abs_tol=1e-12):
        raise ValueError("matrix is not a proper rotation (det != 1)")
    return R


def _axis_negate(arr: np.ndarray, axis: int) -> np.ndarray:
    """Index map i -> (-i) mod L, the exact lattice realization of v -> -v."""
    L = arr.shape[axis]
    idx = (-np.arange(L)) % L
    return np.take(arr, idx, axis=axis)


def _apply_signed_permutation(arr: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Exact reindexing realizing out(v) = in(R^-1 v) for signed permutations."""
    Ri = np.round(R).astype(int)
    n = arr.ndim
    # (R^-1 v)_j = sum_a R[a, j] v_a: input axis j reads output axis a_j with sign s_j
    src = [int(np.nonzero(Ri[:, j])[0][0]) for j in range(n)]
    sgn = [int(Ri[src[j], j]) for j in range(n)]
    # out[I] = in[J] with J_j read (possibly negated) from output axis src[j];
    # np.transpose feeds input axis axes[k] from output axis k, so axes = src^-1
    axes = [0] * n
    for j in range(n):
        axes[src[j]] = j
    out = np.transpose(arr, axes=axes)
    for j in range(n):
        if sgn[j] == -1:
            out = _axis_negate(out, src[j])
    return out


def _shear(arr: np.ndarray, grid: GridSpec, shear_axis: int, coord_axis: int,
           amount: float, spacing: float) -> np.ndarray:
    """Band-limited periodic resampling along shear_axis at v - amount * v_coord."""
    L = grid.points_per_axis
    dual = 2.0 * math.pi / (L * spacing)
    kvals = (np.arange(L) - L // 2) * dual
    cvals = (np.arange(L) - L // 2) * spacing
    a = _axis_dual(arr, shear_axis, L, forward=True)
    shape_k = [1] * grid.n
    shape_k[shear_axis] = L
    shape_c = [1] * grid.n
    shape_c[coord_axis] = L
    a = a * np.exp(-1j * kvals.reshape(shape_k) * (amount * cvals.reshape(shape_c)))
    return _axis_dual(a, shear_axis, L, forward=False)


def _rotate_plane(arr: np.ndarray, grid: GridSpec, ax1: int, ax2: int,
                  theta: float, spacing: float) -> np.ndarray:
    """In-plane rotation by theta via quarter turns plus a three-shear pass."""
    quarter = np.pi / 2.0
    k = int(np.round(theta / quarter))
    theta = theta - k * quarter
    for _ in range(k % 4):
        # exact +90 degree turn in the (ax1, ax2) plane: out(v) = in(v2, -v1)
        arr = _axis_negate(np.swapaxes(arr, ax1, ax2), ax1)
    if abs(theta) > 1e-15:
        lam = -math.tan(theta / 2.0)
        mu = math.sin(theta)
        arr = _shear(arr, grid, ax1, ax2, lam, spacing)
        arr = _shear(arr, grid, ax2, ax1, mu, spacing)
        arr = _shear(arr, grid, ax1, ax2, lam, spacing)
    return arr


def _euler_zyz(R: np.ndarray) -> tuple:
    """ZYZ Euler angles with R = Rz(a) @ Ry(b) @ Rz(c)."""
    beta = math.acos(min(1.0, max(-1.0, R[2, 2])))
    if abs(R[2, 2]) > 1.0 - 1e-12:
        if R[2, 2] < 0:
            return math.atan2(-R[1, 0], -R[0, 0]), math.pi, 0.0
        return math.atan2(R[1, 0], R[0, 0]), 0.0, 0.0
    alpha = math.atan2(R[1, 2], R[0, 2])
    gamma = math.atan2(R[2, 1], -R[2, 0])
    return alpha, beta, gamma


def rotate(state: _State, R: np.ndarray) -> _State:
    """Rotate the state: out(v) = in(R^-1 v), exact for signed permutations.

    Generic rotations use band-limited shear resampling, composed from the
    ZYZ in-plane factors; accuracy for margin-respecting states is at the
    aliasing level.
    """
    g = state.grid
    R = _check_rotation(R, g.n)
    arr = np.asarray(state.samples)
    if is_signed_permutation(R):
        return state.with_samples(_apply_signed_permutation(arr, R))
    if g.n == 1:
        raise ValueError("no non-trivial rotations in one dimension")
    spacing = g.dp if state.space == "momentum" else g.dx
    if g.n == 2:
        theta = math.atan2(R[1, 0], R[0, 0])
        return state.with_samples(_rotate_plane(arr, g, 0, 1, theta, spacing))
    alpha, beta, gamma = _euler_zyz(R)
    # state rotation is a homomorphism: rot(Rz(a) Ry(b) Rz(c)) applies Rz(c) first
    arr = _rotate_plane(arr, g, 0, 1, gamma, spacing)
    arr = _rotate_plane(arr, g, 2, 0, beta, spacing)
    arr = _rotate_plane(arr, g, 0, 1, alpha, spacing)
    return state.with_samples(arr)
