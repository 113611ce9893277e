"""Finite conformal transformations on states and time-conjugated generators.

States transform in the wavefunction picture.  A spacetime translation by the
four-vector y multiplies the momentum wavefunction by the exact phase
exp(+i (omega y0 - p.y)), which is the action of the unitary exp(i y.P); its
coordinate partner is the lattice shift f(x) -> f(x - y) and probability
amplitudes obey A(x) -> A(x - y).  Dilatations act as
phi(p) -> exp(3 a / 2) phi(exp(a) p) (n = 3), realized by band-limited
resampling, and rotations delegate to the spectral engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import generators as gen
from .lattice import MomentumState
from .spectral import OperatorSum, rescale, rotate

__all__ = [
    "PoincareElement",
    "translate",
    "evolve_time",
    "dilate",
    "rotate_state",
    "time_conjugated_D",
    "time_conjugated_K",
    "conjugate_by_time_translation",
    "combined_action",
    "named_rotation",
]


@dataclass(frozen=True)
class PoincareElement:
    """Spacetime translation four-vector y and pure-rotation block R."""

    y: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.shape != (4,):
            raise ValueError("y must be a 4-vector (y0, y1, y2, y3)")
        R = np.asarray(self.R, dtype=float)
        if R.shape != (3, 3) or not np.allclose(R.T @ R, np.eye(3), atol=1e-12) \
                or not math.isclose(float(np.linalg.det(R)), 1.0, abs_tol=1e-10):
            raise ValueError("R must be a proper rotation matrix")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "R", R)

    @staticmethod
    def identity() -> "PoincareElement":
        return PoincareElement(np.zeros(4), np.eye(3))


_NAMED_ROTATIONS = {
    "identity": np.eye(3),
    "quarter-z": np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    "quarter-x": np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
    "quarter-y": np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]),
}


def named_rotation(spec) -> np.ndarray:
    """Resolve a rotation given as a name, an (axis, degrees) pair, or a matrix."""
    if isinstance(spec, str):
        if spec in _NAMED_ROTATIONS:
            return _NAMED_ROTATIONS[spec].copy()
        raise ValueError(f"unknown rotation name {spec!r}")
    if isinstance(spec, (tuple, list)) and len(spec) == 2 and isinstance(spec[0], str):
        axis, degrees = spec
        theta = math.radians(float(degrees))
        c, s = math.cos(theta), math.sin(theta)
        planes = {"z": (0, 1), "x": (1, 2), "y": (2, 0)}
        a, b = planes[axis]
        R = np.eye(3)
        R[a, a] = R[b, b] = c
        R[b, a] = s
        R[a, b] = -s
        return R
    return np.asarray(spec, dtype=float)


def translate(state: MomentumState, y) -> MomentumState:
    """Translate by the four-vector y: phi -> exp(+i (omega y0 - p.y)) phi.

    Exact (pure phase); the coordinate partner shifts by +y and amplitudes
    satisfy A(translated, x) = A(original, x - y).
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (state.grid.n + 1,):
        raise ValueError(f"y must have {state.grid.n + 1} components")
    w = state.grid.omega()
    pax = state.grid.momentum_axes()
    phase = w * y[0] - sum(pax[j] * y[1 + j] for j in range(state.grid.n))
    return state.with_samples(np.asarray(state.samples) * np.exp(1j * phase))


def evolve_time(state: MomentumState, t: float) -> MomentumState:
    """Forward time evolution of the wavefunction: phi -> exp(-i omega t) phi.

    This is the momentum phase whose coordinate-space realization is the
    regularized time-translation kernel; equals translate(state, (-t, 0)).
    """
    w = state.grid.omega()
    return state.with_samples(np.asarray(state.samples) * np.exp(-1j * w * t))


def dilate(state: MomentumState, alpha: float, scheme: str = "spectral") -> MomentumState:
    """Finite dilatation exp(i alpha D): phi(p) -> e^(3 alpha/2) phi(e^alpha p)."""
    if state.grid.n != 3:
        raise gen.UnsupportedDimensionError("dilatations are realized for n = 3")
    return rescale(state, alpha, scheme=scheme)


def rotate_state(state: MomentumState, R) -> MomentumState:
    """Pure rotation: phi(p) -> phi(R^-1 p)."""
    return rotate(state, named_rotation(R))


def time_conjugated_D(x0: float) -> OperatorSum:
    """exp(i x0 P0) D exp(-i x0 P0) = D - x0 P0."""
    return gen.pipeline_of(gen.D()) - float(x0) * gen.pipeline_of(gen.P0())


def time_conjugated_K(mu: int, x0: float) -> OperatorSum:
    """exp(i x0 P0) K_mu exp(-i x0 P0) expressed in the generator basis.

    For spatial mu: K_j - 2 x0 M_j0 - x0^2 P_j.  For mu = 0 the double
    bracket flips sign relative to the spatial case:
    K_0 - 2 x0 D + x0^2 P0.
    """
    x0 = float(x0)
    if mu == 0:
        return (gen.pipeline_of(gen.K0())
                - 2.0 * x0 * gen.pipeline_of(gen.D())
                + x0 ** 2 * gen.pipeline_of(gen.P0()))
    return (gen.pipeline_of(gen.K(mu))
            - 2.0 * x0 * gen.pipeline_of(gen.Mboost(mu))
            - x0 ** 2 * gen.pipeline_of(gen.P(mu)))


def conjugate_by_time_translation(op, x0: float, state: MomentumState) -> MomentumState:
    """Apply exp(i x0 P0) A exp(-i x0 P0) to a state via exact phases."""
    zero = np.zeros(state.grid.n)
    inner = translate(state, np.concatenate(([-x0], zero)))
    mid = gen.apply(op, inner)
    return translate(mid, np.concatenate(([x0], zero)))


def combined_action(state: MomentumState, element: PoincareElement,
                    alpha: float, scheme: str = "spectral") -> MomentumState:
    """Rotate, then translate, then dilate (the composite covariance group)."""
    out = rotate_state(state, element.R)
    out = translate(out, element.y)
    if alpha != 0.0:
        out = dilate(out, alpha, scheme=scheme)
    return out
