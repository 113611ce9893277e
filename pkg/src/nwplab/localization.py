"""Position eigenfunctions, probability amplitudes and their covariance laws.

The probability amplitude of finding the particle of a one-particle state at
the spacetime point (t, x) is

    A(phi, t, x) = (2 pi)^(-n/2) sum_p exp(-i (omega t - p.x)) phi(p) dp^n,

an exact direct phase sum also for off-lattice points; at t = 0 and lattice x
it coincides with the coordinate representation.  k-particle amplitudes pair
the symmetrized product states against k one-particle amplitudes through a
permanent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .actions import PoincareElement, combined_action
from .lattice import FockSum, GridSpec, MomentumState, convert_normalization, inner_product
from .spectral import to_coordinate

__all__ = [
    "SpacetimePoint",
    "nwp_eigenfunction",
    "amplitude_one",
    "amplitude_k",
    "position_density",
    "density_total",
    "covariance_check",
    "outside_cone_fraction",
]


@dataclass(frozen=True)
class SpacetimePoint:
    """Time and position; the position need not lie on a lattice site."""

    t: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))

    def validate(self, grid: GridSpec) -> "SpacetimePoint":
        if self.x.shape != (grid.n,):
            raise ValueError(f"position must have {grid.n} components")
        if np.any(np.abs(self.x) > grid.box_length / 2):
            raise ValueError("position outside the coordinate box")
        return self


def nwp_eigenfunction(x, grid: GridSpec) -> MomentumState:
    """Localized-state wavefunction (2 pi)^(-n/2) e^(-i p.x) sqrt(2 omega).

    Covariant-normalized and not square-summable in the continuum; meant to
    be paired against covariant-converted states, where the flat-measure
    pairing <Psi_x, to_covariant(phi)> reproduces the coordinate
    representation at lattice points.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.n,):
        raise ValueError(f"position must have {grid.n} components")
    pax = grid.momentum_axes()
    phase = -sum(pax[j] * x[j] for j in range(grid.n))
    samples = (2 * math.pi) ** (-grid.n / 2) * np.exp(1j * phase) * np.sqrt(2.0 * grid.omega())
    return MomentumState(grid, samples, normalization="covariant")


def localization_pairing(x, state: MomentumState) -> complex:
    """<Psi_x, to_covariant(state)> with the flat measure: the t = 0 amplitude."""
    return inner_product(nwp_eigenfunction(x, state.grid),
                         convert_normalization(state, "to_covariant"))


def amplitude_one(state: MomentumState, point: SpacetimePoint) -> complex:
    """Probability amplitude of localizing the particle at (t, x)."""
    g = state.grid
    point.validate(g)
    pax = g.momentum_axes()
    phase = -g.omega() * point.t + sum(pax[j] * point.x[j] for j in range(g.n))
    total = np.sum(np.exp(1j * phase) * np.asarray(state.samples))
    return complex((2 * math.pi) ** (-g.n / 2) * g.dp ** g.n * total)


def amplitude_k(psi: FockSum, points) -> complex:
    """Equal-time k-particle amplitude (k!)^(-1/2) <0| phi1(x1)...phi1(xk) |psi>.

    For a product term the pairing is the permanent of the one-particle
    amplitude matrix; for k = 1 this reduces exactly to amplitude_one.
    """
    points = list(points)
    if len(points) != psi.k:
        raise ValueError(f"need {psi.k} points, got {len(points)}")
    t0 = points[0].t
    if any(p.t != t0 for p in points):
        raise ValueError("k-particle amplitudes are defined at equal times")
    total = 0.0 + 0.0j
    for weight, factors in psi.terms:
        amp = np.array([[amplitude_one(f, pt) for f in factors] for pt in points])
        total += weight * sum(
            math.prod(amp[i, perm[i]] for i in range(psi.k))
            for perm in itertools.permutations(range(psi.k)))
    return complex(total / math.sqrt(math.factorial(psi.k)))


def position_density(state: MomentumState, t: float) -> np.ndarray:
    """|amplitude|^2 over the whole coordinate lattice at time t (fast path)."""
    from .actions import evolve_time

    f = to_coordinate(evolve_time(state, t))
    return np.abs(np.asarray(f.samples)) ** 2


def density_total(state: MomentumState, t: float) -> float:
    g = state.grid
    return float(np.sum(position_density(state, t)) * g.dx ** g.n)


def covariance_check(state: MomentumState, element: PoincareElement, alpha: float,
                     point: SpacetimePoint) -> float:
    """Relative residual of the amplitude covariance law.

    The amplitude of the transformed state at the point equals
    exp(-3 alpha / 2) times the amplitude of the original state at the
    inverse-transformed point (undo dilatation, translation, rotation in
    that order); equivalently the original amplitude is exp(3 alpha / 2)
    times the transformed one.  Exact for lattice translations and signed
    permutations, interpolation-limited otherwise.
    """
    transformed = combined_action(state, element, alpha)
    lhs = amplitude_one(transformed, point)
    scale = math.exp(-alpha)
    x_inv = element.R.T @ (scale * point.x - element.y[1:])
    t_inv = scale * point.t - element.y[0]
    rhs = math.exp(-1.5 * alpha) * amplitude_one(state, SpacetimePoint(t_inv, x_inv))
    denom = max(abs(rhs), 1e-300)
    return abs(lhs - rhs) / denom


def outside_cone_fraction(state: MomentumState, t: float) -> float:
    """Probability mass found outside the light cone |x| > |t| at time t.

    Diagnostic only: localized states spread superluminally, so this is
    strictly positive for t > 0 even for initially point-localized states.
    """
    g = state.grid
    dens = position_density(state, t)
    r2 = sum(np.broadcast_to(a, g.shape) ** 2 for a in g.coordinate_axes())
    mass_out = float(np.sum(dens[r2 > t * t]) * g.dx ** g.n)
    total = float(np.sum(dens) * g.dx ** g.n)
    return mass_out / total
