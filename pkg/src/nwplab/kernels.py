"""Closed-form position-space kernels and their numerical verification oracles.

The radial Fourier transform of |p|^(2 lambda) on R^n evaluates, in the
regularized sense, to a power law in |x| with an explicit Gamma-function
coefficient; everything in this module revolves around that family.  The
massless energy kernel (lambda = 1/2, n = 3) is -1/(pi^2 |x|^4); the
regularized time-translation kernel is its exp(-s omega) relative.

Production convolutions define kernels through their analytic momentum
symbol, so they stay exactly consistent with the pipeline operators; the
sampled closed forms (with the punctured singular cell) exist for test
comparisons only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .lattice import CoordinateState, GridSpec
from .spectral import to_coordinate, to_momentum

__all__ = [
    "PoleError",
    "SingularityError",
    "OracleError",
    "gamma_value",
    "bessel_k2",
    "gs_coefficient",
    "omega_kernel",
    "time_kernel",
    "velocity_kernel",
    "radial_quadrature_oracle",
    "Kernel",
    "omega_tilde_kernel",
    "time_translation_kernel",
    "velocity_tilde_kernel",
    "convolve_coordinate",
    "bessel_limit_check",
    "richardson",
]


class PoleError(ValueError):
    """The requested Gamma-coefficient sits on a pole of the Gamma function."""


class SingularityError(ValueError):
    """Kernel evaluated at its singular point."""


class OracleError(RuntimeError):
    """An independent quadrature oracle failed to converge."""


# ---------------------------------------------------------------------------
# Gamma via Lanczos, modified Bessel K2 via series / continued fraction
# ---------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_value(x: float) -> float:
    """Gamma(x) by the Lanczos approximation, reflection for x < 1/2.

    Relative accuracy ~1e-13 on the range used here; poles raise.
    """
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"Gamma pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_value(1.0 - x))
    x -= 1.0
    series = _LANCZOS[0]
    for i, c in enumerate(_LANCZOS[1:], start=1):
        series += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * series


def _bessel_k01_series(x: float) -> tuple:
    """Ascending series for K0, K1 (x <= 2), from the standard log expansions."""
    q = 0.25 * x * x
    lg = math.log(0.5 * x)
    euler = 0.5772156649015328606
    # K0 = -(log(x/2) + gamma) I0 + sum_{k>=1} q^k / (k!)^2 * H_k
    term = 1.0
    i0 = 1.0
    k0 = 0.0
    harmonic = 0.0
    for k in range(1, 60):
        term *= q / (k * k)
        harmonic += 1.0 / k
        i0 += term
        k0 += term * harmonic
        if term < 1e-20 * max(i0, 1.0):
            break
    k0 = -(lg + euler) * i0 + k0
    # K1 = 1/x + log(x/2) I1 - (x/4) sum_k [psi(k+1) + psi(k+2)] q^k / (k! (k+1)!)
    term = 1.0
    i1 = 1.0
    acc = (-euler) + (1.0 - euler)     # psi(1) + psi(2)
    s = acc
    hk, hk1 = 0.0, 1.0
    for k in range(1, 60):
        term *= q / (k * (k + 1))
        hk += 1.0 / k
        hk1 += 1.0 / (k + 1)
        s += term * (2.0 * (-euler) + hk + hk1)
        i1 += term
        if term < 1e-20:
            break
    i1 *= 0.5 * x
    k1 = 1.0 / x + lg * i1 - 0.25 * x * s
    return k0, k1


def _bessel_k01_cf(x: float) -> tuple:
    """Steed continued fraction (CF2) for K0, K1 at x > 2."""
    eps = 1e-16
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 30001):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) <= eps:
            break
    else:
        raise OracleError("Bessel CF2 failed to converge")
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (0.5 + x + h) / x
    return k0, k1


def bessel_k2(x: float) -> float:
    """Modified Bessel function K2 via K0, K1 and the upward recurrence."""
    x = float(x)
    if x <= 0:
        raise ValueError("bessel_k2 requires x > 0")
    k0, k1 = _bessel_k01_series(x) if x <= 2.0 else _bessel_k01_cf(x)
    return k0 + 2.0 / x * k1


# ---------------------------------------------------------------------------
# radial power-law transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialKernelSpec:
    """Closed-form data of the regularized transform of |p|^(2 lambda)."""

    lam: float
    n: int
    coefficient: float
    power: float             # exponent of |x| in the position-space kernel

    @staticmethod
    def build(lam: float, n: int) -> "RadialKernelSpec":
        return RadialKernelSpec(lam, n, gs_coefficient(lam, n), -2.0 * lam - n)


def gs_coefficient(lam: float, n: int) -> float:
    """Coefficient c with (2 pi)^-n Int d^n p |p|^(2 lam) e^{i p.z} = c |z|^(-2 lam - n).

    Holds in the regularized (Gelfand-Shilov) sense; poles of Gamma(-lam),
    i.e. lam a non-negative integer, are derivative-of-delta cases and raise.
    """
    lam = float(lam)
    if lam >= 0 and lam == math.floor(lam):
        raise PoleError(f"lambda = {lam} hits a Gamma(-lambda) pole "
                        "(derivative-of-delta case)")
    num = gamma_value(lam + 0.5 * n)
    den = gamma_value(-lam)
    return (2.0 * math.pi) ** (-n) * 2.0 ** (2.0 * lam + n) * math.pi ** (0.5 * n) * num / den


def omega_kernel(x, n: int = 3) -> float:
    """Energy kernel: -pi^(-(n+1)/2) Gamma((n+1)/2) |x|^(-(n+1)).

    For n = 3 this is -|x|^-4 / pi^2.  The argument is the position vector
    (or its radius); the origin raises.
    """
    r = _radius(x, n)
    if r == 0:
        raise SingularityError("omega kernel is singular at x = 0")
    return -math.pi ** (-(n + 1) / 2.0) * gamma_value((n + 1) / 2.0) * r ** (-(n + 1))


def velocity_kernel(x, axis: int, n: int = 3) -> float:
    """Component kernel -pi^(-(n+1)/2) Gamma((n+1)/2) |x|^(-(n+1)) x_j.

    x_j is the lower-index component, i.e. minus the Euclidean one.
    """
    v = np.asarray(x, dtype=float)
    r = _radius(v, n)
    if r == 0:
        raise SingularityError("velocity kernel is singular at x = 0")
    return -math.pi ** (-(n + 1) / 2.0) * gamma_value((n + 1) / 2.0) * r ** (-(n + 1)) * (-v[axis])


def time_kernel(x, y0: float, eps: float, n: int = 3) -> complex:
    """Regularized time-translation kernel s / (pi^2 (s^2 + |x|^2)^2), s = eps + i y0.

    This is the exact inverse transform of exp(-s omega) for n = 3; as
    eps -> 0+ it converges distributionally to (i y0 / pi^2) (|x|^2 - y0^2)^-2.
    """
    if n != 3:
        raise ValueError("time kernel is implemented for n = 3")
    if not eps > 0:
        raise ValueError("regularization eps must be positive")
    s = eps + 1j * y0
    r2 = _radius(x, n) ** 2
    return s / (math.pi ** 2 * (s * s + r2) ** 2)


def _radius(x, n: int) -> float:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        return float(abs(v))
    if v.shape != (n,):
        raise ValueError(f"expected a length-{n} position vector or a radius")
    return float(np.sqrt(np.sum(v * v)))


def radial_quadrature_oracle(lam: float, eps: float, r: float, n: int = 3) -> float:
    """Damped radial quadrature for the lambda-family transform, test oracle.

    Computes (2 pi)^-3 (4 pi / r) Int_0^inf p^(2 lam + 1) sin(p r) e^(-eps p) dp
    with adaptive quadrature; converges to gs_coefficient(lam,3) r^(-2lam-3)
    as eps -> 0.
    """
    if n != 3:
        raise ValueError("the quadrature oracle is implemented for n = 3")
    if not eps > 0:
        raise ValueError("damping eps must be positive")

    def smooth_part(p):
        if p == 0.0:
            return r if lam == -1.0 else 0.0
        return p ** (2 * lam + 1) * math.sin(p * r) * math.exp(-eps * p)

    cut = max(60.0 / eps, 200.0)
    v1, e1 = integrate.quad(smooth_part, 0.0, 1.0, limit=200)
    v2, e2 = integrate.quad(lambda p: p ** (2 * lam + 1) * math.exp(-eps * p),
                            1.0, cut, weight="sin", wvar=r, limit=600)
    total = v1 + v2
    if e1 + e2 > 1e-7 * max(abs(total), 1.0):
        raise OracleError(f"quadrature error estimate {e1 + e2:.2e} too large "
                          f"for lambda={lam}, eps={eps}, r={r}")
    return (2.0 * math.pi) ** (-3) * 4.0 * math.pi / r * total


def richardson(ladder, values):
    """Neville extrapolation of values(eps) to eps = 0 along a ladder."""
    e = np.asarray(ladder, dtype=float)
    rows = [np.asarray(values, dtype=complex)]
    for k in range(1, len(e)):
        prev = rows[-1]
        cur = np.empty(len(e) - k, dtype=complex)
        for i in range(len(e) - k):
            cur[i] = prev[i + 1] + (prev[i + 1] - prev[i]) * e[i + k] / (e[i] - e[i + k])
        rows.append(cur)
    out = rows[-1][0]
    return out.real if abs(out.imag) < 1e-14 * max(abs(out), 1.0) else out


# ---------------------------------------------------------------------------
# lattice kernels and convolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """Convolution kernel with a closed form and (optionally) its exact symbol.

    ``closed_form(axes) -> array`` evaluates on broadcastable coordinate
    component arrays (the difference lattice); ``symbol(grid) -> array`` is
    the analytic momentum multiplier.  Kernels whose closed form is singular
    at x = 0 carry ``singular=True`` and get the punctured-cell treatment
    when sampled.
    """

    name: str
    closed_form: object
    symbol: object = None
    singular: bool = False

    def sample(self, grid: GridSpec, puncture: bool = True) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.closed_form(grid.coordinate_axes()), dtype=complex)
        out = np.array(np.broadcast_to(out, grid.shape))
        if self.singular:
            out[grid.zero_index] = 0.0
            if puncture and self.symbol is not None:
                out[grid.zero_index] = _puncture_value(self, out, grid)
        return out

    def sampled_symbol(self, grid: GridSpec, puncture: bool = True) -> np.ndarray:
        """Multiplication symbol of the sampled kernel (discrete transform)."""
        samples = self.sample(grid, puncture=puncture)
        return (2.0 * math.pi) ** (grid.n / 2.0) \
            * np.asarray(to_momentum(CoordinateState(grid, samples)).samples)


def _puncture_value(kernel: Kernel, samples: np.ndarray, grid: GridSpec) -> complex:
    """Singular-cell value calibrated at the midpoint of the momentum zone.

    Changing the x = 0 cell shifts the discrete symbol by a constant, so one
    reference point fixes it.  The zone midpoint p = 0 is the
    refinement-stable choice: it absorbs exactly the divergent local constant
    of the |x|^-k lattice sum, leaving a remainder that shrinks with dx.
    """
    probe = samples.copy()
    probe[grid.zero_index] = 0.0
    sym0 = (2.0 * math.pi) ** (grid.n / 2.0) \
        * np.asarray(to_momentum(CoordinateState(grid, probe)).samples)
    ref = grid.zero_index
    target = np.asarray(kernel.symbol(grid))[ref]
    return (target - sym0[ref]) / grid.dx ** grid.n


def omega_tilde_kernel(n: int = 3) -> Kernel:
    coeff = -math.pi ** (-(n + 1) / 2.0) * gamma_value((n + 1) / 2.0)

    def closed(axes):
        r2 = sum(a * a for a in axes)
        return coeff * r2 ** (-(n + 1) / 2.0)

    return Kernel("omega_tilde", closed, symbol=lambda grid: grid.omega(), singular=True)


def time_translation_kernel(y0: float, eps: float) -> Kernel:
    if not eps > 0:
        raise ValueError("regularization eps must be positive")
    s = eps + 1j * y0

    def closed(axes):
        r2 = sum(a * a for a in axes)
        return s / (math.pi ** 2 * (s * s + r2) ** 2)

    def symbol(grid):
        return np.exp(-s * grid.omega())

    return Kernel(f"time_translation(y0={y0},eps={eps})", closed, symbol=symbol)


def velocity_tilde_kernel(axis: int, n: int = 3) -> Kernel:
    """Kernel whose convolution, times -i, gives the velocity component V_j."""
    coeff = -math.pi ** (-(n + 1) / 2.0) * gamma_value((n + 1) / 2.0)

    def closed(axes):
        r2 = sum(a * a for a in axes)
        # lower-index component x_j = -x^j
        return coeff * r2 ** (-(n + 1) / 2.0) * (-axes[axis])

    def symbol(grid):
        # exact transform: -i p^j / omega, so that -i * conv = V_j = -p^j/omega
        w = grid.omega()
        pj = grid.momentum_axes()[axis]
        return -1j * pj * np.divide(1.0, w, out=np.zeros_like(w), where=w > 0)

    return Kernel(f"velocity_tilde({axis})", closed, symbol=symbol, singular=True)


def convolve_coordinate(kernel, f: CoordinateState, route: str = "symbol") -> CoordinateState:
    """Discrete convolution (k * f)(x) = sum_y k(x - y) f(y) dx^n.

    ``route="symbol"`` (production) multiplies by the kernel's analytic
    momentum symbol, exactly consistent with the pipeline operators;
    ``route="sampled"`` uses the discrete transform of the sampled closed
    form with the punctured singular cell, and exists for test comparisons.
    A bare pointwise callable ``xvec -> complex`` is accepted and treated as
    a sampled non-singular kernel.
    """
    if callable(kernel) and not isinstance(kernel, Kernel):
        kernel = Kernel("adhoc", _vectorize_pointwise(kernel))
        route = "sampled"
    g = f.grid
    if route == "symbol":
        if kernel.symbol is None:
            raise ValueError(f"kernel {kernel.name!r} has no analytic symbol")
        sym = np.asarray(kernel.symbol(g))
    elif route == "sampled":
        sym = kernel.sampled_symbol(g)
    else:
        raise ValueError(f"unknown convolution route {route!r}")
    phi = to_momentum(f)
    return to_coordinate(phi.with_samples(np.asarray(phi.samples) * sym))


def _vectorize_pointwise(fn):
    def closed(axes):
        full = [np.broadcast_to(a, tuple(max(x.shape[i] for x in axes)
                                         for i in range(len(axes)))) for a in axes]
        pts = np.stack([a.ravel() for a in full], axis=-1)
        vals = np.fromiter((complex(fn(p)) for p in pts), dtype=complex, count=len(pts))
        return vals.reshape(full[0].shape)
    return closed


# ---------------------------------------------------------------------------
# massless Bessel limit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    """Errors |m^2 K2(m f) - 2/f^2| along a decreasing mass ladder."""

    f_value: float
    masses: tuple
    errors: tuple

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    @property
    def final_error(self) -> float:
        return self.errors[-1]


def bessel_limit_check(f_value: float, masses) -> ConvergenceReport:
    """Check m^2 K2(m f) -> 2 / f^2 along a decreasing positive mass ladder."""
    if not f_value > 0:
        raise ValueError("f must be positive")
    masses = tuple(float(m) for m in masses)
    if any(m <= 0 for m in masses) or any(b >= a for a, b in zip(masses, masses[1:])):
        raise ValueError("masses must be positive and strictly decreasing")
    limit = 2.0 / f_value ** 2
    errors = tuple(abs(m * m * bessel_k2(m * f_value) - limit) for m in masses)
    return ConvergenceReport(f_value, masses, errors)
