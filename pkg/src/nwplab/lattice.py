"""Grids, wavefunction containers, normalization conventions and test states.

Both representations live on the same uniform periodic lattice: L points per
axis, coordinate box of side ``box_length`` centered at the origin, momentum
box of side ``2*pi*L/box_length``.  Lattice duality ``dx*dp*L = 2*pi`` holds
exactly, so the base change between the two representations is a plain
discrete Fourier transform (see :mod:`nwplab.spectral`).

All sample arrays are indexed by the Euclidean (upper-index) components of
momentum or position; lower-index quantities of the underlying Minkowski
metric (+,-,-,-) equal minus these and every operator applies the metric
signs explicitly.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "GridSpec",
    "MomentumState",
    "CoordinateState",
    "FockSum",
    "GridMismatchError",
    "DomainError",
    "inner_product",
    "convert_normalization",
    "make_gaussian_ring",
    "random_state",
    "check_margins",
    "save_state",
    "load_state",
]


class GridMismatchError(ValueError):
    """Operands live on different grids or in different representations."""


class DomainError(ValueError):
    """A state or parameter violates a support/margin precondition."""


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the shared sampling lattice.

    n: spatial dimension (1, 2 or 3).
    points_per_axis: even number of samples per axis.
    box_length: coordinate-space extent per axis.
    """

    n: int
    points_per_axis: int
    box_length: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if self.points_per_axis <= 0 or self.points_per_axis % 2:
            raise ValueError("points_per_axis must be a positive even integer")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")

    @property
    def dx(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def dp(self) -> float:
        return 2.0 * math.pi / self.box_length

    @property
    def momentum_extent(self) -> float:
        """Half-width of the momentum box: samples cover [-extent, extent)."""
        return math.pi * self.points_per_axis / self.box_length

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.n

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.n

    @property
    def zero_index(self) -> tuple:
        """Index of the p = 0 (or x = 0) sample."""
        return (self.points_per_axis // 2,) * self.n

    def coordinate_values(self) -> np.ndarray:
        """1-d array of per-axis coordinate sample values."""
        L = self.points_per_axis
        return (np.arange(L) - L // 2) * self.dx

    def momentum_values(self) -> np.ndarray:
        L = self.points_per_axis
        return (np.arange(L) - L // 2) * self.dp

    def momentum_axes(self) -> list:
        """Broadcastable Euclidean momentum component arrays p^1..p^n."""
        return _cached(self, "paxes", _build_axes, self.momentum_values(), self.n)

    def coordinate_axes(self) -> list:
        return _cached(self, "xaxes", _build_axes, self.coordinate_values(), self.n)

    def omega(self) -> np.ndarray:
        """Massless dispersion |p| sampled on the momentum lattice."""
        def build(values, n):
            ax = _build_axes(values, n)
            return np.sqrt(sum(a * a for a in ax))
        return _cached(self, "omega", build, self.momentum_values(), self.n)


def _build_axes(values: np.ndarray, n: int) -> list:
    axes = []
    for j in range(n):
        shape = [1] * n
        shape[j] = len(values)
        axes.append(values.reshape(shape))
    return axes


_GRID_CACHE: dict = {}


def _cached(grid: GridSpec, key: str, builder, *args):
    store = _GRID_CACHE.setdefault(grid, {})
    if key not in store:
        store[key] = builder(*args)
    return store[key]


def _freeze(samples: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(samples, dtype=np.complex128)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class _State:
    grid: GridSpec
    samples: np.ndarray

    space = "abstract"

    def __post_init__(self):
        if self.samples.shape != self.grid.shape:
            raise GridMismatchError(
                f"samples shape {self.samples.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "samples", _freeze(self.samples))

    @property
    def measure(self) -> float:
        raise NotImplementedError

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.measure))

    def with_samples(self, samples: np.ndarray):
        return replace(self, samples=samples)

    def __add__(self, other):
        _check_compatible(self, other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, scalar):
        return self.with_samples(self.samples * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_samples(-self.samples)


@dataclass(frozen=True)
class MomentumState(_State):
    """One-particle wavefunction phi(p) sampled on the momentum lattice.

    The default normalization tag is "noncovariant": flat measure d^n p,
    finite norm sum |phi|^2 dp^n.
    """

    normalization: str = "noncovariant"
    space = "momentum"

    @property
    def measure(self) -> float:
        return self.grid.dp ** self.grid.n


@dataclass(frozen=True)
class CoordinateState(_State):
    """Position-representation wavefunction f(x) on the coordinate lattice."""

    normalization: str = "nwp"
    space = "coordinate"

    @property
    def measure(self) -> float:
        return self.grid.dx ** self.grid.n


def _check_compatible(a: _State, b: _State) -> None:
    if type(a) is not type(b):
        raise GridMismatchError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if a.grid != b.grid:
        raise GridMismatchError("states live on different grids")


def inner_product(a: _State, b: _State) -> complex:
    """Flat-measure inner product <a, b> = sum conj(a) b * measure."""
    _check_compatible(a, b)
    return complex(np.vdot(a.samples, b.samples) * a.measure)


def convert_normalization(state: MomentumState, direction: str) -> MomentumState:
    """Apply the sqrt(2 omega) dressing between the two ladder conventions.

    ``to_covariant`` multiplies samples by 1/sqrt(2 omega), ``to_noncovariant``
    by sqrt(2 omega).  The p = 0 mode follows the zero-mode policy: the
    singular 1/sqrt(2 omega) factor is replaced by 0 there, so the round trip
    is the identity exactly on every mode with omega > 0.
    """
    if not isinstance(state, MomentumState):
        raise GridMismatchError("normalization conversion applies to momentum states")
    w = state.grid.omega()
    root = np.sqrt(2.0 * w)
    if direction == "to_covariant":
        factor = np.divide(1.0, root, out=np.zeros_like(root), where=root > 0)
        tag = "covariant"
    elif direction == "to_noncovariant":
        factor = root
        tag = "noncovariant"
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return MomentumState(state.grid, state.samples * factor, normalization=tag)


def check_margins(state: _State, cells: int = 4, threshold: float = 1e-10,
                  *, partner: bool = True) -> float:
    """Verify the state decays inside a ``cells``-wide rim of its box.

    Returns the worst rim amplitude relative to the peak amplitude; raises
    DomainError if it exceeds ``threshold``.  With ``partner=True`` the dual
    representation is checked as well (aliasing control needs both).
    """
    worst = _rim_level(state.samples, cells)
    if partner:
        from . import spectral  # deferred: spectral imports this module

        dual = spectral.to_coordinate(state) if state.space == "momentum" \
            else spectral.to_momentum(state)
        worst = max(worst, _rim_level(dual.samples, cells))
    if worst > threshold:
        raise DomainError(
            f"state rim amplitude {worst:.3e} exceeds margin threshold {threshold:.1e}")
    return worst


def _rim_level(samples: np.ndarray, cells: int) -> float:
    mask = np.zeros(samples.shape, dtype=bool)
    for ax in range(samples.ndim):
        sl = [slice(None)] * samples.ndim
        sl[ax] = slice(0, cells)
        mask[tuple(sl)] = True
        sl[ax] = slice(-cells, None)
        mask[tuple(sl)] = True
    peak = np.max(np.abs(samples))
    if peak == 0:
        return 0.0
    return float(np.max(np.abs(samples[mask])) / peak)


def make_gaussian_ring(grid: GridSpec, center_radius: float, width: float,
                       direction=None, *, anisotropy: float = 0.5,
                       suppression_scale: float | None = None,
                       suppression_power: int = 2, phase: float = 0.0,
                       margin_threshold: float | None = 1e-5) -> MomentumState:
    """Normalized shell state concentrated on the momentum sphere |p| = r0.

    The profile is a radial Gaussian times the origin-suppression factor
    ``(1 - exp(-|p|^2 / (2 a^2)))^k`` which vanishes like |p|^(2k) at p = 0,
    so the sample at the p = 0 mode is exactly zero and the |p|-kink of the
    radial profile is harmless to spectral derivatives.  ``direction``, a
    unit vector, adds the modulation ``1 + anisotropy * d.p/|p|``; None gives
    the isotropic shell.

    Margins: requires r0 - 4 sigma > dp and r0 + 4 sigma inside the momentum
    box; the built state is additionally checked to decay below
    ``margin_threshold`` (relative to its peak) in a 4-cell rim of both
    boxes.  The default is a loose construction-sanity gate; the harness
    recipes reach ~1e-9 and record measured levels in reports.  Pass None to
    skip, e.g. for deliberately under-resolved refinement studies.
    """
    r0, sigma = float(center_radius), float(width)
    if not r0 > 0 or not sigma > 0:
        raise ValueError("center_radius and width must be positive")
    if r0 - 4.0 * sigma <= grid.dp:
        raise DomainError(
            f"ring support reaches the origin: r0 - 4 sigma = {r0 - 4 * sigma:.4f} "
            f"<= dp = {grid.dp:.4f}")
    if r0 + 4.0 * sigma >= grid.momentum_extent:
        raise DomainError(
            f"ring support leaves the momentum box: r0 + 4 sigma = {r0 + 4 * sigma:.4f} "
            f">= extent = {grid.momentum_extent:.4f}")

    w = grid.omega()
    a = suppression_scale if suppression_scale is not None else 0.2 * grid.momentum_extent
    profile = np.exp(-((w - r0) ** 2) / (2.0 * sigma ** 2))
    profile = profile * (1.0 - np.exp(-(w ** 2) / (2.0 * a ** 2))) ** suppression_power
    if direction is not None and not (isinstance(direction, str) and direction == "isotropic"):
        d = np.asarray(direction, dtype=float)
        if d.shape != (grid.n,):
            raise ValueError(f"direction must be a length-{grid.n} vector")
        d = d / np.linalg.norm(d)
        winv = np.divide(1.0, w, out=np.zeros_like(w), where=w > 0)
        pax = grid.momentum_axes()
        profile = profile * (1.0 + anisotropy * sum(d[j] * pax[j] for j in range(grid.n)) * winv)
    samples = profile.astype(np.complex128)
    if phase:
        samples = samples * np.exp(1j * phase * w)
    nrm = np.sqrt(np.sum(np.abs(samples) ** 2) * grid.dp ** grid.n)
    state = MomentumState(grid, samples / nrm)
    assert abs(state.samples[grid.zero_index]) < 1e-12
    if margin_threshold is not None:
        check_margins(state, threshold=margin_threshold)
    return state


def random_state(grid: GridSpec, seed: int, *, envelope_width: float | None = None) -> MomentumState:
    """Normalized pseudo-random state with a Gaussian momentum envelope.

    Deterministic in ``seed``; used by property-style tests and random
    product states.  Not admissible for 1/omega operators (no origin
    suppression).
    """
    rng = np.random.default_rng(seed)
    w = grid.omega()
    width = envelope_width if envelope_width is not None else 0.25 * grid.momentum_extent
    env = np.exp(-(w ** 2) / (2.0 * width ** 2))
    samples = env * (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    nrm = np.sqrt(np.sum(np.abs(samples) ** 2) * grid.dp ** grid.n)
    return MomentumState(grid, samples / nrm)


# ---------------------------------------------------------------------------
# truncated Fock states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockSum:
    """Weighted sum of symmetrized k-fold product states.

    Each term ``(weight, (f_1, ..., f_k))`` denotes the (implicitly
    symmetrized) vector ``weight * a*(f_1) ... a*(f_k) |0>`` built from
    non-covariant smeared creation operators.  Inner products reduce to
    permanents of the factor Gram matrices.
    """

    k: int
    terms: tuple

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("particle number must be >= 1")
        terms = []
        grid = None
        for weight, factors in self.terms:
            factors = tuple(factors)
            if len(factors) != self.k:
                raise ValueError("every term must carry exactly k factors")
            for f in factors:
                if not isinstance(f, MomentumState):
                    raise GridMismatchError("FockSum factors must be momentum states")
                if grid is None:
                    grid = f.grid
                elif f.grid != grid:
                    raise GridMismatchError("all factors must share one grid")
            terms.append((complex(weight), factors))
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def grid(self) -> GridSpec:
        return self.terms[0][1][0].grid

    @staticmethod
    def product(*factors: MomentumState, weight: complex = 1.0) -> "FockSum":
        return FockSum(len(factors), ((weight, tuple(factors)),))

    def inner_product(self, other: "FockSum") -> complex:
        if self.k != other.k:
            return 0.0
        total = 0.0 + 0.0j
        for wa, fa in self.terms:
            for wb, fb in other.terms:
                gram = np.array([[inner_product(fi, gj) for gj in fb] for fi in fa])
                total += np.conj(wa) * wb * _permanent(gram)
        return complex(total)

    def norm(self) -> float:
        return math.sqrt(max(self.inner_product(self).real, 0.0))

    def __add__(self, other: "FockSum") -> "FockSum":
        if self.k != other.k:
            raise ValueError("cannot add Fock sums with different particle numbers")
        return FockSum(self.k, self.terms + other.terms)

    def __mul__(self, scalar) -> "FockSum":
        return FockSum(self.k, tuple((w * complex(scalar), f) for w, f in self.terms))

    __rmul__ = __mul__


def _permanent(m: np.ndarray) -> complex:
    k = m.shape[0]
    return sum(
        math.prod(m[i, perm[i]] for i in range(k))
        for perm in itertools.permutations(range(k))
    )


# ---------------------------------------------------------------------------
# binary state container
# ---------------------------------------------------------------------------

_MAGIC = "NWPSTATE 1"


def save_state(state: _State, path) -> None:
    """Write the self-describing container: text header, then raw samples.

    Samples are little-endian float64 (re, im) pairs in row-major index order.
    """
    header = "\n".join([
        _MAGIC,
        f"dim={state.grid.n}",
        f"points_per_axis={state.grid.points_per_axis}",
        f"box_length={state.grid.box_length!r}",
        f"space={state.space}",
        f"normalization={state.normalization}",
        "endian=little",
        "dtype=float64",
        "END",
        "",
    ])
    flat = np.ascontiguousarray(state.samples).ravel()
    pairs = np.empty(2 * flat.size, dtype="<f8")
    pairs[0::2] = flat.real
    pairs[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(pairs.tobytes())


def load_state(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    head, sep, _ = blob.partition(b"END\n")
    if not sep:
        raise ValueError("not a state container: missing END marker")
    lines = head.decode("ascii").splitlines()
    if not lines or lines[0] != _MAGIC:
        raise ValueError("not a state container: bad magic")
    meta = dict(line.split("=", 1) for line in lines[1:] if line)
    if meta.get("endian") != "little" or meta.get("dtype") != "float64":
        raise ValueError("unsupported container encoding")
    grid = GridSpec(int(meta["dim"]), int(meta["points_per_axis"]), float(meta["box_length"]))
    payload = blob[len(head) + len(b"END\n"):]
    pairs = np.frombuffer(payload, dtype="<f8")
    if pairs.size != 2 * grid.size:
        raise ValueError(f"payload holds {pairs.size // 2} samples, expected {grid.size}")
    samples = (pairs[0::2] + 1j * pairs[1::2]).reshape(grid.shape)
    cls = MomentumState if meta["space"] == "momentum" else CoordinateState
    return cls(grid, samples, normalization=meta["normalization"])
