import math

import numpy as np
import pytest

from nwplab import (GridSpec, MomentumState, OperatorSum, Pipeline, Symbol,
                    apply_pipeline, inner_product, make_gaussian_ring,
                    random_state, rescale, rotate, to_coordinate, to_momentum)
from nwplab.lattice import CoordinateState, DomainError
from nwplab.spectral import (MultiplyCoordinate, MultiplyMomentum, Scale,
                             SymbolEvaluationError, is_signed_permutation, mul_p,
                             mul_x)

from conftest import direct_coordinate_transform


def test_transform_matches_direct_sum(small_grid):
    phi = random_state(small_grid, seed=5)
    fast = to_coordinate(phi).samples
    direct = direct_coordinate_transform(small_grid, np.asarray(phi.samples))
    assert np.max(np.abs(fast - direct)) / np.max(np.abs(direct)) < 1e-13


def test_transform_round_trip(small_grid):
    phi = random_state(small_grid, seed=6)
    back = to_momentum(to_coordinate(phi))
    assert np.max(np.abs(back.samples - phi.samples)) < 1e-13


def test_parseval(small_grid):
    phi = random_state(small_grid, seed=7)
    assert to_coordinate(phi).norm() == pytest.approx(phi.norm(), rel=1e-12)


def test_base_change_unitarity_pairs(small_grid):
    a = random_state(small_grid, seed=8)
    b = random_state(small_grid, seed=9)
    lhs = inner_product(to_coordinate(a), to_coordinate(b))
    assert lhs == pytest.approx(inner_product(a, b), rel=1e-12)


def test_zero_mode_only_gives_uniform_field(small_grid):
    samples = np.zeros(small_grid.shape, dtype=complex)
    samples[small_grid.zero_index] = 1.0
    f = to_coordinate(MomentumState(small_grid, samples))
    assert np.max(np.abs(f.samples - f.samples.ravel()[0])) < 1e-15


def test_coordinate_delta_gives_uniform_momentum(small_grid):
    samples = np.zeros(small_grid.shape, dtype=complex)
    samples[small_grid.zero_index] = 1.0
    phi = to_momentum(CoordinateState(small_grid, samples))
    expected = (2 * math.pi) ** (-small_grid.n / 2) * small_grid.dx ** small_grid.n
    assert np.max(np.abs(phi.samples - expected)) < 1e-15


def test_real_even_spectrum_gives_real_field(work_grid):
    phi = make_gaussian_ring(work_grid, 3.0, 0.5)
    f = to_coordinate(phi)
    assert np.max(np.abs(f.samples.imag)) < 1e-10 * np.max(np.abs(f.samples.real))


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def test_pipeline_identity(work_ring):
    pipe = Pipeline((mul_p("one"),))
    out = apply_pipeline(pipe, work_ring)
    assert np.max(np.abs(out.samples - work_ring.samples)) < 1e-15


def test_pipeline_fusion_equivalence(small_grid):
    phi = random_state(small_grid, seed=13)
    two = Pipeline((mul_x("coordinate", axis=0), mul_x("coordinate", axis=1)))
    fused_symbol = Symbol.from_callable(
        lambda grid: np.broadcast_to(grid.coordinate_axes()[0] * grid.coordinate_axes()[1],
                                     grid.shape), "x1*x2")
    one = Pipeline((MultiplyCoordinate(fused_symbol),))
    a = apply_pipeline(two, phi)
    b = apply_pipeline(one, phi)
    assert np.max(np.abs(a.samples - b.samples)) < 1e-13
    # adjacent same-space multiplications commute
    swapped = Pipeline((mul_x("coordinate", axis=1), mul_x("coordinate", axis=0)))
    c = apply_pipeline(swapped, phi)
    assert np.max(np.abs(a.samples - c.samples)) < 1e-13


def test_pipeline_linearity(small_grid):
    pipe = Pipeline((mul_p("omega"), mul_x("coordinate", axis=2), Scale(0.5 - 0.25j)))
    a = random_state(small_grid, seed=14)
    b = random_state(small_grid, seed=15)
    lhs = apply_pipeline(pipe, a + 2.0 * b)
    rhs = apply_pipeline(pipe, a) + 2.0 * apply_pipeline(pipe, b)
    assert np.max(np.abs(lhs.samples - rhs.samples)) < 1e-13


def test_pipeline_energy_expectation(work_grid):
    phi = make_gaussian_ring(work_grid, 3.0, 0.5)
    pipe = Pipeline((mul_p("omega"),))
    val = inner_product(phi, apply_pipeline(pipe, phi)).real
    oracle = float(np.sum(work_grid.omega() * np.abs(phi.samples) ** 2) * work_grid.dp ** 3)
    assert val == pytest.approx(oracle, rel=1e-12)
    assert abs(val - 3.0) < 0.1


def test_pipeline_adjoint(small_grid):
    pipe = Pipeline((mul_p("omega"), mul_x("coordinate", axis=0), Scale(2.0 + 1.0j),
                     mul_p("momentum", axis=1)))
    a = random_state(small_grid, seed=16)
    b = random_state(small_grid, seed=17)
    lhs = inner_product(apply_pipeline(pipe, a), b)
    rhs = inner_product(a, apply_pipeline(pipe.adjoint(), b))
    assert lhs == pytest.approx(rhs, rel=1e-11)


def test_operator_sum_adjoint(small_grid):
    op = (OperatorSum.chain(1.5j, mul_p("omega"))
          + OperatorSum.chain(-2.0, mul_x("coordinate", axis=1), mul_p("momentum", axis=0)))
    a = random_state(small_grid, seed=18)
    b = random_state(small_grid, seed=19)
    lhs = inner_product(op.apply(a), b)
    rhs = inner_product(a, op.adjoint().apply(b))
    assert lhs == pytest.approx(rhs, rel=1e-11)


def test_pipeline_json_round_structure():
    op = OperatorSum.chain(-1.5j, mul_x("coordinate", axis=2), mul_p("omega"))
    desc = op.describe()
    assert desc["terms"][0]["weight"] == [0.0, -1.5]
    steps = desc["terms"][0]["pipeline"]
    assert steps[0] == {"multiply_coordinate": {"symbol": "coordinate", "axis": 2}}
    assert steps[1] == {"multiply_momentum": {"symbol": "omega"}}
    assert isinstance(op.to_json(), str)


def test_unnamed_symbol_refuses_serialization(small_grid):
    sym = Symbol.from_callable(lambda grid: np.ones(grid.shape))
    pipe = OperatorSum(((1.0 + 0j, Pipeline((MultiplyMomentum(sym),))),))
    with pytest.raises(ValueError):
        pipe.to_json()


def test_symbol_nonfinite_detection():
    g = GridSpec(1, 8, 4.0)
    sym = Symbol.from_callable(
        lambda grid: 1.0 / np.broadcast_to(grid.momentum_axes()[0] - grid.dp, grid.shape),
        "bad")
    with pytest.raises(SymbolEvaluationError, match="index"):
        sym.evaluate(g)


def test_punctured_symbols_zero_at_origin():
    g = GridSpec(3, 8, 6.0)
    arr = Symbol.named("omega_inv").evaluate(g)
    assert arr[g.zero_index] == 0.0
    assert np.all(np.isfinite(arr))


# ---------------------------------------------------------------------------
# rescale
# ---------------------------------------------------------------------------

def test_rescale_alpha_zero_is_identity(work_ring):
    out = rescale(work_ring, 0.0)
    assert np.max(np.abs(out.samples - work_ring.samples)) < 1e-12


def test_rescale_unitary_and_group(work_ring):
    out = rescale(work_ring, 0.2)
    assert abs(out.norm() - work_ring.norm()) < 1e-6
    back = rescale(out, -0.2)
    rel = np.linalg.norm(np.asarray(back.samples) - np.asarray(work_ring.samples))
    assert rel / np.linalg.norm(np.asarray(work_ring.samples)) < 1e-5


def test_rescale_matches_analytic_resampling(work_grid):
    # the rescaled ring is again a closed-form profile; compare directly
    phi = make_gaussian_ring(work_grid, 3.0, 0.6, suppression_scale=1.9)
    alpha = 0.15
    out = rescale(phi, alpha)
    w = work_grid.omega()
    scaled = np.exp(alpha) * w
    raw = np.exp(-((scaled - 3.0) ** 2) / (2 * 0.6 ** 2)) \
        * (1 - np.exp(-(scaled ** 2) / (2 * 1.9 ** 2))) ** 2
    nrm = np.sqrt(np.sum(np.abs(np.exp(-((w - 3.0) ** 2) / (2 * 0.6 ** 2))
                                * (1 - np.exp(-(w ** 2) / (2 * 1.9 ** 2))) ** 2) ** 2)
                  * work_grid.dp ** 3)
    expected = math.exp(1.5 * alpha) * raw / nrm
    err = np.linalg.norm(np.asarray(out.samples) - expected) \
        / np.linalg.norm(expected)
    assert err < 1e-7


def test_rescale_support_escape(work_grid):
    phi = make_gaussian_ring(work_grid, 5.2, 0.9, margin_threshold=None)
    with pytest.raises(DomainError):
        rescale(phi, 0.8)


def test_rescale_linear_scheme_coarse_agreement(work_ring):
    spectral = rescale(work_ring, 0.1, scheme="spectral")
    linear = rescale(work_ring, 0.1, scheme="linear")
    rel = np.linalg.norm(np.asarray(spectral.samples) - np.asarray(linear.samples))
    assert rel / np.linalg.norm(np.asarray(spectral.samples)) < 5e-2


# ---------------------------------------------------------------------------
# rotate
# ---------------------------------------------------------------------------

def _rz(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def test_rotate_identity(work_ring):
    out = rotate(work_ring, np.eye(3))
    assert np.array_equal(out.samples, work_ring.samples)


def test_rotate_rejects_non_rotation(work_ring):
    with pytest.raises(ValueError):
        rotate(work_ring, np.diag([1.0, 1.0, -1.0]))   # det = -1
    with pytest.raises(ValueError):
        rotate(work_ring, np.full((3, 3), 0.5))


def test_quarter_turn_exact_on_isotropic(work_grid):
    phi = make_gaussian_ring(work_grid, 3.0, 0.5)
    out = rotate(phi, _rz(math.pi / 2))
    assert np.max(np.abs(out.samples - phi.samples)) < 1e-14


def test_signed_permutation_detector():
    assert is_signed_permutation(_rz(math.pi / 2))
    assert not is_signed_permutation(_rz(math.pi / 3))


def test_quarter_turn_matches_brute_force(small_grid):
    phi = random_state(small_grid, seed=23)
    out = rotate(phi, _rz(math.pi / 2))
    # out(p) = in(R^-1 p) checked sample by sample through periodic index maps
    L = small_grid.points_per_axis
    arr = np.asarray(phi.samples)
    expect = np.empty_like(arr)
    for a in range(L):
        for b in range(L):
            # R^-1 (p_a, p_b) = (p_b, -p_a)
            expect[a, b, :] = arr[b, (-(a - L // 2) + L // 2) % L, :]
    assert np.max(np.abs(out.samples - expect)) == 0.0


def test_base_change_commutes_with_permutation_rotation(small_grid):
    phi = random_state(small_grid, seed=24)
    R = _rz(math.pi / 2)
    a = to_coordinate(rotate(phi, R)).samples
    b = rotate(to_coordinate(phi), R).samples
    assert np.max(np.abs(np.asarray(a) - np.asarray(b))) < 1e-15


def test_rotation_round_trip_30_degrees(work_ring_aniso):
    theta = math.radians(30.0)
    out = rotate(rotate(work_ring_aniso, _rz(theta)), _rz(-theta))
    rel = np.linalg.norm(np.asarray(out.samples) - np.asarray(work_ring_aniso.samples))
    assert rel / np.linalg.norm(np.asarray(work_ring_aniso.samples)) < 1e-5


def test_rotation_matches_analytic_profile(work_grid):
    phi = make_gaussian_ring(work_grid, 3.6, 0.78, direction=(1, 0, 0),
                             anisotropy=0.35, suppression_scale=1.9)
    theta = math.radians(30.0)
    out = rotate(phi, _rz(theta))
    pax = work_grid.momentum_axes()
    c, s = math.cos(theta), math.sin(theta)
    p1r = c * pax[0] + s * pax[1]
    w = work_grid.omega()
    winv = np.divide(1.0, w, out=np.zeros_like(w), where=w > 0)
    raw = (np.exp(-((w - 3.6) ** 2) / (2 * 0.78 ** 2))
           * (1 - np.exp(-(w ** 2) / (2 * 1.9 ** 2))) ** 2
           * (1 + 0.35 * p1r * winv))
    nrm_raw = (np.exp(-((w - 3.6) ** 2) / (2 * 0.78 ** 2))
               * (1 - np.exp(-(w ** 2) / (2 * 1.9 ** 2))) ** 2
               * (1 + 0.35 * pax[0] * winv))
    nrm = np.sqrt(np.sum(np.abs(nrm_raw) ** 2) * work_grid.dp ** 3)
    expected = np.broadcast_to(raw / nrm, work_grid.shape)
    err = np.linalg.norm(np.asarray(out.samples) - expected) / np.linalg.norm(expected)
    assert err < 1e-7


def test_rotation_about_diagonal_axis_is_permutation(small_grid):
    # 120 degrees about (1,1,1): cyclic coordinate permutation, exact path
    R = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    phi = random_state(small_grid, seed=25)
    out = rotate(phi, R)
    assert np.max(np.abs(np.asarray(out.samples)
                         - np.transpose(phi.samples, (1, 2, 0)))) == 0.0


def test_generic_rotation_unitary(work_ring_aniso):
    axis = np.array([1.0, 2.0, 0.5])
    axis /= np.linalg.norm(axis)
    theta = 0.7
    Kx = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]],
                   [-axis[1], axis[0], 0]])
    R = np.eye(3) + math.sin(theta) * Kx + (1 - math.cos(theta)) * (Kx @ Kx)
    out = rotate(work_ring_aniso, R)
    assert abs(out.norm() - work_ring_aniso.norm()) < 1e-8
    back = rotate(out, R.T)
    rel = np.linalg.norm(np.asarray(back.samples) - np.asarray(work_ring_aniso.samples))
    assert rel / np.linalg.norm(np.asarray(work_ring_aniso.samples)) < 1e-5


def test_two_dimensional_rotation():
    g = GridSpec(2, 32, 12.0)
    pax = g.momentum_axes()
    w = np.sqrt(sum(a * a for a in pax))
    samples = np.exp(-((w - 2.0) ** 2) / 0.5) * (1 + 0.3 * pax[0]
                                                 * np.divide(1, w, out=np.zeros_like(w),
                                                             where=w > 0))
    phi = MomentumState(g, samples.astype(complex))
    theta = math.radians(25.0)
    c, s = math.cos(theta), math.sin(theta)
    out = rotate(phi, np.array([[c, -s], [s, c]]))
    back = rotate(out, np.array([[c, s], [-s, c]]))
    rel = np.linalg.norm(np.asarray(back.samples) - np.asarray(phi.samples))
    assert rel / np.linalg.norm(np.asarray(phi.samples)) < 1e-6
