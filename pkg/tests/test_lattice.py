import math

import numpy as np
import pytest

from nwplab import (CoordinateState, DomainError, FockSum, GridMismatchError,
                    GridSpec, MomentumState, check_margins, convert_normalization,
                    inner_product, load_state, make_gaussian_ring, random_state,
                    save_state, to_coordinate)


def test_grid_duality_exact():
    g = GridSpec(3, 64, 20.0)
    assert g.dx * g.dp * g.points_per_axis == pytest.approx(2 * math.pi, rel=0, abs=1e-15)
    assert g.momentum_extent == pytest.approx(math.pi * 64 / 20.0)
    assert g.shape == (64, 64, 64)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(4, 8, 1.0)
    with pytest.raises(ValueError):
        GridSpec(2, 7, 1.0)
    with pytest.raises(ValueError):
        GridSpec(2, 8, -1.0)


def test_momentum_values_cover_half_open_box():
    g = GridSpec(1, 8, 4.0)
    p = g.momentum_values()
    assert p[0] == pytest.approx(-g.momentum_extent)
    assert p[-1] == pytest.approx(g.momentum_extent - g.dp)
    assert p[g.points_per_axis // 2] == 0.0


def test_inner_product_examples(work_grid, work_ring):
    # normalized state
    assert inner_product(work_ring, work_ring) == pytest.approx(1.0, abs=1e-12)
    # sesquilinearity in the second slot
    val = inner_product(work_ring, 1j * work_ring)
    assert val == pytest.approx(1j * work_ring.norm() ** 2, abs=1e-12)
    # disjoint supports
    a = make_gaussian_ring(work_grid, 2.2, 0.25, margin_threshold=None)
    b = make_gaussian_ring(work_grid, 5.4, 0.25, margin_threshold=None)
    assert abs(inner_product(a, b)) < 1e-14


def test_inner_product_mismatch_errors(work_grid, work_ring):
    other = MomentumState(GridSpec(3, 8, 6.0), np.ones((8, 8, 8), dtype=complex))
    with pytest.raises(GridMismatchError):
        inner_product(work_ring, other)
    f = to_coordinate(work_ring)
    with pytest.raises(GridMismatchError):
        inner_product(work_ring, f)


def test_conjugate_symmetry_random(small_grid):
    a = random_state(small_grid, seed=3)
    b = random_state(small_grid, seed=4)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), abs=1e-13)


def test_convert_normalization_round_trip(work_ring):
    there = convert_normalization(work_ring, "to_covariant")
    assert there.normalization == "covariant"
    back = convert_normalization(there, "to_noncovariant")
    assert np.max(np.abs(back.samples - work_ring.samples)) < 1e-14


def test_convert_normalization_single_mode():
    # mode at |p| = 2 with value 1 gains a factor sqrt(2 omega) = 2
    g = GridSpec(3, 8, 2 * math.pi)   # dp = 1, so (2, 0, 0) is on the grid
    samples = np.zeros(g.shape, dtype=complex)
    idx = (g.points_per_axis // 2 + 2, g.points_per_axis // 2, g.points_per_axis // 2)
    samples[idx] = 1.0
    state = MomentumState(g, samples)
    out = convert_normalization(state, "to_noncovariant")
    assert out.samples[idx] == pytest.approx(2.0)


def test_zero_mode_policy():
    g = GridSpec(3, 8, 6.0)
    samples = np.zeros(g.shape, dtype=complex)
    samples[g.zero_index] = 1.0
    out = convert_normalization(MomentumState(g, samples), "to_covariant")
    assert out.samples[g.zero_index] == 0.0


def test_ring_construction(work_grid):
    phi = make_gaussian_ring(work_grid, 3.0, 0.5)
    assert phi.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(phi.samples[work_grid.zero_index]) < 1e-12
    # envelope bound relative to the peak
    w = work_grid.omega()
    envelope = np.exp(-((w - 3.0) ** 2) / (2 * 0.5 ** 2))
    ratio = np.abs(phi.samples) / (np.max(np.abs(phi.samples)) * np.maximum(envelope, 1e-300))
    assert np.max(ratio) < 1.0 + 1e-12


def test_ring_isotropy_under_axis_permutation(work_grid):
    phi = make_gaussian_ring(work_grid, 3.0, 0.5)
    assert np.max(np.abs(np.transpose(phi.samples, (1, 0, 2)) - phi.samples)) < 1e-14


def test_ring_energy_against_grid_sum(work_grid):
    phi = make_gaussian_ring(work_grid, 3.0, 0.5)
    w = work_grid.omega()
    energy = float(np.sum(w * np.abs(phi.samples) ** 2) * work_grid.dp ** 3)
    assert abs(energy - 3.0) < 0.1


def test_ring_margin_violations(work_grid):
    with pytest.raises(DomainError, match="origin"):
        make_gaussian_ring(work_grid, 1.0, 0.3)
    with pytest.raises(DomainError, match="momentum box"):
        make_gaussian_ring(work_grid, 8.0, 0.6)
    with pytest.raises(DomainError, match="rim"):
        # far too narrow: its coordinate profile floods the box
        make_gaussian_ring(work_grid, 3.0, 0.22)


def test_check_margins_reports_level(work_ring):
    level = check_margins(work_ring, threshold=1.0)
    assert 0 < level < 1e-6


def test_fock_sum_reduces_to_inner_product(work_grid, work_ring, work_ring_aniso):
    a = FockSum.product(work_ring)
    b = FockSum.product(work_ring_aniso)
    assert a.inner_product(b) == pytest.approx(inner_product(work_ring, work_ring_aniso),
                                               abs=1e-12)


def test_fock_sum_two_particle_norm(small_grid):
    f = random_state(small_grid, seed=11)
    g = random_state(small_grid, seed=12)
    psi = FockSum.product(f, g)
    ff = inner_product(f, f)
    gg = inner_product(g, g)
    fg = inner_product(f, g)
    expected = ff * gg + fg * np.conj(fg)
    assert psi.inner_product(psi) == pytest.approx(expected, rel=1e-12)


def test_fock_sum_validation(small_grid):
    f = random_state(small_grid, seed=1)
    with pytest.raises(ValueError):
        FockSum(2, ((1.0, (f,)),))
    with pytest.raises(GridMismatchError):
        FockSum(1, ((1.0, (random_state(GridSpec(3, 8, 5.0), seed=1),)),
                    (1.0, (f,))))


def test_container_round_trip(tmp_path, work_ring):
    path = tmp_path / "state.nwp"
    save_state(work_ring, path)
    back = load_state(path)
    assert isinstance(back, MomentumState)
    assert back.grid == work_ring.grid
    assert back.normalization == "noncovariant"
    assert np.array_equal(back.samples, work_ring.samples)


def test_container_coordinate_state(tmp_path, work_ring):
    f = to_coordinate(work_ring)
    path = tmp_path / "coord.nwp"
    save_state(f, path)
    back = load_state(path)
    assert isinstance(back, CoordinateState)
    assert np.array_equal(back.samples, f.samples)


def test_container_rejects_garbage(tmp_path):
    path = tmp_path / "bad.nwp"
    path.write_bytes(b"not a container")
    with pytest.raises(ValueError):
        load_state(path)


def test_state_immutability(work_ring):
    with pytest.raises(ValueError):
        work_ring.samples[0, 0, 0] = 1.0
