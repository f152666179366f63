import numpy as np
import pytest

from ekpara import (FourierField, GridError, TorusGrid, dealiased_product,
                    holder_norm_estimate, lp_block, lp_block_count,
                    project_low, project_zero_mean, sobolev_norm)
from ekpara.grid import homogeneous_norm, lp_partial


@pytest.fixture
def grid():
    return TorusGrid(1, 64)


def test_grid_invariants(grid):
    assert grid.max_mode == 31
    assert grid.points_per_axis == 63
    assert grid.n_points == len(grid.mode_list())


def test_grid_rejects_bad_sizes():
    with pytest.raises(GridError):
        TorusGrid(1, 65)
    with pytest.raises(GridError):
        TorusGrid(1, 2)
    with pytest.raises(GridError):
        TorusGrid(3, 64)


def test_transform_round_trip(grid):
    rng = np.random.default_rng(0)
    vals = rng.standard_normal(grid.shape)
    back = grid.inverse(grid.forward(vals))
    assert np.max(np.abs(back - vals)) < 1e-13


def test_cosine_coefficients(grid):
    f = FourierField.from_values(grid, np.cos(3 * grid.x_axis), real=True)
    J = grid.max_mode
    assert abs(f.coeffs[J + 3] - 0.5) < 1e-14
    assert abs(f.coeffs[J - 3] - 0.5) < 1e-14
    others = np.abs(f.coeffs)
    others[J + 3] = others[J - 3] = 0.0
    assert np.max(others) < 1e-14


def test_resample_is_exact_upsampling(grid):
    f = FourierField.from_values(grid, np.cos(5 * grid.x_axis), real=True)
    P = 2 * grid.points_per_axis
    fine = grid.resample_values(f.coeffs, P)
    assert np.max(np.abs(fine.real - np.cos(5 * grid.fine_axis(P)))) < 1e-13


def test_truncate_inverts_resample(grid):
    rng = np.random.default_rng(1)
    f = FourierField.from_values(grid, rng.standard_normal(grid.shape))
    fine = grid.resample_values(f.coeffs, 3 * grid.points_per_axis)
    assert np.max(np.abs(grid.truncate_values(fine) - f.coeffs)) < 1e-13


def test_dealiased_product_exact(grid):
    x = grid.x_axis
    u = FourierField.from_values(grid, np.cos(7 * x), real=True)
    v = FourierField.from_values(grid, np.cos(9 * x), real=True)
    w = dealiased_product(u, v)
    expected = FourierField.from_values(
        grid, 0.5 * np.cos(2 * x) + 0.5 * np.cos(16 * x), real=True)
    assert np.max(np.abs(w.coeffs - expected.coeffs)) < 1e-14


def test_dealiased_product_drops_out_of_band(grid):
    # 30 + 30 = 60 is outside the retained set: product must be mean 1/2 only
    u = FourierField.from_values(grid, np.cos(30 * grid.x_axis), real=True)
    w = dealiased_product(u, u)
    expected = FourierField.from_values(
        grid, 0.5 * np.ones(grid.shape), real=True)
    assert np.max(np.abs(w.coeffs - expected.coeffs)) < 1e-14


def test_sobolev_norm_single_pair(grid):
    f = FourierField.from_values(grid, np.cos(4 * grid.x_axis), real=True)
    expected = np.sqrt(2 * 0.25 * 4.0 ** (2 * 1.5))
    assert abs(sobolev_norm(f, 1.5) - expected) < 1e-13
    # zero mode weighs 1
    g = FourierField.from_values(grid, np.ones(grid.shape), real=True)
    assert abs(sobolev_norm(g, 2.0) - 1.0) < 1e-14
    assert homogeneous_norm(g, 2.0) < 1e-12  # roundoff in the FFT tail


def test_projectors(grid):
    rng = np.random.default_rng(2)
    f = FourierField.from_values(grid, 1.0 + rng.standard_normal(grid.shape))
    z = project_zero_mean(f)
    assert z.mean() == 0.0
    low = project_low(f, 5)
    absj = grid.mode_abs()
    assert np.all(low.coeffs[absj > 5] == 0.0)
    assert low.mean() == 0.0


def test_lp_partition_sums_to_identity(grid):
    rng = np.random.default_rng(3)
    f = FourierField.from_values(grid, rng.standard_normal(grid.shape))
    total = np.zeros(grid.shape, dtype=complex)
    for k in range(lp_block_count(grid) + 1):
        total += lp_block(f, k).coeffs
    assert np.max(np.abs(total - f.coeffs)) < 1e-13


def test_lp_partial_is_smooth_lowpass(grid):
    f = FourierField.from_values(grid, np.cos(16 * grid.x_axis), real=True)
    assert sobolev_norm(lp_partial(f, 2), 0.0) < 1e-13  # 16 >= 1.9 * 4
    full = lp_partial(f, 5)  # 16 <= 1.1 * 32: plateau
    assert abs(sobolev_norm(full, 0.0) - sobolev_norm(f, 0.0)) < 1e-14


def test_holder_estimate_rejects_negative_order(grid):
    f = FourierField.zeros(grid)
    with pytest.raises(ValueError):
        holder_norm_estimate(f, -0.5)


def test_json_round_trip(grid):
    rng = np.random.default_rng(4)
    f = project_zero_mean(
        FourierField.from_values(grid, rng.standard_normal(grid.shape),
                                 real=True))
    g = FourierField.from_json(f.to_json())
    assert g.grid == grid
    assert g.real and g.zero_mean
    assert np.max(np.abs(g.coeffs - f.coeffs)) == 0.0


def test_real_field_conjugate_symmetry(grid):
    rng = np.random.default_rng(5)
    f = FourierField.from_values(grid, rng.standard_normal(grid.shape),
                                 real=True)
    assert f.conj_symmetry_defect() < 1e-13
    f.validate()


def test_2d_round_trip():
    g2 = TorusGrid(2, 16)
    rng = np.random.default_rng(6)
    vals = rng.standard_normal(g2.shape)
    f = FourierField.from_values(g2, vals, real=True)
    assert np.max(np.abs(f.values().real - vals)) < 1e-13
    fine = g2.resample_values(f.coeffs, 2 * g2.points_per_axis)
    assert np.max(np.abs(g2.truncate_values(fine) - f.coeffs)) < 1e-13
