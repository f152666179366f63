import numpy as np
import pytest

from ekpara import (CutoffParams, FourierField, Symbol, SymbolError,
                    TorusGrid, assemble_bony_weyl, assemble_standard,
                    assemble_weyl, chi, compose_symbol, dealiased_product,
                    paraproduct_decompose, project_zero_mean,
                    seminorm_estimate, sobolev_norm, weyl_to_standard)
from ekpara.symbols import poisson_bracket_values


@pytest.fixture
def grid():
    return TorusGrid(1, 32)


def rand_field(grid, seed, decay=1.5):
    rng = np.random.default_rng(seed)
    c = grid.forward(rng.standard_normal(grid.shape))
    w = np.maximum(1.0, grid.mode_abs()) ** (-decay)
    return project_zero_mean(FourierField(grid, c * w, real=True))


def xisq(xi):
    return np.sum(xi * xi, axis=-1).astype(complex)


def test_cutoff_plateaus():
    r = np.array([0.0, 1.0, 1.05, 1.1, 1.9, 2.5])
    v = chi(r)
    assert np.all(v[:4] == 1.0)
    assert np.all(v[4:] == 0.0)
    mid = chi(np.array([1.5]))
    assert 0.0 < mid[0] < 1.0


def test_cutoff_eps_validation():
    with pytest.raises(ValueError):
        CutoffParams(cutoff_eps=0.25)
    with pytest.raises(ValueError):
        CutoffParams(cutoff_eps=0.0)


def test_multiplier_quantization_is_diagonal(grid):
    a = Symbol.multiplier(2.0, xisq, dim=1)
    op = assemble_weyl(a, grid)
    modes = grid.mode_list()[:, 0].astype(float)
    expected = np.diag(modes**2)
    assert np.max(np.abs(op.matrix - expected)) < 1e-13


def test_x_function_weyl_entries(grid):
    f = rand_field(grid, 0)
    op = assemble_weyl(Symbol.x_function(f), grid)
    J = grid.max_mode
    modes = grid.mode_list()[:, 0]
    # entry (j, k) is the coefficient of f at j - k, zero outside the band
    for j, k in [(3, 1), (-2, 4), (J, -J)]:
        r, c = j + J, k + J
        n = j - k
        want = f.coeffs[n + J] if abs(n) <= J else 0.0
        assert abs(op.matrix[r, c] - want) < 1e-13


def test_bony_weyl_band_is_exact(grid):
    f = rand_field(grid, 1)
    op = assemble_bony_weyl(Symbol.x_function(f), grid)
    assert op.support_band == pytest.approx(1.9 * 0.125)
    modes = grid.mode_list()[:, 0].astype(float)
    n = np.abs(modes[:, None] - modes[None, :])
    br = np.maximum(1.0, np.abs(modes[:, None] + modes[None, :]))
    assert np.all(op.matrix[n >= 1.9 * 0.125 * br] == 0.0)


def test_weyl_real_symbol_is_hermitian(grid):
    f = rand_field(grid, 2)
    a = Symbol.separable_symbol(f, 2.0, xisq)
    M = assemble_weyl(a, grid).matrix
    assert np.max(np.abs(M - M.conj().T)) < 1e-12


def test_change_of_quantization(grid):
    f = rand_field(grid, 3)
    a = Symbol.separable_symbol(f, 0.0,
                                lambda xi: np.cos(0.1 * xi[..., 0]) + 2.0)
    W = assemble_weyl(a, grid).matrix
    S = assemble_standard(weyl_to_standard(a, grid), grid).matrix
    assert np.max(np.abs(W - S)) < 1e-12


def test_paraproduct_partition_is_exact(grid):
    u = rand_field(grid, 4)
    v = rand_field(grid, 5)
    lu, lv, rem = paraproduct_decompose(u, v)
    total = lu.coeffs + lv.coeffs + rem.coeffs
    prod = dealiased_product(u, v)
    assert np.max(np.abs(total - prod.coeffs)) < 1e-14


def test_paraproduct_of_constants_lands_in_remainder(grid):
    # theta(0, 0) = -1: the remainder carries the product of the means
    one = FourierField.from_values(grid, np.ones(grid.shape), real=True)
    lu, lv, rem = paraproduct_decompose(one, one)
    total = lu.coeffs + lv.coeffs + rem.coeffs
    prod = dealiased_product(one, one)
    assert np.max(np.abs(total - prod.coeffs)) < 1e-14


def test_xi_derivative_analytic_vs_fd(grid):
    f = rand_field(grid, 6)
    a_fd = Symbol.separable_symbol(f, 2.0, xisq)  # no dm: finite differences
    a_an = Symbol.separable_symbol(f, 2.0, xisq,
                                   dm=[lambda xi: 2.0 * xi[..., 0]])
    P = grid.points_per_axis
    for xi in (np.array([3.0]), np.array([-7.5])):
        d_fd = a_fd.xi_derivative(0).sample_uniform(P, xi)
        d_an = a_an.xi_derivative(0).sample_uniform(P, xi)
        # |xi|^2 is quadratic: centered differences are exact
        assert np.max(np.abs(d_fd - d_an)) < 1e-11


def test_poisson_bracket_single_modes(grid):
    # a = e^{ix} xi^2, b = e^{2ix} xi: {a, b} = 3i xi^2 e^{3ix}
    fa = FourierField.from_values(grid, np.exp(1j * grid.x_axis))
    fb = FourierField.from_values(grid, np.exp(2j * grid.x_axis))
    a = Symbol.separable_symbol(fa, 2.0, xisq, dm=[lambda xi: 2 * xi[..., 0]])
    b = Symbol.separable_symbol(fb, 1.0, lambda xi: xi[..., 0].astype(complex),
                                dm=[lambda xi: np.ones(xi.shape[:-1],
                                                       dtype=complex)])
    P = grid.points_per_axis
    xi = np.array([2.0])
    got = poisson_bracket_values(a, b, P, xi)
    xf = 2.0 * np.pi * np.arange(P) / P
    want = 3j * xi[0] ** 2 * np.exp(3j * xf)
    assert np.max(np.abs(got - want)) < 1e-12


def test_compose_symbol_orders(grid):
    f = rand_field(grid, 7)
    a = Symbol.separable_symbol(f, 2.0, xisq, dm=[lambda xi: 2 * xi[..., 0]])
    low = compose_symbol(a, a, 1.0, grid)
    high = compose_symbol(a, a, 2.0, grid)
    assert low.order == 4.0 and high.order == 4.0
    with pytest.raises(SymbolError):
        compose_symbol(a, a, 2.5, grid)
    # at rho <= 1 the composition is the plain product
    P = grid.points_per_axis
    xi = np.array([4.0])
    prod = a.sample_uniform(P, xi) ** 2
    assert np.max(np.abs(low.sample_uniform(P, xi) - prod)) < 1e-12


def test_seminorm_of_pure_multiplier(grid):
    a = Symbol.multiplier(2.0, xisq, dm=[lambda xi: 2.0 * xi[..., 0]], dim=1)
    # sup_xi <xi>^{-2} |xi|^2 = 1 at large xi, attained on the lattice
    val = seminorm_estimate(a, 2.0, ("Linf",), 0, grid, xi_radius=8)
    assert 0.9 < val <= 1.01


def test_sampler_shape_errors(grid):
    bad = Symbol.general(0.0, 1, lambda P, xi: np.zeros(3))
    with pytest.raises(SymbolError):
        bad.sample_uniform(grid.points_per_axis, np.array([1.0]))
    a = Symbol.multiplier(0.0, lambda xi: np.ones(xi.shape[:-1]), dim=1)
    with pytest.raises(SymbolError):
        a.sample_uniform(5, np.array([1.0, 2.0]))  # wrong xi dimension
