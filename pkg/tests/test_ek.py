import numpy as np
import pytest

from ekpara import (AdmissibilityError, EKParams, FourierField, ParameterError,
                    StateRP, StateU, TorusGrid, diag_frame,
                    diag_identity_residual, ek_rhs_exact, from_complex,
                    generator_matrix, involution_S, lambda_of, mass,
                    remainder_R, to_complex, vec_norm)


def const_params(**kw):
    ones = lambda r: np.ones_like(np.asarray(r, dtype=float))
    zeros = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    ident = lambda r: np.asarray(r, dtype=float)
    base = dict(mbar=1.0, K=ones, Kp=zeros, g=ident, m1=0.3, m2=2.0,
                delta=0.2)
    base.update(kw)
    return EKParams(**base)


@pytest.fixture
def grid():
    return TorusGrid(1, 32)


@pytest.fixture
def p():
    return const_params()


def state(grid, amp=0.1):
    x = grid.x_axis
    rho = FourierField.from_values(grid, amp * np.cos(x), real=True,
                                   zero_mean=True)
    phi = FourierField.from_values(grid, amp * np.sin(x), real=True,
                                   zero_mean=True)
    return StateRP(rho, phi)


def test_params_validation():
    with pytest.raises(ParameterError):
        const_params(m1=1.5)  # m1 > mbar
    with pytest.raises(ParameterError):
        const_params(delta=0.0)
    with pytest.raises(ParameterError):
        const_params(K=lambda r: -np.ones_like(np.asarray(r, dtype=float)))


def test_g_normalized_at_mean(p):
    assert p.g(np.array([p.mbar]))[0] == 0.0


def test_complex_transform_round_trip(grid, p):
    s = state(grid)
    U = to_complex(s, p)
    assert U.conjugacy_defect() < 1e-13
    s2 = from_complex(U, p)
    assert np.max(np.abs(s2.rho.coeffs - s.rho.coeffs)) < 1e-14
    assert np.max(np.abs(s2.phi.coeffs - s.phi.coeffs)) < 1e-14


def test_transform_scaling(grid):
    # K(mbar) = 4 => gamma = 1/4: u = (sqrt(2) rho + i phi / sqrt(2)) / sqrt(2)
    p4 = const_params(K=lambda r: 4.0 * np.ones_like(np.asarray(r,
                                                                dtype=float)))
    s = state(grid)
    U = to_complex(s, p4)
    q = (1.0 / 4.0) ** 0.25
    want = (s.rho.coeffs / q + 1j * q * s.phi.coeffs) / np.sqrt(2.0)
    assert np.max(np.abs(U.u.coeffs - want)) < 1e-15


def test_admissibility_error_names_window(grid, p):
    big = state(grid, amp=1.5)
    with pytest.raises(AdmissibilityError) as err:
        ek_rhs_exact(big, p)
    assert "0.3" in str(err.value) and "2.0" in str(err.value)


def test_rhs_linear_limit(grid, p):
    # infinitesimal data: rho_t ~ -mbar lap(phi), phi_t ~ -g'(mbar) rho + lap(rho)
    a = 1e-9
    s = state(grid, amp=a)
    out = ek_rhs_exact(s, p)
    jsq = grid.mode_abs() ** 2
    rho_lin = jsq * s.phi.coeffs       # -mbar * lap phi
    phi_lin = -s.rho.coeffs - jsq * s.rho.coeffs
    assert np.max(np.abs(out.rho.coeffs - rho_lin)) < 100 * a**2
    assert np.max(np.abs(out.phi.coeffs - phi_lin)) < 100 * a**2


def test_rhs_outputs_zero_mean(grid, p):
    out = ek_rhs_exact(state(grid), p)
    assert out.rho.mean() == 0.0
    assert out.phi.mean() == 0.0


def test_flat_generator_is_diagonal(grid, p):
    z = StateU(FourierField.zeros(grid, real=False),
               FourierField.zeros(grid, real=False))
    G = generator_matrix(z, p)
    jsq = (grid.mode_list().astype(float) ** 2).sum(axis=1)
    M = grid.n_points
    want = np.zeros((2 * M, 2 * M), dtype=complex)
    want[:M, :M] = np.diag(-1j * p.sqrt_mK * jsq)
    want[M:, M:] = np.diag(1j * p.sqrt_mK * jsq)
    assert np.max(np.abs(G - want)) == 0.0


def test_paralinearization_identity(grid, p):
    s = state(grid)
    U = to_complex(s, p)
    gen = generator_matrix(U, p)
    R = remainder_R(U, p, gen=gen)
    rhs = to_complex(ek_rhs_exact(s, p), p).vec()
    resid = rhs - gen @ U.vec() - R.vec()
    assert vec_norm(grid, resid, 0.0) < 1e-13


def test_lambda_bounds_and_flat_case(grid):
    pv = const_params(K=lambda r: 1.0 + 0.3 * np.asarray(r, dtype=float),
                      Kp=lambda r: 0.3 * np.ones_like(np.asarray(r,
                                                                 dtype=float)))
    U = to_complex(state(grid), pv)
    lam = lambda_of(U, pv).values().real
    assert np.all(lam >= pv.lambda_min - 1e-12)
    assert np.all(lam <= pv.lambda_max + 1e-12)

    pq = const_params(K=lambda r: 1.0 / np.asarray(r, dtype=float),
                      Kp=lambda r: -1.0 / np.asarray(r, dtype=float) ** 2)
    Uq = to_complex(state(grid), pq)
    assert np.max(np.abs(lambda_of(Uq, pq).values().real - 1.0)) < 1e-14


def test_diagonalizer_identities(grid):
    pv = const_params(K=lambda r: 1.0 + 0.3 * np.asarray(r, dtype=float),
                      Kp=lambda r: 0.3 * np.ones_like(np.asarray(r,
                                                                 dtype=float)))
    U = to_complex(state(grid, amp=0.2), pv)
    frame = diag_frame(U, pv)
    assert frame.det_defect() < 1e-13
    assert diag_identity_residual(U, pv) < 1e-13


def test_mass_reads_zero_mode(grid, p):
    s = state(grid)
    assert mass(s, p) == pytest.approx(1.0)


def test_involution_is_an_involution(grid, p):
    s = state(grid)
    ss = involution_S(involution_S(s))
    assert np.max(np.abs(ss.rho.coeffs - s.rho.coeffs)) == 0.0
    assert np.max(np.abs(ss.phi.coeffs - s.phi.coeffs)) == 0.0


def test_involution_on_values(grid, p):
    s = state(grid)
    flipped = involution_S(s)
    # rho(-x), -phi(-x): for rho = 0.1 cos x this is fixed; phi = 0.1 sin x too
    assert np.max(np.abs(flipped.rho.coeffs - s.rho.coeffs)) < 1e-15
    assert np.max(np.abs(flipped.phi.coeffs - s.phi.coeffs)) < 1e-15
