import numpy as np
import pytest

from ekpara import (FlowConfig, FourierField, SchemeConfig, StateRP, StateU,
                    TorusGrid, initial_flow, iterate, project_state,
                    reference_solve, reversibility_check, to_complex,
                    trajectory_mass_drift, vec_norm)
from ekpara.config import cfl_dt
from ekpara.scheme import continuity_probe, galerkin_study
from ekpara.suites import (algebraic_tail_state, random_state,
                           standard_params, standard_scenario)


@pytest.fixture
def setup():
    grid, s0 = standard_scenario(32)
    p = standard_params()
    return grid, s0, p


def test_initial_flow_is_exact_isometry(setup):
    grid, s0, p = setup
    U0 = to_complex(s0, p)
    cfg = FlowConfig(dt=1e-3, T=0.05)
    tr = initial_flow(U0, p, cfg)
    n0 = vec_norm(grid, U0.vec(), 2.0)
    for v in tr.states:
        assert vec_norm(grid, v, 2.0) == pytest.approx(n0, abs=1e-13)
    assert np.max(np.abs(tr.states[0] - U0.vec())) == 0.0


def test_initial_flow_single_mode_phase(setup):
    grid, _, p = setup
    U0 = StateU(FourierField.zeros(grid, real=False),
                FourierField.zeros(grid, real=False))
    J = grid.max_mode
    U0.u.coeffs[J + 1] = 1.0
    U0.ubar.coeffs[J - 1] = 1.0
    t = 0.3
    tr = initial_flow(U0, p, FlowConfig(dt=t, T=t))
    assert tr.final[J + 1] == pytest.approx(np.exp(-1j * p.sqrt_mK * t))
    M = grid.n_points
    assert tr.final[M + J - 1] == pytest.approx(np.exp(1j * p.sqrt_mK * t))


def test_iterate_zero_data_fixed_point(setup):
    grid, _, p = setup
    z = StateU(FourierField.zeros(grid, real=False),
               FourierField.zeros(grid, real=False))
    fc = FlowConfig(dt=1e-3, T=0.02)
    sc = SchemeConfig(s0=0.6, s=3.1)
    rep = iterate(z, p, fc, sc)
    assert rep.converged
    assert vec_norm(grid, rep.final_state.vec(), 0.6) == 0.0


def test_iterate_contracts_and_matches_reference(setup):
    grid, s0, p = setup
    dt = cfl_dt(grid, p)
    fc = FlowConfig(dt=dt, T=0.1)
    sc = SchemeConfig(s0=0.6, s=3.1)
    rep = iterate(to_complex(s0, p), p, fc, sc)
    assert rep.converged
    assert all(f <= 0.6 for f in rep.contraction_factors)
    assert rep.trace.diffs_s0[-1] <= sc.tol_fix
    assert min(rep.trace.margins) >= p.m1

    ref = reference_solve(s0, p, dt, rep.T_used, tol_ref=1e-10)
    err = vec_norm(grid, rep.final_state.vec() - ref.final, sc.s0)
    assert err < 1e-6  # coeff-freeze window is coarse at this resolution


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(s0=1.3, s=3.3)  # s0 = s - 2: strict inequality required


def test_reference_solver_order_four(setup):
    grid, s0, p = setup
    dt = cfl_dt(grid, p)
    f1 = reference_solve(s0, p, dt, 0.02, refine=False).final
    f2 = reference_solve(s0, p, dt / 2, 0.02, refine=False).final
    ref = reference_solve(s0, p, dt / 8, 0.02, refine=False).final
    e1 = np.linalg.norm(f1 - ref)
    e2 = np.linalg.norm(f2 - ref)
    assert e1 / e2 > 10.0


def test_reference_solver_conserves_mass(setup):
    grid, s0, p = setup
    dt = cfl_dt(grid, p)
    tr = reference_solve(s0, p, dt, 0.05, refine=False, complex_coords=False)
    assert trajectory_mass_drift(tr, p) < 1e-12


def test_linear_regime_dispersion(setup):
    # mode-1 frequency of the linearization: omega^2 = mbar K + mbar g'(mbar)
    grid, _, p = setup
    a = 1e-5
    x = grid.x_axis
    s = StateRP(
        FourierField.from_values(grid, a * np.cos(x), real=True,
                                 zero_mean=True),
        FourierField.zeros(grid))
    omega = np.sqrt(p.mbar * p.K(p.mbar) + p.mbar * 1.0)  # g'(mbar) = 1
    T = 2.0 * np.pi / omega
    dt = cfl_dt(grid, p)
    tr = reference_solve(s, p, dt, T, refine=False, complex_coords=False)
    back = StateRP.from_vec(grid, tr.final)
    rel = (np.max(np.abs(back.rho.coeffs - s.rho.coeffs))
           / np.max(np.abs(s.rho.coeffs)))
    assert rel < 1e-3  # one full period returns the profile


def test_reversibility_zero_time_and_small_time(setup):
    grid, s0, p = setup
    dt = cfl_dt(grid, p)
    defect = reversibility_check(s0, p, dt, 0.05, tol_ref=1e-10)
    assert defect < 5e-9


def test_galerkin_errors_decrease(setup):
    grid, s0, p = setup
    rng = np.random.default_rng(0)
    big = TorusGrid(1, 128)
    data = algebraic_tail_state(big, rng, 3.1)
    dt = cfl_dt(big, p)
    rows, slope = galerkin_study(data, p, dt, 0.005, [4, 8, 16], 3.1)
    errs = [e for _, e in rows]
    assert errs[0] >= errs[1] >= errs[2]
    assert slope < 0.0


def test_galerkin_bandlimited_data_exact(setup):
    grid, s0, p = setup
    dt = cfl_dt(grid, p)
    # s0 has modes +-1 only: projection at N >= 1 changes nothing
    rows, _ = galerkin_study(s0, p, dt, 0.005, [2, 4], 2.0)
    assert all(e < 1e-11 for _, e in rows)


def test_project_state_zeroes_tail(setup):
    grid, s0, p = setup
    rng = np.random.default_rng(1)
    s = random_state(grid, rng, p)
    cut = project_state(s, 3)
    absj = grid.mode_abs()
    assert np.all(cut.rho.coeffs[absj > 3] == 0.0)
    assert cut.rho.mean() == 0.0


def test_continuity_probe_monotone(setup):
    grid, s0, p = setup
    rng = np.random.default_rng(2)
    w = random_state(grid, rng, p, amp=1.0)
    dt = cfl_dt(grid, p)
    rows = continuity_probe(s0, w, [1e-2, 1e-3], p, dt, 0.02, 0.6)
    assert rows[0][1] > rows[1][1] > 0.0
