"""Experiment batteries with machine-checkable contracts.

Each check_* function returns a CheckResult; the five suites bundle them and
write deterministic CSV/JSON artifacts.  The thresholds encode the package's
quantitative contracts: exact algebraic identities at 1e-12, smoothing and
convergence rates with stated slack, and solver cross-validation bounds.
"""

import csv
import json
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .cutoff import CutoffParams
from .config import RunConfig, cfl_dt
from .ek import (EKParams, StateRP, StateU, diag_frame,
                 diag_identity_residual, ek_rhs_exact, generator_matrix,
                 lambda_of, mass, remainder_R, to_complex, vec_norm)
from .flow import (FlowConfig, Trajectory, energy_growth_probe, energy_trace,
                   modified_energy, solve_linear)
from .grid import (FourierField, TorusGrid, dealiased_product, project_low,
                   project_zero_mean, sobolev_norm)
from .scheme import (SchemeConfig, continuity_probe, galerkin_study, iterate,
                     reference_solve, reversibility_check,
                     trajectory_mass_drift)
from .symbols import (Symbol, assemble_bony_weyl, assemble_standard,
                      assemble_weyl, composition_remainder_probe,
                      paraproduct_decompose, weyl_to_standard)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    comparator: str = "<="
    details: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        msg = (f"[{status}] {self.name}: value={self.value:.6e} "
               f"{self.comparator} {self.threshold:.6e}")
        if self.details:
            msg += f"  ({self.details})"
        return msg


# -- shared scenario builders ---------------------------------------------------


def standard_params():
    """mbar = 1, K = 1, g(rho) = rho, window (0.3, 2.0)."""
    ones = lambda r: np.ones_like(np.asarray(r, dtype=float))
    zeros = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    ident = lambda r: np.asarray(r, dtype=float)
    return EKParams(mbar=1.0, K=ones, Kp=zeros, g=ident,
                    m1=0.3, m2=2.0, delta=0.2)


def qhd_params():
    """Quantum-hydrodynamics capillarity K(rho) = 1/rho (flat eigenvalue)."""
    inv = lambda r: 1.0 / np.asarray(r, dtype=float)
    dinv = lambda r: -1.0 / np.asarray(r, dtype=float) ** 2
    ident = lambda r: np.asarray(r, dtype=float)
    return EKParams(mbar=1.0, K=inv, Kp=dinv, g=ident,
                    m1=0.3, m2=2.0, delta=0.2)


def varying_K_params():
    """Nonconstant capillarity K(rho) = 1 + 0.3 rho (nontrivial diagonalizer)."""
    K = lambda r: 1.0 + 0.3 * np.asarray(r, dtype=float)
    Kp = lambda r: 0.3 * np.ones_like(np.asarray(r, dtype=float))
    ident = lambda r: np.asarray(r, dtype=float)
    return EKParams(mbar=1.0, K=K, Kp=Kp, g=ident, m1=0.3, m2=2.0, delta=0.2)


def standard_scenario(N_ax=128):
    """d=1, rho0 = 0.1 cos x, phi0 = 0.1 sin x on the N_ax grid."""
    grid = TorusGrid(1, N_ax)
    x = grid.x_axis
    rho = FourierField.from_values(grid, 0.1 * np.cos(x), real=True,
                                   zero_mean=True)
    phi = FourierField.from_values(grid, 0.1 * np.sin(x), real=True,
                                   zero_mean=True)
    return grid, StateRP(rho, phi)


def random_field(grid, rng, decay=2.0, amp=1.0, zero_mean=True):
    """Real random field with |j|^{-decay} spectrum."""
    c = grid.forward(rng.standard_normal(grid.shape))
    weights = np.maximum(1.0, grid.mode_abs()) ** (-decay)
    f = FourierField(grid, amp * c * weights, real=True)
    return project_zero_mean(f) if zero_mean else f


def random_state(grid, rng, p, amp=0.1, decay=3.0):
    """Random admissible state, rescaled if needed to respect the window."""
    rho = random_field(grid, rng, decay=decay, amp=amp)
    phi = random_field(grid, rng, decay=decay, amp=amp)
    margin = p.margin(rho.values().real)
    need = min(p.mbar - p.m1, p.m2 - p.mbar)
    if margin < 0.5 * need:
        scale = 0.4 * need / float(np.max(np.abs(rho.values().real)) + 1e-300)
        rho = FourierField(grid, scale * rho.coeffs, real=True, zero_mean=True)
        phi = FourierField(grid, scale * phi.coeffs, real=True, zero_mean=True)
    return StateRP(rho, phi)


def random_complex_vec(grid, rng, decay=3.0, amp=1.0):
    """Random (v, vbar)-structured coefficient vector with decaying spectrum."""
    s = StateRP(random_field(grid, rng, decay=decay, amp=amp),
                random_field(grid, rng, decay=decay, amp=amp))
    p = standard_params()
    return to_complex(s, p).vec()


# -- criteria 1-6: calculus -------------------------------------------------------


def check_paraproduct(n_pairs=100, N_ax=128, seed=0, cutoff=CutoffParams()):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        u = random_field(grid, rng, decay=1.5)
        v = random_field(grid, rng, decay=1.5)
        lu, lv, rem = paraproduct_decompose(u, v, cutoff)
        prod = dealiased_product(u, v)
        defect = sobolev_norm(
            FourierField(grid, prod.coeffs - lu.coeffs - lv.coeffs
                         - rem.coeffs), 0.0)
        rel = defect / (sobolev_norm(u, 0.0) * sobolev_norm(v, 0.0))
        worst = max(worst, rel)
    return CheckResult("paraproduct-exactness", worst <= 1e-12, worst, 1e-12,
                       details=f"{n_pairs} pairs, N_ax={N_ax}")


def check_band(N_ax=64, seed=1, cutoff=CutoffParams()):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    f = random_field(grid, rng, decay=1.0)
    sym = Symbol.separable_symbol(
        f, 2.0, lambda xi: np.sum(xi * xi, axis=-1).astype(complex))
    op = assemble_bony_weyl(sym, grid, cutoff)
    modes = grid.mode_list().astype(float)
    n = np.abs(modes[:, None, 0] - modes[None, :, 0])
    br = np.maximum(1.0, np.abs(modes[:, None, 0] + modes[None, :, 0]))
    off = np.abs(op.matrix)[n >= 1.9 * cutoff.cutoff_eps * br]
    leak = float(np.max(off)) if off.size else 0.0

    # constants map to constants
    const = FourierField.zeros(grid)
    const.coeffs[grid.max_mode] = 1.0
    out = op.apply(const).values()
    flat = float(np.max(np.abs(out - out.flat[0])))
    worst = max(leak, flat)
    return CheckResult("spectral-localization", worst == 0.0, worst, 0.0,
                       comparator="==", details="off-band leakage and "
                       "constant-preservation defect")


def _random_band_symbol(grid, rng, band=5):
    """Band-limited x-part times a bounded oscillatory multiplier."""
    f = project_low(random_field(grid, rng, decay=1.0), band)
    f.coeffs[grid.max_mode] = rng.standard_normal()  # allow a mean part
    alpha = rng.uniform(0.05, 0.2)
    m = lambda xi: (2.0 + np.cos(alpha * xi[..., 0])).astype(complex)
    sym = Symbol.separable_symbol(f, 0.0, m)
    sym.x_band = band
    return sym


def check_change_of_quantization(n_symbols=20, N_ax=32, seed=2):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_symbols):
        a = _random_band_symbol(grid, rng)
        W = assemble_weyl(a, grid).matrix
        S = assemble_standard(weyl_to_standard(a, grid), grid).matrix
        worst = max(worst, float(np.max(np.abs(W - S))))
    return CheckResult("change-of-quantization", worst <= 1e-12, worst, 1e-12,
                       details=f"{n_symbols} band-limited symbols, N_ax={N_ax}")


def check_composition(N_ax=512, seed=3, cutoff=CutoffParams()):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    xisq = lambda xi: np.sum(xi * xi, axis=-1).astype(complex)
    dxi = [lambda xi: 2.0 * xi[..., 0].astype(complex)]
    fa = project_low(random_field(grid, rng, decay=2.0), 4)
    fb = project_low(random_field(grid, rng, decay=2.0), 4)
    fa.coeffs[grid.max_mode] = 2.0  # keep the symbols elliptic-sized
    fb.coeffs[grid.max_mode] = 2.0
    a = Symbol.separable_symbol(fa, 2.0, xisq, dm=dxi)
    b = Symbol.separable_symbol(fb, 2.0, xisq, dm=dxi)
    slope, norms = composition_remainder_probe(a, b, 2.0, [3, 4, 5, 6, 7],
                                               grid, cutoff, rng)
    return CheckResult("composition-smoothing", slope <= 2.3, slope, 2.3,
                       details=f"LP levels 3..7, N_ax={N_ax}, "
                       f"norms={[f'{norms[k]:.3e}' for k in sorted(norms)]}")


def check_diagonalization(n_states=100, N_ax=64, seed=4):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    p = varying_K_params()
    worst_res = worst_det = 0.0
    lam_ok = True
    for _ in range(n_states):
        s = random_state(grid, rng, p)
        U = to_complex(s, p)
        worst_res = max(worst_res, diag_identity_residual(U, p))
        frame = diag_frame(U, p)
        worst_det = max(worst_det, frame.det_defect())
        lam = frame.lam.values().real
        lam_ok = lam_ok and bool(
            np.all(lam >= p.lambda_min - 1e-12)
            and np.all(lam <= p.lambda_max + 1e-12))
    pq = qhd_params()
    s = random_state(grid, rng, pq)
    lam_flat = float(np.max(np.abs(
        lambda_of(to_complex(s, pq), pq).values().real - 1.0)))
    worst = max(worst_res, worst_det, lam_flat)
    return CheckResult("diagonalization", worst <= 1e-12 and lam_ok, worst,
                       1e-12, details=f"{n_states} states; eigenvalue bounds "
                       f"respected: {lam_ok}; flat-capillarity defect "
                       f"{lam_flat:.2e}")


def check_paralinearization(n_states=100, N_ax=64, seed=5,
                            cutoff=CutoffParams()):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    p = varying_K_params()
    worst = 0.0
    for _ in range(n_states):
        s = random_state(grid, rng, p)
        U = to_complex(s, p)
        gen = generator_matrix(U, p, cutoff)
        R = remainder_R(U, p, cutoff, gen=gen)
        rhs = to_complex(ek_rhs_exact(s, p), p).vec()
        resid = rhs - gen @ U.vec() - R.vec()
        rel = (vec_norm(grid, resid, 0.0)
               / max(vec_norm(grid, rhs, 0.0), 1e-300))
        worst = max(worst, rel)
    return CheckResult("paralinearization-identity", worst <= 1e-12, worst,
                       1e-12, details=f"{n_states} states, N_ax={N_ax}")


# -- criteria 7-8: energies -------------------------------------------------------


def check_energy_eps_independence(N_ax=64, seed=6, sigma=1.0,
                                  cutoff=CutoffParams()):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    p = varying_K_params()
    U = to_complex(random_state(grid, rng, p, amp=0.2, decay=2.0), p)
    V0 = random_complex_vec(grid, rng, decay=3.0)
    dt = cfl_dt(grid, p)
    cfg = FlowConfig(dt=dt, T=0.1)
    eps_list = [1e-1, 1e-2, 1e-3]
    ratios, cauchy = energy_growth_probe(U, V0, p, cfg, sigma, eps_list,
                                         cutoff)
    vals = [ratios[e] for e in eps_list]
    spread = max(vals) / min(vals)
    diffs = [cauchy[e] for e in eps_list]
    monotone = all(a > b for a, b in zip(diffs[:-1], diffs[1:]))
    ok = spread <= 3.0 and monotone
    return CheckResult("energy-eps-independence", ok, spread, 3.0,
                       details=f"ratios={[f'{v:.4f}' for v in vals]}, "
                       f"cauchy={[f'{d:.3e}' for d in diffs]}, "
                       f"monotone={monotone}"), ratios, cauchy


def _fit_equivalence_constant(N_ax, n_samples, seed, sigma, cutoff):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    p = varying_K_params()
    C = 1.0
    for _ in range(n_samples):
        U = to_complex(random_state(grid, rng, p, amp=0.2, decay=2.0), p)
        Vv = random_complex_vec(grid, rng, decay=2.0)
        V = StateU.from_vec(grid, Vv)
        E = modified_energy(V, U, p, sigma, cutoff)
        ns = vec_norm(grid, Vv, sigma) ** 2
        nlow = vec_norm(grid, Vv, -2.0) ** 2
        C = max(C, E / ns)               # upper bound side
        if E + nlow > 0:
            C = max(C, ns / (E + nlow))  # lower bound side
    return C


def check_energy_equivalence(n_samples=100, seed=7, sigma=1.5,
                             cutoff=CutoffParams()):
    C1 = _fit_equivalence_constant(32, n_samples, seed, sigma, cutoff)
    C2 = _fit_equivalence_constant(64, n_samples, seed + 1, sigma, cutoff)
    ratio = max(C1, C2) / min(C1, C2)
    return CheckResult("energy-equivalence", ratio <= 1.5, ratio, 1.5,
                       details=f"fitted C at N_ax=32: {C1:.4f}, "
                       f"N_ax=64: {C2:.4f}")


# -- criterion 9: scheme ----------------------------------------------------------


def run_standard_scheme(N_ax=128, T=0.1, cutoff=CutoffParams(),
                        tol_ref=1e-10):
    grid, s0 = standard_scenario(N_ax)
    p = standard_params()
    dt = cfl_dt(grid, p)
    fc = FlowConfig(dt=dt, T=T)
    sc = SchemeConfig(s0=grid.dim / 2.0 + 0.1, s=grid.dim / 2.0 + 2.6)
    report = iterate(to_complex(s0, p), p, fc, sc, cutoff)
    ref = None
    if report.final_state is not None:
        ref = reference_solve(s0, p, dt, report.T_used, tol_ref=tol_ref,
                              complex_coords=False)
    return grid, s0, p, sc, report, ref


def check_scheme(N_ax=128, T=0.1, cutoff=CutoffParams(), precomputed=None):
    if precomputed is None:
        precomputed = run_standard_scheme(N_ax, T, cutoff)
    grid, s0, p, sc, report, ref = precomputed
    facs = report.contraction_factors
    ok_contr = (report.converged and len(facs) >= 1
                and all(f <= 0.6 for f in facs))
    if report.final_state is None or ref is None:
        return CheckResult("scheme-contraction-correctness", False,
                           float("nan"), 1e-6, details="scheme aborted")
    ref_vec = to_complex(StateRP.from_vec(grid, ref.final), p).vec()
    err = vec_norm(grid, report.final_state.vec() - ref_vec, sc.s0)
    drift = trajectory_mass_drift(ref, p)
    # scheme-side mass drift
    traj = report.trajectory
    masses = [mass(StateRP.from_vec(grid, v), p)
              for v in _complex_to_rp_states(traj, p)]
    sdrift = float(np.max(np.abs(np.asarray(masses) - masses[0])))
    worst_mass = max(drift, sdrift)
    ok = ok_contr and err <= 1e-6 and worst_mass <= 1e-12
    return CheckResult(
        "scheme-contraction-correctness", ok, err, 1e-6,
        details=f"factors={[f'{f:.3f}' for f in facs]}, "
        f"converged={report.converged}, T={report.T_used:.4g}, "
        f"mass drift={worst_mass:.2e}")


def _complex_to_rp_states(traj, p):
    from .ek import from_complex
    out = []
    for v in traj.states:
        out.append(from_complex(StateU.from_vec(traj.grid, v), p).vec())
    return out


# -- criteria 10-12: convergence and structure ---------------------------------------


def algebraic_tail_state(grid, rng, s, amp=0.05):
    """Real state whose coefficients decay exactly like <j>^{-s-1/2-0.01}."""
    J = grid.max_mode
    modes = np.arange(1, J + 1, dtype=float)
    decay = (1.0 + modes) ** (-s - 0.5 - 0.01)

    def one():
        c = np.zeros(grid.shape, dtype=complex)
        ph = rng.uniform(0.0, 2.0 * np.pi, J)
        half = decay * np.exp(1j * ph)
        c[J + 1:] = half
        c[:J] = np.conj(half[::-1])
        return FourierField(grid, amp * c, real=True, zero_mean=True)

    return StateRP(one(), one())


def check_galerkin(N_ax=256, seed=8, T=0.01):
    grid = TorusGrid(1, N_ax)
    rng = np.random.default_rng(seed)
    p = standard_params()
    sc_s0, sc_s = 0.6, 3.1
    s0 = algebraic_tail_state(grid, rng, sc_s)
    dt = cfl_dt(grid, p)
    rows, slope = galerkin_study(s0, p, dt, T, [8, 16, 32, 64], sc_s)
    target = -(sc_s - sc_s0 - 2.0)
    dev = abs(slope - target)
    errs = [e for _, e in rows]
    monotone = all(a >= b for a, b in zip(errs[:-1], errs[1:]))
    ok = dev <= 0.5 and monotone
    return CheckResult("galerkin-rate", ok, slope, target,
                       comparator=f"within 0.5 of",
                       details=f"errors={[f'{e:.3e}' for e in errs]}, "
                       f"monotone={monotone}"), rows


def check_reversibility(N_ax=128, t=0.05, tol_ref=1e-9):
    grid, s0 = standard_scenario(N_ax)
    p = standard_params()
    dt = cfl_dt(grid, p)
    defect = reversibility_check(s0, p, dt, t, tol_ref=tol_ref)
    thr = 50.0 * tol_ref
    return CheckResult("reversibility", defect <= thr, defect, thr,
                       details=f"t={t}, standard scenario, N_ax={N_ax}")


def check_continuity(N_ax=32, T=0.05, seed=9):
    grid, s0 = standard_scenario(N_ax)
    p = standard_params()
    rng = np.random.default_rng(seed)
    w = random_state(grid, rng, p, amp=1.0, decay=2.0)
    dt = cfl_dt(grid, p)
    rows = continuity_probe(s0, w, [1e-2, 1e-3, 1e-4], p, dt, T, 0.6)
    errs = [e for _, e in rows]
    ok = all(a > b for a, b in zip(errs[:-1], errs[1:]))
    val = max(errs[i + 1] / errs[i] for i in range(len(errs) - 1)) \
        if min(errs) > 0 else 0.0
    return CheckResult("flow-map-continuity", ok, val, 1.0, comparator="<",
                       details=f"errors={[f'{e:.3e}' for e in errs]}"), rows


# -- suite orchestration ------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def _write_results(out_dir, suite, results):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{suite}_results.json")
    payload = [{"name": r.name, "passed": r.passed, "value": r.value,
                "threshold": r.threshold, "details": r.details}
               for r in results]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def suite_calculus(cfg: RunConfig):
    results = [
        check_paraproduct(seed=cfg.seed, cutoff=cfg.cutoff),
        check_band(seed=cfg.seed + 1, cutoff=cfg.cutoff),
        check_change_of_quantization(seed=cfg.seed + 2),
        check_composition(seed=cfg.seed + 3, cutoff=cfg.cutoff),
        check_diagonalization(seed=cfg.seed + 4),
        check_paralinearization(seed=cfg.seed + 5, cutoff=cfg.cutoff),
    ]
    _write_results(cfg.out_dir, "calculus", results)
    return results


def suite_energy(cfg: RunConfig):
    r1, ratios, cauchy = check_energy_eps_independence(seed=cfg.seed + 6,
                                                       cutoff=cfg.cutoff)
    r2 = check_energy_equivalence(seed=cfg.seed + 7, cutoff=cfg.cutoff)
    rows = [(eps, ratios[eps], cauchy[eps]) for eps in sorted(ratios,
                                                              reverse=True)]
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_csv(os.path.join(cfg.out_dir, "energy_eps.csv"),
               ["eps", "growth_ratio", "cauchy_diff"], rows)
    results = [r1, r2]
    _write_results(cfg.out_dir, "energy", results)
    return results


def suite_scheme(cfg: RunConfig):
    pre = run_standard_scheme(cutoff=cfg.cutoff)
    result = check_scheme(precomputed=pre)
    _, _, _, _, report, _ = pre
    os.makedirs(cfg.out_dir, exist_ok=True)
    tr = report.trace
    rows = []
    for i in range(len(tr.norms_s0)):
        diff = tr.diffs_s0[i - 1] if 1 <= i <= len(tr.diffs_s0) else ""
        rows.append((i + 1, tr.norms_s0[i], tr.norms_s0p2[i], tr.norms_s[i],
                     diff, tr.margins[i]))
    _write_csv(os.path.join(cfg.out_dir, "iteration_trace.csv"),
               ["iterate", "norm_s0", "norm_s0p2", "norm_s", "diff_s0",
                "margin"], rows)
    with open(os.path.join(cfg.out_dir, "solve_report.json"), "w") as fh:
        json.dump({"T_used": report.T_used, "n_iters": report.n_iters,
                   "converged": report.converged,
                   "aborted_admissibility": report.aborted_admissibility,
                   "aborted_growth": report.aborted_growth,
                   "contraction_factors": report.contraction_factors},
                  fh, indent=2)
    if report.final_state is not None:
        with open(os.path.join(cfg.out_dir, "final_state.json"), "w") as fh:
            fh.write(json.dumps({"u": json.loads(report.final_state.u.to_json()),
                                 "ubar": json.loads(
                                     report.final_state.ubar.to_json())}))
    results = [result]
    _write_results(cfg.out_dir, "scheme", results)
    return results


def suite_convergence(cfg: RunConfig):
    r1, rows = check_galerkin(seed=cfg.seed + 8)
    r2, crows = check_continuity(seed=cfg.seed + 9)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_csv(os.path.join(cfg.out_dir, "galerkin.csv"),
               ["N", "sup_t_error"], rows)
    _write_csv(os.path.join(cfg.out_dir, "continuity.csv"),
               ["h", "sup_t_error"], crows)
    results = [r1, r2]
    _write_results(cfg.out_dir, "convergence", results)
    return results


def suite_reversibility(cfg: RunConfig):
    results = [check_reversibility()]
    _write_results(cfg.out_dir, "reversibility", results)
    return results


SUITES = {
    "calculus": suite_calculus,
    "energy": suite_energy,
    "scheme": suite_scheme,
    "convergence": suite_convergence,
    "reversibility": suite_reversibility,
}


def run_suite(cfg: RunConfig, name):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}, have {sorted(SUITES)}")
    results = SUITES[name](cfg)
    for r in results:
        print(r.line())
    failures = [r.name for r in results if not r.passed]
    return 0 if not failures else 1, results
