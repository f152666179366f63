"""Linear flows with frozen coefficients, mollified generators, and energies.

The Cauchy problem dV/dt = J Op^BW(A(U(t))) V + R(t) is integrated with a
piecewise-frozen generator: the symbol matrix is re-assembled from the
coefficient trajectory every `coeff_refresh` steps and held constant in
between.  An optional mollifier chi(eps lambda(x) |xi|^2) regularizes the
generator; the growth of Sobolev and modified-energy norms must then be
uniform in eps.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .cutoff import CutoffParams, chi
from .ek import (StateU, diag_frame, generator_matrix, jop_bw_matrix,
                 lambda_of, symbols_A1, symbols_A2, vec_norm)
from .grid import FourierField, TorusGrid
from .symbols import Symbol, assemble_bony_weyl


class FlowError(RuntimeError):
    """Time integration failed (step-size guard or mid-flight abort)."""


@dataclass
class FlowConfig:
    dt: float
    T: float
    flow_eps: Optional[float] = None  # None = plain truncated generator
    integrator: str = "rk4-fixed"
    tol: float = 1e-8
    coeff_refresh: int = 10  # generator refresh interval, in steps

    def __post_init__(self):
        if self.integrator not in ("rk4-fixed", "midpoint-implicit"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.dt <= 0.0 or self.T <= 0.0:
            raise ValueError("dt and T must be positive")
        if self.coeff_refresh < 1:
            raise ValueError("coeff_refresh must be >= 1")


@dataclass
class Trajectory:
    """Sampled two-component coefficient trajectory with linear interpolation."""

    grid: TorusGrid
    times: np.ndarray        # (n,)
    states: np.ndarray       # (n, 2M) complex

    def at(self, t):
        ts = self.times
        if t <= ts[0]:
            return self.states[0].copy()
        if t >= ts[-1]:
            return self.states[-1].copy()
        i = int(np.searchsorted(ts, t))
        if ts[i] == t:
            return self.states[i].copy()
        w = (t - ts[i - 1]) / (ts[i] - ts[i - 1])
        return (1.0 - w) * self.states[i - 1] + w * self.states[i]

    def state_at(self, t):
        return StateU.from_vec(self.grid, self.at(t))

    @property
    def final(self):
        return self.states[-1].copy()

    def sup_norm(self, sigma):
        return max(vec_norm(self.grid, v, sigma) for v in self.states)

    @classmethod
    def constant(cls, grid, vec, T):
        return cls(grid, np.array([0.0, T]), np.vstack([vec, vec]))


@dataclass
class EnergyProbe:
    """Time series of Sobolev norm and modified-energy norm at one sigma."""

    sigma: float
    samples: List[Tuple[float, float, float]]  # (t, ||V||_sigma, ||V||_{sigma,U})


def mollified_generator(U, p, flow_eps, cutoff=CutoffParams()):
    """J Op^BW((A2 + A1) chi(eps lambda(x) |xi|^2)); plain generator if eps is None."""
    grid = U.grid
    if flow_eps is None:
        return generator_matrix(U, p, cutoff)
    lam = lambda_of(U, p)
    A2 = symbols_A2(U, p)
    A1 = symbols_A1(U, p)
    lam_cache = {}

    def lam_fine(P):
        if P not in lam_cache:
            lam_cache[P] = grid.resample_values(lam.coeffs, P).real
        return lam_cache[P]

    def moll(r, c):
        s2, s1 = A2[r][c], A1[r][c]

        def sample(P, xi):
            xisq = float(np.dot(xi, xi))
            return ((s2.sample_uniform(P, xi) + s1.sample_uniform(P, xi))
                    * chi(flow_eps * lam_fine(P) * xisq))

        return Symbol.general(2.0, grid.dim, sample)

    mat = [[moll(r, c) for c in range(2)] for r in range(2)]
    return jop_bw_matrix(mat, grid, cutoff)


def generator_norm_bound(G):
    """Row-sum bound on the spectral radius of the assembled generator."""
    return float(np.max(np.sum(np.abs(G), axis=1)))


def max_stable_dt(G):
    """Largest dt satisfying the rk4-fixed step-size guard for this generator."""
    b = generator_norm_bound(G)
    return np.inf if b == 0.0 else 0.5 / b


def _steps(cfg):
    n = max(1, int(np.ceil(cfg.T / cfg.dt - 1e-12)))
    return n, cfg.T / n


def _rk4_window(G, v, t0, h, n, forcing_at, out, base):
    for i in range(n):
        t = t0 + i * h
        if forcing_at is None:
            k1 = G @ v
            k2 = G @ (v + 0.5 * h * k1)
            k3 = G @ (v + 0.5 * h * k2)
            k4 = G @ (v + h * k3)
        else:
            r0 = forcing_at(t)
            rm = forcing_at(t + 0.5 * h)
            r1 = forcing_at(t + h)
            k1 = G @ v + r0
            k2 = G @ (v + 0.5 * h * k1) + rm
            k3 = G @ (v + 0.5 * h * k2) + rm
            k4 = G @ (v + h * k3) + r1
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[base + i + 1] = v
    return v


def _midpoint_window(G, v, t0, h, n, forcing_at, out, base):
    M2 = G.shape[0]
    eye = np.eye(M2)
    lu = lu_factor(eye - 0.5 * h * G)
    plus = eye + 0.5 * h * G
    for i in range(n):
        t = t0 + i * h
        rhs = plus @ v
        if forcing_at is not None:
            rhs = rhs + h * forcing_at(t + 0.5 * h)
        v = lu_solve(lu, rhs)
        out[base + i + 1] = v
    return v


def solve_linear(coeffs_at, forcing_at, V0, p, cfg, cutoff=CutoffParams(),
                 generator_at=None):
    """Integrate dV/dt = J Op^BW(A(U(t))) V + R(t) with piecewise-frozen A.

    coeffs_at: t -> StateU giving the frozen coefficients (re-sampled every
    coeff_refresh steps); forcing_at: t -> flat (2M,) vector or None;
    generator_at: optional t -> matrix override (skips symbol assembly).
    Returns the fully sampled Trajectory.
    """
    V0 = np.asarray(V0, dtype=complex)
    grid = coeffs_at(0.0).grid
    n, h = _steps(cfg)
    out = np.empty((n + 1, V0.size), dtype=complex)
    out[0] = V0
    times = np.linspace(0.0, cfg.T, n + 1)
    v = V0.copy()
    step = 0
    while step < n:
        t0 = step * h
        width = min(cfg.coeff_refresh, n - step)
        if generator_at is not None:
            G = generator_at(t0)
        else:
            U = coeffs_at(t0)
            try:
                G = mollified_generator(U, p, cfg.flow_eps, cutoff)
            except Exception as exc:
                raise FlowError(f"generator assembly failed at t={t0:.6g}: {exc}")
        if cfg.integrator == "rk4-fixed":
            if h > max_stable_dt(G):
                raise FlowError(
                    f"dt={h:.3e} violates the step-size guard "
                    f"(max stable dt {max_stable_dt(G):.3e}) at t={t0:.6g}")
            v = _rk4_window(G, v, t0, h, width, forcing_at, out, step)
        else:
            v = _midpoint_window(G, v, t0, h, width, forcing_at, out, step)
        if not np.all(np.isfinite(v)):
            raise FlowError(f"non-finite state at t={(step + width) * h:.6g}")
        step += width
    return Trajectory(grid, times, out)


# -- modified energy -------------------------------------------------------------


def modified_energy(V, U, p, sigma, cutoff=CutoffParams()):
    """Real pairing 2 Re <Op^BW(lam^s |xi|^{2s}) W1, W1>, W1 = first row of
    Op^BW(F^{-1}) V.  Nonnegative up to roundoff; equals 2||v||_0^2 at
    sigma = 0 for the flat state."""
    grid = U.grid
    frame = diag_frame(U, p)
    op_f = assemble_bony_weyl(Symbol.x_function(frame.f), grid, cutoff).matrix
    op_g = assemble_bony_weyl(Symbol.x_function(frame.g_entry), grid,
                              cutoff).matrix
    vvec = V.u.coeffs.ravel()
    vbvec = V.ubar.coeffs.ravel()
    w1 = op_f @ vvec - op_g @ vbvec
    lam_sig = FourierField.from_values(
        grid, frame.lam.values().real**sigma, real=True)
    m = lambda xi: (np.sum(xi * xi, axis=-1)**sigma).astype(complex)
    weight = Symbol.separable_symbol(lam_sig, 2.0 * sigma, m)
    z1 = assemble_bony_weyl(weight, grid, cutoff).matrix @ w1
    return float(2.0 * np.real(np.vdot(w1, z1)))


def modified_norm(V, U, p, sigma, cutoff=CutoffParams()):
    return float(np.sqrt(max(modified_energy(V, U, p, sigma, cutoff), 0.0)))


def energy_trace(traj, U, p, sigma, cutoff=CutoffParams(), stride=1):
    """EnergyProbe along a trajectory against fixed coefficients U."""
    samples = []
    for i in range(0, len(traj.times), stride):
        t = float(traj.times[i])
        V = StateU.from_vec(traj.grid, traj.states[i])
        samples.append((t, vec_norm(traj.grid, traj.states[i], sigma),
                        modified_norm(V, U, p, sigma, cutoff)))
    if (len(traj.times) - 1) % stride != 0:
        t = float(traj.times[-1])
        V = StateU.from_vec(traj.grid, traj.states[-1])
        samples.append((t, vec_norm(traj.grid, traj.states[-1], sigma),
                        modified_norm(V, U, p, sigma, cutoff)))
    return EnergyProbe(sigma, samples)


def fit_growth_constant(probe):
    """Smallest C with |d/dt E(t)| <= C * ||V||_sigma^2 along the sampled trace,
    E the squared modified-energy norm (finite differences between samples)."""
    best = 0.0
    s = probe.samples
    for (t0, n0, e0), (t1, n1, e1) in zip(s[:-1], s[1:]):
        if t1 == t0:
            continue
        rate = abs(e1**2 - e0**2) / (t1 - t0)
        denom = max(n0, n1) ** 2
        if denom > 0:
            best = max(best, rate / denom)
    return best


def energy_growth_probe(U, V0, p, cfg, sigma, eps_list, cutoff=CutoffParams()):
    """Sup-norm growth ratios of the mollified flow per eps, plus the
    eps-Cauchy differences sup_t ||V^eps - V^{eps/2}||_sigma."""
    grid = U.grid
    n0 = vec_norm(grid, V0, sigma)
    if n0 == 0.0:
        raise ValueError("V0 must be nonzero")
    coeffs_at = lambda t: U
    runs = {}

    def run(eps):
        if eps not in runs:
            sub = FlowConfig(dt=cfg.dt, T=cfg.T, flow_eps=eps,
                             integrator=cfg.integrator, tol=cfg.tol,
                             coeff_refresh=10**9)
            runs[eps] = solve_linear(coeffs_at, None, V0, p, sub, cutoff)
        return runs[eps]

    ratios, cauchy = {}, {}
    for eps in eps_list:
        tr = run(eps)
        ratios[eps] = tr.sup_norm(sigma) / n0
        half = run(eps / 2.0)
        diff = tr.states - half.states
        cauchy[eps] = max(vec_norm(grid, d, sigma) for d in diff)
    return ratios, cauchy
