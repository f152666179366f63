"""Euler-Korteweg physics on the torus.

Complex coordinates, the quasilinear symbol matrices, the exact nonlinear
right-hand side, the remainder that closes the paralinearized form, and the
pointwise diagonalization frame.

States live in the zero-mean phase space: the density fluctuation rho and the
velocity potential phi are both real, zero-mean fields; the complex pair
(u, ubar) is their image under the scaling transform C^{-1}.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cutoff import CutoffParams
from .grid import FourierField, project_zero_mean, sobolev_norm
from .symbols import Symbol, assemble_bony_weyl


class AdmissibilityError(ValueError):
    """Density left the admissible window (m1, m2)."""


class ParameterError(ValueError):
    """Inconsistent physical parameters."""


@dataclass
class EKParams:
    """Physical data: mean density, capillarity K, pressure-type g, bounds.

    g is normalized at construction so that g(mbar) = 0.  The ellipticity
    window (m1, m2) must contain mbar; c_K, C_K are sampled bounds of K
    on that window.
    """

    mbar: float
    K: Callable[[np.ndarray], np.ndarray]
    Kp: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    m1: float
    m2: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.m1 < self.mbar < self.m2):
            raise ParameterError(
                f"need 0 < m1 < mbar < m2, got {self.m1}, {self.mbar}, {self.m2}")
        if self.delta <= 0.0:
            raise ParameterError("delta must be positive")
        if self.K(self.mbar) <= 0.0:
            raise ParameterError("K(mbar) must be positive")
        samples = np.linspace(self.m1, self.m2, 257)
        kv = np.asarray(self.K(samples), dtype=float)
        if np.any(kv <= 0.0):
            raise ParameterError("K must stay positive on (m1, m2)")
        self.c_K = float(kv.min())
        self.C_K = float(kv.max())
        g_raw = self.g
        g0 = float(g_raw(self.mbar))
        self.g = lambda r: np.asarray(g_raw(r)) - g0

    @property
    def sqrt_mK(self):
        return float(np.sqrt(self.mbar * self.K(self.mbar)))

    @property
    def gamma(self):
        """Scaling ratio mbar / K(mbar) of the complex transform."""
        return self.mbar / float(self.K(self.mbar))

    @property
    def lambda_min(self):
        return float(np.sqrt(self.m1 * self.c_K / (self.mbar * self.K(self.mbar))))

    @property
    def lambda_max(self):
        return float(np.sqrt(self.m2 * self.C_K / (self.mbar * self.K(self.mbar))))

    def margin(self, rho_values):
        """Distance of mbar + rho to the window edges (negative = violated)."""
        dens = self.mbar + np.asarray(rho_values, dtype=float)
        return float(min(dens.min() - self.m1, self.m2 - dens.max()))

    def require_admissible(self, rho_values, margin=0.0, what="state"):
        m = self.margin(rho_values)
        if m <= margin:
            raise AdmissibilityError(
                f"{what}: density margin {m:.3e} <= {margin:.3e} "
                f"(window ({self.m1}, {self.m2}))")
        return m


@dataclass
class StateRP:
    """Real coordinates: zero-mean density fluctuation and velocity potential."""

    rho: FourierField
    phi: FourierField

    @property
    def grid(self):
        return self.rho.grid

    def vec(self):
        return np.concatenate([self.rho.coeffs.ravel(),
                               self.phi.coeffs.ravel()])

    @classmethod
    def from_vec(cls, grid, v):
        M = grid.n_points
        return cls(FourierField(grid, v[:M].reshape(grid.shape), real=True,
                                zero_mean=True),
                   FourierField(grid, v[M:].reshape(grid.shape), real=True,
                                zero_mean=True))


@dataclass
class StateU:
    """Complex coordinates U = (u, ubar) with ubar = conj(u) pointwise."""

    u: FourierField
    ubar: FourierField

    @property
    def grid(self):
        return self.u.grid

    def vec(self):
        return np.concatenate([self.u.coeffs.ravel(),
                               self.ubar.coeffs.ravel()])

    @classmethod
    def from_vec(cls, grid, v):
        M = grid.n_points
        return cls(FourierField(grid, v[:M].reshape(grid.shape)),
                   FourierField(grid, v[M:].reshape(grid.shape)))

    def conjugacy_defect(self):
        """Max |ubar(x) - conj(u(x))| over the grid."""
        return float(np.max(np.abs(self.ubar.values()
                                   - np.conj(self.u.values()))))


def vec_norm(grid, v, sigma):
    """Sobolev sigma-norm of a two-component coefficient vector."""
    M = grid.n_points
    a = FourierField(grid, v[:M].reshape(grid.shape))
    b = FourierField(grid, v[M:].reshape(grid.shape))
    return float(np.sqrt(sobolev_norm(a, sigma) ** 2
                         + sobolev_norm(b, sigma) ** 2))


# -- complex coordinates -------------------------------------------------------


def to_complex(s, p):
    """(rho, phi) -> U = (u, ubar), the scaling transform C^{-1}."""
    if p.K(p.mbar) <= 0.0:
        raise ParameterError("K(mbar) must be positive")
    q = p.gamma**0.25  # (mbar / K(mbar))^{1/4}
    u = (s.rho.coeffs / q + 1j * q * s.phi.coeffs) / np.sqrt(2.0)
    ub = (s.rho.coeffs / q - 1j * q * s.phi.coeffs) / np.sqrt(2.0)
    g = s.grid
    return StateU(FourierField(g, u), FourierField(g, ub))


def from_complex(U, p):
    """U = (u, ubar) -> (rho, phi), the transform C."""
    q = p.gamma**0.25
    rho = q * (U.u.coeffs + U.ubar.coeffs) / np.sqrt(2.0)
    phi = 1j * (U.ubar.coeffs - U.u.coeffs) / (q * np.sqrt(2.0))
    g = U.grid
    return StateRP(FourierField(g, rho, real=True),
                   FourierField(g, phi, real=True))


def rho_values(U, p):
    """Density fluctuation of U on the base grid (real part enforced)."""
    return from_complex(U, p).rho.values().real


# -- symbol matrices -------------------------------------------------------------


def _ta_fields(U, p):
    g = U.grid
    rv = rho_values(U, p)
    p.require_admissible(rv, margin=0.0, what="symbol coefficients")
    kr = (np.asarray(p.K(p.mbar + rv), dtype=float)
          - p.K(p.mbar)) / p.K(p.mbar)
    ta_plus = 0.5 * (kr + rv / p.mbar)
    ta_minus = 0.5 * (kr - rv / p.mbar)
    return (FourierField.from_values(g, ta_plus, real=True),
            FourierField.from_values(g, ta_minus, real=True))


def _xi_sq(xi):
    return np.sum(xi * xi, axis=-1).astype(complex)


def symbols_A2(U, p):
    """2x2 matrix of second-order symbols sqrt(mbar K(mbar)) |xi|^2 (1 + ta)."""
    g = U.grid
    tap, tam = _ta_fields(U, p)
    c = p.sqrt_mK
    one_plus = FourierField(g, tap.coeffs.copy(), real=True)
    J = g.max_mode
    one_plus.coeffs[(J,) * g.dim] += 1.0
    mk = lambda f: Symbol.separable_symbol(
        f, 2.0, lambda xi: c * _xi_sq(xi),
        dm=[(lambda ax: (lambda xi: c * 2.0 * xi[..., ax]))(ax)
            for ax in range(g.dim)])
    diag = mk(one_plus)
    off = mk(tam)
    return [[diag, off], [off, diag]]


def gradient_fields(f):
    """Spectral gradient of a field, one component per axis."""
    g = f.grid
    comps = g.mode_grids()
    out = []
    for ax in range(g.dim):
        out.append(FourierField(g, f.coeffs * (1j * comps[ax]), real=f.real,
                                zero_mean=True))
    return out


def symbols_A1(U, p):
    """Diagonal first-order transport matrix: entries +/- grad(phi) . xi."""
    g = U.grid
    s = from_complex(U, p)
    grads = gradient_fields(s.phi)
    terms_plus = []
    for ax in range(g.dim):
        m = (lambda ax: (lambda xi: xi[..., ax].astype(complex)))(ax)
        dm = [(lambda val: (lambda xi: np.full(xi.shape[:-1], val,
                                               dtype=complex)))(
            1.0 if a2 == ax else 0.0) for a2 in range(g.dim)]
        terms_plus.append(Symbol.separable_symbol(grads[ax], 1.0, m, dm=dm))
    if g.dim == 1:
        top = terms_plus[0]
    else:
        top = terms_plus[0].plus(terms_plus[1])
        top.order = 1.0
    bottom = top.scaled(-1.0)
    bottom.order = 1.0
    zero = Symbol.multiplier(0.0, lambda xi: np.zeros(xi.shape[:-1],
                                                      dtype=complex),
                             dim=g.dim)
    return [[top, zero], [zero, bottom]]


def jop_bw_matrix(sym_matrix, grid, cutoff=CutoffParams()):
    """Assemble J Op^BW(A) as a dense (2M, 2M) block matrix, J = diag(-i, i)."""
    M = grid.n_points
    out = np.zeros((2 * M, 2 * M), dtype=complex)
    signs = (-1j, 1j)
    for r in range(2):
        for c in range(2):
            sym = sym_matrix[r][c]
            if sym is None:
                continue
            blk = assemble_bony_weyl(sym, grid, cutoff).matrix
            out[r * M:(r + 1) * M, c * M:(c + 1) * M] += signs[r] * blk
    return out


def generator_matrix(U, p, cutoff=CutoffParams()):
    """Unmollified linear generator J Op^BW(A2 + A1) at frozen coefficients."""
    grid = U.grid
    return (jop_bw_matrix(symbols_A2(U, p), grid, cutoff)
            + jop_bw_matrix(symbols_A1(U, p), grid, cutoff))


# -- exact nonlinear vector field ------------------------------------------------


def ek_rhs_exact(s, p):
    """Pseudospectral evaluation of the nonlinear system in (rho, phi).

    rho_t = -mbar Lap(phi) - div(rho grad(phi))
    phi_t = -|grad(phi)|^2 / 2 - g(mbar + rho) + K(mbar + rho) Lap(rho)
            + K'(mbar + rho) |grad(rho)|^2 / 2

    Products and compositions are evaluated on a 2x refined grid and
    truncated back; rho_t is exactly zero-mean, phi_t is projected.
    """
    g = s.grid
    P = 2 * g.points_per_axis
    jsq = sum(c.astype(float) ** 2 for c in g.mode_grids())

    rho_f = g.resample_values(s.rho.coeffs, P).real
    p.require_admissible(rho_f, margin=0.0, what="ek_rhs_exact")

    lap_phi = g.resample_values(-jsq * s.phi.coeffs, P).real
    lap_rho = g.resample_values(-jsq * s.rho.coeffs, P).real
    grad_phi = [g.resample_values(f.coeffs, P).real
                for f in gradient_fields(s.phi)]
    grad_rho = [g.resample_values(f.coeffs, P).real
                for f in gradient_fields(s.rho)]

    # rho_t: the divergence is taken spectrally, so its mean vanishes exactly
    flux = [g.truncate_values(rho_f * gp) for gp in grad_phi]
    comps = g.mode_grids()
    div = np.zeros(g.shape, dtype=complex)
    for ax in range(g.dim):
        div += 1j * comps[ax] * flux[ax]
    rho_t = -p.mbar * (-jsq * s.phi.coeffs) - div

    dens = p.mbar + rho_f
    phi_t_fine = (-0.5 * sum(gp * gp for gp in grad_phi)
                  - np.asarray(p.g(dens), dtype=float)
                  + np.asarray(p.K(dens), dtype=float) * lap_rho
                  + 0.5 * np.asarray(p.Kp(dens), dtype=float)
                  * sum(gr * gr for gr in grad_rho))
    phi_t = g.truncate_values(phi_t_fine)

    out = StateRP(FourierField(g, rho_t, real=True, zero_mean=True),
                  project_zero_mean(FourierField(g, phi_t, real=True)))
    return out


def remainder_R(U, p, cutoff=CutoffParams(), gen=None):
    """Semilinear remainder closing the paralinearized form.

    Defined as the exact difference between the full nonlinear vector field
    (in complex coordinates) and J Op^BW(A2 + A1) U, so the paralinearized
    system reproduces the nonlinear one identically on the grid.
    """
    grid = U.grid
    s = from_complex(U, p)
    du = to_complex(ek_rhs_exact(s, p), p).vec()
    if gen is None:
        gen = generator_matrix(U, p, cutoff)
    rvec = du - gen @ U.vec()
    return StateU.from_vec(grid, rvec)


# -- diagonalization frame --------------------------------------------------------


def lambda_values(U, p):
    rv = rho_values(U, p)
    dens = p.mbar + rv
    rad = dens * np.asarray(p.K(dens), dtype=float) / (p.mbar * p.K(p.mbar))
    if np.any(rad <= 0.0):
        bad = np.unravel_index(int(np.argmin(rad)), rad.shape)
        raise AdmissibilityError(
            f"eigenvalue radicand <= 0 at grid point index {bad} "
            f"(inadmissible state)")
    return np.sqrt(rad)


def lambda_of(U, p):
    """Eigen-symbol amplitude sqrt((mbar+rho) K(mbar+rho) / (mbar K(mbar)))."""
    return FourierField.from_values(U.grid, lambda_values(U, p), real=True)


@dataclass
class DiagFrame:
    """Pointwise diagonalizer F = [[f, g], [g, f]] with det F = 1."""

    lam: FourierField
    f: FourierField
    g_entry: FourierField

    def det_defect(self):
        fv = self.f.values().real
        gv = self.g_entry.values().real
        return float(np.max(np.abs(fv * fv - gv * gv - 1.0)))


def diag_frame(U, p):
    g = U.grid
    lam = lambda_values(U, p)
    tap, tam = _ta_fields(U, p)
    tav = tap.values().real
    tmv = tam.values().real
    rad = (1.0 + tav + lam) ** 2 - tmv**2
    if np.any(rad <= 0.0):
        bad = np.unravel_index(int(np.argmin(rad)), rad.shape)
        raise AdmissibilityError(
            f"diagonalizer radicand <= 0 at grid point index {bad}")
    den = np.sqrt(rad)
    fv = (1.0 + tav + lam) / den
    gv = -tmv / den
    return DiagFrame(FourierField.from_values(g, lam, real=True),
                     FourierField.from_values(g, fv, real=True),
                     FourierField.from_values(g, gv, real=True))


def diag_identity_residual(U, p):
    """Max pointwise residual of F^{-1} J [[1+ta+, ta-], [ta-, 1+ta+]] F = J lam."""
    frame = diag_frame(U, p)
    tap, tam = _ta_fields(U, p)
    a = 1.0 + tap.values().real
    b = tam.values().real
    f = frame.f.values().real
    ge = frame.g_entry.values().real
    lam = frame.lam.values().real

    # pointwise 2x2 products, J = diag(-i, i)
    # M = [[a, b], [b, a]];  JM = [[-i a, -i b], [i b, i a]]
    jm11, jm12, jm21, jm22 = -1j * a, -1j * b, 1j * b, 1j * a
    # F^{-1} = [[f, -g], [-g, f]]
    t11 = f * jm11 - ge * jm21
    t12 = f * jm12 - ge * jm22
    t21 = -ge * jm11 + f * jm21
    t22 = -ge * jm12 + f * jm22
    r11 = t11 * f + t12 * ge - (-1j * lam)
    r12 = t11 * ge + t12 * f
    r21 = t21 * f + t22 * ge
    r22 = t21 * ge + t22 * f - (1j * lam)
    res = max(float(np.max(np.abs(r))) for r in (r11, r12, r21, r22))
    return res


# -- structural maps ---------------------------------------------------------------


def mass(s, p):
    """Total mass mbar + mean(rho)."""
    return p.mbar + float(s.rho.mean().real)


def involution_S(s):
    """Reversibility involution (rho, phi)(x) -> (rho(-x), -phi(-x))."""
    g = s.grid
    rho = FourierField(g, np.flip(s.rho.coeffs), real=s.rho.real,
                       zero_mean=s.rho.zero_mean)
    phi = FourierField(g, -np.flip(s.phi.coeffs), real=s.phi.real,
                       zero_mean=s.phi.zero_mean)
    return StateRP(rho, phi)
