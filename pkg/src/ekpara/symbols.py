"""Finite-regularity symbols, quantizations, paraproducts, and symbolic composition.

A symbol a(x, xi) is represented by an evaluator: given a uniform refinement
of the base grid and a frequency xi in the half-integer lattice, it returns
the sampled values of x -> a(x, xi).  Separable symbols (x-part times
frequency multiplier) keep their factors so that operator assembly can skip
per-frequency transforms.

Quantizations follow the midpoint convention: the Weyl matrix entry couples
modes j, k through a-hat(j - k, (j + k) / 2); the Bony-Weyl operator
additionally filters the symbol frequency through the rescaled cutoff
chi((j - k) / (eps <j + k>)), which confines every assembled matrix to a band
|j - k| < 1.9 eps <j + k>.
"""

import json
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .cutoff import CutoffParams, chi
from .grid import FourierField, GridError, TorusGrid


class SymbolError(ValueError):
    """Symbol evaluation or capability failure."""


_FD_STEP = 0.5  # xi finite-difference step: one half-integer lattice spacing


def _as_xi(xi, dim):
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (dim,):
        raise SymbolError(f"frequency must have shape ({dim},), got {xi.shape}")
    return xi


class Symbol:
    """Order-m symbol with an x-sampler and optional analytic xi-derivatives."""

    def __init__(self, order, dim, sample_fn, dxi=None, x_band=None,
                 separable=None, tag=None):
        self.order = float(order)
        self.dim = int(dim)
        self._sample_fn = sample_fn
        self._dxi = dxi  # list of d symbols/callables or None
        self.x_band = x_band
        # separable = (x_coeffs_field_or_None, multiplier, d_multiplier_or_None)
        self.separable = separable
        self.tag = tag

    # -- constructors -------------------------------------------------------

    @classmethod
    def multiplier(cls, order, m, dm=None, dim=1, tag=None):
        """x-independent symbol a(xi) = m(xi); m maps (..., d) -> complex."""

        def sample(P, xi):
            val = m(xi[None, :])[0]
            return np.full((P,) * dim, val, dtype=complex)

        return cls(order, dim, sample, x_band=0,
                   separable=(None, m, dm), tag=tag)

    @classmethod
    def x_function(cls, f, order=0.0, tag=None):
        """xi-independent symbol from a FourierField."""
        grid = f.grid

        def sample(P, xi):
            return grid.resample_values(f.coeffs, P)

        one = lambda xi: np.ones(xi.shape[:-1], dtype=complex)
        return cls(order, grid.dim, sample, x_band=grid.max_mode,
                   separable=(f, one, [lambda xi: np.zeros(xi.shape[:-1])]
                              * grid.dim), tag=tag)

    @classmethod
    def separable_symbol(cls, f, order, m, dm=None, tag=None):
        """a(x, xi) = f(x) * m(xi) with f a FourierField."""
        grid = f.grid

        def sample(P, xi):
            return grid.resample_values(f.coeffs, P) * m(xi[None, :])[0]

        return cls(order, grid.dim, sample, x_band=grid.max_mode,
                   separable=(f, m, dm), tag=tag)

    @classmethod
    def general(cls, order, dim, sample_fn, dxi=None, x_band=None, tag=None):
        return cls(order, dim, sample_fn, dxi=dxi, x_band=x_band, tag=tag)

    @classmethod
    def from_pointwise(cls, order, grid, fn, dxi_fns=None, tag=None):
        """Build from fn(xmesh_tuple, xi) evaluated on uniform refinements."""

        def sample(P, xi):
            axes = [2.0 * np.pi * np.arange(P) / P] * grid.dim
            mesh = np.meshgrid(*axes, indexing="ij")
            return np.asarray(fn(tuple(mesh), xi), dtype=complex)

        dxi = None
        if dxi_fns is not None:
            dxi = [cls.from_pointwise(order - 1.0, grid, g)
                   for g in dxi_fns]
        return cls(order, grid.dim, sample, dxi=dxi, tag=tag)

    # -- evaluation ---------------------------------------------------------

    def sample_uniform(self, P, xi):
        """Values of x -> a(x, xi) on the uniform P^d grid."""
        xi = _as_xi(xi, self.dim)
        try:
            out = np.asarray(self._sample_fn(P, xi), dtype=complex)
        except SymbolError:
            raise
        except Exception as exc:  # propagate with the offending frequency
            raise SymbolError(f"symbol evaluation failed at xi={xi}: {exc}")
        if out.shape != (P,) * self.dim:
            raise SymbolError(
                f"sampler returned shape {out.shape}, expected {(P,) * self.dim}")
        return out

    def evaluate(self, grid, xi):
        """Values of a(x, xi) on the base grid points for a fixed xi."""
        return self.sample_uniform(grid.points_per_axis, xi)

    def hat_uniform(self, P, xi):
        """Fourier coefficients in x of a(., xi), unshifted FFT layout mod P."""
        vals = self.sample_uniform(P, xi)
        return np.fft.fftn(vals) / P**self.dim

    # -- derivatives --------------------------------------------------------

    def xi_derivative(self, axis):
        """d/d xi_axis, analytic when available, else centered differences."""
        if self._dxi is not None:
            d = self._dxi[axis]
            if isinstance(d, Symbol):
                return d
            return Symbol.general(self.order - 1.0, self.dim,
                                  d, x_band=self.x_band)
        if self.separable is not None:
            f, m, dm = self.separable
            if dm is not None:
                dma = dm[axis]
                if f is None:
                    return Symbol.multiplier(self.order - 1.0, dma,
                                             dim=self.dim)
                return Symbol.separable_symbol(f, self.order - 1.0, dma)

        h = _FD_STEP
        parent = self

        def sample(P, xi):
            e = np.zeros(parent.dim)
            e[axis] = h
            return (parent.sample_uniform(P, xi + e)
                    - parent.sample_uniform(P, xi - e)) / (2.0 * h)

        return Symbol.general(self.order - 1.0, self.dim, sample,
                              x_band=self.x_band)

    def x_derivative_values(self, P, xi, axis):
        """Spectral d/dx_axis of the sampled values on the uniform P grid."""
        vals = self.sample_uniform(P, xi)
        freqs = np.fft.fftfreq(P) * P
        spec = np.fft.fftn(vals)
        shape = [1] * self.dim
        shape[axis] = P
        spec = spec * (1j * freqs.reshape(shape))
        return np.fft.ifftn(spec)

    # -- algebra ------------------------------------------------------------

    def scaled(self, c):
        parent = self
        return Symbol.general(self.order, self.dim,
                              lambda P, xi: c * parent.sample_uniform(P, xi),
                              x_band=self.x_band)

    def plus(self, other):
        a, b = self, other
        return Symbol.general(max(a.order, b.order), a.dim,
                              lambda P, xi: a.sample_uniform(P, xi)
                              + b.sample_uniform(P, xi))


# -- assembled operators -----------------------------------------------------


@dataclass
class ParaOp:
    """Dense realization of a quantized symbol over the truncated mode set."""

    grid: TorusGrid
    matrix: np.ndarray
    order_m: float
    support_band: Optional[float] = None  # bound on |j-k| / <j+k>, or None

    def apply_coeffs(self, flat):
        flat = np.asarray(flat)
        if flat.shape != (self.grid.n_points,):
            raise GridError("coefficient vector does not match grid")
        return self.matrix @ flat

    def apply(self, u):
        if u.grid != self.grid:
            raise GridError("field grid does not match operator grid")
        out = self.apply_coeffs(u.coeffs.ravel())
        return FourierField(self.grid, out.reshape(self.grid.shape))

    def dump_json(self):
        modes = self.grid.mode_list()
        rows, cols = np.nonzero(self.matrix)
        trip = [[modes[r].tolist(), modes[c].tolist(),
                 float(self.matrix[r, c].real), float(self.matrix[r, c].imag)]
                for r, c in zip(rows, cols)]
        return json.dumps({"order_m": self.order_m,
                           "band": self.support_band, "triplets": trip})


def _pair_arrays(grid):
    modes = grid.mode_list().astype(np.int64)  # (M, d)
    j = modes[:, None, :]
    k = modes[None, :, :]
    nmat = j - k                 # symbol frequency
    smat = j + k                 # output+input midpoint*2
    return modes, nmat, smat


def _bracket_of(smat):
    return np.maximum(1.0, np.sqrt(np.sum(smat.astype(float) ** 2, axis=-1)))


def _hat_matrix(a, grid, nmat, xi_mat, xi_is_half):
    """H[j,k] = a-hat(nmat[j,k], xi) with xi = xi_mat[j,k] (/2 if half)."""
    M = grid.n_points
    P = 2 * grid.points_per_axis  # resolves symbol frequencies up to 2J
    if a.separable is not None:
        f, m, _ = a.separable
        xi = xi_mat.reshape(-1, grid.dim).astype(float)
        if xi_is_half:
            xi = xi / 2.0
        mv = m(xi).reshape(M, M)
        if f is None:
            cx = np.zeros((M, M), dtype=complex)
            sel = np.all(nmat == 0, axis=-1)
            cx[sel] = 1.0
        else:
            # gather base-grid coefficients, zero outside the retained band
            J = grid.max_mode
            inside = np.all(np.abs(nmat) <= J, axis=-1)
            idx = np.clip(nmat + J, 0, 2 * J)
            if grid.dim == 1:
                cx = np.where(inside, f.coeffs[idx[..., 0]], 0.0)
            else:
                cx = np.where(inside, f.coeffs[idx[..., 0], idx[..., 1]], 0.0)
        return cx * mv

    # general symbol: one x-transform per distinct frequency argument
    H = np.zeros((M, M), dtype=complex)
    flat_xi = xi_mat.reshape(-1, grid.dim)
    uniq, inv = np.unique(flat_xi, axis=0, return_inverse=True)
    flat_n = nmat.reshape(-1, grid.dim) % P
    flat_H = H.reshape(-1)
    for g, s in enumerate(uniq):
        members = np.nonzero(inv == g)[0]
        xi = s.astype(float) / 2.0 if xi_is_half else s.astype(float)
        hat = a.hat_uniform(P, xi)
        nn = flat_n[members]
        if grid.dim == 1:
            flat_H[members] = hat[nn[:, 0]]
        else:
            flat_H[members] = hat[nn[:, 0], nn[:, 1]]
    return flat_H.reshape(M, M)


def assemble_weyl(a, grid):
    """Op^W(a): entries a-hat(j - k, (j + k)/2), no frequency cutoff."""
    _, nmat, smat = _pair_arrays(grid)
    H = _hat_matrix(a, grid, nmat, smat, xi_is_half=True)
    return ParaOp(grid, H, a.order, support_band=None)


def assemble_bony_weyl(a, grid, cutoff=CutoffParams()):
    """Op^BW(a) = Op^W(a_chi): Weyl entries filtered through chi_eps."""
    eps = cutoff.cutoff_eps
    _, nmat, smat = _pair_arrays(grid)
    br = _bracket_of(smat)
    ratio = np.sqrt(np.sum(nmat.astype(float) ** 2, axis=-1)) / br
    factor = chi(ratio / eps)
    H = _hat_matrix(a, grid, nmat, smat, xi_is_half=True)
    H *= factor
    return ParaOp(grid, H, a.order, support_band=1.9 * eps)


def assemble_standard(b, grid):
    """Op(b): entries b-hat(j - k, k) (symbol frequency at the input mode)."""
    _, nmat, smat = _pair_arrays(grid)
    modes = grid.mode_list().astype(np.int64)
    kmat = np.broadcast_to(modes[None, :, :], nmat.shape)
    H = _hat_matrix(b, grid, nmat, kmat, xi_is_half=False)
    return ParaOp(grid, H, b.order, support_band=None)


def weyl_to_standard(a, grid):
    """Symbol b with b-hat(n, xi) = a-hat(n, xi + n/2), so Op^W(a) = Op(b)."""
    band = a.x_band if a.x_band is not None else grid.max_mode
    dim = a.dim

    def sample(P, xi):
        axes = [2.0 * np.pi * np.arange(P) / P] * dim
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.zeros((P,) * dim, dtype=complex)
        if dim == 1:
            ns = [(n,) for n in range(-band, band + 1)]
        else:
            rng = range(-band, band + 1)
            ns = [(n1, n2) for n1 in rng for n2 in rng]
        for n in ns:
            nv = np.array(n, dtype=float)
            hat = a.hat_uniform(P, xi + nv / 2.0)
            cn = hat[tuple(int(c) % P for c in n)]
            if cn == 0.0:
                continue
            phase = np.zeros((P,) * dim)
            for ax, c in enumerate(n):
                phase = phase + c * mesh[ax]
            out += cn * np.exp(1j * phase)
        return out

    return Symbol.general(a.order, dim, sample, x_band=band)


# -- paraproducts -------------------------------------------------------------


def paraproduct_decompose(u, v, cutoff=CutoffParams()):
    """Bony split uv = Op^BW(u) v + Op^BW(v) u + R(u, v), exact by partition.

    Returns the three pieces as fields on the common grid; their sum equals
    the dealiased product.
    """
    if u.grid != v.grid:
        raise GridError("grid mismatch in paraproduct")
    grid = u.grid
    eps = cutoff.cutoff_eps
    op_u = assemble_bony_weyl(Symbol.x_function(u), grid, cutoff)
    op_v = assemble_bony_weyl(Symbol.x_function(v), grid, cutoff)
    low_uv = op_u.apply(v)
    low_vu = op_v.apply(u)

    modes, nmat, smat = _pair_arrays(grid)
    J = grid.max_mode
    inside = np.all(np.abs(nmat) <= J, axis=-1)
    idx = np.clip(nmat + J, 0, 2 * J)
    if grid.dim == 1:
        uh = np.where(inside, u.coeffs[idx[..., 0]], 0.0)
        vh = v.coeffs[modes[:, 0] + J][None, :]
    else:
        uh = np.where(inside, u.coeffs[idx[..., 0], idx[..., 1]], 0.0)
        vh = v.coeffs[modes[:, 0] + J, modes[:, 1] + J][None, :]
    br = _bracket_of(smat)
    ratio1 = np.sqrt(np.sum(nmat.astype(float) ** 2, axis=-1)) / br
    two_j_minus_k = 2 * modes[:, None, :] - modes[None, :, :]
    br2 = _bracket_of(two_j_minus_k)
    kabs = np.sqrt(np.sum(modes.astype(float) ** 2, axis=-1))[None, :]
    theta = 1.0 - chi(ratio1 / eps) - chi(kabs / br2 / eps)
    rhat = np.sum(theta * uh * vh, axis=1)
    rem = FourierField(grid, rhat.reshape(grid.shape),
                       real=u.real and v.real)
    return low_uv, low_vu, rem


# -- symbolic composition ------------------------------------------------------


def compose_symbol(a, b, rho, grid):
    """a #_rho b: the product, plus the (2i)^{-1} Poisson bracket when rho > 1."""
    if not (0.0 < rho <= 2.0):
        raise SymbolError("rho must lie in (0, 2]")
    dim = a.dim

    def prod_sample(P, xi):
        return a.sample_uniform(P, xi) * b.sample_uniform(P, xi)

    order = a.order + b.order
    if rho <= 1.0:
        return Symbol.general(order, dim, prod_sample)

    da = [a.xi_derivative(ax) for ax in range(dim)]
    db = [b.xi_derivative(ax) for ax in range(dim)]

    def sample(P, xi):
        out = prod_sample(P, xi)
        for ax in range(dim):
            bracket = (da[ax].sample_uniform(P, xi)
                       * b.x_derivative_values(P, xi, ax)
                       - a.x_derivative_values(P, xi, ax)
                       * db[ax].sample_uniform(P, xi))
            out += bracket / 2j
        return out

    return Symbol.general(order, dim, sample)


def poisson_bracket_values(a, b, P, xi):
    """{a, b} sampled on the uniform P grid at frequency xi."""
    dim = a.dim
    out = np.zeros((P,) * dim, dtype=complex)
    for ax in range(dim):
        out += (a.xi_derivative(ax).sample_uniform(P, xi)
                * b.x_derivative_values(P, xi, ax)
                - a.x_derivative_values(P, xi, ax)
                * b.xi_derivative(ax).sample_uniform(P, xi))
    return out


def composition_remainder_probe(a, b, rho, k_levels, grid,
                                cutoff=CutoffParams(), rng=None):
    """Measured smoothing rate of R = Op^BW(a)Op^BW(b) - Op^BW(a #_rho b).

    Applies R to unit-norm Littlewood-Paley localized probes and returns the
    fitted slope of log2 ||R u_k||_0 against the block index k, together with
    the per-level norms.  The expected smoothing gives slope
    <= order(a) + order(b) - rho.
    """
    from .grid import lp_block, sobolev_norm

    if rng is None:
        rng = np.random.default_rng(0)
    top = max(k_levels)
    if 2.0 ** (top - 1) * 1.1 > grid.mode_abs().max():
        raise SymbolError(f"grid too coarse for LP level {top}")

    R = (assemble_bony_weyl(a, grid, cutoff).matrix
         @ assemble_bony_weyl(b, grid, cutoff).matrix
         - assemble_bony_weyl(compose_symbol(a, b, rho, grid), grid,
                              cutoff).matrix)
    ks, logs = [], []
    norms = {}
    for k in k_levels:
        w = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        u = lp_block(FourierField(grid, grid.forward(w)), k)
        n0 = sobolev_norm(u, 0.0)
        if n0 == 0.0:
            continue
        out = FourierField(grid, (R @ u.coeffs.ravel()).reshape(grid.shape))
        val = sobolev_norm(out, 0.0) / n0
        norms[k] = val
        if val > 0:
            ks.append(k)
            logs.append(np.log2(val))
    slope = float(np.polyfit(ks, logs, 1)[0])
    return slope, norms


# -- seminorms ----------------------------------------------------------------


def _multi_indices(dim, n):
    if dim == 1:
        return [(b,) for b in range(n + 1)]
    out = []
    for b1 in range(n + 1):
        for b2 in range(n + 1 - b1):
            out.append((b1, b2))
    return out


def _w_norm(values, grid, space):
    """x-norm of sampled symbol values in one of the three symbol spaces."""
    from .grid import holder_norm_estimate, sobolev_norm

    f = FourierField.from_values(grid, values)
    kind = space[0]
    if kind == "Linf":
        return float(np.max(np.abs(values)))
    if kind == "H":
        return sobolev_norm(f, space[1])
    if kind == "W":
        return holder_norm_estimate(f, space[1])
    raise SymbolError(f"unknown symbol space {space!r}")


def seminorm_estimate(a, m, space, n, grid, xi_radius=None):
    """Seminorm |a|_{m, W, n}: sup over sampled half-integer frequencies of
    <xi>^{-m+|beta|} || d_xi^beta a(., xi) ||_W for |beta| <= n."""
    R = xi_radius if xi_radius is not None else grid.max_mode
    half = np.arange(-2 * R, 2 * R + 1) / 2.0
    if a.dim == 1:
        lattice = half[:, None]
    else:
        stride = max(1, len(half) // 32)
        ax = half[::stride]
        lattice = np.stack(np.meshgrid(ax, ax, indexing="ij"),
                           axis=-1).reshape(-1, 2)
    P = grid.points_per_axis
    best = 0.0
    for beta in _multi_indices(a.dim, n):
        sym = a
        for ax, reps in enumerate(beta):
            for _ in range(reps):
                sym = sym.xi_derivative(ax)
        w_exp = -m + sum(beta)
        for xi in lattice:
            vals = sym.sample_uniform(P, xi)
            br = max(1.0, float(np.linalg.norm(xi)))
            best = max(best, br**w_exp * _w_norm(vals, grid, space))
    return best
