"""Smooth frequency cutoff shared by the quantizations and the Littlewood-Paley blocks.

The cutoff is radial, identically 1 for radii <= 1.1 and identically 0 for
radii >= 1.9, realized by the standard exp(-1/t) glue so that every operator
built on top of it is bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np


def _bump(t):
    """exp(-1/t) for t > 0, 0 otherwise, evaluated elementwise."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    with np.errstate(over="ignore", under="ignore"):
        out[pos] = np.exp(-1.0 / t[pos])
    return out


def chi(r):
    """Radial cutoff: 1 on |r| <= 1.1, 0 on |r| >= 1.9, smooth and monotone between.

    Accepts scalars or arrays; applied elementwise to |r|.  For a vector
    frequency pass its Euclidean norm (see :func:`chi_vec`).
    """
    r = np.abs(np.asarray(r, dtype=float))
    t = (r - 1.1) / 0.8
    lo = _bump(1.0 - t)
    hi = _bump(t)
    # plateau values make the denominator vanish nowhere
    out = lo / (lo + hi)
    return out if out.ndim else float(out)


def chi_vec(xi):
    """Cutoff of a vector frequency: chi(|xi|_2) along the last axis."""
    xi = np.asarray(xi, dtype=float)
    return chi(np.sqrt(np.sum(xi * xi, axis=-1)))


def chi_eps(eps, r):
    """Rescaled cutoff chi(r / eps)."""
    return chi(np.asarray(r, dtype=float) / eps)


@dataclass(frozen=True)
class CutoffParams:
    """Paraproduct cutoff scale used in the Bony-Weyl quantization.

    eps must stay below 1/4 so the frequency-comparability relation
    |j| <= |j+k| <= 3|j| holds on the retained band.
    """

    cutoff_eps: float = 0.125

    def __post_init__(self):
        if not (0.0 < self.cutoff_eps < 0.25):
            raise ValueError(
                f"cutoff_eps must lie in (0, 1/4), got {self.cutoff_eps}"
            )
