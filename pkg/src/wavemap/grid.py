"""Uniform cell-centred radial grids, axis-safe stencils and weighted quadrature.

Nodes sit at r_j = (j + 1/2) dr, so no node lies on the axis and every
singular weight r^w is finite at the nodes.  Fields are arrays whose first
axis runs over nodes; trailing axes (ambient components, frame indices) are
carried along untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import BadResolution, NonIntegrableWeight

MIN_NODES = 4


@dataclass(frozen=True)
class RadialGrid:
    dr: float
    r_max: float
    J: int

    @cached_property
    def r(self):
        r = (np.arange(self.J) + 0.5) * self.dr
        r.setflags(write=False)
        return r

    @property
    def edges(self):
        return np.arange(self.J + 1) * self.dr

    def refine(self, factor=2):
        return build_grid(self.dr / factor, self.r_max)


def build_grid(dr, r_max) -> RadialGrid:
    dr = float(dr)
    r_max = float(r_max)
    if not (dr > 0 and r_max > 0 and np.isfinite(dr) and np.isfinite(r_max)):
        raise BadResolution(f"need dr > 0 and r_max > 0, got dr={dr}, r_max={r_max}")
    ratio = r_max / dr
    J = int(round(ratio))
    if abs(ratio - J) > 1e-9 * max(1.0, ratio):
        raise BadResolution(f"r_max/dr = {ratio} is not an integer")
    if J < MIN_NODES:
        raise BadResolution(f"r_max/dr = {J} < {MIN_NODES}")
    return RadialGrid(dr, r_max, J)


def _bcast(w, f):
    """Reshape a per-node vector so it multiplies f along axis 0."""
    return w.reshape((-1,) + (1,) * (np.ndim(f) - 1))


@lru_cache(maxsize=128)
def _moments(dr, J, w):
    """(full-cell, half-cell-below-node) integrals of r^w; cached, read-only."""
    e = np.arange(J + 1) * dr
    r = (np.arange(J) + 0.5) * dr
    full = (e[1:] ** (w + 1) - e[:-1] ** (w + 1)) / (w + 1)
    half = (r ** (w + 1) - e[:-1] ** (w + 1)) / (w + 1)
    full.setflags(write=False)
    half.setflags(write=False)
    return full, half


def cell_moments(grid: RadialGrid, w):
    """Exact integrals of r^w over each cell [j dr, (j+1) dr]."""
    if w <= -1:
        raise NonIntegrableWeight(f"r^{w} is not integrable at the axis")
    return _moments(grid.dr, grid.J, float(w))[0]


def weighted_integral(grid: RadialGrid, f, w=0.0, exact_weight=False):
    """Midpoint value of the integral of r^w f over [0, r_max].

    With ``exact_weight`` the weight is integrated exactly over each cell
    (product-midpoint rule); this keeps second order for singular w.
    """
    if w <= -1:
        raise NonIntegrableWeight(f"r^{w} is not integrable at the axis")
    f = np.asarray(f, dtype=float)
    wt = cell_moments(grid, w) if exact_weight else grid.r ** w * grid.dr
    return np.tensordot(wt, f, axes=(0, 0))


def cumulative_weighted_integral(grid: RadialGrid, f, w=0.0):
    """Integral of r^w f from the axis up to each node r_j.

    Full cells below r_j use exact cell moments of r^w times f_m; the half
    cell [j dr, r_j] uses f_j.
    """
    f = np.asarray(f, dtype=float)
    if w <= -1:
        raise NonIntegrableWeight(f"r^{w} is not integrable at the axis")
    mom, half = _moments(grid.dr, grid.J, float(w))
    terms = _bcast(mom, f) * f
    below = np.cumsum(terms, axis=0) - terms
    return below + _bcast(half, f) * f


def tail_integral(grid: RadialGrid, F):
    """Integral of F from r_j out to r_max, midpoint with a half cell at r_j."""
    F = np.asarray(F, dtype=float)
    rev = np.cumsum(F[::-1], axis=0)[::-1]
    return (rev - 0.5 * F) * grid.dr


def pad(f, parity=1, outer="extrapolate"):
    """Add one ghost node at each end.

    The axis ghost sits at -dr/2, the mirror image of node 0, so it takes
    the value ``parity * f[0]``.  The outer ghost is cubic extrapolation
    (or even reflection with ``outer="reflect"``).
    """
    f = np.asarray(f, dtype=float)
    if outer == "extrapolate":
        # 4 f[-1] - 6 f[-2] + 4 f[-3] - f[-4], written in differences so constants stay exact
        g = f[-1] + 3 * (f[-1] - f[-2]) - 3 * (f[-2] - f[-3]) + (f[-3] - f[-4])
    elif outer == "reflect":
        g = f[-1]
    else:
        raise ValueError(f"unknown outer boundary treatment {outer!r}")
    return np.concatenate([parity * f[:1], f, g[None]], axis=0)


def radial_derivative(grid: RadialGrid, f, parity=1, outer="extrapolate"):
    """Centred first derivative; ``parity`` is the symmetry of f under r -> -r."""
    g = pad(f, parity, outer)
    return (g[2:] - g[:-2]) / (2 * grid.dr)


def radial_laplacian(grid: RadialGrid, f, outer="extrapolate"):
    """f_rr + f_r / r for an even-in-r field, second-order centred."""
    g = pad(f, 1, outer)
    rr = _bcast(grid.r, g)
    d2 = (g[2:] - 2 * g[1:-1] + g[:-2]) / grid.dr ** 2
    d1 = (g[2:] - g[:-2]) / (2 * grid.dr)
    return d2 + d1 / rr


def null_derivatives(f_t, f_r):
    """(f_u, f_v) for u = t - r, v = t + r."""
    f_t = np.asarray(f_t, dtype=float)
    f_r = np.asarray(f_r, dtype=float)
    return 0.5 * (f_t - f_r), 0.5 * (f_t + f_r)
