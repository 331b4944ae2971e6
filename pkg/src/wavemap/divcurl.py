"""Characteristic flux bounds and the bilinear div-curl estimate on (u, v) lattices.

Lattice.  u_i = -R + i h (i = 0 .. (R+T)/h), v_j = j h (j = 0 .. (2T+R)/h).
With nR = R/h, nT = T/h the point (i, j) has

    s = i + j - nR   (t = s h / 2),     d = j - i + nR   (r = d h / 2),

and belongs to the region iff 0 <= s <= 2 nT and d >= 0.  Fields are stored
on the full rectangular lattice; only region values matter.  Fields must
vanish near u = -R and v = 2T + R, the artificial edges of the lattice.

Measures.  Along a line of constant u the length element is dr = dv / 2,
likewise dr = du / 2 along constant v; the space-time element is
dr dt = du dv / 2.  All integrals use trapezoid weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation

DEFAULT_T = 1.0
DEFAULT_R = 1.0


@dataclass(frozen=True, eq=False)
class DivCurlField:
    T: float
    R: float
    h: float
    F11: np.ndarray
    F12: np.ndarray
    F21: np.ndarray
    F22: np.ndarray
    G1: np.ndarray
    G2: np.ndarray

    @property
    def nT(self):
        return int(round(self.T / self.h))

    @property
    def nR(self):
        return int(round(self.R / self.h))

    @property
    def shape(self):
        return self.F11.shape

    def sd(self):
        """(s, d) index arrays on the lattice."""
        i, j = np.indices(self.shape)
        return i + j - self.nR, j - i + self.nR

    def region(self):
        s, d = self.sd()
        return (s >= 0) & (s <= 2 * self.nT) & (d >= 0)

    def scaled(self, c):
        return DivCurlField(self.T, self.R, self.h, c * self.F11, c * self.F12, c * self.F21, c * self.F22,
                            c * self.G1, c * self.G2)

    def subsample(self, m):
        """Every m-th lattice point; T and R must stay on the coarser lattice."""
        nT, nR = self.nT, self.nR
        if nT % m or nR % m:
            raise ValueError(f"cannot subsample by {m}")
        sl = (slice(None, None, m), slice(None, None, m))
        return DivCurlField(self.T, self.R, self.h * m, self.F11[sl], self.F12[sl], self.F21[sl], self.F22[sl],
                            self.G1[sl], self.G2[sl])


def lattice_shape(T, R, h):
    return int(round((R + T) / h)) + 1, int(round((2 * T + R) / h)) + 1


def lattice_coords(T, R, h):
    nu, nv = lattice_shape(T, R, h)
    u = -R + h * np.arange(nu)
    v = h * np.arange(nv)
    return np.meshgrid(u, v, indexing="ij")


# -- discrete operators ----------------------------------------------------

def d_u(F, h):
    return np.gradient(F, h, axis=0, edge_order=2)


def d_v(F, h):
    return np.gradient(F, h, axis=1, edge_order=2)


def pde_residuals(field: DivCurlField, norm="max"):
    """Relative defect of d_u F11 + d_v F12 = G1 and d_u F21 - d_v F22 = G2.

    Measured at region points whose four lattice neighbours are also in
    the region (0 < s < 2 nT, d > 0).  ``norm="max"`` is the pointwise
    maximum over the largest term; ``norm="l1"`` compares space-time
    integrals instead, which is the meaningful measure for fields that
    behave like a fractional power of r at the axis.
    """
    if norm not in ("max", "l1"):
        raise ValueError(f"unknown norm {norm!r}")
    h = field.h
    s, d = field.sd()
    inner = (s > 0) & (s < 2 * field.nT) & (d > 0)
    w = spacetime_weights(field)[inner]
    out = []
    for a, b, G, sign in ((field.F11, field.F12, field.G1, 1.0), (field.F21, field.F22, field.G2, -1.0)):
        du, dv = d_u(a, h), d_v(b, h)
        res = np.abs(du + sign * dv - G)[inner]
        scale = (np.abs(du) + np.abs(dv) + np.abs(G))[inner]
        if norm == "max":
            top, val = np.max(scale, initial=0.0), np.max(res, initial=0.0)
        else:
            top, val = np.sum(w * scale), np.sum(w * res)
        out.append(float(val / top) if top > 0 else 0.0)
    return tuple(out)


@dataclass(frozen=True)
class InvariantReport:
    min_flux: float
    axis_residual: float
    pde_residual1: float
    pde_residual2: float

    @property
    def worst(self):
        return max(0.0, -self.min_flux, self.axis_residual, self.pde_residual1, self.pde_residual2)


def invariant_report(field: DivCurlField) -> InvariantReport:
    """Relative sizes of the three invariant defects (negativity, axis condition, PDE)."""
    reg = field.region()
    Fs = [field.F11, field.F12, field.F21, field.F22]
    scale = max(np.max(np.abs(F[reg]), initial=0.0) for F in Fs)
    scale = scale if scale > 0 else 1.0
    min_flux = min(np.min(F[reg], initial=0.0) for F in Fs) / scale
    s, d = field.sd()
    ax = reg & (d == 0)
    axis = max(np.max(np.abs(field.F11 - field.F12)[ax], initial=0.0),
               np.max(np.abs(field.F21 + field.F22)[ax], initial=0.0)) / scale
    p1, p2 = pde_residuals(field)
    return InvariantReport(float(min_flux), float(axis), p1, p2)


def check_invariants(field: DivCurlField, tol=1e-10, pde_tol=None) -> InvariantReport:
    rep = invariant_report(field)
    pde_tol = tol if pde_tol is None else pde_tol
    if rep.min_flux < -tol:
        raise InvariantViolation(f"negative flux density (relative {rep.min_flux:.3g})")
    if rep.axis_residual > tol:
        raise InvariantViolation(f"axis condition violated (relative {rep.axis_residual:.3g})")
    if max(rep.pde_residual1, rep.pde_residual2) > pde_tol:
        raise InvariantViolation(
            f"transport equations violated (relative {rep.pde_residual1:.3g}, {rep.pde_residual2:.3g})")
    return rep


# -- integrals -------------------------------------------------------------

def _trap(vals, step):
    vals = np.asarray(vals, dtype=float)
    if vals.size < 2:
        return 0.0
    return float(step * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


def u_line_integrals(field: DivCurlField, F):
    """For each u_i, the integral of F over its region segment with dr = dv/2."""
    nR, nT = field.nR, field.nT
    out = np.zeros(field.shape[0])
    for i in range(field.shape[0]):
        lo, hi = abs(i - nR), 2 * nT + nR - i
        if hi >= lo:
            out[i] = _trap(F[i, lo:hi + 1], 0.5 * field.h)
    return out


def v_line_integrals(field: DivCurlField, F):
    """For each v_j, the integral of F over its region segment with dr = du/2."""
    nR, nT = field.nR, field.nT
    out = np.zeros(field.shape[1])
    for j in range(field.shape[1]):
        lo, hi = max(0, nR - j), min(j, 2 * nT - j) + nR
        if hi >= lo:
            out[j] = _trap(F[lo:hi + 1, j], 0.5 * field.h)
    return out


def slice_integral(field: DivCurlField, F, which):
    """int F(t, r) dr on t = 0 (which=0) or t = T (which=1)."""
    nR, nT = field.nR, field.nT
    if which == 0:
        j = np.arange(nR + 1)
        i = nR - j
    else:
        i = np.arange(nT + nR, -1, -1)
        i = i[i < field.shape[0]]
        j = 2 * nT + nR - i
        keep = j < field.shape[1]
        i, j = i[keep], j[keep]
    return _trap(F[i, j], field.h)


def spacetime_weights(field: DivCurlField):
    """Weights w with sum(w f) = int int f dr dt over the region."""
    s, d = field.sd()
    w = np.where(field.region(), 0.5 * field.h ** 2, 0.0)
    w = np.where((s == 0) | (s == 2 * field.nT), 0.5 * w, w)
    w = np.where(d == 0, 0.5 * w, w)
    return w


def spacetime_integral(field: DivCurlField, f):
    w = spacetime_weights(field)
    return float(np.sum(w * f))


def flux_bounds(field: DivCurlField, check=True, tol=1e-10, pde_tol=None):
    """Both characteristic flux estimates: left sides, right sides and ratios."""
    if check:
        check_invariants(field, tol, pde_tol)
    lhs1 = (np.max(u_line_integrals(field, field.F11), initial=0.0)
            + np.max(v_line_integrals(field, field.F12), initial=0.0))
    lhs2 = (np.max(u_line_integrals(field, field.F21), initial=0.0)
            + np.max(v_line_integrals(field, field.F22), initial=0.0))
    rhs1 = slice_integral(field, field.F11 + field.F12, 0) + spacetime_integral(field, np.abs(field.G1))
    rhs2 = (slice_integral(field, field.F21 + field.F22, 1) + slice_integral(field, field.F21 + field.F22, 0)
            + spacetime_integral(field, np.abs(field.G2)))
    return {"lhs1": float(lhs1), "rhs1": rhs1, "ratio1": ratio(lhs1, rhs1),
            "lhs2": float(lhs2), "rhs2": rhs2, "ratio2": ratio(lhs2, rhs2)}


def ratio(lhs, rhs):
    """lhs / rhs with 0/0 = 0 and x/0 = inf."""
    if rhs == 0:
        return 0.0 if lhs == 0 else float("inf")
    return float(lhs / rhs)


def bilinear_bound(field: DivCurlField, check=True, tol=1e-10, pde_tol=None):
    fb = flux_bounds(field, check, tol, pde_tol)
    lhs = spacetime_integral(field, field.F11 * field.F22 + field.F12 * field.F21)
    rhs = fb["rhs1"] * fb["rhs2"]
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}


# -- synthetic fields ------------------------------------------------------

def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)

    def f(y):
        return np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)

    a, b = f(x), f(1 - x)
    return a / (a + b)


def _random_wave(rng, u, v, modes, scale):
    out = np.zeros_like(u)
    for m in range(modes):
        k = rng.uniform(-np.pi, np.pi, size=2) * (1 + m) / scale
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.standard_normal() / (1 + m)
        out += amp * np.cos(k[0] * u + k[1] * v + phase)
    return out


def synthesize_field(seed, K=64, modes=4, T=DEFAULT_T, R=DEFAULT_R) -> DivCurlField:
    """Random smooth field satisfying the axis condition, with sources defined
    by the discrete transport operators (so the transport residual is zero).

    K is the number of lattice steps along u, so h = (R + T) / K.
    """
    h = (R + T) / K
    if abs((T / h) - round(T / h)) > 1e-9 or abs((R / h) - round(R / h)) > 1e-9:
        raise ValueError("T and R must be multiples of the lattice step")
    u, v = lattice_coords(T, R, h)
    rng = np.random.default_rng(seed)
    waves = [_random_wave(rng, u, v, modes, T) for _ in range(5)]
    a, c, dd, e = waves[0], waves[1], waves[2], waves[3]
    w = 0.5 * R
    chi = smooth_step((u + R) / w) * smooth_step((2 * T + R - v) / w)
    b = a + (v - u) * c
    F11 = (chi * a) ** 2
    F12 = (chi * b) ** 2
    F21 = (chi * (v - u) * dd) ** 2
    F22 = (chi * (v - u) * e) ** 2
    G1 = d_u(F11, h) + d_v(F12, h)
    G2 = d_u(F21, h) - d_v(F22, h)
    return DivCurlField(T, R, h, F11, F12, F21, F22, G1, G2)


def bump_field(K=64, T=DEFAULT_T, R=DEFAULT_R, phi=None, psi=None) -> DivCurlField:
    """F11 = F12 = phi(r) and F21 = F22 = psi(r), functions of r = (v - u)/2 only.

    Then G1 = 0 and G2 = -psi'(r); both are taken from the discrete operators.
    """
    from .solver import bump

    h = (R + T) / K
    u, v = lattice_coords(T, R, h)
    r = 0.5 * (v - u)
    if phi is None:
        phi = lambda x: bump((x - 0.5 * T) / (0.3 * T))
    if psi is None:
        psi = lambda x: bump((x - 0.4 * T) / (0.25 * T))
    F = phi(r)
    P = psi(r)
    return DivCurlField(T, R, h, F, F.copy(), P, P.copy(), d_u(F, h) + d_v(F, h), d_u(P, h) - d_v(P, h))


# -- fields from solver runs -----------------------------------------------

def _interp_slices(values, dt, dr, t, r, parity):
    """Bilinear interpolation of per-slice nodal data (n_t, J) at points (t, r).

    Nodes sit at r = (j + 1/2) dr; the ghost at -dr/2 is parity * node 0.
    Points outside the stored time range or beyond the outer node give 0.
    """
    nt, J = values.shape
    ext = np.concatenate([parity * values[:, :1], values, np.zeros((nt, 1))], axis=1)
    tau = t / dt
    rho = np.abs(r) / dr + 0.5            # index into ext (ghost is column 0)
    ok = (tau >= -1e-9) & (tau <= nt - 1 + 1e-9) & (rho <= J + 1)
    tau = np.clip(tau, 0, nt - 1)
    rho = np.clip(rho, 0, J + 1)
    n0 = np.minimum(np.floor(tau + 1e-9).astype(int), nt - 1)
    n1 = np.minimum(n0 + 1, nt - 1)
    a = np.clip(tau - n0, 0.0, 1.0)
    j0 = np.minimum(np.floor(rho).astype(int), J + 1)
    j1 = np.minimum(j0 + 1, J + 1)
    b = rho - j0
    val = ((1 - a) * ((1 - b) * ext[n0, j0] + b * ext[n0, j1])
           + a * ((1 - b) * ext[n1, j0] + b * ext[n1, j1]))
    return np.where(ok, val, 0.0)


def fields_from_solution(states, params, frames=None, A0s=None, R=None, margin=1e-12) -> DivCurlField:
    """Resample a dense run onto the characteristic lattice with h = dr.

    F11 = r|Psi_v|^2, F12 = r|Psi_u|^2 with G1 = G_1 / 2 (Psi = Phi_t), and
    F21 = P_plus, F22 = P_minus with G2 = -G_beta from the null balance law.
    ``states`` are consecutive solver slices from t = 0 with uniform dt.
    """
    from . import estimates as est
    from .gauge import a0_from_curvature, build_frames, curvature_F01, with_components

    grid = states[0].grid
    dr = grid.dr
    dt = states[1].t - states[0].t
    T = states[-1].t
    h = dr
    nT = T / h
    if abs(nT - round(nT)) > 1e-6:
        raise ValueError("run length must be a multiple of dr")
    if R is None:
        R = h * np.ceil(_support(states[0]) / h + 1)
    if frames is None:
        frames = [with_components(s, f) for s, f in zip(states, build_frames(states))]
    if A0s is None:
        A0s = [a0_from_curvature(grid, curvature_F01(s, f)) for s, f in zip(states, frames)]
    rows = {k: [] for k in ("F11", "F12", "F21", "F22", "G1", "G2")}
    for s, f, A0 in zip(states, frames, A0s):
        hf = est.h2_fields(s)
        psi_u, psi_v = est.null_derivatives(hf.psi_t, hf.psi_r)
        r = grid.r
        G1, _ = est.h2_sources(s, hf)
        Pp, Pm, Gb = est.null_balance_fields(grid, f.q0, f.q1, A0, params, "beta")
        est.check_null_fluxes(Pp, Pm, margin, t=s.t)
        rows["F11"].append(r * est._sq(psi_v))
        rows["F12"].append(r * est._sq(psi_u))
        rows["G1"].append(0.5 * G1)
        rows["F21"].append(Pp)
        rows["F22"].append(Pm)
        rows["G2"].append(-Gb)
    u, v = lattice_coords(T, R, h)
    t, r = 0.5 * (u + v), 0.5 * (v - u)
    parity = {"F11": -1, "F12": -1, "F21": -1, "F22": -1, "G1": -1, "G2": 1}
    out = {k: _interp_slices(np.array(rows[k]), dt, dr, t, r, parity[k]) for k in rows}
    return DivCurlField(T, float(R), h, **out)


def _support(state):
    """Largest node radius where the state differs from a constant map."""
    dev = np.abs(state.phi - state.phi[-1]).max(axis=1) + np.abs(state.phi_t).max(axis=1)
    idx = np.nonzero(dev > 1e-14)[0]
    return float(state.grid.r[idx[-1]]) if idx.size else 0.0


def corpus(seeds, K=64, modes=4, T=DEFAULT_T, R=DEFAULT_R):
    """Flux and bilinear ratios with invariant residuals for each seed."""
    rows = []
    for seed in seeds:
        f = synthesize_field(seed, K, modes, T, R)
        rep = check_invariants(f)
        fb = flux_bounds(f, check=False)
        bb = bilinear_bound(f, check=False)
        rows.append({"seed": int(seed), "ratio1": fb["ratio1"], "ratio2": fb["ratio2"],
                     "bilinear_ratio": bb["ratio"], "invariant_residuals": rep.worst})
    return rows
