"""Monitored functionals: energy, weighted norms, balance laws, H^2 energies
and the nonlinear space-time integrals.

Notation.  q0, q1 are the frame components of Phi_t, Phi_r (arrays (J, k));
A0 is the connection matrix field (J, k, k) indexed [node, l, i];
Q0(r) = int_0^r xi^{-sigma} q1 dxi.  The weighted balance law with exponent
``a`` (alpha or beta) reads LHS_a = RHS_a where

    LHS_a = -d_t(r^{1-a} q0.q1) + d_r(r^{1-a}|q|^2 / 2) + (a/2) |q|^2 / r^a
            - d_t(r^{s-a} Q0.q0) / 2 + d_r(r^{s-a} Q0.q1) / 2
            + c1 d_r(r^{2s-1-a} |Q0|^2) + c2 r^{2s-2-a} |Q0|^2
    RHS_a = q0.I_A / (2 r^{a-s}) - q0.S / (2 r^{a-s}) + r^{s-a} (A0 q0).Q0 / 2

with |q|^2 = |q0|^2 + |q1|^2, c1 = (a-s+1)/4, c2 = (1+a-2s)(a-s+1)/4,
I_A = int_0^r xi^{-s} A0 q1 and S the regularized sigma-integral of q0
(see ``sigma_term``).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateProfile, NegativeFlux
from .grid import (cumulative_weighted_integral, null_derivatives, pad, radial_derivative,
                   weighted_integral)
from .solver import acceleration


@dataclass(frozen=True)
class EstimateParams:
    alpha: float = 0.2
    beta: float = 0.2
    sigma: float = 0.01
    quartic: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.sigma < self.alpha:
            raise ValueError(f"sigma={self.sigma} must be below alpha={self.alpha}")
        if not 0.1 <= self.beta <= 0.25:
            raise ValueError(f"beta={self.beta} outside [1/10, 1/4]")
        if self.quartic and abs(2 - 2 * self.alpha - 3 * self.beta) > 1e-12:
            raise ValueError("quartic estimate needs 2 - 2 alpha = 3 beta")

    def for_quartic(self):
        """Same beta and sigma with alpha fixed by 2 - 2 alpha = 3 beta."""
        return replace(self, alpha=1 - 1.5 * self.beta, quartic=True)


def _sq(v):
    v = np.asarray(v)
    return np.sum((v * v).reshape(v.shape[0], -1), axis=1) if v.ndim > 1 else v * v


def _norm(v):
    return np.sqrt(_sq(v))


def _dotj(a, b):
    return np.einsum("ji,ji->j", a, b)


def _matvec(A, q):
    return np.einsum("jli,ji->jl", A, q)


# -- energy and weighted norms --------------------------------------------

def energy_density(state):
    return 0.5 * (_sq(state.phi_t) + _sq(state.phi_r))


def energy(state):
    """E = 1/2 int r (|Phi_t|^2 + |Phi_r|^2) dr."""
    return float(weighted_integral(state.grid, energy_density(state), 1))


def q0_axis(q0):
    """Value at r = 0 of an even field sampled at r = dr/2, 3dr/2."""
    return (9 * q0[0] - q0[1]) / 8


def sigma_term(grid, q0, sigma):
    """sigma times the regularized integral int_0^r xi^{-sigma-1} q0 dxi.

    The integral diverges at the axis whenever q0(0) != 0; it is taken as
    its finite part, which is what makes the integration by parts behind
    the balance law exact:

        sigma int_0^r xi^{-sigma-1} (q0 - q0(0)) dxi - q0(0) r^{-sigma}.
    """
    r = grid.r[:, None]
    c = q0_axis(q0)
    h = (q0 - c) / r ** 2
    return sigma * cumulative_weighted_integral(grid, h, 1 - sigma) - c * r ** (-sigma)


def Q0_profile(grid, q1, sigma):
    return cumulative_weighted_integral(grid, q1, -sigma)


def weighted_norms(grid, q0, q1, params: EstimateParams, exponent=None):
    """W = int r^{-beta}(|q0|^2 + |q1|^2) dr together with the Q0 and Q profiles."""
    a = params.beta if exponent is None else exponent
    Q0 = Q0_profile(grid, q1, params.sigma)
    W = float(weighted_integral(grid, _sq(q0) + _sq(q1), -a, exact_weight=True))
    Q = grid.r[:, None] ** (params.sigma - params.alpha) * Q0
    return {"W_beta": W, "Q0": Q0, "Q": Q}


def weighted_norm_frame_free(state, params: EstimateParams):
    return float(weighted_integral(state.grid, _sq(state.phi_t) + _sq(state.phi_r), -params.beta,
                                   exact_weight=True))


# -- balance laws ----------------------------------------------------------

def balance_rhs(grid, q0, q1, A0, params: EstimateParams, exponent):
    a, s = exponent, params.sigma
    r = grid.r
    Q0 = Q0_profile(grid, q1, s)
    IA = cumulative_weighted_integral(grid, _matvec(A0, q1), -s)
    S = sigma_term(grid, q0, s)
    w = r ** (s - a)
    return 0.5 * w * (_dotj(q0, IA) - _dotj(q0, S) + _dotj(_matvec(A0, q0), Q0))


def _radial_part(grid, q0, q1, params, a):
    """Every r-derivative and zeroth-order term of LHS_a, by the product rule."""
    s = params.sigma
    r = grid.r
    Q0 = Q0_profile(grid, q1, s)
    dq0 = radial_derivative(grid, q0, parity=1)
    dq1 = radial_derivative(grid, q1, parity=-1)
    qq = _sq(q0) + _sq(q1)
    c1 = (a - s + 1) / 4
    c2 = (1 + a - 2 * s) * (a - s + 1) / 4
    Q0q1 = _dotj(Q0, q1)
    QQ = _sq(Q0)
    term = 0.5 * (1 - a) * r ** (-a) * qq + r ** (1 - a) * (_dotj(q0, dq0) + _dotj(q1, dq1))
    term += 0.5 * a * qq * r ** (-a)
    term += 0.5 * (r ** (s - a) * _dotj(dq1, Q0) + (s - a) * r ** (s - a - 1) * Q0q1 + r ** (-a) * _sq(q1))
    term += c1 * ((2 * s - 1 - a) * r ** (2 * s - 2 - a) * QQ + 2 * r ** (s - 1 - a) * Q0q1)
    term += c2 * r ** (2 * s - 2 - a) * QQ
    return term


def balance_defect(grid, qs, A0, dt, params: EstimateParams, exponent=None):
    """Pointwise LHS - RHS of the weighted balance law at the middle of three slices.

    ``qs`` is ((q0, q1) before, (q0, q1) middle, (q0, q1) after).
    """
    a = params.alpha if exponent is None else exponent
    s = params.sigma
    r = grid.r
    (q0m, q1m), (q0, q1), (q0p, q1p) = qs

    def timed(q0_, q1_):
        Q0 = Q0_profile(grid, q1_, s)
        return r ** (1 - a) * _dotj(q0_, q1_) + 0.5 * r ** (s - a) * _dotj(Q0, q0_)

    dt_part = -(timed(q0p, q1p) - timed(q0m, q1m)) / (2 * dt)
    return dt_part + _radial_part(grid, q0, q1, params, a) - balance_rhs(grid, q0, q1, A0, params, a)


def balance_residual(grid, qs, A0, dt, params: EstimateParams, exponent=None):
    """L^1(dr) norm of ``balance_defect``."""
    return float(weighted_integral(grid, np.abs(balance_defect(grid, qs, A0, dt, params, exponent)), 0))


def null_balance_fields(grid, q0, q1, A0, params: EstimateParams, which="beta"):
    """(P_plus, P_minus, G) with d_v P_minus - d_u P_plus = G.

    ``which`` selects the exponent: "beta" (also "beta_form") or "alpha"
    ("alpha_form").
    """
    a = _exponent(params, which)
    s = params.sigma
    r = grid.r
    Q0 = Q0_profile(grid, q1, s)
    kappa = (a - s + 1) / 4
    QQ = kappa * r ** (2 * s - 1 - a) * _sq(Q0)
    Pm = 0.5 * r ** (1 - a) * _sq(q0 - q1) + 0.5 * r ** (s - a) * _dotj(Q0, q1 - q0) + QQ
    Pp = 0.5 * r ** (1 - a) * _sq(q0 + q1) + 0.5 * r ** (s - a) * _dotj(Q0, q1 + q0) + QQ
    c2 = (1 + a - 2 * s) * (a - s + 1) / 4
    G = (balance_rhs(grid, q0, q1, A0, params, a) - 0.5 * a * (_sq(q0) + _sq(q1)) * r ** (-a)
         - c2 * r ** (2 * s - 2 - a) * _sq(Q0))
    return Pp, Pm, G


def _exponent(params, which):
    if which in ("beta", "beta_form"):
        return params.beta
    if which in ("alpha", "alpha_form"):
        return params.alpha
    raise ValueError(f"unknown balance form {which!r}")


def check_null_fluxes(Pp, Pm, margin=1e-12, t=None):
    """Raise NegativeFlux if P_plus or P_minus is negative beyond ``margin`` relative to its size."""
    scale = max(np.max(np.abs(Pp), initial=0.0), np.max(np.abs(Pm), initial=0.0))
    worst = min(np.min(Pp, initial=0.0), np.min(Pm, initial=0.0))
    if worst < -margin * scale:
        raise NegativeFlux(f"null-balance flux negative ({worst:.3g})", t=t)


def null_balance_defect(grid, qs, A0, dt, params: EstimateParams, which="beta"):
    """Pointwise d_v P_minus - d_u P_plus - G by finite differences of the fluxes.

    The sum P_minus + P_plus is r^{1-a} times a field that is even and
    smooth at the axis; that field is differenced, the power of r is not.
    """
    a = _exponent(params, which)
    r = grid.r
    (q0m, q1m), (q0, q1), (q0p, q1p) = qs
    ppm, pmm, _ = null_balance_fields(grid, q0m, q1m, A0, params, which)
    ppp, pmp, _ = null_balance_fields(grid, q0p, q1p, A0, params, which)
    Pp, Pm, G = null_balance_fields(grid, q0, q1, A0, params, which)
    d_t = ((pmp - ppp) - (pmm - ppm)) / (2 * dt)
    reduced = (Pm + Pp) * r ** (a - 1)
    d_r = (1 - a) * r ** (-a) * reduced + r ** (1 - a) * radial_derivative(grid, reduced, parity=1)
    return 0.5 * d_t + 0.5 * d_r - G


def null_balance_residual(grid, qs, A0, dt, params: EstimateParams, which="beta"):
    return float(weighted_integral(grid, np.abs(null_balance_defect(grid, qs, A0, dt, params, which)), 0))


# -- H^2 level -------------------------------------------------------------

@dataclass(frozen=True)
class H2Fields:
    """Derivatives of Phi at one slice; hat quantities belong to Phi_r."""
    psi: np.ndarray        # Phi_t
    psi_t: np.ndarray      # Phi_tt from the equation
    psi_r: np.ndarray      # d_r Phi_t
    hat: np.ndarray        # Phi_r
    hat_t: np.ndarray      # d_r Phi_t
    hat_r: np.ndarray      # Phi_rr
    phi_u: np.ndarray
    phi_v: np.ndarray


def h2_fields(state) -> H2Fields:
    g, M = state.grid, state.target
    psi = state.phi_t
    psi_t = acceleration(g, M, state.phi, psi)
    psi_r = radial_derivative(g, psi, parity=1)
    hat = state.phi_r
    gp = pad(state.phi, 1)
    hat_r = (gp[2:] - 2 * gp[1:-1] + gp[:-2]) / g.dr ** 2
    phi_u, phi_v = null_derivatives(psi, hat)
    return H2Fields(psi, psi_t, psi_r, hat, psi_r, hat_r, phi_u, phi_v)


def h2_density(state, fields: H2Fields = None):
    """1/2 r (|Psi_t|^2 + |Psi_r|^2) + 1/2 r (|hat_t|^2 + |hat_r|^2 + |hat|^2 / r^2)."""
    f = h2_fields(state) if fields is None else fields
    r = state.grid.r
    return 0.5 * r * (_sq(f.psi_t) + _sq(f.psi_r) + _sq(f.hat_t) + _sq(f.hat_r) + _sq(f.hat) / r ** 2)


def h2_energy(state, fields: H2Fields = None):
    return float(weighted_integral(state.grid, h2_density(state, fields), 0))


def h2_sources(state, fields: H2Fields = None):
    """Pointwise G1 (for Psi = Phi_t) and G1~ (for Psi^ = Phi_r).

    Obtained by dotting the differentiated equation with r Psi_t (resp.
    r Psi^_t) and trading Psi_t . B for -Psi . B' using Psi . B = 0.
    """
    f = h2_fields(state) if fields is None else fields
    M = state.target
    p = state.phi
    r = state.grid.r
    dB = M.db
    psi_u, psi_v = null_derivatives(f.psi_t, f.psi_r)
    hat_u, hat_v = null_derivatives(f.hat_t, f.hat_r)
    G1 = 4 * r * (-_dotj(f.psi, dB(p, f.psi, psi_u, f.phi_v))
                  - _dotj(f.psi, dB(p, f.psi, f.phi_u, psi_v))
                  + _dotj(f.psi_t, dB(p, f.psi, f.phi_u, f.phi_v)))
    G1h = 4 * r * (-_dotj(f.hat, dB(p, f.psi, hat_u, f.phi_v))
                   - _dotj(f.hat, dB(p, f.psi, f.phi_u, hat_v))
                   + _dotj(f.hat_t, dB(p, f.hat, f.phi_u, f.phi_v)))
    return G1, G1h


def h2_flux_densities(state, fields: H2Fields = None):
    """(e, F) with d_t e - d_r F = G1 for the Phi_t-level energy."""
    f = h2_fields(state) if fields is None else fields
    r = state.grid.r
    return 0.5 * r * (_sq(f.psi_t) + _sq(f.psi_r)), r * _dotj(f.psi_t, f.psi_r)


# -- nonlinear space-time integrands --------------------------------------

DENSITY_KEYS = ("g1", "g2", "bilinear", "quartic", "bilinear_flux", "G_beta")


def nonlinear_densities(state, params: EstimateParams, q=None, A0=None, fields: H2Fields = None):
    """Nonnegative integrands of the nonlinear space-time estimates at one slice.

    g1 = C r |Psi|^2 (|Psi_u||Phi_v| + |Phi_u||Psi_v|), g2 = C r |Psi_t||Psi||Phi_u||Phi_v|,
    where C bounds the derivative of B on the target (so both vanish for flat targets),
    bilinear = r^{2-beta} (|Phi_u|^2 |Psi_v|^2 + |Psi_u|^2 |Phi_v|^2),
    quartic = r^{2-2alpha'} |Phi_u|^2 |Phi_v|^2 with 2 - 2alpha' = 3 beta.
    With frame components ``q`` and ``A0`` also |G_beta| and the flux product
    r (|Psi_v|^2 P_minus + |Psi_u|^2 P_plus).
    """
    f = h2_fields(state) if fields is None else fields
    g = state.grid
    r = g.r
    psi_u, psi_v = null_derivatives(f.psi_t, f.psi_r)
    nu, nv = _norm(f.phi_u), _norm(f.phi_v)
    npu, npv = _norm(psi_u), _norm(psi_v)
    npsi = _norm(f.psi)
    C = state.target.db_constant
    out = {
        "g1": C * r * npsi ** 2 * (npu * nv + nu * npv),
        "g2": C * r * _norm(f.psi_t) * npsi * nu * nv,
        "bilinear": r ** (2 - params.beta) * (nu ** 2 * npv ** 2 + npu ** 2 * nv ** 2),
        "quartic": r ** (3 * params.beta) * nu ** 2 * nv ** 2,
    }
    if q is not None:
        q0, q1 = q
        Pp, Pm, G = null_balance_fields(g, q0, q1, A0, params, "beta")
        out["bilinear_flux"] = r * (npv ** 2 * Pm + npu ** 2 * Pp)
        out["G_beta"] = np.abs(G)
    return out


class TimeAccumulator:
    """Trapezoid rule in t of slice integrals, summed in a fixed order."""

    def __init__(self):
        self.total = 0.0
        self._last = None

    def add(self, t, value):
        if self._last is not None:
            t0, v0 = self._last
            self.total += 0.5 * (t - t0) * (v0 + value)
        self._last = (t, value)
        return self.total


def nonlinear_integrals(trajectory, params: EstimateParams, frames=None, A0s=None):
    """Accumulated space-time integrals over all snapshots of ``trajectory``.

    Snapshots must be consecutive steps.  ``frames``/``A0s`` (one per
    snapshot, frames carrying q components) enable the G_beta integral.
    """
    acc = {}
    for n, s in enumerate(trajectory.snapshots):
        q = A0 = None
        if frames is not None:
            q = (frames[n].q0, frames[n].q1)
            A0 = A0s[n]
        dens = nonlinear_densities(s, params, q, A0)
        for key, val in dens.items():
            acc.setdefault(key, TimeAccumulator()).add(s.t, float(weighted_integral(s.grid, val, 0)))
    return {k: v.total for k, v in acc.items()}


# -- Sobolev-Hardy ---------------------------------------------------------

@dataclass(frozen=True)
class SobolevHardy:
    lhs: float
    rhs: float
    ratio: float


def sobolev_hardy_ratio(grid, psi, beta) -> SobolevHardy:
    """int r^beta |Psi|^4 dr against (int r^-beta |Psi|^2)(int r |Psi|^2)^beta (int r |Psi_r|^2)^(1-beta)."""
    psi = np.asarray(psi, dtype=float)
    sq = _sq(psi)
    lhs = float(weighted_integral(grid, sq * sq, beta, exact_weight=True))
    a = float(weighted_integral(grid, sq, -beta, exact_weight=True))
    b = float(weighted_integral(grid, sq, 1, exact_weight=True))
    dpsi = radial_derivative(grid, psi, parity=1)
    c = float(weighted_integral(grid, _sq(dpsi), 1, exact_weight=True))
    rhs = a * b ** beta * c ** (1 - beta)
    if rhs == 0.0:
        raise DegenerateProfile("profile vanishes identically; lhs = rhs = 0")
    return SobolevHardy(lhs, rhs, lhs / rhs)
