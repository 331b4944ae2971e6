"""Exponential-gauge frames on the pull-back bundle and their connection.

A frame e_i(t, r) of Phi^* TN is seeded at the outermost node and carried
inward by discrete parallel transport (tangent projection, then symmetric
re-orthonormalization), so that A_1 = <D_r e_i, e_l> vanishes up to the
transport error.  The remaining connection component A_0 = <D_t e_i, e_l> is
computed two ways: by differencing frames in time, and by integrating the
curvature F_01 = <R(Phi_t, Phi_r) e_i, e_l> inward from r_max, where A_0 is
normalized to zero.

Matrix fields are indexed [node, l, i] with entry <D e_i, e_l>, so that
D_t(q^i e_i) = (dq/dt + A0 q)^l e_l.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numba
import numpy as np

from .errors import DegenerateFrame, FrameMismatch
from .grid import radial_derivative, tail_integral, weighted_integral

# Gram-Schmidt discards projected axes shorter than this.
SEED_TOL = 1e-6
# Largest tolerated departure from orthonormality before re-orthonormalizing.
MAX_DEVIATION = 0.5


@dataclass(frozen=True, eq=False)
class GaugeFrame:
    t: float
    e: np.ndarray                     # (J, k, n)
    A0: Optional[np.ndarray] = None   # (J, k, k)
    q0: Optional[np.ndarray] = None   # (J, k)
    q1: Optional[np.ndarray] = None   # (J, k)
    a0_defect: float = 0.0

    @property
    def outer(self):
        return self.e[-1]


@numba.njit(cache=True)
def _gram_deviation(Y, G):
    """Fill G = Y Y^T and return max |G - I|."""
    k, n = Y.shape
    dev = 0.0
    for a in range(k):
        for b in range(a, k):
            c = 0.0
            for x in range(n):
                c += Y[a, x] * Y[b, x]
            G[a, b] = c
            G[b, a] = c
            d = abs(c - (1.0 if a == b else 0.0))
            if d > dev:
                dev = d
    return dev


@numba.njit(cache=True)
def _orthonormalize(V):
    """Polar factor (V V^T)^{-1/2} V by Newton-Schulz; returns (frame, deviation)."""
    k, n = V.shape
    G = np.empty((k, k))
    dev = _gram_deviation(V, G)
    if dev >= MAX_DEVIATION:
        return V, dev
    Y = V.copy()
    Z = np.empty((k, n))
    err = dev
    for _ in range(60):
        if err < 1e-15:
            break
        # Y <- 1.5 Y - 0.5 G Y
        for a in range(k):
            for x in range(n):
                c = 0.0
                for b in range(k):
                    c += G[a, b] * Y[b, x]
                Z[a, x] = 1.5 * Y[a, x] - 0.5 * c
        Y[:, :] = Z
        err = _gram_deviation(Y, G)
    return Y, dev


@numba.njit(cache=True)
def _transport_inward(nu, seed):
    """Carry ``seed`` (frame at the last node) inward; nu holds unit normals (J, m, n)."""
    J, m, n = nu.shape
    k = seed.shape[0]
    e = np.empty((J, k, n))
    e[J - 1] = seed
    worst = 0.0
    for j in range(J - 2, -1, -1):
        V = e[j + 1].copy()
        for i in range(k):
            for b in range(m):
                c = 0.0
                for a in range(n):
                    c += V[i, a] * nu[j, b, a]
                for a in range(n):
                    V[i, a] -= c * nu[j, b, a]
        Y, dev = _orthonormalize(V)
        if dev > worst:
            worst = dev
        if dev >= MAX_DEVIATION:
            return e, worst, j
        e[j] = Y
    return e, worst, -1


def seed_frame(target, p, previous=None):
    """Orthonormal tangent frame at the single point p.

    Without ``previous`` this is Gram-Schmidt on the tangent-projected
    coordinate axes taken in order; with it, the previous frame is projected
    to T_pN and re-orthonormalized (keeps the gauge continuous in time).
    """
    k, n = target.intrinsic_dim, target.ambient_dim
    if previous is not None:
        V = target.tangent_project(p, np.asarray(previous, dtype=float), check=False)
        Y, dev, = _orthonormalize(np.ascontiguousarray(V))
        if dev >= MAX_DEVIATION:
            raise DegenerateFrame("previous outer frame is far from tangent at the new outer point")
        return Y
    basis = []
    for axis in np.eye(n):
        v = target.tangent_project(p, axis, check=False)
        for b in basis:
            v = v - np.dot(v, b) * b
        nv = np.linalg.norm(v)
        if nv > SEED_TOL:
            basis.append(v / nv)
        if len(basis) == k:
            return np.array(basis)
    raise DegenerateFrame(f"only {len(basis)} of {k} independent tangent axes at the outer node")


def build_frame(state, seed=None) -> GaugeFrame:
    """Exponential-gauge frame for one time slice.

    ``seed`` is the outer frame of the previous slice (or None to start a
    chain from the coordinate axes).
    """
    M = state.target
    outer = seed_frame(M, state.phi[-1], seed)
    nu = np.ascontiguousarray(M.normals(state.phi))
    e, worst, bad = _transport_inward(nu, np.ascontiguousarray(outer))
    if bad >= 0:
        raise DegenerateFrame(f"transport lost orthonormality at node {bad} (deviation {worst:.3g})", t=state.t)
    return GaugeFrame(state.t, e)


def build_frames(states, seed=None):
    """Chain of frames over consecutive slices, each seeded by the previous outer frame."""
    frames = []
    for s in states:
        f = build_frame(s, seed)
        seed = f.outer
        frames.append(f)
    return frames


def transport_residual(grid, frame: GaugeFrame):
    """max |<(e_i(r_{j+1}) - e_i(r_j)) / dr, e_l(r_j)>|, the discrete A_1."""
    e = frame.e
    de = (e[1:] - e[:-1]) / grid.dr
    A1 = np.einsum("jia,jla->jli", de, e[:-1])
    return float(np.max(np.abs(A1), initial=0.0))


def _check_pair(a: GaugeFrame, b: GaugeFrame):
    if a.e.shape != b.e.shape:
        raise FrameMismatch(f"frame shapes differ: {a.e.shape} vs {b.e.shape}")
    if np.max(np.abs(a.outer - b.outer), initial=0.0) > MAX_DEVIATION:
        raise FrameMismatch("outer frames are not seeded from one another")


def connection_A0(frame_prev: GaugeFrame, frame_next: GaugeFrame, dt, frame_mid: Optional[GaugeFrame] = None,
                  antisymmetrize=True):
    """A0 at the middle slice by centred differencing of the frame in time.

    Returns ``(A0, defect)`` where defect is max |A + A^T| before
    antisymmetrization.  Without ``frame_mid`` the average of the two frames
    is used as the reference frame.
    """
    _check_pair(frame_prev, frame_next)
    if frame_mid is not None:
        _check_pair(frame_prev, frame_mid)
        ref = frame_mid.e
    else:
        ref = 0.5 * (frame_prev.e + frame_next.e)
    de = (frame_next.e - frame_prev.e) / (2 * dt)
    A = np.einsum("jia,jla->jli", de, ref)
    defect = float(np.max(np.abs(A + np.swapaxes(A, 1, 2)), initial=0.0))
    if antisymmetrize:
        A = 0.5 * (A - np.swapaxes(A, 1, 2))
    return A, defect


def curvature_F01(state, frame: GaugeFrame):
    """F01[j, l, i] = <R(Phi_t, Phi_r) e_i, e_l> via the Gauss equation."""
    M = state.target
    p = state.phi[:, None, :]
    e = frame.e
    Bt = M.b_ext(p, state.phi_t[:, None, :], e)
    Br = M.b_ext(p, state.phi_r[:, None, :], e)
    F = np.einsum("jla,jia->jli", Bt, Br)
    return F - np.swapaxes(F, 1, 2)


def a0_from_curvature(grid, F):
    """A0(r) = integral of F01 from r to r_max (A0 vanishes at r_max)."""
    return tail_integral(grid, F)


def q_components(state, frame: GaugeFrame):
    q0 = np.einsum("jia,ja->ji", frame.e, state.phi_t)
    q1 = np.einsum("jia,ja->ji", frame.e, state.phi_r)
    return q0, q1


def with_components(state, frame: GaugeFrame) -> GaugeFrame:
    q0, q1 = q_components(state, frame)
    return replace(frame, q0=q0, q1=q1)


def l2r(grid, f):
    """L^2(r dr) norm of a per-node (vector) field."""
    f = np.asarray(f, dtype=float)
    sq = f * f if f.ndim == 1 else np.sum(f.reshape(f.shape[0], -1) ** 2, axis=1)
    return float(np.sqrt(weighted_integral(grid, sq, 1)))


def residual_fields(grid, q_prev, q_mid, q_next, A0, dt):
    """Pointwise defects of dq0/dt + A0 q0 = (1/r) d(r q1)/dr and dq1/dt + A0 q1 = dq0/dr."""
    q0m, q1m = q_prev
    q0, q1 = q_mid
    q0p, q1p = q_next
    r = grid.r[:, None]
    div = radial_derivative(grid, r * q1, parity=1) / r
    r13 = (q0p - q0m) / (2 * dt) + np.einsum("jli,ji->jl", A0, q0) - div
    r14 = (q1p - q1m) / (2 * dt) + np.einsum("jli,ji->jl", A0, q1) - radial_derivative(grid, q0, parity=1)
    return r13, r14


def gauge_residuals(window, frames, dt, antisymmetrize=True):
    """L^2(r dr) norms of the two first-order gauge equations at the middle slice.

    ``window`` is three consecutive states, ``frames`` their chained frames.
    """
    s_prev, s_mid, s_next = window
    f_prev, f_mid, f_next = frames
    grid = s_mid.grid
    A0, _ = connection_A0(f_prev, f_next, dt, f_mid, antisymmetrize)
    qs = [q_components(s, f) for s, f in zip(window, frames)]
    r13, r14 = residual_fields(grid, qs[0], qs[1], qs[2], A0, dt)
    return {"res_213": l2r(grid, r13), "res_214": l2r(grid, r14)}
