"""Radial wave maps into an embedded target: leapfrog plus projection.

The unknown is the ambient vector Phi(t, r_j) in R^n.  One step is

    Phi^{n+1} = 2 Phi^n - Phi^{n-1} + dt^2 (Phi_rr + Phi_r / r + B(Phi_t, Phi_t) - B(Phi_r, Phi_r))

followed by nearest-point projection onto N.  B(Phi_t,Phi_t) - B(Phi_r,Phi_r)
equals 4 B(Phi_u, Phi_v) in null coordinates.  The velocity is rebuilt to
second order from the last two levels and projected onto the tangent space.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CflViolation, NumericalBlowup, SupportViolation
from .grid import RadialGrid, radial_derivative, radial_laplacian
from .manifold import TargetManifold

DEFAULT_CFL = 0.5
BLOWUP_CAP = 1e6
SCHEME = "leapfrog-projected"

# Gaussian tails are treated as zero below this relative size.
_GAUSS_CUTOFF = np.sqrt(np.log(1e16))


class Family(str, Enum):
    GAUSSIAN_BUMP = "gaussian_bump"
    RING_BUMP = "ring_bump"
    ZERO = "zero"


@dataclass(frozen=True, eq=False)
class FieldState:
    t: float
    phi: np.ndarray
    phi_t: np.ndarray
    grid: RadialGrid
    target: TargetManifold
    # previous level of the leapfrog recursion and the step that produced it
    phi_prev: Optional[np.ndarray] = field(default=None, repr=False)
    dt_prev: Optional[float] = None
    projection_defect: float = 0.0

    @property
    def phi_r(self):
        return spatial_derivative(self.grid, self.target, self.phi)

    def constraint_residual(self):
        return float(np.max(self.target.constraint_residual(self.phi), initial=0.0))

    def tangency_residual(self):
        nv = self.target.normal_part(self.phi, self.phi_t)
        return float(np.max(np.sqrt(np.einsum("ji,ji->j", nv, nv)), initial=0.0))


@dataclass
class Trajectory:
    snapshots: list
    dt: float
    scheme: str = SCHEME
    steps: int = 0

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]


def spatial_derivative(grid, target, phi):
    """Tangent part of the centred radial difference of Phi."""
    d = radial_derivative(grid, phi, parity=1)
    return target.tangent_project(phi, d, check=False)


def acceleration(grid, target, phi, phi_t):
    """Phi_tt as given by the wave-map equation."""
    phi_r = spatial_derivative(grid, target, phi)
    lap = radial_laplacian(grid, phi)
    return lap + target.b_ext(phi, phi_t, phi_t) - target.b_ext(phi, phi_r, phi_r)


def support_radius(family, width, center):
    family = Family(family)
    if family is Family.ZERO:
        return 0.0
    if family is Family.GAUSSIAN_BUMP:
        return center + _GAUSS_CUTOFF * width
    return center + width


def bump(x):
    """Smooth compactly supported bump on (-1, 1) with bump(0) = 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def init_state(family, amplitude, width, center, grid: RadialGrid, target: TargetManifold,
               t_planned=0.0, twist=1.0) -> FieldState:
    """Radial Cauchy data built from a scalar bump profile.

    gaussian_bump: Phi = base point, Phi_t = a exp(-(r-c)^2/w^2) d(r), where
    d(r) turns from the base direction towards a second tangent direction by
    the angle twist * (r/w)^2.  A turning direction keeps Phi_t and Phi_r
    from being parallel, so the curvature of N enters the dynamics; with
    twist = 0 (or a one-dimensional target) the solution stays on a geodesic.
    ring_bump: Phi = exp_base(a bump((r-c)/w) d), Phi_t = 0.
    zero: the constant map at the base point.
    """
    family = Family(family)
    r = grid.r
    p0 = target.base_point
    d = target.base_direction
    J, n = grid.J, target.ambient_dim
    phi = np.tile(p0, (J, 1))
    phi_t = np.zeros((J, n))
    if family is not Family.ZERO and amplitude != 0:
        if width <= 0:
            raise ValueError("width must be positive")
        reach = support_radius(family, width, center)
        if reach > grid.r_max - t_planned - 1:
            raise SupportViolation(
                f"data reach r={reach:.6g} but must stay within r_max - T - 1 = {grid.r_max - t_planned - 1:.6g}")
        if family is Family.GAUSSIAN_BUMP:
            prof = amplitude * np.exp(-((r - center) / width) ** 2)
            d2 = target.second_direction
            if d2 is None or twist == 0:
                dirs = np.tile(d, (J, 1))
            else:
                ang = twist * (r / width) ** 2
                dirs = np.cos(ang)[:, None] * d + np.sin(ang)[:, None] * d2
            phi_t = prof[:, None] * dirs
        else:
            prof = amplitude * bump((r - center) / width)
            phi = target.exp(phi, prof[:, None] * d[None, :])
    return FieldState(0.0, phi, phi_t, grid, target)


def _check_finite(v, cap, t):
    if not np.all(np.isfinite(v)) or np.max(np.abs(v), initial=0.0) > cap:
        raise NumericalBlowup(f"|Phi_t| exceeded {cap:g}", t=t)


def taylor_state(state: FieldState, dt) -> FieldState:
    """Second-order Taylor extrapolation of the state by dt (dt may be negative)."""
    g, M = state.grid, state.target
    a = acceleration(g, M, state.phi, state.phi_t)
    raw = state.phi + dt * state.phi_t + 0.5 * dt * dt * a
    phi = M.project(raw)
    phi_t = M.tangent_project(phi, state.phi_t + dt * a, check=False)
    return FieldState(state.t + dt, phi, phi_t, g, M,
                      projection_defect=float(np.max(M.constraint_residual(raw), initial=0.0)))


def step(state: FieldState, dt, cfl=DEFAULT_CFL, cap=BLOWUP_CAP) -> FieldState:
    g, M = state.grid, state.target
    t_new = state.t + dt
    if not dt > 0:
        raise CflViolation(f"dt must be positive, got {dt}", t=state.t)
    if dt > cfl * g.dr * (1 + 1e-12):
        raise CflViolation(f"dt={dt:g} exceeds {cfl:g} * dr", t=state.t)
    a = acceleration(g, M, state.phi, state.phi_t)
    if state.phi_prev is None or state.dt_prev != dt:
        raw = state.phi + dt * state.phi_t + 0.5 * dt * dt * a
    else:
        raw = 2 * state.phi - state.phi_prev + dt * dt * a
    defect = float(np.max(M.constraint_residual(raw), initial=0.0))
    phi = M.project(raw)
    v = (phi - state.phi) / dt + 0.5 * dt * a
    v = M.tangent_project(phi, v, check=False)
    _check_finite(v, cap, t_new)
    return FieldState(t_new, phi, v, g, M, phi_prev=state.phi, dt_prev=dt, projection_defect=defect)


def plan_steps(t0, t_end, dt_max):
    """Number of equal steps and their size so that t_end is hit exactly."""
    span = t_end - t0
    nsteps = int(np.ceil(span / dt_max - 1e-9))
    return nsteps, span / nsteps


def evolve(state: FieldState, t_end, dt=None, observers: Sequence[Callable] = (), save_every=1,
           cfl=DEFAULT_CFL, cap=BLOWUP_CAP) -> Trajectory:
    """Advance to ``t_end`` in equal steps no larger than ``dt`` (default cfl * dr).

    Each observer is called as ``obs(state, n)`` on the initial state and on
    every accepted step.  Every ``save_every``-th state and the final one are
    kept as snapshots.
    """
    if t_end < state.t:
        raise ValueError("t_end precedes the current time")
    dt_max = cfl * state.grid.dr if dt is None else dt
    for obs in observers:
        obs(state, 0)
    traj = Trajectory([state], dt_max)
    if t_end == state.t:
        return traj
    nsteps, dt = plan_steps(state.t, t_end, dt_max)
    traj.dt = dt
    t0 = state.t
    for n in range(1, nsteps + 1):
        state = step(state, dt, cfl=cfl, cap=cap)
        state = dataclasses.replace(state, t=t_end if n == nsteps else t0 + n * dt)
        for obs in observers:
            obs(state, n)
        if n % save_every == 0 or n == nsteps:
            traj.snapshots.append(state)
    traj.steps = nsteps
    return traj
