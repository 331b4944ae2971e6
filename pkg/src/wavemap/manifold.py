"""Embedded target manifolds N in R^n and their extrinsic geometry.

Every supported target is a product of round circles/spheres sitting in
disjoint coordinate blocks of R^n (possibly with no blocks at all, which is
flat space).  That makes projection, the normal bundle, the second
fundamental form and its derivative closed-form per block.

All functions broadcast over leading axes; the last axis is the ambient
coordinate index.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import NonTangent, OffManifold, SingularProjection

TOL = 1e-8


class Kind(str, Enum):
    SPHERE = "sphere"
    CLIFFORD_TORUS = "clifford_torus"
    FLAT = "flat"


@dataclass(frozen=True)
class BoundsReport:
    sup_B: float
    sup_grad_B: float
    sup_dB: float
    sup_grad_frame: Optional[float]


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


class TargetManifold:
    """A target N = S^{k} (unit sphere), the Clifford torus, or flat R^n.

    ``blocks`` lists ``(slice, radius)`` pairs; inside each block the points
    lie on a round sphere of that radius.
    """

    def __init__(self, kind, ambient_dim: Optional[int] = None):
        self.kind = Kind(kind)
        if self.kind is Kind.SPHERE:
            n = 3 if ambient_dim is None else int(ambient_dim)
            if n < 2:
                raise ValueError("sphere needs ambient_dim >= 2")
            self.blocks = [(slice(0, n), 1.0)]
            k = n - 1
        elif self.kind is Kind.CLIFFORD_TORUS:
            if ambient_dim not in (None, 4):
                raise ValueError("the Clifford torus lives in R^4")
            n, k = 4, 2
            a = np.sqrt(0.5)
            self.blocks = [(slice(0, 2), a), (slice(2, 4), a)]
        else:
            n = 1 if ambient_dim is None else int(ambient_dim)
            if n < 1:
                raise ValueError("flat target needs ambient_dim >= 1")
            self.blocks = []
            k = n
        self.ambient_dim = n
        self.intrinsic_dim = k

    def __repr__(self):
        return f"TargetManifold({self.kind.value!r}, ambient_dim={self.ambient_dim})"

    def __eq__(self, other):
        return (isinstance(other, TargetManifold) and other.kind is self.kind
                and other.ambient_dim == self.ambient_dim)

    def __hash__(self):
        return hash((self.kind, self.ambient_dim))

    @property
    def db_constant(self):
        """Sharp C with |(D_V B)(X, Y)| <= C |V| |X| |Y|: the largest 1/a^2 over round factors."""
        return max((1.0 / (a * a) for _, a in self.blocks), default=0.0)

    @property
    def codim(self):
        return self.ambient_dim - self.intrinsic_dim

    # -- reference data used by initial conditions ---------------------------
    @property
    def base_point(self):
        p = np.zeros(self.ambient_dim)
        if self.kind is Kind.SPHERE:
            p[-1] = 1.0
        elif self.kind is Kind.CLIFFORD_TORUS:
            p[0] = p[2] = np.sqrt(0.5)
        return p

    @property
    def base_direction(self):
        """Unit tangent vector at ``base_point``."""
        d = np.zeros(self.ambient_dim)
        if self.kind is Kind.CLIFFORD_TORUS:
            d[1] = 1.0
        else:
            d[0] = 1.0
        return d

    @property
    def second_direction(self):
        """Unit tangent at ``base_point`` orthogonal to ``base_direction``, or None if k = 1."""
        if self.intrinsic_dim < 2:
            return None
        d = np.zeros(self.ambient_dim)
        d[3 if self.kind is Kind.CLIFFORD_TORUS else 1] = 1.0
        return d

    # -- constraint ---------------------------------------------------------
    def project(self, p):
        p = np.asarray(p, dtype=float)
        out = p.copy()
        for sl, a in self.blocks:
            pf = p[..., sl]
            nrm = np.sqrt(_dot(pf, pf))
            if np.any(nrm <= 1e-12):
                raise SingularProjection(f"{self.kind.value}: point on the singular set of the projection")
            out[..., sl] = a * pf / nrm[..., None]
        return out

    def constraint_residual(self, p):
        p = np.asarray(p, dtype=float)
        res = np.zeros(p.shape[:-1])
        for sl, a in self.blocks:
            pf = p[..., sl]
            res = np.maximum(res, np.abs(np.sqrt(_dot(pf, pf)) - a))
        return res

    def _require_on(self, p, tol):
        if self.blocks and np.max(self.constraint_residual(p), initial=0.0) > tol:
            raise OffManifold(f"point is not on the {self.kind.value} target (tol {tol:g})")

    def _require_tangent(self, p, X, tol):
        X = np.asarray(X, dtype=float)
        nrm = np.sqrt(_dot(X, X))
        off = np.sqrt(_dot(*(self.normal_part(p, X),) * 2))
        if np.any(off > tol * (1.0 + nrm)):
            raise NonTangent("vector is not tangent to the target")

    def normals(self, p):
        """Orthonormal normal frame, shape ``(..., codim, n)``."""
        p = np.asarray(p, dtype=float)
        nu = np.zeros(p.shape[:-1] + (len(self.blocks), self.ambient_dim))
        for b, (sl, a) in enumerate(self.blocks):
            pf = p[..., sl]
            nu[..., b, sl] = pf / np.sqrt(_dot(pf, pf))[..., None]
        return nu

    def normal_part(self, p, X):
        p = np.asarray(p, dtype=float)
        X = np.asarray(X, dtype=float)
        out = np.zeros(np.broadcast(p, X).shape)
        for sl, a in self.blocks:
            pf = p[..., sl]
            out[..., sl] = (_dot(pf, X[..., sl]) / (a * a))[..., None] * pf
        return out

    def tangent_project(self, p, X, check=True):
        if check:
            self._require_on(p, TOL)
        return np.asarray(X, dtype=float) - self.normal_part(p, X)

    def projector(self, p):
        """Tangent projector as an ``(n, n)`` matrix field."""
        nu = self.normals(p)
        eye = np.eye(self.ambient_dim)
        return eye - np.einsum("...bi,...bj->...ij", nu, nu)

    # -- second fundamental form --------------------------------------------
    def b_ext(self, p, X, Y):
        """B_p(Pi X, Pi Y) for arbitrary ambient X, Y (no input checks)."""
        p = np.asarray(p, dtype=float)
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = np.zeros(np.broadcast(p, X, Y).shape)
        for sl, a in self.blocks:
            pf, xf, yf = p[..., sl], X[..., sl], Y[..., sl]
            a2 = a * a
            c = _dot(xf, yf) - _dot(pf, xf) * _dot(pf, yf) / a2
            out[..., sl] = -(c / a2)[..., None] * pf
        return out

    def second_fundamental_form(self, p, X, Y, check=True):
        if check:
            self._require_on(p, TOL)
            self._require_tangent(p, X, TOL)
            self._require_tangent(p, Y, TOL)
        return self.b_ext(p, X, Y)

    def db(self, p, V, X, Y):
        """Derivative of ``b_ext(., X, Y)`` at p along the tangent vector V."""
        p = np.asarray(p, dtype=float)
        V = np.asarray(V, dtype=float)
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = np.zeros(np.broadcast(p, V, X, Y).shape)
        for sl, a in self.blocks:
            pf, vf, xf, yf = p[..., sl], V[..., sl], X[..., sl], Y[..., sl]
            a2 = a * a
            px, py = _dot(pf, xf), _dot(pf, yf)
            c = _dot(xf, yf) - px * py / a2
            dc = -(_dot(vf, xf) * py + px * _dot(vf, yf)) / a2
            out[..., sl] = -(dc / a2)[..., None] * pf - (c / a2)[..., None] * vf
        return out

    def curvature(self, p, X, Y, Z, W, check=True):
        """<R(X,Y)Z, W> from the Gauss equation."""
        if check:
            self._require_on(p, TOL)
            for v in (X, Y, Z, W):
                self._require_tangent(p, v, TOL)
        B = self.b_ext
        return _dot(B(p, X, W), B(p, Y, Z)) - _dot(B(p, X, Z), B(p, Y, W))

    # -- geodesics and global frames ----------------------------------------
    def exp(self, p, V):
        """Exponential map; V must be tangent at p."""
        p = np.asarray(p, dtype=float)
        V = np.asarray(V, dtype=float)
        out = p + V
        for sl, a in self.blocks:
            pf, vf = p[..., sl], V[..., sl]
            speed = np.sqrt(_dot(vf, vf))
            theta = speed / a
            safe = np.where(speed > 0, speed, 1.0)
            out[..., sl] = (np.cos(theta)[..., None] * pf
                            + (a * np.sin(theta) / safe)[..., None] * vf)
        return out

    def frame_bar(self, p):
        """Global orthonormal tangent frame (k, n) where N is parallelizable.

        Returns None for spheres.
        """
        p = np.asarray(p, dtype=float)
        if self.kind is Kind.SPHERE:
            return None
        if self.kind is Kind.FLAT:
            return np.broadcast_to(np.eye(self.ambient_dim), p.shape[:-1] + (self.ambient_dim,) * 2).copy()
        e = np.zeros(p.shape[:-1] + (2, 4))
        for b, (sl, a) in enumerate(self.blocks):
            pf = p[..., sl]
            e[..., b, sl.start] = -pf[..., 1] / a
            e[..., b, sl.start + 1] = pf[..., 0] / a
        return e

    # -- finite-difference oracles ------------------------------------------
    def second_fundamental_form_fd(self, p, X, Y, h=1e-6):
        """Normal part of (d_X Pi) Y, Pi the tangent projector."""
        p = np.asarray(p, dtype=float)
        Pp = self.projector(self.project(p + h * np.asarray(X)))
        Pm = self.projector(self.project(p - h * np.asarray(X)))
        dPY = np.einsum("...ij,...j->...i", (Pp - Pm) / (2 * h), np.asarray(Y, dtype=float))
        return self.normal_part(p, dPY)

    def db_fd(self, p, V, X, Y, h=1e-5):
        """Central difference of ``b_ext(., X, Y)`` along the geodesic through p with velocity V."""
        V = np.asarray(V, dtype=float)
        return (self.b_ext(self.exp(p, h * V), X, Y) - self.b_ext(self.exp(p, -h * V), X, Y)) / (2 * h)

    # -- sampling -----------------------------------------------------------
    def random_points(self, rng, m):
        n = self.ambient_dim
        if self.kind is Kind.SPHERE:
            return self.project(rng.standard_normal((m, n)))
        if self.kind is Kind.CLIFFORD_TORUS:
            th = rng.uniform(0, 2 * np.pi, (m, 2))
            a = np.sqrt(0.5)
            return a * np.stack([np.cos(th[:, 0]), np.sin(th[:, 0]), np.cos(th[:, 1]), np.sin(th[:, 1])], axis=-1)
        return rng.standard_normal((m, n))

    def random_tangents(self, rng, p):
        return self.tangent_project(p, rng.standard_normal(np.shape(p)), check=False)

    def verify_bounds(self, samples: int, seed=0) -> BoundsReport:
        """Sampled suprema of |B|, |grad B|, |dB| and |grad of the global frame|.

        Every ratio is normalized by the lengths of its vector arguments.
        The diagonal X = Y is always included, since that is where |B| peaks
        for the round factors.
        """
        if samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.blocks:
            grad_frame = 0.0
            return BoundsReport(0.0, 0.0, 0.0, grad_frame)
        rng = np.random.default_rng(seed)
        p = self.random_points(rng, samples)
        X = self.random_tangents(rng, p)
        Y = self.random_tangents(rng, p)
        Z = self.random_tangents(rng, p)
        nx, ny, nz = (np.sqrt(_dot(v, v)) for v in (X, Y, Z))

        def ratio(vec, den):
            return np.sqrt(_dot(vec, vec)) / den

        sup_B = max(np.max(ratio(self.b_ext(p, X, Y), nx * ny)),
                    np.max(ratio(self.b_ext(p, X, X), nx * nx)))
        dB = self.db_fd(p, Z / nz[:, None], X, X)
        sup_dB = float(np.max(ratio(dB, nx * nx)))
        sup_grad_B = float(np.max(ratio(self.normal_part(p, dB), nx * nx)))

        grad_frame = None
        if self.frame_bar(p[:1]) is not None:
            h = 1e-5
            Zu = Z / nz[:, None]
            de = (self.frame_bar(self.exp(p, h * Zu)) - self.frame_bar(self.exp(p, -h * Zu))) / (2 * h)
            tang = de - self.normal_part(p[:, None, :], de)
            grad_frame = float(np.max(np.sqrt(np.einsum("mki,mki->mk", tang, tang))))
        return BoundsReport(float(sup_B), sup_grad_B, sup_dB, grad_frame)
