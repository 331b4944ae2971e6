import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavemap import TargetManifold, build_grid, init_state
from wavemap import estimates as est
from wavemap import gauge
from wavemap.errors import DegenerateProfile, NegativeFlux
from wavemap.estimates import EstimateParams
from wavemap.grid import radial_derivative, weighted_integral
from conftest import orders, sphere_run

P = EstimateParams()


def frames_and_A0(traj):
    frames = [gauge.with_components(s, f) for s, f in zip(traj.snapshots, gauge.build_frames(traj.snapshots))]
    A0s = [gauge.a0_from_curvature(s.grid, gauge.curvature_F01(s, f)) for s, f in zip(traj.snapshots, frames)]
    return frames, A0s


def window_terms(traj, n):
    states = traj.snapshots[n - 1:n + 2]
    frames = gauge.build_frames(states)
    A0, _ = gauge.connection_A0(frames[0], frames[2], traj.dt, frames[1])
    qs = tuple(gauge.q_components(s, f) for s, f in zip(states, frames))
    return states[1].grid, qs, A0


# -- parameters -----------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(sigma=0.0), dict(sigma=0.3, alpha=0.2), dict(beta=0.05), dict(beta=0.3),
                                dict(quartic=True)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        EstimateParams(**kw)


@given(st.floats(0.1, 0.25))
def test_quartic_params(beta):
    p = EstimateParams(beta=beta).for_quartic()
    assert abs(2 - 2 * p.alpha - 3 * p.beta) < 1e-12 and p.quartic


# -- energy and weighted norms --------------------------------------------

def test_energy_of_constant_map():
    g = build_grid(0.1, 8.0)
    assert est.energy(init_state("zero", 0.0, 1.0, 0.0, g, TargetManifold("sphere"))) == 0


def test_weighted_norms_zero():
    g = build_grid(0.1, 8.0)
    z = np.zeros((g.J, 2))
    out = est.weighted_norms(g, z, z, P)
    assert out["W_beta"] == 0 and np.all(out["Q0"] == 0) and np.all(out["Q"] == 0)


def test_Q0_profile_of_constant():
    errs = []
    for k in (4, 5, 6):
        g = build_grid(2.0 ** -k, 4.0)
        c = np.array([0.3, -1.2])
        Q0 = est.Q0_profile(g, np.tile(c, (g.J, 1)), 0.01)
        exact = np.outer(g.r ** 0.99 / 0.99, c)
        errs.append(np.max(np.abs(Q0 - exact)))
        assert errs[-1] <= g.dr
    assert errs[-1] < 1e-12


def test_weighted_norm_is_gauge_invariant(sphere_runs):
    traj = sphere_runs[2.0 ** -5]
    for s in traj.snapshots[::10]:
        q0, q1 = gauge.q_components(s, gauge.build_frame(s))
        a = est.weighted_norms(s.grid, q0, q1, P)["W_beta"]
        b = est.weighted_norm_frame_free(s, P)
        assert abs(a - b) <= 1e-9


# -- balance laws ------------------------------------------------------------

def test_balance_residual_zero_data():
    traj = sphere_run(2.0 ** -4, amplitude=0.0)
    g, qs, A0 = window_terms(traj, 3)
    assert est.balance_residual(g, qs, A0, traj.dt, P) == 0
    assert est.null_balance_residual(g, qs, A0, traj.dt, P) == 0
    Pp, Pm, G = est.null_balance_fields(g, *qs[1], A0, P)
    assert np.all(Pp == 0) and np.all(Pm == 0) and np.all(G == 0)


@pytest.mark.parametrize("kind", ["flat", "sphere"])
def test_balance_residual_orders(kind, sphere_runs):
    if kind == "sphere":
        runs = [sphere_runs[dr] for dr in (2.0 ** -5, 2.0 ** -6, 2.0 ** -7)]
    else:
        runs = [sphere_run(dr, kind="flat", ambient_dim=2) for dr in (2.0 ** -4, 2.0 ** -5, 2.0 ** -6)]
    bal, null, null_a = [], [], []
    for traj in runs:
        g, qs, A0 = window_terms(traj, len(traj) // 2)
        bal.append(est.balance_residual(g, qs, A0, traj.dt, P))
        null.append(est.null_balance_residual(g, qs, A0, traj.dt, P, "beta"))
        null_a.append(est.null_balance_residual(g, qs, A0, traj.dt, P, "alpha"))
    for v in (bal, null, null_a):
        assert np.all(orders(v) >= 1.0)


def test_null_fluxes_without_Q0_terms():
    # q1 = 0 gives Q0 = 0, so only the null-coordinate squares remain
    g = build_grid(0.125, 6.0)
    rng = np.random.default_rng(0)
    q0 = rng.standard_normal((g.J, 2))
    q1 = np.zeros_like(q0)
    Pp, Pm, _ = est.null_balance_fields(g, q0, q1, np.zeros((g.J, 2, 2)), P)
    half = 0.5 * g.r ** (1 - P.beta) * np.sum(q0 ** 2, axis=1)
    assert np.allclose(Pp, half, rtol=1e-14) and np.allclose(Pm, half, rtol=1e-14)


def test_null_fluxes_match_null_derivatives(sphere_runs):
    s = sphere_runs[2.0 ** -5].snapshots[20]
    g = s.grid
    fr = gauge.build_frame(s)
    q0, q1 = gauge.q_components(s, fr)
    Pp, Pm, _ = est.null_balance_fields(g, q0, q1, np.zeros((g.J, 2, 2)), P)
    Q0 = est.Q0_profile(g, q1, P.sigma)
    r = g.r
    kappa = (P.beta - P.sigma + 1) / 4
    QQ = kappa * r ** (2 * P.sigma - 1 - P.beta) * np.sum(Q0 ** 2, axis=1)
    phi_u, phi_v = 0.5 * (s.phi_t - s.phi_r), 0.5 * (s.phi_t + s.phi_r)
    mixed_m = 0.5 * r ** (P.sigma - P.beta) * np.sum(Q0 * (q1 - q0), axis=1)
    mixed_p = 0.5 * r ** (P.sigma - P.beta) * np.sum(Q0 * (q1 + q0), axis=1)
    assert np.allclose(Pm - mixed_m - QQ, 2 * r ** (1 - P.beta) * np.sum(phi_u ** 2, axis=1), atol=1e-13)
    assert np.allclose(Pp - mixed_p - QQ, 2 * r ** (1 - P.beta) * np.sum(phi_v ** 2, axis=1), atol=1e-13)


def test_null_fluxes_stay_positive(sphere_runs):
    traj = sphere_runs[2.0 ** -5]
    frames, A0s = frames_and_A0(traj)
    for s, f, A0 in zip(traj.snapshots, frames, A0s):
        Pp, Pm, _ = est.null_balance_fields(s.grid, f.q0, f.q1, A0, P)
        est.check_null_fluxes(Pp, Pm, t=s.t)


def test_negative_flux_is_reported():
    with pytest.raises(NegativeFlux):
        est.check_null_fluxes(np.array([1.0, -0.5]), np.array([1.0, 1.0]), t=0.0)


# -- H^2 level ---------------------------------------------------------------

def test_h2_zero_and_flat_sources():
    g = build_grid(0.125, 8.0)
    z = init_state("zero", 0.0, 1.0, 0.0, g, TargetManifold("sphere"))
    assert est.h2_energy(z) == 0
    s = init_state("gaussian_bump", 0.5, 1.0, 0.0, g, TargetManifold("flat", 2))
    G1, G1h = est.h2_sources(s)
    assert np.all(G1 == 0) and np.all(G1h == 0)


@pytest.mark.parametrize("a,w", [(1.0, 1.0), (0.3, 0.7)])
def test_flat_h2_at_start(a, w):
    # Phi0 = 0, Phi1 = a exp(-r^2/w^2): E1 = int r |Phi1'|^2 dr = a^2 / 2
    errs = []
    for k in (4, 5, 6):
        g = build_grid(2.0 ** -k, 16.0)
        s = init_state("gaussian_bump", a, w, 0.0, g, TargetManifold("flat"))
        errs.append(abs(est.h2_energy(s) - a * a / 2))
    assert errs[-1] < 1e-3 * a * a
    assert np.all(orders(errs) > 1.8)


def test_h2_identity_converges(sphere_runs):
    res = []
    for dr in (2.0 ** -5, 2.0 ** -6, 2.0 ** -7):
        traj = sphere_runs[dr]
        n = len(traj) // 2
        prev, mid, nxt = traj.snapshots[n - 1:n + 2]
        e_prev, _ = est.h2_flux_densities(prev)
        e_next, _ = est.h2_flux_densities(nxt)
        _, F = est.h2_flux_densities(mid)
        G1, _ = est.h2_sources(mid)
        dF = radial_derivative(mid.grid, F, parity=-1)
        defect = (e_next - e_prev) / (2 * traj.dt) - dF - G1
        res.append(float(weighted_integral(mid.grid, np.abs(defect), 0)))
    assert np.all(orders(res) >= 1.0)


# -- space-time integrals ----------------------------------------------------

def brute_force_integrals(traj, params, frames, A0s):
    """Double loop over (time level, node) with pointwise densities and trapezoid weights in t."""
    out = {k: 0.0 for k in ("g1", "g2", "bilinear", "quartic", "bilinear_flux", "G_beta")}
    snaps = traj.snapshots
    for n, s in enumerate(snaps):
        if n == 0:
            wt = 0.5 * (snaps[1].t - snaps[0].t)
        elif n == len(snaps) - 1:
            wt = 0.5 * (snaps[n].t - snaps[n - 1].t)
        else:
            wt = 0.5 * (snaps[n + 1].t - snaps[n - 1].t)
        f = est.h2_fields(s)
        Pp, Pm, G = est.null_balance_fields(s.grid, frames[n].q0, frames[n].q1, A0s[n], params)
        slice_sums = dict.fromkeys(out, 0.0)
        for j, r in enumerate(s.grid.r):
            nrm = lambda v: math.sqrt(sum(x * x for x in v[j]))
            pu = [0.5 * (a - b) for a, b in zip(f.psi_t[j], f.psi_r[j])]
            pv = [0.5 * (a + b) for a, b in zip(f.psi_t[j], f.psi_r[j])]
            npu, npv = math.sqrt(sum(x * x for x in pu)), math.sqrt(sum(x * x for x in pv))
            nu, nv, npsi, npsit = nrm(f.phi_u), nrm(f.phi_v), nrm(f.psi), nrm(f.psi_t)
            C = s.target.db_constant
            vals = {
                "g1": C * r * npsi ** 2 * (npu * nv + nu * npv),
                "g2": C * r * npsit * npsi * nu * nv,
                "bilinear": r ** (2 - params.beta) * (nu ** 2 * npv ** 2 + npu ** 2 * nv ** 2),
                "quartic": r ** (3 * params.beta) * nu ** 2 * nv ** 2,
                "bilinear_flux": r * (npv ** 2 * Pm[j] + npu ** 2 * Pp[j]),
                "G_beta": abs(G[j]),
            }
            for k, v in vals.items():
                slice_sums[k] += v * s.grid.dr
        for k in out:
            out[k] += wt * slice_sums[k]
    return out


def test_nonlinear_integrals_match_brute_force():
    traj = sphere_run(2.0 ** -3, amplitude=0.4, t_end=0.5, r_max=10.0)
    frames, A0s = frames_and_A0(traj)
    mod = est.nonlinear_integrals(traj, P, frames, A0s)
    ref = brute_force_integrals(traj, P, frames, A0s)
    for k, v in ref.items():
        assert mod[k] == pytest.approx(v, rel=1e-12, abs=1e-15), k


def test_nonlinear_integrals_trivial_cases():
    z = sphere_run(2.0 ** -3, amplitude=0.0, t_end=0.5, r_max=10.0)
    assert all(v == 0 for v in est.nonlinear_integrals(z, P).values())
    flat = sphere_run(2.0 ** -3, amplitude=0.4, t_end=0.5, r_max=10.0, kind="flat", ambient_dim=2)
    out = est.nonlinear_integrals(flat, P)
    assert out["g1"] == 0 and out["g2"] == 0
    assert out["bilinear"] > 0 and out["quartic"] > 0


def test_G_beta_shrinks_with_amplitude():
    vals = []
    for a in (0.05, 0.1, 0.2):
        traj = sphere_run(2.0 ** -4, amplitude=a, t_end=1.0)
        frames, A0s = frames_and_A0(traj)
        vals.append(est.nonlinear_integrals(traj, P, frames, A0s)["G_beta"])
    assert np.all(np.isfinite(vals)) and vals[0] < vals[1] < vals[2]


# -- Sobolev-Hardy -------------------------------------------------------------

def test_sobolev_hardy_degenerate():
    g = build_grid(0.125, 4.0)
    with pytest.raises(DegenerateProfile):
        est.sobolev_hardy_ratio(g, np.zeros(g.J), 0.2)


def gaussian_oracle(beta):
    """Closed form of the ratio for Psi = exp(-r^2)."""
    lhs = 0.5 * 4 ** (-(beta + 1) / 2) * math.gamma((beta + 1) / 2)
    a = 0.5 * 2 ** (-(1 - beta) / 2) * math.gamma((1 - beta) / 2)
    return lhs / (a * 0.25 ** beta * 0.5 ** (1 - beta))


@pytest.mark.parametrize("beta", [0.1, 0.2, 0.25])
def test_sobolev_hardy_gaussian(beta):
    g = build_grid(2.0 ** -12, 8.0)
    assert est.sobolev_hardy_ratio(g, np.exp(-g.r ** 2), beta).ratio == pytest.approx(gaussian_oracle(beta), abs=1e-6)


def random_profile(rng, r):
    c = rng.uniform(-1, 1, 3)
    s = rng.uniform(0.5, 2.0, 3)
    m = rng.uniform(0.0, 2.0, 3)
    return sum(ci * np.exp(-((r - mi) / si) ** 2) for ci, si, mi in zip(c, s, m))


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.5, 2.0]), st.floats(0.1, 0.25))
def test_sobolev_hardy_scale_invariance(seed, lam, beta):
    rng = np.random.default_rng(seed)
    g = build_grid(2.0 ** -7, 16.0)
    psi = random_profile(rng, g.r)
    base = est.sobolev_hardy_ratio(g, psi, beta)
    # Psi(lam r) sampled on the grid scaled by 1/lam has the same nodal values
    gs = build_grid(g.dr / lam, g.r_max / lam)
    scaled = est.sobolev_hardy_ratio(gs, random_profile(np.random.default_rng(seed), lam * gs.r), beta)
    assert scaled.ratio == pytest.approx(base.ratio, rel=1e-8)
    assert scaled.lhs == pytest.approx(lam ** (-1 - beta) * base.lhs, rel=1e-8)
