import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavemap import divcurl as dc
from wavemap import estimates as est
from wavemap import gauge
from wavemap.errors import InvariantViolation
from wavemap.estimates import EstimateParams
from conftest import sphere_run


def trap(vals, step):
    total = 0.0
    for k, v in enumerate(vals):
        w = 0.5 if k in (0, len(vals) - 1) else 1.0
        total += w * v * step
    return total if len(vals) > 1 else 0.0


def brute_force(field):
    """Every integral of both flux bounds and the bilinear bound by explicit loops."""
    h, nT, nR = field.h, field.nT, field.nR
    ni, nj = field.shape
    inside = lambda i, j: 0 <= i + j - nR <= 2 * nT and j - i + nR >= 0

    def u_max(F):
        best = 0.0
        for i in range(ni):
            vals = [F[i, j] for j in range(nj) if inside(i, j)]
            best = max(best, trap(vals, h / 2))
        return best

    def v_max(F):
        best = 0.0
        for j in range(nj):
            vals = [F[i, j] for i in range(ni) if inside(i, j)]
            best = max(best, trap(vals, h / 2))
        return best

    def on_slice(F, s):
        pts = sorted(((j - i + nR, i, j) for i in range(ni) for j in range(nj)
                      if i + j - nR == s and j - i + nR >= 0))
        return trap([F[i, j] for _, i, j in pts], h)

    def area(f):
        total = 0.0
        for i in range(ni):
            for j in range(nj):
                if not inside(i, j):
                    continue
                w = h * h / 2
                if i + j - nR in (0, 2 * nT):
                    w /= 2
                if j - i + nR == 0:
                    w /= 2
                total += w * f[i, j]
        return total

    out = {
        "lhs1": u_max(field.F11) + v_max(field.F12),
        "lhs2": u_max(field.F21) + v_max(field.F22),
        "rhs1": on_slice(field.F11 + field.F12, 0) + area(np.abs(field.G1)),
        "rhs2": (on_slice(field.F21 + field.F22, 2 * nT) + on_slice(field.F21 + field.F22, 0)
                 + area(np.abs(field.G2))),
        "bilinear_lhs": area(field.F11 * field.F22 + field.F12 * field.F21),
    }
    return out


@pytest.mark.parametrize("seed", [0, 1, 7])
@pytest.mark.parametrize("m", [8, 4])
def test_integrals_match_brute_force(seed, m):
    f = dc.synthesize_field(seed, K=64).subsample(m)
    fb = dc.flux_bounds(f, check=False)
    bb = dc.bilinear_bound(f, check=False)
    ref = brute_force(f)
    for key in ("lhs1", "lhs2", "rhs1", "rhs2"):
        assert fb[key] == pytest.approx(ref[key], rel=1e-12, abs=1e-14), key
    assert bb["lhs"] == pytest.approx(ref["bilinear_lhs"], rel=1e-12, abs=1e-14)


def test_zero_field():
    f = dc.synthesize_field(3, K=16, modes=0)
    assert all(np.all(F == 0) for F in (f.F11, f.F12, f.F21, f.F22, f.G1, f.G2))
    fb = dc.flux_bounds(f)
    assert fb["lhs1"] == fb["rhs1"] == fb["ratio1"] == 0
    bb = dc.bilinear_bound(f)
    assert bb["lhs"] == 0 and bb["ratio"] == 0


def test_synthesis_is_deterministic():
    a, b = dc.synthesize_field(11), dc.synthesize_field(11)
    for name in ("F11", "F12", "F21", "F22", "G1", "G2"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_lattice_shape():
    f = dc.synthesize_field(0, K=64)
    assert f.shape == (65, 97) and f.h == 2 / 64


def test_corpus_subset_passes_invariants():
    rows = dc.corpus(range(10), K=32)
    assert all(r["invariant_residuals"] <= 1e-10 for r in rows)
    assert all(np.isfinite(r["bilinear_ratio"]) for r in rows)


@pytest.mark.parametrize("K,tol", [(32, 0.05), (64, 0.01), (256, 1e-3)])
def test_bump_ratio_is_one(K, tol):
    f = dc.bump_field(K)
    fb = dc.flux_bounds(f, pde_tol=1e-12)
    assert fb["ratio1"] == pytest.approx(1.0, abs=tol)


def test_bump_bilinear_against_brute_force():
    f = dc.bump_field(16)
    bb = dc.bilinear_bound(f, check=False)
    ref = brute_force(f)
    assert bb["lhs"] == pytest.approx(ref["bilinear_lhs"], rel=1e-12)
    assert bb["ratio"] <= 1 + 0.1
    assert dc.bilinear_bound(dc.bump_field(64))["ratio"] <= 1 + 0.05


def test_structural_zero_without_second_pair():
    f = dc.bump_field(32, psi=lambda r: 0 * r)
    assert dc.bilinear_bound(f)["lhs"] == 0


@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_ratios_are_scale_invariant(seed, c):
    f = dc.synthesize_field(seed, K=16)
    a, b = dc.flux_bounds(f, check=False), dc.flux_bounds(f.scaled(c), check=False)
    assert b["ratio1"] == pytest.approx(a["ratio1"], rel=1e-10)
    assert b["ratio2"] == pytest.approx(a["ratio2"], rel=1e-10)


@given(st.integers(0, 10_000))
def test_synthetic_invariants(seed):
    f = dc.synthesize_field(seed, K=16, modes=3)
    rep = dc.check_invariants(f)
    assert rep.min_flux >= 0 and rep.axis_residual <= 1e-12


def test_invariant_violations_are_detected():
    f = dc.synthesize_field(0, K=16)
    bad = dc.DivCurlField(f.T, f.R, f.h, -f.F11, f.F12, f.F21, f.F22, f.G1, f.G2)
    with pytest.raises(InvariantViolation):
        dc.check_invariants(bad)
    shifted = dc.DivCurlField(f.T, f.R, f.h, f.F11 + 1.0, f.F12, f.F21, f.F22, f.G1, f.G2)
    with pytest.raises(InvariantViolation):
        dc.check_invariants(shifted)
    wrong_source = dc.DivCurlField(f.T, f.R, f.h, f.F11, f.F12, f.F21, f.F22, 0 * f.G1 + 1.0, f.G2)
    with pytest.raises(InvariantViolation):
        dc.check_invariants(wrong_source)


def test_zero_solution_gives_zero_field():
    traj = sphere_run(2.0 ** -3, amplitude=0.0, t_end=1.0)
    f = dc.fields_from_solution(traj.snapshots, EstimateParams(), R=1.0)
    assert all(np.all(F == 0) for F in (f.F11, f.F12, f.F21, f.F22, f.G1, f.G2))


def test_flat_solution_field():
    traj = sphere_run(2.0 ** -4, amplitude=0.3, t_end=1.0, kind="flat", ambient_dim=2)
    f = dc.fields_from_solution(traj.snapshots, EstimateParams())
    assert np.all(f.G1 == 0)
    assert np.isfinite(dc.bilinear_bound(f, check=False)["ratio"])


def test_solution_field_reproduces_null_bilinear_integral():
    p = EstimateParams()
    rel, pde = [], []
    for dr in (2.0 ** -4, 2.0 ** -5, 2.0 ** -6):
        traj = sphere_run(dr, amplitude=0.3, t_end=1.0)
        f = dc.fields_from_solution(traj.snapshots, p)
        frames = [gauge.with_components(s, fr) for s, fr in zip(traj.snapshots, gauge.build_frames(traj.snapshots))]
        A0s = [gauge.a0_from_curvature(s.grid, gauge.curvature_F01(s, fr)) for s, fr in zip(traj.snapshots, frames)]
        ref = est.nonlinear_integrals(traj, p, frames, A0s)["bilinear_flux"]
        lhs = dc.bilinear_bound(f, check=False)["lhs"]
        rel.append(abs(lhs - ref) / ref)
        pde.append(dc.pde_residuals(f, norm="l1"))
        rep = dc.invariant_report(f)
        assert rep.min_flux >= 0 and rep.axis_residual == 0
    assert rel[-1] < 1e-3 and rel[0] > rel[1] > rel[2]
    assert all(a[0] > b[0] and a[1] > b[1] for a, b in zip(pde[:-1], pde[1:]))
