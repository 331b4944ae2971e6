"""Configuration, experiment drivers and run persistence.

Configs are TOML files whose tables flatten to dotted keys (``grid.dr``,
``time.t_end`` ...).  Unknown keys are rejected and every value is checked
against the preconditions of the module that consumes it before anything
is computed.
"""
from __future__ import annotations

import json
import math
import os
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli

from . import __version__
from . import estimates as est
from . import gauge
from .divcurl import corpus
from .errors import (BadResolution, ConfigError, NumericalError, SupportViolation, WavemapError)
from .grid import build_grid, weighted_integral
from .manifold import Kind, TargetManifold
from .solver import Family, init_state, plan_steps, step, taylor_state

REQUIRED = object()

# key -> (type, default)
SCHEMA = {
    "experiment.kind": (str, "run"),
    "seed": (int, 0),
    "target.kind": (str, REQUIRED),
    "target.ambient_dim": (int, None),
    "grid.dr": (float, REQUIRED),
    "grid.r_max": (float, REQUIRED),
    "time.t_end": (float, REQUIRED),
    "time.cfl": (float, REQUIRED),
    "data.family": (str, REQUIRED),
    "data.amplitude": (float, REQUIRED),
    "data.width": (float, None),
    "data.center": (float, None),
    "data.twist": (float, 1.0),
    "estimates.alpha": (float, 0.2),
    "estimates.beta": (float, 0.2),
    "estimates.sigma": (float, 0.01),
    "estimates.h2_enabled": (bool, True),
    "gauge.enabled": (bool, True),
    "gauge.antisymmetrize": (bool, True),
    "output.save_every": (int, 1),
    "output.dir": (str, "wavemap_out"),
    "convergence.levels": (int, 3),
    "sweep.amplitudes": (list, None),
    "divcurl.trials": (int, 100),
    "divcurl.grid": (int, 64),
    "divcurl.modes": (int, 4),
}

EXPERIMENTS = ("run", "convergence", "sweep", "divcurl")

# keys that only the div-curl corpus needs
_DIVCURL_ONLY = {"experiment.kind", "seed", "divcurl.trials", "divcurl.grid", "divcurl.modes", "output.dir"}

COLUMNS = (
    "t", "E", "energy_drift", "W_beta", "W_beta_int", "Q0_sup", "h2", "h2_source_int",
    "balance_residual", "null_balance_residual", "g1_int", "g2_int", "G_beta_int",
    "null_bilinear", "null_quartic", "constraint_residual", "tangency_residual",
    "projection_defect", "a0_rmax_bound", "gauge_res_213", "gauge_res_214", "f01_consistency",
)

DIVCURL_COLUMNS = ("seed", "ratio1", "ratio2", "bilinear_ratio", "invariant_residuals")


# -- configuration ---------------------------------------------------------

def flatten(tree, prefix=""):
    out = {}
    for key, val in tree.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(flatten(val, name + "."))
        else:
            out[name] = val
    return out


def _coerce(key, val, typ):
    if typ is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(key, f"expected a number, got {val!r}")
        val = float(val)
        if not math.isfinite(val):
            raise ConfigError(key, "must be finite")
        return val
    if typ is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(key, f"expected an integer, got {val!r}")
        return val
    if typ is bool:
        if not isinstance(val, bool):
            raise ConfigError(key, f"expected true/false, got {val!r}")
        return val
    if typ is str:
        if not isinstance(val, str):
            raise ConfigError(key, f"expected a string, got {val!r}")
        return val
    if typ is list:
        if not isinstance(val, list):
            raise ConfigError(key, f"expected a list, got {val!r}")
        return [_coerce(key, v, float) for v in val]
    raise AssertionError(typ)


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"not valid TOML: {exc}") from exc
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from exc
    return validate(flatten(raw))


def validate(flat: dict) -> dict:
    """Fill defaults, check types and module preconditions; returns a new dict."""
    for key in flat:
        if key not in SCHEMA:
            raise ConfigError(key, "unknown configuration key")
    cfg = {}
    kind = flat.get("experiment.kind", "run")
    for key, (typ, default) in SCHEMA.items():
        if key in flat:
            cfg[key] = _coerce(key, flat[key], typ)
        elif default is REQUIRED:
            if kind == "divcurl" and key not in _DIVCURL_ONLY:
                cfg[key] = None
                continue
            raise ConfigError(key, "required key is missing")
        else:
            cfg[key] = default
    if cfg["experiment.kind"] not in EXPERIMENTS:
        raise ConfigError("experiment.kind", f"must be one of {', '.join(EXPERIMENTS)}")
    for key in ("divcurl.trials", "divcurl.grid"):
        if cfg[key] < 1:
            raise ConfigError(key, "must be positive")
    if cfg["divcurl.modes"] < 0:
        raise ConfigError("divcurl.modes", "must be nonnegative")
    if cfg["divcurl.grid"] % 2:
        raise ConfigError("divcurl.grid", "must be even")
    if cfg["experiment.kind"] == "divcurl":
        return cfg
    _validate_physics(cfg)
    return cfg


def _validate_physics(cfg):
    try:
        Kind(cfg["target.kind"])
    except ValueError:
        raise ConfigError("target.kind", f"unknown target {cfg['target.kind']!r}") from None
    try:
        target = make_target(cfg)
    except ValueError as exc:
        raise ConfigError("target.ambient_dim", str(exc)) from None
    try:
        grid = build_grid(cfg["grid.dr"], cfg["grid.r_max"])
    except BadResolution as exc:
        raise ConfigError("grid.dr", str(exc)) from None
    if not 0 < cfg["time.cfl"] <= 1:
        raise ConfigError("time.cfl", "must lie in (0, 1]")
    if not cfg["time.t_end"] >= 0:
        raise ConfigError("time.t_end", "must be nonnegative")
    try:
        fam = Family(cfg["data.family"])
    except ValueError:
        raise ConfigError("data.family", f"unknown family {cfg['data.family']!r}") from None
    if fam is not Family.ZERO:
        for key in ("data.width", "data.center"):
            if cfg[key] is None:
                raise ConfigError(key, f"required for family {fam.value}")
        if not cfg["data.width"] > 0:
            raise ConfigError("data.width", "must be positive")
        if cfg["data.center"] < 0:
            raise ConfigError("data.center", "must be nonnegative")
    if cfg["output.save_every"] < 1:
        raise ConfigError("output.save_every", "must be positive")
    if cfg["convergence.levels"] < 3:
        raise ConfigError("convergence.levels", "at least 3 levels are needed")
    amps = cfg["sweep.amplitudes"]
    if amps is not None and (any(a < 0 for a in amps) or amps != sorted(amps)):
        raise ConfigError("sweep.amplitudes", "amplitudes must be nonnegative and sorted")
    try:
        make_params(cfg)
    except ValueError as exc:
        msg = str(exc)
        key = "estimates.sigma" if msg.startswith("sigma") else "estimates.beta"
        raise ConfigError(key, msg) from None
    try:
        make_state(cfg, grid, target)
    except SupportViolation as exc:
        raise ConfigError("grid.r_max", str(exc)) from None


def make_target(cfg):
    return TargetManifold(cfg["target.kind"], cfg["target.ambient_dim"])


def make_params(cfg):
    return est.EstimateParams(cfg["estimates.alpha"], cfg["estimates.beta"], cfg["estimates.sigma"])


def make_state(cfg, grid, target):
    fam = Family(cfg["data.family"])
    width = cfg["data.width"] if fam is not Family.ZERO else 1.0
    center = cfg["data.center"] if fam is not Family.ZERO else 0.0
    return init_state(fam, cfg["data.amplitude"], width, center, grid, target,
                      t_planned=cfg["time.t_end"], twist=cfg["data.twist"])


def with_overrides(cfg, **kw):
    """Copy of a validated config with dotted-key overrides (``grid__dr=...``)."""
    new = dict(cfg)
    for key, val in kw.items():
        new[key.replace("__", ".")] = val
    return validate({k: v for k, v in new.items() if v is not None})


# -- streaming diagnostics -------------------------------------------------

@dataclass
class _Slice:
    state: object
    index: int
    frame: object = None
    q: tuple = None
    A0_curv: np.ndarray = None
    totals: dict = field(default_factory=dict)


class Monitor:
    """Consumes consecutive solver states and emits one diagnostics row per
    saved slice.  Rows need the neighbouring slices for time differences, so
    the caller feeds one state before the first and one after the last."""

    ACCUMULATED = {"W_beta_int": "W_beta", "g1_int": "g1", "g2_int": "g2", "G_beta_int": "G_beta",
                   "null_bilinear": "bilinear", "null_quartic": "quartic", "h2_source_int": "h2_sources"}

    def __init__(self, cfg, n_last, dt):
        self.params = make_params(cfg)
        self.gauge_on = cfg["gauge.enabled"]
        self.h2_on = cfg["estimates.h2_enabled"]
        self.antisym = cfg["gauge.antisymmetrize"]
        self.save_every = cfg["output.save_every"]
        self.n_last = n_last
        self.dt = dt
        self.window = deque(maxlen=3)
        self.acc = {k: est.TimeAccumulator() for k in self.ACCUMULATED}
        self.seed = None
        self.E0 = None
        self.rows = []

    def push(self, state, index):
        sl = _Slice(state, index)
        grid = state.grid
        if self.gauge_on:
            fr = gauge.build_frame(state, self.seed)
            self.seed = fr.outer
            sl.frame = fr
            sl.q = gauge.q_components(state, fr)
            sl.A0_curv = gauge.a0_from_curvature(grid, gauge.curvature_F01(state, fr))
        if 0 <= index <= self.n_last:
            self._accumulate(sl)
        self.window.append(sl)
        if len(self.window) == 3:
            mid = self.window[1]
            if 0 <= mid.index <= self.n_last and (mid.index % self.save_every == 0 or mid.index == self.n_last):
                self.rows.append(self._row())

    def _accumulate(self, sl):
        s = sl.state
        grid = s.grid
        vals = {}
        if sl.q is not None:
            vals["W_beta"] = est.weighted_norms(grid, sl.q[0], sl.q[1], self.params)["W_beta"]
        else:
            vals["W_beta"] = est.weighted_norm_frame_free(s, self.params)
        if self.h2_on:
            hf = est.h2_fields(s)
            dens = est.nonlinear_densities(s, self.params, sl.q, sl.A0_curv, hf)
            for key in ("g1", "g2", "bilinear", "quartic", "G_beta"):
                if key in dens:
                    vals[key] = float(weighted_integral(grid, dens[key], 0))
            G1, G1h = est.h2_sources(s, hf)
            vals["h2_sources"] = float(weighted_integral(grid, np.abs(G1) + np.abs(G1h), 0))
        for name, src in self.ACCUMULATED.items():
            if src in vals:
                self.acc[name].add(s.t, vals[src])
        sl.totals = {name: self.acc[name].total if src in vals else math.nan
                     for name, src in self.ACCUMULATED.items()}
        sl.totals["W_beta"] = vals["W_beta"]

    def _row(self):
        prev, mid, nxt = self.window
        s = mid.state
        grid = s.grid
        E = est.energy(s)
        if self.E0 is None:
            self.E0 = E
        nan = math.nan
        row = dict.fromkeys(COLUMNS, nan)
        row.update(t=s.t, E=E, energy_drift=abs(E - self.E0) / self.E0 if self.E0 > 0 else 0.0,
                   W_beta=mid.totals["W_beta"], constraint_residual=s.constraint_residual(),
                   tangency_residual=s.tangency_residual(), projection_defect=s.projection_defect)
        for name in self.ACCUMULATED:
            row[name] = mid.totals[name]
        if self.h2_on:
            row["h2"] = est.h2_energy(s)
        if self.gauge_on:
            dt = self.dt
            A0, _ = gauge.connection_A0(prev.frame, nxt.frame, dt, mid.frame, self.antisym)
            qs = (prev.q, mid.q, nxt.q)
            r13, r14 = gauge.residual_fields(grid, *qs, A0, dt)
            sup_rA0 = float(np.max(grid.r * spectral_norm(A0), initial=0.0))
            Q0 = est.Q0_profile(grid, mid.q[1], self.params.sigma)
            row.update(
                Q0_sup=float(np.max(np.abs(Q0), initial=0.0)),
                balance_residual=est.balance_residual(grid, qs, A0, dt, self.params),
                null_balance_residual=est.null_balance_residual(grid, qs, A0, dt, self.params, "beta"),
                a0_rmax_bound=sup_rA0 / self.E0 if self.E0 > 0 else 0.0,
                gauge_res_213=gauge.l2r(grid, r13), gauge_res_214=gauge.l2r(grid, r14),
                f01_consistency=float(np.max(np.abs(A0 - mid.A0_curv), initial=0.0)),
            )
        return row


def spectral_norm(A):
    """Largest singular value of each matrix in a (J, k, k) stack."""
    if A.shape[-1] == 1:
        return np.abs(A[:, 0, 0])
    ev = np.linalg.eigvalsh(np.swapaxes(A, 1, 2) @ A)
    return np.sqrt(np.maximum(ev[:, -1], 0.0))


# -- experiments -----------------------------------------------------------

@dataclass
class RunRecord:
    config: dict
    rows: list
    status: str = "ok"
    wall_clock: float = 0.0
    version: str = __version__
    extra: dict = field(default_factory=dict)
    final: object = field(default=None, repr=False)

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)


def simulate(cfg, observer=None):
    """Run the solver for a validated config; returns (final state, dt, steps).

    ``observer(state, n)`` sees every state, including the Taylor slice at
    n = -1 and one slice past the end (n = steps + 1).
    """
    target = make_target(cfg)
    grid = build_grid(cfg["grid.dr"], cfg["grid.r_max"])
    state = make_state(cfg, grid, target)
    t_end = cfg["time.t_end"]
    cfl = cfg["time.cfl"]
    if t_end > 0:
        nsteps, dt = plan_steps(0.0, t_end, cfl * grid.dr)
    else:
        nsteps, dt = 0, cfl * grid.dr
    if observer is not None:
        back = taylor_state(state, -dt)
        observer(back, -1)
        observer(state, 0)
    final = state
    extra = 1 if observer is not None else 0
    for n in range(1, nsteps + 1 + extra):
        state = step(state, dt, cfl=cfl)
        state = _retime(state, t_end if n == nsteps else n * dt)
        if n == nsteps:
            final = state
        if observer is not None:
            observer(state, n)
    return final, dt, nsteps


def _retime(state, t):
    from dataclasses import replace
    return replace(state, t=t)


def run_single(cfg) -> RunRecord:
    """One evolution with the full diagnostics table."""
    t0 = time.perf_counter()
    grid = build_grid(cfg["grid.dr"], cfg["grid.r_max"])
    t_end = cfg["time.t_end"]
    nsteps, dt = plan_steps(0.0, t_end, cfg["time.cfl"] * grid.dr) if t_end > 0 else (0, cfg["time.cfl"] * grid.dr)
    mon = Monitor(cfg, nsteps, dt)
    final, _, _ = simulate(cfg, lambda s, n: mon.push(s, n))
    rec = RunRecord(cfg, mon.rows, wall_clock=time.perf_counter() - t0, extra={"dt": dt, "steps": nsteps})
    rec.final = final
    return rec


def _cubic_midpoints(fine, factor):
    """Values of a fine-grid nodal field at the coarse nodes (fine step = coarse / factor).

    Each coarse node lies halfway between two fine nodes; 4-point Lagrange
    interpolation with even reflection at the axis.
    """
    if factor % 2:
        raise ValueError("refinement factor must be even")
    g = np.concatenate([fine[1::-1], fine, 2 * fine[-1:] - fine[-2:-1]], axis=0)
    J = fine.shape[0] // factor
    k = np.arange(J) * factor + factor // 2 - 1 + 2   # left neighbour, shifted by the two ghosts
    return (-g[k - 1] + 9 * g[k] + 9 * g[k + 1] - g[k + 2]) / 16


def _orders(values):
    out = []
    for a, b in zip(values[:-1], values[1:]):
        out.append(math.log2(a / b) if a > 0 and b > 0 else math.nan)
    return out


RESIDUAL_COLUMNS = ("gauge_res_213", "gauge_res_214", "balance_residual", "null_balance_residual",
                    "f01_consistency", "energy_drift")


def convergence_study(cfg, levels=None):
    """Runs at dr, dr/2, ... and a reference 4x finer than the finest level.

    Reports the L^2(r dr) error of Phi at t_end against the reference and
    the time-maximum of each residual column, with observed orders.  The
    row cadence output.save_every doubles with each level so that every
    level samples the same times.
    """
    levels = cfg["convergence.levels"] if levels is None else levels
    if levels < 3:
        raise ConfigError("convergence.levels", "at least 3 levels are needed")
    dr0 = cfg["grid.dr"]
    finest = dr0 / 2 ** (levels - 1)
    ref_cfg = with_overrides(cfg, grid__dr=finest / 4)
    ref, _, _ = simulate(ref_cfg)
    report = {"dr": [], "solution_error": []}
    for key in RESIDUAL_COLUMNS:
        report[key] = []
    records = []
    for lev in range(levels):
        c = with_overrides(cfg, grid__dr=dr0 / 2 ** lev, output__save_every=cfg["output.save_every"] * 2 ** lev)
        rec = run_single(c)
        records.append(rec)
        final = rec.final
        factor = int(round(c["grid.dr"] / ref_cfg["grid.dr"]))
        diff = final.phi - _cubic_midpoints(ref.phi, factor)
        err = math.sqrt(weighted_integral(final.grid, np.sum(diff * diff, axis=1), 1))
        report["dr"].append(c["grid.dr"])
        report["solution_error"].append(err)
        for key in RESIDUAL_COLUMNS:
            col = rec.column(key)
            report[key].append(float(np.nanmax(col)) if np.any(np.isfinite(col)) else math.nan)
    orders = {k: _orders(v) for k, v in report.items() if k != "dr"}
    return {"levels": report, "orders": orders, "records": records}


def _sweep_one(cfg):
    try:
        rec = run_single(cfg)
    except NumericalError as exc:
        return {"amplitude": cfg["data.amplitude"], "status": f"{type(exc).__name__}: {exc}"}
    h2 = rec.column("h2")
    h2_0 = h2[0] if h2.size else math.nan
    E0 = rec.rows[0]["E"]
    last = rec.rows[-1]
    src = last["h2_source_int"]
    return {
        "amplitude": cfg["data.amplitude"], "status": "ok", "E0": E0, "H2_0": h2_0,
        "sup_H2_ratio": float(np.max(h2) / h2_0) if h2_0 > 0 else 0.0,
        "g1_int": last["g1_int"], "g2_int": last["g2_int"], "G_beta_int": last["G_beta_int"],
        "null_bilinear": last["null_bilinear"], "null_quartic": last["null_quartic"],
        "W_beta_int": last["W_beta_int"], "h2_source_int": src,
        "source_ratio": src / (E0 * h2_0) if E0 > 0 and h2_0 > 0 else 0.0,
        "max_energy_drift": float(np.max(rec.column("energy_drift"))),
    }


SWEEP_COLUMNS = ("amplitude", "status", "E0", "H2_0", "sup_H2_ratio", "g1_int", "g2_int", "G_beta_int",
                 "null_bilinear", "null_quartic", "W_beta_int", "h2_source_int", "source_ratio",
                 "max_energy_drift")


def workers():
    cap = os.environ.get("WAVEMAP_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError("WAVEMAP_THREADS", f"not an integer: {cap!r}") from None
    return n


def _pmap(fn, items):
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def amplitude_sweep(cfg, amplitudes=None):
    """One run per amplitude; numerical failures are recorded, not raised."""
    amps = cfg["sweep.amplitudes"] if amplitudes is None else list(amplitudes)
    if not amps:
        raise ConfigError("sweep.amplitudes", "no amplitudes given")
    if any(a < 0 for a in amps) or list(amps) != sorted(amps):
        raise ConfigError("sweep.amplitudes", "amplitudes must be nonnegative and sorted")
    cfgs = [with_overrides(cfg, data__amplitude=float(a)) for a in amps]
    rows = _pmap(_sweep_one, cfgs)
    mono = {}
    for key in ("E0", "g1_int", "g2_int", "G_beta_int", "null_bilinear", "null_quartic", "W_beta_int"):
        vals = [r.get(key) for r in rows if r["status"] == "ok"]
        mono[key] = all(b >= a for a, b in zip(vals[:-1], vals[1:]))
    return {"rows": rows, "monotone": mono}


def _corpus_chunk(args):
    seeds, K, modes = args
    return corpus(seeds, K, modes)


def divcurl_corpus(seed=0, trials=100, K=64, modes=4):
    seeds = list(range(seed, seed + trials))
    n = max(1, min(workers(), trials))
    chunks = [(seeds[i::n], K, modes) for i in range(n)]
    parts = _pmap(_corpus_chunk, chunks)
    rows = [row for part in parts for row in part]
    return sorted(rows, key=lambda r: r["seed"])


# -- persistence -----------------------------------------------------------

def fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return format(float(x), ".17g")


def write_csv(path, columns, rows):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt(row.get(c)) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(path, cfg, status, wall_clock, extra=None):
    man = {"version": __version__, "status": status, "wall_clock_s": round(wall_clock, 3),
           "config": cfg}
    if extra:
        man.update(extra)
    Path(path).write_text(json.dumps(man, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, RunRecord):
        return None
    raise TypeError(type(x))


def run_experiment(cfg, outdir=None) -> RunRecord:
    """Execute the configured experiment and write manifest.json plus CSV output."""
    outdir = Path(cfg["output.dir"] if outdir is None else outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    kind = cfg["experiment.kind"]
    t0 = time.perf_counter()
    status = "ok"
    try:
        if kind == "run":
            rec = run_single(cfg)
            write_csv(outdir / "series.csv", COLUMNS, rec.rows)
        elif kind == "convergence":
            rep = convergence_study(cfg)
            rows = []
            lv = rep["levels"]
            for i, dr in enumerate(lv["dr"]):
                row = {k: lv[k][i] for k in lv}
                rows.append(row)
            cols = ("dr", "solution_error") + RESIDUAL_COLUMNS
            write_csv(outdir / "convergence.csv", cols, rows)
            rec = RunRecord(cfg, rows, extra={"orders": rep["orders"]})
        elif kind == "sweep":
            rep = amplitude_sweep(cfg)
            write_csv(outdir / "sweep.csv", SWEEP_COLUMNS, rep["rows"])
            rec = RunRecord(cfg, rep["rows"], extra={"monotone": rep["monotone"]})
        else:
            rows = divcurl_corpus(cfg["seed"], cfg["divcurl.trials"], cfg["divcurl.grid"], cfg["divcurl.modes"])
            write_csv(outdir / "divcurl.csv", DIVCURL_COLUMNS, rows)
            ratios = [r["bilinear_ratio"] for r in rows]
            rec = RunRecord(cfg, rows, extra={"max_bilinear_ratio": max(ratios)})
    except WavemapError as exc:
        status = f"{type(exc).__name__}: {exc}"
        write_manifest(outdir / "manifest.json", cfg, status, time.perf_counter() - t0)
        raise
    rec.wall_clock = time.perf_counter() - t0
    rec.status = status
    write_manifest(outdir / "manifest.json", cfg, status, rec.wall_clock, rec.extra)
    return rec
