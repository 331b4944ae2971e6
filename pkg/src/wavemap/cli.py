"""Command-line entry point: ``wavemap run|convergence|sweep|divcurl``."""
from __future__ import annotations

import argparse
import sys

from . import harness
from .errors import ConfigError, NumericalError, WavemapError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OTHER = 0, 2, 3, 1


def _amplitudes(text):
    try:
        return [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise ConfigError("sweep.amplitudes", f"cannot parse {text!r}") from None


def build_parser():
    ap = argparse.ArgumentParser(prog="wavemap", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single evolution with the diagnostics time series")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output.dir)")

    p = sub.add_parser("convergence", help="refinement study with observed orders")
    p.add_argument("--config", required=True)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="one run per amplitude")
    p.add_argument("--config", required=True)
    p.add_argument("--amplitudes", default=None, help="comma separated, e.g. 0.05,0.1,0.2")
    p.add_argument("--out")

    p = sub.add_parser("divcurl", help="synthetic div-curl corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--modes", type=int, default=4)
    p.add_argument("--out", default="wavemap_out")
    return ap


def _config(args):
    if args.command == "divcurl":
        return harness.validate({"experiment.kind": "divcurl", "seed": args.seed, "divcurl.trials": args.trials,
                                 "divcurl.grid": args.grid, "divcurl.modes": args.modes, "output.dir": args.out})
    cfg = harness.load_config(args.config)
    cfg["experiment.kind"] = args.command
    if args.command == "convergence" and args.levels is not None:
        cfg["convergence.levels"] = args.levels
    if args.command == "sweep" and args.amplitudes is not None:
        cfg["sweep.amplitudes"] = _amplitudes(args.amplitudes)
    if args.out:
        cfg["output.dir"] = args.out
    return harness.validate({k: v for k, v in cfg.items() if v is not None})


def _summary(rec):
    kind = rec.config["experiment.kind"]
    if kind == "run" and rec.rows:
        last = rec.rows[-1]
        return (f"t={last['t']:.6g} steps={rec.extra['steps']} max drift="
                f"{max(r['energy_drift'] for r in rec.rows):.3e}")
    if kind == "convergence":
        return "orders: " + ", ".join(f"{k}={[round(o, 2) for o in v]}" for k, v in rec.extra["orders"].items())
    if kind == "sweep":
        return "monotone: " + ", ".join(f"{k}={v}" for k, v in rec.extra["monotone"].items())
    if kind == "divcurl":
        return f"trials={len(rec.rows)} max bilinear ratio={rec.extra['max_bilinear_ratio']:.6g}"
    return ""


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        rec = harness.run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except WavemapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    print(f"{rec.status} in {rec.wall_clock:.2f}s -> {cfg['output.dir']}")
    print(_summary(rec))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
