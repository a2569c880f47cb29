"""
Command-line entry point.

    pitchtrack run        one closed-loop flight: CSV, metrics, manifest, SVG plots
    pitchtrack mc         Monte Carlo campaign with dispersed vehicle parameters
    pitchtrack gains      outer LQR design and inner closed-loop poles
    pitchtrack reference  open-loop reference trajectory CSV
    pitchtrack validate   parse a config and print it fully resolved

Exit codes: 0 success, 2 configuration error, 3 unstable flight, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config, to_dict
from .dynamics import NumericalDivergence
from .harness import build_outer_gains, build_reference, run_flight, run_monte_carlo
from .mission import sample_reference
from .outer import RiccatiError
from .plots import write_flight_plots

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("pitchtrack")


def _load(args, seed_key: str):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"{seed_key}={args.seed}")
    return load_config(args.config, overrides)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, cfg) -> None:
    # the manifest is itself a valid --config file
    (out / "manifest.json").write_text(json.dumps(to_dict(cfg), indent=2, sort_keys=True) + "\n")


def _json_safe(d: dict) -> dict:
    return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def cmd_run(args) -> int:
    cfg = _load(args, "sim.seed")
    out = _out_dir(args)
    _write_manifest(out, cfg)
    flight, metrics = run_flight(cfg)
    csv_path = out / "flight.csv"
    flight.to_csv(csv_path, extras=True)
    (out / "metrics.json").write_text(
        json.dumps(_json_safe(asdict(metrics)), indent=2, sort_keys=True) + "\n")
    if not args.no_plots and len(flight):
        write_flight_plots(csv_path, out / "plots")
    print(f"flight {'stable' if flight.stable else 'UNSTABLE'}; t_end={flight.t_end:.3f} s"
          f"{' (burnout)' if flight.burnout else ''}")
    print(f"RMSE x={metrics.rmse_x_m:.4g} m  theta={metrics.rmse_theta_deg:.4g} deg  "
          f"z={metrics.rmse_z_m:.4g} m")
    print(f"RMS T={metrics.rms_T_N / 1e3:.4g} kN  mu={metrics.rms_mu_deg:.4g} deg")
    print(f"%RMSE f_ax={metrics.pct_rmse_fax:.3g}  tau_a={metrics.pct_rmse_tau:.3g}  "
          f"f_az={metrics.pct_rmse_faz:.3g}")
    print(f"outputs written to {out}")
    if not flight.stable:
        print(f"error: {flight.reason}", file=sys.stderr)
        return EXIT_NUMERIC if flight.numeric_failure else EXIT_UNSTABLE
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = _load(args, "mc.seed")
    out = _out_dir(args)
    _write_manifest(out, cfg)

    def progress(i, r):
        log.info("run %d: %s", i, "stable" if r.stable else f"UNSTABLE ({r.reason})")

    summary = run_monte_carlo(cfg, n_runs=args.runs, workers=args.workers, progress=progress)
    summary.to_csv(out / "mc_summary.csv")
    summary.runs_to_csv(out / "mc_runs.csv")
    table = summary.format_table()
    (out / "mc_summary.txt").write_text(table + "\n")
    print(table)
    print(f"outputs written to {out}")
    return EXIT_OK if summary.n_stable == summary.n_runs else EXIT_UNSTABLE


def _fmt_poly(c):
    return f"s^2 + {c[1]:.6g} s + {c[2]:.6g}"


def cmd_gains(args) -> int:
    cfg = _load(args, "sim.seed")
    g = build_outer_gains(cfg)
    src = "fixed (outer.gains)" if cfg.outer.gains is not None else \
        f"LQR, Q=diag{tuple(cfg.outer.Q_diag)}, R={cfg.outer.R:g}"
    print(f"outer loop gains [{src}]")
    print(f"  k_z    = {g.k_z:.6f}")
    print(f"  k_zdot = {g.k_zdot:.6f}")
    print(f"  k_i    = {g.k_i:.6f}")
    ev = np.linalg.eigvals(g.closed_loop())
    print("  closed-loop eigenvalues: " + ", ".join(f"{v:.4f}" for v in sorted(ev, key=lambda z: z.real)))
    ig = cfg.inner
    for axis in ("x", "theta"):
        poles = ig.poles(axis)
        print(f"inner {axis} axis: {_fmt_poly(ig.char_poly(axis))}")
        print("  poles: " + ", ".join(f"{p:.4f}" for p in poles))
    return EXIT_OK


def cmd_reference(args) -> int:
    cfg = _load(args, "sim.seed")
    out = _out_dir(args)
    _write_manifest(out, cfg)
    series = build_reference(cfg)
    t_f = series.profile.t_f
    n = int(math.floor(t_f / args.dt + 1e-9))
    times = [k * args.dt for k in range(n + 1)]
    if times[-1] < t_f - 1e-12:
        times.append(t_f)
    names = ("x_d", "xdot_d", "xddot_d", "z_d", "zdot_d", "zddot_d")
    path = out / "reference.csv"
    rows = [sample_reference(series, t) for t in times]
    with open(path, "w") as fh:
        fh.write("t," + ",".join(names) + "\n")
        for r in rows:
            fh.write(",".join("%.9g" % v for v in (r.t, *(getattr(r, k) for k in names))) + "\n")
    last = rows[-1]
    zmax = max(rows, key=lambda r: abs(r.z_d))
    print(f"t_f = {t_f:g} s: x_d = {last.x_d / 1e3:.4f} km, xdot_d = {last.xdot_d:.3f} m/s")
    print(f"max |z_d| = {abs(zmax.z_d) / 1e3:.4f} km at t = {zmax.t:g} s; "
          f"max |zdot_d| = {max(abs(r.zdot_d) for r in rows):.3f} m/s")
    print(f"reference written to {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args, "sim.seed")
    print(json.dumps(to_dict(cfg), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML config file, or a JSON manifest")
    common.add_argument("--out", metavar="DIR", default="pitchtrack_out", help="output directory")
    common.add_argument("--set", metavar="KEY=VALUE", action="append",
                        help="override, e.g. --set sim.dt=0.002 (repeatable)")
    common.add_argument("--seed", type=int, help="RNG seed (sim.seed, or mc.seed for mc)")
    common.add_argument("--no-plots", action="store_true", help="skip SVG plots")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="pitchtrack", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="simulate one closed-loop flight").set_defaults(func=cmd_run)
    mc = sub.add_parser("mc", parents=[common], help="Monte Carlo robustness campaign")
    mc.add_argument("--runs", type=int, help="number of runs (overrides mc.n_runs)")
    mc.add_argument("--workers", type=int, help="worker processes (overrides mc.workers)")
    mc.set_defaults(func=cmd_mc)
    sub.add_parser("gains", parents=[common], help="print controller gains and poles").set_defaults(func=cmd_gains)
    ref = sub.add_parser("reference", parents=[common], help="write the open-loop reference CSV")
    ref.add_argument("--dt", type=float, default=0.1, help="sample period [s]")
    ref.set_defaults(func=cmd_reference)
    sub.add_parser("validate", parents=[common], help="check a config and print it resolved").set_defaults(
        func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    if getattr(args, "dt", 1.0) <= 0:
        print("error: --dt must be > 0", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "runs", None) is not None and args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, RiccatiError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:  # invalid section values surfacing from builders
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDivergence, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
