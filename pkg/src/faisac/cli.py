"""Command-line experiment runner.

Subcommands: ``run``, ``sweep``, ``beampattern`` and ``verify``. Scenarios are
given as a JSON path or as a bundled name (``desk``, ``table1``). The number
of sweep worker processes is read from ``FAISAC_WORKERS`` (default 1).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .scenario import Scenario, ScenarioError, builtin_scenario, load_scenario

SCHEMES = ("proposed", "fpa", "rpa", "pso", "sensing-only", "comm-only")
AXES = ("power", "antennas", "altitude", "weight")
WORKERS_ENV = "FAISAC_WORKERS"

log = logging.getLogger("faisac")


def resolve_scenario(spec: str) -> Scenario:
    p = Path(spec)
    if p.suffix == ".json" or p.exists():
        return load_scenario(p)
    try:
        return builtin_scenario(spec)
    except FileNotFoundError:
        raise ScenarioError(f"no scenario file or bundled scenario named {spec!r}") from None


def run_scheme(scenario: Scenario, scheme: str, seed: int = 0, eps: float = 1e-3,
               max_outer: int = 50, swarm: int = 20, pso_iters: int = 30):
    """Run one scheme and return its final :class:`~faisac.ao.AoState`."""
    from .ao import run
    from .baselines import run_fpa, run_pso, run_rpa

    if scheme == "proposed":
        return run(scenario, eps, max_outer)
    if scheme == "sensing-only":
        return run(scenario.with_changes(xi_c=0.0), eps, max_outer, scheme=scheme)
    if scheme == "comm-only":
        return run(scenario.with_changes(xi_c=1.0), eps, max_outer, scheme=scheme)
    if scheme == "fpa":
        return run_fpa(scenario, eps, max_outer)
    if scheme == "rpa":
        return run_rpa(scenario, seed, eps, max_outer)
    if scheme == "pso":
        return run_pso(scenario, swarm, pso_iters, seed, eps, max_outer)
    raise ValueError(f"unknown scheme {scheme!r}")


# -- run ---------------------------------------------------------------------

def cmd_run(args) -> int:
    from .report import write_run_json, write_run_tables

    sc = resolve_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    state = run_scheme(sc, args.scheme, args.seed, args.eps, args.max_outer, args.swarm,
                       args.pso_iters)
    extra = {"seed": args.seed, "eps": args.eps, "max_outer": args.max_outer}
    if "pso" in state.extras:
        res = state.extras["pso"]
        extra["pso"] = {"swarm": args.swarm, "iterations": args.pso_iters,
                        "best_fitness": res.best_fitness.tolist(), "history": res.history}
    if args.timing:
        extra["runtime_s"] = time.perf_counter() - t0
    write_run_tables(state, out)
    write_run_json(state, out / "run.json", timing=args.timing, extra=extra)
    b = state.breakdown()
    print(f"{args.scheme}: objective {b.objective:.6f} after {state.iteration} iterations "
          f"(sum rate {b.sum_rate:.4f}, inverse CRB {b.total_inv_crb:.6g}); wrote {out}")
    return 0


# -- sweep -------------------------------------------------------------------

def apply_axis(scenario: Scenario, axis: str, value: float) -> Scenario:
    if axis == "power":
        return scenario.with_changes(pmax_dbm=float(value))
    if axis == "antennas":
        n = int(round(value))
        return scenario.with_changes(n_tx=n, n_rx=n)
    if axis == "altitude":
        return scenario.with_changes(altitude=float(value))
    if axis == "weight":
        return scenario.with_changes(xi_c=float(value))
    raise ValueError(f"unknown axis {axis!r}")


def sweep_point(task) -> list:
    """One sweep row; failures are reported in the status column."""
    sc_dict, axis, value, scheme, seed, eps, max_outer, swarm, pso_iters, timing = task
    from .scenario import scenario_from_dict

    t0 = time.perf_counter()
    try:
        sc = apply_axis(scenario_from_dict(sc_dict), axis, value)
        st = run_scheme(sc, scheme, seed, eps, max_outer, swarm, pso_iters)
        b = st.breakdown()
        row = [scheme, axis, value, "ok", b.objective, b.sum_rate, b.total_inv_crb,
               st.iteration]
    except Exception as exc:  # recorded in-row, the sweep goes on
        msg = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
        row = [scheme, axis, value, msg, "", "", "", ""]
    row.append(time.perf_counter() - t0 if timing else "")
    return row


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(scenario: Scenario, axis: str, values, schemes, seed=0, eps=1e-3, max_outer=50,
              swarm=20, pso_iters=30, timing=False, workers=None) -> list[list]:
    tasks = [(scenario.to_dict(), axis, v, s, seed, eps, max_outer, swarm, pso_iters, timing)
             for s in schemes for v in values]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(sweep_point, tasks))
    return [sweep_point(t) for t in tasks]


def _parse_values(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty value list")
    d = np.diff(vals)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise argparse.ArgumentTypeError("values must be strictly monotone")
    return vals


def _parse_schemes(text: str) -> list[str]:
    out = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in out if s not in SCHEMES]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown scheme(s): {', '.join(bad) or text!r}")
    return out


def cmd_sweep(args) -> int:
    from .report import SWEEP_HEADER, write_csv

    sc = resolve_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_sweep(sc, args.axis, args.values, args.schemes, args.seed, args.eps,
                     args.max_outer, args.swarm, args.pso_iters, args.timing)
    path = out / f"sweep_{args.axis}.csv"
    write_csv(path, SWEEP_HEADER, rows)
    failed = sum(1 for r in rows if r[3] != "ok")
    print(f"wrote {path} ({len(rows)} rows, {failed} failed)")
    return 0


# -- beampattern ---------------------------------------------------------------

def _parse_grid(text: str):
    try:
        xs, ys = text.split(",")
        x0, x1, nx = xs.split(":")
        y0, y1, ny = ys.split(":")
        gx = np.linspace(float(x0), float(x1), int(nx))
        gy = np.linspace(float(y0), float(y1), int(ny))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like x0:x1:nx,y0:y1:ny") from None
    xx, yy = np.meshgrid(gx, gy, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def cmd_beampattern(args) -> int:
    from .metrics import BeamformingSolution, beampattern_gain, write_beampattern_csv
    from .report import read_run_json
    from .scenario import ArrayLayout

    run_dir = Path(args.run)
    state = read_run_json(run_dir / "run.json" if run_dir.is_dir() else run_dir)
    sc = state.scenario
    if not 1 <= args.slot <= sc.slots:
        print(f"error: slot {args.slot} outside 1..{sc.slots}", file=sys.stderr)
        return 1
    n = args.slot - 1
    grid = args.grid if args.grid is not None else _parse_grid("0:800:41,0:800:41")
    tx = ArrayLayout(tuple(state.tx[sc.interval_of(args.slot) - 1]), "transmit")
    sol = BeamformingSolution(state.w_mats[n], state.r0[n])
    uav = np.array([state.traj[n, 0], state.traj[n, 1], sc.altitude])
    gains = beampattern_gain(tx, sol, uav, grid, sc.wavelength)
    out = Path(args.out) if args.out else (run_dir if run_dir.is_dir() else run_dir.parent) \
        / f"beampattern_slot{args.slot}.csv"
    write_beampattern_csv(out, grid, gains)
    print(f"wrote {out}")
    return 0


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(trials=args.trials, seed=args.seed, samples=args.samples)
    bad = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        bad += not ok
    if args.out:
        with open(args.out, "w") as fh:
            json.dump([{"check": n, "ok": ok, "detail": d} for n, ok, d in results], fh,
                      indent=1)
            fh.write("\n")
    return 1 if bad else 0


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="faisac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", default="desk", help="scenario JSON or bundled name")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--eps", type=float, default=1e-3)
        sp.add_argument("--max-outer", type=int, default=50)
        sp.add_argument("--swarm", type=int, default=20, help="PSO swarm size")
        sp.add_argument("--pso-iters", type=int, default=30, help="PSO iterations")
        sp.add_argument("--timing", action="store_true",
                        help="also record wall-clock times (outputs are then not reproducible)")

    r = sub.add_parser("run", help="optimise one scheme and write its artifacts")
    common(r)
    r.add_argument("--scheme", choices=SCHEMES, default="proposed")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="final metrics over a parameter axis")
    common(s)
    s.add_argument("--axis", choices=AXES, required=True)
    s.add_argument("--values", type=_parse_values, required=True,
                   help="comma-separated monotone list")
    s.add_argument("--schemes", type=_parse_schemes, default=list(SCHEMES[:4]),
                   help="comma-separated schemes (default proposed,fpa,rpa,pso)")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("beampattern", help="beampattern gain grid of one slot of a run")
    b.add_argument("--run", required=True, help="run directory or run.json")
    b.add_argument("--slot", type=int, required=True, help="1-based slot")
    b.add_argument("--grid", type=_parse_grid, default=None,
                   help="x0:x1:nx,y0:y1:ny in metres (default 0:800:41,0:800:41)")
    b.add_argument("--out", default=None, help="CSV path (default inside the run directory)")
    b.set_defaults(func=cmd_beampattern)

    v = sub.add_parser("verify", help="run the oracle suite; nonzero exit on any violation")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None, help="optional JSON report path")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
