"""Run artifacts: CSV tables and the JSON run report.

CSV headers
-----------
trace.csv       iteration, objective, sum_rate, total_inv_crb
trajectory.csv  slot, x_m, y_m
metrics.csv     slot, interval, sum_rate, inv_crb, slot_objective, rate_u1 .. rate_uM
sweep_<axis>.csv scheme, axis, value, status, objective, sum_rate, total_inv_crb,
                 iterations, runtime_s

Floats are written with ``repr`` so files round-trip exactly; nothing
time-dependent is written unless timing output is requested.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ao import AoState, TraceEntry
from .beamforming import FpAuxiliaries
from .metrics import ObjectiveBreakdown
from .scenario import Scenario, scenario_from_dict

TRACE_HEADER = ["iteration", "objective", "sum_rate", "total_inv_crb"]
TRAJECTORY_HEADER = ["slot", "x_m", "y_m"]
SWEEP_HEADER = ["scheme", "axis", "value", "status", "objective", "sum_rate", "total_inv_crb",
                "iterations", "runtime_s"]


def metrics_header(n_users: int) -> list[str]:
    return (["slot", "interval", "sum_rate", "inv_crb", "slot_objective"]
            + [f"rate_u{m + 1}" for m in range(n_users)])


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_run_tables(state: AoState, out_dir) -> None:
    out = Path(out_dir)
    sc = state.scenario
    write_csv(out / "trace.csv", TRACE_HEADER,
              [(e.iteration, e.objective, e.breakdown.sum_rate, e.breakdown.total_inv_crb)
               for e in state.trace])
    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER,
              [(n + 1, q[0], q[1]) for n, q in enumerate(state.traj)])
    b = state.breakdown()
    slot_obj = b.slot_objective()
    rows = []
    for n in range(sc.slots):
        rows.append([n + 1, sc.interval_of(n + 1), float(b.rates[n].sum()), float(b.inv_crb[n]),
                     float(slot_obj[n])] + [float(r) for r in b.rates[n]])
    write_csv(out / "metrics.csv", metrics_header(sc.n_users), rows)


def _cplx(a) -> dict:
    a = np.asarray(a)
    return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}


def _uncplx(d) -> np.ndarray:
    return np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)


def trace_entry_to_dict(e: TraceEntry, timing: bool = False) -> dict:
    d = {"iteration": e.iteration, "objective": e.objective,
         "sum_rate": e.breakdown.sum_rate, "total_inv_crb": e.breakdown.total_inv_crb,
         "substeps": [{"step": s, "objective": v} for s, v in e.substeps],
         "events": list(e.events),
         "rank_one_ratios": e.rank_ratios,
         "beam_power_shares": e.beam_shares,
         "solver_reports": [dict(step=s, index=i, **r.to_dict(timing)) for s, i, r in e.reports]}
    if timing:
        d["wall_time_s"] = e.wall_time
    return d


def state_to_dict(state: AoState, timing: bool = False, extra: dict | None = None) -> dict:
    sc = state.scenario
    doc = {"scheme": state.scheme, "scenario": sc.to_dict(),
           "iterations": state.iteration, "converged": state.converged,
           "final": state.breakdown().to_dict(),
           "trace": [trace_entry_to_dict(e, timing) for e in state.trace],
           "state": {"trajectory": state.traj.tolist(), "tx": state.tx.tolist(),
                     "rx": state.rx.tolist(), "w_mats": _cplx(state.w_mats),
                     "r0": _cplx(state.r0), "fp_omega": state.fp.omega.tolist(),
                     "fp_varpi": state.fp.varpi.tolist()}}
    if extra:
        doc.update(extra)
    return doc


def state_from_dict(doc: dict) -> AoState:
    """Rebuild the final state of a run report (the trace keeps only totals)."""
    sc: Scenario = scenario_from_dict(doc["scenario"])
    st = doc["state"]
    state = AoState(sc, np.asarray(st["trajectory"], float), np.asarray(st["tx"], float),
                    np.asarray(st["rx"], float), _uncplx(st["w_mats"]), _uncplx(st["r0"]),
                    FpAuxiliaries(np.asarray(st["fp_omega"], float),
                                  np.asarray(st["fp_varpi"], float)),
                    iteration=int(doc.get("iterations", 0)), scheme=doc.get("scheme", ""),
                    converged=bool(doc.get("converged", False)))
    state.trace.append(TraceEntry(state.iteration, state.breakdown()))
    return state


def write_run_json(state: AoState, path, timing: bool = False, extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state, timing, extra), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_run_json(path) -> AoState:
    with open(path) as fh:
        return state_from_dict(json.load(fh))


def breakdown_summary(b: ObjectiveBreakdown) -> dict:
    return {"objective": b.objective, "sum_rate": b.sum_rate, "total_inv_crb": b.total_inv_crb}
