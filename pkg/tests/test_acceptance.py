"""Acceptance criteria at desk scale; each test records one PASS/FAIL line.

The lines are repeated in the "acceptance criteria" section of the pytest
terminal summary. Expensive optimisation runs are shared through the
session-scoped ``runs`` cache.
"""

import time

import numpy as np

from faisac.cli import main
from faisac.metrics import crb_trace_form, inv_crb_closed
from faisac.oracles import fim_numeric_crb
from faisac.scenario import builtin_scenario
from faisac.verify import (check_mc_rate, check_rx_placement, check_sign_structure,
                           check_surrogates, crb_instances)

SEEDS = range(5)
# reduced particle-swarm budget for the comparative runs (see the decisions ledger)
PSO_BUDGET = {"swarm": 8, "pso_iters": 6}
SUBSTEP_TOL, END_TO_END_TOL = 1e-6, 1e-4
SOLVER_TOL = 1e-6


def _rel(x):
    return max(1.0, abs(x))


def test_crb_equivalence(criterion):
    sc = builtin_scenario("desk")
    t0 = time.perf_counter()
    closed = fd = 0.0
    for x, y, th, dist, sol in crb_instances(sc, 100, 0, False):
        crb = crb_trace_form(x, y, th, dist, sol, sc)
        closed = max(closed, abs(crb * inv_crb_closed(x, y, th, dist, sol, sc) - 1))
        fd = max(fd, abs(fim_numeric_crb(x, y, th, dist, sol, sc) / crb - 1))
    rank_one = max(abs(crb_trace_form(*a, sc) * inv_crb_closed(*a, sc) - 1)
                   for a in crb_instances(sc, 100, 0, True))
    elapsed = time.perf_counter() - t0
    ok = closed <= 1e-8 and fd <= 1e-5 and elapsed < 5.0
    assert criterion(1, "CRB equivalence", ok,
                     f"closed form max |ratio-1| {closed:.2e} (rank-one covariances "
                     f"{rank_one:.2e}), finite differences {fd:.2e}, {elapsed:.1f} s")


def test_receive_placement(criterion):
    t0 = time.perf_counter()
    _, ok, detail = check_rx_placement(builtin_scenario("table1"))
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 10.0
    assert criterion(2, "receive placement optimality", ok, f"{detail}, {elapsed:.1f} s")


def test_surrogate_validity(criterion):
    results = check_surrogates(1000, seed=0)
    bad = [name for name, ok, _ in results if not ok]
    detail = "; ".join(f"{name.split()[-1]} {d}" for name, _, d in results)
    assert criterion(3, "surrogate validity", not bad, detail)


def test_sign_structure(criterion):
    _, ok, detail = check_sign_structure(1000, seed=0)
    assert criterion(4, "surrogate sign structure", ok, detail)


def test_rank_one(criterion, runs, caplog):
    state, _ = runs.get("proposed")
    ratios = [r for e in state.trace[1:] for r in e.rank_ratios][:50]
    powers = np.concatenate([p for e in state.trace[1:] for p in e.beam_shares][:50])
    flat = np.concatenate(ratios)
    share = float(np.mean(flat >= 0.999))
    low = flat < 0.999
    # beams the optimiser switched off carry only solver residue; reported, not excused
    off = int(np.sum(low & (powers < 1e-4)))
    ok = len(ratios) == 50 and share >= 0.95
    assert criterion(5, "rank-one guarantee", ok,
                     f"{share:.1%} of {flat.size} beams from {len(ratios)} solves have ratio "
                     f">= 0.999, min {flat.min():.6f}, {int(low.sum())} fallback events, "
                     f"{off} of them on switched-off beams (power share < 1e-4)")


def test_ao_convergence(criterion, runs):
    state, elapsed = runs.get("proposed")
    bad = []
    for prev, entry in zip(state.trace, state.trace[1:]):
        f = prev.objective
        for name, value in entry.substeps:
            if name != "trajectory" and value < f - SUBSTEP_TOL * _rel(f):
                bad.append(f"iteration {entry.iteration} {name}")
            f = value
        if entry.objective < prev.objective - END_TO_END_TOL * _rel(prev.objective):
            bad.append(f"iteration {entry.iteration} end to end")
    ok = state.converged and state.iteration <= 30 and not bad and elapsed < 600
    objs = [e.objective for e in state.trace]
    assert criterion(6, "AO convergence", ok,
                     f"{state.iteration} iterations, objective {objs[0]:.4f} -> {objs[-1]:.4f}, "
                     f"{len(bad)} monotonicity breaks, {elapsed:.0f} s")


def test_rate_approximation(criterion):
    _, ok, detail = check_mc_rate(builtin_scenario("desk"), configs=20, samples=100_000, seed=0)
    assert criterion(7, "approximate rate vs Monte Carlo (10%)", ok, detail)


def test_scheme_ordering(criterion, runs):
    prop = runs.get("proposed")[0].objective
    fpa = runs.get("fpa")[0].objective
    rpa = np.array([runs.get("rpa", seed=s)[0].objective for s in SEEDS])
    pso = np.array([runs.get("pso", seed=s, **PSO_BUDGET)[0].objective for s in SEEDS])
    tol = SOLVER_TOL * _rel(prop)
    ok = (np.all(prop >= pso - tol) and pso.mean() >= rpa.mean() - tol and prop >= fpa - tol)
    assert criterion(8, "scheme ordering", ok,
                     f"proposed {prop:.4f}, PSO {np.round(pso, 4).tolist()} (mean "
                     f"{pso.mean():.4f}), RPA mean {rpa.mean():.4f} "
                     f"{np.round(rpa, 4).tolist()}, FPA {fpa:.4f}")


def test_weight_tradeoff(criterion, runs):
    weights = [0.0, 0.25, 0.5, 0.75, 1.0]
    b = [runs.get("proposed", xi_c=w)[0].breakdown() for w in weights]
    rate = np.array([x.sum_rate for x in b])
    crb = np.array([x.total_inv_crb for x in b])
    ok = (np.all(np.diff(rate) >= -SOLVER_TOL * np.abs(rate[1:]))
          and np.all(np.diff(crb) <= SOLVER_TOL * np.abs(crb[:-1])))
    assert criterion(9, "weight trade-off", ok,
                     f"sum rate {np.round(rate, 3).tolist()}, inverse CRB "
                     f"{[f'{v:.3e}' for v in crb]}")


def _sweep(runs, scheme, field_values):
    kw = dict(seed=0, **PSO_BUDGET) if scheme == "pso" else {"seed": 0}
    return np.array([runs.get(scheme, **kw, **fv)[0].objective for fv in field_values])


def test_sweep_trends(criterion, runs):
    power = [{"pmax_dbm": p} for p in (20.0, 25.0, 30.0)]
    antennas = [{"n_tx": n, "n_rx": n} for n in (4, 6, 8)]
    altitude = [{"altitude": h} for h in np.arange(50.0, 401.0, 50.0)]
    bad, parts = [], []
    for scheme in ("proposed", "fpa", "rpa", "pso"):
        fp, fa, fh = (_sweep(runs, scheme, v) for v in (power, antennas, altitude))
        if np.any(np.diff(fp) < -SOLVER_TOL * np.abs(fp[1:])):
            bad.append(f"{scheme} power")
        if np.any(np.diff(fa) < -SOLVER_TOL * np.abs(fa[1:])):
            bad.append(f"{scheme} antennas")
        k = int(np.argmax(fh))
        if k in (0, len(fh) - 1):
            bad.append(f"{scheme} altitude")
        parts.append(f"{scheme}: power {np.round(fp, 3).tolist()}, antennas "
                     f"{np.round(fa, 3).tolist()}, altitude argmax {50 * (k + 1)} m")
    detail = "; ".join(parts) + (f"; failing: {', '.join(bad)}" if bad else "")
    assert criterion(10, "sweep trends", not bad, detail)


def test_cli_determinism(criterion, tmp_path):
    commands = {
        "run": ["run", "--scheme", "pso", "--swarm", "2", "--pso-iters", "1", "--max-outer", "2",
                "--seed", "3"],
        "sweep": ["sweep", "--axis", "weight", "--values", "0.25,0.75", "--schemes", "fpa,rpa",
                  "--max-outer", "1"],
        "verify": ["verify", "--trials", "10", "--samples", "2000"],
    }
    differing = []
    for name, args in commands.items():
        dirs = [tmp_path / f"{name}{k}" for k in (1, 2)]
        for d in dirs:
            d.mkdir()
            extra = ["--out", str(d / "v.json")] if name == "verify" else ["--out", str(d)]
            main(args + extra)
        if name == "run":
            for d in dirs:
                assert main(["beampattern", "--run", str(d), "--slot", "2",
                             "--grid", "0:800:21,0:800:21"]) == 0
        files = sorted(p.name for p in dirs[0].iterdir())
        if not files or files != sorted(p.name for p in dirs[1].iterdir()):
            differing.append(name)
            continue
        differing += [f"{name}/{f}" for f in files
                      if (dirs[0] / f).read_bytes() != (dirs[1] / f).read_bytes()]
    assert criterion(11, "CLI determinism", not differing,
                     "run, beampattern, sweep and verify outputs byte-identical"
                     if not differing else f"differences in {', '.join(differing)}")
