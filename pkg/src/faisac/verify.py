"""Oracle suite behind ``faisac verify``.

Each check returns ``(name, ok, detail)``. Only statements that hold for the
model are checked; in particular the closed-form inverse CRB is compared for
equality on rank-one covariances and as a lower bound otherwise.
"""

from __future__ import annotations

import numpy as np

from .channel import channel_stats
from .metrics import BeamformingSolution, approx_rate, crb_trace_form, inv_crb_closed, tss
from .oracles import TRAJ_FAMILIES, TX_FAMILIES, fim_numeric_crb, mc_ergodic_rate, \
    surrogate_bound_sweep
from .rxarray import brute_force_rx, optimal_rx_positions
from .scenario import Scenario, builtin_scenario, ula
from .txarray import build_surrogate, psd_sign_check


def random_layout(rng, n, d_min, d_fa):
    return (d_fa - (n - 1) * d_min) * np.sort(rng.random(n)) + np.arange(n) * d_min


def random_solution(rng, n_users, n, pmax, rank_one_total=False) -> BeamformingSolution:
    """Feasible beamforming with rank-one ``W_m`` and a random ``R_0``.

    With ``rank_one_total`` the whole covariance is rank one (one user, no
    dedicated sensing power).
    """
    if rank_one_total:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w = np.zeros((n_users, n, n), complex)
        w[0] = pmax * np.outer(v, v.conj()) / np.vdot(v, v).real
        return BeamformingSolution(w, np.zeros((n, n), complex))
    share = rng.dirichlet(np.ones(n_users + 1)) * pmax * rng.uniform(0.2, 1.0)
    w = []
    for m in range(n_users):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w.append(share[m] * np.outer(v, v.conj()) / np.vdot(v, v).real)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    r0 = g @ g.conj().T
    r0 = share[-1] * r0 / np.trace(r0).real
    return BeamformingSolution(np.array(w), r0)


def crb_instances(scenario: Scenario, count: int, seed, rank_one_total: bool):
    rng = np.random.default_rng(seed)
    sc = scenario
    for _ in range(count):
        x = random_layout(rng, sc.n_tx, sc.d_min, sc.segment_len)
        y = random_layout(rng, sc.n_rx, sc.d_min, sc.segment_len)
        theta = rng.uniform(0.05, np.pi / 2 - 0.05)
        dist = rng.uniform(sc.altitude, 5 * sc.altitude)
        sol = random_solution(rng, sc.n_users, sc.n_tx, sc.pmax, rank_one_total)
        yield x, y, theta, dist, sol


def check_crb_rank_one(scenario, count=100, seed=0, tol=1e-8):
    worst = 0.0
    for x, y, th, d, sol in crb_instances(scenario, count, seed, True):
        worst = max(worst, abs(crb_trace_form(x, y, th, d, sol, scenario)
                               * inv_crb_closed(x, y, th, d, sol, scenario) - 1))
    return "crb closed form (rank-one covariance)", worst <= tol, f"max |ratio-1| {worst:.3e}"


def check_crb_lower_bound(scenario, count=100, seed=0, tol=1e-9):
    worst = -np.inf
    for x, y, th, d, sol in crb_instances(scenario, count, seed, False):
        exact = 1.0 / crb_trace_form(x, y, th, d, sol, scenario)
        worst = max(worst, inv_crb_closed(x, y, th, d, sol, scenario) / exact - 1)
    return ("crb closed form bounds the exact inverse CRB (general covariance)",
            worst <= tol, f"max closed/exact-1 {worst:.3e}")


def check_crb_fd(scenario, count=100, seed=0, tol=1e-5):
    worst = 0.0
    for x, y, th, d, sol in crb_instances(scenario, count, seed, False):
        worst = max(worst, abs(fim_numeric_crb(x, y, th, d, sol, scenario)
                               / crb_trace_form(x, y, th, d, sol, scenario) - 1))
    return "finite-difference CRB", worst <= tol, f"max rel err {worst:.3e}"


def check_surrogates(trials=1000, seed=0):
    out = []
    for fam in TX_FAMILIES + TRAJ_FAMILIES:
        rep = surrogate_bound_sweep(fam, trials=trials, seed=seed)
        ok = rep.violations == 0 and rep.max_tangency_error <= 1e-9
        out.append((f"surrogate bounds {fam}", ok,
                    f"{rep.points} points, {rep.violations} violations, "
                    f"tangency {rep.max_tangency_error:.2e}"))
    return out


def check_sign_structure(trials=1000, seed=0):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 13))
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        c = g @ g.conj().T
        th = rng.uniform(0.0, np.pi / 2)
        x0 = random_layout(rng, n, 0.5, 20.0)
        for sense in ("lower", "upper"):
            bad += not psd_sign_check(build_surrogate(c, th, x0, sense))
    return "surrogate curvature signs", bad == 0, f"{bad} sign errors in {2 * trials} matrices"


def check_rx_placement(scenario: Scenario | None = None):
    sc = scenario if scenario is not None else builtin_scenario("table1")
    msgs, ok = [], True
    for n in range(2, 13):
        best = optimal_rx_positions(n, sc.d_min, sc.segment_len)
        brute = brute_force_rx(n, sc.d_min, sc.segment_len,
                               grid_step=sc.segment_len / 8 if n <= 6 else None)
        equal = tss(best.x) == tss(brute.x)
        # with two elements the ULA already sits on both ends; no slack to exploit
        slack = n >= 3 and sc.segment_len > (n - 1) * sc.d_min
        beats = tss(best.x) > tss(ula(n, sc.segment_len).x) or not slack
        ok &= equal and beats
        if not (equal and beats):
            msgs.append(f"n={n}")
    return "receive placement optimality", ok, "all n in 2..12" if ok else ", ".join(msgs)


def check_mc_rate(scenario: Scenario | None = None, configs=20, samples=100_000, seed=0,
                  tol=0.10):
    sc = scenario if scenario is not None else builtin_scenario("desk")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(configs):
        uav = rng.uniform(0, 800, 2)
        x = random_layout(rng, sc.n_tx, sc.d_min, sc.segment_len)
        sol = random_solution(rng, sc.n_users, sc.n_tx, sc.pmax)
        for m in range(sc.n_users):
            st = channel_stats(sc, uav, sc.user_xy[m], x)
            mc = mc_ergodic_rate(st, sol, sc.noise_user, m, samples, seed=[seed, k, m])
            ap = approx_rate(st, sol, sc.noise_user, m)
            worst = max(worst, abs(ap - mc.mean) / max(mc.mean, 1e-12))
    return "approximate rate vs Monte Carlo", worst <= tol, f"max rel diff {worst:.3e}"


def run_all(trials=1000, seed=0, samples=100_000):
    sc = builtin_scenario("desk")
    res = [check_crb_rank_one(sc, seed=seed), check_crb_lower_bound(sc, seed=seed),
           check_crb_fd(sc, seed=seed)]
    res += check_surrogates(trials, seed)
    res += [check_sign_structure(trials, seed), check_rx_placement(),
            check_mc_rate(sc, samples=samples, seed=seed)]
    return res
