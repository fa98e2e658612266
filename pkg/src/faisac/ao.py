"""Alternating optimisation over beamforming, array positions and trajectory."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .beamforming import (FpAuxiliaries, extract_rank_one, fp_update, mrt_initial,
                          rank_one_vectors, slot_model, solve_p22)
from .metrics import (BeamformingSolution, ObjectiveBreakdown, evaluate, mission_geometry,
                      signal_interference)
from .rxarray import optimal_rx_positions
from .scenario import Scenario, ula
from .trajectory import linearize, solve_p51, straight_line, trajectory_violations
from .txarray import build_p32, solve_p32

log = logging.getLogger(__name__)

SUBSTEP_TOL = 1e-6
END_TO_END_TOL = 1e-4
TRAJ_STEPS = (1.0, 0.5, 0.25)
TRAJ_REFRESH_STEPS = (1.0, 0.25)


@dataclass
class TraceEntry:
    """Bookkeeping of one outer iteration (iteration 0 is the initial point)."""

    iteration: int
    breakdown: ObjectiveBreakdown
    substeps: list = field(default_factory=list)   # (name, objective) after each step
    reports: list = field(default_factory=list)    # (step, index, SolverReport)
    rank_ratios: list = field(default_factory=list)
    beam_shares: list = field(default_factory=list)  # tr(W_m) / pmax next to each ratio
    events: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def objective(self) -> float:
        return self.breakdown.objective


@dataclass
class AoState:
    """Full iterate of the alternating optimisation.

    ``tx`` and ``rx`` hold per-interval coordinates in metres; ``w_mats`` and
    ``r0`` per-slot covariances.
    """

    scenario: Scenario
    traj: np.ndarray
    tx: np.ndarray
    rx: np.ndarray
    w_mats: np.ndarray
    r0: np.ndarray
    fp: FpAuxiliaries
    trace: list = field(default_factory=list)
    iteration: int = 0
    scheme: str = "proposed"
    converged: bool = False
    extras: dict = field(default_factory=dict)

    def breakdown(self) -> ObjectiveBreakdown:
        return evaluate(self.scenario, self.traj, self.tx, self.rx, self.w_mats, self.r0)

    @property
    def objective(self) -> float:
        return self.breakdown().objective

    def solution(self, n: int) -> BeamformingSolution:
        sol = BeamformingSolution(self.w_mats[n], self.r0[n])
        sol.w_vecs = rank_one_vectors(sol)
        return sol

    def violations(self) -> list[str]:
        sc = self.scenario
        out = [f"trajectory: {v}" for v in trajectory_violations(sc, self.traj)]
        from .scenario import ArrayLayout
        for i in range(sc.intervals):
            for kind, arr in (("transmit", self.tx[i]), ("receive", self.rx[i])):
                lay = ArrayLayout(tuple(arr), kind)
                out += [f"{kind} layout {i + 1}: {v}"
                        for v in lay.violations(sc.d_min, sc.segment_len)]
        for n in range(sc.slots):
            out += [f"slot {n + 1}: {v}"
                    for v in BeamformingSolution(self.w_mats[n], self.r0[n]).violations(sc.pmax)]
        return out

    def copy(self) -> "AoState":
        return AoState(self.scenario, self.traj.copy(), self.tx.copy(), self.rx.copy(),
                       self.w_mats.copy(), self.r0.copy(), self.fp.copy(), list(self.trace),
                       self.iteration, self.scheme, self.converged, dict(self.extras))


def compute_fp(scenario: Scenario, traj, tx, w_mats, r0) -> FpAuxiliaries:
    g = mission_geometry(scenario, traj, tx)
    e, f = signal_interference(g.hbar, g.zeta_los, g.zeta_nlos, w_mats, r0, scenario.noise_user)
    omega, varpi = fp_update(e, f)
    return FpAuxiliaries(omega.T.copy(), varpi.T.copy())


def initialize(scenario: Scenario, tx=None, rx=None) -> AoState:
    """Straight-line flight, ULA transmit array, boundary receive array, MRT."""
    sc = scenario
    traj = straight_line(sc)
    if tx is None:
        tx = np.tile(ula(sc.n_tx, sc.segment_len).x, (sc.intervals, 1))
    if rx is None:
        rx = np.tile(optimal_rx_positions(sc.n_rx, sc.d_min, sc.segment_len).x, (sc.intervals, 1))
    tx, rx = np.array(tx, float), np.array(rx, float)
    g = mission_geometry(sc, traj, tx)
    m, n = sc.n_users, sc.n_tx
    w = np.zeros((sc.slots, m, n, n), complex)
    r0 = np.zeros((sc.slots, n, n), complex)
    for k in range(sc.slots):
        w[k] = mrt_initial(slot_model(sc, g, k, rx[k // sc.mu]), sc.pmax).w_mats
    fp = compute_fp(sc, traj, tx, w, r0)
    state = AoState(sc, traj, tx, rx, w, r0, fp)
    state.trace.append(TraceEntry(0, state.breakdown()))
    return state


def beamforming_pass(scenario: Scenario, traj, tx, rx, w_mats, r0, fp: FpAuxiliaries,
                     reports=None, ratios=None, slots=None, shares=None, **solver_kw):
    """One P2-2 solve per slot with fixed auxiliaries; returns new (w_mats, r0).

    Only ``slots`` (default: all) are re-solved; the others are copied.
    """
    sc = scenario
    g = mission_geometry(sc, traj, tx)
    w_new = np.array(w_mats, copy=True)
    r_new = np.array(r0, copy=True)
    for k in (range(sc.slots) if slots is None else slots):
        model = slot_model(sc, g, k, rx[k // sc.mu])
        sol, rep = solve_p22(model, fp.omega[:, k], fp.varpi[:, k], sc, **solver_kw)
        w_new[k], r_new[k] = sol.w_mats, sol.r0
        if reports is not None:
            reports.append(("beamforming", k, rep))
        if ratios is not None:
            ratios.append([extract_rank_one(w, threshold=1.0).ratio for w in sol.w_mats])
        if shares is not None:
            shares.append([float(np.real(np.trace(w))) / sc.pmax for w in sol.w_mats])
    return w_new, r_new


def _rel(x: float) -> float:
    return max(1.0, abs(x))


def outer_iteration(state: AoState, optimize_tx: bool = True, optimize_rx: bool = True,
                    optimize_traj: bool = True, inner_rounds: int = 1, **solver_kw) -> TraceEntry:
    """Execute one pass of the alternating loop in place and return its trace entry."""
    sc = state.scenario
    t0 = time.perf_counter()
    entry = TraceEntry(state.iteration + 1, state.breakdown())
    f_prev = state.trace[-1].objective if state.trace else entry.objective

    def record(name):
        f = state.breakdown().objective
        entry.substeps.append((name, f))
        return f

    # beamforming (auxiliaries, then the SDP per slot)
    for _ in range(max(1, inner_rounds)):
        state.fp = compute_fp(sc, state.traj, state.tx, state.w_mats, state.r0)
        ratios, shares = [], []
        w, r0 = beamforming_pass(sc, state.traj, state.tx, state.rx, state.w_mats, state.r0,
                                 state.fp, entry.reports, ratios, shares=shares, **solver_kw)
        state.w_mats, state.r0 = w, r0
    entry.rank_ratios, entry.beam_shares = ratios, shares
    f_bf = record("beamforming")

    # transmit positions, one convex bound problem per interval
    state.fp = compute_fp(sc, state.traj, state.tx, state.w_mats, state.r0)
    if optimize_tx:
        g = mission_geometry(sc, state.traj, state.tx)
        f_before = f_bf
        new_tx = state.tx.copy()
        for i in range(sc.intervals):
            js = list(sc.interval_slots(i))
            p = build_p32(sc, js, g.theta_u[js], g.theta_t[js], g.dist_t[js], g.zeta_los[js],
                          g.zeta_nlos[js], state.w_mats[js], state.r0[js], state.rx[i],
                          state.fp.omega[:, js].T, state.fp.varpi[:, js].T, state.tx[i])
            x, rep = solve_p32(p, state.tx[i], **solver_kw)
            new_tx[i] = x
            if rep is not None:
                entry.reports.append(("transmit", i, rep))
        old_tx = state.tx
        state.tx = new_tx
        f_tx = state.breakdown().objective
        if f_tx < f_before - SUBSTEP_TOL * _rel(f_before):
            entry.events.append(f"transmit step reverted ({f_tx:.9g} < {f_before:.9g})")
            state.tx = old_tx
    record("transmit")

    if optimize_rx:
        y = optimal_rx_positions(sc.n_rx, sc.d_min, sc.segment_len).x
        state.rx = np.tile(y, (sc.intervals, 1))
    f_rx = record("receive")

    if optimize_traj:
        lin = linearize(sc, state.traj, state.tx, state.rx, state.w_mats, state.r0)
        q_new, rep = solve_p51(sc, lin, **solver_kw)
        if rep is not None:
            entry.reports.append(("trajectory", 0, rep))
        state.traj, state.w_mats, state.r0 = _accept_trajectory(
            state, q_new, f_rx, entry, **solver_kw)
    record("trajectory")

    entry.breakdown = state.breakdown()
    entry.wall_time = time.perf_counter() - t0
    state.iteration += 1
    state.trace.append(entry)
    if entry.objective < f_prev - END_TO_END_TOL * _rel(f_prev):
        log.warning("objective decreased from %.9g to %.9g", f_prev, entry.objective)
    return entry


def _accept_trajectory(state: AoState, q_new, f_old, entry, **solver_kw):
    """Monotone acceptance of the trajectory candidate.

    The program freezes steering vectors, so its step is not always an
    ascent step of the exact objective. Shortened steps are tried with the
    current beamforming first, then with beamforming re-optimised at the
    candidate; if nothing beats ``f_old`` the previous trajectory is kept.
    The costly re-optimised trials are skipped right after a rejection.
    """
    sc = state.scenario
    q_old = state.traj
    tol = SUBSTEP_TOL * _rel(f_old)

    def f_at(q, w, r0):
        return evaluate(sc, q, state.tx, state.rx, w, r0).objective

    for step in TRAJ_STEPS:
        q = q_old + step * (q_new - q_old)
        if f_at(q, state.w_mats, state.r0) >= f_old - tol:
            if step < 1:
                entry.events.append(f"trajectory step shortened to {step}")
            return q, state.w_mats, state.r0
    prev = state.trace[-1].events if state.trace else []
    refresh = () if "trajectory step rejected" in prev else TRAJ_REFRESH_STEPS
    for step in refresh:
        q = q_old + step * (q_new - q_old)
        fp = compute_fp(sc, q, state.tx, state.w_mats, state.r0)
        w, r0 = beamforming_pass(sc, q, state.tx, state.rx, state.w_mats, state.r0, fp,
                                 **solver_kw)
        if f_at(q, w, r0) >= f_old - tol:
            entry.events.append(f"trajectory step {step} accepted with refreshed beamforming")
            return q, w, r0
    entry.events.append("trajectory step rejected")
    return q_old, state.w_mats, state.r0


def run(scenario: Scenario, eps: float = 1e-3, max_outer: int = 50, init: AoState | None = None,
        optimize_tx: bool = True, optimize_rx: bool = True, optimize_traj: bool = True,
        inner_rounds: int = 1, scheme: str = "proposed", **solver_kw) -> AoState:
    """Alternate until the objective gain of an outer iteration drops below ``eps``."""
    state = init if init is not None else initialize(scenario)
    state.scheme = scheme
    for _ in range(max_outer):
        prev = state.trace[-1].objective
        try:
            entry = outer_iteration(state, optimize_tx, optimize_rx, optimize_traj,
                                    inner_rounds, **solver_kw)
        except RuntimeError as exc:
            raise RuntimeError(f"iteration {state.iteration + 1}: {exc}") from exc
        if entry.objective - prev < eps:
            state.converged = True
            break
    return state
