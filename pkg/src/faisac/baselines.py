"""Benchmark schemes: fixed ULAs, random layouts and particle-swarm layouts.

Every scheme fixes the antenna layouts and reuses the alternating loop for
beamforming and trajectory.

Random layouts use the map ``x_k = S * u_(k) + k * d_min`` from sorted
uniforms ``u`` on ``[0, 1]`` (``S = D_FA - (n-1) d_min``), which is a linear
bijection between the ordered unit simplex and the spacing polytope, so the
layouts are uniform over the feasible set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ao import AoState, beamforming_pass, compute_fp, initialize, run
from .beamforming import exact_slot_objective, slot_model
from .metrics import mission_geometry
from .scenario import Scenario, ula

log = logging.getLogger(__name__)


def layout_from_unit(u, n: int, d_min: float, d_fa: float) -> np.ndarray:
    """Map ``u`` in ``[0, 1]^n`` onto a feasible layout (sorted-uniform map)."""
    u = np.sort(np.clip(np.asarray(u, float), 0.0, 1.0))
    slack = max(d_fa - (n - 1) * d_min, 0.0)
    return slack * u + np.arange(n) * d_min


def sample_layout(n: int, d_min: float, d_fa: float, rng: np.random.Generator) -> np.ndarray:
    """One layout drawn uniformly from the spacing polytope."""
    return layout_from_unit(rng.random(n), n, d_min, d_fa)


def random_layouts(scenario: Scenario, seed: int):
    """Per-interval transmit and receive layouts of the random scheme."""
    rng = np.random.default_rng(seed)
    sc = scenario
    tx = np.array([sample_layout(sc.n_tx, sc.d_min, sc.segment_len, rng)
                   for _ in range(sc.intervals)])
    rx = np.array([sample_layout(sc.n_rx, sc.d_min, sc.segment_len, rng)
                   for _ in range(sc.intervals)])
    return tx, rx


def run_fpa(scenario: Scenario, eps: float = 1e-3, max_outer: int = 50, **kw) -> AoState:
    """ULAs spanning the whole segment on both sides; positions never move."""
    sc = scenario
    tx = np.tile(ula(sc.n_tx, sc.segment_len).x, (sc.intervals, 1))
    rx = np.tile(ula(sc.n_rx, sc.segment_len).x, (sc.intervals, 1))
    init = initialize(sc, tx=tx, rx=rx)
    return run(sc, eps, max_outer, init=init, optimize_tx=False, optimize_rx=False,
               scheme="fpa", **kw)


def run_rpa(scenario: Scenario, seed: int = 0, eps: float = 1e-3, max_outer: int = 50,
            **kw) -> AoState:
    tx, rx = random_layouts(scenario, seed)
    init = initialize(scenario, tx=tx, rx=rx)
    return run(scenario, eps, max_outer, init=init, optimize_tx=False, optimize_rx=False,
               scheme="rpa", **kw)


@dataclass
class PsoResult:
    tx: np.ndarray
    rx: np.ndarray
    best_fitness: np.ndarray              # (I,) per-interval global best
    history: list = field(default_factory=list)  # per interval: gbest after each iteration


def _interval_fitness(scenario: Scenario, state: AoState, i: int, tx_i, rx_i) -> float:
    """Exact objective of interval ``i`` after one auxiliary/SDP pass."""
    sc = scenario
    tx, rx = state.tx.copy(), state.rx.copy()
    tx[i], rx[i] = tx_i, rx_i
    slots = list(sc.interval_slots(i))
    fp = compute_fp(sc, state.traj, tx, state.w_mats, state.r0)
    w, r0 = beamforming_pass(sc, state.traj, tx, rx, state.w_mats, state.r0, fp, slots=slots)
    g = mission_geometry(sc, state.traj, tx)
    return float(sum(exact_slot_objective(slot_model(sc, g, n, rx[i]), w[n], r0[n], sc)
                     for n in slots))


def pso_layouts(scenario: Scenario, seed: int = 0, swarm: int = 20, iters: int = 30,
                inertia: float = 0.7, c_cog: float = 1.5, c_soc: float = 1.5) -> PsoResult:
    """Particle-swarm search over per-interval (tx, rx) layouts.

    Particles live in ``[0, 1]^(n_tx + n_rx)`` and are mapped to layouts with
    :func:`layout_from_unit`; the box is enforced by reflection. Particle 0
    starts at the random-scheme draw for ``seed``, so ``swarm=1, iters=0``
    reproduces that scheme's layouts.
    """
    sc = scenario
    rng = np.random.default_rng([seed, 1])  # independent of the layout draw
    tx0, rx0 = random_layouts(sc, seed)
    state = initialize(sc, tx=tx0, rx=rx0)
    s_tx = max(sc.segment_len - (sc.n_tx - 1) * sc.d_min, 0.0)
    s_rx = max(sc.segment_len - (sc.n_rx - 1) * sc.d_min, 0.0)
    dim = sc.n_tx + sc.n_rx

    def to_layouts(p):
        return (layout_from_unit(p[:sc.n_tx], sc.n_tx, sc.d_min, sc.segment_len),
                layout_from_unit(p[sc.n_tx:], sc.n_rx, sc.d_min, sc.segment_len))

    def to_unit(tx_i, rx_i):
        u_tx = (tx_i - np.arange(sc.n_tx) * sc.d_min) / s_tx if s_tx > 0 else np.zeros(sc.n_tx)
        u_rx = (rx_i - np.arange(sc.n_rx) * sc.d_min) / s_rx if s_rx > 0 else np.zeros(sc.n_rx)
        return np.clip(np.concatenate([u_tx, u_rx]), 0.0, 1.0)

    tx_best = tx0.copy()
    rx_best = rx0.copy()
    best_fit = np.empty(sc.intervals)
    history = []
    for i in range(sc.intervals):
        pos = rng.random((swarm, dim))
        pos[0] = to_unit(tx0[i], rx0[i])
        vel = 0.1 * (rng.random((swarm, dim)) - 0.5)

        def fitness(p):
            t, r = to_layouts(p)
            return _interval_fitness(sc, state, i, t, r)

        fit = np.array([fitness(p) for p in pos])
        pbest, pfit = pos.copy(), fit.copy()
        g = int(np.argmax(pfit))
        gbest, gfit = pbest[g].copy(), pfit[g]
        hist = [gfit]
        for _ in range(iters):
            r1, r2 = rng.random((swarm, dim)), rng.random((swarm, dim))
            vel = inertia * vel + c_cog * r1 * (pbest - pos) + c_soc * r2 * (gbest - pos)
            pos = pos + vel
            # reflect into the unit box
            low, high = pos < 0, pos > 1
            pos[low], vel[low] = -pos[low], -vel[low]
            pos[high], vel[high] = 2 - pos[high], -vel[high]
            pos = np.clip(pos, 0.0, 1.0)
            fit = np.array([fitness(p) for p in pos])
            better = fit > pfit
            pbest[better], pfit[better] = pos[better], fit[better]
            g = int(np.argmax(pfit))
            if pfit[g] > gfit:
                gbest, gfit = pbest[g].copy(), pfit[g]
            hist.append(gfit)
        tx_best[i], rx_best[i] = to_layouts(gbest)
        best_fit[i] = gfit
        history.append(hist)
        log.info("pso interval %d: best fitness %.6g", i + 1, gfit)
    return PsoResult(tx_best, rx_best, best_fit, history)


def run_pso(scenario: Scenario, swarm: int = 20, iters: int = 30, seed: int = 0,
            eps: float = 1e-3, max_outer: int = 50, **kw) -> AoState:
    res = pso_layouts(scenario, seed, swarm, iters)
    init = initialize(scenario, tx=res.tx, rx=res.rx)
    state = run(scenario, eps, max_outer, init=init, optimize_tx=False, optimize_rx=False,
                scheme="pso", **kw)
    state.extras["pso"] = res
    return state
