"""Independent checks: Monte-Carlo rates, finite-difference CRB, bound sweeps.

These routines only share the channel primitives (steering vectors, channel
sampling) with the modules they check, and recompute everything else from
the model definitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelStats, sample_channel, steering
from .scenario import Scenario


# -- ergodic rate ------------------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int


def mc_ergodic_rate(stats: ChannelStats, sol, noise: float, m: int,
                    samples: int = 100_000, seed=0) -> McEstimate:
    """Monte-Carlo ergodic rate (bit/s/Hz) of user ``m`` under the exact SINR.

    ``sol`` needs ``w_mats`` (M, n, n) and ``r0`` (n, n).
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    h = sample_channel(stats, seed, size=samples)                  # (S, n)
    w = np.asarray(sol.w_mats)

    def power(mat):
        return np.real(np.einsum("si,ij,sj->s", h.conj(), mat, h))

    sig = power(w[m])
    interf = sum(power(w[i]) for i in range(len(w)) if i != m) + power(np.asarray(sol.r0))
    r = np.log2(1.0 + np.maximum(sig, 0.0) / (interf + noise))
    return McEstimate(float(r.mean()), float(r.std(ddof=1) / np.sqrt(samples)), samples)


# -- CRB by finite differences -----------------------------------------------

def _coords(layout):
    return np.asarray(getattr(layout, "coords", layout), float)


def _trace_crb(a_mat, a_dot, rx, dist_t, scenario: Scenario) -> float:
    gain = abs(scenario.rcs / (2 * dist_t)) ** 2
    t_aa = np.real(np.trace(a_mat.conj().T @ a_mat @ rx))
    t_dd = np.real(np.trace(a_dot.conj().T @ a_dot @ rx))
    t_da = np.trace(a_dot.conj().T @ a_mat @ rx)
    info = t_dd - abs(t_da) ** 2 / t_aa
    return float(scenario.noise_radar / (2 * gain * scenario.frame_len * info))


def fim_numeric_crb(tx_layout, rx_layout, theta_t: float, dist_t: float, sol,
                    scenario: Scenario, fd_step: float = 1e-6, richardson: bool = False) -> float:
    """Angle CRB (rad^2) with the response derivative taken by central differences.

    ``sol`` is a transmit covariance matrix or anything with ``w_mats``/``r0``.
    With ``richardson`` the derivative combines steps ``h`` and ``h/2``.
    """
    x, y = _coords(tx_layout), _coords(rx_layout)
    lam = scenario.wavelength
    if hasattr(sol, "w_mats"):
        rx_cov = np.asarray(sol.w_mats).sum(axis=0) + np.asarray(sol.r0)
    else:
        rx_cov = np.asarray(sol, complex)

    def resp(th):
        return np.outer(steering(y, th, lam), steering(x, th, lam).conj())

    def central(h):
        return (resp(theta_t + h) - resp(theta_t - h)) / (2 * h)

    a_dot = central(fd_step)
    if richardson:
        a_dot = (4 * central(fd_step / 2) - a_dot) / 3
    return _trace_crb(resp(theta_t), a_dot, rx_cov, dist_t, scenario)


# -- surrogate bound sweeps --------------------------------------------------

TX_FAMILIES = ("tx-lower", "tx-upper")
TRAJ_FAMILIES = ("traj-rate-lower", "traj-interference-upper", "traj-crb-lower", "traj-objective")


@dataclass
class BoundReport:
    family: str
    trials: int
    points: int = 0
    violations: int = 0
    max_violation: float = 0.0      # largest relative excess beyond the bound
    max_tangency_error: float = 0.0  # relative error at the expansion point
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"family": self.family, "trials": self.trials, "points": self.points,
                "violations": self.violations, "max_violation": self.max_violation,
                "max_tangency_error": self.max_tangency_error}


def _random_layout(rng, n, d_min, d_fa):
    u = np.sort(rng.random(n))
    return (d_fa - (n - 1) * d_min) * u + np.arange(n) * d_min


def _random_psd(rng, n, scale=1.0):
    k = rng.integers(1, n + 1)
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    c = g @ g.conj().T
    return scale * c / np.real(np.trace(c))


def _record(rep: BoundReport, excess: float, tangency: float, slack: float, note: str):
    rep.points += 1
    if excess > slack:
        rep.violations += 1
        if len(rep.failures) < 10:
            rep.failures.append(note)
    rep.max_violation = max(rep.max_violation, excess)
    rep.max_tangency_error = max(rep.max_tangency_error, tangency)


def _tx_sweep(family: str, trials: int, seed, points: int, slack: float) -> BoundReport:
    from .txarray import build_surrogate

    rng = np.random.default_rng(seed)
    rep = BoundReport(family, trials)
    sense = "lower" if family == "tx-lower" else "upper"
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        d_min = 0.5
        d_fa = float(rng.uniform((n - 1) * d_min, 30.0))
        theta = float(rng.uniform(0.01, np.pi / 2))
        c = _random_psd(rng, n, scale=float(10 ** rng.uniform(-2, 2)))
        x0 = _random_layout(rng, n, d_min, d_fa)
        sur = build_surrogate(c, theta, x0, sense, wavelength=1.0)
        scale = float(np.abs(c).sum())

        def truth(x):
            h = steering(x, theta, 1.0)
            return float(np.real(h.conj() @ c @ h))

        tang = abs(sur.value(x0) - truth(x0)) / scale
        for _ in range(points):
            x1 = _random_layout(rng, n, d_min, d_fa)
            t = float(10 ** rng.uniform(-4, 0))
            x = x0 + t * (x1 - x0)
            diff = sur.value(x) - truth(x)
            excess = (diff if sense == "lower" else -diff) / scale
            _record(rep, excess, tang, slack, f"n={n} theta={theta:.4f} t={t:.2e}")
    return rep


def _traj_sweep(family: str, trials: int, seed, points: int, slack: float,
                scenario: Scenario | None) -> BoundReport:
    from .metrics import evaluate, mission_geometry
    from .scenario import builtin_scenario
    from .trajectory import linearize, surrogate_objective, surrogate_terms

    sc = scenario if scenario is not None else builtin_scenario("desk")
    rng = np.random.default_rng(seed)
    rep = BoundReport(family, trials)
    line = np.linspace(sc.start_xy, sc.end_xy, sc.slots)
    for _ in range(trials):
        traj0 = line + rng.normal(scale=rng.uniform(1, 150), size=line.shape)
        traj0[0], traj0[-1] = sc.start_xy, sc.end_xy
        tx = np.array([_random_layout(rng, sc.n_tx, sc.d_min, sc.segment_len)
                       for _ in range(sc.intervals)])
        rx = np.array([_random_layout(rng, sc.n_rx, sc.d_min, sc.segment_len)
                       for _ in range(sc.intervals)])
        share = rng.dirichlet(np.ones(sc.n_users + 1), size=sc.slots) * sc.pmax
        w = np.array([[_random_psd(rng, sc.n_tx, share[k, i]) for i in range(sc.n_users)]
                      for k in range(sc.slots)])
        r0 = np.array([_random_psd(rng, sc.n_tx, share[k, -1]) for k in range(sc.slots)])
        lin = linearize(sc, traj0, tx, rx, w, r0)
        frozen = (lin.theta_u, lin.theta_t)

        def exact_terms(q):
            h2 = sc.altitude**2
            d2u = np.sum((q[:, None, :] - sc.user_xy[None]) ** 2, axis=-1) + h2
            d2t = np.sum((q - sc.target_xy) ** 2, axis=-1) + h2
            return {"r1": np.log2((lin.b + lin.c) / d2u + lin.noise),
                    "r2": np.log2(lin.c / d2u + lin.noise),
                    "crb": lin.a_coef / d2t}

        def frozen_truth(q):
            g = mission_geometry(sc, q, tx, theta_override=frozen)
            return evaluate(sc, q, tx, rx, w, r0, geometry=g).objective

        def compare(q):
            s = surrogate_terms(sc, lin, q)
            e = exact_terms(q)
            if family == "traj-rate-lower":
                return s["r1_lb"] - e["r1"], np.abs(e["r1"]) + 1
            if family == "traj-interference-upper":
                return e["r2"] - s["r2_ub"], np.abs(e["r2"]) + 1
            if family == "traj-crb-lower":
                return s["inv_crb_lb"] - e["crb"], np.abs(e["crb"]) + 1e-300
            t = frozen_truth(q)
            return np.array(surrogate_objective(sc, lin, q) - t), np.array(abs(t) + 1)

        d0, s0 = compare(traj0)
        tang = float(np.max(np.abs(d0) / s0))
        for _ in range(points):
            q = traj0 + rng.normal(scale=10 ** rng.uniform(-2, 2.5), size=traj0.shape)
            d, s = compare(q)
            with np.errstate(invalid="ignore"):
                rel = np.where(np.isfinite(d), d / s, -np.inf)
            _record(rep, float(np.max(rel)), tang, slack, f"trial point max rel {np.max(rel):.3e}")
    return rep


def surrogate_bound_sweep(family: str, trials: int = 1000, seed=0, points: int = 5,
                          slack: float = 1e-9, scenario: Scenario | None = None) -> BoundReport:
    """Check bound direction and tangency of one surrogate family.

    Families: ``tx-lower``/``tx-upper`` (cosine bounds of ``h^H C h`` in the
    transmit positions) and ``traj-rate-lower``, ``traj-interference-upper``,
    ``traj-crb-lower``, ``traj-objective`` (trajectory bounds with frozen
    steering). Each trial draws a new expansion point and ``points`` test
    points; excesses are relative to the magnitude of the true value.
    """
    if family in TX_FAMILIES:
        return _tx_sweep(family, trials, seed, points, slack)
    if family in TRAJ_FAMILIES:
        return _traj_sweep(family, trials, seed, points, slack, scenario)
    raise ValueError(f"unknown surrogate family {family!r}")
