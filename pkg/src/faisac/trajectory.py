"""UAV trajectory design by successive convex approximation.

Steering vectors and Rician factors are frozen at the previous trajectory,
which leaves every rate and inverse-CRB term a function of squared distances
only. Concave minorants of those terms give a convex program in the
waypoints. Inside the program horizontal positions are divided by the
altitude ``H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import ConicProgram, solve
from .metrics import mission_geometry, slot_coords, tss
from .scenario import Scenario

LN2 = np.log(2.0)


def straight_line(scenario: Scenario) -> np.ndarray:
    return np.linspace(scenario.start_xy, scenario.end_xy, scenario.slots)


def trajectory_violations(scenario: Scenario, traj, tol: float = 1e-6) -> list[str]:
    q = np.asarray(traj, float)
    out = []
    if q.shape != (scenario.slots, 2):
        return ["shape"]
    scale = max(scenario.step_limit, 1.0)
    if np.linalg.norm(q[0] - scenario.start_xy) > tol * scale:
        out.append("start point")
    if np.linalg.norm(q[-1] - scenario.end_xy) > tol * scale:
        out.append("end point")
    steps = np.linalg.norm(np.diff(q, axis=0), axis=1)
    if np.any(steps > scenario.step_limit * (1 + tol)):
        out.append("speed limit")
    return out


@dataclass
class TrajectoryLinearization:
    """Frozen-steering constants about ``traj0``.

    ``b`` and ``c`` are the desired and interference powers scaled by the
    squared distance (W m^2), ``a_coef`` the inverse CRB times the squared
    target distance (rad^-2 m^2).
    """

    traj0: np.ndarray     # (N, 2)
    theta_u: np.ndarray   # (N, M)
    theta_t: np.ndarray   # (N,)
    d2_u: np.ndarray      # (N, M) squared distances at traj0
    d2_t: np.ndarray      # (N,)
    b: np.ndarray         # (N, M)
    c: np.ndarray         # (N, M)
    a_coef: np.ndarray    # (N,)
    noise: float
    xi_c: float
    xi_s: float            # already multiplied by the sensing scale


def linearize(scenario: Scenario, traj, tx, rx, w_mats, r0) -> TrajectoryLinearization:
    traj = np.asarray(traj, float)
    g = mission_geometry(scenario, traj, tx)
    d2u = g.dist_u**2
    d2t = g.dist_t**2
    # zeta * d^2 removes the distance dependence of the path loss
    zl, zn = g.zeta_los * d2u, g.zeta_nlos * d2u
    gm = np.real(np.einsum("nmi,nkij,nmj->nmk", g.hbar.conj(), w_mats, g.hbar))
    trw = np.real(np.trace(w_mats, axis1=2, axis2=3))
    p = zl[..., None] * gm + zn[..., None] * trw[:, None, :]
    b = np.einsum("nmm->nm", p).copy()
    g0 = np.real(np.einsum("nmi,nij,nmj->nm", g.hbar.conj(), r0, g.hbar))
    c = p.sum(axis=2) - b + zl * g0 + zn * np.real(np.trace(r0, axis1=1, axis2=2))[:, None]
    rxc = w_mats.sum(axis=1) + r0
    gain = np.real(np.einsum("ni,nij,nj->n", g.a.conj(), rxc, g.a))
    k = 2 * np.pi / scenario.wavelength
    spread = np.array([tss(y) for y in slot_coords(scenario, rx)])
    a_coef = (scenario.rcs**2 * scenario.frame_len * (k * np.cos(g.theta_t)) ** 2
              / (2 * scenario.noise_radar) * gain * spread)
    return TrajectoryLinearization(
        traj0=traj.copy(), theta_u=g.theta_u, theta_t=g.theta_t, d2_u=d2u, d2_t=d2t,
        b=np.maximum(b, 0.0), c=np.maximum(c, 0.0), a_coef=np.maximum(a_coef, 0.0),
        noise=scenario.noise_user, xi_c=scenario.xi_c,
        xi_s=scenario.xi_s * scenario.sensing_scale)


def _sq_dists(scenario: Scenario, traj):
    q = np.asarray(traj, float)
    h2 = scenario.altitude**2
    d2u = np.sum((q[:, None, :] - scenario.user_xy[None]) ** 2, axis=-1) + h2
    d2t = np.sum((q - scenario.target_xy) ** 2, axis=-1) + h2
    return d2u, d2t


def frozen_objective(scenario: Scenario, lin: TrajectoryLinearization, traj) -> float:
    """Objective with steering frozen at ``lin.traj0``."""
    d2u, d2t = _sq_dists(scenario, traj)
    rate = np.log2(1 + (lin.b / d2u) / (lin.c / d2u + lin.noise))
    return float(lin.xi_c * rate.sum() + lin.xi_s * np.sum(lin.a_coef / d2t))


def surrogate_terms(scenario: Scenario, lin: TrajectoryLinearization, traj) -> dict:
    """Per-term bounds at ``traj``: ``r1_lb``, ``r2_ub`` (N, M) and ``inv_crb_lb`` (N,).

    ``r1_lb`` minorises ``log2(B/d^2 + C/d^2 + sigma^2)``, ``r2_ub`` majorises
    ``log2(C/d^2 + sigma^2)`` (``+inf`` where the affine model of ``d^2`` is not
    positive) and ``inv_crb_lb`` minorises ``A / d_T^2``.
    """
    q = np.asarray(traj, float)
    d2u, d2t = _sq_dists(scenario, q)
    s2 = lin.noise
    bc = lin.b + lin.c
    r1_0 = np.log2(bc / lin.d2_u + s2)
    grad = -bc / lin.d2_u**2 / (bc / lin.d2_u + s2) / LN2
    diff0 = lin.traj0[:, None, :] - scenario.user_xy[None]
    aff = lin.d2_u + 2 * np.sum(diff0 * (q[:, None, :] - lin.traj0[:, None, :]), axis=-1)
    with np.errstate(divide="ignore"):
        inv_d2 = np.where(lin.c > 0, 1.0 / np.where(aff > 0, aff, 1.0), 0.0)
    r2 = np.log2(lin.c * inv_d2 + s2)
    r2 = np.where((lin.c > 0) & (aff <= 0), np.inf, r2)
    return {"r1_lb": r1_0 + grad * (d2u - lin.d2_u), "r2_ub": r2,
            "inv_crb_lb": lin.a_coef * (2 / lin.d2_t - d2t / lin.d2_t**2)}


def surrogate_objective(scenario: Scenario, lin: TrajectoryLinearization, traj) -> float:
    """Value of the convex minorant at ``traj`` (slacks at their optimum).

    Returns ``-inf`` where the log-affine restriction is violated.
    """
    t = surrogate_terms(scenario, lin, traj)
    total = lin.xi_s * t["inv_crb_lb"].sum()
    if lin.xi_c > 0:  # avoids 0 * inf where the log-affine restriction fails
        total += lin.xi_c * (t["r1_lb"] - t["r2_ub"]).sum()
    return float(total)


@dataclass
class P51:
    prog: ConicProgram
    start: np.ndarray
    q_blocks: list
    scale: float


def build_p51(scenario: Scenario, lin: TrajectoryLinearization, eps: float = 1e-3) -> P51:
    """Convex waypoint program about ``lin.traj0`` (endpoints held fixed)."""
    L = scenario.altitude
    n_slots = scenario.slots
    q0 = lin.traj0 / L
    users = scenario.user_xy / L
    tgt = scenario.target_xy / L
    h2n = 1.0  # (H / L)^2
    vmax2 = (scenario.step_limit / L) ** 2
    s2 = lin.noise

    line = straight_line(scenario) / L
    qs = (1 - eps) * q0 + eps * line

    prog = ConicProgram("max")
    qb = [None] + [prog.vector(f"q{n}", 2) for n in range(1, n_slots - 1)] + [None]
    start = {f"q{n}": qs[n] for n in range(1, n_slots - 1)}
    const = 0.0

    def norm_sq_slack(name, n, centre):
        """slack >= ||q_n - centre||^2; returns the slack index."""
        sb = prog.scalar(name)
        idx = np.concatenate([qb[n].idx, [sb[0]]])
        p = np.diag([2.0, 2.0, 0.0])
        prog.add_quadratic(idx, p, np.concatenate([-2 * centre, [-1.0]]), float(centre @ centre))
        v = float(np.sum((qs[n] - centre) ** 2))
        start[name] = [v + 1e-4 * (1 + v)]
        return sb[0]

    # kinematics
    for n in range(1, n_slots):
        a, b = qb[n - 1], qb[n]
        if a is None and b is None:
            continue
        if a is None or b is None:
            blk, fixed = (b, q0[0]) if a is None else (a, q0[-1])
            prog.add_quadratic(blk.idx, 2 * np.eye(2), -2 * fixed, float(fixed @ fixed) - vmax2)
        else:
            p = 2 * np.block([[np.eye(2), -np.eye(2)], [-np.eye(2), np.eye(2)]])
            prog.add_quadratic(np.concatenate([a.idx, b.idx]), p, np.zeros(4), -vmax2)

    for n in range(1, n_slots - 1):
        d2u0 = lin.d2_u[n]
        if lin.xi_c > 0:
            for m in range(users.shape[0]):
                bc = lin.b[n, m] + lin.c[n, m]
                r1_0 = np.log2(bc / d2u0[m] + s2)
                grad = -bc / d2u0[m] ** 2 / (bc / d2u0[m] + s2) / LN2
                # R1 >= r1_0 + grad (d^2 - d0^2), d^2 = L^2 (s + 1)
                sidx = norm_sq_slack(f"s{n}_{m}", n, users[m])
                prog.add_objective([sidx], [lin.xi_c * grad * L**2])
                const += lin.xi_c * (r1_0 + grad * (L**2 * h2n - d2u0[m]))
                if lin.c[n, m] > 0:
                    cn = lin.c[n, m] / (L**2 * s2)
                    eta = prog.scalar(f"eta{n}_{m}")
                    r = prog.scalar(f"r{n}_{m}")
                    gvec = 2 * (q0[n] - users[m])
                    aff_c = d2u0[m] / L**2 - gvec @ q0[n]
                    prog.add_log_affine(eta[0], qb[n].idx, gvec, aff_c)
                    prog.add_log_exp(r[0], eta[0], cn, 1.0)
                    prog.add_objective([r[0]], [-lin.xi_c / LN2])
                    const -= lin.xi_c * np.log2(s2)
                    aff = gvec @ qs[n] + aff_c
                    e0 = -np.log(aff) + 1e-4
                    start[f"eta{n}_{m}"] = [e0]
                    start[f"r{n}_{m}"] = [np.log(cn * np.exp(e0) + 1.0) + 1e-4]
                else:
                    const -= lin.xi_c * np.log2(s2)
        if lin.xi_s > 0 and lin.a_coef[n] > 0:
            d2t0 = lin.d2_t[n]
            tidx = norm_sq_slack(f"st{n}", n, tgt)
            prog.add_objective([tidx], [-lin.xi_s * lin.a_coef[n] * L**2 / d2t0**2])
            const += lin.xi_s * lin.a_coef[n] * (2 / d2t0 - L**2 * h2n / d2t0**2)
    # endpoint slots are constants of the program
    for n in (0, n_slots - 1):
        const += _endpoint_value(scenario, lin, n)
    prog.add_objective([], [], const)
    return P51(prog=prog, start=prog.pack(start), q_blocks=qb, scale=L)


def _endpoint_value(scenario, lin, n) -> float:
    rate = np.log2(1 + (lin.b[n] / lin.d2_u[n]) / (lin.c[n] / lin.d2_u[n] + lin.noise))
    return float(lin.xi_c * rate.sum() + lin.xi_s * lin.a_coef[n] / lin.d2_t[n])


def solve_p51(scenario: Scenario, lin: TrajectoryLinearization, **solver_kw):
    """Returns ``(trajectory (N, 2), SolverReport)``."""
    reach = (scenario.slots - 1) * scenario.step_limit
    if np.linalg.norm(scenario.end_xy - scenario.start_xy) >= reach * (1 - 1e-12):
        return lin.traj0.copy(), None
    p = build_p51(scenario, lin)
    sol, rep = solve(p.prog, p.start, **solver_kw)
    if rep.status not in ("optimal", "max-iters"):
        raise RuntimeError(f"trajectory program failed: {rep.status} {rep.message}")
    q = lin.traj0.copy()
    for n in range(1, scenario.slots - 1):
        q[n] = sol[f"q{n}"] * p.scale
    q[0], q[-1] = scenario.start_xy, scenario.end_xy
    return q, rep
