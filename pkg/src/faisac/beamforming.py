"""Per-slot transmit beamforming via the fractional-programming quadratic transform.

For fixed auxiliaries the slot problem is a semidefinite program in the
covariances ``W_m`` and ``R_0``. Internally the covariances are divided by
``pmax`` and the received powers by the user noise power so that all program
data are of order one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .conic import ConicProgram, SolverReport, solve
from .metrics import BeamformingSolution, Geometry, hermitize, sensing_alpha, tss
from .scenario import Scenario

log = logging.getLogger(__name__)
LN2 = np.log(2.0)


@dataclass
class FpAuxiliaries:
    """Quadratic-transform auxiliaries, shape (M, N) each (physical units)."""

    omega: np.ndarray
    varpi: np.ndarray

    def copy(self) -> "FpAuxiliaries":
        return FpAuxiliaries(self.omega.copy(), self.varpi.copy())


def fp_update(e, f):
    """Optimal auxiliaries for signal power ``e`` and interference-plus-noise ``f``."""
    e = np.maximum(np.asarray(e, dtype=float), 0.0)
    f = np.asarray(f, dtype=float)
    omega = e / f
    varpi = np.sqrt(e * (1 + omega)) / (e + f)
    return omega, varpi


def fp_surrogate(e, f, omega, varpi):
    """Quadratic-transform rate surrogate (bit/s/Hz); tight at :func:`fp_update`."""
    e = np.maximum(np.asarray(e, dtype=float), 0.0)
    return (np.log1p(omega) - omega + 2 * varpi * np.sqrt(e * (1 + omega))
            - varpi**2 * (e + f)) / LN2


@dataclass
class SlotModel:
    """Channel data of one slot needed by the beamforming program.

    ``sense_coef`` is the inverse CRB per unit of ``a^H R_x a`` (rad^-2 W^-1).
    """

    hbar: np.ndarray       # (M, n)
    zeta_los: np.ndarray   # (M,)
    zeta_nlos: np.ndarray  # (M,)
    a: np.ndarray          # (n,)
    sense_coef: float

    @property
    def n_tx(self) -> int:
        return self.a.size


def slot_model(scenario: Scenario, geom: Geometry, n: int, rx_coords) -> SlotModel:
    coef = float(sensing_alpha(geom.theta_t[n], geom.dist_t[n], scenario) * tss(rx_coords))
    return SlotModel(hbar=geom.hbar[n], zeta_los=geom.zeta_los[n], zeta_nlos=geom.zeta_nlos[n],
                     a=geom.a[n], sense_coef=coef)


def slot_powers(model: SlotModel, w_mats, r0, noise):
    """Signal and interference-plus-noise powers (W) of every user."""
    g = np.real(np.einsum("mi,kij,mj->mk", model.hbar.conj(), w_mats, model.hbar))
    tr = np.real(np.trace(w_mats, axis1=1, axis2=2))
    p = model.zeta_los[:, None] * g + model.zeta_nlos[:, None] * tr[None, :]
    e = np.diag(p).copy()
    g0 = np.real(np.einsum("mi,ij,mj->m", model.hbar.conj(), r0, model.hbar))
    f = p.sum(axis=1) - e + model.zeta_los * g0 + model.zeta_nlos * np.real(np.trace(r0)) + noise
    return e, f


def surrogate_objective(model: SlotModel, w_mats, r0, omega, varpi, scenario: Scenario) -> float:
    """Slot objective with rates replaced by their quadratic-transform surrogate."""
    e, f = slot_powers(model, w_mats, r0, scenario.noise_user)
    rx = w_mats.sum(axis=0) + r0
    gain = float(np.real(model.a.conj() @ rx @ model.a))
    return float(scenario.xi_c * fp_surrogate(e, f, omega, varpi).sum()
                 + scenario.xi_s * scenario.sensing_scale * model.sense_coef * gain)


def exact_slot_objective(model: SlotModel, w_mats, r0, scenario: Scenario) -> float:
    e, f = slot_powers(model, w_mats, r0, scenario.noise_user)
    rx = w_mats.sum(axis=0) + r0
    gain = float(np.real(model.a.conj() @ rx @ model.a))
    return float(scenario.xi_c * np.log2(1 + e / f).sum()
                 + scenario.xi_s * scenario.sensing_scale * model.sense_coef * gain)


@dataclass
class P22:
    """A built beamforming program plus the handles needed to read it back."""

    prog: ConicProgram
    start: np.ndarray
    n_users: int
    scale: float  # pmax


def build_p22(model: SlotModel, omega, varpi, scenario: Scenario) -> P22:
    """Semidefinite program of one slot for fixed auxiliaries ``(omega, varpi)``."""
    m_users, n = model.hbar.shape
    pmax, noise = scenario.pmax, scenario.noise_user
    k = pmax / noise
    varpi_n = np.asarray(varpi, float) * np.sqrt(noise)  # auxiliaries in normalised units
    omega = np.asarray(omega, float)
    if np.any(omega < 0) or np.any(varpi_n < 0) or not np.all(np.isfinite(varpi_n)):
        raise ValueError("auxiliaries must be finite and nonnegative")

    prog = ConicProgram("max")
    ws = [prog.psd(f"W{i}", n) for i in range(m_users)]
    r0 = prog.psd("R0", n)
    eye = np.eye(n)

    # power budget on normalised covariances
    idx = np.concatenate([b.idx for b in ws + [r0]])
    coef = np.concatenate([b.trace_coef(eye) for b in ws + [r0]])
    prog.add_le(idx, coef, 1.0)

    def gain_mat(i):
        h = model.hbar[i]
        return k * (model.zeta_los[i] * np.outer(h, h.conj()) + model.zeta_nlos[i] * eye)

    xi_c = scenario.xi_c / LN2
    start_level = 1.0 / (n * (m_users + 2))
    start = {f"W{i}": start_level * eye for i in range(m_users)}
    start["R0"] = start_level * eye
    const = 0.0
    for i in range(m_users):
        g = gain_mat(i)
        const += xi_c * (np.log1p(omega[i]) - omega[i] - varpi_n[i] ** 2)
        # -varpi^2 (E + F): E + F is linear in R_x = sum W + R0
        for b in ws + [r0]:
            prog.add_objective(b.idx, -xi_c * varpi_n[i] ** 2 * b.trace_coef(g))
        if xi_c > 0 and varpi_n[i] > 0:
            t = prog.scalar(f"t{i}")
            prog.add_objective([t[0]], [xi_c * 2 * varpi_n[i] * np.sqrt(1 + omega[i])])
            qidx = np.concatenate([[t[0]], ws[i].idx])
            p = np.zeros((qidx.size, qidx.size))
            p[0, 0] = 2.0
            prog.add_quadratic(qidx, p, np.concatenate([[0.0], -ws[i].trace_coef(g)]), 0.0)
            e_start = start_level * np.real(np.trace(g))
            start[f"t{i}"] = [0.5 * np.sqrt(e_start)]
    w_s = scenario.xi_s * scenario.sensing_scale * model.sense_coef * pmax
    if w_s > 0:
        aa = np.outer(model.a, model.a.conj())
        for b in ws + [r0]:
            prog.add_objective(b.idx, w_s * b.trace_coef(aa))
    prog.add_objective([], [], const)
    return P22(prog=prog, start=prog.pack(start), n_users=m_users, scale=pmax)


def solve_p22(model: SlotModel, omega, varpi, scenario: Scenario, **solver_kw):
    """Solve the slot program; returns ``(BeamformingSolution, SolverReport)``."""
    m_users, n = model.hbar.shape
    if scenario.pmax <= 0:
        zero = BeamformingSolution(np.zeros((m_users, n, n), complex), np.zeros((n, n), complex))
        return zero, SolverReport("optimal", 0.0, 0.0, 0, 0.0, 0.0, 0.0)
    p = build_p22(model, omega, varpi, scenario)
    sol, rep = solve(p.prog, p.start, **solver_kw)
    if rep.status not in ("optimal", "max-iters"):
        raise RuntimeError(f"beamforming program failed: {rep.status} {rep.message}")
    w = np.array([hermitize(sol[f"W{i}"]) for i in range(m_users)]) * p.scale
    r0 = hermitize(sol["R0"]) * p.scale
    return BeamformingSolution(w.reshape(m_users, n, n), r0), rep


@dataclass
class RankOne:
    vec: np.ndarray
    ratio: float
    fallback: bool


def extract_rank_one(w_mat, objective=None, seed=0, samples: int = 50,
                     threshold: float = 1e-3) -> RankOne:
    """Dominant-eigenvector beamformer of a PSD matrix.

    When ``lambda_1 / tr`` falls below ``1 - threshold`` Gaussian
    randomisation is used: ``samples`` candidates drawn from CN(0, W) are
    rescaled to the power ``tr(W)`` and the one maximising ``objective``
    (default: captured energy ``w^H W w``) is returned.
    """
    w = hermitize(np.asarray(w_mat, complex))
    lam, vecs = np.linalg.eigh(w)
    tr = float(np.sum(np.maximum(lam, 0.0)))
    if tr <= 0:
        return RankOne(np.zeros(w.shape[0], complex), 1.0, False)
    ratio = float(max(lam[-1], 0.0) / tr)
    principal = np.sqrt(max(lam[-1], 0.0)) * vecs[:, -1]
    if ratio >= 1 - threshold:
        return RankOne(principal, ratio, False)
    log.info("rank-one ratio %.6f below threshold; using Gaussian randomisation", ratio)
    rng = np.random.default_rng(seed)
    half = vecs * np.sqrt(np.maximum(lam, 0.0))
    score = objective or (lambda v: float(np.real(v.conj() @ w @ v)))
    best, best_val = principal, score(principal)
    for _ in range(samples):
        g = (rng.standard_normal(w.shape[0]) + 1j * rng.standard_normal(w.shape[0])) / np.sqrt(2)
        v = half @ g
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        v *= np.sqrt(tr) / nv
        val = score(v)
        if val > best_val:
            best, best_val = v, val
    return RankOne(best, ratio, True)


def rank_one_vectors(sol: BeamformingSolution, tol: float = 1e-6):
    """Beamformers ``w_m`` if every ``W_m`` is rank one within ``tol`` (Frobenius, relative)."""
    vecs = []
    for w in sol.w_mats:
        r = extract_rank_one(w, threshold=1.0)
        nrm = np.linalg.norm(w)
        if nrm > 0 and np.linalg.norm(np.outer(r.vec, r.vec.conj()) - w) > tol * nrm:
            return None
        vecs.append(r.vec)
    return np.array(vecs)


def mrt_initial(model: SlotModel, pmax: float) -> BeamformingSolution:
    """Equal-power maximum-ratio transmission toward each user, no sensing beam."""
    m_users, n = model.hbar.shape
    w = np.array([pmax / m_users * np.outer(h, h.conj()) / n for h in model.hbar])
    vecs = np.sqrt(pmax / m_users / n) * model.hbar
    return BeamformingSolution(w.reshape(m_users, n, n), np.zeros((n, n), complex), vecs)
