"""Performance functionals: covariance, approximate ergodic rate, CRB, beampattern.

Most routines come in two flavours: a small per-link function mirroring the
model equations (used by tests and oracles) and a vectorised evaluator over
whole trajectories used inside the optimisation loop.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelStats, elevation_angle, link_distance, rician_factor, steering
from .scenario import ArrayLayout, Scenario


class DegenerateArrayError(ValueError):
    """Receive coordinates have zero spread, so the angle is unidentifiable."""


class SingularFisherError(ValueError):
    """The Fisher information of the angle is not strictly positive."""


def hermitize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))


def is_psd(x: np.ndarray, rel_tol: float = 1e-9) -> bool:
    h = hermitize(np.asarray(x))
    lam = np.linalg.eigvalsh(h)
    return bool(lam.min() >= -rel_tol * max(np.real(np.trace(h)), 1e-300))


@dataclass
class BeamformingSolution:
    """Transmit design of one slot.

    Attributes
    ----------
    w_mats : (M, n, n) complex
        Communication covariances ``W_m``.
    r0 : (n, n) complex
        Dedicated sensing covariance.
    w_vecs : (M, n) complex or None
        Beamformers ``w_m`` when every ``W_m`` is (numerically) rank one.
    """

    w_mats: np.ndarray
    r0: np.ndarray
    w_vecs: np.ndarray | None = None

    @property
    def n_tx(self) -> int:
        return self.r0.shape[0]

    def total_power(self) -> float:
        return float(np.real(np.trace(self.w_mats, axis1=1, axis2=2)).sum()
                     + np.real(np.trace(self.r0)))

    def violations(self, pmax: float, tol: float = 1e-8) -> list[str]:
        out = []
        for k, w in enumerate(self.w_mats):
            if not is_psd(w):
                out.append(f"W_{k + 1} not PSD")
        if not is_psd(self.r0):
            out.append("R0 not PSD")
        if self.total_power() > pmax * (1 + tol) + tol:
            out.append("power budget exceeded")
        if self.w_vecs is not None:
            outer = np.einsum("mi,mj->mij", self.w_vecs, self.w_vecs.conj())
            for k, (a, b) in enumerate(zip(outer, self.w_mats)):
                if np.linalg.norm(a - b) > 1e-6 * max(np.linalg.norm(b), 1e-300):
                    out.append(f"w_{k + 1} inconsistent with W_{k + 1}")
        return out


def tx_covariance(sol: BeamformingSolution) -> np.ndarray:
    return sol.w_mats.sum(axis=0) + sol.r0


# -- communication -----------------------------------------------------------

def quad_form(v: np.ndarray, mat: np.ndarray) -> float:
    """Real part of ``v^H mat v``."""
    return float(np.real(np.conj(v) @ mat @ v))


def approx_rate(stats: ChannelStats, sol: BeamformingSolution, noise: float, m: int) -> float:
    """Closed-form approximation of the ergodic rate of user ``m`` (bit/s/Hz)."""
    def power(mat):
        return stats.zeta_los * quad_form(stats.hbar, mat) + stats.zeta_nlos * np.real(np.trace(mat))

    e = power(sol.w_mats[m])
    f = sum(power(w) for i, w in enumerate(sol.w_mats) if i != m) + power(sol.r0) + noise
    return float(np.log2(1.0 + max(e, 0.0) / f))


def signal_interference(hbar, zeta_los, zeta_nlos, w_mats, r0, noise):
    """Desired power ``E`` and interference-plus-noise ``F`` for every user.

    Shapes: ``hbar`` (..., M, n), zetas (..., M), ``w_mats`` (..., M, n, n),
    ``r0`` (..., n, n), ``noise`` scalar or (M,). Returns two (..., M) arrays.
    """
    g = np.real(np.einsum("...mi,...kij,...mj->...mk", hbar.conj(), w_mats, hbar))
    tr_w = np.real(np.trace(w_mats, axis1=-2, axis2=-1))
    p = zeta_los[..., :, None] * g + zeta_nlos[..., :, None] * tr_w[..., None, :]
    diag = np.diagonal(p, axis1=-2, axis2=-1)
    g0 = np.real(np.einsum("...mi,...ij,...mj->...m", hbar.conj(), r0, hbar))
    tr0 = np.real(np.trace(r0, axis1=-2, axis2=-1))[..., None]
    f = p.sum(axis=-1) - diag + zeta_los * g0 + zeta_nlos * tr0 + noise
    return diag, f


# -- sensing -------------------------------------------------------------------

def tss(coords) -> float:
    """Total sum of squares of coordinates about their mean."""
    y = np.asarray(coords, dtype=float)
    return float(np.sum((y - y.mean()) ** 2))


def sensing_alpha(theta_t, dist_t, scenario: Scenario):
    k = 2 * np.pi / scenario.wavelength
    return (scenario.rcs**2 * scenario.frame_len * (k * np.cos(theta_t)) ** 2
            / (2 * np.asarray(dist_t) ** 2 * scenario.noise_radar))


def _coords(layout):
    return layout.x if isinstance(layout, ArrayLayout) else np.asarray(layout, dtype=float)


def inv_crb_closed(tx_layout, rx_layout, theta_t, dist_t, sol, scenario) -> float:
    """Inverse CRB of the target elevation angle from the closed form (rad^-2)."""
    y = _coords(rx_layout)
    spread = tss(y)
    if spread <= 0.0:
        raise DegenerateArrayError("receive coordinates have zero spread")
    if np.cos(theta_t) <= 1e-15:
        return 0.0
    a = steering(_coords(tx_layout), theta_t, scenario.wavelength)
    rx = tx_covariance(sol) if isinstance(sol, BeamformingSolution) else sol
    return float(sensing_alpha(theta_t, dist_t, scenario) * quad_form(a, rx) * spread)


def fisher_trace_terms(a, a_dot, b, b_dot, rx):
    """Trace quantities entering the angle CRB for a given steering pair."""
    amat = np.outer(b, a.conj())
    adot = np.outer(b_dot, a.conj()) + np.outer(b, a_dot.conj())
    t_aa = np.real(np.trace(amat.conj().T @ amat @ rx))
    t_dd = np.real(np.trace(adot.conj().T @ adot @ rx))
    t_da = np.trace(adot.conj().T @ amat @ rx)
    return t_aa, t_dd, t_da


def crb_from_traces(t_aa, t_dd, t_da, dist_t, scenario, rel_tol=1e-12) -> float:
    den = t_dd * t_aa - abs(t_da) ** 2
    if den <= rel_tol * abs(t_dd * t_aa):
        raise SingularFisherError("Fisher information of the angle is not positive")
    return float(2 * dist_t**2 * scenario.noise_radar * t_aa
                 / (scenario.rcs**2 * scenario.frame_len * den))


def crb_trace_form(tx_layout, rx_layout, theta_t, dist_t, sol, scenario) -> float:
    """CRB (rad^2) from the trace expression with analytic steering derivatives."""
    x, y = _coords(tx_layout), _coords(rx_layout)
    lam = scenario.wavelength
    k = 2 * np.pi / lam
    a, b = steering(x, theta_t, lam), steering(y, theta_t, lam)
    a_dot = 1j * k * x * np.cos(theta_t) * a
    b_dot = 1j * k * y * np.cos(theta_t) * b
    rx = tx_covariance(sol) if isinstance(sol, BeamformingSolution) else sol
    return crb_from_traces(*fisher_trace_terms(a, a_dot, b, b_dot, rx), dist_t, scenario)


# -- beampattern -------------------------------------------------------------

def beampattern_gain(tx_layout, sol, uav_pos_3d, grid_xy, wavelength: float) -> np.ndarray:
    """Transmit beampattern ``a^H R_x a`` toward ground points ``grid_xy``."""
    uav = np.asarray(uav_pos_3d, dtype=float)
    pts = np.atleast_2d(np.asarray(grid_xy, dtype=float))
    theta = elevation_angle(uav[:2], pts, uav[2])
    a = steering(_coords(tx_layout), theta, wavelength)
    rx = tx_covariance(sol) if isinstance(sol, BeamformingSolution) else np.asarray(sol)
    gain = np.real(np.einsum("pi,ij,pj->p", a.conj(), rx, a))
    return np.maximum(gain, 0.0)


def write_beampattern_csv(path, grid_xy, gains) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_m", "y_m", "gain_linear", "gain_db"])
        for (gx, gy), g in zip(np.atleast_2d(grid_xy), gains):
            db = 10 * np.log10(g) if g > 0 else float("-inf")
            w.writerow([repr(float(gx)), repr(float(gy)), repr(float(g)), repr(float(db))])


# -- whole-mission evaluation ------------------------------------------------

@dataclass
class Geometry:
    """Frozen link geometry of a trajectory for given transmit layouts.

    Arrays are indexed by slot first; ``tx`` holds the per-slot transmit
    coordinates (N, n_tx).
    """

    theta_u: np.ndarray    # (N, M)
    dist_u: np.ndarray     # (N, M)
    zeta_los: np.ndarray   # (N, M)
    zeta_nlos: np.ndarray  # (N, M)
    hbar: np.ndarray       # (N, M, n_tx)
    theta_t: np.ndarray    # (N,)
    dist_t: np.ndarray     # (N,)
    a: np.ndarray          # (N, n_tx)

    def stats(self, n: int, m: int) -> ChannelStats:
        beta = self.zeta_los[n, m] + self.zeta_nlos[n, m]
        return ChannelStats(theta=float(self.theta_u[n, m]), dist=float(self.dist_u[n, m]),
                            beta=float(beta), kappa=float(self.zeta_los[n, m] / self.zeta_nlos[n, m])
                            if self.zeta_nlos[n, m] > 0 else float("inf"),
                            zeta_los=float(self.zeta_los[n, m]),
                            zeta_nlos=float(self.zeta_nlos[n, m]), hbar=self.hbar[n, m])


def slot_coords(scenario: Scenario, layouts: np.ndarray) -> np.ndarray:
    """Expand per-interval coordinates (I, n) to per-slot coordinates (N, n)."""
    return np.repeat(np.asarray(layouts, dtype=float), scenario.mu, axis=0)


def mission_geometry(scenario: Scenario, traj: np.ndarray, tx: np.ndarray,
                     theta_override: tuple | None = None) -> Geometry:
    """Evaluate every link of the mission.

    ``tx`` is per interval (I, n_tx). ``theta_override`` optionally supplies
    (theta_u, theta_t) used for steering vectors and Rician factors instead of
    the angles implied by ``traj`` (steering freezing).
    """
    h = scenario.altitude
    q = np.asarray(traj, dtype=float)
    users = scenario.user_xy
    dist_u = link_distance(q[:, None, :], users[None, :, :], h)
    dist_t = link_distance(q, scenario.target_xy, h)
    if theta_override is None:
        theta_u = elevation_angle(q[:, None, :], users[None, :, :], h)
        theta_t = elevation_angle(q, scenario.target_xy, h)
    else:
        theta_u, theta_t = theta_override
    kappa = rician_factor(theta_u, scenario.rician_c1, scenario.rician_c2)
    beta = scenario.h0 / dist_u**2
    x = slot_coords(scenario, tx)
    lam = scenario.wavelength
    hbar = np.exp(1j * (2 * np.pi / lam) * x[:, None, :] * np.sin(theta_u)[..., None])
    a = np.exp(1j * (2 * np.pi / lam) * x * np.sin(theta_t)[:, None])
    return Geometry(theta_u=theta_u, dist_u=dist_u, zeta_los=kappa * beta / (kappa + 1),
                    zeta_nlos=beta / (kappa + 1), hbar=hbar, theta_t=theta_t,
                    dist_t=dist_t, a=a)


@dataclass
class ObjectiveBreakdown:
    """Per-slot metrics of one mission design.

    ``objective = xi_c * sum_rate + xi_s * sensing_scale * total_inv_crb``.
    """

    rates: np.ndarray      # (N, M) bit/s/Hz
    inv_crb: np.ndarray    # (N,) rad^-2
    xi_c: float
    xi_s: float
    sensing_scale: float

    @property
    def sum_rate(self) -> float:
        return float(self.rates.sum())

    @property
    def total_inv_crb(self) -> float:
        return float(self.inv_crb.sum())

    @property
    def objective(self) -> float:
        return self.xi_c * self.sum_rate + self.xi_s * self.sensing_scale * self.total_inv_crb

    def slot_objective(self) -> np.ndarray:
        return self.xi_c * self.rates.sum(axis=1) + self.xi_s * self.sensing_scale * self.inv_crb

    def to_dict(self) -> dict:
        return {"objective": self.objective, "sum_rate": self.sum_rate,
                "total_inv_crb": self.total_inv_crb,
                "rates": self.rates.tolist(), "inv_crb": self.inv_crb.tolist()}


def evaluate(scenario: Scenario, traj, tx, rx, w_mats, r0, geometry: Geometry | None = None,
             ) -> ObjectiveBreakdown:
    """Exact weighted objective of a full design.

    Parameters
    ----------
    traj : (N, 2)
    tx, rx : (I, n_tx), (I, n_rx) per-interval coordinates (m)
    w_mats : (N, M, n, n); r0 : (N, n, n)
    geometry : optional precomputed :class:`Geometry` (must match ``traj``/``tx``)
    """
    g = geometry if geometry is not None else mission_geometry(scenario, traj, tx)
    e, f = signal_interference(g.hbar, g.zeta_los, g.zeta_nlos, w_mats, r0, scenario.noise_user)
    rates = np.log2(1.0 + np.maximum(e, 0.0) / f)
    rx_cov = w_mats.sum(axis=1) + r0
    gain = np.real(np.einsum("ni,nij,nj->n", g.a.conj(), rx_cov, g.a))
    spread = np.array([tss(y) for y in slot_coords(scenario, rx)])
    inv_crb = sensing_alpha(g.theta_t, g.dist_t, scenario) * gain * spread
    return ObjectiveBreakdown(rates=rates, inv_crb=np.asarray(inv_crb, dtype=float),
                              xi_c=scenario.xi_c, xi_s=scenario.xi_s,
                              sensing_scale=scenario.sensing_scale)
