"""Transmit fluid-antenna placement by successive quadratic bounding.

The received power ``hbar^H C hbar`` is a sum of cosines of the antenna
position differences. Second-order cosine bounds give global quadratic
minorants and majorants in the positions, which make the per-interval
placement problem a convex QCQP. Inside the program positions are measured
in wavelengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamforming import LN2
from .conic import ConicProgram, solve
from .metrics import sensing_alpha, tss
from .scenario import Scenario


@dataclass(frozen=True)
class QuadraticSurrogate:
    """``0.5 x'Sx + t'x + u``, a bound on ``hbar(x)^H C hbar(x)`` around ``about``."""

    s_mat: np.ndarray
    t_vec: np.ndarray
    u_scalar: float
    sense: str  # "lower" or "upper"
    about: np.ndarray

    def value(self, x) -> float:
        x = np.asarray(x, float)
        return float(0.5 * x @ self.s_mat @ x + self.t_vec @ x + self.u_scalar)


def steering_quadratic(coef_mat, theta, x, wavelength: float = 1.0) -> float:
    """Exact ``hbar^H C hbar`` for positions ``x`` toward elevation ``theta``."""
    h = np.exp(1j * 2 * np.pi / wavelength * np.asarray(x, float) * np.sin(theta))
    return float(np.real(h.conj() @ np.asarray(coef_mat) @ h))


def build_surrogate(coef_mat, theta, about, sense: str, wavelength: float = 1.0
                    ) -> QuadraticSurrogate:
    """Quadratic lower/upper bound of ``hbar^H C hbar`` tangent at ``about``.

    Positions (``about`` and later evaluations) share the unit of ``wavelength``.
    """
    if sense not in ("lower", "upper"):
        raise ValueError("sense must be 'lower' or 'upper'")
    c = np.asarray(coef_mat, complex)
    x0 = np.asarray(about, float)
    vt = 2 * np.pi / wavelength * np.sin(theta)
    mag = np.abs(c)
    ang = np.where(mag > 0, np.angle(c), 0.0)
    diff = x0[:, None] - x0[None, :]
    psi = vt * diff - ang
    sin_psi = np.sin(psi)
    lap = np.diag(mag.sum(axis=1)) - mag
    sgn = -1.0 if sense == "lower" else 1.0
    s = sgn * 2 * vt**2 * lap
    t = 2 * np.sum(mag * (-sgn * vt**2 * diff - vt * sin_psi), axis=1)
    u = float(np.sum(mag * (np.cos(psi) + vt * sin_psi * diff + sgn * 0.5 * vt**2 * diff**2)))
    return QuadraticSurrogate(s_mat=0.5 * (s + s.T), t_vec=t, u_scalar=u, sense=sense, about=x0)


def psd_sign_check(s: QuadraticSurrogate) -> bool:
    """True iff the curvature of ``s`` matches its sense tag."""
    lam = np.linalg.eigvalsh(s.s_mat)
    tol = 1e-9 * max(np.linalg.norm(s.s_mat, 2), 1e-300)
    if s.sense == "lower":
        return bool(lam.max() <= tol)
    return bool(lam.min() >= -tol)


# ---------------------------------------------------------------------------
# per-interval program


def interior_layout(n: int, d_min: float, d_fa: float) -> np.ndarray:
    """A strictly feasible layout (all spacing constraints inactive)."""
    if n == 1:
        return np.array([0.5 * d_fa])
    step = 0.5 * (d_min + d_fa / (n - 1))
    return 0.5 * d_fa + (np.arange(n) - (n - 1) / 2) * step


def spacing_rows(n: int, d_min: float, d_fa: float):
    """Rows ``(coef, rhs)`` of the spacing/segment system ``G x <= h``."""
    rows = []
    e = np.eye(n)
    rows.append((-e[0], 0.0))
    rows.append((e[-1], d_fa))
    for k in range(n - 1):
        rows.append((e[k] - e[k + 1], -d_min))
    return rows


@dataclass
class P32:
    prog: ConicProgram
    start: np.ndarray
    x_block: object
    wavelength: float
    const: float

    def objective_at(self, x_m) -> float:
        """Program objective with slacks at their optimum for positions ``x_m`` (m)."""
        return self._value(np.asarray(x_m, float) / self.wavelength)

    def _value(self, x) -> float:  # filled in by the builder
        raise NotImplementedError


def build_p32(scenario: Scenario, slots, theta_u, theta_t, dist_t, zeta_los, zeta_nlos,
              w_mats, r0s, rx_coords, omega, varpi, x_prev) -> P32:
    """Convex bound problem for the transmit positions of one interval.

    Parameters
    ----------
    slots : sequence of slot indices (for bookkeeping only)
    theta_u, zeta_los, zeta_nlos : (J, M) per-slot user data of the interval
    theta_t, dist_t : (J,) target angle and distance
    w_mats, r0s : (J, M, n, n), (J, n, n) beamforming of the interval
    rx_coords : receive coordinates (m)
    omega, varpi : (J, M) auxiliaries (physical units)
    x_prev : current transmit positions (m), the expansion point
    """
    lam = scenario.wavelength
    noise = scenario.noise_user
    n = len(x_prev)
    x0 = np.asarray(x_prev, float) / lam
    dmin, dfa = scenario.dmin_wavelengths, scenario.segment_wavelengths
    theta_u = np.asarray(theta_u, float).reshape(len(slots), -1)
    j_count, m_users = theta_u.shape
    xi_c = scenario.xi_c / LN2

    prog = ConicProgram("max")
    xb = prog.vector("x", n)
    for coef, rhs in spacing_rows(n, dmin, dfa):
        prog.add_le(xb.idx, coef, rhs)

    const = 0.0
    up_s, up_t, up_u = np.zeros((n, n)), np.zeros(n), 0.0
    lo_s, lo_t, lo_u = np.zeros((n, n)), np.zeros(n), 0.0
    sqrt_terms = []  # (weight, S, t, u) for t^2 <= E^lb
    for j in range(j_count):
        r_x = w_mats[j].sum(axis=0) + r0s[j]
        for m in range(m_users):
            vp = varpi[j, m] * np.sqrt(noise)
            om = omega[j, m]
            if xi_c == 0:
                continue
            zl, zn = zeta_los[j, m] / noise, zeta_nlos[j, m] / noise
            th = theta_u[j, m]
            const += xi_c * (np.log1p(om) - om)
            # -varpi^2 (E^ub + F^ub)
            pen = xi_c * vp**2
            if pen > 0:
                const -= pen * (zn * np.real(np.trace(r_x)) + 1.0)
                terms = [w_mats[j, i] for i in range(m_users)] + [r0s[j]]
                for cm in terms:
                    sg = build_surrogate(cm, th, x0, "upper")
                    up_s += pen * zl * sg.s_mat
                    up_t += pen * zl * sg.t_vec
                    up_u += pen * zl * sg.u_scalar
            if vp > 0:
                lo = build_surrogate(w_mats[j, m], th, x0, "lower")
                sqrt_terms.append((xi_c * 2 * vp * np.sqrt(1 + om), zl * lo.s_mat, zl * lo.t_vec,
                                   zl * lo.u_scalar + zn * np.real(np.trace(w_mats[j, m]))))
        ws = (scenario.xi_s * scenario.sensing_scale
              * sensing_alpha(theta_t[j], dist_t[j], scenario) * tss(rx_coords))
        if ws > 0:
            sg = build_surrogate(r_x, theta_t[j], x0, "lower")
            lo_s += ws * sg.s_mat
            lo_t += ws * sg.t_vec
            lo_u += ws * sg.u_scalar

    def quad(s, t, u, x):
        return 0.5 * x @ s @ x + t @ x + u

    # strictly feasible start near the expansion point
    x_int = interior_layout(n, dmin, dfa)
    eps = 1e-3
    while True:
        xs = (1 - eps) * x0 + eps * x_int
        if all(quad(s, t, u, xs) > 0 for _, s, t, u in sqrt_terms) or eps < 1e-12:
            break
        eps *= 0.1
    start = {"x": xs}

    t_blocks = []
    for k, (wt, s, t, u) in enumerate(sqrt_terms):
        tb = prog.scalar(f"t{k}")
        t_blocks.append(tb)
        prog.add_objective([tb[0]], [wt])
        idx = np.concatenate([[tb[0]], xb.idx])
        p = np.zeros((n + 1, n + 1))
        p[0, 0] = 2.0
        p[1:, 1:] = -s
        prog.add_quadratic(idx, p, np.concatenate([[0.0], -t]), -u)
        start[f"t{k}"] = [0.5 * np.sqrt(max(quad(s, t, u, xs), 0.0))]
    has_up = np.any(up_s) or np.any(up_t) or up_u != 0
    if has_up:
        ub = prog.scalar("upper")
        prog.add_objective([ub[0]], [-1.0])
        idx = np.concatenate([xb.idx, [ub[0]]])
        p = np.zeros((n + 1, n + 1))
        p[:n, :n] = up_s
        prog.add_quadratic(idx, p, np.concatenate([up_t, [-1.0]]), up_u)
        v = quad(up_s, up_t, up_u, xs)
        start["upper"] = [v + 1e-3 * max(1.0, abs(v))]
    has_lo = np.any(lo_s) or np.any(lo_t) or lo_u != 0
    if has_lo:
        lb = prog.scalar("sense")
        prog.add_objective([lb[0]], [1.0])
        idx = np.concatenate([xb.idx, [lb[0]]])
        p = np.zeros((n + 1, n + 1))
        p[:n, :n] = -lo_s
        prog.add_quadratic(idx, p, np.concatenate([-lo_t, [1.0]]), -lo_u)
        v = quad(lo_s, lo_t, lo_u, xs)
        start["sense"] = [v - 1e-3 * max(1.0, abs(v))]
    prog.add_objective([], [], const)

    out = P32(prog=prog, start=prog.pack(start), x_block=xb, wavelength=lam, const=const)

    def value(x):
        total = const
        for wt, s, t, u in sqrt_terms:
            total += wt * np.sqrt(max(quad(s, t, u, x), 0.0))
        if has_up:
            total -= quad(up_s, up_t, up_u, x)
        if has_lo:
            total += quad(lo_s, lo_t, lo_u, x)
        return float(total)

    out._value = value
    return out


def solve_p32(p: P32, x_prev, **solver_kw):
    """Solve a built program; returns ``(x_new (m), SolverReport)``.

    A layout without slack (``D_FA = (n-1) d_min``) is returned unchanged.
    """
    x_prev = np.asarray(x_prev, float)
    n = x_prev.size
    lam = p.wavelength
    rows = p.prog.lin_le
    dfa = rows[1][2]
    dmin = -rows[2][2] if n > 1 else 0.0
    if n > 1 and dfa - (n - 1) * dmin <= 1e-12 * max(dfa, 1.0):
        return x_prev.copy(), None
    sol, rep = solve(p.prog, p.start, **solver_kw)
    if rep.status not in ("optimal", "max-iters"):
        raise RuntimeError(f"transmit-position program failed: {rep.status} {rep.message}")
    x = np.clip(sol["x"], 0.0, dfa)
    return x * lam, rep
