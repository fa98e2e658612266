"""Small dense interior-point solver for the convex subproblems.

The solver handles a linear objective over real vector variables and complex
Hermitian PSD matrices (real-embedded as ``n**2`` parameters) subject to

* linear equalities and inequalities,
* convex quadratic constraints ``0.5 z'Pz + q'z + r <= 0`` (``P`` PSD),
* log-affine constraints ``s >= -ln(a'z + b)``,
* log-sum-exp constraints ``r >= ln(c exp(eta) + d)``.

It is a textbook primal barrier method: damped Newton centering with
backtracking, the barrier weight grows geometrically, and the duality gap
bound ``theta / t`` (``theta`` the barrier parameter) is used as the
stopping criterion. A phase-I problem is solved when the supplied start is
not strictly feasible. All steps are deterministic.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

OPTIMAL = "optimal"
MAX_ITERS = "max-iters"
INFEASIBLE = "infeasible"
NUMERICAL = "numerical-failure"


class SolverError(RuntimeError):
    """Raised for malformed programs or when a builder hands in a bad start."""


@lru_cache(maxsize=None)
def hermitian_basis(n: int) -> np.ndarray:
    """Real basis ``B_k`` (K, n, n) with ``X = sum_k theta_k B_k`` Hermitian."""
    mats = []
    for i in range(n):
        b = np.zeros((n, n), complex)
        b[i, i] = 1.0
        mats.append(b)
    for i in range(n):
        for j in range(i + 1, n):
            b = np.zeros((n, n), complex)
            b[i, j] = b[j, i] = 1.0
            mats.append(b)
            b = np.zeros((n, n), complex)
            b[i, j], b[j, i] = 1j, -1j
            mats.append(b)
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


@dataclass(frozen=True)
class Block:
    """A contiguous slice of the stacked real variable vector."""

    name: str
    kind: str  # "psd" or "vector"
    offset: int
    size: int
    dim: int

    @property
    def idx(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.size)

    def __getitem__(self, k) -> int:
        if self.kind != "vector":
            raise TypeError("only vector blocks support element access")
        return self.offset + range(self.size)[k]

    def trace_coef(self, c: np.ndarray) -> np.ndarray:
        """Coefficients of ``Re tr(C X)`` with respect to the block parameters."""
        basis = hermitian_basis(self.dim)
        return np.real(np.einsum("ab,kba->k", np.asarray(c, complex), basis))

    def pack(self, value) -> np.ndarray:
        if self.kind == "vector":
            return np.asarray(value, float).reshape(self.size)
        x = np.asarray(value, complex)
        iu = np.triu_indices(self.dim, 1)
        out = np.empty(self.size)
        out[: self.dim] = np.real(np.diag(x))
        out[self.dim:: 2] = np.real(x[iu])
        out[self.dim + 1:: 2] = np.imag(x[iu])
        return out

    def unpack(self, theta: np.ndarray):
        if self.kind == "vector":
            return np.array(theta, float)
        return np.einsum("k,kab->ab", theta, hermitian_basis(self.dim))


@dataclass
class SolverReport:
    status: str
    objective: float
    dual_bound: float
    iterations: int
    primal_residual: float
    dual_residual: float
    wall_time: float
    phase1_iterations: int = 0
    message: str = ""

    def to_dict(self, timing: bool = True) -> dict:
        d = {"status": self.status, "objective": self.objective,
             "dual_bound": self.dual_bound, "iterations": self.iterations,
             "phase1_iterations": self.phase1_iterations,
             "primal_residual": self.primal_residual, "dual_residual": self.dual_residual}
        if timing:
            d["wall_time"] = self.wall_time
        if self.message:
            d["message"] = self.message
        return d


@dataclass
class Assignment:
    """Solution vector with block-wise access."""

    z: np.ndarray
    blocks: dict = field(repr=False)

    def __getitem__(self, key):
        b = self.blocks[key] if isinstance(key, str) else key
        return b.unpack(self.z[b.offset:b.offset + b.size])


class ConicProgram:
    """Builder for a maximisation (or minimisation) problem.

    Variables are created with :meth:`psd` and :meth:`vector`; constraints
    reference variables by global indices (``Block.idx`` or ``block[k]``).
    """

    def __init__(self, sense: str = "max"):
        if sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        self.sense = sense
        self.blocks: dict[str, Block] = {}
        self.size = 0
        self._obj: list[tuple[np.ndarray, np.ndarray]] = []
        self.obj_const = 0.0
        self.lin_le: list[tuple[np.ndarray, np.ndarray, float]] = []
        self.lin_eq: list[tuple[np.ndarray, np.ndarray, float]] = []
        self.quads: list[tuple[np.ndarray, np.ndarray, np.ndarray, float]] = []
        self.log_affine: list[tuple[int, np.ndarray, np.ndarray, float]] = []
        self.log_exp: list[tuple[int, int, float, float]] = []

    # variables ---------------------------------------------------------
    def _add(self, name, kind, size, dim) -> Block:
        if name in self.blocks:
            raise SolverError(f"duplicate variable name {name!r}")
        b = Block(name, kind, self.size, size, dim)
        self.blocks[name] = b
        self.size += size
        return b

    def psd(self, name: str, n: int) -> Block:
        return self._add(name, "psd", n * n, n)

    def vector(self, name: str, n: int) -> Block:
        return self._add(name, "vector", n, n)

    def scalar(self, name: str) -> Block:
        return self._add(name, "vector", 1, 1)

    @property
    def psd_blocks(self) -> list[Block]:
        return [b for b in self.blocks.values() if b.kind == "psd"]

    # objective and constraints -----------------------------------------
    def add_objective(self, idx, coef, const: float = 0.0) -> None:
        self._obj.append((np.atleast_1d(np.asarray(idx, int)),
                          np.atleast_1d(np.asarray(coef, float))))
        self.obj_const += float(const)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.size)
        for idx, coef in self._obj:
            np.add.at(c, idx, coef)
        return c

    def add_le(self, idx, coef, rhs: float) -> None:
        """``coef . z[idx] <= rhs``."""
        self.lin_le.append((np.atleast_1d(np.asarray(idx, int)),
                            np.atleast_1d(np.asarray(coef, float)), float(rhs)))

    def add_eq(self, idx, coef, rhs: float) -> None:
        self.lin_eq.append((np.atleast_1d(np.asarray(idx, int)),
                            np.atleast_1d(np.asarray(coef, float)), float(rhs)))

    def add_quadratic(self, idx, p, q, r: float, tag: str = "convex") -> None:
        """Quadratic constraint over ``z[idx]``.

        ``tag="convex"``: ``0.5 z'Pz + q'z + r <= 0`` with ``P`` PSD.
        ``tag="concave"``: ``0.5 z'Pz + q'z + r >= 0`` with ``P`` NSD.
        """
        idx = np.atleast_1d(np.asarray(idx, int))
        p = np.atleast_2d(np.asarray(p, float))
        q = np.atleast_1d(np.asarray(q, float))
        p = 0.5 * (p + p.T)
        if p.shape != (idx.size, idx.size) or q.shape != (idx.size,):
            raise SolverError("quadratic constraint data do not match its indices")
        if tag == "concave":
            p, q, r = -p, -q, -r
        elif tag != "convex":
            raise SolverError(f"unknown quadratic tag {tag!r}")
        lam = np.linalg.eigvalsh(p) if p.size else np.zeros(1)
        if lam.min() < -1e-9 * max(1.0, np.abs(lam).max()):
            raise SolverError(f"quadratic form does not match its {tag} tag "
                              f"(min eigenvalue {lam.min():.3e})")
        self.quads.append((idx, p, q, float(r)))

    def add_log_affine(self, s: int, idx, coef, const: float) -> None:
        """``z[s] >= -ln(coef . z[idx] + const)``."""
        self.log_affine.append((int(s), np.atleast_1d(np.asarray(idx, int)),
                                np.atleast_1d(np.asarray(coef, float)), float(const)))

    def add_log_exp(self, r: int, eta: int, c: float, d: float) -> None:
        """``z[r] >= ln(c exp(z[eta]) + d)`` with ``c, d >= 0``, ``c + d > 0``."""
        if c < 0 or d < 0 or c + d <= 0:
            raise SolverError("log-exp constraint needs nonnegative c, d not both zero")
        self.log_exp.append((int(r), int(eta), float(c), float(d)))

    # helpers -----------------------------------------------------------
    def pack(self, values: dict) -> np.ndarray:
        z = np.zeros(self.size)
        for name, val in values.items():
            b = self.blocks[name]
            z[b.offset:b.offset + b.size] = b.pack(val)
        return z

    def objective_value(self, z: np.ndarray) -> float:
        return float(self.objective_vector() @ z + self.obj_const)

    def dump(self, path) -> None:
        """Write a JSON description of the program for offline inspection."""
        doc = {
            "sense": self.sense,
            "blocks": [vars(b) for b in self.blocks.values()],
            "objective": {"coef": self.objective_vector().tolist(), "const": self.obj_const},
            "linear_le": [[i.tolist(), c.tolist(), r] for i, c, r in self.lin_le],
            "linear_eq": [[i.tolist(), c.tolist(), r] for i, c, r in self.lin_eq],
            "quadratic": [[i.tolist(), p.tolist(), q.tolist(), r] for i, p, q, r in self.quads],
            "log_affine": [[s, i.tolist(), c.tolist(), b] for s, i, c, b in self.log_affine],
            "log_exp": [list(t) for t in self.log_exp],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)


# ---------------------------------------------------------------------------
# barrier machinery


def _log_cexp(c: float, eta: float, d: float):
    """``ln(c e^eta + d)`` and its derivative in ``eta``, without overflow."""
    a = np.log(c) + eta if c > 0 else -np.inf
    b = np.log(d) if d > 0 else -np.inf
    lse = np.logaddexp(a, b)
    return lse, float(np.exp(a - lse))


class _Barrier:
    """Log barrier of all inequality constraints.

    With ``phase1`` the variable vector carries one extra trailing entry
    ``s`` that is added to every shiftable slack (``X + sI`` for PSD blocks).
    """

    def __init__(self, prog: ConicProgram, phase1: bool, centre=None):
        self.prog = prog
        self.phase1 = phase1
        # phase I also keeps z inside a large ball about the start: without it
        # the barrier is unbounded below whenever the feasible set is
        self.centre = None if centre is None else np.asarray(centre, float)
        if self.centre is not None:
            self.radius2 = (1e3 * max(1.0, float(np.abs(self.centre).max()))) ** 2 \
                * max(1, self.centre.size)
        n = prog.size + (1 if phase1 else 0)
        self.n = n
        rows = []
        h = []
        for idx, coef, rhs in prog.lin_le:
            row = np.zeros(n)
            np.add.at(row, idx, coef)
            if phase1:
                row[-1] = -1.0
            rows.append(row)
            h.append(rhs)
        self.G = np.array(rows).reshape(-1, n)
        self.h = np.array(h, float)
        self.psd = prog.psd_blocks
        self.theta = (len(prog.lin_le) + len(prog.quads) + len(prog.log_exp)
                      + 2 * len(prog.log_affine) + sum(b.dim for b in self.psd))
        if phase1:
            self.theta -= len(prog.log_affine)  # hard-domain terms are not shifted
        if self.centre is not None:
            self.theta += 1

    def slacks(self, z: np.ndarray) -> dict:
        """Smallest slack of each constraint family (for diagnostics/phase I)."""
        prog = self.prog
        out = {}
        if len(self.h):
            out["linear"] = float(np.min(self.h - self.G[:, :prog.size] @ z[:prog.size]))
        for k, (idx, p, q, r) in enumerate(prog.quads):
            zi = z[idx]
            out[f"quad{k}"] = -(0.5 * zi @ p @ zi + q @ zi + r)
        for k, (s, idx, coef, const) in enumerate(prog.log_affine):
            u = coef @ z[idx] + const
            out[f"logaff_dom{k}"] = u
            if u > 0:
                out[f"logaff{k}"] = z[s] + np.log(u)
        for k, (r, eta, c, d) in enumerate(prog.log_exp):
            out[f"logexp{k}"] = z[r] - _log_cexp(c, z[eta], d)[0]
        for b in self.psd:
            x = b.unpack(z[b.offset:b.offset + b.size])
            out[b.name] = float(np.linalg.eigvalsh(x).min())
        return out

    def value(self, z: np.ndarray) -> float:
        """Barrier value, ``inf`` outside the domain."""
        prog = self.prog
        s = z[-1] if self.phase1 else 0.0
        total = 0.0
        if self.centre is not None:
            dz = z[:prog.size] - self.centre
            g = self.radius2 - dz @ dz
            if g <= 0:
                return np.inf
            total -= np.log(g)
        if len(self.h):
            sl = self.h - self.G @ z
            if np.any(sl <= 0):
                return np.inf
            total -= np.sum(np.log(sl))
        for idx, p, q, r in prog.quads:
            zi = z[idx]
            g = -(0.5 * zi @ p @ zi + q @ zi + r) + s
            if g <= 0:
                return np.inf
            total -= np.log(g)
        for si, idx, coef, const in prog.log_affine:
            u = coef @ z[idx] + const
            if u <= 0:
                return np.inf
            v = z[si] + np.log(u) + s
            if v <= 0:
                return np.inf
            total -= np.log(v) + (0.0 if self.phase1 else np.log(u))
        for r, eta, c, d in prog.log_exp:
            v = z[r] - _log_cexp(c, z[eta], d)[0] + s
            if not v > 0:
                return np.inf
            total -= np.log(v)
        for b in self.psd:
            x = b.unpack(z[b.offset:b.offset + b.size])
            if self.phase1:
                x = x + s * np.eye(b.dim)
            try:
                chol = np.linalg.cholesky(x)
            except np.linalg.LinAlgError:
                return np.inf
            total -= 2 * np.sum(np.log(np.real(np.diag(chol))))
        return float(total)

    def derivatives(self, z: np.ndarray):
        """Gradient and Hessian of the barrier at an interior point."""
        prog = self.prog
        n = self.n
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        s = z[-1] if self.phase1 else 0.0
        sidx = n - 1

        def scalar_term(idx, g, dg, d2g):
            # barrier -log(g + s) with g concave; idx/dg local, d2g local Hessian
            if self.phase1:
                idx = np.append(idx, sidx)
                dg = np.append(dg, 1.0)
                if d2g is not None:
                    d2g = np.pad(d2g, ((0, 1), (0, 1)))
            v = g + s
            grad[idx] -= dg / v
            h = np.outer(dg, dg) / v**2
            if d2g is not None:
                h -= d2g / v
            hess[np.ix_(idx, idx)] += h

        if self.centre is not None:
            m = prog.size
            dz = z[:m] - self.centre
            g = self.radius2 - dz @ dz
            grad[:m] += 2 * dz / g
            hess[:m, :m] += 2 * np.eye(m) / g + 4 * np.outer(dz, dz) / g**2
        if len(self.h):
            sl = self.h - self.G @ z
            inv = 1.0 / sl
            grad += self.G.T @ inv
            hess += (self.G * inv[:, None] ** 2).T @ self.G
        for idx, p, q, r in prog.quads:
            zi = z[idx]
            g = -(0.5 * zi @ p @ zi + q @ zi + r)
            scalar_term(idx, g, -(p @ zi + q), -p)
        for si, idx, coef, const in prog.log_affine:
            u = coef @ z[idx] + const
            full = np.append(si, idx)
            dv = np.append(1.0, coef / u)
            d2v = np.zeros((full.size, full.size))
            d2v[1:, 1:] = -np.outer(coef, coef) / u**2
            # merge duplicate indices (s may appear inside idx)
            uniq, inv_map = np.unique(full, return_inverse=True)
            dvu = np.zeros(uniq.size)
            np.add.at(dvu, inv_map, dv)
            d2u = np.zeros((uniq.size, uniq.size))
            np.add.at(d2u, (inv_map[:, None], inv_map[None, :]), d2v)
            scalar_term(uniq, z[si] + np.log(u), dvu, d2u)
            if not self.phase1:
                grad[idx] -= coef / u
                hess[np.ix_(idx, idx)] += np.outer(coef, coef) / u**2
        for r, eta, c, d in prog.log_exp:
            lse, pr = _log_cexp(c, z[eta], d)
            g = z[r] - lse
            idx = np.array([r, eta])
            scalar_term(idx, g, np.array([1.0, -pr]),
                        np.array([[0.0, 0.0], [0.0, -pr * (1 - pr)]]))
        for b in self.psd:
            basis = hermitian_basis(b.dim)
            x = b.unpack(z[b.offset:b.offset + b.size])
            if self.phase1:
                x = x + s * np.eye(b.dim)
            y = np.linalg.inv(x)
            y = 0.5 * (y + y.conj().T)
            sl = slice(b.offset, b.offset + b.size)
            grad[sl] -= np.real(np.einsum("ab,kba->k", y, basis))
            yb = np.einsum("ab,kbc->kac", y, basis)  # Y B_k
            hk = np.real(np.einsum("kab,lba->kl", yb, yb))
            hess[sl, sl] += hk
            if self.phase1:
                y2 = y @ y
                grad[sidx] -= np.real(np.trace(y))
                cross = np.real(np.einsum("ab,kba->k", y2, basis))
                hess[sl, sidx] += cross
                hess[sidx, sl] += cross
                hess[sidx, sidx] += np.real(np.sum(y * y.T))
        return grad, hess


def _newton_direction(hess, grad, basis):
    if basis is not None:
        hess = basis.T @ hess @ basis
        grad = basis.T @ grad
    d = np.sqrt(np.maximum(np.abs(np.diag(hess)), 1e-300))
    hs = hess / d[:, None] / d[None, :]
    gs = grad / d
    try:
        step = -np.linalg.solve(hs + 1e-14 * np.eye(len(gs)), gs)
    except np.linalg.LinAlgError:
        step = -np.linalg.lstsq(hs, gs, rcond=None)[0]
    step /= d
    dec2 = float(-(grad @ step))
    if basis is not None:
        step = basis @ step
    return step, dec2


def _initial_t(bar: _Barrier, c: np.ndarray, z: np.ndarray, basis) -> float:
    """Barrier weight whose central-path point is closest to ``z`` (Hessian norm)."""
    f0 = float(c @ z)
    fallback = bar.theta / max(1.0, abs(f0))
    grad, hess = bar.derivatives(z)
    if basis is not None:
        hess, grad, cc = basis.T @ hess @ basis, basis.T @ grad, basis.T @ c
    else:
        cc = c
    try:
        hc = np.linalg.solve(hess + 1e-14 * np.trace(hess) * np.eye(len(cc)), cc)
    except np.linalg.LinAlgError:
        return fallback
    denom = float(cc @ hc)
    if not np.isfinite(denom) or denom <= 0:
        return fallback
    t = -float(grad @ hc) / denom
    if not np.isfinite(t) or t <= 0:
        return fallback
    return float(np.clip(t, 1e-6 * fallback, fallback))


def _barrier_method(bar: _Barrier, c: np.ndarray, z: np.ndarray, basis, tol, max_iters,
                    t0=None, stop=None, mu=30.0, stall_tol=1e-5):
    """Minimise ``c.z`` over the barrier domain. Returns (z, t, iters, status, dec2).

    ``OPTIMAL`` is only reported for a central point, since the ``theta / t``
    gap bound assumes one. When centering stalls in floating point, the last
    central point is returned and counts as optimal if its gap meets
    ``stall_tol``.
    """
    t = t0 if t0 is not None else _initial_t(bar, c, z, basis)
    iters = 0
    dec2 = np.inf
    last = None  # (z, t, dec2) of the last central point

    def total(zz):
        return t * float(c @ zz) + bar.value(zz)

    def fallback(status):
        if last is None:
            return z, t, iters, status, dec2
        zc, tc, dc = last
        ok = bar.theta / tc <= stall_tol * max(1.0, abs(float(c @ zc)))
        return zc, tc, iters, OPTIMAL if ok else status, dc

    while True:
        centred = False
        slow = 0
        for _ in range(100):
            grad, hess = bar.derivatives(z)
            grad = grad + t * c
            step, dec2 = _newton_direction(hess, grad, basis)
            iters += 1
            if not np.all(np.isfinite(step)):
                return fallback(NUMERICAL)
            if dec2 / 2 <= 1e-10:
                centred = True
                break
            f_cur = total(z)
            alpha = 1.0
            while True:
                f_new = total(z + alpha * step)
                if np.isfinite(f_new) and f_new <= f_cur - 0.01 * alpha * dec2:
                    break
                alpha *= 0.5
                if alpha < 1e-14:
                    break
            if alpha < 1e-14:
                centred = dec2 < 1e-6 * max(1.0, abs(f_cur))
                if not centred:
                    return fallback(NUMERICAL)
                break
            z = z + alpha * step
            # progress below floating-point resolution counts as a stall
            slow = slow + 1 if f_cur - f_new <= 1e-13 * max(1.0, abs(f_cur)) else 0
            if slow >= 5:
                centred = dec2 < 1e-6 * max(1.0, abs(f_cur))
                if not centred:
                    return fallback(NUMERICAL)
                break
            if stop is not None and stop(z):
                return z, t, iters, OPTIMAL, dec2
            if iters >= max_iters:
                return fallback(MAX_ITERS)
        if not centred:
            if iters >= max_iters:
                return fallback(MAX_ITERS)
            continue
        last = (z.copy(), t, dec2)
        if bar.theta / t <= tol * max(1.0, abs(float(c @ z))):
            return z, t, iters, OPTIMAL, dec2
        if iters >= max_iters:
            return fallback(MAX_ITERS)
        t *= mu


def solve(prog: ConicProgram, start=None, tol: float = 1e-7, feas_tol: float = 1e-8,
          max_iters: int = 200):
    """Solve ``prog`` from ``start`` (a packed vector or a dict of block values).

    Returns ``(Assignment, SolverReport)``. ``tol`` is the relative duality-gap
    tolerance; iterations count Newton steps over both phases.
    """
    t_start = time.perf_counter()
    n = prog.size
    sign = -1.0 if prog.sense == "max" else 1.0
    c = sign * prog.objective_vector()

    if start is None:
        z = np.zeros(n)
        for b in prog.psd_blocks:
            z[b.offset:b.offset + b.dim] = 1.0
    elif isinstance(start, dict):
        z = prog.pack(start)
    else:
        z = np.array(start, float)

    basis = None
    p_res = 0.0
    if prog.lin_eq:
        a = np.zeros((len(prog.lin_eq), n))
        rhs = np.zeros(len(prog.lin_eq))
        for k, (idx, coef, r) in enumerate(prog.lin_eq):
            np.add.at(a[k], idx, coef)
            rhs[k] = r
        u, sv, vt = np.linalg.svd(a)
        rank = int(np.sum(sv > 1e-12 * max(sv.max(), 1e-300)))
        z = z - np.linalg.pinv(a) @ (a @ z - rhs)
        basis = vt[rank:].T
        p_res = float(np.max(np.abs(a @ z - rhs)))
        if p_res > feas_tol * max(1.0, np.abs(rhs).max()):
            return (Assignment(z, prog.blocks),
                    SolverReport(INFEASIBLE, np.nan, np.nan, 0, p_res, np.nan,
                                 time.perf_counter() - t_start,
                                 message="inconsistent equality constraints"))

    bar = _Barrier(prog, phase1=False)
    ph1_iters = 0
    if not np.isfinite(bar.value(z)):
        bar1 = _Barrier(prog, phase1=True, centre=z)
        for k, (s, idx, coef, const) in enumerate(prog.log_affine):
            if coef @ z[idx] + const <= 0:
                raise SolverError(f"start violates the domain of log-affine constraint {k}")
        sl = bar1.slacks(np.append(z, 0.0))
        worst = min(v for k, v in sl.items() if "dom" not in k)
        s0 = max(0.0, -worst) + 1.0
        zz = np.append(z, s0)
        basis1 = None if basis is None else np.block([
            [basis, np.zeros((n, 1))], [np.zeros((1, basis.shape[1])), np.ones((1, 1))]])
        c1 = np.zeros(n + 1)
        c1[-1] = 1.0
        zz, _, ph1_iters, st, _ = _barrier_method(
            bar1, c1, zz, basis1, tol=1e-12, max_iters=max_iters,
            t0=1.0 / max(1.0, s0), stop=lambda v: v[-1] < 0 and np.isfinite(bar.value(v[:-1])))
        z = zz[:-1]
        if not np.isfinite(bar.value(z)):
            return (Assignment(z, prog.blocks),
                    SolverReport(INFEASIBLE if st != NUMERICAL else NUMERICAL, np.nan, np.nan,
                                 ph1_iters, p_res, np.nan, time.perf_counter() - t_start,
                                 ph1_iters, message=f"phase I ended with s={zz[-1]:.3e}"))

    z, t, iters, status, dec2 = _barrier_method(bar, c, z, basis, tol,
                                                max(1, max_iters - ph1_iters))
    obj = prog.objective_value(z)
    gap = bar.theta / t
    if prog.lin_eq:
        p_res = float(np.max(np.abs(a @ z - rhs)))
        if p_res > feas_tol * max(1.0, np.abs(rhs).max()) and status == OPTIMAL:
            status = NUMERICAL
    dual = obj + gap if prog.sense == "max" else obj - gap
    report = SolverReport(status, obj, dual, iters + ph1_iters, p_res, float(np.sqrt(max(dec2, 0.0))),
                          time.perf_counter() - t_start, ph1_iters)
    return Assignment(z, prog.blocks), report
