import json

import cvxpy as cp
import numpy as np
import pytest

from faisac.conic import (INFEASIBLE, OPTIMAL, ConicProgram, SolverError, hermitian_basis,
                          solve)


def _herm(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g @ g.conj().T


def test_hermitian_basis_round_trip():
    rng = np.random.default_rng(0)
    p = ConicProgram()
    blk = p.psd("X", 3)
    x = _herm(rng, 3)
    np.testing.assert_allclose(blk.unpack(blk.pack(x)), x, atol=1e-14)
    assert hermitian_basis(3).shape == (9, 3, 3)
    c = _herm(rng, 3)
    assert blk.trace_coef(c) @ blk.pack(x) == pytest.approx(np.trace(c @ x).real, rel=1e-12)


def test_trace_capacity_toy():
    n = 3
    p = ConicProgram("max")
    w = p.psd("W", n)
    eye = w.trace_coef(np.eye(n))
    p.add_objective(w.idx, eye)
    p.add_le(w.idx, eye, 1.0)
    a, rep = solve(p)
    assert rep.status == OPTIMAL
    assert rep.objective == pytest.approx(1.0, abs=1e-6)
    assert np.linalg.eigvalsh(a["W"]).min() > -1e-9


def test_projection_onto_box():
    c = np.array([2.0, -0.3, 0.4, -5.0])
    lo, hi = -1.0, 1.0
    p = ConicProgram("min")
    x = p.vector("x", 4)
    s = p.scalar("s")
    p.add_objective([s[0]], [1.0])
    # ||x - c||^2 <= s
    idx = np.r_[x.idx, s[0]]
    pm = np.zeros((5, 5))
    pm[:4, :4] = 2 * np.eye(4)
    p.add_quadratic(idx, pm, np.r_[-2 * c, -1.0], float(c @ c))
    for k in range(4):
        p.add_le([x[k]], [1.0], hi)
        p.add_le([x[k]], [-1.0], -lo)
    a, rep = solve(p)
    assert rep.status == OPTIMAL
    np.testing.assert_allclose(a["x"], np.clip(c, lo, hi), atol=1e-4)


def _random_program(rng):
    """A random small program and its cvxpy twin."""
    n = int(rng.integers(2, 5))
    p = ConicProgram("max")
    w, r = p.psd("W", n), p.psd("R", n)
    t, eta, u = p.scalar("t"), p.scalar("eta"), p.scalar("u")
    c, d, g = _herm(rng, n), _herm(rng, n), _herm(rng, n)
    aw, ar, kk = float(rng.uniform(0.05, 0.5)), float(rng.uniform(0.01, 0.3)), rng.uniform(0.2, 2)
    budget = float(rng.uniform(0.5, 2.0))
    ce, de = float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.1, 2.0))
    b0 = float(rng.uniform(0.5, 2.0))

    p.add_objective(w.idx, aw * w.trace_coef(c))
    p.add_objective(r.idx, ar * r.trace_coef(d))
    p.add_objective([t[0]], [1.0])
    p.add_objective([u[0]], [-kk])
    p.add_le(np.r_[w.idx, r.idx], np.r_[w.trace_coef(np.eye(n)), r.trace_coef(np.eye(n))], budget)
    # t^2 <= tr(C W)
    idx = np.r_[t[0], w.idx]
    pm = np.zeros((idx.size, idx.size))
    pm[0, 0] = 2.0
    p.add_quadratic(idx, pm, np.r_[0.0, -w.trace_coef(c)], 0.0)
    # eta >= -ln(tr(G R) + b0), u >= ln(ce e^eta + de)
    p.add_log_affine(eta[0], r.idx, r.trace_coef(g), b0)
    p.add_log_exp(u[0], eta[0], ce, de)

    W = cp.Variable((n, n), hermitian=True)
    R = cp.Variable((n, n), hermitian=True)
    tc, ec, uc = cp.Variable(), cp.Variable(), cp.Variable()
    tr = lambda m, x: cp.real(cp.trace(m @ x))  # noqa: E731
    cons = [W >> 0, R >> 0, tr(np.eye(n), W) + tr(np.eye(n), R) <= budget,
            cp.square(tc) <= tr(c, W), ec >= -cp.log(tr(g, R) + b0),
            uc >= cp.log_sum_exp(cp.hstack([np.log(ce) + ec, np.log(de)]))]
    prob = cp.Problem(cp.Maximize(aw * tr(c, W) + ar * tr(d, R) + tc - kk * uc), cons)
    return p, prob


def test_random_programs_match_clarabel():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        prog, ref = _random_program(rng)
        _, rep = solve(prog)
        ref.solve(solver="CLARABEL")
        assert rep.status == OPTIMAL
        rel = abs(rep.objective - ref.value) / max(1.0, abs(ref.value))
        worst = max(worst, rel)
        # weak duality for a maximisation
        assert rep.dual_bound >= rep.objective - 1e-12
        assert rep.dual_bound - rep.objective <= 1e-6 * max(1.0, abs(rep.objective))
    assert worst <= 1e-4


def test_deterministic_and_warm_start():
    rng = np.random.default_rng(7)
    prog, _ = _random_program(rng)
    a1, r1 = solve(prog)
    a2, r2 = solve(prog)
    np.testing.assert_array_equal(a1.z, a2.z)
    assert r1.objective == r2.objective
    a3, r3 = solve(prog, start=a1.z)
    assert r3.objective >= r1.objective - 1e-7 * max(1.0, abs(r1.objective))


def test_sign_tag_checked():
    p = ConicProgram()
    x = p.vector("x", 2)
    with pytest.raises(SolverError, match="tag"):
        p.add_quadratic(x.idx, -np.eye(2), np.zeros(2), 0.0, tag="convex")
    with pytest.raises(SolverError, match="tag"):
        p.add_quadratic(x.idx, np.eye(2), np.zeros(2), 0.0, tag="concave")
    p.add_quadratic(x.idx, -np.eye(2), np.zeros(2), 1.0, tag="concave")


def test_infeasible_programs_are_reported():
    p = ConicProgram()
    x = p.vector("x", 1)
    p.add_objective(x.idx, [1.0])
    p.add_eq(x.idx, [1.0], 1.0)
    p.add_eq(x.idx, [2.0], 3.0)
    _, rep = solve(p)
    assert rep.status == INFEASIBLE

    p = ConicProgram()
    x = p.vector("x", 1)
    p.add_objective(x.idx, [1.0])
    p.add_le(x.idx, [1.0], -1.0)
    p.add_le(x.idx, [-1.0], -1.0)   # x >= 1 and x <= -1
    _, rep = solve(p)
    assert rep.status == INFEASIBLE


def test_dump(tmp_path):
    rng = np.random.default_rng(3)
    prog, _ = _random_program(rng)
    prog.dump(tmp_path / "p.json")
    doc = json.loads((tmp_path / "p.json").read_text())
    assert doc["sense"] == "max"
    assert {b["name"] for b in doc["blocks"]} == {"W", "R", "t", "eta", "u"}
    assert len(doc["log_affine"]) == 1 and len(doc["log_exp"]) == 1
