import numpy as np
import pytest

from faisac.ao import initialize
from faisac.metrics import evaluate
from faisac.scenario import builtin_scenario
from faisac.trajectory import (frozen_objective, linearize, solve_p51, surrogate_objective,
                               surrogate_terms, trajectory_violations)


@pytest.fixture(scope="module")
def desk():
    sc = builtin_scenario("desk")
    return sc, initialize(sc)


def test_zero_beamforming_gives_zero_constants(desk):
    sc, st = desk
    lin = linearize(sc, st.traj, st.tx, st.rx, np.zeros_like(st.w_mats), np.zeros_like(st.r0))
    assert not lin.b.any() and not lin.c.any() and not lin.a_coef.any()
    t = surrogate_terms(sc, lin, st.traj + 5.0)
    np.testing.assert_allclose(t["r1_lb"] - t["r2_ub"], 0.0, atol=1e-12)


def test_interference_free_user(desk):
    sc, st = desk
    w = np.zeros_like(st.w_mats)
    w[:, 0] = st.w_mats[:, 0]
    lin = linearize(sc, st.traj, st.tx, st.rx, w, np.zeros_like(st.r0))
    assert not lin.c[:, 0].any() and lin.b[:, 0].min() > 0
    t = surrogate_terms(sc, lin, st.traj)
    np.testing.assert_allclose(t["r2_ub"][:, 0], np.log2(sc.noise_user), rtol=1e-14)


def test_freezing_is_tangent(desk):
    sc, st = desk
    lin = linearize(sc, st.traj, st.tx, st.rx, st.w_mats, st.r0)
    exact = evaluate(sc, st.traj, st.tx, st.rx, st.w_mats, st.r0).objective
    assert frozen_objective(sc, lin, st.traj) == pytest.approx(exact, rel=1e-9)
    assert surrogate_objective(sc, lin, st.traj) == pytest.approx(exact, rel=1e-9)
    assert np.all(lin.a_coef >= 0) and np.all(np.isfinite(lin.b)) and np.all(lin.c >= 0)


def test_p51_ascent_and_feasibility(desk):
    sc, st = desk
    lin = linearize(sc, st.traj, st.tx, st.rx, st.w_mats, st.r0)
    old = frozen_objective(sc, lin, st.traj)
    q, rep = solve_p51(sc, lin)
    assert rep.status == "optimal"
    assert rep.objective >= old - 1e-6
    assert surrogate_objective(sc, lin, q) == pytest.approx(rep.objective, rel=1e-6)
    assert frozen_objective(sc, lin, q) >= old - 1e-6
    assert trajectory_violations(sc, q) == []
    np.testing.assert_array_equal(q[0], sc.start_xy)
    np.testing.assert_array_equal(q[-1], sc.end_xy)


def test_sensing_only_single_waypoint_moves_toward_target():
    # three slots: only the middle waypoint is free, inside the lens of two speed discs
    sc = builtin_scenario("desk").with_changes(slots=3, intervals=1, vmax=25.0, xi_c=0.0)
    st = initialize(sc)
    lin = linearize(sc, st.traj, st.tx, st.rx, st.w_mats, st.r0)
    q, rep = solve_p51(sc, lin)
    r = sc.step_limit
    xs, ys = np.meshgrid(np.arange(0, 801, 1.0), np.arange(0, 801, 1.0))
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    ok = ((np.linalg.norm(pts - sc.start_xy, axis=1) <= r)
          & (np.linalg.norm(pts - sc.end_xy, axis=1) <= r))
    best, best_v = None, -np.inf
    for p in pts[ok]:
        traj = np.array([sc.start_xy, p, sc.end_xy])
        v = surrogate_objective(sc, lin, traj)
        if v > best_v:
            best, best_v = p, v
    assert np.linalg.norm(q[1] - best) <= 1.5
    assert surrogate_objective(sc, lin, q) >= best_v - 1e-6 * abs(best_v)
    # the lens point closest to the target is straight below the midpoint
    np.testing.assert_allclose(q[1], [400.0, 400.0 - np.sqrt(r**2 - 300.0**2)], atol=1e-2)


def test_no_slack_keeps_the_straight_line():
    sc = builtin_scenario("desk").with_changes(slots=3, intervals=1, vmax=20.0)
    st = initialize(sc)
    lin = linearize(sc, st.traj, st.tx, st.rx, st.w_mats, st.r0)
    q, rep = solve_p51(sc, lin)
    assert rep is None
    np.testing.assert_array_equal(q, st.traj)
