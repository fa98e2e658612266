from types import SimpleNamespace

import numpy as np
import pytest

from faisac.ao import initialize
from faisac.beamforming import (SlotModel, exact_slot_objective, extract_rank_one, fp_surrogate,
                                fp_update, mrt_initial, rank_one_vectors, slot_model,
                                slot_powers, solve_p22, surrogate_objective)
from faisac.metrics import BeamformingSolution, mission_geometry
from faisac.scenario import builtin_scenario


@pytest.fixture(scope="module")
def desk():
    return builtin_scenario("desk")


@pytest.fixture(scope="module")
def models(desk):
    st = initialize(desk)
    g = mission_geometry(desk, st.traj, st.tx)
    return [slot_model(desk, g, n, st.rx[desk.interval_of(n + 1) - 1]) for n in range(desk.slots)]


def test_fp_update_examples():
    om, vp = fp_update(2.5, 2.5)
    assert om == pytest.approx(1.0) and vp == pytest.approx(1 / np.sqrt(5.0))
    om, vp = fp_update(3.0, 1.0)
    assert om == pytest.approx(3.0) and vp == pytest.approx(np.sqrt(3) / 2)
    om, vp = fp_update(0.0, 1.0)
    assert om == 0.0 and vp == 0.0


def test_fp_surrogate_is_tight_lower_bound():
    rng = np.random.default_rng(0)
    for _ in range(200):
        e, f = 10 ** rng.uniform(-3, 3, 2)
        rate = np.log2(1 + e / f)
        om, vp = fp_update(e, f)
        assert fp_surrogate(e, f, om, vp) == pytest.approx(rate, rel=1e-10, abs=1e-14)
        om2, vp2 = om * rng.uniform(0.1, 3), vp * rng.uniform(0.1, 3)
        assert fp_surrogate(e, f, om2, vp2) <= rate + 1e-12


def test_zero_power_budget():
    model = SlotModel(np.ones((2, 3), complex), np.ones(2), np.ones(2), np.ones(3, complex), 1.0)
    sol, rep = solve_p22(model, np.zeros(2), np.zeros(2), SimpleNamespace(pmax=0.0))
    assert rep.status == "optimal"
    assert not sol.w_mats.any() and not sol.r0.any()


def test_single_user_los_gives_mrt(desk):
    sc = desk.with_changes(xi_c=1.0)
    rng = np.random.default_rng(1)
    h = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    model = SlotModel(h[None], np.array([2e-11]), np.array([0.0]), np.ones(4, complex), 0.0)
    # start away from the answer: random direction at half power
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    w0 = 0.5 * sc.pmax * np.outer(v, v.conj()) / np.vdot(v, v).real
    sol = BeamformingSolution(w0[None], np.zeros((4, 4), complex))
    for _ in range(200):
        om, vp = fp_update(*slot_powers(model, sol.w_mats, sol.r0, sc.noise_user))
        new, rep = solve_p22(model, om, vp, sc)
        assert rep.status == "optimal"
        done = np.linalg.norm(new.w_mats - sol.w_mats) <= 1e-9 * sc.pmax
        sol = new
        if done:
            break
    mrt = sc.pmax * np.outer(h, h.conj()) / 4
    assert np.linalg.norm(sol.w_mats[0] - mrt) <= 1e-4 * np.linalg.norm(mrt)


def test_sensing_only_concentrates_power(desk, models):
    sc = desk.with_changes(xi_c=0.0)
    m = models[4]
    sol, rep = solve_p22(m, np.zeros(3), np.zeros(3), sc)
    rx = sol.w_mats.sum(axis=0) + sol.r0
    gain = np.real(m.a.conj() @ rx @ m.a)
    assert gain == pytest.approx(sc.pmax * 4, rel=1e-6)


def test_fp_round_ascends_and_is_tight(desk, models):
    for n, m in enumerate(models):
        old = mrt_initial(m, desk.pmax)
        before = exact_slot_objective(m, old.w_mats, old.r0, desk)
        om, vp = fp_update(*slot_powers(m, old.w_mats, old.r0, desk.noise_user))
        assert surrogate_objective(m, old.w_mats, old.r0, om, vp, desk) == \
            pytest.approx(before, rel=1e-10)
        new, rep = solve_p22(m, om, vp, desk)
        assert rep.status == "optimal"
        s_new = surrogate_objective(m, new.w_mats, new.r0, om, vp, desk)
        assert s_new >= before - 1e-6 * max(1, abs(before))
        after = exact_slot_objective(m, new.w_mats, new.r0, desk)
        assert after >= s_new - 1e-9
        om2, vp2 = fp_update(*slot_powers(m, new.w_mats, new.r0, desk.noise_user))
        assert surrogate_objective(m, new.w_mats, new.r0, om2, vp2, desk) == \
            pytest.approx(after, abs=1e-6)
        assert new.total_power() <= desk.pmax + 1e-8
        assert new.violations(desk.pmax) == []


def test_extract_rank_one():
    rng = np.random.default_rng(2)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    r = extract_rank_one(np.outer(v, v.conj()))
    assert r.ratio == pytest.approx(1.0) and not r.fallback
    phase = np.vdot(r.vec, v) / abs(np.vdot(r.vec, v))
    np.testing.assert_allclose(r.vec * phase, v, atol=1e-12)
    r = extract_rank_one(np.eye(4))
    assert r.ratio == pytest.approx(0.25) and r.fallback
    assert np.linalg.norm(r.vec) ** 2 == pytest.approx(4.0)


def test_rank_one_vectors(models, desk):
    sol = mrt_initial(models[0], desk.pmax)
    vecs = rank_one_vectors(sol)
    np.testing.assert_allclose(np.einsum("mi,mj->mij", vecs, vecs.conj()), sol.w_mats, atol=1e-15)
    sol.w_mats[1] = sol.w_mats[1] + 0.1 * np.eye(4)
    assert rank_one_vectors(sol) is None
