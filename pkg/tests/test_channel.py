import numpy as np
import pytest

from faisac.channel import (channel_stats, elevation_angle, rician_factor, rx_steering,
                            sample_channel, steering_derivative, tx_steering)
from faisac.scenario import ArrayLayout, builtin_scenario

C2 = 2 / np.pi * np.log(100.0)


@pytest.mark.parametrize("offset,expected", [(0.0, np.pi / 2), (100.0, np.pi / 4),
                                             (100.0 * np.sqrt(3), np.pi / 6)])
def test_elevation_angle(offset, expected):
    assert elevation_angle([offset, 0.0], [0.0, 0.0], 100.0) == pytest.approx(expected, abs=1e-14)


def test_elevation_angle_is_rigid_invariant():
    rng = np.random.default_rng(3)
    for _ in range(50):
        u, g = rng.uniform(-500, 500, 2), rng.uniform(-500, 500, 2)
        shift, phi = rng.uniform(-1e3, 1e3, 2), rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        ref = elevation_angle(u, g, 80.0)
        assert elevation_angle(u + shift, g + shift, 80.0) == pytest.approx(ref, abs=1e-12)
        assert elevation_angle(rot @ u, rot @ g, 80.0) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("theta,expected", [(0.0, 1.0), (np.pi / 2, 100.0), (np.pi / 4, 10.0)])
def test_rician_factor(theta, expected):
    assert rician_factor(theta, 1.0, C2) == pytest.approx(expected, rel=1e-12)


def test_steering_examples():
    lam = 0.01
    np.testing.assert_allclose(tx_steering(ArrayLayout((0.0, 0.0, 0.0)), 0.3, lam), np.ones(3))
    half = ArrayLayout((0.0, lam / 2))
    np.testing.assert_allclose(tx_steering(half, np.pi / 2, lam), [1, -1], atol=1e-12)
    np.testing.assert_allclose(tx_steering(half, np.pi / 6, lam), [1, 1j], atol=1e-12)
    rx = ArrayLayout((0.0, lam / 2), "receive")
    np.testing.assert_array_equal(rx_steering(rx, 0.7, lam), tx_steering(half, 0.7, lam))


def test_steering_norm_and_derivative():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = np.sort(rng.uniform(0, 0.2, 6))
        th = rng.uniform(0, np.pi / 2)
        a = tx_steering(ArrayLayout(tuple(x)), th, 0.0107)
        assert np.vdot(a, a).real == pytest.approx(6.0, rel=1e-14)
        h = 1e-6
        fd = (tx_steering(ArrayLayout(tuple(x)), th + h, 0.0107)
              - tx_steering(ArrayLayout(tuple(x)), th - h, 0.0107)) / (2 * h)
        np.testing.assert_allclose(steering_derivative(x, th, 0.0107), fd, rtol=1e-6, atol=1e-6)


def test_channel_stats_consistency():
    sc = builtin_scenario("desk")
    st = channel_stats(sc, [300.0, 500.0], sc.user_xy[0], np.linspace(0, sc.segment_len, 4))
    assert st.zeta_los + st.zeta_nlos == pytest.approx(st.beta, rel=1e-14)
    assert st.zeta_los == pytest.approx(st.kappa * st.beta / (st.kappa + 1), rel=1e-14)
    assert np.allclose(np.abs(st.hbar), 1.0)
    assert 0 < st.theta <= np.pi / 2 and st.dist >= sc.altitude


def test_beta_hand_value():
    sc = builtin_scenario("desk").with_changes(h0_db=-60.0)
    st = channel_stats(sc, [0.0, 0.0], [0.0, 0.0], [0.0])
    assert st.dist == pytest.approx(100.0)
    assert st.beta == pytest.approx(1e-10, rel=1e-12)


def test_kappa_limits():
    sc = builtin_scenario("desk")
    pure_nlos = channel_stats(sc.with_changes(rician_c1=0.0), [10, 20], [300, 40], [0.0, 0.01])
    assert pure_nlos.zeta_los == 0.0 and pure_nlos.zeta_nlos == pure_nlos.beta
    # kappa = c1 at theta = 0 is unreachable; kappa_zenith = 1 makes kappa = 1 everywhere
    eq = channel_stats(sc.with_changes(kappa_zenith=1.0), [10, 20], [300, 40], [0.0, 0.01])
    assert eq.kappa == pytest.approx(1.0)
    assert eq.zeta_los == pytest.approx(eq.beta / 2) and eq.zeta_nlos == pytest.approx(eq.beta / 2)


def test_sample_channel_degenerate_and_deterministic():
    sc = builtin_scenario("desk")
    st = channel_stats(sc.with_changes(kappa_zenith=1.0), [0, 0], [100, 50], [0.0, 0.005, 0.02])
    st_los = type(st)(st.theta, st.dist, st.beta, st.kappa, st.beta, 0.0, st.hbar)
    np.testing.assert_array_equal(sample_channel(st_los, 5), np.sqrt(st.beta) * st.hbar)
    np.testing.assert_array_equal(sample_channel(st, 7), sample_channel(st, 7))


def test_sample_channel_second_moments():
    sc = builtin_scenario("desk")
    st = channel_stats(sc, [200, 300], [450, 600], [0.0, 0.007, 0.02, 0.1])
    h = sample_channel(st, 11, size=100_000) / np.sqrt(st.beta)
    power = np.mean(np.abs(h) ** 2, axis=0)
    np.testing.assert_allclose(power, 1.0, rtol=0.02)
    cov = h.T @ h.conj() / len(h)
    expect = (st.zeta_los * np.outer(st.hbar, st.hbar.conj()) + st.zeta_nlos * np.eye(4)) / st.beta
    # per-entry standard deviation of the sample mean is at most about 2/sqrt(S)
    assert np.max(np.abs(cov - expect)) < 3 * 2 / np.sqrt(len(h))
