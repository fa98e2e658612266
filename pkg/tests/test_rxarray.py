import numpy as np
import pytest

from faisac.metrics import tss
from faisac.rxarray import brute_force_rx, optimal_rx_positions, split_layout
from faisac.scenario import ula

LAM = 0.0107
D_MIN, D_FA = 0.5 * LAM, 20 * LAM


def test_two_antennas_sit_at_the_ends():
    np.testing.assert_allclose(optimal_rx_positions(2, D_MIN, D_FA).x, [0.0, D_FA])


def test_four_antennas():
    np.testing.assert_allclose(optimal_rx_positions(4, D_MIN, D_FA).x,
                               np.array([0.0, 0.5, 19.5, 20.0]) * LAM, atol=1e-15)


def test_three_antennas_tie():
    y = optimal_rx_positions(3, D_MIN, D_FA).x
    np.testing.assert_allclose(y, np.array([0.0, 19.5, 20.0]) * LAM, atol=1e-15)
    partner = np.array([0.0, 0.5, 20.0]) * LAM
    assert tss(partner) == pytest.approx(tss(y), rel=1e-12)


def test_five_antennas_split_either_way():
    a, b = split_layout(5, 2, D_MIN, D_FA), split_layout(5, 3, D_MIN, D_FA)
    assert tss(a) == pytest.approx(tss(b), rel=1e-12)
    best = brute_force_rx(5, D_MIN, D_FA, grid_step=D_FA / 8)
    assert tss(best.x) == pytest.approx(tss(a), rel=1e-12)


def test_brute_force_agrees_with_closed_form():
    for n in range(2, 13):
        step = D_FA / 8 if n <= 6 else None
        closed = optimal_rx_positions(n, D_MIN, D_FA)
        assert closed.is_valid(D_MIN, D_FA)
        assert abs(tss(closed.x) - tss(brute_force_rx(n, D_MIN, D_FA, step).x)) <= \
            1e-12 * tss(closed.x)
        if n >= 3:
            assert tss(closed.x) > tss(ula(n, D_FA).x)


def test_zero_slack_gives_the_ula():
    n = 5
    d_fa = (n - 1) * D_MIN
    np.testing.assert_allclose(optimal_rx_positions(n, D_MIN, d_fa).x, ula(n, d_fa).x,
                               atol=1e-15)
    np.testing.assert_allclose(brute_force_rx(n, D_MIN, d_fa, D_MIN / 4).x, ula(n, d_fa).x,
                               atol=1e-15)


def test_infeasible_rejected():
    with pytest.raises(ValueError, match="infeasible"):
        optimal_rx_positions(50, D_MIN, D_FA)
