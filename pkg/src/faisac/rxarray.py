"""Receive fluid-antenna placement maximising the coordinate spread (TSS).

The inverse CRB depends on the receive positions only through the total sum
of squares of the coordinates, which is maximised by packing the antennas at
both ends of the segment with the minimum spacing.
"""

from __future__ import annotations

import itertools

import numpy as np

from .metrics import tss
from .scenario import ArrayLayout


def _check(n_rx: int, d_min: float, d_fa: float) -> None:
    if n_rx < 1:
        raise ValueError("need at least one receive antenna")
    if (n_rx - 1) * d_min > d_fa * (1 + 1e-12):
        raise ValueError("infeasible: antennas do not fit the segment at the minimum spacing")


def split_layout(n_rx: int, j: int, d_min: float, d_fa: float) -> np.ndarray:
    """``j`` antennas packed from 0 upward, the rest packed down from ``d_fa``."""
    low = np.arange(j) * d_min
    high = d_fa - np.arange(n_rx - j)[::-1] * d_min
    return np.concatenate([low, high])


def optimal_rx_positions(n_rx: int, d_min: float, d_fa: float) -> ArrayLayout:
    """Closed-form TSS-maximising receive layout.

    For odd ``n_rx`` the two boundary splits tie; the one with fewer antennas
    at the lower end (``j = (n_rx - 1) / 2``) is returned.
    """
    _check(n_rx, d_min, d_fa)
    if n_rx == 1:
        return ArrayLayout((0.0,), "receive")
    j = n_rx // 2 if n_rx % 2 == 0 else (n_rx - 1) // 2
    return ArrayLayout(tuple(split_layout(n_rx, max(j, 1), d_min, d_fa)), "receive")


def brute_force_rx(n_rx: int, d_min: float, d_fa: float, grid_step: float | None = None
                   ) -> ArrayLayout:
    """Exhaustive TSS maximisation used as an oracle.

    Every boundary split ``j = 1 .. n_rx-1`` is evaluated, together with all
    layouts on a grid of gap vectors (each gap ``d_min + k * grid_step``)
    when the grid is small enough. Ties keep the first layout found in the
    order ``j = 1, 2, ...`` and the grid only replaces a candidate when it is
    strictly better.
    """
    _check(n_rx, d_min, d_fa)
    if n_rx == 1:
        return ArrayLayout((0.0,), "receive")
    best, best_v = None, -np.inf
    for j in range(1, n_rx):
        y = split_layout(n_rx, j, d_min, d_fa)
        v = tss(y)
        if v > best_v * (1 + 1e-12) + 1e-300 or best is None:
            best, best_v = y, v
    slack = d_fa - (n_rx - 1) * d_min
    if grid_step and slack > 0:
        levels = int(np.floor(slack / grid_step + 1e-9))
        combos = (levels + 1) ** (n_rx - 1)
        if combos <= 2_000_000:
            for extra in itertools.product(range(levels + 1), repeat=n_rx - 1):
                e = np.array(extra) * grid_step
                if e.sum() > slack + 1e-12:
                    continue
                y = np.concatenate([[0.0], np.cumsum(d_min + e)])
                v = tss(y)
                if v > best_v * (1 + 1e-12):
                    best, best_v = y, v
    return ArrayLayout(tuple(best), "receive")
