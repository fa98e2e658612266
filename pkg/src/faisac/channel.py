"""Geometry to channel mapping: elevation angles, Rician statistics, steering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ArrayLayout, Scenario


def elevation_angle(uav_xy, ground_xy, h: float):
    """Elevation angle (rad) from a UAV at altitude ``h`` toward ground points.

    Broadcasts over leading dimensions of ``uav_xy`` and ``ground_xy``.
    """
    diff = np.asarray(uav_xy, dtype=float) - np.asarray(ground_xy, dtype=float)
    dist = np.sqrt(np.sum(diff**2, axis=-1) + h**2)
    return np.arcsin(np.minimum(h / dist, 1.0))


def link_distance(uav_xy, ground_xy, h: float):
    diff = np.asarray(uav_xy, dtype=float) - np.asarray(ground_xy, dtype=float)
    return np.sqrt(np.sum(diff**2, axis=-1) + h**2)


def rician_factor(theta, c1: float, c2: float):
    return c1 * np.exp(c2 * np.asarray(theta, dtype=float))


def steering(coords, theta, wavelength: float) -> np.ndarray:
    """Unit-modulus response ``exp(j 2pi/lambda x_k sin(theta))``.

    ``theta`` may be an array; the antenna axis is appended last.
    """
    x = np.asarray(coords, dtype=float)
    s = np.sin(np.asarray(theta, dtype=float))[..., None]
    return np.exp(1j * (2 * np.pi / wavelength) * x * s)


def steering_derivative(coords, theta, wavelength: float) -> np.ndarray:
    """Derivative of :func:`steering` with respect to ``theta``."""
    x = np.asarray(coords, dtype=float)
    k = 2 * np.pi / wavelength
    c = np.cos(np.asarray(theta, dtype=float))[..., None]
    return 1j * k * x * c * steering(x, theta, wavelength)


def tx_steering(layout: ArrayLayout, theta, wavelength: float) -> np.ndarray:
    return steering(layout.x, theta, wavelength)


def rx_steering(layout: ArrayLayout, theta, wavelength: float) -> np.ndarray:
    return steering(layout.x, theta, wavelength)


@dataclass(frozen=True)
class ChannelStats:
    """Deterministic summary of one UAV-to-user link in one slot."""

    theta: float
    dist: float
    beta: float
    kappa: float
    zeta_los: float
    zeta_nlos: float
    hbar: np.ndarray


def channel_stats(scenario: Scenario, uav_xy, ground_xy, tx_coords) -> ChannelStats:
    """Assemble the Rician statistics of the link from ``uav_xy`` to ``ground_xy``."""
    if isinstance(tx_coords, ArrayLayout):
        tx_coords = tx_coords.x
    theta = float(elevation_angle(uav_xy, ground_xy, scenario.altitude))
    dist = float(link_distance(uav_xy, ground_xy, scenario.altitude))
    beta = scenario.h0 / dist**2
    kappa = float(rician_factor(theta, scenario.rician_c1, scenario.rician_c2))
    return ChannelStats(
        theta=theta, dist=dist, beta=beta, kappa=kappa,
        zeta_los=kappa * beta / (kappa + 1), zeta_nlos=beta / (kappa + 1),
        hbar=steering(tx_coords, theta, scenario.wavelength),
    )


def sample_channel(stats: ChannelStats, rng_seed, size: int | None = None) -> np.ndarray:
    """Draw Rician channel vectors ``sqrt(zeta_los) hbar + sqrt(zeta_nlos) g``.

    ``rng_seed`` is anything accepted by :func:`numpy.random.default_rng`
    (including a ``Generator``). With ``size`` the result has shape
    ``(size, n_tx)``.
    """
    rng = np.random.default_rng(rng_seed)
    shape = stats.hbar.shape if size is None else (size,) + stats.hbar.shape
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return np.sqrt(stats.zeta_los) * stats.hbar + np.sqrt(stats.zeta_nlos) * g
