"""World model for the UAV fluid-antenna ISAC problem.

A :class:`Scenario` is built once from a JSON document whose powers and gains
are written in dB/dBm; the linear values are derived at construction time and
stored next to the file-level quantities so that serialization round-trips
exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np


class ScenarioError(ValueError):
    """Raised when a scenario document is malformed or violates an invariant."""


def db_to_linear(v: float) -> float:
    return 10.0 ** (v / 10.0)


def dbm_to_watts(v: float) -> float:
    return 10.0 ** ((v - 30.0) / 10.0)


def _points(value: Any, name: str) -> tuple[tuple[float, float], ...]:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ScenarioError(f"{name}: expected 2-D horizontal positions")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name}: non-finite coordinate")
    return tuple((float(a), float(b)) for a, b in arr)


@dataclass(frozen=True)
class Scenario:
    """Immutable description of one mission.

    File-level fields keep the units of the scenario document; the linear
    quantities used by every numerical routine (``pmax``, ``h0``,
    ``noise_user``, ``noise_radar``, lengths in metres) are derived in
    ``__post_init__``.
    """

    users: tuple[tuple[float, float], ...]
    target: tuple[float, float]
    uav_start: tuple[float, float]
    uav_end: tuple[float, float]
    altitude: float
    mission_s: float
    slots: int
    intervals: int
    n_tx: int
    n_rx: int
    segment_wavelengths: float
    dmin_wavelengths: float
    wavelength: float
    h0_db: float
    noise_user_dbm: float
    noise_radar_dbm: float
    pmax_dbm: float
    rcs: float
    frame_len: float
    rician_c1: float = 1.0
    kappa_zenith: float = 100.0
    xi_c: float = 0.5
    vmax: float = 20.0
    sensing_scale: float = 1e-14

    # derived
    mu: int = field(init=False)
    slot_duration: float = field(init=False)
    pmax: float = field(init=False)
    h0: float = field(init=False)
    noise_user: float = field(init=False)
    noise_radar: float = field(init=False)
    segment_len: float = field(init=False)
    d_min: float = field(init=False)
    rician_c2: float = field(init=False)
    xi_s: float = field(init=False)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("users", _points(self.users, "geometry.users"))
        for name in ("target", "uav_start", "uav_end"):
            set_(name, _points(getattr(self, name), f"geometry.{name}")[0])
        for name in ("slots", "intervals", "n_tx", "n_rx"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ScenarioError(f"{name} must be an integer")
            set_(name, int(v))
        for f in fields(self):
            if f.init and isinstance(getattr(self, f.name), (int, float)):
                if not math.isfinite(getattr(self, f.name)):
                    raise ScenarioError(f"{f.name} must be finite")

        positive = ("altitude", "mission_s", "slots", "intervals", "n_tx", "n_rx",
                    "segment_wavelengths", "dmin_wavelengths", "wavelength",
                    "rcs", "frame_len", "vmax", "kappa_zenith", "sensing_scale")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ScenarioError(f"positivity: {name} must be strictly positive")
        if self.rician_c1 < 0:
            raise ScenarioError("positivity: rician.c1 must be nonnegative")
        if self.slots < 2:
            raise ScenarioError("positivity: at least two slots are required")
        if self.slots % self.intervals:
            raise ScenarioError(
                f"interval divisibility: slots={self.slots} is not a multiple of "
                f"intervals={self.intervals}")
        if not 0.0 <= self.xi_c <= 1.0:
            raise ScenarioError("weights: xi_c must lie in [0, 1]")

        set_("mu", self.slots // self.intervals)
        set_("slot_duration", self.mission_s / self.slots)
        set_("pmax", dbm_to_watts(self.pmax_dbm))
        set_("h0", db_to_linear(self.h0_db))
        set_("noise_user", dbm_to_watts(self.noise_user_dbm))
        set_("noise_radar", dbm_to_watts(self.noise_radar_dbm))
        set_("segment_len", self.segment_wavelengths * self.wavelength)
        set_("d_min", self.dmin_wavelengths * self.wavelength)
        set_("rician_c2", 2.0 / math.pi * math.log(self.kappa_zenith))
        set_("xi_s", 1.0 - self.xi_c)

        for n, name in ((self.n_tx, "transmit"), (self.n_rx, "receive")):
            if (n - 1) * self.dmin_wavelengths > self.segment_wavelengths * (1 + 1e-12):
                raise ScenarioError(
                    f"array feasibility: {n} {name} antennas do not fit the segment "
                    "at the minimum spacing")
        reach = (self.slots - 1) * self.slot_duration * self.vmax
        if np.hypot(*np.subtract(self.uav_end, self.uav_start)) > reach * (1 + 1e-12):
            raise ScenarioError(
                "trajectory feasibility: endpoints farther apart than the UAV can fly")

    # array views -------------------------------------------------------
    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def user_xy(self) -> np.ndarray:
        return np.array(self.users, dtype=float).reshape(-1, 2)

    @property
    def target_xy(self) -> np.ndarray:
        return np.array(self.target, dtype=float)

    @property
    def start_xy(self) -> np.ndarray:
        return np.array(self.uav_start, dtype=float)

    @property
    def end_xy(self) -> np.ndarray:
        return np.array(self.uav_end, dtype=float)

    @property
    def step_limit(self) -> float:
        """Largest horizontal displacement between consecutive slots (m)."""
        return self.vmax * self.slot_duration

    def interval_of(self, slot: int) -> int:
        """1-based interval index of a 1-based slot index."""
        return interval_of(slot, self.mu, self.slots)

    def interval_slots(self, interval: int) -> range:
        """0-based slot indices belonging to 0-based ``interval``."""
        return range(interval * self.mu, (interval + 1) * self.mu)

    def with_changes(self, **kw) -> "Scenario":
        """Copy with some file-level fields replaced (derived fields recomputed)."""
        return replace(self, **kw)

    # serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "geometry": {
                "users": [list(u) for u in self.users],
                "target": list(self.target),
                "uav_start": list(self.uav_start),
                "uav_end": list(self.uav_end),
                "altitude_m": self.altitude,
            },
            "time": {"mission_s": self.mission_s, "slots": self.slots,
                     "intervals": self.intervals},
            "arrays": {"n_tx": self.n_tx, "n_rx": self.n_rx,
                       "segment_wavelengths": self.segment_wavelengths,
                       "dmin_wavelengths": self.dmin_wavelengths},
            "radio": {"wavelength_m": self.wavelength, "h0_db": self.h0_db,
                      "noise_user_dbm": self.noise_user_dbm,
                      "noise_radar_dbm": self.noise_radar_dbm,
                      "pmax_dbm": self.pmax_dbm, "rcs_m2": self.rcs,
                      "frame_len": self.frame_len},
            "rician": {"c1": self.rician_c1, "kappa_zenith": self.kappa_zenith},
            "objective": {"xi_c": self.xi_c, "sensing_scale": self.sensing_scale},
            "limits": {"vmax_mps": self.vmax},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_SCHEMA = {
    "geometry": {"users": "users", "target": "target", "uav_start": "uav_start",
                 "uav_end": "uav_end", "altitude_m": "altitude"},
    "time": {"mission_s": "mission_s", "slots": "slots", "intervals": "intervals"},
    "arrays": {"n_tx": "n_tx", "n_rx": "n_rx",
               "segment_wavelengths": "segment_wavelengths",
               "dmin_wavelengths": "dmin_wavelengths"},
    "radio": {"wavelength_m": "wavelength", "h0_db": "h0_db",
              "noise_user_dbm": "noise_user_dbm", "noise_radar_dbm": "noise_radar_dbm",
              "pmax_dbm": "pmax_dbm", "rcs_m2": "rcs", "frame_len": "frame_len"},
    "rician": {"c1": "rician_c1", "kappa_zenith": "kappa_zenith"},
    "objective": {"xi_c": "xi_c", "xi_s": None, "sensing_scale": "sensing_scale"},
    "limits": {"vmax_mps": "vmax"},
}
_OPTIONAL = {"rician", "objective", "limits", "rician.c1", "rician.kappa_zenith",
             "objective.xi_c", "objective.xi_s", "objective.sensing_scale",
             "limits.vmax_mps"}


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate a parsed scenario document and build the :class:`Scenario`."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    unknown = set(doc) - set(_SCHEMA)
    if unknown:
        raise ScenarioError(f"unknown top-level keys: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    xi_s = None
    for section, keys in _SCHEMA.items():
        if section not in doc:
            if section in _OPTIONAL:
                continue
            raise ScenarioError(f"missing section '{section}'")
        body = doc[section]
        if not isinstance(body, dict):
            raise ScenarioError(f"section '{section}' must be a mapping")
        extra = set(body) - set(keys)
        if extra:
            raise ScenarioError(f"unknown keys in '{section}': {sorted(extra)}")
        for key, attr in keys.items():
            if key not in body:
                if f"{section}.{key}" in _OPTIONAL:
                    continue
                raise ScenarioError(f"missing key '{section}.{key}'")
            if attr is None:
                xi_s = float(body[key])
            else:
                kw[attr] = body[key]
    for k, v in kw.items():
        if k not in ("users", "target", "uav_start", "uav_end", "slots", "intervals",
                     "n_tx", "n_rx"):
            try:
                kw[k] = float(v)
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"{k}: expected a number") from exc
    if xi_s is not None:
        if not (0.0 <= xi_s <= 1.0) or abs(kw.get("xi_c", 0.5) + xi_s - 1.0) > 1e-12:
            raise ScenarioError("weights: xi_c + xi_s must equal 1")
    return Scenario(**kw)


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario JSON file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error in {path}: {exc}") from exc
    return scenario_from_dict(doc)


def builtin_scenario(name: str) -> Scenario:
    """Load one of the bundled scenarios (``"table1"`` or ``"desk"``)."""
    return load_scenario(Path(__file__).with_name("data") / f"{name}.json")


def interval_of(slot: int, mu: int, n_slots: int) -> int:
    """Map a 1-based slot index to its 1-based interval index."""
    if not 1 <= slot <= n_slots:
        raise IndexError(f"slot {slot} outside 1..{n_slots}")
    return (slot - 1) // mu + 1


@dataclass(frozen=True)
class ArrayLayout:
    """Ordered antenna coordinates (m) on the segment ``[0, D_FA]``."""

    coords: tuple[float, ...]
    kind: str = "transmit"

    def __post_init__(self):
        if self.kind not in ("transmit", "receive"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def x(self) -> np.ndarray:
        return np.array(self.coords)

    def __len__(self):
        return len(self.coords)

    def violations(self, d_min: float, d_fa: float, tol: float = 1e-9) -> list[str]:
        """Names of the spacing/segment constraints the layout breaks."""
        x = self.x
        out = []
        if x[0] < -tol * max(d_fa, 1.0):
            out.append("lower boundary")
        if x[-1] > d_fa + tol * max(d_fa, 1.0):
            out.append("upper boundary")
        if x.size > 1 and np.min(np.diff(x)) < d_min - tol * max(d_fa, 1.0):
            out.append("minimum spacing")
        return out

    def is_valid(self, d_min: float, d_fa: float, tol: float = 1e-9) -> bool:
        return not self.violations(d_min, d_fa, tol)


def ula(n: int, d_fa: float, kind: str = "transmit") -> ArrayLayout:
    """Uniform linear array spanning the whole segment."""
    if n == 1:
        return ArrayLayout((0.0,), kind)
    return ArrayLayout(tuple(np.linspace(0.0, d_fa, n)), kind)
