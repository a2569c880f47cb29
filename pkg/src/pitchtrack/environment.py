"""
Atmosphere, gravity and wind.

The atmosphere follows the 1976 U.S. Standard Atmosphere up to 86 km
geometric altitude (seven geopotential layers). Above 86 km temperature is
held and pressure/density keep decaying exponentially with the 86 km scale
height; queries above 100 km are clamped to 100 km.

Wind is a tabulated mean horizontal profile plus an optional gust term: one
first-order (Dryden-type) shaping filter per inertial axis, driven by seeded
white noise and advanced once per simulation step.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .vehicle import G0

R_EARTH = 6371000.0  # m, mean radius used by the gravity model

# 1976 standard atmosphere constants
_R_AIR = 8.31432 / 0.0289644  # J/(kg K)
_GAMMA = 1.4
_R0_GEOPOT = 6356766.0  # m, radius used for geopotential altitude
_LAYER_BASES_M = (0.0, 11000.0, 20000.0, 32000.0, 47000.0, 51000.0, 71000.0, 84852.0)
_LAPSE_K_PER_M = (-0.0065, 0.0, 0.001, 0.0028, 0.0, -0.0028, -0.002)
_T0 = 288.15
_P0 = 101325.0
_ALT_TOP_M = 86000.0
_ALT_CLAMP_M = 100000.0
_ALT_MIN_M = -100.0


def _layer_table():
    temps = [_T0]
    press = [_P0]
    for i, lapse in enumerate(_LAPSE_K_PER_M):
        dh = _LAYER_BASES_M[i + 1] - _LAYER_BASES_M[i]
        t_b, p_b = temps[-1], press[-1]
        t_top = t_b + lapse * dh
        if lapse == 0.0:
            p_top = p_b * math.exp(-G0 * dh / (_R_AIR * t_b))
        else:
            p_top = p_b * (t_top / t_b) ** (-G0 / (_R_AIR * lapse))
        temps.append(t_top)
        press.append(p_top)
    return tuple(temps), tuple(press)


_LAYER_T, _LAYER_P = _layer_table()


def _geopotential(h: float) -> float:
    return _R0_GEOPOT * h / (_R0_GEOPOT + h)


def _layer_state(hg: float) -> tuple[float, float]:
    i = max(0, min(bisect.bisect_right(_LAYER_BASES_M, hg) - 1, len(_LAPSE_K_PER_M) - 1))
    lapse = _LAPSE_K_PER_M[i]
    t_b, p_b = _LAYER_T[i], _LAYER_P[i]
    dh = hg - _LAYER_BASES_M[i]
    if lapse == 0.0:
        return t_b, p_b * math.exp(-G0 * dh / (_R_AIR * t_b))
    t = t_b + lapse * dh
    return t, p_b * (t / t_b) ** (-G0 / (_R_AIR * lapse))


_T_TOP, _P_TOP = _layer_state(_geopotential(_ALT_TOP_M))
_SCALE_HEIGHT_TOP = _R_AIR * _T_TOP / G0


def temperature_pressure(altitude: float) -> tuple[float, float]:
    if altitude < _ALT_MIN_M:
        raise ValueError(f"altitude {altitude:.1f} m below the atmosphere model floor")
    h = min(altitude, _ALT_CLAMP_M)
    if h <= _ALT_TOP_M:
        return _layer_state(_geopotential(h))
    return _T_TOP, _P_TOP * math.exp(-(h - _ALT_TOP_M) / _SCALE_HEIGHT_TOP)


def sample_atmosphere(altitude: float) -> tuple[float, float, float]:
    """Return ``(pressure Pa, density kg/m^3, speed of sound m/s)``."""
    t, p = temperature_pressure(altitude)
    return p, p / (_R_AIR * t), math.sqrt(_GAMMA * _R_AIR * t)


def gravity(altitude: float, g0: float = G0, r_earth: float = R_EARTH) -> float:
    if altitude <= -r_earth:
        raise ValueError("altitude must be above the Earth's centre")
    return g0 * r_earth**2 / (r_earth + altitude) ** 2


@dataclass(frozen=True)
class EnvSample:
    g_mps2: float
    pressure_Pa: float
    density_kgpm3: float
    speed_of_sound_mps: float
    wind_i_mps: tuple[float, float]


# ---------------------------------------------------------------------------
# Wind
# ---------------------------------------------------------------------------

DEFAULT_WIND_ALT_M = (0.0, 1000.0, 3000.0, 6000.0, 10000.0, 12000.0, 15000.0,
                      20000.0, 30000.0, 50000.0, 100000.0)
DEFAULT_WIND_MPS = (2.0, 5.0, 8.0, 12.0, 18.0, 20.0, 14.0, 8.0, 5.0, 8.0, 10.0)


class WindModel:
    """Mean horizontal wind profile plus seeded first-order gusts.

    The gust filter runs at unit variance with correlation time
    ``gust_length_m / reference_airspeed_mps`` and is scaled by ``gust_sigma_mps``,
    tapered linearly to zero at ``gust_ceiling_m``. A ``constant_wind_i`` pair
    (vertical, horizontal) replaces the mean profile when given.
    """

    _BLOCK = 4096

    def __init__(
        self,
        profile_alt_m=DEFAULT_WIND_ALT_M,
        profile_wind_mps=DEFAULT_WIND_MPS,
        gusts_enabled: bool = True,
        gust_length_m: float = 533.0,
        gust_sigma_mps: float = 2.0,
        gust_ceiling_m: float = 20000.0,
        reference_airspeed_mps: float = 200.0,
        seed: int = 0,
        dt: float = 1e-3,
        constant_wind_i: tuple[float, float] | None = None,
    ):
        alt = [float(a) for a in profile_alt_m]
        wind = [float(w) for w in profile_wind_mps]
        if len(alt) != len(wind) or not alt:
            raise ValueError("wind profile altitude and speed columns must have equal, non-zero length")
        if any(b <= a for a, b in zip(alt, alt[1:])):
            raise ValueError("wind profile altitudes must be strictly increasing")
        if gust_sigma_mps < 0:
            raise ValueError("gust_sigma_mps must be >= 0")
        if gust_length_m <= 0 or reference_airspeed_mps <= 0 or dt <= 0 or gust_ceiling_m <= 0:
            raise ValueError("gust length, airspeed, ceiling and dt must be > 0")
        self.profile_alt_m = alt
        self.profile_wind_mps = wind
        self.gusts_enabled = bool(gusts_enabled)
        self.gust_length_m = float(gust_length_m)
        self.gust_sigma_mps = float(gust_sigma_mps)
        self.gust_ceiling_m = float(gust_ceiling_m)
        self.reference_airspeed_mps = float(reference_airspeed_mps)
        self.seed = int(seed)
        self.dt = float(dt)
        self.constant_wind_i = None if constant_wind_i is None else tuple(float(c) for c in constant_wind_i)
        self._a = math.exp(-self.reference_airspeed_mps * self.dt / self.gust_length_m)
        self._b = math.sqrt(1.0 - self._a**2)
        self.reset()

    def reset(self):
        self._rng = np.random.Generator(np.random.PCG64(self.seed))
        self._noise = np.empty((0, 2))
        self._noise_pos = 0
        self._k = 0
        self._gx = 0.0
        self._gz = 0.0

    def mean_wind(self, altitude: float) -> float:
        alt, w = self.profile_alt_m, self.profile_wind_mps
        if altitude <= alt[0]:
            return w[0]
        if altitude >= alt[-1]:
            return w[-1]
        i = bisect.bisect_right(alt, altitude) - 1
        f = (altitude - alt[i]) / (alt[i + 1] - alt[i])
        return w[i] + f * (w[i + 1] - w[i])

    def _advance_to(self, k: int):
        a, b = self._a, self._b
        while self._k < k:
            if self._noise_pos >= len(self._noise):
                self._noise = self._rng.standard_normal((self._BLOCK, 2))
                self._noise_pos = 0
            nx, nz = self._noise[self._noise_pos]
            self._noise_pos += 1
            self._gx = a * self._gx + b * nx
            self._gz = a * self._gz + b * nz
            self._k += 1

    def gust(self, altitude: float, t: float) -> tuple[float, float]:
        if not self.gusts_enabled or self.gust_sigma_mps == 0.0:
            return 0.0, 0.0
        k = int(math.floor(t / self.dt + 1e-6))
        if k < self._k:
            raise ValueError("gust filter cannot be rewound; call reset()")
        self._advance_to(k)
        sigma = self.gust_sigma_mps * max(0.0, 1.0 - altitude / self.gust_ceiling_m)
        return sigma * self._gx, sigma * self._gz

    def __call__(self, altitude: float, t: float) -> tuple[float, float]:
        if self.constant_wind_i is not None:
            wx, wz = self.constant_wind_i
        else:
            wx, wz = 0.0, self.mean_wind(altitude)
        gx, gz = self.gust(altitude, t)
        return wx + gx, wz + gz


def sample_wind(altitude: float, t: float, wm: WindModel) -> tuple[float, float]:
    """Wind velocity in the inertial frame as ``(vertical, horizontal)`` m/s."""
    return wm(altitude, t)


def load_wind_profile(path) -> tuple[list[float], list[float]]:
    """Read a ``altitude_m, wind_z_mps`` CSV file."""
    alt, wind = [], []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["altitude_m", "wind_z_mps"]:
            raise ValueError(f"{path}: expected header 'altitude_m, wind_z_mps', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                alt.append(float(row[0]))
                wind.append(float(row[1]))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: bad wind profile row {row!r}") from exc
    return alt, wind
