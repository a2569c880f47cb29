"""
Reference trajectories prescribed as piecewise accelerations.

Each axis is a contiguous list of segments on ``(t_start, t_end]`` whose
acceleration is either constant or ``amplitude * cos(2 pi t / period) + offset``
(absolute time inside the cosine). Position and velocity follow from exact
closed-form integration from rest at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    kind: str = "constant"  # "constant" | "sinusoid"
    value: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if not self.t_end > self.t_start:
            raise ValueError("segment must have t_end > t_start")
        if self.kind == "sinusoid" and self.period <= 0:
            raise ValueError("sinusoid period must be > 0")

    def accel(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        return self.amplitude * math.cos(2.0 * math.pi * t / self.period) + self.offset

    def propagate(self, t0: float, p0: float, v0: float, t: float) -> tuple[float, float]:
        """Position and velocity at ``t`` given the state at ``t0``."""
        tau = t - t0
        if self.kind == "constant":
            c = self.value
            return p0 + v0 * tau + 0.5 * c * tau * tau, v0 + c * tau
        w = 2.0 * math.pi / self.period
        a, b = self.amplitude, self.offset
        s0, c0 = math.sin(w * t0), math.cos(w * t0)
        s1, c1 = math.sin(w * t), math.cos(w * t)
        v = v0 + b * tau + a / w * (s1 - s0)
        p = p0 + v0 * tau + 0.5 * b * tau * tau + a / w * (-(c1 - c0) / w - s0 * tau)
        return p, v


@dataclass(frozen=True)
class AccelProfile:
    x_segments: tuple[Segment, ...]
    z_segments: tuple[Segment, ...]
    t_f: float

    def __post_init__(self):
        for name, segs in (("x", self.x_segments), ("z", self.z_segments)):
            if not segs:
                raise ValueError(f"{name}-axis profile has no segments")
            if abs(segs[0].t_start) > 1e-12:
                raise ValueError(f"{name}-axis profile must start at t=0")
            for a, b in zip(segs, segs[1:]):
                if abs(a.t_end - b.t_start) > 1e-12:
                    raise ValueError(f"{name}-axis segments must be contiguous")
            if abs(segs[-1].t_end - self.t_f) > 1e-9:
                raise ValueError(f"{name}-axis segments must end at t_f={self.t_f}")


@dataclass(frozen=True)
class ReferenceSample:
    t: float
    x_d: float
    xdot_d: float
    xddot_d: float
    z_d: float
    zdot_d: float
    zddot_d: float
    coasting: bool = False


def _sinusoid(t0, t1, amplitude, period, offset):
    return Segment(t0, t1, "sinusoid", amplitude=amplitude, period=period, offset=offset)


def _vertical_profile(t_f: float) -> tuple[Segment, ...]:
    return (
        Segment(0.0, 30.0, value=10.0),
        _sinusoid(30.0, 60.0, 2.5, 30.0, 7.5),
        Segment(60.0, t_f, value=10.0),
    )


def scenario_I(t_f: float = 103.0) -> AccelProfile:
    """Strictly vertical ascent with reduced acceleration through max-Q."""
    if t_f <= 60:
        raise ValueError("t_f must exceed 60 s")
    return AccelProfile(_vertical_profile(t_f), (Segment(0.0, t_f, value=0.0),), t_f)


def scenario_II(t_f: float = 103.0) -> AccelProfile:
    """Same vertical profile with a downrange excursion and return to vertical flight."""
    if t_f <= 60:
        raise ValueError("t_f must exceed 60 s")
    z = (
        Segment(0.0, 20.0, value=0.0),
        _sinusoid(20.0, 60.0, 2.5, 40.0, 2.5),
        _sinusoid(60.0, t_f, -2.5, 40.0, -2.5),
    )
    return AccelProfile(_vertical_profile(t_f), z, t_f)


@dataclass(frozen=True)
class _Axis:
    segments: tuple[Segment, ...]
    starts: tuple[tuple[float, float], ...]  # (p0, v0) at each segment start
    end: tuple[float, float, float]  # (p, v, a) at t_f

    @classmethod
    def build(cls, segments):
        p, v = 0.0, 0.0
        starts = []
        for seg in segments:
            starts.append((p, v))
            p, v = seg.propagate(seg.t_start, p, v, seg.t_end)
        last = segments[-1]
        return cls(tuple(segments), tuple(starts), (p, v, last.accel(last.t_end)))

    def sample(self, t: float) -> tuple[float, float, float]:
        segs = self.segments
        i = 0
        while i < len(segs) - 1 and t > segs[i].t_end:
            i += 1
        seg = segs[i]
        p0, v0 = self.starts[i]
        p, v = seg.propagate(seg.t_start, p0, v0, t)
        return p, v, seg.accel(t)


@dataclass(frozen=True)
class ReferenceSeries:
    """Exact reference built from an :class:`AccelProfile`, plus a sampled grid."""

    profile: AccelProfile
    x_axis: _Axis
    z_axis: _Axis
    t: np.ndarray = field(repr=False)
    samples: dict = field(repr=False)

    def __call__(self, t: float) -> ReferenceSample:
        return sample_reference(self, t)


def sample_reference(series: ReferenceSeries, t: float) -> ReferenceSample:
    """Closed-form reference at ``t``; past ``t_f`` the last acceleration is held."""
    if t < 0:
        raise ValueError("reference time must be >= 0")
    t_f = series.profile.t_f
    if t <= t_f:
        x = series.x_axis.sample(t)
        z = series.z_axis.sample(t)
        return ReferenceSample(t, *x, *z)
    tau = t - t_f
    out = []
    for axis in (series.x_axis, series.z_axis):
        p, v, a = axis.end
        out.extend((p + v * tau + 0.5 * a * tau * tau, v + a * tau, a))
    return ReferenceSample(t, *out, coasting=True)


def integrate_profile(profile: AccelProfile, dt: float) -> ReferenceSeries:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    xa = _Axis.build(profile.x_segments)
    za = _Axis.build(profile.z_segments)
    n = int(math.floor(profile.t_f / dt + 1e-9))
    t = np.arange(n + 1) * dt
    if t[-1] < profile.t_f - 1e-12:
        t = np.append(t, profile.t_f)
    cols = np.array([(*xa.sample(ti), *za.sample(ti)) for ti in t])
    names = ("x_d", "xdot_d", "xddot_d", "z_d", "zdot_d", "zddot_d")
    samples = {k: cols[:, i] for i, k in enumerate(names)}
    return ReferenceSeries(profile, xa, za, t, samples)


def custom_profile(segments: list[dict], t_f: float) -> AccelProfile:
    """Build a profile from config entries ``{axis, t_start, t_end, kind, ...}``."""
    if not segments:
        raise ValueError("custom mission needs at least one segment")
    by_axis = {"x": [], "z": []}
    for entry in segments:
        entry = dict(entry)
        axis = entry.pop("axis", None)
        if axis not in by_axis:
            raise ValueError(f"segment axis must be 'x' or 'z', got {axis!r}")
        by_axis[axis].append(Segment(**entry))
    for axis, segs in by_axis.items():
        if not segs:
            by_axis[axis] = [Segment(0.0, t_f, value=0.0)]
        segs.sort(key=lambda s: s.t_start)
    return AccelProfile(tuple(by_axis["x"]), tuple(by_axis["z"]), t_f)
