"""Minimum-jerk quintic segments and piecewise waypoint paths."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np


class DegenerateDuration(ValueError):
    pass


def boundary_matrix(t_i, t_f):
    """6x6 matrix B with B @ a = [s(ti), s(tf), s'(ti), s'(tf), s''(ti), s''(tf)]."""
    def rows(t):
        return (
            [1.0, t, t**2, t**3, t**4, t**5],
            [0.0, 1.0, 2 * t, 3 * t**2, 4 * t**3, 5 * t**4],
            [0.0, 0.0, 2.0, 6 * t, 12 * t**2, 20 * t**3],
        )
    pi, vi, ai = rows(t_i)
    pf, vf, af = rows(t_f)
    return np.array([pi, pf, vi, vf, ai, af])


def min_jerk_coeffs(b, t_i, t_f):
    """Quintic coefficients ``a0..a5`` in segment-local time ``t - t_i``.

    ``b`` holds ``[s(ti), s(tf), s'(ti), s'(tf), s''(ti), s''(tf)]``; a
    ``(6, d)`` array solves ``d`` dimensions at once.
    """
    if not t_f > t_i:
        raise DegenerateDuration(f"t_f={t_f} must exceed t_i={t_i}")
    return np.linalg.solve(boundary_matrix(0.0, t_f - t_i), np.asarray(b, dtype=float))


@dataclass(frozen=True)
class MinJerkSegment:
    coeffs: np.ndarray  # (6, d)
    t_i: float
    t_f: float
    boundary: np.ndarray  # (6, d)

    @classmethod
    def rest_to_rest(cls, start, end, t_i, t_f):
        start = np.atleast_1d(np.asarray(start, dtype=float))
        end = np.atleast_1d(np.asarray(end, dtype=float))
        zeros = np.zeros_like(start)
        return cls.from_boundary(np.vstack([start, end, zeros, zeros, zeros, zeros]),
                                 t_i, t_f)

    @classmethod
    def from_boundary(cls, b, t_i, t_f):
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        return cls(min_jerk_coeffs(b, t_i, t_f), float(t_i), float(t_f), b)


def eval_segment(seg, t):
    """Position, velocity and acceleration at ``t`` (clamped to the segment)."""
    if t <= seg.t_i:
        return seg.boundary[0].copy(), seg.boundary[2].copy(), seg.boundary[4].copy()
    if t >= seg.t_f:
        return seg.boundary[1].copy(), seg.boundary[3].copy(), seg.boundary[5].copy()
    tau = t - seg.t_i
    a = seg.coeffs
    pos = a[0] + tau * (a[1] + tau * (a[2] + tau * (a[3] + tau * (a[4] + tau * a[5]))))
    vel = a[1] + tau * (2 * a[2] + tau * (3 * a[3] + tau * (4 * a[4] + tau * 5 * a[5])))
    acc = 2 * a[2] + tau * (6 * a[3] + tau * (12 * a[4] + tau * 20 * a[5]))
    return pos, vel, acc


def _broadcast(value, count, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(count, float(arr[0]))
    if arr.shape != (count,):
        raise ValueError(f"{name}: expected {count} values, got {arr.size}")
    return arr


@dataclass(frozen=True)
class WaypointPath:
    """Rest-to-rest minimum-jerk path through 3D waypoints.

    The path dwells ``dwell[k]`` seconds at waypoint ``k`` before leaving it
    and takes ``durations[k]`` seconds from waypoint ``k`` to ``k + 1``.
    """

    waypoints: np.ndarray
    durations: np.ndarray
    dwell: np.ndarray
    _segments: list = field(init=False, repr=False, compare=False)
    _starts: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[0] < 2 or wp.shape[1] != 3:
            raise ValueError("waypoints: need at least two 3D points")
        dur = _broadcast(self.durations, wp.shape[0] - 1, "durations")
        dwell = _broadcast(self.dwell, wp.shape[0], "dwell")
        if np.any(dur <= 0):
            raise DegenerateDuration("durations: every segment must be > 0")
        if np.any(dwell < 0):
            raise ValueError("dwell: must be >= 0")
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "durations", dur)
        object.__setattr__(self, "dwell", dwell)

        segments, starts, t = [], [], 0.0
        for k in range(wp.shape[0] - 1):
            t += dwell[k]
            segments.append(MinJerkSegment.rest_to_rest(wp[k], wp[k + 1], t, t + dur[k]))
            starts.append(t)
            t += dur[k]
        object.__setattr__(self, "_segments", segments)
        object.__setattr__(self, "_starts", starts)

    @property
    def total_duration(self):
        return float(self.durations.sum() + self.dwell.sum())

    @property
    def arrival_times(self):
        """Time at which each waypoint is first reached (0 for the first)."""
        return [0.0] + [s.t_f for s in self._segments]

    def sample(self, t):
        k = bisect.bisect_right(self._starts, t) - 1
        if k < 0:
            return self.waypoints[0].copy()
        return eval_segment(self._segments[k], t)[0]


def sample_fixation(path, t):
    return path.sample(t)
