"""Gaze orientation targets and world-frame orientation error.

Quaternions are stored scalar-first, ``(w, x, y, z)``, and kept in canonical
form: the equivalent rotation angle lies in ``[0, pi]``, i.e. ``w >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_DIST = 1e-6
EPS_PARALLEL = 1e-6
WORLD_Z = np.array([0.0, 0.0, 1.0])
WORLD_Y = np.array([0.0, 1.0, 0.0])


class DegenerateFixation(ValueError):
    """The fixation point coincides with the frame origin."""


class ParallelFixedVector(ValueError):
    """The fixed reference vector is parallel to the gaze direction."""


@dataclass(frozen=True)
class UnitQuaternion:
    w: float
    xyz: np.ndarray

    @classmethod
    def identity(cls):
        return cls(1.0, np.zeros(3))

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), arr[1:4].copy())

    @property
    def array(self):
        return np.concatenate([[self.w], self.xyz])

    def conjugate(self):
        return UnitQuaternion(self.w, -self.xyz)

    def __mul__(self, other):
        return UnitQuaternion.from_array(quat_multiply(self.array, other.array))


@dataclass(frozen=True)
class AxisAngle:
    axis: np.ndarray
    angle: float

    @property
    def vector(self):
        return self.angle * self.axis


@dataclass(frozen=True)
class GazeFrame:
    i_d: np.ndarray
    j_d: np.ndarray
    k_d: np.ndarray

    @property
    def rotation(self):
        return np.column_stack([self.i_d, self.j_d, self.k_d])


def cross(a, b):
    # np.cross carries heavy per-call overhead for single 3-vectors
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def quat_multiply(a, b):
    """Hamilton product of two ``(w, x, y, z)`` arrays."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def _first_nonzero_positive(v, tol=1e-12):
    for c in v:
        if abs(c) > tol:
            return v if c > 0 else -v
    return v


def canonicalize(q):
    """Return the sign of ``q`` whose rotation angle lies in [0, pi].

    At exactly pi (w == 0) the axis is flipped so that its first nonzero
    component is positive.
    """
    arr = q.array
    arr = arr / np.linalg.norm(arr)
    if arr[0] < 0.0:
        arr = -arr
    elif arr[0] == 0.0:
        arr = np.concatenate([[0.0], _first_nonzero_positive(arr[1:])])
    return UnitQuaternion.from_array(arr)


def quat_from_rotation(R):
    # Shepperd: branch on the largest of trace and diagonal entries.
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    d = np.diag(R)
    k = int(np.argmax([tr, d[0], d[1], d[2]]))
    if k == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s,
             (R[1, 0] - R[0, 1]) / s]
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + 2.0 * d[0] - tr)
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s,
             (R[0, 2] + R[2, 0]) / s]
    elif k == 2:
        s = 2.0 * np.sqrt(1.0 + 2.0 * d[1] - tr)
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s,
             (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + 2.0 * d[2] - tr)
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
             (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    return canonicalize(UnitQuaternion.from_array(q))


def rotation_from_quat(q):
    w, (x, y, z) = q.w, q.xyz
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return canonicalize(UnitQuaternion(np.cos(angle / 2), np.sin(angle / 2) * axis))


def axis_angle(q):
    """Axis-angle readout of a canonical quaternion; angle in [0, pi]."""
    q = canonicalize(q)
    s = np.linalg.norm(q.xyz)
    angle = 2.0 * np.arctan2(s, q.w)
    if s == 0.0:
        return AxisAngle(np.array([1.0, 0.0, 0.0]), 0.0)
    axis = q.xyz / s
    if q.w == 0.0:
        axis = _first_nonzero_positive(axis)
    return AxisAngle(axis, float(angle))


def gaze_frame(p_c, p_d, f_o=WORLD_Z, eps_dist=EPS_DIST, eps_par=EPS_PARALLEL):
    """Desired frame whose x axis points from ``p_c`` at the fixation ``p_d``.

    ``k_d`` is ``f_o`` projected onto the plane normal to the gaze direction,
    and ``j_d = k_d x i_d`` completes a right-handed frame.
    """
    p_dc = np.asarray(p_d, dtype=float) - np.asarray(p_c, dtype=float)
    dist = np.linalg.norm(p_dc)
    if dist <= eps_dist:
        raise DegenerateFixation(
            f"fixation point {np.asarray(p_d).tolist()} is {dist:.3g} m from "
            f"the frame origin")
    i_d = p_dc / dist
    f_o = np.asarray(f_o, dtype=float)
    if abs(f_o @ i_d) >= 1.0 - eps_par:
        raise ParallelFixedVector(
            f"fixed vector {f_o.tolist()} is parallel to the gaze direction")
    v = f_o - i_d * (f_o @ i_d)
    k_d = v / np.linalg.norm(v)
    j_d = cross(k_d, i_d)
    return GazeFrame(i_d, j_d, k_d)


def rotation_error(R_c, R_d):
    """World-frame rotation taking ``R_c`` onto ``R_d`` (R_e @ R_c == R_d)."""
    return np.asarray(R_d) @ np.asarray(R_c).T


def quat_error(q_c, q_d):
    return canonicalize(q_d * q_c.conjugate())


def gaze_task_dx(q_e, k=1.0):
    aa = axis_angle(q_e)
    return k * aa.angle * aa.axis
