"""Screw-axis kinematics for head-eye chains.

Forward kinematics is the product of exponentials over the joints that
actually drive an effector, and the spatial Jacobian is assembled column by
column with the adjoint map. Twists are ordered ``(omega, v)`` throughout, so
rows 0-2 of every Jacobian are the world-frame angular rates (roll, pitch,
yaw) and rows 3-5 the linear part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from .orientation import cross

ROW_NAMES = {"roll": 0, "pitch": 1, "yaw": 2}
ROW_FRAMES = ("world", "effector", "cyclopean")


class ModelError(ValueError):
    """Raised when a robot model description violates its invariants.

    ``problems`` lists every violation found, each prefixed by a field path.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def skew(w):
    return np.array([[0.0, -w[2], w[1]],
                     [w[2], 0.0, -w[0]],
                     [-w[1], w[0], 0.0]])


@dataclass(frozen=True)
class ScrewAxis:
    omega: np.ndarray
    v: np.ndarray

    @property
    def vector(self):
        return np.concatenate([self.omega, self.v])

    @cached_property
    def skews(self):
        W = skew(self.omega)
        return W, W @ W

    @classmethod
    def from_point(cls, omega, point):
        """Revolute axis with direction ``omega`` passing through ``point``."""
        omega = np.asarray(omega, dtype=float)
        return cls(omega, -np.cross(omega, np.asarray(point, dtype=float)))


@dataclass(frozen=True)
class Transform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T):
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3].copy(), T[:3, 3].copy())

    @property
    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other):
        return Transform(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)

    def inverse(self):
        Rt = self.rotation.T
        return Transform(Rt, -Rt @ self.translation)

    def apply(self, point):
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def is_valid(self, tol=1e-10):
        R = self.rotation
        return (np.allclose(R.T @ R, np.eye(3), atol=tol, rtol=0)
                and abs(np.linalg.det(R) - 1.0) <= tol)


@dataclass(frozen=True)
class JointDef:
    name: str
    axis: ScrewAxis
    q_min: float
    q_max: float
    buffer: float

    @property
    def center(self):
        return 0.5 * (self.q_min + self.q_max)


@dataclass(frozen=True)
class EffectorDef:
    name: str
    contributing_joints: tuple
    row_selection: tuple
    home_pose: Transform
    # frame the angular rows are expressed in, see row_frame_rotation
    row_frame: str = "world"


@dataclass(frozen=True)
class RobotModel:
    joints: tuple
    effectors: tuple
    name: str = "robot"

    @property
    def n(self):
        return len(self.joints)

    @cached_property
    def q_min(self):
        return np.array([j.q_min for j in self.joints])

    @cached_property
    def q_max(self):
        return np.array([j.q_max for j in self.joints])

    @cached_property
    def buffers(self):
        return np.array([j.buffer for j in self.joints])

    @property
    def screw_matrix(self):
        """6 x n matrix whose columns are the screw axes in chain order."""
        return np.column_stack([j.axis.vector for j in self.joints])

    def effector(self, name):
        for eff in self.effectors:
            if eff.name == name:
                return eff
        raise KeyError(f"unknown effector {name!r}; known: "
                       f"{', '.join(e.name for e in self.effectors)}")

    def clamp(self, q):
        return np.clip(q, self.q_min, self.q_max)

    def ancestors(self, i):
        """Joints preceding ``i`` that move joint ``i``'s axis.

        A joint is an ancestor when it precedes ``i`` in chain order and every
        effector driven by ``i`` is also driven by it. For a serial chain this
        is simply ``range(i)``; for the Dreamer eyes it drops the right-eye yaw
        from the left-eye yaw's parents.
        """
        return self._ancestor_table[i]

    @cached_property
    def _ancestor_table(self):
        table = []
        for i in range(self.n):
            users = [set(e.contributing_joints) for e in self.effectors
                     if i in e.contributing_joints]
            common = set.intersection(*users) if users else set(range(i))
            table.append(tuple(k for k in range(i) if k in common))
        return tuple(table)


_I3 = np.eye(3)


def exp_twist(axis, theta):
    """Rigid transform of a rotation by ``theta`` about a unit screw axis."""
    W, W2 = axis.skews
    s, c = np.sin(theta), np.cos(theta)
    R = _I3 + s * W + (1.0 - c) * W2
    G = theta * _I3 + (1.0 - c) * W + (theta - s) * W2
    return Transform(R, G @ axis.v)


def adjoint(T):
    R, p = T.rotation, T.translation
    Ad = np.zeros((6, 6))
    Ad[:3, :3] = R
    Ad[3:, 3:] = R
    Ad[3:, :3] = skew(p) @ R
    return Ad


def joint_exponentials(model, q):
    q = np.asarray(q, dtype=float)
    return [exp_twist(j.axis, q[i]) for i, j in enumerate(model.joints)]


def _chain(exps, joints, cache):
    """Product of ``exps`` over ``joints``, memoising every prefix in ``cache``."""
    joints = tuple(joints)
    if joints not in cache:
        if not joints:
            cache[joints] = Transform.identity()
        else:
            cache[joints] = _chain(exps, joints[:-1], cache) @ exps[joints[-1]]
    return cache[joints]


def forward_kinematics(model, q, effector, exps=None, cache=None):
    eff = model.effector(effector)
    if exps is None:
        exps = {i: exp_twist(model.joints[i].axis, q[i]) for i in eff.contributing_joints}
    return _chain(exps, eff.contributing_joints, {} if cache is None else cache) @ eff.home_pose


def spatial_jacobian(model, q, exps=None, cache=None):
    """6 x n spatial Jacobian; column i is S_i carried through its parents."""
    if exps is None:
        exps = joint_exponentials(model, q)
    if cache is None:
        cache = {}
    J = np.empty((6, model.n))
    for i, joint in enumerate(model.joints):
        J[:, i] = adjoint(_chain(exps, model.ancestors(i), cache)) @ joint.axis.vector
    return J


class Kinematics:
    """Lazily cached poses and Jacobian of one model at one configuration."""

    def __init__(self, model, q):
        self.model = model
        self.q = np.asarray(q, dtype=float)
        self.exps = joint_exponentials(model, self.q)
        self._chains = {}
        self._poses = {}
        self._jacobian = None

    def pose(self, effector):
        if effector not in self._poses:
            self._poses[effector] = forward_kinematics(self.model, self.q, effector,
                                                       self.exps, self._chains)
        return self._poses[effector]

    @property
    def jacobian(self):
        if self._jacobian is None:
            self._jacobian = spatial_jacobian(self.model, self.q, self.exps, self._chains)
        return self._jacobian


def row_frame_rotation(model, q, effector, kin=None):
    """Frame in which an effector's angular task rows are expressed.

    ``world`` gives the identity and ``effector`` the effector's current
    orientation. ``cyclopean`` is shared by every effector so flagged: its x
    axis is their mean gaze direction and its z axis the projection of world
    z, so coupled eyes keep identical row directions.
    """
    eff = model.effector(effector)
    if eff.row_frame == "world":
        return np.eye(3)
    if kin is None:
        kin = Kinematics(model, q)
    if eff.row_frame == "effector":
        return kin.pose(effector).rotation
    group = [e.name for e in model.effectors if e.row_frame == "cyclopean"]
    x = sum(kin.pose(name).rotation[:, 0] for name in group)
    x = x / np.linalg.norm(x)
    up = np.array([0.0, 0.0, 1.0])
    if abs(up @ x) > 1.0 - 1e-6:
        up = np.array([0.0, 1.0, 0.0])
    z = up - x * (up @ x)
    z = z / np.linalg.norm(z)
    return np.column_stack([x, cross(z, x), z])


def task_jacobian(model, q, effector, J_spatial=None, rotation=None):
    """Angular rows of the spatial Jacobian restricted to one effector.

    Columns of joints that do not drive the effector are zeroed. The angular
    rate is expressed in the effector's row frame (``rotation``, computed
    when omitted) and only the selected rows are kept.
    """
    eff = model.effector(effector)
    if J_spatial is None:
        J_spatial = spatial_jacobian(model, q)
    cols = list(eff.contributing_joints)
    Jw = np.zeros((3, model.n))
    Jw[:, cols] = J_spatial[:3, cols]
    if eff.row_frame != "world":
        if rotation is None:
            rotation = row_frame_rotation(model, q, effector)
        Jw = rotation.T @ Jw
    return Jw[list(eff.row_selection)]


# -- model files -------------------------------------------------------------

DREAMER_LINKS = (0.13849, 0.12508, 0.053)


def dreamer_model(head_limit=np.pi / 2, eye_limit=np.pi / 4, buffer=0.1):
    """Dreamer head: published screw axes, placeholder joint limits."""
    l1, l2, l3 = DREAMER_LINKS
    axes = [
        ("neck_pitch", (0, -1, 0), (0, 0, 0), head_limit),
        ("neck_yaw", (0, 0, 1), (0, 0, 0), head_limit),
        ("head_roll", (-1, 0, 0), (0, -l1, 0), head_limit),
        ("head_pitch", (0, -1, 0), (l1, 0, 0), head_limit),
        ("eye_pitch", (0, -1, 0), (l1, 0, -l2), eye_limit),
        ("right_eye_yaw", (0, 0, 1), (-l3, -l2, 0), eye_limit),
        ("left_eye_yaw", (0, 0, 1), (l3, -l2, 0), eye_limit),
    ]
    joints = tuple(
        JointDef(name, ScrewAxis(np.array(w, float), np.array(v, float)),
                 -lim, lim, buffer)
        for name, w, v, lim in axes)
    effectors = (
        EffectorDef("head", (0, 1, 2, 3), (0, 1, 2),
                    Transform(np.eye(3), np.array([0.0, 0.0, l1]))),
        EffectorDef("right_eye", (0, 1, 2, 3, 4, 5), (1, 2),
                    Transform(np.eye(3), np.array([l2, -l3, l1])), "cyclopean"),
        EffectorDef("left_eye", (0, 1, 2, 3, 4, 6), (1, 2),
                    Transform(np.eye(3), np.array([l2, l3, l1])), "cyclopean"),
    )
    return RobotModel(joints, effectors, name="dreamer")


def _vec3(value, path, problems):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        problems.append(f"{path}: expected a 3-vector, got {value!r}")
        return None
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        problems.append(f"{path}: expected a finite 3-vector, got {value!r}")
        return None
    return arr


def _parse_rows(rows, path, problems):
    out = []
    for k, r in enumerate(rows):
        idx = ROW_NAMES.get(r, r) if isinstance(r, str) else r
        if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx <= 2:
            problems.append(f"{path}[{k}]: expected roll/pitch/yaw or 0-2, got {r!r}")
            continue
        out.append(idx)
    if len(set(out)) != len(out):
        problems.append(f"{path}: duplicate rows {list(rows)}")
    if not rows:
        problems.append(f"{path}: at least one angular row is required")
    return tuple(out)


def model_from_dict(data):
    """Build a RobotModel from a parsed model document.

    Every invariant is checked before anything is returned; all violations
    are reported together in a single :class:`ModelError`.
    """
    problems = []
    if not isinstance(data, dict):
        raise ModelError(["<root>: expected a mapping"])
    joints = []
    raw_joints = data.get("joints")
    if not isinstance(raw_joints, list) or not raw_joints:
        problems.append("joints: expected a non-empty list")
        raw_joints = []
    for i, jd in enumerate(raw_joints):
        path = f"joints[{i}]"
        if not isinstance(jd, dict):
            problems.append(f"{path}: expected a mapping")
            continue
        name = str(jd.get("name", f"q{i}"))
        path = f"joints[{i}] ({name})"
        w = _vec3(jd.get("omega"), f"{path}.omega", problems)
        v = _vec3(jd.get("v"), f"{path}.v", problems)
        if w is not None and abs(np.linalg.norm(w) - 1.0) > 1e-12:
            problems.append(f"{path}.omega: norm {np.linalg.norm(w):.6g} != 1")
        try:
            lo, hi, buf = (float(jd[key]) for key in ("q_min", "q_max", "buffer"))
        except KeyError as exc:
            problems.append(f"{path}.{exc.args[0]}: missing")
            continue
        except (TypeError, ValueError):
            problems.append(f"{path}: q_min, q_max and buffer must be numbers")
            continue
        if not lo < hi:
            problems.append(f"{path}: q_min {lo} must be below q_max {hi}")
        elif not 0.0 < buf < 0.5 * (hi - lo):
            problems.append(f"{path}.buffer: {buf} outside (0, {(hi - lo) / 2:g})")
        if w is not None and v is not None:
            joints.append(JointDef(name, ScrewAxis(w, v), lo, hi, buf))

    effectors = []
    raw_eff = data.get("effectors")
    if not isinstance(raw_eff, list) or not raw_eff:
        problems.append("effectors: expected a non-empty list")
        raw_eff = []
    n = len(raw_joints)
    names = set()
    for i, ed in enumerate(raw_eff):
        path = f"effectors[{i}]"
        if not isinstance(ed, dict):
            problems.append(f"{path}: expected a mapping")
            continue
        name = str(ed.get("name", ""))
        if not name:
            problems.append(f"{path}.name: missing")
        elif name in names:
            problems.append(f"{path}.name: duplicate effector {name!r}")
        names.add(name)
        cj = ed.get("joints", [])
        if (not isinstance(cj, list) or not cj
                or not all(isinstance(c, int) and 0 <= c < n for c in cj)):
            problems.append(f"{path}.joints: expected joint indices in [0, {n})")
            cj = []
        elif list(cj) != sorted(set(cj)):
            problems.append(f"{path}.joints: must be strictly increasing chain order")
        rows = _parse_rows(ed.get("rows", ["roll", "pitch", "yaw"]),
                           f"{path}.rows", problems)
        home = ed.get("home", {}) or {}
        pos = _vec3(home.get("position", [0, 0, 0]), f"{path}.home.position", problems)
        rot = np.asarray(home.get("rotation", np.eye(3)), dtype=float)
        if rot.shape != (3, 3):
            problems.append(f"{path}.home.rotation: expected 3x3")
            rot = np.eye(3)
        pose = Transform(rot, pos if pos is not None else np.zeros(3))
        if not pose.is_valid():
            problems.append(f"{path}.home.rotation: not a proper rotation")
        frame = ed.get("row_frame", "world")
        if frame not in ROW_FRAMES:
            problems.append(f"{path}.row_frame: expected one of "
                            f"{', '.join(ROW_FRAMES)}, got {frame!r}")
        effectors.append(EffectorDef(name, tuple(cj), rows, pose, frame))

    if problems:
        raise ModelError(problems)
    return RobotModel(tuple(joints), tuple(effectors), name=str(data.get("name", "robot")))


def model_to_dict(model):
    return {
        "name": model.name,
        "joints": [
            {"name": j.name, "omega": j.axis.omega.tolist(), "v": j.axis.v.tolist(),
             "q_min": j.q_min, "q_max": j.q_max, "buffer": j.buffer}
            for j in model.joints
        ],
        "effectors": [
            {"name": e.name, "joints": list(e.contributing_joints),
             "rows": list(e.row_selection), "row_frame": e.row_frame,
             "home": {"position": e.home_pose.translation.tolist(),
                      "rotation": e.home_pose.rotation.tolist()}}
            for e in model.effectors
        ],
    }


def load_model(path):
    path = Path(path)
    with path.open() as fh:
        return model_from_dict(yaml.safe_load(fh))
