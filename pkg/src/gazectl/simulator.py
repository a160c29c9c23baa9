"""Closed-loop kinematic simulation of prioritized gaze tasks.

Each step samples every effector's fixation target, turns it into an
orientation task, resolves all tasks with the joint-limit-aware solver and
integrates ``q <- clamp(q + dq)``. External head perturbations are applied
at the start of the step, before the controller looks at the configuration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .kinematics import (Kinematics, ModelError, forward_kinematics, load_model,
                         model_from_dict, row_frame_rotation, task_jacobian)
from .orientation import (WORLD_Y, WORLD_Z, DegenerateFixation, ParallelFixedVector,
                          gaze_frame, gaze_task_dx, quat_error, quat_from_rotation)
from .solver import (ACTIVATION_MODES, DEFAULT_JOINT_GAIN, DEFAULT_RCOND, Task,
                     smoothstep_activation, solve_with_limits)
from .trajectory import WaypointPath

BUILTIN_PREFIX = "builtin:"


class ScenarioError(ValueError):
    """Scenario validation failure; ``problems`` holds one entry per field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# -- scenario description ----------------------------------------------------

@dataclass(frozen=True)
class FixedPoint:
    point: np.ndarray

    def sample(self, t):
        return self.point.copy()


@dataclass(frozen=True)
class Perturbation:
    """Displacement signal added to one joint; sinusoid or sampled series."""

    joint: int
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    def offset(self, t):
        if self.times is not None:
            return float(np.interp(t, self.times, self.values))
        return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t + self.phase)


@dataclass(frozen=True)
class EffectorTask:
    effector: str
    priority: int
    source: object  # FixedPoint | WaypointPath
    gain: float = 1.0
    # a 3-vector, or "current" to use the effector's own k axis
    fixed_vector: object = field(default_factory=lambda: WORLD_Z.copy())

    @property
    def name(self):
        return f"{self.effector}_gaze"


@dataclass(frozen=True)
class Scenario:
    name: str
    model: object
    tasks: tuple
    dt: float = 0.01
    duration: float = 10.0
    perturbations: tuple = ()
    joint_gain: float = DEFAULT_JOINT_GAIN
    rcond: float = DEFAULT_RCOND
    limits: str = "smooth"
    initial_q: np.ndarray | None = None

    @property
    def steps(self):
        return math.ceil(self.duration / self.dt - 1e-9)

    def q0(self):
        if self.initial_q is None:
            return np.zeros(self.model.n)
        return np.asarray(self.initial_q, dtype=float).copy()

    def perturbation_offset(self, t):
        d = np.zeros(self.model.n)
        for p in self.perturbations:
            d[p.joint] += p.offset(t)
        return d


@dataclass(frozen=True)
class SimState:
    t: float
    q: np.ndarray


@dataclass(frozen=True)
class GazeErrorSample:
    angular: float
    cartesian: float


def gaze_error(frame, p_d, eps_dist=1e-6):
    """Angular and Cartesian miss of an effector's gaze ray w.r.t. ``p_d``.

    The Cartesian error is measured at the fixation depth along the current
    gaze axis (the frame's first column).
    """
    origin = frame.translation
    p_dc = np.asarray(p_d, dtype=float) - origin
    depth = np.linalg.norm(p_dc)
    if depth <= eps_dist:
        raise DegenerateFixation(f"fixation point {list(p_d)} at the effector origin")
    i_c = frame.rotation[:, 0]
    cos = float(np.clip(i_c @ p_dc / depth, -1.0, 1.0))
    return GazeErrorSample(math.acos(cos),
                           float(np.linalg.norm(p_dc - depth * i_c)))


# -- one control step --------------------------------------------------------

@dataclass
class StepRecord:
    t: float
    q: np.ndarray
    dq: np.ndarray
    h: np.ndarray
    desired: dict
    direction: dict
    cartesian: dict
    angular: dict
    residuals: dict
    active_limits: tuple


def gaze_task(model, q, task, p_d, kin=None):
    """Orientation task steering ``task.effector``'s gaze axis toward ``p_d``."""
    if kin is None:
        kin = Kinematics(model, q)
    T = kin.pose(task.effector)
    R_c = T.rotation
    f_o = R_c[:, 2] if isinstance(task.fixed_vector, str) else task.fixed_vector
    try:
        frame = gaze_frame(T.translation, p_d, f_o)
    except ParallelFixedVector:
        frame = gaze_frame(T.translation, p_d, WORLD_Y)
    q_e = quat_error(quat_from_rotation(R_c), quat_from_rotation(frame.rotation))
    dx = gaze_task_dx(q_e, task.gain)
    eff = model.effector(task.effector)
    rotation = None
    if eff.row_frame != "world":
        rotation = row_frame_rotation(model, q, task.effector, kin)
        dx = rotation.T @ dx
    J = task_jacobian(model, q, task.effector, kin.jacobian, rotation)
    return Task(task.name, J, dx[list(eff.row_selection)], task.priority)


def step(scenario, state):
    """Advance ``state`` by one ``dt``; returns the new state and its record."""
    model = scenario.model
    t1 = state.t + scenario.dt
    q = state.q
    if scenario.perturbations:
        q = model.clamp(q + scenario.perturbation_offset(t1)
                        - scenario.perturbation_offset(state.t))

    kin = Kinematics(model, q)
    targets = {}
    op_tasks = []
    for task in scenario.tasks:
        p_d = task.source.sample(t1)
        targets[task.effector] = p_d
        op_tasks.append(gaze_task(model, q, task, p_d, kin))

    h = smoothstep_activation(q, model.q_min, model.q_max,
                              model.buffers)
    out = solve_with_limits(model, q, op_tasks, k_joint=scenario.joint_gain,
                            rcond=scenario.rcond, activation=scenario.limits, h=h)
    q_new = model.clamp(q + out.dq)

    rec = StepRecord(t1, q_new, out.dq, h if scenario.limits != "off" else np.zeros_like(h),
                     {}, {}, {}, {}, dict(zip(out.task_names, out.residuals)),
                     out.active_limits)
    kin_new = Kinematics(model, q_new)
    for task in scenario.tasks:
        frame = kin_new.pose(task.effector)
        err = gaze_error(frame, targets[task.effector])
        rec.desired[task.effector] = targets[task.effector]
        rec.direction[task.effector] = frame.rotation[:, 0].copy()
        rec.cartesian[task.effector] = err.cartesian
        rec.angular[task.effector] = err.angular
    return SimState(t1, q_new), rec


# -- logs --------------------------------------------------------------------

@dataclass
class SimLog:
    name: str
    joint_names: list
    effectors: list
    t: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    h: np.ndarray
    desired: dict
    direction: dict
    cartesian: dict
    angular: dict
    residuals: dict
    limit_residual: np.ndarray

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_records(cls, scenario, records):
        effs = [t.effector for t in scenario.tasks]
        names = [t.name for t in scenario.tasks]
        col = lambda attr, e: np.array([getattr(r, attr)[e] for r in records])
        return cls(
            name=scenario.name,
            joint_names=[j.name for j in scenario.model.joints],
            effectors=effs,
            t=np.array([r.t for r in records]),
            q=np.array([r.q for r in records]).reshape(len(records), scenario.model.n),
            dq=np.array([r.dq for r in records]).reshape(len(records), scenario.model.n),
            h=np.array([r.h for r in records]).reshape(len(records), scenario.model.n),
            desired={e: col("desired", e).reshape(-1, 3) for e in effs},
            direction={e: col("direction", e).reshape(-1, 3) for e in effs},
            cartesian={e: col("cartesian", e) for e in effs},
            angular={e: col("angular", e) for e in effs},
            residuals={n: np.array([r.residuals[n] for r in records]) for n in names},
            limit_residual=np.array([r.residuals.get("joint_limits", 0.0) for r in records]),
        )

    def table(self):
        """Header and row matrix of the CSV log."""
        n = self.q.shape[1]
        header = ["t"] + [f"q_{i}" for i in range(n)] + [f"h_{i}" for i in range(n)]
        cols = [self.t[:, None], self.q, self.h]
        for e in self.effectors:
            header += [f"{e}_desired_{a}" for a in "xyz"]
            header += [f"{e}_direction_{a}" for a in "xyz"]
            header += [f"{e}_cartesian_error", f"{e}_angular_error"]
            cols += [self.desired[e], self.direction[e],
                     self.cartesian[e][:, None], self.angular[e][:, None]]
        for name, res in self.residuals.items():
            header.append(f"{name}_residual")
            cols.append(res[:, None])
        header.append("joint_limits_residual")
        cols.append(self.limit_residual[:, None])
        return header, np.hstack(cols)

    def write_csv(self, path):
        header, data = self.table()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in data:
                w.writerow([repr(float(x)) for x in row])


def run(scenario):
    state = SimState(0.0, scenario.model.clamp(scenario.q0()))
    records = []
    for k in range(scenario.steps):
        state, rec = step(scenario, state)
        # re-anchor time on the step index so timestamps never drift
        state = SimState((k + 1) * scenario.dt, state.q)
        rec.t = state.t
        records.append(rec)
    return SimLog.from_records(scenario, records)


# -- scenario files ----------------------------------------------------------

def builtin_model():
    ref = resources.files("gazectl") / "data" / "dreamer.yaml"
    with ref.open() as fh:
        return model_from_dict(yaml.safe_load(fh))


def bundled_scenarios():
    root = resources.files("gazectl") / "data" / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def bundled_scenario_path(name):
    return Path(str(resources.files("gazectl") / "data" / "scenarios" / f"{name}.yaml"))


def _number(value, path, problems, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{path}: expected a number, got {value!r}")
        return None
    value = float(value)
    if not math.isfinite(value):
        problems.append(f"{path}: must be finite")
    elif positive and value <= 0:
        problems.append(f"{path}: must be > 0 (got {value:g})")
    elif nonneg and value < 0:
        problems.append(f"{path}: must be >= 0 (got {value:g})")
    return value


def _point(value, path, problems):
    arr = np.asarray(value, dtype=float) if isinstance(value, list) else None
    if arr is None or arr.shape != (3,) or not np.all(np.isfinite(arr)):
        problems.append(f"{path}: expected [x, y, z], got {value!r}")
        return None
    return arr


def _fixation(spec, path, problems):
    if not isinstance(spec, dict):
        problems.append(f"{path}: expected {{point: ...}} or {{waypoints: ...}}")
        return None
    if "point" in spec:
        p = _point(spec["point"], f"{path}.point", problems)
        return FixedPoint(p) if p is not None else None
    if "waypoints" in spec:
        wps = spec["waypoints"]
        if not isinstance(wps, list) or len(wps) < 2:
            problems.append(f"{path}.waypoints: need at least two points")
            return None
        pts = [_point(w, f"{path}.waypoints[{i}]", problems) for i, w in enumerate(wps)]
        if any(p is None for p in pts):
            return None
        try:
            return WaypointPath(np.array(pts), spec.get("durations", 1.0),
                                spec.get("dwell", 0.0))
        except ValueError as exc:
            problems.append(f"{path}: {exc}")
            return None
    problems.append(f"{path}: expected a 'point' or 'waypoints' entry")
    return None


def _joint_index(value, model, path, problems):
    names = [j.name for j in model.joints]
    if isinstance(value, str) and value in names:
        return names.index(value)
    if isinstance(value, int) and not isinstance(value, bool) and 0 <= value < model.n:
        return value
    problems.append(f"{path}: unknown joint {value!r}")
    return None


def scenario_from_dict(data, base_dir=".", overrides=None):
    """Validate a parsed scenario document and build a :class:`Scenario`.

    ``overrides`` may set ``dt``, ``duration``, ``task_gain``, ``joint_gain``
    or ``sigma_min``; they replace file values before validation so that a
    bad override is reported against its field.
    """
    if not isinstance(data, dict):
        raise ScenarioError(["<root>: expected a mapping"])
    data = dict(data)
    gains = dict(data.get("gains") or {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("dt", "duration"):
            data[key] = value
        elif key == "task_gain":
            gains["task"] = value
        elif key in ("joint_gain", "sigma_min"):
            gains["joint_limit" if key == "joint_gain" else key] = value
        else:
            raise KeyError(f"unknown override {key!r}")
    problems = []

    model_ref = str(data.get("model_path", BUILTIN_PREFIX + "dreamer"))
    try:
        if model_ref.startswith(BUILTIN_PREFIX):
            if model_ref != BUILTIN_PREFIX + "dreamer":
                raise FileNotFoundError(model_ref)
            model = builtin_model()
        else:
            mp = Path(model_ref)
            model = load_model(mp if mp.is_absolute() else Path(base_dir) / mp)
    except FileNotFoundError:
        raise ScenarioError([f"model_path: file not found: {model_ref}"]) from None
    except ModelError as exc:
        raise ScenarioError([f"model_path: {p}" for p in exc.problems]) from None

    dt = _number(data.get("dt", 0.01), "dt", problems, positive=True)
    duration = _number(data.get("duration", 10.0), "duration", problems, positive=True)
    task_gain = _number(gains.get("task", 1.0), "gains.task", problems, positive=True)
    joint_gain = _number(gains.get("joint_limit", DEFAULT_JOINT_GAIN),
                         "gains.joint_limit", problems, nonneg=True)
    rcond = _number(gains.get("sigma_min", DEFAULT_RCOND), "gains.sigma_min",
                    problems, positive=True)
    limits = data.get("limits", "smooth")
    if limits not in ACTIVATION_MODES:
        problems.append(f"limits: expected one of {', '.join(ACTIVATION_MODES)}, "
                        f"got {limits!r}")

    q0 = None
    if data.get("initial_q") is not None:
        raw = data["initial_q"]
        if not isinstance(raw, list) or len(raw) != model.n:
            problems.append(f"initial_q: expected {model.n} joint values")
        else:
            q0 = np.asarray(raw, dtype=float)
            bad = np.flatnonzero((q0 < model.q_min) | (q0 > model.q_max))
            for j in bad:
                problems.append(f"initial_q[{j}]: {q0[j]:g} outside "
                                f"[{model.q_min[j]:g}, {model.q_max[j]:g}]")

    tasks = []
    raw_tasks = data.get("tasks") or []
    if not isinstance(raw_tasks, list):
        problems.append("tasks: expected a list")
        raw_tasks = []
    seen_prio = {}
    effector_names = {e.name for e in model.effectors}
    for i, td in enumerate(raw_tasks):
        path = f"tasks[{i}]"
        if not isinstance(td, dict):
            problems.append(f"{path}: expected a mapping")
            continue
        eff = td.get("effector")
        if eff not in effector_names:
            problems.append(f"{path}.effector: unknown effector {eff!r}")
        prio = td.get("priority")
        if isinstance(prio, bool) or not isinstance(prio, int):
            problems.append(f"{path}.priority: expected an integer, got {prio!r}")
        elif prio in seen_prio:
            problems.append(f"{path}.priority: {prio} duplicates tasks[{seen_prio[prio]}]")
        else:
            seen_prio[prio] = i
        source = _fixation(td.get("fixation"), f"{path}.fixation", problems)
        gain = task_gain
        if "gain" in td:
            gain = _number(td["gain"], f"{path}.gain", problems, positive=True)
        fv = td.get("fixed_vector", [0.0, 0.0, 1.0])
        if fv != "current":
            fv = _point(fv, f"{path}.fixed_vector", problems)
            if fv is not None:
                if np.linalg.norm(fv) == 0:
                    problems.append(f"{path}.fixed_vector: must be nonzero")
                else:
                    fv = fv / np.linalg.norm(fv)
        if source is not None and eff in effector_names and isinstance(prio, int):
            tasks.append(EffectorTask(eff, prio, source, gain if gain else 1.0, fv))

    perts = []
    raw_p = data.get("perturbation") or []
    if not isinstance(raw_p, list):
        problems.append("perturbation: expected a list")
        raw_p = []
    for i, pd in enumerate(raw_p):
        path = f"perturbation[{i}]"
        if not isinstance(pd, dict):
            problems.append(f"{path}: expected a mapping")
            continue
        j = _joint_index(pd.get("joint"), model, f"{path}.joint", problems)
        if "times" in pd or "values" in pd:
            times = np.asarray(pd.get("times", []), dtype=float)
            values = np.asarray(pd.get("values", []), dtype=float)
            if times.ndim != 1 or times.shape != values.shape or times.size < 1:
                problems.append(f"{path}: times and values must be equal-length lists")
            elif np.any(np.diff(times) <= 0):
                problems.append(f"{path}.times: must be strictly increasing")
            elif j is not None:
                perts.append(Perturbation(j, times=times, values=values))
        else:
            amp = _number(pd.get("amplitude", 0.0), f"{path}.amplitude", problems)
            freq = _number(pd.get("frequency", 0.0), f"{path}.frequency", problems,
                           nonneg=True)
            phase = _number(pd.get("phase", 0.0), f"{path}.phase", problems)
            if j is not None and None not in (amp, freq, phase):
                perts.append(Perturbation(j, amp, freq, phase))

    if problems:
        raise ScenarioError(problems)

    scenario = Scenario(
        name=str(data.get("name", "scenario")),
        model=model,
        tasks=tuple(sorted(tasks, key=lambda t: t.priority)),
        dt=dt, duration=duration, perturbations=tuple(perts),
        joint_gain=joint_gain, rcond=rcond, limits=limits, initial_q=q0)

    geometry = []
    q_start = scenario.q0()
    for i, task in enumerate(scenario.tasks):
        origin = forward_kinematics(model, q_start, task.effector).translation
        if np.linalg.norm(task.source.sample(0.0) - origin) <= 1e-6:
            geometry.append(f"tasks[{i}].fixation: starts at the {task.effector} origin")
    if geometry:
        raise ScenarioError(geometry)
    return scenario


def load_scenario(path, overrides=None):
    path = Path(path)
    with path.open() as fh:
        data = yaml.safe_load(fh)
    return scenario_from_dict(data, base_dir=path.parent, overrides=overrides)


def with_limits(scenario, mode):
    return replace(scenario, limits=mode)
