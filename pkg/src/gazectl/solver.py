"""Prioritized task resolution with smoothly inserted joint-limit tasks.

Operational tasks are resolved by recursive null-space projection: each task
only acts in the null space of every task above it. Joint limits enter as a
top-priority stack of unit rows whose desired values are Intermediate Desired
Values (IDV): a blend, weighted by the activation ``h``, between a pull
towards the joint centre and what the solver would have done without that
limit row. Because the blend collapses to the unconstrained motion at
``h = 0``, inserting or removing a limit row never makes ``dq`` jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_RCOND = 1e-8
SIGMA_FLOOR = 1e-12
DEFAULT_JOINT_GAIN = 0.001
ACTIVATION_MODES = ("smooth", "hard", "off")


@dataclass(frozen=True)
class Task:
    name: str
    jacobian: np.ndarray
    dx: np.ndarray
    priority: int = 0

    def __post_init__(self):
        J = np.atleast_2d(np.asarray(self.jacobian, dtype=float))
        dx = np.atleast_1d(np.asarray(self.dx, dtype=float))
        if J.shape[0] != dx.shape[0]:
            raise ValueError(f"task {self.name!r}: {J.shape[0]} jacobian rows "
                             f"but {dx.shape[0]} dx entries")
        object.__setattr__(self, "jacobian", J)
        object.__setattr__(self, "dx", dx)


@dataclass(frozen=True)
class JointLimitTask:
    joint_index: int
    n: int
    h: float
    dx_limit: float

    @property
    def row(self):
        r = np.zeros(self.n)
        r[self.joint_index] = 1.0
        return r


@dataclass
class SolverOutput:
    dq: np.ndarray
    per_task_dq: list
    task_names: list
    residuals: list
    active_limits: tuple = ()
    limit_dx: np.ndarray = field(default_factory=lambda: np.zeros(0))


def pseudoinverse(M, rcond=DEFAULT_RCOND, floor=SIGMA_FLOOR):
    """Truncated-SVD Moore-Penrose inverse.

    Singular values at or below ``max(rcond * sigma_max, floor)`` are
    discarded rather than damped.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros(M.shape[::-1])
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = max(rcond * s[0], floor) if s.size else floor
    keep = s > cutoff
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def nullspace_chain(jacobians, rcond=DEFAULT_RCOND):
    """Cumulative projectors ``N_[k]`` for a priority-ordered Jacobian list.

    ``N_[k] = N_[k-1] (I - (J_k N_[k-1])^+ (J_k N_[k-1]))`` with ``N_[0] = I``,
    so ``N_[k]`` annihilates the row spaces of tasks 1..k.
    """
    if not jacobians:
        return []
    n = np.atleast_2d(jacobians[0]).shape[1]
    I = np.eye(n)
    N = I
    out = []
    for J in jacobians:
        A = np.atleast_2d(J) @ N
        N = N @ (I - pseudoinverse(A, rcond) @ A)
        out.append(N)
    return out


def prioritized_dq(tasks, n, rcond=DEFAULT_RCOND):
    """Resolve ``tasks`` (highest priority first) into joint displacements."""
    I = np.eye(n)
    N = I
    dq = np.zeros(n)
    per_task = []
    for task in tasks:
        J = task.jacobian
        A = J @ N
        A_pinv = pseudoinverse(A, rcond)
        dq_k = A_pinv @ (task.dx - J @ dq)
        dq = dq + dq_k
        per_task.append(dq_k)
        N = N @ (I - A_pinv @ A)
    residuals = [float(np.linalg.norm(t.jacobian @ dq - t.dx)) for t in tasks]
    return SolverOutput(dq, per_task, [t.name for t in tasks], residuals)


def smoothstep_activation(q, q_min, q_max, buffer):
    """Vectorised activation: 1 at a limit, 0 outside the buffers, C1 between."""
    q = np.asarray(q, dtype=float)
    u = np.minimum((q - q_min) / buffer, (q_max - q) / buffer)
    u = np.clip(u, 0.0, 1.0)
    return 1.0 - u * u * (3.0 - 2.0 * u)


def activation_h(q_j, joint):
    return float(smoothstep_activation(q_j, joint.q_min, joint.q_max, joint.buffer))


def limit_dx(q_j, joint, k_j=DEFAULT_JOINT_GAIN):
    """Desired displacement of a limited joint: proportional pull to its centre."""
    return k_j * (joint.center - q_j)


def idv_dx(h, dx_limit, row, dq_without):
    return h * dx_limit + (1.0 - h) * float(np.asarray(row) @ dq_without)


def idv_prioritized_dq(n, limits, op_tasks, rcond=DEFAULT_RCOND):
    """IDV solve for an explicit list of limit tasks.

    ``limits`` are :class:`JointLimitTask` entries, all stacked as the top
    priority regardless of their ``h``. Each IDV needs the solution with that
    row removed, which recursively needs further removals; results are
    memoised on the set of rows still present, which bounds the work at
    ``2**m`` prioritized solves for ``m`` limits.
    """
    by_joint = {lim.joint_index: lim for lim in limits}
    memo = {}

    def solve(remaining):
        if remaining in memo:
            return memo[remaining]
        if not remaining:
            out = prioritized_dq(op_tasks, n, rcond) if op_tasks else \
                SolverOutput(np.zeros(n), [], [], [])
        else:
            rows = np.zeros((len(remaining), n))
            dx_i = np.empty(len(remaining))
            for r, j in enumerate(remaining):
                lim = by_joint[j]
                rows[r, j] = 1.0
                without = tuple(x for x in remaining if x != j)
                dx_i[r] = idv_dx(lim.h, lim.dx_limit, rows[r], solve(without).dq)
            top = Task("joint_limits", rows, dx_i)
            out = prioritized_dq([top, *op_tasks], n, rcond)
            out.limit_dx = dx_i
        memo[remaining] = out
        return out

    out = solve(tuple(sorted(by_joint)))
    out.active_limits = tuple((lim.joint_index, lim.h)
                              for lim in sorted(limits, key=lambda l: l.joint_index))
    return out


def solve_with_limits(model, q, op_tasks, k_joint=DEFAULT_JOINT_GAIN,
                      rcond=DEFAULT_RCOND, activation="smooth", h=None):
    """Joint-limit-aware prioritized solve.

    Every joint with ``h > 0`` contributes a row to the top-priority limit
    stack; ``op_tasks`` follow in the given order. ``activation`` selects the
    smooth IDV blend, a hard switch (``h`` snapped to 1 inside the buffer), or
    no limit handling at all. Passing ``h`` overrides the computed activations.
    """
    if activation not in ACTIVATION_MODES:
        raise ValueError(f"activation must be one of {ACTIVATION_MODES}")
    q = np.asarray(q, dtype=float)
    n = model.n
    if h is None:
        h = smoothstep_activation(q, model.q_min, model.q_max,
                                  model.buffers)
    h = np.asarray(h, dtype=float)
    if activation == "hard":
        h = np.where(h > 0.0, 1.0, 0.0)
    limits = []
    if activation != "off":
        for j, joint in enumerate(model.joints):
            if h[j] > 0.0:
                limits.append(JointLimitTask(j, n, float(h[j]),
                                             limit_dx(q[j], joint, k_joint)))
    return idv_prioritized_dq(n, limits, list(op_tasks), rcond)
