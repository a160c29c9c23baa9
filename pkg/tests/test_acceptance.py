"""Acceptance criteria, one check per criterion.

Each check returns ``(passed, detail)``. Under pytest every criterion is a
test and its PASS/FAIL line is echoed in the terminal summary; running this
file directly prints the same lines.
"""

import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gazectl.kinematics import dreamer_model, spatial_jacobian  # noqa: E402
from gazectl.orientation import (UnitQuaternion, gaze_frame, quat_error,  # noqa: E402
                                 quat_multiply)
from gazectl.simulator import (EffectorTask, FixedPoint, bundled_scenario_path,  # noqa: E402
                               bundled_scenarios, gaze_task, load_scenario, run)
from gazectl.solver import (Task, nullspace_chain, prioritized_dq,  # noqa: E402
                            solve_with_limits)
from gazectl.trajectory import MinJerkSegment, min_jerk_coeffs  # noqa: E402

from oracles import DREAMER_AXES, fd_spatial_column, min_jerk_symbolic  # noqa: E402

RESULTS = []
SEED = 20240501


@lru_cache(maxsize=None)
def bundled_run(name):
    sc = load_scenario(bundled_scenario_path(name))
    t0 = time.perf_counter()
    log = run(sc)
    return sc, log, time.perf_counter() - t0


def episodes(active):
    """Rising edges of a boolean series."""
    a = np.concatenate([[False], active])
    return int(np.sum(a[1:] & ~a[:-1]))


def c1_jacobian_fd():
    m = dreamer_model()
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(m.q_min, m.q_max)
        J = spatial_jacobian(m, q)
        for i in range(m.n):
            for eff in m.effectors:
                if i in eff.contributing_joints:
                    col = fd_spatial_column(q, i, eff.name, eps=1e-7)
                    worst = max(worst, np.abs(col - J[:, i]).max())
    elapsed = time.perf_counter() - t0
    return worst < 1e-5 and elapsed < 5.0, f"max |J - J_fd| = {worst:.2e}, {elapsed:.2f} s"


def c2_screw_regression():
    J = spatial_jacobian(dreamer_model(), np.zeros(7))
    diff = np.abs(J - DREAMER_AXES).max()
    return bool(np.array_equal(J, DREAMER_AXES)), f"max deviation {diff:.1e}"


def c3_priority_invariance():
    rng = np.random.default_rng(SEED)
    worst_top = worst_idem = worst_null = 0.0
    for trial in range(100):
        k = 2 + trial % 2
        tasks = []
        for j in range(k):
            r = int(rng.integers(1, 4))
            tasks.append(Task(f"t{j}", rng.normal(size=(r, 7)), rng.normal(size=r), j))
        solo = prioritized_dq(tasks[:1], 7).dq
        full = prioritized_dq(tasks, 7).dq
        J1 = tasks[0].jacobian
        worst_top = max(worst_top, np.abs(J1 @ full - J1 @ solo).max())
        Ns = nullspace_chain([t.jacobian for t in tasks])
        for idx, N in enumerate(Ns):
            worst_idem = max(worst_idem, np.abs(N @ N - N).max())
            for t in tasks[:idx + 1]:
                worst_null = max(worst_null, np.abs(t.jacobian @ N).max())
    ok = max(worst_top, worst_idem, worst_null) < 1e-8
    return ok, (f"top-task drift {worst_top:.1e}, |N^2-N| {worst_idem:.1e}, "
                f"|J N| {worst_null:.1e}")


def _sweep(mode):
    m = dreamer_model()
    j = 5
    edge = m.joints[j].q_max - m.joints[j].buffer
    q = np.zeros(7)
    q[5], q[6] = edge, -0.06
    target = np.array([1.0, 0.9, 0.5])
    specs = [EffectorTask("right_eye", 1, FixedPoint(target), fixed_vector="current"),
             EffectorTask("left_eye", 2, FixedPoint(target), fixed_vector="current"),
             EffectorTask("head", 3, FixedPoint(np.array([1.0, -0.3, 0.2])))]
    # tasks frozen at the reference configuration: only limit handling varies
    ops = [gaze_task(m, q, t, t.source.point) for t in specs]
    values = edge + np.arange(-200, 201) * 1e-4
    dqs = []
    for v in values:
        qq = q.copy()
        qq[j] = v
        dqs.append(solve_with_limits(m, qq, ops, activation=mode).dq)
    change = np.abs(np.diff(np.array(dqs), axis=0)).max(axis=1)
    in_region = change[values[1:] > edge]
    return change.max(), float(np.median(in_region))


def c4_idv_continuity():
    smooth_max, smooth_med = _sweep("smooth")
    hard_max, hard_med = _sweep("hard")
    r_smooth = smooth_max / smooth_med
    r_hard = hard_max / hard_med
    # contrast run judged against the smooth run's in-region median as well
    r_hard_vs_smooth = hard_max / smooth_med
    ok = r_smooth < 10 and r_hard > 100 and r_hard_vs_smooth > 100
    return ok, (f"smooth max/median {r_smooth:.2f}, hard {r_hard:.2e} "
                f"({r_hard_vs_smooth:.0f}x the smooth median)")


def c5_fig5():
    sc, log, elapsed = bundled_run("fig5_fixed_eye_head_square")
    eye_err = max(log.cartesian["right_eye"].max(), log.cartesian["left_eye"].max())
    saturated = (log.h[:, 4:] >= 0.5).any(axis=1)
    head_sat = log.cartesian["head"][saturated].max() if saturated.any() else 0.0
    head_path = next(t.source for t in sc.tasks if t.effector == "head")
    arrivals = head_path.arrival_times
    laps = (len(arrivals) - 3) // 4
    eye_active = (log.h[:, 4:] > 0)
    per_lap = []
    for k in range(laps):
        window = (log.t >= arrivals[1 + 4 * k]) & (log.t < arrivals[1 + 4 * (k + 1)])
        per_lap.append(sum(episodes(eye_active[window, c]) for c in range(3)))
    ok = (eye_err < 1e-3 and head_sat > 0.01 and min(per_lap) >= 2 and elapsed < 10.0
          and abs(log.t[-1] - 60.0) < 1e-9)
    return ok, (f"eye max {eye_err:.2e} m, head during saturation {head_sat:.3f} m, "
                f"episodes per lap {per_lap}, {elapsed:.1f} s")


def c6_fig4a():
    _, log, _ = bundled_run("fig4a_feasible")
    after = log.t > 1.0
    errs = {e: log.cartesian[e][after].max() for e in log.effectors}
    worst = max(errs.values())
    return worst < 1e-3, ", ".join(f"{e} {v:.2e} m" for e, v in errs.items())


def c7_vor():
    sc, log, _ = bundled_run("vor_perturbation")
    amps = {p.amplitude for p in sc.perturbations}
    freqs = {p.frequency for p in sc.perturbations}
    joints = sorted(p.joint for p in sc.perturbations)
    after = log.t > 1.0
    worst = max(log.angular[e][after].max() for e in ("right_eye", "left_eye"))
    ok = worst < 5e-3 and amps == {0.2} and freqs == {0.5} and joints == [0, 1, 2, 3]
    return ok, f"max eye angular error after 1 s {worst:.2e} rad"


def c8_min_jerk():
    expected = np.array([float(c) for c in min_jerk_symbolic()])
    got = min_jerk_coeffs([0, 1, 0, 0, 0, 0], 0.0, 1.0)
    coeff_err = np.abs(got - expected).max()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(100):
        t_i = rng.uniform(-3, 3)
        T = rng.uniform(0.2, 3)
        b = rng.normal(size=6)
        a = MinJerkSegment.from_boundary(b, t_i, t_i + T).coeffs[:, 0]
        ks = np.arange(6)
        pos = lambda tau: np.sum(a * tau ** ks)
        vel = lambda tau: np.sum(ks[1:] * a[1:] * tau ** (ks[1:] - 1))
        acc = lambda tau: np.sum(ks[2:] * (ks[2:] - 1) * a[2:] * tau ** (ks[2:] - 2))
        got_b = [pos(0), pos(T), vel(0), vel(T), acc(0), acc(T)]
        worst = max(worst, np.abs(np.array(got_b) - b).max())
    ok = coeff_err < 1e-9 and worst < 1e-9
    return ok, f"coefficient error {coeff_err:.1e}, boundary error {worst:.1e}"


def c9_limits_determinism():
    notes = []
    ok = True
    for name in bundled_scenarios():
        sc, log, _ = bundled_run(name)
        inside = bool(np.all(log.q >= sc.model.q_min) and np.all(log.q <= sc.model.q_max))
        again = run(sc)
        same = all(np.array_equal(getattr(log, f), getattr(again, f))
                   for f in ("t", "q", "dq", "h"))
        same = same and all(np.array_equal(log.cartesian[e], again.cartesian[e])
                            for e in log.effectors)
        ok = ok and inside and same
        if not (inside and same):
            notes.append(f"{name}: inside={inside} identical={same}")
    return ok, "; ".join(notes) or f"{len(bundled_scenarios())} scenarios within limits, bit-identical"


def c10_orientation():
    rng = np.random.default_rng(SEED)
    worst_q = 0.0
    for _ in range(1000):
        qc, qd = (UnitQuaternion.from_array(v / np.linalg.norm(v))
                  for v in rng.normal(size=(2, 4)))
        prod = quat_multiply(quat_error(qc, qd).array, qc.array)
        worst_q = max(worst_q, min(np.abs(prod - qd.array).max(),
                                   np.abs(prod + qd.array).max()))
    worst_f = 0.0
    for _ in range(1000):
        p_c, p_d = rng.uniform(-2, 2, size=(2, 3))
        R = gaze_frame(p_c, p_d).rotation
        worst_f = max(worst_f, np.abs(R.T @ R - np.eye(3)).max(),
                      abs(np.linalg.det(R) - 1.0),
                      np.abs(np.cross(R[:, 0], R[:, 1]) - R[:, 2]).max())
    ok = worst_q < 1e-10 and worst_f < 1e-10
    return ok, f"composition error {worst_q:.1e}, frame error {worst_f:.1e}"


CRITERIA = [
    ("1 Jacobian vs finite differences", c1_jacobian_fd),
    ("2 screw-axis regression", c2_screw_regression),
    ("3 priority invariance and projectors", c3_priority_invariance),
    ("4 IDV continuity", c4_idv_continuity),
    ("5 fixed eyes, head square", c5_fig5),
    ("6 feasible dual squares", c6_fig4a),
    ("7 VOR", c7_vor),
    ("8 minimum jerk", c8_min_jerk),
    ("9 limits and determinism", c9_limits_determinism),
    ("10 orientation algebra", c10_orientation),
]


def report(label, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {label}: {detail}"
    RESULTS.append(line)
    print(line)
    return line


@pytest.mark.parametrize("label, check", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(label, check):
    passed, detail = check()
    report(label, passed, detail)
    assert passed, detail


if __name__ == "__main__":
    failures = 0
    for label, check in CRITERIA:
        passed, detail = check()
        report(label, passed, detail)
        failures += not passed
    sys.exit(1 if failures else 0)
