"""Prioritized multi-fixation gaze control for head-eye robots."""

from .kinematics import (EffectorDef, JointDef, Kinematics, ModelError, RobotModel,
                         ScrewAxis, Transform, adjoint, dreamer_model, exp_twist,
                         forward_kinematics, load_model, row_frame_rotation,
                         spatial_jacobian, task_jacobian)
from .orientation import (DegenerateFixation, GazeFrame, ParallelFixedVector,
                          UnitQuaternion, axis_angle, gaze_frame, gaze_task_dx,
                          quat_error, rotation_error)
from .simulator import (Scenario, ScenarioError, SimLog, gaze_error, load_scenario, run,
                        step)
from .solver import (SolverOutput, Task, activation_h, idv_dx, limit_dx,
                     nullspace_chain, prioritized_dq, pseudoinverse, solve_with_limits)
from .trajectory import (DegenerateDuration, MinJerkSegment, WaypointPath,
                         eval_segment, min_jerk_coeffs, sample_fixation)

__version__ = "0.1.0"
