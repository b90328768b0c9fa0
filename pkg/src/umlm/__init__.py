"""Kinematics, contact forces and dimensional synthesis of an underactuated
metamorphic loading manipulator."""

__version__ = "0.1.0"

from .arm import ArmGeometry, ArmState, Phase, arm_accels, arm_rates, simulate_trajectory, slider_map, solve_arm_position
from .coordination import CoordinationSetup, GraspPlan, ee_position, plan_grasp
from .errors import UMLMError
from .gripper import (
    CouplingGeometry,
    CrossSectionState,
    FingerGeometry,
    FingerState,
    cross_section_constraints,
    gripper_input_height,
    solve_coupling,
    solve_cross_section,
    solve_finger,
    transmission_angle,
)
from .kinetostatics import (
    ContactDistances,
    ContactForces,
    JointTorques,
    KnuckleAngles,
    SegmentLengths,
    SpringParams,
    contact_forces,
    contact_points,
    force_surface,
    spring_torques,
    virtual_work_oracle,
)
from .numerics import NewtonSettings, SolveReport, fd_jacobian, solve_newton
from .pso import Bounds, DesignVector, ObjectiveContext, PsoConfig, RunResult, multi_run, objective_phi, pso_minimize
