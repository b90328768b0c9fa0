"""Coordinated reach of the mobile vehicle and the arm.

The end effector sits at reach ``R = l8 + l6 + l9 + l_ofs`` from the arm
pivot, which is raised ``h_base + l0`` above the vehicle datum. ``theta0``
is measured so that ``pi/2`` points the arm horizontally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import OutOfReach

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class CoordinationSetup:
    x_ofs: float = 100.0
    l_ofs: float = 50.0
    h_base: float = 300.0
    y_veh: float = 0.0
    l8: float = 150.0
    l6: float = 240.0
    l9: float = 45.0
    l0: float = 397.0
    pregrasp_theta0: float = HALF_PI

    def __post_init__(self):
        if not self.reach > 0:
            raise ValueError("reach l8 + l6 + l9 + l_ofs must be positive")

    @property
    def reach(self) -> float:
        return self.l8 + self.l6 + self.l9 + self.l_ofs


@dataclass(frozen=True)
class GraspPlan:
    theta0: float
    delta_h: float
    x_veh: float


def ee_position(setup: CoordinationSetup, theta0: float, x_veh: float) -> Tuple[float, float]:
    R = setup.reach
    ee_x = -x_veh - setup.x_ofs + R * math.cos(theta0 - HALF_PI)
    ee_y = -setup.y_veh + setup.h_base + setup.l0 + R * math.sin(theta0 - HALF_PI)
    return ee_x, ee_y


def reach_argument(setup: CoordinationSetup, ee_y: float) -> float:
    """Sine of ``theta0 - pi/2`` needed to hit height ``ee_y``."""
    return (ee_y + setup.y_veh - setup.h_base - setup.l0) / setup.reach


def plan_grasp(
    setup: CoordinationSetup,
    target: Tuple[float, float],
    pregrasp_theta0: Optional[float] = None,
) -> GraspPlan:
    """Arm angle, lift change and vehicle travel that place the end effector at ``target``.

    ``theta0`` uses the principal arcsine so it lies in ``[0, pi]``.
    ``delta_h`` is the target height minus the end-effector height at the
    pre-grasp arm angle (``setup.pregrasp_theta0`` unless given).
    """
    ee_x, ee_y = float(target[0]), float(target[1])
    arg = reach_argument(setup, ee_y)
    if not abs(arg) <= 1.0:
        raise OutOfReach(f"target height {ee_y!r} needs sine {arg!r} outside [-1, 1]")
    theta0 = math.asin(arg) + HALF_PI
    R = setup.reach
    x_veh = -ee_x - setup.x_ofs + R * math.cos(theta0 - HALF_PI)
    pre = setup.pregrasp_theta0 if pregrasp_theta0 is None else pregrasp_theta0
    delta_h = ee_y - ee_position(setup, pre, x_veh)[1]
    return GraspPlan(theta0, delta_h, x_veh)
