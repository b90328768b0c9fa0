"""Closed-loop kinematics of the single-motor metamorphic arm.

The arm loop ``l2 + l3 + l7 = l1 + l0 + l8`` is solved for two free angles
while a third is held by the active topology:

* ``Phase.LIFTING``  -- slider locked, ``theta4`` held, ``(theta0, theta2)`` free
* ``Phase.GRASPING`` -- arm base held, ``theta0`` held, ``(theta2, theta4)`` free

The motor angle ``theta1`` is the input in both phases and turns at a
constant rate, so ``d(omega1)/dt = 0`` throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError, NoConvergence, SingularJacobian, SolverError
from .numerics import NewtonSettings, solve_newton

DET_LIMIT = 1e-12

# (theta0, theta2) on the assembly branch used for the loading sequence; valid
# for the default geometry around theta1 = 1 rad.
DEFAULT_LIFTING_GUESS = (0.44, -1.32)


class Phase(str, enum.Enum):
    LIFTING = "lifting"
    GRASPING = "grasping"


@dataclass(frozen=True)
class ArmGeometry:
    """Arm link lengths in mm (``l6`` is the slider state, not a length)."""

    l0: float = 397.0
    l1: float = 181.0
    l2: float = 130.0
    l3: float = 180.0
    l4: float = 160.0
    l5: float = 58.0
    l7: float = 100.0
    l8: float = 150.0

    def __post_init__(self):
        for name in ("l0", "l1", "l2", "l3", "l4", "l5", "l7", "l8"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.l5 < self.l7 + self.l4:
            raise ValueError("l5 must be smaller than l7 + l4")


@dataclass(frozen=True)
class ArmState:
    theta0: float
    theta1: float
    theta2: float
    theta4: float
    omega0: float = 0.0
    omega1: float = 0.0
    omega2: float = 0.0
    omega4: float = 0.0
    beta0: float = 0.0
    beta2: float = 0.0
    beta4: float = 0.0
    l6: float = math.nan
    l6_rate: float = math.nan
    l6_accel: float = math.nan


def loop_residual(geom: ArmGeometry, theta0, theta1, theta2, theta4) -> np.ndarray:
    """x/y projections of the arm loop, left side minus right side (mm)."""
    g = geom
    t12 = theta1 + theta2
    t04 = theta0 - theta4
    x = g.l2 * np.cos(theta1) - g.l3 * np.cos(t12) - g.l7 * np.sin(t04) + g.l1 - g.l8 * np.sin(theta0)
    y = g.l2 * np.sin(theta1) - g.l3 * np.sin(t12) + g.l7 * np.cos(t04) - g.l0 + g.l8 * np.cos(theta0)
    return np.array([x, y])


def state_residual(geom: ArmGeometry, state: ArmState) -> np.ndarray:
    return loop_residual(geom, state.theta0, state.theta1, state.theta2, state.theta4)


def _partials(geom: ArmGeometry, theta0, theta1, theta2, theta4):
    g = geom
    s12, c12 = math.sin(theta1 + theta2), math.cos(theta1 + theta2)
    s04, c04 = math.sin(theta0 - theta4), math.cos(theta0 - theta4)
    d0 = (-g.l7 * c04 - g.l8 * math.cos(theta0), -g.l7 * s04 - g.l8 * math.sin(theta0))
    d2 = (g.l3 * s12, -g.l3 * c12)
    d4 = (g.l7 * c04, g.l7 * s04)
    return d0, d2, d4


def solve_arm_position(
    geom: ArmGeometry,
    theta1: float,
    phase: Phase,
    held_angle: float,
    guess: Sequence[float],
    settings: Optional[NewtonSettings] = None,
) -> ArmState:
    """Solve the arm loop for the free angle pair of ``phase``.

    ``held_angle`` is ``theta4`` when lifting and ``theta0`` when grasping;
    ``guess`` is the free pair in the same order as it is returned
    (``(theta0, theta2)`` or ``(theta2, theta4)``) and selects the branch.
    """
    phase = Phase(phase)
    if phase is Phase.LIFTING:
        def unpack(v):
            return v[0], theta1, v[1], held_angle
    else:
        def unpack(v):
            return held_angle, theta1, v[0], v[1]

    def residual(v):
        return loop_residual(geom, *unpack(v))

    def jacobian(v):
        d0, d2, d4 = _partials(geom, *unpack(v))
        cols = (d0, d2) if phase is Phase.LIFTING else (d2, d4)
        return np.array(cols).T

    report = solve_newton(residual, guess, settings, jacobian=jacobian)
    if not report.converged:
        raise NoConvergence(f"arm loop at theta1={theta1!r} did not converge (residual {report.residual_norm:.3e})")
    theta0, _, theta2, theta4 = unpack(report.solution)
    return ArmState(theta0=float(theta0), theta1=float(theta1), theta2=float(theta2), theta4=float(theta4))


def _solve2(M: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if not abs(det) >= DET_LIMIT:
        raise SingularJacobian(f"{what}: determinant {det:.3e}")
    return np.linalg.solve(M, rhs)


def _rate_matrix(geom: ArmGeometry, s: ArmState, phase: Phase) -> np.ndarray:
    g = geom
    s12, c12 = math.sin(s.theta1 + s.theta2), math.cos(s.theta1 + s.theta2)
    s04, c04 = math.sin(s.theta0 - s.theta4), math.cos(s.theta0 - s.theta4)
    if phase is Phase.LIFTING:
        return np.array([
            [g.l7 * c04 + g.l8 * math.cos(s.theta0), -g.l3 * s12],
            [g.l7 * s04 + g.l8 * math.sin(s.theta0), g.l3 * c12],
        ])
    return np.array([
        [-g.l3 * s12, -g.l7 * c04],
        [g.l3 * c12, -g.l7 * s04],
    ])


def _drive_vector(geom: ArmGeometry, s: ArmState) -> np.ndarray:
    g = geom
    t12 = s.theta1 + s.theta2
    return np.array([
        -g.l2 * math.sin(s.theta1) + g.l3 * math.sin(t12),
        g.l2 * math.cos(s.theta1) - g.l3 * math.cos(t12),
    ])


def arm_rates(geom: ArmGeometry, state: ArmState, omega1: float, phase: Phase) -> ArmState:
    """Angular velocities of the free pair for a motor rate ``omega1``."""
    phase = Phase(phase)
    M = _rate_matrix(geom, state, phase)
    w = _solve2(M, _drive_vector(geom, state) * omega1, f"{phase.value} rate matrix")
    if phase is Phase.LIFTING:
        return replace(state, omega1=omega1, omega0=float(w[0]), omega2=float(w[1]), omega4=0.0)
    return replace(state, omega1=omega1, omega0=0.0, omega2=float(w[0]), omega4=float(w[1]))


def arm_accels(geom: ArmGeometry, state: ArmState, omega1: float, phase: Phase) -> ArmState:
    """Angular accelerations at constant motor speed.

    Obtained by differentiating the phase's rate equations in time:
    ``M beta = d(rhs)/dt * omega1 - dM/dt * w``. ``state`` must already carry
    the rates from :func:`arm_rates` for the same ``omega1``.
    """
    phase = Phase(phase)
    g = geom
    s = state
    t12 = s.theta1 + s.theta2
    s12, c12 = math.sin(t12), math.cos(t12)
    s04, c04 = math.sin(s.theta0 - s.theta4), math.cos(s.theta0 - s.theta4)
    w12 = omega1 + s.omega2
    rhs_dot = np.array([
        -g.l2 * omega1 * math.cos(s.theta1) + g.l3 * w12 * c12,
        -g.l2 * omega1 * math.sin(s.theta1) + g.l3 * w12 * s12,
    ])
    M = _rate_matrix(geom, s, phase)
    if phase is Phase.LIFTING:
        w0 = s.omega0
        M_dot = np.array([
            [-(g.l7 * s04 + g.l8 * math.sin(s.theta0)) * w0, -g.l3 * c12 * w12],
            [(g.l7 * c04 + g.l8 * math.cos(s.theta0)) * w0, -g.l3 * s12 * w12],
        ])
        w = np.array([s.omega0, s.omega2])
    else:
        M_dot = np.array([
            [-g.l3 * c12 * w12, -g.l7 * s04 * s.omega4],
            [-g.l3 * s12 * w12, g.l7 * c04 * s.omega4],
        ])
        w = np.array([s.omega2, s.omega4])
    b = _solve2(M, rhs_dot * omega1 - M_dot @ w, f"{phase.value} rate matrix")
    if phase is Phase.LIFTING:
        return replace(s, beta0=float(b[0]), beta2=float(b[1]), beta4=0.0)
    return replace(s, beta0=0.0, beta2=float(b[0]), beta4=float(b[1]))


def slider_map(geom: ArmGeometry, theta4: float, omega4: float, beta4: float):
    """Slider displacement ``l6`` and its first two time derivatives."""
    l4, l5, l7 = geom.l4, geom.l5, geom.l7
    u = (l7 * math.sin(theta4) - l5) / l4
    if not abs(u) < 1.0:
        raise DomainError(f"slider at mechanical limit: arccos argument {u:.6g} at theta4={theta4!r}")
    s4, c4 = math.sin(theta4), math.cos(theta4)
    l6 = l7 * c4 + l4 * math.sin(math.acos(u))
    rate = -l7 * omega4 * s4 + (l7 * omega4 * c4) * (l5 - l7 * s4) / l4 / math.sqrt(1.0 - u * u)
    a = c4 * c4
    c = l5 - l7 * s4
    b = 1.0 - c * c / (l4 * l4)
    sb = math.sqrt(b)
    accel = (
        -l7 * (beta4 * s4 + omega4**2 * c4)
        + c / sb * l7 * (beta4 * c4 - omega4**2 * s4) / l4
        - a / sb * l7**2 * omega4**2 / l4 * (1.0 + c * c / (b * l4 * l4))
    )
    return l6, rate, accel


@dataclass(frozen=True)
class TrajectorySample:
    time: float
    phase: Phase
    state: ArmState


def _wrap_sample_error(err: SolverError, index: int) -> SolverError:
    wrapped = type(err)(f"sample {index}: {err}")
    wrapped.sample_index = index
    return wrapped


def simulate_trajectory(
    geom: ArmGeometry,
    profile: Iterable[tuple],
    theta4_start: float,
    guess: Sequence[float] = DEFAULT_LIFTING_GUESS,
    theta0_start: Optional[float] = None,
    settings: Optional[NewtonSettings] = None,
) -> list[TrajectorySample]:
    """Solve a motor-angle schedule sample by sample with warm starts.

    ``profile`` is a time-ordered sequence of ``(time, theta1, phase)`` knots.
    The motor rate at a knot is the slope of the schedule towards the next
    knot (the last knot reuses the previous slope), so it is constant along
    every segment. The held angle of each phase is carried over from the
    previous sample; the first knot takes ``theta4_start`` (lifting) or
    ``theta0_start`` (grasping). ``guess`` seeds the first lifting solve as
    ``(theta0, theta2)``.
    """
    knots = [(float(t), float(th), Phase(ph)) for t, th, ph in profile]
    if not knots:
        return []
    times = [k[0] for k in knots]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("profile times must be nondecreasing")

    def slope(i):
        j = i if i + 1 < len(knots) else i - 1
        if j < 0:
            return 0.0
        dt = knots[j + 1][0] - knots[j][0]
        return (knots[j + 1][1] - knots[j][1]) / dt if dt > 0 else 0.0

    samples: list[TrajectorySample] = []
    prev: Optional[ArmState] = None
    for i, (t, theta1, phase) in enumerate(knots):
        omega1 = slope(i)
        try:
            if phase is Phase.LIFTING:
                held = prev.theta4 if prev is not None else theta4_start
                g0 = (prev.theta0, prev.theta2) if prev is not None else tuple(guess)
            else:
                if prev is not None:
                    held = prev.theta0
                    g0 = (prev.theta2, prev.theta4)
                elif theta0_start is not None:
                    held = theta0_start
                    g0 = (guess[1], theta4_start)
                else:
                    raise ValueError("a profile starting in the grasping phase needs theta0_start")
            state = solve_arm_position(geom, theta1, phase, held, g0, settings)
            state = arm_rates(geom, state, omega1, phase)
            state = arm_accels(geom, state, omega1, phase)
            l6, l6r, l6a = slider_map(geom, state.theta4, state.omega4, state.beta4)
        except SolverError as err:
            raise _wrap_sample_error(err, i) from err
        state = replace(state, l6=l6, l6_rate=l6r, l6_accel=l6a)
        samples.append(TrajectorySample(t, phase, state))
        prev = state
    return samples


REPLAY_LEGS = (
    (1.00, 1.30, Phase.LIFTING),
    (1.30, 1.05, Phase.GRASPING),
    (1.05, 0.85, Phase.LIFTING),
)


def replay_profile(step: float = 0.01, speed: float = 0.1, legs: Sequence[tuple] = REPLAY_LEGS) -> list[tuple]:
    """Motor schedule of a complete loading cycle at constant motor speed.

    The default ``legs`` descend (lifting topology, ``theta1`` rising
    1.00 -> 1.30 rad), close the gripper (grasping topology, ``theta1``
    falling 1.30 -> 1.05 rad), then lift (lifting topology, ``theta1``
    falling 1.05 -> 0.85 rad). Each leg is ``(start, stop, phase)``.
    """
    if not step > 0 or not speed > 0:
        raise ValueError("step and speed must be positive")
    knots = []
    t = 0.0
    for start, stop, phase in legs:
        phase = Phase(phase)
        n = max(1, int(round(abs(stop - start) / step)))
        first = 0 if not knots else 1
        for k in range(first, n + 1):
            theta1 = start + (stop - start) * k / n
            if k > 0:
                t += abs(stop - start) / n / speed
            knots.append((t, theta1, phase))
    return knots
