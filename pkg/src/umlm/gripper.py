"""Gripper-side kinematics: slider coupling, palm cross-section and finger loops.

Angles are in radians, lengths in mm. The finger is made of two four-bar
loops sharing the link ``l21`` plus a rigid three-bar at the distal joint::

    loop 1:  l16 + l23 = l18 + l21      (palm, proximal phalanx)
    loop 2:  l21 + l24 = l19 + l22      (middle phalanx)
    3-bar:   cos(theta13 + theta17) = (l20^2 + l22^2 - l25^2) / (2 l20 l22)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import AssemblyError, NoConvergence, OverconstrainedPin, SingularJacobian
from .numerics import NewtonSettings, solve_newton

DET_LIMIT = 1e-12
HALF_PI = 0.5 * math.pi


def _e(a: float) -> np.ndarray:
    return np.array([math.cos(a), math.sin(a)])


def _nearest(angle: float, ref: float) -> float:
    """``angle`` shifted by whole turns to lie within pi of ``ref``."""
    return angle + 2.0 * math.pi * round((ref - angle) / (2.0 * math.pi))


def _solve2(M, rhs, what):
    M = np.asarray(M, dtype=float)
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if not abs(det) >= DET_LIMIT:
        raise SingularJacobian(f"{what}: determinant {det:.3e}")
    return np.linalg.solve(M, np.asarray(rhs, dtype=float))


def dyad(p: float, q: float, K, sign: float):
    """Angles ``(phi, psi)`` with ``p e(phi) - q e(psi) = K``.

    ``sign`` (+1 or -1) picks one of the two assembly branches. Raises
    :class:`AssemblyError` when ``|K|`` lies outside ``[|p - q|, p + q]``.
    """
    kx, ky = float(K[0]), float(K[1])
    k = math.hypot(kx, ky)
    if k == 0.0:
        raise AssemblyError("dyad closing vector has zero length")
    c = (p * p - k * k - q * q) / (2.0 * q * k)
    if not -1.0 <= c <= 1.0:
        raise AssemblyError(f"loop cannot close: |K|={k:.6g} outside [{abs(p - q):.6g}, {p + q:.6g}]")
    psi = math.atan2(ky, kx) + sign * math.acos(c)
    phi = math.atan2(ky + q * math.sin(psi), kx + q * math.cos(psi))
    return phi, psi


def dyad_near(p: float, q: float, K, guess: Sequence[float]):
    """Dyad branch closest to ``guess = (phi, psi)``, unwrapped towards it."""
    best = None
    for sign in (1.0, -1.0):
        phi, psi = dyad(p, q, K, sign)
        phi, psi = _nearest(phi, guess[0]), _nearest(psi, guess[1])
        dist = abs(phi - guess[0]) + abs(psi - guess[1])
        if best is None or dist < best[0]:
            best = (dist, phi, psi)
    return best[1], best[2]


# --------------------------------------------------------------------------
# slider -> gripper coupling


@dataclass(frozen=True)
class CouplingGeometry:
    l10: float = 40.0
    l11: float = 50.0
    l12: float = 60.0
    l13: float = 40.0
    alpha: float = 0.3

    def __post_init__(self):
        for name in ("l10", "l11", "l12", "l13"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CouplingState:
    l9: float
    theta5: float
    theta6: float
    l9_rate: float = 0.0
    l9_accel: float = 0.0
    omega5: float = 0.0
    omega6: float = 0.0
    beta5: float = 0.0
    beta6: float = 0.0


# (theta5, theta6) for the default coupling near l9 = 45 mm
DEFAULT_COUPLING_GUESS = (1.0, 1.0)


def coupling_residual(geom: CouplingGeometry, l9, theta5, theta6) -> np.ndarray:
    g = geom
    x = g.l11 * np.cos(theta5 - HALF_PI) - l9 - g.l12 * np.cos(np.pi - theta6)
    y = g.l10 + g.l11 * np.sin(theta5 - HALF_PI) - g.l12 * np.sin(np.pi - theta6)
    return np.array([x, y])


def _coupling_matrix(geom: CouplingGeometry, theta5, theta6) -> np.ndarray:
    return np.array([
        [geom.l11 * math.cos(theta5), -geom.l12 * math.sin(theta6)],
        [geom.l11 * math.sin(theta5), -geom.l12 * math.cos(theta6)],
    ])


def solve_coupling(
    geom: CouplingGeometry,
    l9: float,
    l9_rate: float = 0.0,
    l9_accel: float = 0.0,
    guess: Sequence[float] = DEFAULT_COUPLING_GUESS,
    settings: Optional[NewtonSettings] = None,
) -> CouplingState:
    """Coupling angles, rates and accelerations for slider input ``l9``."""

    def residual(v):
        return coupling_residual(geom, l9, v[0], v[1])

    report = solve_newton(residual, guess, settings, jacobian=lambda v: _coupling_matrix(geom, v[0], v[1]))
    if not report.converged:
        raise NoConvergence(f"coupling loop at l9={l9!r} (residual {report.residual_norm:.3e})")
    t5, t6 = (float(a) for a in report.solution)
    M = _coupling_matrix(geom, t5, t6)
    w5, w6 = _solve2(M, [l9_rate, 0.0], "coupling rate matrix")
    centripetal = np.array([
        [-geom.l11 * w5 * math.sin(t5), -geom.l12 * w6 * math.cos(t6)],
        [geom.l11 * w5 * math.cos(t5), geom.l12 * w6 * math.sin(t6)],
    ]) @ np.array([w5, w6])
    b5, b6 = _solve2(M, np.array([l9_accel, 0.0]) - centripetal, "coupling rate matrix")
    return CouplingState(
        l9=l9, theta5=t5, theta6=t6, l9_rate=l9_rate, l9_accel=l9_accel,
        omega5=float(w5), omega6=float(w6), beta5=float(b5), beta6=float(b6),
    )


def gripper_input_height(geom: CouplingGeometry, state: CouplingState):
    """Input height ``h`` under the palm and its first two time derivatives."""
    l13, a = geom.l13, geom.alpha
    t6, w6, b6 = state.theta6, state.omega6, state.beta6
    h = l13 * math.sin(math.pi - t6 - a)
    h_rate = -l13 * w6 * math.cos(math.pi - t6 - a)
    h_accel = -l13 * w6**2 * math.sin(t6 + a) + l13 * b6 * math.cos(t6 + a)
    return h, h_rate, h_accel


# --------------------------------------------------------------------------
# palm cross-section


CROSS_INDICES = (6, 7, 8, 9, 10)


@dataclass(frozen=True)
class CrossSectionState:
    """Cross-section loop ``l13 + l14 + l15 + l16/2 = l17``.

    ``theta``, ``omega`` and ``beta`` hold the five loop angles
    ``theta6 .. theta10`` in that order; ``pinned`` names the three of them
    (by index 6..10) treated as inputs.
    """

    l13: float
    l14: float
    l15: float
    l16: float
    l17: float
    alpha: float
    theta: tuple
    omega: tuple = (0.0,) * 5
    beta: tuple = (0.0,) * 5
    pinned: frozenset = field(default_factory=lambda: frozenset({6, 9, 10}))

    def __post_init__(self):
        if len(self.theta) != 5 or len(self.omega) != 5 or len(self.beta) != 5:
            raise ValueError("theta, omega and beta need five entries (theta6..theta10)")
        if len(self.pinned) != 3 or not set(self.pinned) <= set(CROSS_INDICES):
            raise ValueError("pinned must name exactly three of the indices 6..10")

    def angle(self, index: int) -> float:
        return self.theta[index - 6]


def _cross_terms(s: CrossSectionState):
    """Each loop term as ``(length, phase)`` with term vector ``length * e(phase - theta)``."""
    return (
        (s.l13, math.pi - s.alpha),
        (s.l14, -HALF_PI),
        (s.l15, -HALF_PI),
        (0.5 * s.l16, 0.0),
        (s.l17, math.pi),
    )


def _cross_position(s: CrossSectionState, theta) -> np.ndarray:
    t6, t7, t8, t9, t10 = theta
    p = math.pi - t6 - s.alpha
    x = s.l13 * math.cos(p) - s.l14 * math.sin(t7) - s.l15 * math.sin(t8) + 0.5 * s.l16 * math.cos(t9) - s.l17 * math.cos(t10)
    y = s.l13 * math.sin(p) - s.l14 * math.cos(t7) - s.l15 * math.cos(t8) - 0.5 * s.l16 * math.sin(t9) + s.l17 * math.sin(t10)
    return np.array([x, y])


def cross_section_matrices(s: CrossSectionState, theta=None):
    """Velocity matrix ``A`` (``A omega = 0``) and centripetal matrix ``B``.

    Accelerations satisfy ``A beta = B omega**2``.
    """
    t6, t7, t8, t9, t10 = s.theta if theta is None else theta
    p = math.pi - t6 - s.alpha
    h = 0.5 * s.l16
    A = np.array([
        [s.l13 * math.sin(p), -s.l14 * math.cos(t7), -s.l15 * math.cos(t8), -h * math.sin(t9), s.l17 * math.sin(t10)],
        [-s.l13 * math.cos(p), s.l14 * math.sin(t7), s.l15 * math.sin(t8), -h * math.cos(t9), s.l17 * math.cos(t10)],
    ])
    B = np.array([
        [s.l13 * math.cos(p), -s.l14 * math.sin(t7), -s.l15 * math.sin(t8), h * math.cos(t9), -s.l17 * math.cos(t10)],
        [s.l13 * math.sin(p), -s.l14 * math.cos(t7), -s.l15 * math.cos(t8), -h * math.sin(t9), s.l17 * math.sin(t10)],
    ])
    return A, B


def cross_section_constraints(state: CrossSectionState):
    """Raw position, velocity and acceleration residuals of the cross-section loop."""
    A, B = cross_section_matrices(state)
    w = np.asarray(state.omega, dtype=float)
    b = np.asarray(state.beta, dtype=float)
    return _cross_position(state, state.theta), A @ w, A @ b - B @ (w * w)


def close_cross_section(
    l13, l14, l15, l16, alpha, theta6, theta7, theta8, theta9, pinned=frozenset({6, 9, 10})
) -> CrossSectionState:
    """Consistent cross-section built forward: ``l17`` and ``theta10`` close the loop."""
    s = CrossSectionState(l13, l14, l15, l16, 1.0, alpha, (theta6, theta7, theta8, theta9, 0.0), pinned=pinned)
    open_sum = sum(L * _e(c - t) for (L, c), t in zip(_cross_terms(s)[:4], s.theta[:4]))
    # closing term l17 e(pi - theta10) cancels the open sum
    l17 = float(np.hypot(*open_sum))
    theta10 = math.pi - math.atan2(-open_sum[1], -open_sum[0])
    return replace(s, l17=l17, theta=(theta6, theta7, theta8, theta9, theta10))


def solve_cross_section(
    state: CrossSectionState,
    pinned_values: Mapping[int, float],
    settings: Optional[NewtonSettings] = None,
) -> CrossSectionState:
    """Solve the two free cross-section angles for three pinned ones.

    The free angles start from their values in ``state``. Free rates and
    accelerations follow from the pinned rates/accelerations carried by
    ``state``.
    """
    pins = {int(k): float(v) for k, v in pinned_values.items()}
    if len(pins) != 3 or not set(pins) <= set(CROSS_INDICES):
        raise ValueError("exactly three of theta6..theta10 must be pinned")
    free = [i for i in CROSS_INDICES if i not in pins]
    theta = list(state.theta)
    for i, v in pins.items():
        theta[i - 6] = v

    terms = _cross_terms(state)
    closing = np.zeros(2)
    for i in pins:
        L, c = terms[i - 6]
        closing -= L * _e(c - theta[i - 6])
    La, Lb = terms[free[0] - 6][0], terms[free[1] - 6][0]
    k = float(np.hypot(*closing))
    tol = 1e-12 * (La + Lb)
    if k > La + Lb + tol or k < abs(La - Lb) - tol:
        raise OverconstrainedPin(
            f"pins {sorted(pins)} leave a gap of {k:.6g} mm that links of {La:.6g} and {Lb:.6g} mm cannot span"
        )

    def residual(v):
        t = list(theta)
        t[free[0] - 6], t[free[1] - 6] = v
        return _cross_position(state, t)

    def jacobian(v):
        t = list(theta)
        t[free[0] - 6], t[free[1] - 6] = v
        A, _ = cross_section_matrices(state, t)
        return A[:, [free[0] - 6, free[1] - 6]]

    guess = [state.theta[free[0] - 6], state.theta[free[1] - 6]]
    report = solve_newton(residual, guess, settings, jacobian=jacobian)
    if not report.converged:
        raise NoConvergence(f"cross-section loop (residual {report.residual_norm:.3e})")
    theta[free[0] - 6], theta[free[1] - 6] = (float(a) for a in report.solution)

    A, B = cross_section_matrices(state, theta)
    fi = [i - 6 for i in free]
    pi_ = [i - 6 for i in sorted(pins)]
    w = np.asarray(state.omega, dtype=float).copy()
    w[fi] = _solve2(A[:, fi], -A[:, pi_] @ w[pi_], "cross-section rate matrix")
    b = np.asarray(state.beta, dtype=float).copy()
    b[fi] = _solve2(A[:, fi], B @ (w * w) - A[:, pi_] @ b[pi_], "cross-section rate matrix")
    return replace(
        state,
        theta=tuple(theta),
        omega=tuple(float(v) for v in w),
        beta=tuple(float(v) for v in b),
        pinned=frozenset(pins),
    )


# --------------------------------------------------------------------------
# finger loops


@dataclass(frozen=True)
class FingerGeometry:
    l16: float = 28.02
    l18: float = 38.3
    l19: float = 30.0
    l20: float = 25.0
    l21: float = 15.0
    l22: float = 13.58
    l23: float = 35.0
    l24: float = 20.5
    l25: float = 25.0

    def __post_init__(self):
        for name in ("l16", "l18", "l19", "l20", "l21", "l22", "l23", "l24", "l25"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not abs(self.l20 - self.l22) < self.l25 < self.l20 + self.l22:
            raise ValueError("fixed 3-bar (l20, l22, l25) violates the triangle inequality")

    def three_bar_cosine(self) -> float:
        return (self.l20**2 + self.l22**2 - self.l25**2) / (2.0 * self.l20 * self.l22)


@dataclass(frozen=True)
class FingerState:
    theta9: float
    theta11: float
    theta12: float
    theta13: float
    theta14: float
    theta15: float
    theta16: float
    theta17: float
    omega9: float = 0.0
    omega11: float = 0.0
    omega12: float = 0.0
    omega13: float = 0.0
    omega14: float = 0.0
    omega15: float = 0.0
    omega16: float = 0.0
    omega17: float = 0.0
    transmission_angle: float = math.nan


def finger_residuals(geom: FingerGeometry, s: FingerState):
    """Position residuals of both loops, the 3-bar residual and both loops' rate residuals."""
    g = geom
    loop1 = (
        g.l16 * _e(s.theta9) + g.l23 * _e(s.theta14) - g.l21 * _e(s.theta15) - g.l18 * _e(s.theta11)
    )
    loop2 = (
        g.l21 * _e(s.theta15) + g.l24 * _e(s.theta16) - g.l22 * _e(s.theta17) - g.l19 * _e(s.theta12)
    )
    three_bar = math.cos(s.theta13 + s.theta17) - g.three_bar_cosine()

    def rate(L_terms):
        return sum(L * w * np.array([-math.sin(a), math.cos(a)]) for L, a, w in L_terms)

    rate1 = rate([
        (g.l16, s.theta9, s.omega9), (g.l23, s.theta14, s.omega14),
        (-g.l21, s.theta15, s.omega15), (-g.l18, s.theta11, s.omega11),
    ])
    rate2 = rate([
        (g.l21, s.theta15, s.omega15), (g.l24, s.theta16, s.omega16),
        (-g.l22, s.theta17, s.omega17), (-g.l19, s.theta12, s.omega12),
    ])
    return loop1, loop2, three_bar, rate1, rate2


def transmission_angle(geom: FingerGeometry, state: FingerState) -> float:
    """Acute angle between coupler ``l21`` and proximal link ``l18`` of loop 1, in [0, pi/2]."""
    d = (state.theta15 - state.theta11) % math.pi
    return min(d, math.pi - d)


def _finger_rates(g: FingerGeometry, s: FingerState) -> FingerState:
    s9, c9 = math.sin(s.theta9), math.cos(s.theta9)
    s15, c15 = math.sin(s.theta15), math.cos(s.theta15)
    s17, c17 = math.sin(s.theta17), math.cos(s.theta17)
    M1 = [[g.l18 * math.sin(s.theta11), -g.l23 * math.sin(s.theta14)],
          [-g.l18 * math.cos(s.theta11), g.l23 * math.cos(s.theta14)]]
    r1 = [g.l16 * s9 * s.omega9 - g.l21 * s15 * s.omega15, -g.l16 * c9 * s.omega9 + g.l21 * c15 * s.omega15]
    w11, w14 = _solve2(M1, r1, "finger loop 1 rate matrix")
    M2 = [[g.l19 * math.sin(s.theta12), -g.l24 * math.sin(s.theta16)],
          [-g.l19 * math.cos(s.theta12), g.l24 * math.cos(s.theta16)]]
    r2 = [g.l21 * s15 * s.omega15 - g.l22 * s17 * s.omega17, -g.l21 * c15 * s.omega15 + g.l22 * c17 * s.omega17]
    w12, w16 = _solve2(M2, r2, "finger loop 2 rate matrix")
    return replace(s, omega11=float(w11), omega14=float(w14), omega12=float(w12),
                   omega16=float(w16), omega13=-s.omega17)


def solve_finger(
    geom: FingerGeometry,
    theta9: float,
    theta15: float,
    theta17: float,
    guess: Sequence[float],
    omega9: float = 0.0,
    omega15: float = 0.0,
    omega17: float = 0.0,
) -> FingerState:
    """Finger loops driven by the palm angle and the shared link angles.

    Loop 1 gives ``(theta11, theta14)`` from ``(theta9, theta15)``; loop 2
    gives ``(theta12, theta16)`` from ``(theta15, theta17)``; the rigid
    distal 3-bar gives ``theta13``. ``guess = (theta11, theta14, theta12,
    theta16)`` chooses the assembly branch of each loop.
    """
    g = geom
    t11, t14 = dyad_near(g.l18, g.l23, g.l16 * _e(theta9) - g.l21 * _e(theta15), guess[0:2])
    t12, t16 = dyad_near(g.l19, g.l24, g.l21 * _e(theta15) - g.l22 * _e(theta17), guess[2:4])
    t13 = math.acos(g.three_bar_cosine()) - theta17
    s = FingerState(theta9, t11, t12, t13, t14, theta15, t16, theta17,
                    omega9=omega9, omega15=omega15, omega17=omega17)
    s = _finger_rates(g, s)
    return replace(s, transmission_angle=transmission_angle(g, s))


def finger_pose(
    geom: FingerGeometry,
    theta9: float,
    theta11: float,
    theta12: float,
    branches: Sequence[float] = (-1.0, -1.0),
) -> FingerState:
    """Finger linkage assembled at prescribed palm and phalanx angles.

    Loop 1 is closed for ``(theta14, theta15)`` and loop 2 for
    ``(theta16, theta17)``; ``branches`` holds the branch sign of each.
    Positions only, rates are left at zero. Raises :class:`AssemblyError`
    when either loop cannot close.
    """
    g = geom
    t14, t15 = dyad(g.l23, g.l21, g.l18 * _e(theta11) - g.l16 * _e(theta9), branches[0])
    t16, t17 = dyad(g.l24, g.l22, g.l19 * _e(theta12) - g.l21 * _e(t15), branches[1])
    t13 = math.acos(g.three_bar_cosine()) - t17
    s = FingerState(theta9, theta11, theta12, t13, t14, t15, t16, t17)
    return replace(s, transmission_angle=transmission_angle(g, s))
