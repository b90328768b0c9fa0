"""Quasi-static contact forces of a three-phalanx finger.

Gravity and friction are neglected. Contact ``i`` sits at distance ``d_i``
from the proximal joint of phalanx ``i``; the contact forces act along the
phalanx normals ``(sin a, -cos a)`` with ``a`` the cumulative knuckle angle.

Sign convention: joint torques that close the finger onto the object are
negative (as the spring torques ``tau = -(k alpha + tau_s)`` are), and a
compressive contact gives a positive force. Equilibrium of the finger under
joint torques and contact reactions reads ``G^T f = -tau`` where
``G[i, j] = n_i . dP_i/d alpha_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DivisionDomain
from .numerics import check_conditioning, fd_jacobian

ORACLE_STEP = 1e-5


@dataclass(frozen=True)
class KnuckleAngles:
    alpha1: float
    alpha2: float
    alpha3: float


@dataclass(frozen=True)
class ContactDistances:
    d1: float
    d2: float
    d3: float

    def within(self, segments: "SegmentLengths") -> bool:
        return 0 < self.d1 <= segments.l18 and 0 < self.d2 <= segments.l19 and 0 < self.d3 <= segments.l20


@dataclass(frozen=True)
class SegmentLengths:
    l18: float = 38.3
    l19: float = 30.0
    l20: float = 25.0

    def __post_init__(self):
        for name in ("l18", "l19", "l20"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def midpoints(self) -> ContactDistances:
        return ContactDistances(self.l18 / 2, self.l19 / 2, self.l20 / 2)


@dataclass(frozen=True)
class SpringParams:
    k1: float = 346.5
    k2: float = 794.1
    tau_s1: float = 184.43
    tau_s2: float = 196.29

    def __post_init__(self):
        for name in ("k1", "k2", "tau_s1", "tau_s2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class JointTorques:
    tau1: float
    tau2: float
    tau3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tau1, self.tau2, self.tau3])


@dataclass(frozen=True)
class ContactForces:
    f1: float
    f2: float
    f3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3])


def spring_torques(springs: SpringParams, alpha2: float, alpha3: float):
    """Torsional spring torques ``(tau2, tau3)`` in Nmm; angles in radians."""
    tau2 = -(springs.k1 * alpha2 + springs.tau_s1)
    tau3 = -(springs.k2 * alpha3 + springs.tau_s2)
    return tau2, tau3


def contact_points(segments: SegmentLengths, angles: KnuckleAngles, contacts: ContactDistances):
    a1 = angles.alpha1
    a12 = a1 + angles.alpha2
    a123 = a12 + angles.alpha3
    l18, l19 = segments.l18, segments.l19
    d1, d2, d3 = contacts.d1, contacts.d2, contacts.d3
    P1 = np.array([-d1 * math.cos(a1), -d1 * math.sin(a1)])
    P2 = np.array([-l18 * math.cos(a1) - d2 * math.cos(a12), -l18 * math.sin(a1) - d2 * math.sin(a12)])
    P3 = np.array([
        -l18 * math.cos(a1) - l19 * math.cos(a12) - d3 * math.cos(a123),
        -l18 * math.sin(a1) - l19 * math.sin(a12) - d3 * math.sin(a123),
    ])
    return P1, P2, P3


def contact_normals(angles: KnuckleAngles) -> np.ndarray:
    """Unit directions of the three contact reactions, one per row."""
    a = np.cumsum([angles.alpha1, angles.alpha2, angles.alpha3])
    return np.column_stack([np.sin(a), -np.cos(a)])


def _check_distances(contacts: ContactDistances):
    for name in ("d1", "d2", "d3"):
        v = getattr(contacts, name)
        if v == 0 or not math.isfinite(v):
            raise DivisionDomain(f"contact distance {name}={v!r}")


def contact_forces(
    torques: JointTorques,
    segments: SegmentLengths,
    angles: KnuckleAngles,
    contacts: ContactDistances,
) -> ContactForces:
    """Closed-form contact forces by back substitution, distal contact first::

        f3 = -tau3 / d3
        f2 = -(tau2 - tau3 + l19 cos(a3) f3) / d2
        f1 = -(tau1 - tau2 + l18 cos(a2) f2 + l18 cos(a2 + a3) f3) / d1

    ``alpha1`` does not enter. See :func:`contact_forces_printed` for an
    expanded variant of ``f1`` that does not balance the proximal joint.
    """
    _check_distances(contacts)
    out = _kernels.contact_forces_batch(
        torques.as_array()[None, :],
        segments.l18, segments.l19, angles.alpha2, angles.alpha3,
        np.array([[contacts.d1, contacts.d2, contacts.d3]]),
    )[0]
    # + 0.0 maps a signed zero to 0.0
    return ContactForces(float(out[0]) + 0.0, float(out[1]) + 0.0, float(out[2]) + 0.0)


def contact_forces_printed(
    torques: JointTorques,
    segments: SegmentLengths,
    angles: KnuckleAngles,
    contacts: ContactDistances,
) -> ContactForces:
    """Contact forces with ``f1`` in a fully expanded form that loses a term.

    ``f2`` and ``f3`` agree with :func:`contact_forces`. This ``f1``
    omits the ``d2 f2`` contribution of the middle contact to the proximal
    joint, so ``f1_printed = f1 + d2 f2 / d1``; kept for comparison only.
    """
    _check_distances(contacts)
    t1, t2, t3 = torques.tau1, torques.tau2, torques.tau3
    l18, l19 = segments.l18, segments.l19
    a2, a3 = angles.alpha2, angles.alpha3
    d1, d2, d3 = contacts.d1, contacts.d2, contacts.d3
    inner = t2 / d2 - t3 * l19 * math.cos(a3) / (d3 * d2) - t3 / d2
    f1 = -(1 / d1) * (
        t1 - l18 * math.cos(a2) * inner - t3 * l18 * math.cos(a2 + a3) / d3 - t3 * l19 * math.cos(a3) / d3 - t3
    )
    f2 = -(1 / d2) * (t2 - t3 - t3 * l19 * math.cos(a3) / d3)
    f3 = -t3 / d3
    return ContactForces(f1, f2, f3)


def _angles_jacobian(segments, angles, contacts, h):
    def stacked(a):
        return np.concatenate(contact_points(segments, KnuckleAngles(*a), contacts))

    a0 = np.array([angles.alpha1, angles.alpha2, angles.alpha3])
    return fd_jacobian(stacked, a0, h).reshape(3, 2, 3)


def transmission_matrix(
    segments: SegmentLengths,
    angles: KnuckleAngles,
    contacts: ContactDistances,
    h: float = ORACLE_STEP,
) -> np.ndarray:
    """``G[i, j] = n_i . dP_i/d alpha_j`` from central differences of the contact points."""
    dP = _angles_jacobian(segments, angles, contacts, h)
    n = contact_normals(angles)
    return np.einsum("ik,ikj->ij", n, dP)


_CUMULATIVE_INV = np.array([[1.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]])


def grasp_matrix(
    segments: SegmentLengths,
    angles: KnuckleAngles,
    contacts: ContactDistances,
    h: float = ORACLE_STEP,
) -> np.ndarray:
    """Numerical grasp matrix in the cumulative rate basis.

    Columns act on ``(a1', a1' + a2', a1' + a2' + a3')``. The overall sign
    is flipped so the diagonal reads ``(-d1, -d2, -d3)``.
    """
    return -transmission_matrix(segments, angles, contacts, h) @ _CUMULATIVE_INV


def virtual_work_oracle(
    torques: JointTorques,
    segments: SegmentLengths,
    angles: KnuckleAngles,
    contacts: ContactDistances,
    h: float = ORACLE_STEP,
) -> ContactForces:
    """Contact forces from the virtual-work balance, independent of the closed form.

    Builds ``G`` numerically and solves ``G^T f = -tau`` with a dense solver.
    """
    _check_distances(contacts)
    G = transmission_matrix(segments, angles, contacts, h)
    check_conditioning(G, "transmission matrix")
    f = np.linalg.solve(G.T, -torques.as_array())
    return ContactForces(float(f[0]) + 0.0, float(f[1]) + 0.0, float(f[2]) + 0.0)


@dataclass(frozen=True)
class ForceSurface:
    """Forces on a ``(d2, d3)`` grid; arrays are indexed ``[row, col] = [i2, i3]``."""

    d1: float
    d2: np.ndarray
    d3: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    def rows(self):
        """Flattened ``(d2, d3, f1, f2, f3)`` tuples in row-major order."""
        D2, D3 = np.meshgrid(self.d2, self.d3, indexing="ij")
        cols = [D2, D3, self.f1, self.f2, self.f3]
        return list(zip(*(c.ravel().tolist() for c in cols)))


def force_surface(
    torques: JointTorques,
    segments: SegmentLengths,
    angles: KnuckleAngles,
    d2_range: Sequence[float],
    d3_range: Sequence[float],
    d1: float,
    counts: Sequence[int] = (41, 41),
) -> ForceSurface:
    """Dense evaluation of :func:`contact_forces` over contact distances ``d2`` x ``d3``."""
    n2, n3 = int(counts[0]), int(counts[1])
    if n2 < 1 or n3 < 1:
        raise ValueError("grid counts must be positive")
    d2 = np.linspace(d2_range[0], d2_range[1], n2) if n2 > 1 else np.array([float(d2_range[0])])
    d3 = np.linspace(d3_range[0], d3_range[1], n3) if n3 > 1 else np.array([float(d3_range[0])])
    D2, D3 = np.meshgrid(d2, d3, indexing="ij")
    n = D2.size
    d = np.column_stack([np.full(n, float(d1)), D2.ravel(), D3.ravel()])
    if np.any(d == 0):
        raise DivisionDomain("force surface grid contains a zero contact distance")
    tau = np.broadcast_to(torques.as_array(), (n, 3))
    F = _kernels.contact_forces_batch(tau, segments.l18, segments.l19, angles.alpha2, angles.alpha3, d)
    shape = (n2, n3)
    return ForceSurface(float(d1), d2, d3, F[:, 0].reshape(shape), F[:, 1].reshape(shape), F[:, 2].reshape(shape))


def monotonicity_report(surface: ForceSurface) -> dict:
    """Sign census of the grid differences of ``f1`` and ``f2`` along ``d2`` and ``d3``.

    For each of ``df1/dd2, df1/dd3, df2/dd2, df2/dd3`` reports the fraction of
    cells with a positive, negative and zero forward difference.
    """
    report = {}
    for name in ("f1", "f2"):
        F = getattr(surface, name)
        for axis, var in ((0, "d2"), (1, "d3")):
            if F.shape[axis] < 2:
                continue
            diff = np.diff(F, axis=axis)
            total = diff.size
            report[f"d{name}/d{var}"] = {
                "positive": float(np.count_nonzero(diff > 0) / total),
                "negative": float(np.count_nonzero(diff < 0) / total),
                "zero": float(np.count_nonzero(diff == 0) / total),
            }
    return report


def relative_deviation(a: ContactForces, b: ContactForces, floor: Optional[float] = None) -> float:
    """``max|a - b| / max(|a|, |b|)`` over the three components (0 when both vanish)."""
    x, y = a.as_array(), b.as_array()
    scale = max(np.max(np.abs(x)), np.max(np.abs(y)), floor or 0.0)
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(x - y)) / scale)


@dataclass(frozen=True)
class SweepResult:
    samples: int
    max_deviation: float
    worst_index: int


def random_case(rng: np.random.Generator, segments: SegmentLengths):
    """One random feasible input: spring torques from design-bound stiffness and preload ranges."""
    a1 = rng.uniform(0.0, 0.5 * math.pi)
    a2, a3 = rng.uniform(0.1, 1.4, 2)
    k1, k2 = rng.uniform(10.0, 1000.0, 2)
    ts1, ts2 = rng.uniform(0.0, 200.0, 2)
    tau2, tau3 = spring_torques(SpringParams(k1, k2, ts1, ts2), a2, a3)
    torques = JointTorques(rng.uniform(-1000.0, 1000.0), tau2, tau3)
    contacts = ContactDistances(
        rng.uniform(2.0, segments.l18), rng.uniform(2.0, segments.l19), rng.uniform(2.0, segments.l20)
    )
    return torques, KnuckleAngles(a1, a2, a3), contacts


def oracle_sweep(samples: int, seed: int, segments: Optional[SegmentLengths] = None) -> SweepResult:
    """Largest closed-form vs virtual-work deviation over ``samples`` random inputs."""
    segments = segments or SegmentLengths()
    rng = np.random.default_rng(seed)
    worst, worst_i = 0.0, -1
    for i in range(samples):
        torques, angles, contacts = random_case(rng, segments)
        dev = relative_deviation(
            contact_forces(torques, segments, angles, contacts),
            virtual_work_oracle(torques, segments, angles, contacts),
        )
        if dev > worst or worst_i < 0:
            worst, worst_i = dev, i
    return SweepResult(samples, worst, worst_i)
