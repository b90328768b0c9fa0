"""Global-best particle swarm over the 7-dimensional gripper design vector.

The objective is the spread ``|min f - max f|`` of the three contact forces
at the 45 degree knuckle pose. The finger link lengths ``(l16, l21, l22)``
do not enter the forces; they only decide whether the finger linkage
assembles at that pose with an acceptable transmission angle. Designs that
fail the check score ``penalty``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import AssemblyError
from .gripper import FingerGeometry, finger_pose, transmission_angle
from .kinetostatics import (
    ContactDistances,
    ContactForces,
    JointTorques,
    KnuckleAngles,
    SegmentLengths,
    SpringParams,
    contact_forces,
    spring_torques,
    virtual_work_oracle,
)

DESIGN_FIELDS = ("l16", "l21", "l22", "k1", "k2", "tau_s1", "tau_s2")

BatchObjective = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DesignVector:
    l16: float
    l21: float
    l22: float
    k1: float
    k2: float
    tau_s1: float
    tau_s2: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in DESIGN_FIELDS])

    @classmethod
    def from_array(cls, x) -> "DesignVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (7,):
            raise ValueError(f"design vector needs 7 entries, got shape {x.shape}")
        return cls(*(float(v) for v in x))

    def springs(self) -> SpringParams:
        return SpringParams(self.k1, self.k2, self.tau_s1, self.tau_s2)


@dataclass(frozen=True)
class Bounds:
    lower: tuple = (20.0, 10.0, 10.0, 10.0, 10.0, 0.0, 0.0)
    upper: tuple = (30.0, 15.0, 15.0, 1000.0, 1000.0, 200.0, 200.0)

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be two vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("lower bounds must be strictly below upper bounds")

    @property
    def lb(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=float)

    @property
    def ub(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lb) and np.all(x <= self.ub))


@dataclass(frozen=True)
class ObjectiveContext:
    """Fixed quantities of the force-uniformity objective.

    ``tau1`` is the drive torque magnitude; it is applied with the closing
    sign (negative, like the spring torques). Contacts sit at the segment
    midpoints unless ``contacts`` is given. The finger is checked at palm
    angle ``theta9`` and proximal angle ``theta11`` with the middle phalanx
    at ``theta11 + flex * alpha2``.
    """

    tau1: float = 1000.0
    alpha2: float = math.pi / 4
    alpha3: float = math.pi / 4
    l18: float = 38.3
    l19: float = 30.0
    l20: float = 25.0
    l23: float = 35.0
    l24: float = 20.5
    l25: float = 25.0
    contacts: Optional[ContactDistances] = None
    theta9: float = 0.0
    theta11: float = math.pi / 2
    flex: float = -1.0
    branches: tuple = (-1.0, -1.0)
    transmission_floor: float = math.radians(10.0)
    penalty: float = 1e6

    def __post_init__(self):
        if not self.tau1 > 0:
            raise ValueError("tau1 must be positive")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")

    @property
    def segments(self) -> SegmentLengths:
        return SegmentLengths(self.l18, self.l19, self.l20)

    @property
    def distances(self) -> ContactDistances:
        return self.contacts if self.contacts is not None else self.segments.midpoints()

    @property
    def angles(self) -> KnuckleAngles:
        return KnuckleAngles(self.theta11 - self.theta9, self.alpha2, self.alpha3)

    def kernel_params(self) -> np.ndarray:
        d = self.distances
        return np.array([
            -self.tau1, self.alpha2, self.alpha3, self.l18, self.l19, self.l20,
            self.l23, self.l24, self.l25, d.d1, d.d2, d.d3,
            self.theta9, self.theta11, self.flex, self.branches[0], self.branches[1],
            self.transmission_floor, self.penalty,
        ])


def finger_feasible(x: DesignVector, ctx: ObjectiveContext) -> bool:
    """Finger linkage assembles at the evaluation pose with transmission angle >= floor."""
    try:
        geom = FingerGeometry(x.l16, ctx.l18, ctx.l19, ctx.l20, x.l21, x.l22, ctx.l23, ctx.l24, ctx.l25)
        theta12 = ctx.theta11 + ctx.flex * ctx.alpha2
        state = finger_pose(geom, ctx.theta9, ctx.theta11, theta12, ctx.branches)
    except (ValueError, AssemblyError):
        return False
    return transmission_angle(geom, state) >= ctx.transmission_floor


def design_forces(x: DesignVector, ctx: ObjectiveContext, oracle: bool = False) -> ContactForces:
    """Contact forces of design ``x``; ``oracle=True`` uses the virtual-work solve."""
    tau2, tau3 = spring_torques(x.springs(), ctx.alpha2, ctx.alpha3)
    torques = JointTorques(-ctx.tau1, tau2, tau3)
    solver = virtual_work_oracle if oracle else contact_forces
    return solver(torques, ctx.segments, ctx.angles, ctx.distances)


def force_spread(f: ContactForces) -> float:
    return abs(min(f.f1, f.f2, f.f3) - max(f.f1, f.f2, f.f3))


def objective_phi(x, ctx: ObjectiveContext, oracle: bool = False) -> float:
    """Force-uniformity objective of one design, composed from the module operations."""
    if not isinstance(x, DesignVector):
        x = DesignVector.from_array(x)
    if not finger_feasible(x, ctx):
        return ctx.penalty
    return force_spread(design_forces(x, ctx, oracle))


class PhiObjective:
    """Batch form of :func:`objective_phi` backed by the compiled kernel."""

    def __init__(self, ctx: ObjectiveContext, use_numba: Optional[bool] = None):
        self.ctx = ctx
        self.params = ctx.kernel_params()
        self.use_numba = use_numba

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return _kernels.phi_batch(X, self.params, self.use_numba)


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 1000
    max_iterations: int = 300
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    seed: int = 0
    velocity_clamp: float = 0.5
    workers: int = 1

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("inertia", "cognitive", "social", "velocity_clamp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class RunResult:
    best_x: np.ndarray
    best_phi: float
    history: np.ndarray
    evaluations: int
    seed: int = 0

    def design(self) -> DesignVector:
        return DesignVector.from_array(self.best_x)


def _stream(seed: int, iteration: int) -> np.random.Generator:
    # one stream per (seed, iteration); row i of every draw belongs to particle i
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(iteration,))))


def _evaluate(objective: BatchObjective, X: np.ndarray, pool: Optional[ThreadPoolExecutor], workers: int):
    if pool is None:
        out = objective(X)
    else:
        chunks = np.array_split(X, workers)
        out = np.concatenate(list(pool.map(objective, chunks)))
    out = np.asarray(out, dtype=float)
    if out.shape != (X.shape[0],):
        raise ValueError("objective must return one value per row")
    return out


def pso_minimize(objective: BatchObjective, bounds: Bounds, config: PsoConfig) -> RunResult:
    """Minimise a batch objective (rows of an ``(n, dim)`` array) inside ``bounds``.

    Results depend only on ``config.seed`` and not on ``config.workers``:
    random numbers are drawn in the calling thread and chunks are reassembled
    in particle order. Ties for the global best go to the lowest index.
    """
    lb, ub = bounds.lb, bounds.ub
    span = ub - lb
    vmax = config.velocity_clamp * span
    n, dim = config.swarm_size, lb.size
    w, c1, c2 = config.inertia, config.cognitive, config.social

    rng = _stream(config.seed, 0)
    X = lb + rng.random((n, dim)) * span
    V = rng.uniform(-1.0, 1.0, (n, dim)) * vmax

    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        f = _evaluate(objective, X, pool, config.workers)
        pbest, pbest_f = X.copy(), f.copy()
        g = int(np.argmin(pbest_f))
        gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
        history = np.empty(config.max_iterations)

        for it in range(1, config.max_iterations + 1):
            rng = _stream(config.seed, it)
            r1 = rng.random((n, dim))
            r2 = rng.random((n, dim))
            V = w * V + c1 * r1 * (pbest - X) + c2 * r2 * (gbest - X)
            np.clip(V, -vmax, vmax, out=V)
            X = np.clip(X + V, lb, ub)
            f = _evaluate(objective, X, pool, config.workers)

            better = f < pbest_f
            pbest[better] = X[better]
            pbest_f[better] = f[better]
            g = int(np.argmin(pbest_f))
            if pbest_f[g] < gbest_f:
                gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
            history[it - 1] = gbest_f
    finally:
        if pool is not None:
            pool.shutdown()

    return RunResult(gbest, gbest_f, history, n * (config.max_iterations + 1), config.seed)


def multi_run(objective: BatchObjective, bounds: Bounds, config: PsoConfig, n_runs: int) -> List[RunResult]:
    """Independent runs with seeds ``config.seed + k`` for ``k < n_runs``."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    return [pso_minimize(objective, bounds, replace(config, seed=config.seed + k)) for k in range(n_runs)]


@dataclass(frozen=True)
class RunSummary:
    runs: int
    min_phi: float
    median_phi: float
    max_phi: float
    thresholds: dict = field(default_factory=dict)


def summarize(results: Sequence[RunResult], thresholds: Sequence[float] = (1e-8, 1e-6)) -> RunSummary:
    """Min/median/max of the best objective values and the fraction at or below each threshold."""
    phi = np.array([r.best_phi for r in results])
    frac = {f"{t:g}": float(np.mean(phi <= t)) for t in thresholds}
    return RunSummary(len(results), float(phi.min()), float(np.median(phi)), float(phi.max()), frac)
