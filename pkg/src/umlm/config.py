"""YAML configuration for the command line tool.

Every section is optional and every key has a default. Unknown keys are
rejected. Keys ending in ``_deg`` hold angles in degrees and are converted to
radians on load; nothing downstream sees degrees.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

from .arm import REPLAY_LEGS, ArmGeometry, DEFAULT_LIFTING_GUESS, Phase
from .coordination import CoordinationSetup
from .errors import ParseError, ValidationError
from .gripper import CouplingGeometry, FingerGeometry
from .kinetostatics import ContactDistances, SegmentLengths, SpringParams
from .pso import Bounds, ObjectiveContext, PsoConfig


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e6`` and ``1.0e-8`` as floats (YAML 1.1 wants ``1.0e+6``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?"
               r"|\.[0-9_]+(?:[eE][-+]?[0-9]+)?"
               r"|[0-9][0-9_]*[eE][-+]?[0-9]+"
               r"|\.(?:inf|Inf|INF)|[-+]\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$"),
    list("-+0123456789."),
)


@dataclass(frozen=True)
class TrajectoryConfig:
    step: float = 0.01
    speed: float = 0.1
    theta4_start: float = 0.35
    guess: tuple = DEFAULT_LIFTING_GUESS
    legs: tuple = REPLAY_LEGS


@dataclass(frozen=True)
class ContactConfig:
    """Single force evaluation. ``tau2``/``tau3`` default to the spring torques."""

    tau1: float = -1000.0
    tau2: Optional[float] = None
    tau3: Optional[float] = None
    alpha1: float = math.pi / 2
    alpha2: float = math.pi / 4
    alpha3: float = math.pi / 4
    d1: Optional[float] = None
    d2: Optional[float] = None
    d3: Optional[float] = None


@dataclass(frozen=True)
class SurfaceConfig:
    d1: float = 19.15
    d2_range: tuple = (5.0, 25.0)
    d3_range: tuple = (5.0, 25.0)
    counts: tuple = (41, 41)


@dataclass(frozen=True)
class OptimizeConfig:
    runs: int = 1
    bounds: Bounds = field(default_factory=Bounds)


@dataclass(frozen=True)
class CoordinateConfig:
    target: tuple = (500.0, 900.0)


@dataclass(frozen=True)
class CheckConfig:
    samples: int = 1000
    seed: int = 0
    tolerance: float = 1e-8


@dataclass(frozen=True)
class ToolConfig:
    arm: ArmGeometry = field(default_factory=ArmGeometry)
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    coupling: CouplingGeometry = field(default_factory=CouplingGeometry)
    finger: FingerGeometry = field(default_factory=FingerGeometry)
    segments: SegmentLengths = field(default_factory=SegmentLengths)
    springs: SpringParams = field(default_factory=SpringParams)
    contact: ContactConfig = field(default_factory=ContactConfig)
    surface: SurfaceConfig = field(default_factory=SurfaceConfig)
    objective: ObjectiveContext = field(default_factory=ObjectiveContext)
    pso: PsoConfig = field(default_factory=PsoConfig)
    optimize: OptimizeConfig = field(default_factory=OptimizeConfig)
    coordination: CoordinationSetup = field(default_factory=CoordinationSetup)
    coordinate: CoordinateConfig = field(default_factory=CoordinateConfig)
    check: CheckConfig = field(default_factory=CheckConfig)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the resolved configuration."""
        blob = json.dumps(_plain(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return _plain(self)


def _plain(obj):
    if is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Phase):
        return obj.value
    if isinstance(obj, float):
        return repr(obj)
    return obj


# --------------------------------------------------------------------------
# loading

def _line_index(text: str) -> dict:
    """Map key paths (tuples) to 1-based source lines."""
    index = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key_path = path + (k.value,)
                index[key_path] = k.start_mark.line + 1
                walk(v, key_path)

    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return index
    if root is not None:
        walk(root, ())
    return index


class _Reader:
    def __init__(self, data: dict, section: str, lines: dict):
        if not isinstance(data, dict):
            raise ParseError(f"section '{section}' must be a mapping{_at(lines, (section,))}")
        self.data = dict(data)
        self.section = section
        self.lines = lines

    def _where(self, key):
        return _at(self.lines, (self.section, key))

    def number(self, key, default, degrees=False):
        name = key + "_deg" if degrees else key
        if name not in self.data:
            return default
        v = self.data.pop(name)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{self.section}.{name} must be a number{self._where(name)}")
        v = float(v)
        if not math.isfinite(v):
            raise ValidationError(f"{self.section}.{name} must be finite")
        return math.radians(v) if degrees else v

    def optional_number(self, key, default=None):
        if key in self.data and self.data[key] is None:
            self.data.pop(key)
            return None
        return self.number(key, default)

    def integer(self, key, default):
        if key not in self.data:
            return default
        v = self.data.pop(key)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError(f"{self.section}.{key} must be an integer{self._where(key)}")
        return v

    def vector(self, key, default, length=None, degrees=False):
        name = key + "_deg" if degrees else key
        if name not in self.data:
            return default
        v = self.data.pop(name)
        if not isinstance(v, list) or (length is not None and len(v) != length):
            want = f"a list of {length} numbers" if length else "a list of numbers"
            raise ParseError(f"{self.section}.{name} must be {want}{self._where(name)}")
        out = []
        for item in v:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ParseError(f"{self.section}.{name} must contain numbers only{self._where(name)}")
            out.append(math.radians(item) if degrees else float(item))
        return tuple(out)

    def raw(self, key, default):
        return self.data.pop(key, default)

    def finish(self):
        if self.data:
            key = sorted(self.data)[0]
            raise ParseError(f"unknown key '{self.section}.{key}'{self._where(key)}")


def _at(lines, path):
    line = lines.get(path)
    return f" (line {line})" if line else ""


def _build(section, factory, **kwargs):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as err:
        raise ValidationError(f"{section}: {err}") from err


def _simple(section, cls, r: _Reader, angle_fields=()):
    base = cls()
    kwargs = {}
    for f in fields(cls):
        if f.name in angle_fields:
            kwargs[f.name] = r.number(f.name, getattr(base, f.name), degrees=True)
        else:
            kwargs[f.name] = r.number(f.name, getattr(base, f.name))
    r.finish()
    return _build(section, cls, **kwargs)


def parse_config(data: Optional[dict], lines: Optional[dict] = None) -> ToolConfig:
    lines = lines or {}
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ParseError("configuration root must be a mapping")
    known = {f.name for f in fields(ToolConfig)}
    for key in data:
        if key not in known:
            raise ParseError(f"unknown section '{key}'{_at(lines, (key,))}")

    def reader(name):
        return _Reader(data.get(name) or {}, name, lines)

    out = {}
    out["arm"] = _simple("arm", ArmGeometry, reader("arm"))
    out["coupling"] = _simple("coupling", CouplingGeometry, reader("coupling"), angle_fields=("alpha",))
    out["finger"] = _simple("finger", FingerGeometry, reader("finger"))
    out["segments"] = _simple("segments", SegmentLengths, reader("segments"))
    out["springs"] = _simple("springs", SpringParams, reader("springs"))
    out["coordination"] = _simple(
        "coordination", CoordinationSetup, reader("coordination"), angle_fields=("pregrasp_theta0",)
    )

    r = reader("trajectory")
    base = TrajectoryConfig()
    legs_raw = r.raw("legs_deg", None)
    legs = base.legs
    if legs_raw is not None:
        legs = []
        if not isinstance(legs_raw, list) or not legs_raw:
            raise ParseError(f"trajectory.legs_deg must be a non-empty list{_at(lines, ('trajectory', 'legs_deg'))}")
        for leg in legs_raw:
            ok = isinstance(leg, list) and len(leg) == 3 and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in leg[:2]
            )
            if not ok or leg[2] not in {p.value for p in Phase}:
                raise ParseError(
                    "trajectory.legs_deg entries must be [start_deg, stop_deg, lifting|grasping]"
                    + _at(lines, ("trajectory", "legs_deg"))
                )
            legs.append((math.radians(leg[0]), math.radians(leg[1]), Phase(leg[2])))
        legs = tuple(legs)
    traj = dict(
        step=r.number("step", base.step, degrees=True),
        speed=r.number("speed", base.speed),
        theta4_start=r.number("theta4_start", base.theta4_start, degrees=True),
        guess=r.vector("guess", base.guess, 2, degrees=True),
        legs=legs,
    )
    r.finish()
    if not traj["step"] > 0 or not traj["speed"] > 0:
        raise ValidationError("trajectory: step_deg and speed must be positive")
    out["trajectory"] = TrajectoryConfig(**traj)

    r = reader("contact")
    base = ContactConfig()
    contact = dict(
        tau1=r.number("tau1", base.tau1),
        tau2=r.optional_number("tau2"),
        tau3=r.optional_number("tau3"),
        alpha1=r.number("alpha1", base.alpha1, degrees=True),
        alpha2=r.number("alpha2", base.alpha2, degrees=True),
        alpha3=r.number("alpha3", base.alpha3, degrees=True),
        d1=r.optional_number("d1"),
        d2=r.optional_number("d2"),
        d3=r.optional_number("d3"),
    )
    r.finish()
    for k in ("d1", "d2", "d3"):
        if contact[k] is not None and not contact[k] > 0:
            raise ValidationError(f"contact: {k} must be positive")
    out["contact"] = ContactConfig(**contact)

    r = reader("surface")
    base = SurfaceConfig()
    surface = dict(
        d1=r.number("d1", base.d1),
        d2_range=r.vector("d2_range", base.d2_range, 2),
        d3_range=r.vector("d3_range", base.d3_range, 2),
        counts=tuple(int(c) for c in r.vector("counts", base.counts, 2)),
    )
    r.finish()
    if not surface["d1"] > 0 or min(surface["d2_range"] + surface["d3_range"]) <= 0:
        raise ValidationError("surface: contact distances must be positive")
    if min(surface["counts"]) < 1:
        raise ValidationError("surface: counts must be positive")
    out["surface"] = SurfaceConfig(**surface)

    r = reader("objective")
    base = ObjectiveContext()
    contacts_raw = r.raw("contacts", None)
    contacts = None
    if contacts_raw is not None:
        cr = _Reader(contacts_raw, "objective.contacts", lines)
        contacts = _build(
            "objective.contacts", ContactDistances,
            d1=cr.number("d1", None), d2=cr.number("d2", None), d3=cr.number("d3", None),
        )
        cr.finish()
        if None in (contacts.d1, contacts.d2, contacts.d3):
            raise ValidationError("objective.contacts: d1, d2 and d3 are all required")
    objective = dict(
        tau1=r.number("tau1", base.tau1),
        alpha2=r.number("alpha2", base.alpha2, degrees=True),
        alpha3=r.number("alpha3", base.alpha3, degrees=True),
        l18=r.number("l18", base.l18),
        l19=r.number("l19", base.l19),
        l20=r.number("l20", base.l20),
        l23=r.number("l23", base.l23),
        l24=r.number("l24", base.l24),
        l25=r.number("l25", base.l25),
        contacts=contacts,
        theta9=r.number("theta9", base.theta9, degrees=True),
        theta11=r.number("theta11", base.theta11, degrees=True),
        flex=r.number("flex", base.flex),
        branches=r.vector("branches", base.branches, 2),
        transmission_floor=r.number("transmission_floor", base.transmission_floor, degrees=True),
        penalty=r.number("penalty", base.penalty),
    )
    r.finish()
    out["objective"] = _build("objective", ObjectiveContext, **objective)

    r = reader("pso")
    base = PsoConfig()
    pso = dict(
        swarm_size=r.integer("swarm_size", base.swarm_size),
        max_iterations=r.integer("max_iterations", base.max_iterations),
        inertia=r.number("inertia", base.inertia),
        cognitive=r.number("cognitive", base.cognitive),
        social=r.number("social", base.social),
        seed=r.integer("seed", base.seed),
        velocity_clamp=r.number("velocity_clamp", base.velocity_clamp),
        workers=r.integer("workers", base.workers),
    )
    runs = r.integer("runs", 1)
    b = Bounds()
    lower = r.vector("lower", b.lower, 7)
    upper = r.vector("upper", b.upper, 7)
    r.finish()
    out["pso"] = _build("pso", PsoConfig, **pso)
    if runs < 1:
        raise ValidationError("pso: runs must be >= 1")
    out["optimize"] = OptimizeConfig(runs, _build("pso", Bounds, lower=lower, upper=upper))

    r = reader("coordinate")
    out["coordinate"] = CoordinateConfig(r.vector("target", CoordinateConfig().target, 2))
    r.finish()

    r = reader("check")
    base = CheckConfig()
    check = CheckConfig(
        r.integer("samples", base.samples), r.integer("seed", base.seed), r.number("tolerance", base.tolerance)
    )
    r.finish()
    if check.samples < 1 or not check.tolerance > 0:
        raise ValidationError("check: samples must be >= 1 and tolerance positive")
    out["check"] = check

    return ToolConfig(**out)


def load_config(path: Optional[Any] = None) -> ToolConfig:
    """Read and validate a YAML configuration; ``None`` gives all defaults."""
    if path is None:
        return ToolConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"cannot read {p}: {err}") from err
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ParseError(f"{p}: invalid YAML{where}: {getattr(err, 'problem', err)}") from err
    return parse_config(data, _line_index(text))


__all__ = [
    "ToolConfig", "TrajectoryConfig", "ContactConfig", "SurfaceConfig", "OptimizeConfig",
    "CoordinateConfig", "CheckConfig", "load_config", "parse_config",
]
