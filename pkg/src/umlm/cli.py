"""Command line front end: ``umlm <command> [--config PATH] [--out DIR] [--seed N]``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 check failure.
Errors are reported on stderr as one JSON object with ``category`` and ``message``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, _kernels
from .arm import replay_profile, simulate_trajectory
from .config import ToolConfig, load_config
from .coordination import ee_position, plan_grasp
from .errors import ConfigError, SolverError, UMLMError
from .kinetostatics import (
    ContactDistances,
    JointTorques,
    KnuckleAngles,
    contact_forces,
    force_surface,
    monotonicity_report,
    oracle_sweep,
    relative_deviation,
    spring_torques,
    virtual_work_oracle,
)
from .pso import PhiObjective, multi_run, summarize

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def write_json(path: Path, payload) -> None:
    path.write_bytes((json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8"))


# --------------------------------------------------------------------------
# commands; each returns (exit code, list of written files)


def cmd_simulate_arm(cfg: ToolConfig, args, out: Path):
    t = cfg.trajectory
    profile = replay_profile(t.step, t.speed, t.legs)
    samples = simulate_trajectory(cfg.arm, profile, t.theta4_start, t.guess)
    deg = math.degrees
    header = [
        "time_s", "phase", "theta1_deg", "theta0_deg", "theta2_deg", "theta4_deg",
        "omega1_deg_s", "omega0_deg_s", "omega2_deg_s", "omega4_deg_s", "l6_mm", "l6_rate_mm_s", "l6_accel_mm_s2",
    ]
    rows = []
    for s in samples:
        st = s.state
        rows.append([
            s.time, s.phase.value, deg(st.theta1), deg(st.theta0), deg(st.theta2), deg(st.theta4),
            deg(st.omega1), deg(st.omega0), deg(st.omega2), deg(st.omega4), st.l6, st.l6_rate, st.l6_accel,
        ])
    path = out / "trajectory.csv"
    write_csv(path, header, rows)
    return EXIT_OK, [path]


def _torques(cfg: ToolConfig) -> JointTorques:
    c = cfg.contact
    tau2, tau3 = spring_torques(cfg.springs, c.alpha2, c.alpha3)
    return JointTorques(c.tau1, tau2 if c.tau2 is None else c.tau2, tau3 if c.tau3 is None else c.tau3)


def cmd_force_surface(cfg: ToolConfig, args, out: Path):
    s, c = cfg.surface, cfg.contact
    surf = force_surface(
        _torques(cfg), cfg.segments, KnuckleAngles(c.alpha1, c.alpha2, c.alpha3),
        s.d2_range, s.d3_range, s.d1, s.counts,
    )
    path = out / "force_surface.csv"
    write_csv(path, ["d2_mm", "d3_mm", "f1_N", "f2_N", "f3_N"], surf.rows())
    report = out / "monotonicity.json"
    write_json(report, {"d1_mm": surf.d1, "signs": monotonicity_report(surf)})
    return EXIT_OK, [path, report]


def cmd_eval_forces(cfg: ToolConfig, args, out: Path):
    c = cfg.contact
    mid = cfg.segments.midpoints()
    contacts = ContactDistances(
        mid.d1 if c.d1 is None else c.d1, mid.d2 if c.d2 is None else c.d2, mid.d3 if c.d3 is None else c.d3
    )
    torques = _torques(cfg)
    angles = KnuckleAngles(c.alpha1, c.alpha2, c.alpha3)
    closed = contact_forces(torques, cfg.segments, angles, contacts)
    oracle = virtual_work_oracle(torques, cfg.segments, angles, contacts)
    payload = {
        "torques_Nmm": {"tau1": torques.tau1, "tau2": torques.tau2, "tau3": torques.tau3},
        "contacts_mm": {"d1": contacts.d1, "d2": contacts.d2, "d3": contacts.d3},
        "closed_form_N": {"f1": closed.f1, "f2": closed.f2, "f3": closed.f3},
        "oracle_N": {"f1": oracle.f1, "f2": oracle.f2, "f3": oracle.f3},
        "oracle_deviation": relative_deviation(closed, oracle),
    }
    path = out / "forces.json"
    write_json(path, payload)
    return EXIT_OK, [path]


def cmd_optimize(cfg: ToolConfig, args, out: Path):
    pso = cfg.pso
    if args.particles is not None:
        pso = replace(pso, swarm_size=args.particles)
    if args.iters is not None:
        pso = replace(pso, max_iterations=args.iters)
    if args.workers is not None:
        pso = replace(pso, workers=args.workers)
    runs = cfg.optimize.runs if args.runs is None else args.runs
    if runs < 1:
        raise ConfigError("--runs must be >= 1")
    results = multi_run(PhiObjective(cfg.objective), cfg.optimize.bounds, pso, runs)

    hist = out / "history.csv"
    write_csv(hist, ["run", "seed", "iteration", "best_phi_N"], (
        [k, r.seed, i + 1, float(v)] for k, r in enumerate(results) for i, v in enumerate(r.history)
    ))
    best = min(range(len(results)), key=lambda k: (results[k].best_phi, k))
    names = ("l16_mm", "l21_mm", "l22_mm", "k1_Nmm_rad", "k2_Nmm_rad", "tau_s1_Nmm", "tau_s2_Nmm")
    runs_csv = out / "runs.csv"
    write_csv(runs_csv, ["run", "seed", "best_phi_N", *names, "evaluations"], (
        [k, r.seed, r.best_phi, *(float(v) for v in r.best_x), r.evaluations] for k, r in enumerate(results)
    ))
    summ = summarize(results)
    summary = out / "summary.json"
    write_json(summary, {
        "runs": summ.runs,
        "min_phi_N": summ.min_phi,
        "median_phi_N": summ.median_phi,
        "max_phi_N": summ.max_phi,
        "fraction_at_or_below": summ.thresholds,
        "best_run": best,
        "best_x": dict(zip(names, (float(v) for v in results[best].best_x))),
        "best_phi_N": results[best].best_phi,
        "swarm_size": pso.swarm_size,
        "max_iterations": pso.max_iterations,
    })
    return EXIT_OK, [hist, runs_csv, summary]


def cmd_coordinate(cfg: ToolConfig, args, out: Path):
    setup = cfg.coordination
    target = cfg.coordinate.target
    plan = plan_grasp(setup, target)
    back = ee_position(setup, plan.theta0, plan.x_veh)
    path = out / "plan.json"
    write_json(path, {
        "target_mm": {"x": target[0], "y": target[1]},
        "theta0_deg": math.degrees(plan.theta0),
        "theta0_rad": plan.theta0,
        "delta_h_mm": plan.delta_h,
        "x_veh_mm": plan.x_veh,
        "round_trip_error_mm": max(abs(back[0] - target[0]), abs(back[1] - target[1])),
    })
    return EXIT_OK, [path]


def cmd_check(cfg: ToolConfig, args, out: Path):
    chk = cfg.check
    res = oracle_sweep(chk.samples, chk.seed, cfg.segments)
    ok = res.max_deviation <= chk.tolerance
    print(f"oracle check: {res.samples} samples, max relative deviation {res.max_deviation:.3e} "
          f"(tolerance {chk.tolerance:.0e}) {'PASS' if ok else 'FAIL'}")
    path = out / "check.json"
    write_json(path, {
        "samples": res.samples, "seed": chk.seed, "max_deviation": res.max_deviation,
        "worst_index": res.worst_index, "tolerance": chk.tolerance, "passed": ok,
    })
    return (EXIT_OK if ok else EXIT_CHECK), [path]


COMMANDS = {
    "simulate-arm": cmd_simulate_arm,
    "force-surface": cmd_force_surface,
    "eval-forces": cmd_eval_forces,
    "optimize": cmd_optimize,
    "coordinate": cmd_coordinate,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file")
    common.add_argument("--out", type=Path, help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="override the PSO and check seeds")

    p = argparse.ArgumentParser(prog="umlm", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
        if name == "optimize":
            sp.add_argument("--runs", type=int)
            sp.add_argument("--particles", type=int)
            sp.add_argument("--iters", type=int)
            sp.add_argument("--workers", type=int, help="threads for objective evaluation")
    return p


def _report(err: UMLMError) -> None:
    line = {"category": err.category, "message": str(err)}
    idx = getattr(err, "sample_index", None)
    if idx is not None:
        line["sample_index"] = idx
    print(json.dumps(line, sort_keys=True), file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("config", "out", "seed", "runs", "particles", "iters", "workers"):
        if not hasattr(args, name):
            setattr(args, name, None)
    out = args.out or Path("out")
    started = datetime.now(timezone.utc).isoformat()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg = replace(cfg, pso=replace(cfg.pso, seed=args.seed), check=replace(cfg.check, seed=args.seed))
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise ConfigError(f"cannot create output directory {out}: {err}") from err
        try:
            code, files = COMMANDS[args.command](cfg, args, out)
        except ValueError as err:
            raise ConfigError(str(err)) from err
    except ConfigError as err:
        _report(err)
        return EXIT_CONFIG
    except SolverError as err:
        _report(err)
        return EXIT_SOLVER

    manifest = out / "manifest.json"
    write_json(manifest, {
        "tool": "umlm",
        "version": __version__,
        "command": args.command,
        "config_digest": cfg.digest(),
        "seed": cfg.pso.seed if args.command == "optimize" else cfg.check.seed,
        "backend": _kernels.backend(),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "exit_code": code,
        "outputs": sorted(f.name for f in files),
    })
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
