"""Regenerate tests/data/golden.json from independent reference computations.

Each value is found without the package solvers: dense grid searches over
the loop equations (written out again here) followed by a scipy ``fsolve``
polish, or hand-derived analytic expressions. Run from the repository root:

    python tests/oracles/make_golden.py
"""

import json
import math
from pathlib import Path

import numpy as np
from scipy.optimize import fsolve

OUT = Path(__file__).resolve().parents[1] / "data" / "golden.json"
GRID = 2000


def grid_then_polish(residual, lo, hi, near):
    """All grid minima of |residual| below a coarse threshold, polished; the one nearest ``near``."""
    a = np.linspace(lo[0], hi[0], GRID)
    b = np.linspace(lo[1], hi[1], GRID)
    A, B = np.meshgrid(a, b, indexing="ij")
    R = residual(A, B)
    norm = np.hypot(R[0], R[1])
    cell = max((hi[0] - lo[0]), (hi[1] - lo[1])) / GRID
    cand = np.argwhere(norm < 50 * cell * max(1.0, norm.max() / 100))
    best = None
    for i, j in cand[np.argsort(norm[cand[:, 0], cand[:, 1]])][:400]:
        x0 = np.array([A[i, j], B[i, j]])
        sol, info, ier, _ = fsolve(lambda v: residual(v[0], v[1]), x0, full_output=True, xtol=1e-14)
        if ier != 1 or np.hypot(*residual(*sol)) > 1e-9:
            continue
        d = np.hypot(*(sol - np.asarray(near)))
        if best is None or d < best[0]:
            best = (d, sol)
    return [float(v) for v in best[1]]


def arm():
    l0, l1, l2, l3, l7, l8 = 397.0, 181.0, 130.0, 180.0, 100.0, 150.0
    t1, t4 = 1.047, 0.35

    def res(t0, t2):
        x = l2 * np.cos(t1) - l3 * np.cos(t1 + t2) - l7 * np.sin(t0 - t4) - (-l1 + l8 * np.sin(t0))
        y = l2 * np.sin(t1) - l3 * np.sin(t1 + t2) + l7 * np.cos(t0 - t4) - (l0 - l8 * np.cos(t0))
        return np.array([x, y])

    t0, t2 = grid_then_polish(res, (-math.pi, -math.pi), (math.pi, math.pi), (0.44, -1.32))
    return {"theta1": t1, "theta4": t4, "theta0": t0, "theta2": t2}


def coupling():
    l10, l11, l12, l9 = 40.0, 50.0, 60.0, 45.0

    def res(t5, t6):
        x = l11 * np.cos(t5 - math.pi / 2) - (l9 + l12 * np.cos(math.pi - t6))
        y = l10 + l11 * np.sin(t5 - math.pi / 2) - l12 * np.sin(math.pi - t6)
        return np.array([x, y])

    t5, t6 = grid_then_polish(res, (-math.pi, -math.pi), (math.pi, math.pi), (1.0, 1.0))
    return {"l9": l9, "theta5": t5, "theta6": t6}


def contact_point_partials():
    a1, a2, a3 = 0.4, 0.785398, 0.785398
    l18, l19, d1, d2, d3 = 38.3, 30.0, 19.15, 15.0, 12.5
    s1, c1 = math.sin(a1), math.cos(a1)
    s12, c12 = math.sin(a1 + a2), math.cos(a1 + a2)
    s123, c123 = math.sin(a1 + a2 + a3), math.cos(a1 + a2 + a3)
    # rows: P1x, P1y, P2x, P2y, P3x, P3y; columns: a1, a2, a3
    J = [
        [d1 * s1, 0.0, 0.0],
        [-d1 * c1, 0.0, 0.0],
        [l18 * s1 + d2 * s12, d2 * s12, 0.0],
        [-l18 * c1 - d2 * c12, -d2 * c12, 0.0],
        [l18 * s1 + l19 * s12 + d3 * s123, l19 * s12 + d3 * s123, d3 * s123],
        [-l18 * c1 - l19 * c12 - d3 * c123, -l19 * c12 - d3 * c123, -d3 * c123],
    ]
    return {"alpha": [a1, a2, a3], "segments": [l18, l19], "contacts": [d1, d2, d3], "jacobian": J}


def transmission():
    # group B finger at theta9 = 0, theta11 = pi/2: loop l16 e9 + l23 e14 = l21 e15 + l18 e11
    l16, l18, l21, l23 = 28.02, 38.3, 15.0, 35.0
    t9, t11 = 0.0, math.pi / 2

    def res(t14, t15):
        x = l16 * np.cos(t9) + l23 * np.cos(t14) - l21 * np.cos(t15) - l18 * np.cos(t11)
        y = l16 * np.sin(t9) + l23 * np.sin(t14) - l21 * np.sin(t15) - l18 * np.sin(t11)
        return np.array([x, y])

    sols = []
    for near in [(0.0, 0.0), (3.0, 3.0), (1.0, -2.0), (-1.0, 2.0)]:
        sols.append(tuple(round(v, 12) for v in grid_then_polish(res, (-math.pi, -math.pi), (math.pi, math.pi), near)))
    out = []
    for t14, t15 in sorted(set(sols)):
        # joint positions: coupler from B = l16 e9 + l23 e14 to C = l18 e11, follower from origin to C
        B = np.array([l16 * math.cos(t9) + l23 * math.cos(t14), l16 * math.sin(t9) + l23 * math.sin(t14)])
        C = np.array([l18 * math.cos(t11), l18 * math.sin(t11)])
        coupler, follower = C - B, C
        cosang = abs(coupler @ follower) / (np.linalg.norm(coupler) * np.linalg.norm(follower))
        out.append({"theta14": t14, "theta15": t15, "angle": math.acos(min(1.0, cosang))})
    return out


def main():
    golden = {
        "arm_lifting": arm(),
        "coupling": coupling(),
        "contact_point_partials": contact_point_partials(),
        "transmission_group_b": transmission(),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    print(json.dumps(golden, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
