import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from umlm.errors import AssemblyError, OverconstrainedPin
from umlm.gripper import (
    CouplingGeometry,
    CouplingState,
    CrossSectionState,
    FingerGeometry,
    FingerState,
    close_cross_section,
    coupling_residual,
    cross_section_constraints,
    dyad,
    finger_pose,
    finger_residuals,
    gripper_input_height,
    solve_coupling,
    solve_cross_section,
    solve_finger,
    transmission_angle,
)
from umlm.numerics import NewtonSettings

TIGHT = NewtonSettings(tolerance=1e-13)
CG = CouplingGeometry()


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)


# ---------------------------------------------------------------- coupling

def test_coupling_matches_grid_oracle(golden):
    g = golden["coupling"]
    s = solve_coupling(CG, g["l9"])
    assert abs(s.theta5 - g["theta5"]) < 1e-8 and abs(s.theta6 - g["theta6"]) < 1e-8
    assert np.linalg.norm(coupling_residual(CG, s.l9, s.theta5, s.theta6)) <= 1e-8


def test_coupling_zero_drive():
    s = solve_coupling(CG, 45.0)
    assert s.omega5 == s.omega6 == s.beta5 == s.beta6 == 0.0


def test_coupling_rates_and_accels_match_finite_differences():
    l9, v, a = 45.0, 2.0, 0.0
    s = solve_coupling(CG, l9, v, a, settings=TIGHT)
    h = 1e-6
    p, m = solve_coupling(CG, l9 + h, settings=TIGHT), solve_coupling(CG, l9 - h, settings=TIGHT)
    fd = np.array([p.theta5 - m.theta5, p.theta6 - m.theta6]) / (2 * h) * v
    assert rel([s.omega5, s.omega6], fd) < 1e-6
    h = 1e-4
    p, m = solve_coupling(CG, l9 + h, v, settings=TIGHT), solve_coupling(CG, l9 - h, v, settings=TIGHT)
    fd = np.array([p.omega5 - m.omega5, p.omega6 - m.omega6]) / (2 * h) * v
    assert rel([s.beta5, s.beta6], fd) < 1e-5


def test_coupling_accel_term_is_linear_in_l9_accel():
    s0 = solve_coupling(CG, 45.0, 1.0, 0.0)
    s1 = solve_coupling(CG, 45.0, 1.0, 3.0)
    s2 = solve_coupling(CG, 45.0, 0.0, 3.0)
    assert s1.beta5 == pytest.approx(s0.beta5 + s2.beta5, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(35.0, 55.0), st.floats(0.1, 4.0))
def test_coupling_rates_linear(l9, c):
    s1 = solve_coupling(CG, l9, 1.0)
    sc = solve_coupling(CG, l9, c)
    assert sc.omega5 == pytest.approx(c * s1.omega5, rel=1e-13)
    assert sc.omega6 == pytest.approx(c * s1.omega6, rel=1e-13)


def test_input_height_extremum():
    g = CouplingGeometry(alpha=0.3)
    s = CouplingState(l9=0.0, theta5=0.0, theta6=math.pi / 2 - 0.3, omega6=1.7)
    h, hr, _ = gripper_input_height(g, s)
    assert h == pytest.approx(g.l13, abs=1e-12)
    assert abs(hr) < 1e-12


def test_input_height_frozen_joint():
    s = CouplingState(l9=0.0, theta5=0.0, theta6=1.1)
    _, hr, ha = gripper_input_height(CG, s)
    assert hr == 0.0 and ha == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-2, 2).filter(lambda w: abs(w) > 1e-2), st.floats(-2, 2))
def test_input_height_derivatives(theta6, omega6, beta6):
    h = 1e-6
    s = CouplingState(0.0, 0.0, theta6, omega6=omega6, beta6=beta6)
    _, hr, ha = gripper_input_height(CG, s)
    hp = gripper_input_height(CG, replace(s, theta6=theta6 + h))[0]
    hm = gripper_input_height(CG, replace(s, theta6=theta6 - h))[0]
    dh = (hp - hm) / (2 * h)
    assume(abs(dh) > 1e-3)
    assert hr == pytest.approx(dh * omega6, rel=1e-7)
    rp = gripper_input_height(CG, replace(s, theta6=theta6 + h, beta6=0.0))[1]
    rm = gripper_input_height(CG, replace(s, theta6=theta6 - h, beta6=0.0))[1]
    assert ha == pytest.approx((rp - rm) / (2 * h) * omega6 + dh * beta6, rel=1e-6, abs=1e-8)


# ---------------------------------------------------------------- cross-section

def consistent(rng=None, l14=25.0, l15=25.0):
    if rng is None:
        return close_cross_section(40.0, l14, l15, 28.02, 0.3, 1.2, 0.3, -0.2, 0.1)
    # keep theta7 and theta8 apart: the free pair is singular when l14 and l15 fold collinear
    t7 = rng.uniform(-0.8, 0.8)
    t8 = t7 + rng.choice([-1.0, 1.0]) * rng.uniform(0.4, 1.2)
    return close_cross_section(
        rng.uniform(20, 60), rng.uniform(10, 40), rng.uniform(10, 40), rng.uniform(20, 30),
        rng.uniform(0.0, 0.6), rng.uniform(0.5, 2.0), t7, t8, rng.uniform(-0.5, 0.5),
    )


def test_forward_closed_state_is_consistent():
    s = consistent()
    pos, vel, acc = cross_section_constraints(s)
    assert np.linalg.norm(pos) <= 1e-12 and not vel.any() and not acc.any()


def test_pinned_fixed_point():
    s = consistent()
    pins = {i: s.angle(i) for i in (6, 9, 10)}
    r = solve_cross_section(s, pins)
    assert np.allclose(r.theta, s.theta, atol=1e-12)


def test_perturbation_violates_position():
    s = consistent()
    t = list(s.theta)
    t[1] += 0.1
    assert np.linalg.norm(cross_section_constraints(replace(s, theta=tuple(t)))[0]) > 0


def test_symmetric_palm_mirror():
    s = consistent(l14=25.0, l15=25.0)
    pins = {i: s.angle(i) for i in (6, 9, 10)}
    t7, t8 = s.angle(7), s.angle(8)
    swapped = list(s.theta)
    swapped[1], swapped[2] = t8 + 0.01, t7 - 0.01
    r = solve_cross_section(replace(s, theta=tuple(swapped)), pins)
    assert r.angle(7) == pytest.approx(t8, abs=1e-9) and r.angle(8) == pytest.approx(t7, abs=1e-9)


def test_overconstrained_pins():
    s = consistent()
    # a closing link far longer than l14 + l15 leaves a gap the free pair cannot span
    with pytest.raises(OverconstrainedPin):
        solve_cross_section(replace(s, l17=500.0), {i: s.angle(i) for i in (6, 9, 10)})


def test_pin_count_enforced():
    s = consistent()
    with pytest.raises(ValueError):
        solve_cross_section(s, {6: 0.0, 9: 0.0})
    with pytest.raises(ValueError):
        replace(s, pinned=frozenset({6, 7}))


def test_forward_generate_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(100):
        s = consistent(rng)
        pins = {i: s.angle(i) for i in (6, 9, 10)}
        t = list(s.theta)
        t[1] += rng.uniform(-0.05, 0.05)
        t[2] += rng.uniform(-0.05, 0.05)
        r = solve_cross_section(replace(s, theta=tuple(t)), pins, TIGHT)
        assert np.max(np.abs(np.array(r.theta) - s.theta)) < 1e-8
        assert np.linalg.norm(cross_section_constraints(r)[0]) <= 1e-8


@pytest.mark.parametrize("pins", [(6, 9, 10), (6, 7, 8), (7, 8, 10), (6, 8, 9)])
def test_rates_and_accels_close_the_loop(pins):
    s = consistent()
    omega = [0.0] * 5
    beta = [0.0] * 5
    for i, w in zip(pins, (0.3, -0.2, 0.1)):
        omega[i - 6] = w
        beta[i - 6] = 0.5 * w
    s = replace(s, omega=tuple(omega), beta=tuple(beta))
    r = solve_cross_section(s, {i: s.angle(i) for i in pins})
    _, vel, acc = cross_section_constraints(r)
    assert np.linalg.norm(vel) < 1e-10 and np.linalg.norm(acc) < 1e-10


def test_velocity_and_accel_residuals_match_finite_differences():
    s = consistent()
    rng = np.random.default_rng(3)
    w = rng.normal(size=5)
    b = rng.normal(size=5)
    s = replace(s, omega=tuple(w), beta=tuple(b))
    th = np.array(s.theta)

    def pos(t):
        return cross_section_constraints(replace(s, theta=tuple(th + t * w + 0.5 * t * t * b)))[0]

    h = 1e-5
    vel_fd = (pos(h) - pos(-h)) / (2 * h)
    acc_fd = (pos(h) - 2 * pos(0.0) + pos(-h)) / (h * h)
    _, vel, acc = cross_section_constraints(s)
    assert rel(vel, vel_fd) < 1e-6
    assert rel(acc, acc_fd) < 1e-4


# ---------------------------------------------------------------- finger

FG = FingerGeometry()


def test_right_isosceles_three_bar():
    g = FingerGeometry(l20=20.0, l22=20.0, l25=20.0 * math.sqrt(2))
    assert abs(g.three_bar_cosine()) < 1e-12
    s = finger_pose(g, 0.0, math.pi / 2, math.pi / 4)
    assert s.theta13 + s.theta17 == pytest.approx(math.pi / 2, abs=1e-12)


def test_triangle_invariant():
    with pytest.raises(ValueError):
        FingerGeometry(l20=25.0, l22=13.58, l25=40.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(5, 50), st.floats(5, 50), st.floats(0.01, 0.99))
def test_three_bar_cosine_in_range(l20, l22, t):
    lo, hi = abs(l20 - l22), l20 + l22
    l25 = lo + t * (hi - lo)
    assume(lo < l25 < hi)
    assert -1.0 <= FingerGeometry(l20=l20, l22=l22, l25=l25).three_bar_cosine() <= 1.0


def test_group_b_assembles_at_45_degrees():
    s = finger_pose(FG, 0.0, math.pi / 2, math.pi / 4)
    loop1, loop2, tb, _, _ = finger_residuals(FG, s)
    assert np.linalg.norm(loop1) <= 1e-8 and np.linalg.norm(loop2) <= 1e-8 and abs(tb) <= 1e-10


def test_transmission_angle_golden(golden):
    s = finger_pose(FG, 0.0, math.pi / 2, math.pi / 4)
    ref = [g for g in golden["transmission_group_b"] if abs(g["theta15"] - s.theta15) < 1e-9]
    assert len(ref) == 1
    assert s.transmission_angle == pytest.approx(ref[0]["angle"], abs=1e-10)
    assert math.degrees(s.transmission_angle) == pytest.approx(64.615, abs=1e-3)


def test_transmission_angle_limits():
    base = finger_pose(FG, 0.0, math.pi / 2, math.pi / 4)
    assert transmission_angle(FG, replace(base, theta15=base.theta11)) == 0.0
    assert transmission_angle(FG, replace(base, theta15=base.theta11 + math.pi)) == 0.0
    assert transmission_angle(FG, replace(base, theta15=base.theta11 + math.pi / 2)) == pytest.approx(math.pi / 2)


def test_assembly_error():
    with pytest.raises(AssemblyError):
        finger_pose(FingerGeometry(l16=28.02, l21=1.0, l23=1.0), 0.0, math.pi / 2, math.pi / 4)
    with pytest.raises(AssemblyError):
        dyad(1.0, 1.0, (10.0, 0.0), 1.0)


def _toggle_cosines(s):
    """|cos| of the dyad branch angle of every loop closure used by the
    forward and inverse finger solves; 1 at a toggle position."""
    e = lambda a: np.array([math.cos(a), math.sin(a)])
    out = []
    for p, q, K in (
        (FG.l23, FG.l21, FG.l18 * e(s.theta11) - FG.l16 * e(s.theta9)),
        (FG.l24, FG.l22, FG.l19 * e(s.theta12) - FG.l21 * e(s.theta15)),
        (FG.l18, FG.l23, FG.l16 * e(s.theta9) - FG.l21 * e(s.theta15)),
        (FG.l19, FG.l24, FG.l21 * e(s.theta15) - FG.l22 * e(s.theta17)),
    ):
        k = np.hypot(*K)
        out.append(abs((p * p - k * k - q * q) / (2 * q * k)))
    return out


def test_solve_finger_round_trip():
    rng = np.random.default_rng(5)
    done = 0
    while done < 100:
        theta9 = rng.uniform(-0.3, 0.3)
        t11 = rng.uniform(1.2, 1.9)
        t12 = t11 - rng.uniform(0.2, 1.0)
        branches = (rng.choice([-1.0, 1.0]), rng.choice([-1.0, 1.0]))
        try:
            ref = finger_pose(FG, theta9, t11, t12, branches)
        except AssemblyError:
            continue
        # skip poses next to a toggle position, where both branches nearly coincide
        if max(_toggle_cosines(ref)) > 0.98:
            continue
        guess = np.array([ref.theta11, ref.theta14, ref.theta12, ref.theta16]) + rng.uniform(-0.02, 0.02, 4)
        s = solve_finger(FG, theta9, ref.theta15, ref.theta17, guess)
        got = np.array([s.theta11, s.theta14, s.theta12, s.theta16, s.theta13])
        want = np.array([ref.theta11, ref.theta14, ref.theta12, ref.theta16, ref.theta13])
        assert np.max(np.abs(got - want)) < 1e-8
        loop1, loop2, tb, r1, r2 = finger_residuals(FG, s)
        assert np.linalg.norm(loop1) <= 1e-8 and np.linalg.norm(loop2) <= 1e-8 and abs(tb) <= 1e-10
        done += 1


def _finger_at(t, base, w9, w15, w17):
    return solve_finger(FG, base.theta9 + t * w9, base.theta15 + t * w15, base.theta17 + t * w17,
                        (base.theta11, base.theta14, base.theta12, base.theta16))


def test_finger_rates_match_finite_differences():
    base = finger_pose(FG, 0.0, math.pi / 2, math.pi / 4)
    w9, w15, w17 = 0.05, 0.3, -0.2
    s = solve_finger(FG, base.theta9, base.theta15, base.theta17,
                     (base.theta11, base.theta14, base.theta12, base.theta16), w9, w15, w17)
    h = 1e-6
    p, m = _finger_at(h, base, w9, w15, w17), _finger_at(-h, base, w9, w15, w17)
    for k in ("11", "12", "13", "14", "16"):
        fd = (getattr(p, "theta" + k) - getattr(m, "theta" + k)) / (2 * h)
        assert getattr(s, "omega" + k) == pytest.approx(fd, rel=1e-6, abs=1e-9)
    assert np.linalg.norm(finger_residuals(FG, s)[3]) < 1e-10
    assert np.linalg.norm(finger_residuals(FG, s)[4]) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0))
def test_finger_rates_linear(c):
    base = finger_pose(FG, 0.0, math.pi / 2, math.pi / 4)
    g = (base.theta11, base.theta14, base.theta12, base.theta16)
    s1 = solve_finger(FG, 0.0, base.theta15, base.theta17, g, 0.1, 0.2, -0.1)
    sc = solve_finger(FG, 0.0, base.theta15, base.theta17, g, 0.1 * c, 0.2 * c, -0.1 * c)
    for k in ("omega11", "omega12", "omega13", "omega14", "omega16"):
        assert getattr(sc, k) == pytest.approx(c * getattr(s1, k), rel=1e-12, abs=1e-15)
