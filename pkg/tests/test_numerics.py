import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from umlm.errors import NoConvergence, SingularJacobian
from umlm.numerics import NewtonSettings, check_conditioning, fd_jacobian, solve_newton


def test_linear_root_in_one_step():
    rep = solve_newton(lambda x: x - 3.0, [0.0])
    assert rep.converged
    assert rep.solution[0] == pytest.approx(3.0, abs=1e-12)
    assert 1 <= rep.iterations <= 2


def test_sqrt_two():
    # default tolerance 1e-10 bounds |x - sqrt 2| by ~3.5e-11; tighten it for a 1e-12 root
    rep = solve_newton(lambda x: x * x - 2.0, [1.0], NewtonSettings(tolerance=1e-14))
    assert rep.converged
    assert abs(rep.solution[0] - math.sqrt(2.0)) < 1e-12


def test_analytic_jacobian_is_used():
    calls = []

    def jac(x):
        calls.append(1)
        return np.array([[2 * x[0]]])

    rep = solve_newton(lambda x: x * x - 4.0, [1.0], jacobian=jac)
    assert rep.converged and calls
    assert rep.solution[0] == pytest.approx(2.0)


def test_already_converged_start_takes_zero_iterations():
    rep = solve_newton(lambda x: x - 1.0, [1.0])
    assert rep.converged and rep.iterations == 0


def test_singular_jacobian_raises():
    with pytest.raises(SingularJacobian):
        solve_newton(lambda x: np.array([x[0] + x[1] - 1, 2 * x[0] + 2 * x[1] - 3]), [0.0, 0.0])


def test_no_descent_raises_no_convergence():
    # x^2 + 1 has no real root; Newton stalls at the minimum
    with pytest.raises((NoConvergence, SingularJacobian)):
        solve_newton(lambda x: x * x + 1.0, [0.3], NewtonSettings(max_iterations=200))


def test_iteration_budget_gives_unconverged_report():
    rep = solve_newton(lambda x: np.arctan(x) - 1.0, [0.0], NewtonSettings(tolerance=1e-300, max_iterations=3))
    assert not rep.converged and rep.iterations == 3


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        solve_newton(lambda x: np.array([x[0], x[0]]), [0.0])


@pytest.mark.parametrize("kwargs", [dict(tolerance=0), dict(max_iterations=0), dict(damping_floor=0), dict(damping_floor=1.5)])
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        NewtonSettings(**kwargs)


def test_check_conditioning():
    check_conditioning(np.eye(2))
    with pytest.raises(SingularJacobian):
        check_conditioning(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]]))
    with pytest.raises(SingularJacobian):
        check_conditioning(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_fd_jacobian_linear_map():
    A = np.array([[1.5, -2.0], [0.25, 4.0]])
    J = fd_jacobian(lambda x: A @ x, np.array([0.3, -0.7]))
    assert np.allclose(J, A, atol=1e-9)


def test_fd_jacobian_unit_circle():
    J = fd_jacobian(lambda t: np.array([math.cos(t[0]), math.sin(t[0])]), np.array([0.0]), 1e-6)
    assert abs(J[0, 0]) < 1e-9 and abs(J[1, 0] - 1.0) < 1e-9


def test_fd_jacobian_second_order_error():
    # cubic so the central difference error is h^2 * f'''/6, not zero
    f = lambda x: np.array([x[0] ** 3 + x[0] * x[1], x[1] ** 3])
    x = np.array([1.3, -0.4])
    exact = np.array([[3 * x[0] ** 2 + x[1], x[0]], [0.0, 3 * x[1] ** 2]])
    for h in (1e-3, 1e-4):
        e1 = np.max(np.abs(fd_jacobian(f, x, h) - exact))
        e2 = np.max(np.abs(fd_jacobian(f, x, h / 2) - exact))
        assert e1 >= 3 * e2


def test_fd_jacobian_quadratic_error_halves_by_three():
    # exact quadratics are differentiated without truncation; the error is rounding only
    f = lambda x: np.array([x[0] ** 2 + 3 * x[0] * x[1]])
    x = np.array([0.5, 2.0])
    exact = np.array([[2 * x[0] + 3 * x[1], 3 * x[0]]])
    for h in (1e-3, 1e-5):
        assert np.max(np.abs(fd_jacobian(f, x, h) - exact)) < 1e-8


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    st.lists(st.floats(-10, 10), min_size=2, max_size=2),
)
def test_affine_converges_in_one_step(entries, b):
    A = np.array(entries).reshape(2, 2) + 6 * np.eye(2)  # diagonally dominant
    b = np.array(b)
    rep = solve_newton(lambda x: A @ x - b, [0.0, 0.0], jacobian=lambda x: A)
    assert rep.converged and rep.iterations <= 1


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 50.0), st.floats(0.5, 10.0))
def test_converged_reports_satisfy_tolerance(c, x0):
    res = lambda x: x * x - c
    rep = solve_newton(res, [x0])
    if rep.converged:
        assert np.linalg.norm(res(rep.solution)) <= NewtonSettings().tolerance
