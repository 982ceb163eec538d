import numpy as np
import pytest
from hypothesis import given, strategies as st

from blendcg.linesearch import (LineSearchError, backtracking, exact_quadratic, increment,
                                ternary)
from blendcg.objectives import QuadraticObjective

from conftest import identity_quadratic, random_quadratic


def test_ternary_symmetric():
    res = ternary(identity_quadratic(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert res.gamma == pytest.approx(0.5, abs=1e-6)
    np.testing.assert_allclose(res.point, [0.5, 0.5], atol=1e-6)


def test_ternary_endpoint():
    # f(x) = x_1 up to a constant: minimized at e2, i.e. gamma = 0 on [e2, e1]
    f = QuadraticObjective(np.array([[1.0, 0.0]]), np.array([-10.0]))
    res = ternary(f, np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert res.gamma == 0.0
    assert res.f_value == f(np.array([0.0, 1.0]))


def test_ternary_zero_budget():
    with pytest.raises(ValueError):
        ternary(identity_quadratic(2), np.zeros(2), np.ones(2), budget=0)


@given(st.integers(0, 2**32 - 1))
def test_ternary_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    f = random_quadratic(rng, 6, 4)
    a, b = rng.standard_normal(4), rng.standard_normal(4)
    res = ternary(f, a, b)
    assert res.gamma == pytest.approx(exact_quadratic(f, a, b), abs=1e-6)
    # never worse than either endpoint
    assert res.f_value <= min(f(a), f(b)) + 1e-12 * (1 + abs(f(a)))
    assert res.delta == pytest.approx(f(res.point) - f(a), abs=1e-9)


def test_ternary_gamma_max():
    res = ternary(identity_quadratic(1), np.array([2.0]), np.array([1.0]), gamma_max=0.5)
    # minimizer at gamma = 2 lies outside [0, 0.5]
    assert res.gamma == 0.5


def test_increment_resolves_tiny_changes():
    f = identity_quadratic(2, center=[1e8, 0.0])
    a = np.zeros(2)
    b = np.array([1e-9, 0.0])
    # the raw difference is lost against f(a) = 1e16
    assert increment(f, a, b) == pytest.approx(-2e-1, rel=1e-6)


def test_backtracking_accepts_full_step():
    f = identity_quadratic(2)
    res = backtracking(f, np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    assert res.gamma == 1.0 and res.f_value == 0.0


def test_backtracking_ascent_exhausts():
    f = identity_quadratic(2)
    with pytest.raises(LineSearchError):
        backtracking(f, np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_backtracking_validation():
    f = identity_quadratic(1)
    with pytest.raises(ValueError):
        backtracking(f, np.ones(1), -np.ones(1), shrink=1.0)
    with pytest.raises(ValueError):
        backtracking(f, np.ones(1), -np.ones(1), sufficient_decrease=0.1)


def test_backtracking_armijo():
    f = identity_quadratic(1)
    x, d = np.array([1.0]), np.array([-4.0])
    res = backtracking(f, x, d, slope=float(f.gradient(x) @ d), sufficient_decrease=0.5)
    assert res.delta <= 0.5 * res.gamma * float(f.gradient(x) @ d)


def test_backtracking_half_of_exact_decrease_on_gradient_steps():
    rng = np.random.default_rng(7)
    good = 0
    for _ in range(1000):
        f = random_quadratic(rng, 5, 5)
        a = rng.standard_normal(5)
        b = a - f.gradient(a) / f.L
        g_star = exact_quadratic(f, a, b)
        best = f(a + g_star * (b - a)) - f(a)
        res = backtracking(f, a, b - a)
        assert res.f_value < f(a)
        good += res.delta <= 0.5 * best
    assert good >= 950


def test_backtracking_can_stop_just_short_of_the_zero_crossing():
    # f(gamma) - f(0) = gamma^2 - 0.74 gamma: gamma = 1 is rejected and 0.7, just below
    # the zero crossing, recovers about a fifth of the optimal decrease
    f = identity_quadratic(1, center=[0.37])
    a, b = np.array([0.0]), np.array([1.0])
    res = backtracking(f, a, b - a)
    best = f(np.array([0.37])) - f(a)
    assert res.gamma == pytest.approx(0.7)
    assert res.delta > 0.5 * best
