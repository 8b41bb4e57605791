import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from knotbend.quadrature import (
    cumulative_simpson,
    integrate_with_drift,
    interval_simpson,
    log_slopes,
    periodic_cumulative,
    periodic_derivative,
    periodic_trapezoid,
    simpson_weights,
)


def test_simpson_weights_sum_to_one():
    for panels in (1, 2, 5):
        w = simpson_weights(panels)
        assert len(w) == 2 * panels + 1
        assert w.sum() == pytest.approx(1.0)


def test_interval_simpson_exact_for_cubics():
    breaks = np.array([0.0, 0.3, 1.0, 2.5])
    got = interval_simpson(lambda x: 4 * x**3 - x + 2, breaks, panels=1)
    exact = np.diff(breaks**4 - breaks**2 / 2 + 2 * breaks)
    assert np.allclose(got, exact, rtol=0, atol=1e-13)


def test_cumulative_simpson_starts_at_constant():
    breaks = np.linspace(0, np.pi, 33)
    out = cumulative_simpson(np.cos, breaks, constant=2.0)
    assert out[0] == 2.0
    # composite Simpson bound: width * h^4 / 180 * max|f(4)| with sub-step h
    h = (breaks[1] - breaks[0]) / 4
    assert np.max(np.abs(out - (2.0 + np.sin(breaks)))) < np.pi * h**4 / 180


@pytest.mark.parametrize("method", ["spectral", "fd4", "fd2"])
def test_periodic_derivative_of_trig(method):
    n = 128
    x = np.arange(n) * 2 * np.pi / n
    mh = 3 * 2 * np.pi / n
    # leading truncation error of each stencil on the sin(3x) mode
    tol = {"spectral": 1e-11, "fd4": 1.1 * 3 * mh**4 / 30, "fd2": 1.1 * 3 * mh**2 / 6}[method]
    y = np.sin(3 * x) + 0.5 * np.cos(x)
    d = periodic_derivative(y, 2 * np.pi, 1, method)
    assert np.max(np.abs(d - (3 * np.cos(3 * x) - 0.5 * np.sin(x)))) < tol


def test_periodic_derivative_order_two():
    n = 64
    x = np.arange(n) * 2 * np.pi / n
    d2 = periodic_derivative(np.sin(2 * x), 2 * np.pi, 2)
    assert np.max(np.abs(d2 + 4 * np.sin(2 * x))) < 1e-11


def test_fd_orders_converge():
    errs = []
    steps = []
    for n in (64, 128, 256):
        x = np.arange(n) * 2 * np.pi / n
        errs.append(np.max(np.abs(periodic_derivative(np.sin(x), 2 * np.pi, 1, "fd2") - np.cos(x))))
        steps.append(2 * np.pi / n)
    assert np.all(log_slopes(steps, errs) > 1.95)


def test_periodic_trapezoid_and_cumulative():
    n = 64
    x = np.arange(n) * 2 * np.pi / n
    assert periodic_trapezoid(np.cos(x) ** 2, 2 * np.pi) == pytest.approx(np.pi, abs=1e-13)
    cum = periodic_cumulative(np.cos(x), 2 * np.pi)
    assert cum[0] == 0.0
    assert np.max(np.abs(cum - np.sin(x))) < 1e-12


def test_integrate_with_drift_matches_direct_quadrature():
    # f(p) = periodic part + (p/P) * g(p), integrated over one period
    P = 2 * np.pi
    n = 128
    p = np.arange(n) * P / n
    g = np.cos(p) + 2.0
    values = np.sin(2 * p) ** 2 + (p / P) * g
    # exact: pi + (1/P) * int p (cos p + 2) dp = pi + (0 + P^2)/P
    assert integrate_with_drift(values, g, P) == pytest.approx(np.pi + P, abs=1e-10)


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        periodic_derivative(np.zeros(8), 1.0, 1, "magic")


@given(st.integers(1, 10), st.floats(-3, 3), st.floats(-3, 3))
def test_spectral_derivative_is_exact_on_resolved_modes(m, a, b):
    n = 64
    x = np.arange(n) * 2 * np.pi / n
    y = a * np.cos(m * x) + b * np.sin(m * x)
    dy = periodic_derivative(y, 2 * np.pi)
    assert np.max(np.abs(dy - m * (-a * np.sin(m * x) + b * np.cos(m * x)))) < 1e-10 * (1 + m * (abs(a) + abs(b)))
