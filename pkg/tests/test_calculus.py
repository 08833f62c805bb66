import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from idgame.calculus import (
    EndpointFunction,
    EndpointOrderError,
    EndpointVectorFunction,
    aumann_integral,
    endpoint_crossovers,
    gh_derivative,
    gh_partial,
    integrate_samples,
    quasi_concavity_probe,
    simpson_panels,
)
from idgame.interval import Interval, IntervalVector, add

from oracles import example_corner


def approx_interval(I, lo, hi, tol):
    assert I.lo == pytest.approx(lo, abs=tol) and I.hi == pytest.approx(hi, abs=tol)


def test_construction_checks_ordering():
    with pytest.raises(EndpointOrderError):
        EndpointFunction(lambda t: t, lambda t: 0 * t, domain=[(-1, 1)])


def test_domain_arity_mismatch():
    with pytest.raises(ValueError):
        EndpointFunction(lambda x, y: x, lambda x, y: x + 1, arity=2, domain=[(0, 1)])


def test_gh_derivative_constant_offset():
    F = EndpointFunction(lambda t: t**2, lambda t: t**2 + 1)
    D = gh_derivative(F, 3.0)
    approx_interval(D, 6, 6, 1e-6)
    assert D.width < 1e-10


def test_gh_derivative_orders_endpoints():
    F = EndpointFunction(lambda t: -t, lambda t: t, domain=[(0.1, 5)])
    approx_interval(gh_derivative(F, 1.0), -1, 1, 1e-8)


def test_gh_derivative_against_analytic_cosine():
    F = EndpointFunction(np.sin, lambda t: np.sin(t) + 2)
    approx_interval(gh_derivative(F, 0.0, 1e-5), math.cos(0.0), math.cos(0.0), 1e-8)


def test_gh_derivative_margin_error():
    F = EndpointFunction(lambda t: t, lambda t: t + 1, domain=[(0, 1)])
    with pytest.raises(ValueError, match="boundary"):
        gh_derivative(F, 1e-6, 1e-5)


def test_gh_derivative_non_finite():
    F = EndpointFunction(lambda t: 1 / (t - 1e-6) if abs(t - 1e-6) > 0 else math.inf, lambda t: math.inf)
    with pytest.raises(ValueError, match="non-finite"):
        gh_derivative(F, 0.0)


def test_gh_derivative_second_order_convergence():
    F = EndpointFunction(np.exp, lambda t: np.exp(t) + np.sin(t) ** 2 + 1)
    t = 0.7
    exact = (math.exp(t), math.exp(t) + math.sin(2 * t))
    errs = []
    for h in (1e-2, 5e-3):
        D = gh_derivative(F, t, h)
        errs.append(max(abs(D.lo - min(exact)), abs(D.hi - max(exact))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize(
    "lo, hi, x0, expected",
    [
        (lambda x, y: x * y, lambda x, y: x * y + 1, (2, 3), (3, 3)),
        (lambda x, y: x**2, lambda x, y: 2 * x**2, (0, 5), (0, 0)),
        (lambda x, y: -x + y, lambda x, y: x + y, (1, 1), (-1, 1)),
    ],
)
def test_gh_partial(lo, hi, x0, expected):
    F = EndpointFunction(lo, hi, arity=2)
    approx_interval(gh_partial(F, x0, 0), *expected, 1e-8)


def test_gh_partial_second_axis():
    F = EndpointFunction(lambda x, y: x * y, lambda x, y: x * y + 1, arity=2)
    approx_interval(gh_partial(F, (2, 3), 1), 2, 2, 1e-8)


def test_crossover_between_samples():
    F = EndpointFunction(lambda t: -(t**2) / 2, lambda t: t**2 / 2 + 1)
    assert endpoint_crossovers(F, [-0.3, 0.4, 0.9]) == [-0.3]


def test_crossover_detected():
    # endpoint derivatives -t and +t swap order at t = 0
    F = EndpointFunction(lambda t: -(t**2) / 2, lambda t: t**2 / 2 + 1)
    hits = endpoint_crossovers(F, np.linspace(-1, 1, 5))
    assert hits == [-0.5]


def test_aumann_constant():
    T = 2.5
    I = aumann_integral(EndpointFunction.constant((-1, 3)), 0, T, 10)
    assert I == IntervalVector([Interval(-T, 3 * T)])


def test_aumann_polynomial_exact():
    I = aumann_integral(EndpointFunction(lambda t: t, lambda t: t + 1), 0, 2, 2)
    assert I == IntervalVector([Interval(2, 4)])


def test_aumann_example_state_against_closed_form():
    o = example_corner("ll")
    x = lambda t: np.array([float(o.x(s)) for s in np.atleast_1d(t)])
    F = EndpointFunction(lambda t: 0.9 * x(t) ** 2, lambda t: 1.2 * x(t) ** 2)
    I = aumann_integral(F, 0, 3, 2000)
    ix2 = o.x.square_integral(3)
    assert I[0].lo == pytest.approx(float(0.9 * ix2), rel=1e-6)
    assert I[0].hi == pytest.approx(float(mp.mpf("1.2") * ix2), rel=1e-6)


def test_aumann_vector_components():
    F = EndpointVectorFunction(
        (EndpointFunction.constant((0, 1)), EndpointFunction(lambda t: t**2, lambda t: t**2 + t))
    )
    I = aumann_integral(F, 0, 3, 6)
    assert I[0] == Interval(0, 3)
    assert I[1].lo == pytest.approx(9) and I[1].hi == pytest.approx(13.5)


@pytest.mark.parametrize("t0, t1, n", [(1, 1, 2), (2, 1, 2), (0, 1, 3), (0, 1, 0)])
def test_aumann_rejects_bad_arguments(t0, t1, n):
    with pytest.raises(ValueError):
        aumann_integral(EndpointFunction.constant((0, 1)), t0, t1, n)


def test_aumann_rejects_nonfinite_and_misordered():
    with np.errstate(divide="ignore"), pytest.raises(ValueError, match="non-finite"):
        aumann_integral(EndpointFunction(np.log, lambda t: 0 * t + 1), 0, 1, 4)
    with pytest.raises(EndpointOrderError):
        aumann_integral(EndpointFunction(lambda t: t, lambda t: 0.5 + 0 * t), 0, 1, 4)


def test_simpson_panels_rejects_odd():
    with pytest.raises(ValueError):
        simpson_panels(np.ones(4), 0, 1)


def test_integrate_samples():
    t = np.linspace(0, 1, 11)
    I = integrate_samples(t**2, t**2 + 1, 0, 1)
    assert I.lo == pytest.approx(1 / 3) and I.hi == pytest.approx(4 / 3)


@given(st.floats(0.5, 2.5), st.integers(0, 3))
def test_aumann_additive_over_subintervals(tm, deg):
    lo = lambda t: t**deg
    hi = lambda t: t**deg + (1 + t) ** 2
    F = EndpointFunction(lo, hi)
    whole = aumann_integral(F, 0, 3, 200)
    parts = add(aumann_integral(F, 0, tm, 200), aumann_integral(F, tm, 3, 200))
    assert np.allclose(whole.lo, parts.lo, atol=1e-12, rtol=0)
    assert np.allclose(whole.hi, parts.hi, atol=1e-12, rtol=0)


@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_aumann_width_monotone(a, b):
    wa, wb = min(a, b), max(a, b)
    F = EndpointFunction(np.sin, lambda t: np.sin(t) + wa * (1 + t**2))
    G = EndpointFunction(np.sin, lambda t: np.sin(t) + wb * (1 + t**2))
    assert aumann_integral(F, 0, 2, 20)[0].width <= aumann_integral(G, 0, 2, 20)[0].width + 1e-15


def test_quasi_concavity_constant_passes():
    F = EndpointFunction.constant((0, 1))
    assert quasi_concavity_probe(F, np.linspace(-1, 1, 5), Interval(-3, 7)).passed


def test_quasi_concavity_concave_passes():
    F = EndpointFunction(lambda x: -(x**2), lambda x: -(x**2) + 1, domain=[(-1, 1)])
    report = quasi_concavity_probe(F, np.linspace(-1, 1, 11), Interval(-0.5, 0.5))
    assert report.passed and report.checked > 0


def test_quasi_concavity_convex_fails_at_known_triple():
    F = EndpointFunction(lambda x: x**2, lambda x: x**2 + 1, domain=[(-1, 1)])
    report = quasi_concavity_probe(F, [-1, 0, 1], Interval(0.5, 1.5), lambdas=[0.5])
    assert not report.passed
    assert report.counterexample == {"x1": [-1.0], "x2": [1.0], "lambda": 0.5}


def test_quasi_concavity_empty_sample_set():
    with pytest.raises(ValueError, match="empty"):
        quasi_concavity_probe(EndpointFunction.constant((0, 1)), [], Interval(0, 1))
