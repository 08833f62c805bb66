"""Interval-valued functions given by their endpoint functions.

An interval-valued map ``F(x) = [f_lo(x), f_hi(x)]`` is stored as the two real
endpoint callables. Derivatives are central finite differences of the
endpoints (valid when both endpoints are differentiable); integrals are the
interval of the endpoint integrals, computed by composite Simpson quadrature.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .interval import Interval, IntervalVector, in_positive_interior

DEFAULT_STEP = 1e-5
DEFAULT_PANELS = 2000

Box = Sequence[tuple[float, float]]


class EndpointOrderError(ValueError):
    """An endpoint pair violates ``f_lo <= f_hi`` at some sample point."""


def evaluate_on(fn: Callable, *args, shape=None) -> np.ndarray:
    """Call ``fn`` on array arguments, falling back to a Python loop.

    Broadcasting-friendly callables are evaluated in one call. Callables that
    only accept scalars (``math.sin`` and the like) are evaluated elementwise.
    """
    arrays = [np.asarray(a, dtype=float) for a in args]
    if shape is None:
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
    try:
        out = np.asarray(fn(*arrays), dtype=float)
        if out.shape == shape:
            return out
        if out.shape == ():
            return np.full(shape, float(out))
    except (TypeError, ValueError):
        pass
    flat = [np.broadcast_to(a, shape).ravel() for a in arrays]
    vals = [float(fn(*row)) for row in zip(*flat)]
    return np.asarray(vals, dtype=float).reshape(shape)


def _sample_box(domain: Box, per_axis: int, max_points: int = 4096) -> np.ndarray:
    axes = []
    for lo, hi in domain:
        lo_c = max(lo, -10.0) if np.isfinite(lo) else (min(hi, 10.0) - 20.0 if np.isfinite(hi) else -10.0)
        hi_c = min(hi, 10.0) if np.isfinite(hi) else lo_c + 20.0
        axes.append(np.linspace(lo_c, hi_c, per_axis))
    if per_axis ** len(axes) <= max_points:
        return np.array(list(itertools.product(*axes)))
    rng = np.random.default_rng(0)
    lows = np.array([a[0] for a in axes])
    highs = np.array([a[-1] for a in axes])
    return lows + (highs - lows) * rng.random((max_points, len(axes)))


@dataclass(frozen=True)
class EndpointFunction:
    """Interval-valued function of ``arity`` real variables.

    ``domain`` is an axis-aligned box, one ``(lo, hi)`` pair per variable;
    when it is given the endpoint ordering is spot-checked on a sample grid
    at construction.
    """

    f_lo: Callable
    f_hi: Callable
    arity: int = 1
    domain: Optional[tuple[tuple[float, float], ...]] = None
    check_points: int = 7

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be at least 1")
        if self.domain is not None:
            dom = tuple((float(a), float(b)) for a, b in self.domain)
            if len(dom) != self.arity:
                raise ValueError(f"domain has {len(dom)} axes but arity is {self.arity}")
            if any(a > b for a, b in dom):
                raise ValueError("domain axis with lo > hi")
            object.__setattr__(self, "domain", dom)
            self.check_ordering(_sample_box(dom, self.check_points))

    @classmethod
    def constant(cls, value, arity: int = 1, domain=None) -> "EndpointFunction":
        lo, hi = Interval(*value) if not isinstance(value, Interval) else value
        return cls(lambda *x: lo, lambda *x: hi, arity, domain)

    def __call__(self, *x) -> Interval:
        return Interval(float(self.f_lo(*x)), float(self.f_hi(*x)))

    def endpoints(self, *arrays) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate both endpoints on (broadcast) arrays of arguments."""
        return evaluate_on(self.f_lo, *arrays), evaluate_on(self.f_hi, *arrays)

    def check_ordering(self, points: np.ndarray) -> None:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.arity:
            points = points.reshape(-1, self.arity)
        lo, hi = self.endpoints(*points.T)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("endpoint function is not finite on its domain samples")
        bad = np.nonzero(lo > hi)[0]
        if bad.size:
            raise EndpointOrderError(
                f"f_lo > f_hi at {points[bad[0]].tolist()}: {lo[bad[0]]!r} > {hi[bad[0]]!r}"
            )

    def restrict(self, x0: Sequence[float], axis: int) -> "EndpointFunction":
        """Single-variable restriction along ``axis`` through ``x0``."""
        x0 = [float(v) for v in x0]
        if len(x0) != self.arity:
            raise ValueError(f"point has {len(x0)} coordinates, arity is {self.arity}")
        if not 0 <= axis < self.arity:
            raise IndexError(f"axis {axis} out of range for arity {self.arity}")

        def along(fn):
            def g(s):
                args = list(x0)
                args[axis] = s
                return fn(*args)
            return g

        dom = None if self.domain is None else (self.domain[axis],)
        return EndpointFunction(along(self.f_lo), along(self.f_hi), 1, dom)


@dataclass(frozen=True)
class EndpointVectorFunction:
    """Interval-vector-valued function; all components share arity and domain."""

    components: tuple[EndpointFunction, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("at least one component is required")
        if len({c.arity for c in comps}) != 1 or len({c.domain for c in comps}) != 1:
            raise ValueError("components must share arity and domain")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def arity(self) -> int:
        return self.components[0].arity

    def __call__(self, *x) -> IntervalVector:
        return IntervalVector(c(*x) for c in self.components)


def _as_vector_fn(F) -> EndpointVectorFunction:
    if isinstance(F, EndpointVectorFunction):
        return F
    return EndpointVectorFunction((F,))


def _check_margin(F: EndpointFunction, t: float, h: float) -> None:
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    if F.domain is not None:
        lo, hi = F.domain[0]
        if t - h < lo or t + h > hi:
            raise ValueError(f"t={t!r} is within {h!r} of the domain boundary [{lo!r}, {hi!r}]")


def endpoint_derivatives(F: EndpointFunction, t: float, h: float = DEFAULT_STEP) -> tuple[float, float]:
    """Central-difference derivatives of the lower and upper endpoint at ``t``."""
    _check_margin(F, t, h)
    vals = [float(fn(s)) for fn in (F.f_lo, F.f_hi) for s in (t + h, t - h)]
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"non-finite function value near t={t!r}")
    return (vals[0] - vals[1]) / (2 * h), (vals[2] - vals[3]) / (2 * h)


def gh_derivative(F: EndpointFunction, t: float, h: float = DEFAULT_STEP) -> Interval:
    """gH-derivative of a one-variable interval function at ``t``.

    Returns ``[min(d_lo, d_hi), max(d_lo, d_hi)]`` of the endpoint derivatives.
    """
    if F.arity != 1:
        raise ValueError("gh_derivative needs a function of one variable; use gh_partial")
    d_lo, d_hi = endpoint_derivatives(F, t, h)
    return Interval(min(d_lo, d_hi), max(d_lo, d_hi))


def gh_partial(F: EndpointFunction, x0: Sequence[float], axis: int, h: float = DEFAULT_STEP) -> Interval:
    """gH-partial derivative along ``axis`` (0-based) at ``x0``."""
    restricted = F.restrict(x0, axis)
    return gh_derivative(restricted, float(x0[axis]), h)


def endpoint_crossovers(F: EndpointFunction, ts: Sequence[float], h: float = DEFAULT_STEP) -> list[float]:
    """Sample times after which the endpoint derivatives swap order.

    A sign change of ``d_lo - d_hi`` between adjacent samples signals the
    switching case where the gH-derivative exists without the endpoints being
    differentiable in the usual ordering. It is only reported, never modelled.
    """
    gaps = []
    for t in ts:
        d_lo, d_hi = endpoint_derivatives(F, float(t), h)
        gaps.append(d_lo - d_hi)
    gaps = np.asarray(gaps)
    sign = np.sign(np.where(np.abs(gaps) < 1e-12, 0.0, gaps))
    hits = []
    prev = None  # last sample with a nonzero gap; samples on the crossing itself are skipped
    for k in range(len(ts)):
        if sign[k] == 0:
            continue
        if prev is not None and sign[prev] != sign[k]:
            hits.append(float(ts[prev]))
        prev = k
    return hits


def simpson_panels(y: np.ndarray, t0: float, t1: float) -> float:
    """Composite Simpson rule on ``len(y) - 1`` equal panels (must be even)."""
    n = len(y) - 1
    if n < 2 or n % 2:
        raise ValueError(f"composite Simpson needs an even, positive panel count, got {n}")
    return float(simpson(y, dx=(t1 - t0) / n))


def aumann_integral(F, t0: float, t1: float, n_panels: int = DEFAULT_PANELS) -> IntervalVector:
    """Integral of an interval-vector function of time over ``[t0, t1]``.

    Each component is ``[Q(f_lo), Q(f_hi)]`` with ``Q`` composite Simpson.
    """
    if not t1 > t0:
        raise ValueError(f"integration bounds must satisfy t0 < t1, got {t0!r}, {t1!r}")
    if n_panels <= 0 or n_panels % 2:
        raise ValueError(f"n_panels must be a positive even integer, got {n_panels}")
    Fv = _as_vector_fn(F)
    if Fv.arity != 1:
        raise ValueError("the integrand must be a function of time only")
    ts = np.linspace(t0, t1, n_panels + 1)
    out = []
    for comp in Fv.components:
        lo, hi = comp.endpoints(ts)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("non-finite integrand sample")
        if np.any(lo > hi):
            k = int(np.argmax(lo > hi))
            raise EndpointOrderError(f"integrand endpoints out of order at t={ts[k]!r}")
        out.append(Interval(simpson_panels(lo, t0, t1), simpson_panels(hi, t0, t1)))
    return IntervalVector(out)


def integrate_samples(lo: np.ndarray, hi: np.ndarray, t0: float, t1: float) -> Interval:
    """Aumann integral of an interval function already sampled on a uniform grid."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape:
        raise ValueError("endpoint sample arrays differ in shape")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("non-finite integrand sample")
    if np.any(lo > hi):
        raise EndpointOrderError("integrand endpoints out of order")
    return Interval(simpson_panels(lo, t0, t1), simpson_panels(hi, t0, t1))


@dataclass
class ProbeReport:
    """Outcome of a sampled falsification probe.

    ``passed`` only means no violation was found among the probed samples.
    """

    passed: bool
    checked: int
    counterexample: Optional[dict] = None
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "counterexample": self.counterexample,
            **self.detail,
        }


def _strictly_below(A: Interval, value: Interval) -> bool:
    # A (-)gH F(x) in int I(R+)
    return in_positive_interior(A.gh_minus(value))


def quasi_concavity_probe(
    F: EndpointFunction,
    K: Sequence,
    A,
    lambdas: Sequence[float] = (0.25, 0.5, 0.75),
) -> ProbeReport:
    """Search sample pairs for a violation of generalized quasi-concavity.

    For every pair ``x1, x2`` of ``K`` at which ``F`` is not strictly below the
    level interval ``A``, each convex combination ``lam*x1 + (1-lam)*x2`` is
    checked as well. The first violating ``(x1, x2, lam)`` is returned.
    """
    pts = [np.atleast_1d(np.asarray(x, dtype=float)) for x in K]
    if not pts:
        raise ValueError("the sample set K is empty")
    A = A if isinstance(A, Interval) else Interval(*A)
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda {lam!r} outside [0, 1]")
    admissible = [x for x in pts if not _strictly_below(A, F(*x))]
    checked = 0
    for i, x1 in enumerate(admissible):
        for x2 in admissible[i + 1:]:
            for lam in lambdas:
                checked += 1
                z = lam * x1 + (1.0 - lam) * x2
                if _strictly_below(A, F(*z)):
                    return ProbeReport(
                        False,
                        checked,
                        {"x1": x1.tolist(), "x2": x2.tolist(), "lambda": float(lam)},
                    )
    return ProbeReport(True, checked)
