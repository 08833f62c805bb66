"""Compact real intervals and interval vectors.

Only the operations needed for interval-valued payoffs are provided:
endpoint addition, scalar multiplication, the generalized Hukuhara (gH)
difference, the strict dominance order and positive weighted sums.
Interval-by-interval multiplication is deliberately absent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

import numpy as np


class DimensionError(ValueError):
    """Raised when two interval vectors of different dimension are combined."""


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; degenerate intervals ``[a, a]`` are allowed."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"invalid interval: lower endpoint {lo!r} exceeds upper endpoint {hi!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, a: float) -> "Interval":
        return cls(a, a)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= value <= self.hi + tol

    def shift(self, value: float) -> "Interval":
        """Translate both endpoints by a real number."""
        return Interval(self.lo + value, self.hi + value)

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.shift(float(other))
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, lam):
        if not isinstance(lam, (int, float, np.floating, np.integer)):
            return NotImplemented
        lam = float(lam)
        if lam >= 0:
            return Interval(lam * self.lo, lam * self.hi)
        return Interval(lam * self.hi, lam * self.lo)

    __rmul__ = __mul__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def gh_minus(self, other: "Interval") -> "Interval":
        """Generalized Hukuhara difference ``self (-)gH other``."""
        d_lo = self.lo - other.lo
        d_hi = self.hi - other.hi
        return Interval(min(d_lo, d_hi), max(d_lo, d_hi))

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


IntervalLike = Union[Interval, Sequence[float]]


def as_interval(value) -> Interval:
    if isinstance(value, Interval):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Interval.point(float(value))
    lo, hi = value
    return Interval(lo, hi)


class IntervalVector:
    """Immutable d-tuple of :class:`Interval` with ``d >= 1``."""

    __slots__ = ("_components",)

    def __init__(self, components: Iterable[IntervalLike]):
        comps = tuple(as_interval(c) for c in components)
        if not comps:
            raise ValueError("an interval vector needs at least one component")
        object.__setattr__(self, "_components", comps)

    def __setattr__(self, name, value):
        raise AttributeError("IntervalVector is immutable")

    @classmethod
    def from_endpoints(cls, lo: Sequence[float], hi: Sequence[float]) -> "IntervalVector":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionError("endpoint arrays differ in length")
        return cls(Interval(a, b) for a, b in zip(lo, hi))

    @classmethod
    def zeros(cls, dim: int) -> "IntervalVector":
        return cls([Interval(0.0, 0.0)] * dim)

    @property
    def components(self) -> tuple[Interval, ...]:
        return self._components

    @property
    def dim(self) -> int:
        return len(self._components)

    @property
    def lo(self) -> np.ndarray:
        return np.array([c.lo for c in self._components])

    @property
    def hi(self) -> np.ndarray:
        return np.array([c.hi for c in self._components])

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def __len__(self) -> int:
        return self.dim

    def __iter__(self) -> Iterator[Interval]:
        return iter(self._components)

    def __getitem__(self, i: int) -> Interval:
        return self._components[i]

    def __eq__(self, other):
        if not isinstance(other, IntervalVector):
            return NotImplemented
        return self._components == other._components

    def __hash__(self):
        return hash(self._components)

    def __repr__(self):
        return "(" + ", ".join(repr(c) for c in self._components) + ")"

    def __add__(self, other):
        if isinstance(other, IntervalVector):
            return add(self, other)
        return NotImplemented

    def __rmul__(self, lam):
        if isinstance(lam, (int, float, np.floating, np.integer)):
            return scalar_mul(lam, self)
        return NotImplemented


def as_vector(value) -> IntervalVector:
    if isinstance(value, IntervalVector):
        return value
    if isinstance(value, Interval):
        return IntervalVector([value])
    return IntervalVector(value)


def _check_dims(A: IntervalVector, B: IntervalVector) -> None:
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch: {A.dim} vs {B.dim}")


def add(A, B) -> IntervalVector:
    A, B = as_vector(A), as_vector(B)
    _check_dims(A, B)
    return IntervalVector(a + b for a, b in zip(A, B))


def scalar_mul(lam: float, A) -> IntervalVector:
    A = as_vector(A)
    return IntervalVector(c * float(lam) for c in A)


def gh_difference(A, B) -> IntervalVector:
    """Componentwise gH-difference ``A (-)gH B``."""
    A, B = as_vector(A), as_vector(B)
    _check_dims(A, B)
    return IntervalVector(a.gh_minus(b) for a, b in zip(A, B))


def in_positive_interior(D, tol: float = 0.0) -> bool:
    """True when every component of ``D`` has lower endpoint ``> tol``.

    This is how membership in the interior of the cone of nonnegative
    interval vectors is decided: an interval touching zero is on the
    boundary, not in the interior.
    """
    D = as_vector(D)
    return all(c.lo > tol for c in D)


def strictly_dominates(B, A, tol: float = 0.0) -> bool:
    """Return True when ``B`` strictly dominates ``A`` from below (``B < A``).

    Holds iff ``A (-)gH B`` lies in the interior of the nonnegative cone,
    i.e. for every component both ``A.lo - B.lo`` and ``A.hi - B.hi`` exceed
    ``tol`` (0 by default, exact comparison).
    """
    A, B = as_vector(A), as_vector(B)
    _check_dims(A, B)
    return in_positive_interior(gh_difference(A, B), tol)


def dominance_margin(B, A) -> float:
    """Smallest endpoint gap ``min_k min(A.lo_k - B.lo_k, A.hi_k - B.hi_k)``.

    ``strictly_dominates(B, A, tol)`` is equivalent to ``dominance_margin(B, A) > tol``.
    """
    A, B = as_vector(A), as_vector(B)
    _check_dims(A, B)
    return float(min(np.min(A.lo - B.lo), np.min(A.hi - B.hi)))


def weighted_scalarize(weights: Sequence[float], J) -> Interval:
    """Positive weighted sum ``sum_k w_k * J_k`` of an interval vector."""
    J = as_vector(J)
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if w.ndim != 1 or w.size != J.dim:
        raise DimensionError(f"expected {J.dim} weights, got {w.size}")
    if np.any(~(w > 0)):
        raise ValueError("scalarization weights must be strictly positive")
    return Interval(float(np.dot(w, J.lo)), float(np.dot(w, J.hi)))
