"""Two-player scalar linear-quadratic interval differential games.

Game::

    x' = a x + b u1 + c u2,                 x(t0) = x0
    J1 = 1/2 int [g1lo, g1hi] x^2 + [g2lo, g2hi] u1^2 dt
    J2 = 1/2 int [h1lo, h1hi] x^2 + [h2lo, h2hi] u2^2 dt

Fixing one endpoint per player gives four ordinary LQ games ("corners").
For a corner with scalars (g1, g2, h1, h2) the stationarity conditions give
``u1 = -(b/g2) p1`` and ``u2 = -(c/h2) p2``, and ``y = (x, p1, p2)`` solves
``y' = A y`` with ``x(t0) = x0`` and ``p1(t1) = p2(t1) = 0``, where::

    A = [[ a,  -b^2/g2, -c^2/h2],
         [-g1, -a,       0     ],
         [-h1,  0,      -a     ]]

The spectrum of ``A`` is ``{+s, -s, -a}`` with ``s = sqrt(a^2 + M)`` and
``M = b^2 g1/g2 + c^2 h1/h2``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline

from .calculus import DEFAULT_PANELS, EndpointFunction, integrate_samples
from .game import DEFAULT_GRID, DynamicsSpec, IntervalPayoffSpec, PlayerPayoff
from .interval import Interval
from .pontryagin import Candidate, Endpoint

log = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-8


class DegenerateSpectrumError(ValueError):
    """Eigenvalues too close (or complex) for the closed-form expansion."""


class SingularBoundaryError(np.linalg.LinAlgError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class ShootingError(RuntimeError):
    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class LQIntervalGameSpec:
    a: float
    b: float
    c: float
    G1: Interval
    G2: Interval
    H1: Interval
    H2: Interval
    t0: float
    t1: float
    x0: float

    def __post_init__(self):
        for name in ("G1", "G2", "H1", "H2"):
            v = getattr(self, name)
            if not isinstance(v, Interval):
                object.__setattr__(self, name, Interval(*v))
        for name in ("a", "b", "c", "t0", "t1", "x0"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not self.t1 > self.t0:
            raise ValueError(f"horizon must satisfy t0 < t1, got t0={self.t0!r}, t1={self.t1!r}")
        for name in ("G2", "H2"):
            v = getattr(self, name)
            if v.lo <= 0.0 <= v.hi:
                raise ValueError(f"{name.lower()} interval {v!r} contains 0; control weights must be nonzero")

    @classmethod
    def example(cls) -> "LQIntervalGameSpec":
        """The two-player illustration: a=2, b=c=1, x0=1 on [0, 3]."""
        return cls(2.0, 1.0, 1.0, Interval(0.9, 1.2), Interval(0.3, 0.6), Interval(0.8, 1.5), Interval(0.4, 0.5), 0.0, 3.0, 1.0)


class Corner(enum.Enum):
    LL = "ll"
    LU = "lu"
    UL = "ul"
    UU = "uu"

    @property
    def selection(self) -> tuple[Endpoint, Endpoint]:
        pick = {"l": Endpoint.LOWER, "u": Endpoint.UPPER}
        return pick[self.value[0]], pick[self.value[1]]


@dataclass(frozen=True)
class CornerGame:
    """Scalar weights of one corner; each player picks both of its weights together."""

    corner: Corner
    g1: float
    g2: float
    h1: float
    h2: float

    def __post_init__(self):
        if self.g2 == 0.0 or self.h2 == 0.0:
            raise ValueError("control weights g2 and h2 must be nonzero")

    @property
    def selection(self) -> tuple[Endpoint, Endpoint]:
        return self.corner.selection


def _pick(v: Interval, end: Endpoint) -> float:
    return v.lo if end is Endpoint.LOWER else v.hi


def corner_game(spec: LQIntervalGameSpec, corner: Corner) -> CornerGame:
    e1, e2 = corner.selection
    return CornerGame(corner, _pick(spec.G1, e1), _pick(spec.G2, e1), _pick(spec.H1, e2), _pick(spec.H2, e2))


def enumerate_corners(spec: LQIntervalGameSpec) -> list[CornerGame]:
    """The four corner games in the order LL, LU, UL, UU."""
    return [corner_game(spec, c) for c in Corner]


def build_adjoint_matrix(corner: CornerGame, a: float, b: float, c: float) -> np.ndarray:
    return np.array(
        [
            [a, -b * b / corner.g2, -c * c / corner.h2],
            [-corner.g1, -a, 0.0],
            [-corner.h1, 0.0, -a],
        ]
    )


@dataclass(frozen=True)
class EigenSolution:
    """Closed-form eigen-decomposition of the corner matrix.

    Columns of ``W`` are eigenvectors scaled so their largest-magnitude entry
    is +1. ``case`` classifies the sign of ``det A``: ``"i"`` (negative),
    ``"ii"`` (positive) or ``"iii"`` (zero).
    """

    A: np.ndarray
    a: float
    M: float
    s: np.ndarray
    W: np.ndarray
    degenerate: bool
    case: str

    @property
    def det(self) -> float:
        return self.a**3 + self.M * self.a


def _structure(A: np.ndarray) -> tuple[float, float]:
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    a = A[0, 0]
    scale = max(1.0, float(np.max(np.abs(A))))
    if (
        abs(A[1, 2]) > 0
        or abs(A[2, 1]) > 0
        or abs(A[1, 1] + a) > 1e-14 * scale
        or abs(A[2, 2] + a) > 1e-14 * scale
    ):
        raise ValueError("matrix does not have the corner-game adjoint structure")
    # M = (b^2/g2) g1 + (c^2/h2) h1
    M = A[0, 1] * A[1, 0] + A[0, 2] * A[2, 0]
    return float(a), float(M)


def eigen_solve(A: np.ndarray) -> EigenSolution:
    """Eigenvalues ``(+s, -s, -a)`` and eigenvectors from the bordered structure.

    ``degenerate`` is set when ``a^2 + M <= 0`` or two eigenvalues are closer
    than ``1e-8 * max|s_i|``; the eigenvectors are then not computed.
    """
    A = np.asarray(A, dtype=float)
    a, M = _structure(A)
    disc = a * a + M
    det = a**3 + M * a
    case = "i" if det < 0 else ("ii" if det > 0 else "iii")
    if not disc > 0:
        return EigenSolution(A, a, M, np.full(3, np.nan), np.full((3, 3), np.nan), True, case)
    r = math.sqrt(disc)
    s = np.array([r, -r, -a])
    scale = float(np.max(np.abs(s)))
    gaps = [abs(s[0] - s[1]), abs(s[0] - s[2]), abs(s[1] - s[2])]
    if scale == 0.0 or min(gaps) <= DEGENERACY_GAP * scale:
        return EigenSolution(A, a, M, s, np.full((3, 3), np.nan), True, case)
    g1, h1 = -A[1, 0], -A[2, 0]
    cols = []
    for si in s[:2]:
        # rows 2-3: -g1 w1 - (a + s) w2 = 0,  -h1 w1 - (a + s) w3 = 0
        cols.append(np.array([1.0, -g1 / (a + si), -h1 / (a + si)]))
    # s = -a: w1 = 0 and (b^2/g2) w2 + (c^2/h2) w3 = 0
    cols.append(np.array([0.0, -A[0, 2], A[0, 1]]))
    W = np.column_stack(cols)
    for j in range(3):
        k = int(np.argmax(np.abs(W[:, j])))
        W[:, j] /= W[k, j]
    return EigenSolution(A, a, M, s, W, False, case)


@dataclass(frozen=True)
class BoundaryCoefficients:
    """Mode weights in anchored form ``y(t) = sum_i beta_i w_i exp(s_i (t - anchor_i))``.

    ``anchor_i`` is ``t1`` for growing modes and ``t0`` otherwise, so every
    exponential evaluated on ``[t0, t1]`` is at most 1.
    """

    beta: np.ndarray
    anchors: np.ndarray
    residual: float
    condition: float

    def alpha_for(self, eig: EigenSolution) -> np.ndarray:
        """Unanchored weights ``beta_i exp(-s_i anchor_i)``; may overflow on long horizons."""
        with np.errstate(over="ignore"):
            return self.beta * np.exp(-eig.s * self.anchors)


def solve_boundary(eig: EigenSolution, x0: float, t0: float, t1: float) -> BoundaryCoefficients:
    """Fit the mode weights to ``x(t0) = x0``, ``p1(t1) = p2(t1) = 0``."""
    if eig.degenerate:
        raise DegenerateSpectrumError("closed-form boundary solve needs three distinct real eigenvalues")
    anchors = np.where(eig.s > 0, t1, t0)
    e0 = np.exp(eig.s * (t0 - anchors))
    e1 = np.exp(eig.s * (t1 - anchors))
    B = np.vstack([eig.W[0] * e0, eig.W[1] * e1, eig.W[2] * e1])
    rhs = np.array([float(x0), 0.0, 0.0])
    # column equilibration: the -a mode can be tiny at t1 on long horizons; a
    # column that underflows entirely is dropped (its weight is 0 in the limit)
    col = np.max(np.abs(B), axis=0)
    keep = col > 0
    Bs = B[:, keep] / col[keep]
    cond = float(np.linalg.cond(Bs)) if keep.all() else float(np.linalg.cond(Bs.T @ Bs)) ** 0.5
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularBoundaryError(f"boundary matrix is singular (condition {cond:.3e})", cond)
    beta = np.zeros(3)
    if keep.all():
        beta = np.linalg.solve(Bs, rhs) / col
    else:
        beta[keep] = np.linalg.lstsq(Bs, rhs, rcond=None)[0] / col[keep]
    resid = float(np.max(np.abs(B @ beta - rhs)) / max(1.0, abs(x0), float(np.max(np.abs(B)) * np.max(np.abs(beta)))))
    return BoundaryCoefficients(beta, anchors, resid, cond)


def equilibrium_controls(corner: CornerGame, p1, p2, b: float, c: float):
    """Controls from the stationarity conditions: ``u1 = -(b/g2) p1``, ``u2 = -(c/h2) p2``."""
    return -(b / corner.g2) * np.asarray(p1), -(c / corner.h2) * np.asarray(p2)


@dataclass
class CornerSolution:
    """Equilibrium of one corner game sampled on a uniform grid.

    ``evaluate(t)`` returns ``(x, p1, p2, u1, u2)`` at arbitrary times: exact
    for the closed form, Hermite-interpolated for the shooting fallback.
    """

    spec: LQIntervalGameSpec
    corner: CornerGame
    eig: EigenSolution
    method: str
    grid: np.ndarray
    y: np.ndarray
    J1: Interval
    J2: Interval
    boundary: Optional[BoundaryCoefficients] = None
    shooting_history: list[float] = field(default_factory=list)
    _spline: Optional[CubicHermiteSpline] = field(default=None, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def p1(self) -> np.ndarray:
        return self.y[:, 1]

    @property
    def p2(self) -> np.ndarray:
        return self.y[:, 2]

    @property
    def u1(self) -> np.ndarray:
        return equilibrium_controls(self.corner, self.p1, self.p2, self.spec.b, self.spec.c)[0]

    @property
    def u2(self) -> np.ndarray:
        return equilibrium_controls(self.corner, self.p1, self.p2, self.spec.b, self.spec.c)[1]

    def states(self, t) -> np.ndarray:
        """``(x, p1, p2)`` at times ``t``; shape ``t.shape + (3,)``."""
        t = np.asarray(t, dtype=float)
        if self.method == "closed_form":
            return _modal_eval(self.eig, self.boundary, t)
        return self._spline(t)

    def evaluate(self, t):
        y = self.states(t)
        x, p1, p2 = y[..., 0], y[..., 1], y[..., 2]
        u1, u2 = equilibrium_controls(self.corner, p1, p2, self.spec.b, self.spec.c)
        return x, p1, p2, u1, u2

    def candidate(self) -> Candidate:
        return Candidate(self.grid, self.x, (self.u1, self.u2), (self.p1, self.p2))


def _modal_eval(eig: EigenSolution, bc: BoundaryCoefficients, t: np.ndarray) -> np.ndarray:
    modes = bc.beta * np.exp(eig.s * (t[..., None] - bc.anchors))
    return modes @ eig.W.T


def payoff_intervals(solution: CornerSolution, spec: LQIntervalGameSpec, n_panels: int = DEFAULT_PANELS):
    """Interval payoffs of both players along a corner's equilibrium.

    Integrates the original interval weights (both endpoints), not the
    corner's scalars, with composite Simpson on ``n_panels`` panels.
    """
    ts = np.linspace(spec.t0, spec.t1, n_panels + 1)
    x, _, _, u1, u2 = solution.evaluate(ts)
    return _lagrange_integrals(spec, ts, x, u1, u2)


def lagrange_endpoints(spec: LQIntervalGameSpec, x, u1, u2):
    """Running-payoff endpoints ``(L1_lo, L1_hi, L2_lo, L2_hi)`` pointwise."""
    x2, v1, v2 = np.square(x), np.square(u1), np.square(u2)
    return (
        0.5 * (spec.G1.lo * x2 + spec.G2.lo * v1),
        0.5 * (spec.G1.hi * x2 + spec.G2.hi * v1),
        0.5 * (spec.H1.lo * x2 + spec.H2.lo * v2),
        0.5 * (spec.H1.hi * x2 + spec.H2.hi * v2),
    )


def _lagrange_integrals(spec, ts, x, u1, u2):
    l1lo, l1hi, l2lo, l2hi = lagrange_endpoints(spec, x, u1, u2)
    return integrate_samples(l1lo, l1hi, ts[0], ts[-1]), integrate_samples(l2lo, l2hi, ts[0], ts[-1])


def _grid(spec: LQIntervalGameSpec, n: int) -> np.ndarray:
    if n < 2 or n % 2:
        raise ValueError(f"grid must have an even number of intervals >= 2, got {n}")
    return np.linspace(spec.t0, spec.t1, n + 1)


def solve_corner(spec: LQIntervalGameSpec, corner, n_grid: int = DEFAULT_GRID) -> CornerSolution:
    """Solve one corner in closed form, falling back to shooting if the spectrum is degenerate."""
    cg = corner if isinstance(corner, CornerGame) else corner_game(spec, Corner(corner))
    A = build_adjoint_matrix(cg, spec.a, spec.b, spec.c)
    eig = eigen_solve(A)
    if eig.degenerate:
        log.info("corner %s: degenerate spectrum, using shooting", cg.corner.value)
        return solve_shooting(spec, cg, n_grid)
    bc = solve_boundary(eig, spec.x0, spec.t0, spec.t1)
    grid = _grid(spec, n_grid)
    y = _modal_eval(eig, bc, grid)
    sol = CornerSolution(spec, cg, eig, "closed_form", grid, y, Interval(0, 0), Interval(0, 0), bc)
    sol.J1, sol.J2 = payoff_intervals(sol, spec, n_grid)
    return sol


def _rk4_linear(A: np.ndarray, grid: np.ndarray, y0: np.ndarray) -> np.ndarray:
    """RK4 for ``y' = A y``; ``y0`` may carry extra trailing columns."""
    y = np.array(y0, dtype=float)
    out = np.empty((grid.size,) + y.shape)
    out[0] = y
    for k in range(grid.size - 1):
        h = grid[k + 1] - grid[k]
        k1 = A @ y
        k2 = A @ (y + 0.5 * h * k1)
        k3 = A @ (y + 0.5 * h * k2)
        k4 = A @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = y
    return out


def integrate_forward(A: np.ndarray, grid: np.ndarray, y0) -> np.ndarray:
    """Forward RK4 re-integration of ``y' = A y`` from ``y(t0) = y0``."""
    return _rk4_linear(np.asarray(A, dtype=float), grid, np.asarray(y0, dtype=float))


def solve_shooting(
    spec: LQIntervalGameSpec,
    corner,
    n_grid: int = DEFAULT_GRID,
    rescale: bool = True,
    max_iter: int = 50,
    rtol: float = 1e-9,
) -> CornerSolution:
    """Single shooting on the initial costates with damped Newton.

    Unknowns ``q = (p1(t0), p2(t0))``; the terminal map ``q -> (p1(t1), p2(t1))``
    is driven to zero with a finite-difference Jacobian. With ``rescale`` the
    integration runs on ``exp(-sigma (t - t0)) y`` where ``sigma`` bounds the
    growth rate, so trial trajectories stay bounded on long horizons.
    """
    cg = corner if isinstance(corner, CornerGame) else corner_game(spec, Corner(corner))
    A = build_adjoint_matrix(cg, spec.a, spec.b, spec.c)
    eig = eigen_solve(A)
    grid = _grid(spec, n_grid)
    sigma = 0.0
    if rescale:
        sigma = max(0.0, float(np.max(np.real(np.linalg.eigvals(A)))))
    As = A - sigma * np.eye(3)
    tail = math.exp(-sigma * (spec.t1 - spec.t0))

    def terminal(q):
        ys = _rk4_linear(As, grid, np.array([spec.x0, q[0], q[1]]))
        return ys[-1, 1:], ys

    q = np.zeros(2)
    history = []
    for it in range(max_iter + 1):
        r, ys = terminal(q)
        scale = max(float(np.max(np.abs(ys[:, 1:]))), abs(spec.x0) * tail, 1e-300)
        res = float(np.max(np.abs(r))) / scale
        history.append(res)
        if res < rtol or float(np.max(np.abs(r))) == 0.0:
            break
        if it == max_iter:
            raise ShootingError(f"shooting did not converge in {max_iter} iterations (residual {res:.3e})", history)
        step = max(1.0, float(np.max(np.abs(q))))
        J = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            J[:, j] = (terminal(q + e)[0] - terminal(q - e)[0]) / (2 * step)
        dq = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        base = float(np.max(np.abs(r)))
        while lam > 1e-4:
            trial = terminal(q + lam * dq)[0]
            if float(np.max(np.abs(trial))) < base:
                break
            lam *= 0.5
        q = q + lam * dq
    y = ys * np.exp(sigma * (grid - spec.t0))[:, None]
    dy = y @ A.T
    spline = CubicHermiteSpline(grid, y, dy, axis=0)
    sol = CornerSolution(
        spec, cg, eig, "shooting", grid, y, Interval(0, 0), Interval(0, 0), None, history, spline
    )
    sol.J1, sol.J2 = _lagrange_integrals(spec, grid, sol.x, sol.u1, sol.u2)
    return sol


def solve_all(spec: LQIntervalGameSpec, n_grid: int = DEFAULT_GRID, corners=None, workers: int = 1) -> dict:
    """Solve the requested corners (all four by default), keyed by label."""
    wanted = [Corner(c) if not isinstance(c, Corner) else c for c in (corners or list(Corner))]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            sols = list(pool.map(lambda c: solve_corner(spec, c, n_grid), wanted))
    else:
        sols = [solve_corner(spec, c, n_grid) for c in wanted]
    return {c.value: s for c, s in zip(wanted, sols)}


def _shift_responses(a: float, gain: float, tau: np.ndarray, T: float):
    """States driven from zero by the control shifts ``1`` and ``tau / T``."""
    if abs(a) * T < 1e-12:
        return gain * tau, gain * tau**2 / (2.0 * T)
    return gain * np.expm1(a * tau) / a, gain * (np.expm1(a * tau) - a * tau) / (a * a * T)


def deviation_family(solution: CornerSolution, player: int) -> EndpointFunction:
    """Payoff of ``player`` (0-based) under own-control shifts ``theta1 + theta2 (t - t0)/T``.

    The other player keeps its equilibrium control. The state is linear in
    ``theta``, so it is superposed exactly from two precomputed responses;
    the payoff integral uses Simpson on the solution grid.
    """
    spec = solution.spec
    if player not in (0, 1):
        raise ValueError("player must be 0 or 1")
    t = solution.grid
    T = spec.t1 - spec.t0
    tau = t - spec.t0
    gain = spec.b if player == 0 else spec.c
    xi1, xi2 = _shift_responses(spec.a, gain, tau, T)
    x0 = solution.x
    u0 = solution.u1 if player == 0 else solution.u2
    W1, W2 = (spec.G1, spec.G2) if player == 0 else (spec.H1, spec.H2)

    def make(w1, w2):
        def J(th1, th2):
            th1 = np.asarray(th1, dtype=float)[..., None]
            th2 = np.asarray(th2, dtype=float)[..., None]
            x = x0 + th1 * xi1 + th2 * xi2
            u = u0 + th1 + th2 * (tau / T)
            return simpson(0.5 * (w1 * x * x + w2 * u * u), dx=T / (t.size - 1), axis=-1)
        return J

    return EndpointFunction(make(W1.lo, W2.lo), make(W1.hi, W2.hi), arity=2)


def as_interval_game(spec: LQIntervalGameSpec) -> tuple[DynamicsSpec, IntervalPayoffSpec]:
    """The same game expressed with the general model types (zero terminal payoff)."""
    a, b, c = spec.a, spec.b, spec.c
    G1, G2, H1, H2 = spec.G1, spec.G2, spec.H1, spec.H2

    def f(t, x, u1, u2):
        return a * x + b * u1 + c * u2

    def running(W1, W2, own):
        lo = lambda t, x, u1, u2: 0.5 * (W1.lo * x[..., 0] ** 2 + W2.lo * own(u1, u2)[..., 0] ** 2)
        hi = lambda t, x, u1, u2: 0.5 * (W1.hi * x[..., 0] ** 2 + W2.hi * own(u1, u2)[..., 0] ** 2)
        return ((lo, hi),)

    dyn = DynamicsSpec(f, 1, (1, 1), spec.t0, spec.t1, np.array([spec.x0]))
    payoff = IntervalPayoffSpec(
        (
            PlayerPayoff(running(G1, G2, lambda u1, u2: u1)),
            PlayerPayoff(running(H1, H2, lambda u1, u2: u2)),
        )
    )
    return dyn, payoff


class LQGradients:
    """Exact partial derivatives of the endpoint Hamiltonians of an LQ game."""

    def __init__(self, spec: LQIntervalGameSpec):
        self.spec = spec

    def _weights(self, i, end):
        s = self.spec
        W1, W2 = (s.G1, s.G2) if i == 0 else (s.H1, s.H2)
        return _pick(W1, end), _pick(W2, end)

    def dx(self, i, end, t, x, us, p):
        w1, _ = self._weights(i, end)
        return w1 * x + self.spec.a * p

    def du(self, i, end, t, x, us, p):
        _, w2 = self._weights(i, end)
        gain = self.spec.b if i == 0 else self.spec.c
        return w2 * us[i] + gain * p

    def terminal(self, i, end, x):
        return np.zeros_like(np.asarray(x, dtype=float))
