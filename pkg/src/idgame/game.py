"""Discretized n-player multi-objective interval differential games.

Array conventions: states have shape ``(..., m)``, player ``i``'s control
``(..., m_i)`` and times ``(...)``. User callables written with broadcasting
(``x[..., 0]`` rather than ``x[0]``) are evaluated in a single call per RK4
stage, also for batches of trajectories; other callables fall back to loops.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .calculus import EndpointOrderError, integrate_samples
from .interval import Interval, IntervalVector, dominance_margin

log = logging.getLogger(__name__)

DEFAULT_GRID = 2000


class IntegrationError(RuntimeError):
    """The state blew up (non-finite value) during integration."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class DynamicsSpec:
    """State equation ``x' = f(t, x, u_1, ..., u_n)``, ``x(t0) = x0``."""

    f: Callable
    state_dim: int
    control_dims: tuple[int, ...]
    t0: float
    t1: float
    x0: np.ndarray
    vectorized: bool = True

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError(f"need t0 < t1, got {self.t0!r}, {self.t1!r}")
        if self.state_dim < 1 or not self.control_dims or min(self.control_dims) < 1:
            raise ValueError("state and control dimensions must be >= 1")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.shape != (self.state_dim,):
            raise ValueError(f"x0 has shape {x0.shape}, expected ({self.state_dim},)")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "control_dims", tuple(int(d) for d in self.control_dims))

    @property
    def n_players(self) -> int:
        return len(self.control_dims)

    def rhs(self, t, x: np.ndarray, us: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate ``f`` on a single point or a leading batch axis."""
        batch_shape = x.shape[:-1]
        if self.vectorized:
            try:
                out = np.asarray(self.f(t, x, *us), dtype=float)
                if out.shape == x.shape:
                    return out
            except (TypeError, ValueError, IndexError):
                pass
        if not batch_shape:
            return np.asarray(self.f(t, x, *us), dtype=float).reshape(x.shape)
        out = np.empty_like(x)
        tb = np.broadcast_to(t, batch_shape)
        for idx in np.ndindex(*batch_shape):
            out[idx] = self.f(float(tb[idx]), x[idx], *(u[idx] for u in us))
        return out


@dataclass(frozen=True)
class ControlTrajectory:
    """Per-player piecewise-linear controls on a uniform grid of ``N + 1`` nodes."""

    grid: np.ndarray
    values: tuple[np.ndarray, ...]
    bounds: Optional[tuple[Optional[tuple[float, float]], ...]] = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("control grid must be a strictly increasing 1-D array")
        vals = []
        for v in self.values:
            v = np.asarray(v, dtype=float)
            if v.ndim == 1:
                v = v[:, None]
            if v.shape[0] != grid.size:
                raise ValueError(f"control array has {v.shape[0]} rows, grid has {grid.size}")
            vals.append(v)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", tuple(vals))

    @classmethod
    def uniform(cls, t0: float, t1: float, n: int, values: Sequence, bounds=None) -> "ControlTrajectory":
        grid = np.linspace(t0, t1, n + 1)
        return cls(grid, tuple(values), bounds)

    @classmethod
    def constant(cls, dyn: DynamicsSpec, levels: Sequence[float], n: int = DEFAULT_GRID) -> "ControlTrajectory":
        grid = np.linspace(dyn.t0, dyn.t1, n + 1)
        vals = [np.full((n + 1, d), float(lv)) for lv, d in zip(levels, dyn.control_dims)]
        return cls(grid, tuple(vals))

    @property
    def n_intervals(self) -> int:
        return self.grid.size - 1

    def replace(self, player: int, value: np.ndarray) -> "ControlTrajectory":
        vals = list(self.values)
        vals[player] = np.asarray(value, dtype=float).reshape(vals[player].shape)
        return ControlTrajectory(self.grid, tuple(vals), self.bounds)

    def clamp(self, player: int, value: np.ndarray) -> np.ndarray:
        if self.bounds is None or self.bounds[player] is None:
            return value
        lo, hi = self.bounds[player]
        return np.clip(value, lo, hi)


@dataclass(frozen=True)
class StateTrajectory:
    grid: np.ndarray
    states: np.ndarray

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def _check_grid(dyn: DynamicsSpec, grid: np.ndarray) -> None:
    span = dyn.t1 - dyn.t0
    if abs(grid[0] - dyn.t0) > 1e-12 * max(1.0, span) or abs(grid[-1] - dyn.t1) > 1e-12 * max(1.0, span):
        raise ValueError("control grid must start at t0 and end at t1")
    if grid.size > 2:
        h = np.diff(grid)
        if np.max(np.abs(h - h[0])) > 1e-9 * h[0]:
            raise ValueError("control grid must be uniform")


def rk4(dyn: DynamicsSpec, grid: np.ndarray, controls: Sequence[np.ndarray], x0=None) -> np.ndarray:
    """Classical RK4 on ``grid`` with controls linear between nodes.

    ``controls[i]`` has shape ``(batch..., N + 1, m_i)``; the result has shape
    ``(batch..., N + 1, m)``.
    """
    us = [np.asarray(u, dtype=float) for u in controls]
    mids = [0.5 * (u[..., :-1, :] + u[..., 1:, :]) for u in us]
    batch = us[0].shape[:-2]
    x = np.broadcast_to(dyn.x0 if x0 is None else np.asarray(x0, dtype=float), batch + (dyn.state_dim,)).copy()
    n = grid.size - 1
    out = np.empty(batch + (n + 1, dyn.state_dim))
    out[..., 0, :] = x
    rhs = _fast_rhs(dyn, grid[0], x, [u[..., 0, :] for u in us])
    for k in range(n):
        t, h = grid[k], grid[k + 1] - grid[k]
        ua = [u[..., k, :] for u in us]
        ub = [u[..., k + 1, :] for u in us]
        um = [m[..., k, :] for m in mids]
        k1 = rhs(t, x, ua)
        k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1, um)
        k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2, um)
        k4 = rhs(t + h, x + h * k3, ub)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[..., k + 1, :] = x
    # overflow and NaN persist, so one check after the loop finds the first bad node
    bad = ~np.isfinite(out).reshape(-1, n + 1, dyn.state_dim).all(axis=(0, 2))
    if bad.any():
        k = int(np.argmax(bad))
        raise IntegrationError(f"state became non-finite at t={grid[k]!r}", float(grid[k]))
    return out


def _fast_rhs(dyn: DynamicsSpec, t, x, us):
    """Call ``f`` directly when a trial evaluation shows it broadcasts correctly."""
    if dyn.vectorized:
        try:
            trial = np.asarray(dyn.f(t, x, *us), dtype=float)
        except (TypeError, ValueError, IndexError):
            trial = None
        if trial is not None and trial.shape == x.shape:
            f = dyn.f
            return lambda t, x, us: f(t, x, *us)
    return dyn.rhs


def integrate_state(dyn: DynamicsSpec, u: ControlTrajectory) -> StateTrajectory:
    """Integrate the state equation for the given controls (RK4 on the control grid)."""
    _check_grid(dyn, u.grid)
    if len(u.values) != dyn.n_players:
        raise ValueError(f"expected controls for {dyn.n_players} players, got {len(u.values)}")
    return StateTrajectory(u.grid, rk4(dyn, u.grid, u.values))


@dataclass(frozen=True)
class PlayerPayoff:
    """Terminal and running interval-vector payoffs of one player.

    ``terminal`` and ``running`` are sequences of ``(lo, hi)`` callable pairs
    of length ``d``: ``terminal[k] = (psi_lo, psi_hi)`` are functions of ``x``
    and ``running[k] = (L_lo, L_hi)`` functions of ``(t, x, u_1, ..., u_n)``.
    ``terminal=None`` means a zero terminal payoff.
    """

    running: tuple[tuple[Callable, Callable], ...]
    terminal: Optional[tuple[tuple[Callable, Callable], ...]] = None

    def __post_init__(self):
        running = tuple(tuple(pair) for pair in self.running)
        if not running:
            raise ValueError("a payoff needs at least one component")
        object.__setattr__(self, "running", running)
        if self.terminal is not None:
            terminal = tuple(tuple(pair) for pair in self.terminal)
            if len(terminal) != len(running):
                raise ValueError("terminal and running payoffs differ in dimension")
            object.__setattr__(self, "terminal", terminal)

    @property
    def dim(self) -> int:
        return len(self.running)


@dataclass(frozen=True)
class IntervalPayoffSpec:
    """Interval-vector payoffs for every player."""

    players: tuple[PlayerPayoff, ...]

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))

    def dims(self) -> tuple[int, ...]:
        return tuple(p.dim for p in self.players)

    def running_endpoints(self, i: int, k: int, t, x, us) -> tuple[np.ndarray, np.ndarray]:
        lo_fn, hi_fn = self.players[i].running[k]
        shape = np.shape(t)
        return _eval_field(lo_fn, shape, t, x, *us), _eval_field(hi_fn, shape, t, x, *us)

    def terminal_endpoints(self, i: int, k: int, x) -> tuple[np.ndarray, np.ndarray]:
        term = self.players[i].terminal
        shape = x.shape[:-1]
        if term is None:
            return np.zeros(shape), np.zeros(shape)
        lo_fn, hi_fn = term[k]
        return _eval_field(lo_fn, shape, x), _eval_field(hi_fn, shape, x)


def _eval_field(fn: Callable, shape: tuple, *args) -> np.ndarray:
    """Evaluate a scalar field whose arguments carry leading axes ``shape``."""
    try:
        out = np.asarray(fn(*args), dtype=float)
        if out.shape == shape:
            return out
        if out.shape == ():
            return np.full(shape, float(out))
    except (TypeError, ValueError, IndexError):
        pass
    if not shape:
        return np.asarray(float(fn(*args)))
    arrays = [np.asarray(a, dtype=float) for a in args]
    out = np.empty(shape)
    for idx in np.ndindex(*shape):
        row = [a[idx] if a.shape[:len(shape)] == shape else a for a in arrays]
        out[idx] = float(fn(*row))
    return out


def _refine(grid: np.ndarray, controls: Sequence[np.ndarray]):
    """Insert interval midpoints, interpolating the controls linearly.

    Simpson on the refined grid has one panel pair per control interval, so
    every control node carries the same quadrature weight. On the control grid
    itself odd and even nodes would be weighted 4:2, which single-node
    deviations can exploit.
    """
    fine = np.empty(2 * grid.size - 1)
    fine[0::2] = grid
    fine[1::2] = 0.5 * (grid[:-1] + grid[1:])
    out = []
    for u in controls:
        u = np.asarray(u, dtype=float)
        v = np.empty(u.shape[:-2] + (fine.size, u.shape[-1]))
        v[..., 0::2, :] = u
        v[..., 1::2, :] = 0.5 * (u[..., :-1, :] + u[..., 1:, :])
        out.append(v)
    return fine, out


def _payoff_from_states(i, dyn, payoff, grid, xs, us) -> IntervalVector:
    comps = []
    for k in range(payoff.players[i].dim):
        lo, hi = payoff.running_endpoints(i, k, grid, xs, us)
        integral = integrate_samples(lo, hi, grid[0], grid[-1])
        tlo, thi = payoff.terminal_endpoints(i, k, xs[-1])
        if float(tlo) > float(thi):
            raise EndpointOrderError(f"terminal payoff endpoints out of order for player {i}, component {k}")
        comps.append(Interval(float(tlo) + integral.lo, float(thi) + integral.hi))
    return IntervalVector(comps)


def evaluate_payoff(i: int, dyn: DynamicsSpec, payoff: IntervalPayoffSpec, u: ControlTrajectory) -> IntervalVector:
    """Interval-vector payoff of player ``i`` (0-based) for the control profile ``u``.

    The state is integrated with RK4 and the running payoff with composite
    Simpson, both on the control grid refined by interval midpoints.
    """
    _check_grid(dyn, u.grid)
    if len(u.values) != dyn.n_players:
        raise ValueError(f"expected controls for {dyn.n_players} players, got {len(u.values)}")
    fine, us = _refine(u.grid, u.values)
    return _payoff_from_states(i, dyn, payoff, fine, rk4(dyn, fine, us), us)


def _batch_margins(i, dyn, payoff, grid, candidate_J, sense, devs, fixed):
    """Dominance margins of a batch of deviations ``devs`` (shape (B, N+1, m_i))."""
    B = devs.shape[0]
    controls = []
    for j, v in enumerate(fixed):
        controls.append(devs if j == i else np.broadcast_to(v, (B,) + v.shape))
    grid, controls = _refine(grid, controls)
    xs = rk4(dyn, grid, controls)
    margins = np.empty(B)
    payoffs = []
    tb = np.broadcast_to(grid, (B, grid.size))
    lo_all, hi_all = [], []
    for k in range(payoff.players[i].dim):
        lo, hi = payoff.running_endpoints(i, k, tb, xs, controls)
        tlo, thi = payoff.terminal_endpoints(i, k, xs[:, -1, :])
        lo_all.append((lo, tlo))
        hi_all.append((hi, thi))
    for b in range(B):
        comps = []
        for k in range(payoff.players[i].dim):
            lo, tlo = lo_all[k]
            hi, thi = hi_all[k]
            integral = integrate_samples(lo[b], hi[b], grid[0], grid[-1])
            comps.append(Interval(float(tlo[b]) + integral.lo, float(thi[b]) + integral.hi))
        J = IntervalVector(comps)
        payoffs.append(J)
        # falsifier iff margin > 0; orientation depends on payoff sense
        margins[b] = dominance_margin(candidate_J, J) if sense == "max" else dominance_margin(J, candidate_J)
    return margins, payoffs


def _endpoint_gains(candidate_J, J, sense):
    """Best per-endpoint improvement over the candidate (min over components)."""
    if sense == "max":
        return float(np.min(J.lo - candidate_J.lo)), float(np.min(J.hi - candidate_J.hi))
    return float(np.min(candidate_J.lo - J.lo)), float(np.min(candidate_J.hi - J.hi))


@dataclass
class PlayerDominance:
    player: int
    passed: bool
    candidate_payoff: IntervalVector
    evaluations: int
    best_margin: float
    falsifier: Optional[np.ndarray] = None
    falsifier_payoff: Optional[IntervalVector] = None
    lower_improver_found: bool = False
    upper_improver_found: bool = False

    def as_dict(self) -> dict:
        return {
            "player": self.player + 1,
            "passed": self.passed,
            "evaluations": self.evaluations,
            "best_margin": self.best_margin,
            "candidate_payoff": [[c.lo, c.hi] for c in self.candidate_payoff],
            "falsifier_payoff": None if self.falsifier_payoff is None else [[c.lo, c.hi] for c in self.falsifier_payoff],
            "endpoint_readings": {
                "per_deviation": self.passed,
                "uniform_lower": not self.lower_improver_found,
                "uniform_upper": not self.upper_improver_found,
                "uniform": not (self.lower_improver_found and self.upper_improver_found),
            },
        }


@dataclass
class DominanceReport:
    """Result of the equilibrium falsification search.

    ``passed`` means no strictly dominating unilateral deviation was found
    within the budget; it is not a proof of equilibrium.

    ``endpoint_readings`` covers the two readings of the scalar-interval
    condition "lower endpoint not improved, or upper endpoint not improved":
    per deviation (identical to strict dominance) and uniform (one endpoint
    is never improved by any deviation).
    """

    players: list[PlayerDominance]
    sense: str
    budget: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.players)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "sense": self.sense,
            "budget": self.budget,
            "seed": self.seed,
            "players": [p.as_dict() for p in self.players],
        }


def _smooth_directions(rng, n_nodes: int, m: int, count: int, modes: int = 8) -> np.ndarray:
    s = np.linspace(0.0, 1.0, n_nodes)
    basis = np.cos(np.pi * np.outer(np.arange(modes), s))  # (modes, N+1)
    decay = 1.0 / (1.0 + np.arange(modes))
    coef = rng.standard_normal((count, modes, m)) * decay[None, :, None]
    d = np.einsum("kn,bkm->bnm", basis, coef)
    norm = np.max(np.abs(d), axis=(1, 2), keepdims=True)
    return d / np.where(norm > 0, norm, 1.0)


def check_pareto_nash(
    candidate: ControlTrajectory,
    dyn: DynamicsSpec,
    payoff: IntervalPayoffSpec,
    budget: int = 500,
    seed: int = 0,
    sense: str = "max",
    tol: float = 1e-6,
    batch_size: int = 50,
) -> DominanceReport:
    """Falsification search for unilateral deviations that strictly dominate.

    ``sense="max"`` treats payoffs as rewards: a deviation falsifies when the
    candidate's payoff strictly dominates the deviation's from below.
    ``sense="min"`` treats payoffs as payments: the deviation must strictly
    dominate the candidate's payoff from below. In both cases every component
    must improve at both endpoints by more than ``tol``. The default sits
    above the second-order discretization error of the payoffs at the usual
    grid sizes; smaller gains are not resolved by the discrete game.

    Per player, ``budget`` deviations are evaluated: 80% smooth random
    perturbations of the current best point (scale annealed geometrically
    from 1 to 0.01 of the control magnitude) and 20% single-node coordinate
    moves. The search climbs on the dominance margin and stops at the first
    falsifier.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    if budget < 1:
        raise ValueError("budget must be positive")
    _check_grid(dyn, candidate.grid)
    rng = np.random.default_rng(seed)
    grid = candidate.grid
    fixed = [np.asarray(v) for v in candidate.values]
    reports = []
    for i in range(dyn.n_players):
        J_star = evaluate_payoff(i, dyn, payoff, candidate)
        base = fixed[i]
        magnitude = max(float(np.max(np.abs(base))), 1.0)
        current = base.copy()
        current_margin = 0.0
        evaluations = 0
        falsifier = None
        falsifier_J = None
        lower_found = upper_found = False
        best_margin = -np.inf
        n_rounds = max(1, int(np.ceil(budget / batch_size)))
        for r in range(n_rounds):
            count = min(batch_size, budget - evaluations)
            if count <= 0:
                break
            frac = r / max(n_rounds - 1, 1)
            scale = magnitude * 10.0 ** (-2.0 * frac)
            n_rand = max(1, int(round(0.8 * count)))
            n_coord = count - n_rand
            dirs = _smooth_directions(rng, grid.size, base.shape[1], n_rand)
            amps = scale * rng.uniform(0.05, 1.0, size=(n_rand, 1, 1))
            devs = current[None] + amps * dirs
            if n_coord:
                coord = np.repeat(current[None], n_coord, axis=0)
                nodes = rng.integers(0, grid.size, size=n_coord)
                comps = rng.integers(0, base.shape[1], size=n_coord)
                steps = scale * rng.choice([-1.0, 1.0], size=n_coord) * rng.uniform(0.05, 1.0, size=n_coord)
                coord[np.arange(n_coord), nodes, comps] += steps
                devs = np.concatenate([devs, coord], axis=0)
            devs = candidate.clamp(i, devs)
            margins, payoffs = _batch_margins(i, dyn, payoff, grid, J_star, sense, devs, fixed)
            evaluations += devs.shape[0]
            for b, J in enumerate(payoffs):
                g_lo, g_hi = _endpoint_gains(J_star, J, sense)
                lower_found |= g_lo > tol
                upper_found |= g_hi > tol
            k = int(np.argmax(margins))
            best_margin = max(best_margin, float(margins[k]))
            if margins[k] > tol:
                falsifier, falsifier_J = devs[k], payoffs[k]
                break
            if margins[k] > current_margin:
                current, current_margin = devs[k], float(margins[k])
        log.debug("player %d: %d evaluations, best margin %.3e", i + 1, evaluations, best_margin)
        reports.append(
            PlayerDominance(
                player=i,
                passed=falsifier is None,
                candidate_payoff=J_star,
                evaluations=evaluations,
                best_margin=best_margin,
                falsifier=falsifier,
                falsifier_payoff=falsifier_J,
                lower_improver_found=lower_found,
                upper_improver_found=upper_found,
            )
        )
    return DominanceReport(reports, sense, budget, seed)


def scalarize_game(weights: Sequence[Sequence[float]], payoff: IntervalPayoffSpec) -> IntervalPayoffSpec:
    """Collapse each player's payoff vector with strictly positive weights."""
    if len(weights) != len(payoff.players):
        raise ValueError(f"need one weight vector per player ({len(payoff.players)})")
    players = []
    for w, pp in zip(weights, payoff.players):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if w.size != pp.dim:
            raise ValueError(f"weight vector of length {w.size} for payoff of dimension {pp.dim}")
        if np.any(~(w > 0)):
            raise ValueError("scalarization weights must be strictly positive")
        running = ((_weighted([f for f, _ in pp.running], w), _weighted([g for _, g in pp.running], w)),)
        terminal = None
        if pp.terminal is not None:
            terminal = ((_weighted([f for f, _ in pp.terminal], w), _weighted([g for _, g in pp.terminal], w)),)
        players.append(PlayerPayoff(running, terminal))
    return IntervalPayoffSpec(tuple(players))


def _weighted(fns: Sequence[Callable], w: np.ndarray) -> Callable:
    fns = tuple(fns)
    weights = tuple(float(v) for v in w)
    if len(fns) == 1 and weights[0] == 1.0:
        return fns[0]

    def combined(*args):
        total = 0.0
        for wk, fk in zip(weights, fns):
            total = total + wk * np.asarray(fk(*args), dtype=float)
        return total

    return combined
