"""Interval Hamiltonians and checkers for Pontryagin-type conditions.

Nothing here solves a boundary value problem. Given a candidate
``(x, u_1..u_n, p_1..p_n)`` on a grid, the functions measure how far it is
from satisfying the first-order conditions for a chosen endpoint selection,
test the gH-inclusion form of the same conditions, and probe (on samples) the
concavity hypotheses of the sufficiency result.

Each player's payoff must be a single interval (``d_i = 1``); scalarize
vector payoffs first with :func:`idgame.game.scalarize_game`.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from .calculus import DEFAULT_STEP
from .game import ControlTrajectory, DynamicsSpec, IntervalPayoffSpec
from .interval import Interval

DEFAULT_INCLUSION_TOL = 1e-4
_ZOOM_POINTS = 21
_ZOOM_ROUNDS = 12


class Endpoint(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"

    @property
    def index(self) -> int:
        return 0 if self is Endpoint.LOWER else 1


Selection = tuple[Endpoint, ...]


def all_selections(n_players: int) -> list[Selection]:
    """Every combination of per-player endpoint choices (2**n of them)."""
    return [tuple(c) for c in itertools.product((Endpoint.LOWER, Endpoint.UPPER), repeat=n_players)]


@dataclass(frozen=True)
class Candidate:
    """State, controls and costates of a candidate equilibrium on one grid."""

    grid: np.ndarray
    x: np.ndarray
    u: tuple[np.ndarray, ...]
    p: tuple[np.ndarray, ...]

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        n = grid.size

        def as2d(a):
            a = np.asarray(a, dtype=float)
            a = a[:, None] if a.ndim == 1 else a
            if a.shape[0] != n:
                raise ValueError(f"trajectory with {a.shape[0]} rows does not match grid of {n} nodes")
            return a

        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "x", as2d(self.x))
        object.__setattr__(self, "u", tuple(as2d(v) for v in self.u))
        object.__setattr__(self, "p", tuple(as2d(v) for v in self.p))
        if len(self.p) != len(self.u):
            raise ValueError("need one costate trajectory per player")
        if any(v.shape != self.x.shape for v in self.p):
            raise ValueError("costates must have the state's shape")

    @property
    def controls(self) -> ControlTrajectory:
        return ControlTrajectory(self.grid, self.u)

    def with_control(self, player: int, value) -> "Candidate":
        u = list(self.u)
        u[player] = np.asarray(value, dtype=float).reshape(self.u[player].shape)
        return Candidate(self.grid, self.x, tuple(u), self.p)

    def with_costate(self, player: int, value) -> "Candidate":
        p = list(self.p)
        p[player] = np.asarray(value, dtype=float).reshape(self.p[player].shape)
        return Candidate(self.grid, self.x, self.u, tuple(p))


def _require_scalar_payoffs(payoff: IntervalPayoffSpec) -> None:
    if any(d != 1 for d in payoff.dims()):
        raise ValueError("Hamiltonian checks need single-interval payoffs; scalarize the game first")


def hamiltonian_endpoints(i, t, x, us, p_i, payoff: IntervalPayoffSpec, dyn: DynamicsSpec):
    """Lower and upper endpoint of ``L_i + p_i . f`` (array-valued over leading axes)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    us = [np.asarray(u, dtype=float) for u in us]
    lo, hi = payoff.running_endpoints(i, 0, t, x, us)
    pf = np.sum(np.asarray(p_i, dtype=float) * dyn.rhs(t, x, us), axis=-1)
    return lo + pf, hi + pf


def interval_hamiltonian(i, t, x, u, p_i, payoff: IntervalPayoffSpec, dyn: DynamicsSpec) -> Interval:
    """Player ``i``'s interval Hamiltonian at one point.

    The real term ``p_i . f`` shifts both endpoints of the running payoff.
    """
    _require_scalar_payoffs(payoff)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    us = [np.atleast_1d(np.asarray(v, dtype=float)) for v in u]
    lo, hi = hamiltonian_endpoints(i, t, x, us, np.atleast_1d(p_i), payoff, dyn)
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("non-finite Hamiltonian value")
    return Interval(lo, hi)


def endpoint_hamiltonian(i, sel: Selection, t, x, u, p_i, payoff: IntervalPayoffSpec, dyn: DynamicsSpec) -> float:
    """The endpoint of the interval Hamiltonian picked by ``sel[i]``."""
    H = interval_hamiltonian(i, t, x, u, p_i, payoff, dyn)
    return H.lo if sel[i] is Endpoint.LOWER else H.hi


class HamiltonianGradients(Protocol):
    """Partial derivatives of one endpoint Hamiltonian, evaluated on node arrays.

    Arrays carry a leading node axis. ``dx`` returns shape ``(N + 1, m)``,
    ``du`` ``(N + 1, m_i)`` and ``terminal`` the gradient of the selected
    terminal payoff endpoint, shape ``(m,)``.
    """

    def dx(self, i: int, end: Endpoint, t, x, us, p) -> np.ndarray: ...

    def du(self, i: int, end: Endpoint, t, x, us, p) -> np.ndarray: ...

    def terminal(self, i: int, end: Endpoint, x) -> np.ndarray: ...


class FiniteDifferenceGradients:
    """Central finite differences of the endpoint Hamiltonians with step ``h``."""

    def __init__(self, dyn: DynamicsSpec, payoff: IntervalPayoffSpec, h: float = DEFAULT_STEP):
        if not h > 0:
            raise ValueError("finite-difference step must be positive")
        self.dyn, self.payoff, self.h = dyn, payoff, h

    def _H(self, i, end, t, x, us, p):
        return hamiltonian_endpoints(i, t, x, us, p, self.payoff, self.dyn)[end.index]

    def dx(self, i, end, t, x, us, p):
        out = np.empty(x.shape)
        for j in range(x.shape[-1]):
            e = np.zeros(x.shape[-1])
            e[j] = self.h
            out[..., j] = (self._H(i, end, t, x + e, us, p) - self._H(i, end, t, x - e, us, p)) / (2 * self.h)
        return out

    def du(self, i, end, t, x, us, p):
        ui = us[i]
        out = np.empty(ui.shape)
        for j in range(ui.shape[-1]):
            e = np.zeros(ui.shape[-1])
            e[j] = self.h
            plus = list(us)
            minus = list(us)
            plus[i] = ui + e
            minus[i] = ui - e
            out[..., j] = (self._H(i, end, t, x, plus, p) - self._H(i, end, t, x, minus, p)) / (2 * self.h)
        return out

    def terminal(self, i, end, x):
        x = np.asarray(x, dtype=float)
        if self.payoff.players[i].terminal is None:
            return np.zeros_like(x)
        out = np.empty_like(x)
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = self.h
            fp = self.payoff.terminal_endpoints(i, 0, x + e)[end.index]
            fm = self.payoff.terminal_endpoints(i, 0, x - e)[end.index]
            out[j] = (float(fp) - float(fm)) / (2 * self.h)
        return out


def costate_rates(grid: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Second-order finite-difference time derivative of a costate trajectory.

    Central differences inside, second-order one-sided stencils at both ends.
    """
    return np.gradient(p, grid, axis=0, edge_order=2)


@dataclass
class PlayerResiduals:
    player: int
    adjoint_residual: float
    stationarity_residual: float
    transversality_residual: float
    adjoint_profile: np.ndarray = field(repr=False, default=None)
    stationarity_profile: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {
            "player": self.player + 1,
            "adjoint_residual": self.adjoint_residual,
            "stationarity_residual": self.stationarity_residual,
            "transversality_residual": self.transversality_residual,
        }


@dataclass
class ResidualReport:
    """Max-norm violations of the first-order conditions, one entry per player."""

    selection: Selection
    players: list[PlayerResiduals]
    inclusion_flags: Optional[list[bool]] = None

    def max_residual(self) -> float:
        return max(
            max(p.adjoint_residual, p.stationarity_residual, p.transversality_residual) for p in self.players
        )

    def as_dict(self) -> dict:
        out = {
            "selection": [s.value for s in self.selection],
            "players": [p.as_dict() for p in self.players],
        }
        if self.inclusion_flags is not None:
            out["inclusion"] = list(self.inclusion_flags)
        return out


def necessary_residuals(
    candidate: Candidate,
    sel: Selection,
    dyn: DynamicsSpec,
    payoff: IntervalPayoffSpec,
    h: float = DEFAULT_STEP,
    gradients: Optional[HamiltonianGradients] = None,
    scheme: str = "midpoint",
) -> ResidualReport:
    """Measure adjoint, stationarity and transversality violations.

    For each player ``i`` with endpoint Hamiltonian ``H_i`` picked by
    ``sel[i]``:

    - adjoint: ``max |p_i' + dH_i/dx|`` over the grid;
    - stationarity: ``max_t |dH_i/du_i|``;
    - transversality: ``|p_i(t1) - grad psi_i(x(t1))|`` (max norm).

    With ``scheme="midpoint"`` the adjoint residual is taken on grid cells,
    ``(p[k+1] - p[k]) / dt + (g[k] + g[k+1]) / 2`` with ``g = dH_i/dx``,
    which is second order without one-sided end stencils. ``scheme="nodal"``
    uses :func:`costate_rates` at every node instead. No thresholding is done
    here.
    """
    _require_scalar_payoffs(payoff)
    if len(sel) != dyn.n_players:
        raise ValueError(f"selection has {len(sel)} entries for {dyn.n_players} players")
    if scheme not in ("midpoint", "nodal"):
        raise ValueError("scheme must be 'midpoint' or 'nodal'")
    grads = gradients if gradients is not None else FiniteDifferenceGradients(dyn, payoff, h)
    t, x, us = candidate.grid, candidate.x, list(candidate.u)
    players = []
    for i in range(dyn.n_players):
        p = candidate.p[i]
        g = grads.dx(i, sel[i], t, x, us, p)
        if scheme == "midpoint":
            dt = np.diff(t)[:, None]
            adj = np.max(np.abs(np.diff(p, axis=0) / dt + 0.5 * (g[1:] + g[:-1])), axis=-1)
        else:
            adj = np.max(np.abs(costate_rates(t, p) + g), axis=-1)
        sta = np.max(np.abs(grads.du(i, sel[i], t, x, us, p)), axis=-1)
        trans = np.max(np.abs(p[-1] - grads.terminal(i, sel[i], x[-1])))
        if not (np.all(np.isfinite(adj)) and np.all(np.isfinite(sta))):
            raise ValueError(f"non-finite residual for player {i + 1}")
        players.append(
            PlayerResiduals(i, float(np.max(adj)), float(np.max(sta)), float(trans), adj, sta)
        )
    return ResidualReport(tuple(sel), players)


@dataclass
class InclusionReport:
    """Per-player outcome of the gH-inclusion conditions at every node."""

    flags: list[bool]
    control_violation: list[float]
    adjoint_violation: list[float]
    tol: float

    def as_dict(self) -> dict:
        return {
            "tol": self.tol,
            "flags": list(self.flags),
            "control_violation": list(self.control_violation),
            "adjoint_violation": list(self.adjoint_violation),
        }


def _outside(value: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.maximum(np.maximum(lo - value, value - hi), 0.0)


def gh_partial_bounds(grads: HamiltonianGradients, kind: str, i, t, x, us, p):
    """Endpoints ``[min, max]`` of the gH-partial of ``H_i`` along ``x`` or ``u_i``."""
    fn = grads.dx if kind == "x" else grads.du
    a = fn(i, Endpoint.LOWER, t, x, us, p)
    b = fn(i, Endpoint.UPPER, t, x, us, p)
    return np.minimum(a, b), np.maximum(a, b)


def inclusion_check(
    candidate: Candidate,
    dyn: DynamicsSpec,
    payoff: IntervalPayoffSpec,
    h: float = DEFAULT_STEP,
    tol: float = DEFAULT_INCLUSION_TOL,
    gradients: Optional[HamiltonianGradients] = None,
) -> InclusionReport:
    """Check ``0 in (dH_i/du_i)_gH`` and ``-p_i' in (dH_i/dx)_gH`` at every node.

    Membership is tested against ``[lo - tol, hi + tol]``; a player's flag is
    the conjunction over all nodes and components.
    """
    _require_scalar_payoffs(payoff)
    grads = gradients if gradients is not None else FiniteDifferenceGradients(dyn, payoff, h)
    t, x, us = candidate.grid, candidate.x, list(candidate.u)
    flags, cviol, aviol = [], [], []
    for i in range(dyn.n_players):
        p = candidate.p[i]
        ulo, uhi = gh_partial_bounds(grads, "u", i, t, x, us, p)
        xlo, xhi = gh_partial_bounds(grads, "x", i, t, x, us, p)
        cv = float(np.max(_outside(np.zeros_like(ulo), ulo, uhi)))
        av = float(np.max(_outside(-costate_rates(t, p), xlo, xhi)))
        cviol.append(cv)
        aviol.append(av)
        flags.append(cv <= tol and av <= tol)
    return InclusionReport(flags, cviol, aviol, tol)


def max_hamiltonian(
    i: int,
    sel: Selection,
    t: float,
    x,
    us,
    p_i,
    payoff: IntervalPayoffSpec,
    dyn: DynamicsSpec,
    control_box: Sequence[tuple[float, float]],
    n_grid: int = 41,
) -> tuple[float, np.ndarray]:
    """Maximize the selected endpoint Hamiltonian over player ``i``'s control box.

    A tensor grid of ``n_grid`` points per axis locates the best cell, then
    coordinate-wise zoom searches refine inside it. ``us[i]`` is
    ignored. Returns ``(value, argmax)``.
    """
    box = np.asarray(control_box, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(box)):
        raise ValueError("control box must be bounded")
    if np.any(box[:, 0] > box[:, 1]):
        raise ValueError("control box axis with lo > hi")
    if box.shape[0] != dyn.control_dims[i]:
        raise ValueError(f"control box has {box.shape[0]} axes, player {i + 1} has {dyn.control_dims[i]} controls")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p_i = np.atleast_1d(np.asarray(p_i, dtype=float))
    fixed = [np.atleast_1d(np.asarray(v, dtype=float)) for v in us]
    k = sel[i].index

    def H_many(points: np.ndarray) -> np.ndarray:
        n = points.shape[0]
        controls = [np.broadcast_to(v, (n, v.size)) for v in fixed]
        controls[i] = points
        return hamiltonian_endpoints(
            i, np.full(n, float(t)), np.broadcast_to(x, (n, x.size)), controls, p_i, payoff, dyn
        )[k]

    axes = [np.linspace(lo, hi, n_grid) for lo, hi in box]
    mesh = np.array(list(itertools.product(*axes)))
    vals = H_many(mesh)
    best = mesh[int(np.argmax(vals))].copy()
    best_val = float(np.max(vals))
    cell = (box[:, 1] - box[:, 0]) / max(n_grid - 1, 1)
    for _ in range(3 if box.shape[0] > 1 else 1):
        for j in range(box.shape[0]):
            a = max(box[j, 0], best[j] - cell[j])
            b = min(box[j, 1], best[j] + cell[j])
            # zoom: each round shrinks the bracket tenfold around the best sample
            for _ in range(_ZOOM_ROUNDS):
                if b <= a:
                    break
                pts = np.repeat(best[None], _ZOOM_POINTS, axis=0)
                pts[:, j] = np.linspace(a, b, _ZOOM_POINTS)
                vals = H_many(pts)
                m = int(np.argmax(vals))
                if vals[m] >= best_val:
                    best, best_val = pts[m].copy(), float(vals[m])
                step = (b - a) / (_ZOOM_POINTS - 1)
                a, b = max(a, best[j] - step), min(b, best[j] + step)
    return best_val, best


@dataclass
class ClauseResult:
    passed: bool
    worst: float
    where: Optional[dict] = None

    def as_dict(self) -> dict:
        return {"passed": self.passed, "worst": self.worst, "where": self.where}


@dataclass
class SufficiencyReport:
    """Sampled check of the sufficiency hypotheses, per player and clause.

    ``passed`` only ever means that no violation was found at the probed
    samples; the report never asserts that the hypotheses hold.
    """

    selection: Selection
    clauses: list[dict[str, ClauseResult]]

    @property
    def passed(self) -> bool:
        return all(c.passed for player in self.clauses for c in player.values())

    @property
    def summary(self) -> str:
        if self.passed:
            return "no violation found at the probed samples"
        failed = sorted({name for player in self.clauses for name, c in player.items() if not c.passed})
        return "sufficiency not established: " + ", ".join(failed) + " violated at probed samples"

    def as_dict(self) -> dict:
        return {
            "selection": [s.value for s in self.selection],
            "passed": self.passed,
            "summary": self.summary,
            "players": [
                {"player": i + 1, **{name: c.as_dict() for name, c in player.items()}}
                for i, player in enumerate(self.clauses)
            ],
        }


def _directions(m: int, rng) -> np.ndarray:
    dirs = list(np.eye(m))
    if m > 1:
        extra = rng.standard_normal((2 * m, m))
        dirs.extend(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    return np.array(dirs)


def sufficiency_probe(
    candidate: Candidate,
    sel: Selection,
    dyn: DynamicsSpec,
    payoff: IntervalPayoffSpec,
    x_samples: Sequence,
    control_box: Sequence[Sequence[tuple[float, float]]],
    n_nodes: int = 11,
    dx: float = 1e-2,
    tol: float = 1e-6,
    n_grid: int = 41,
    seed: int = 0,
) -> SufficiencyReport:
    """Probe the sufficiency hypotheses on samples.

    Clauses, per player ``i`` with maximized Hamiltonian
    ``H*_i(t, x) = max_{u_i in box} H_i(t, x, u_i, u_-i*, p_i)``:

    ``max_attainment``
        ``H_i`` at the candidate control reaches ``H*_i`` at the sampled nodes.
    ``adjoint_consistency``
        ``p_i' = -dH*_i/dx`` along the candidate at the sampled nodes.
    ``hamiltonian_concavity``
        second central differences of ``x -> H*_i`` are ``<= tol`` at the
        sampled nodes, for ``x`` in ``x_samples`` and on the candidate state.
    ``terminal_concavity``
        both endpoint functions of ``psi_i`` have second differences ``<= tol``.

    ``control_box[i]`` bounds player ``i``'s control for the maximization.
    """
    _require_scalar_payoffs(payoff)
    xs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in x_samples]
    if not xs:
        raise ValueError("x_samples is empty")
    if n_nodes < 1:
        raise ValueError("n_nodes must be positive")
    rng = np.random.default_rng(seed)
    grid = candidate.grid
    nodes = np.unique(np.linspace(0, grid.size - 1, min(n_nodes, grid.size)).round().astype(int))
    pdots = [costate_rates(grid, p) for p in candidate.p]
    dirs = _directions(dyn.state_dim, rng)
    results = []
    for i in range(dyn.n_players):
        k_end = sel[i].index
        attain_worst, attain_where = -math.inf, None
        adjoint_worst, adjoint_where = 0.0, None
        concave = ClauseResult(True, -math.inf)
        for n in nodes:
            t = float(grid[n])
            us = [u[n] for u in candidate.u]
            p = candidate.p[i][n]

            def Hstar(xv):
                return max_hamiltonian(i, sel, t, xv, us, p, payoff, dyn, control_box[i], n_grid)[0]

            H_cand = float(hamiltonian_endpoints(i, t, candidate.x[n], us, p, payoff, dyn)[k_end])
            gap = Hstar(candidate.x[n]) - H_cand
            if gap > attain_worst:
                attain_worst, attain_where = gap, {"t": t}

            grad = np.array([(Hstar(candidate.x[n] + dx * e) - Hstar(candidate.x[n] - dx * e)) / (2 * dx)
                             for e in np.eye(dyn.state_dim)])
            mismatch = float(np.max(np.abs(pdots[i][n] + grad)))
            if mismatch > adjoint_worst:
                adjoint_worst, adjoint_where = mismatch, {"t": t}

            for xv in [candidate.x[n]] + xs:
                h0 = Hstar(xv)
                for d in dirs:
                    second = (Hstar(xv + dx * d) - 2.0 * h0 + Hstar(xv - dx * d)) / dx**2
                    if second > concave.worst:
                        concave = ClauseResult(second <= tol, float(second), {"t": t, "x": xv.tolist()})
        attain = ClauseResult(attain_worst <= tol, float(attain_worst), attain_where)
        # the costate is only second-order accurate, hence the looser bound
        adjoint = ClauseResult(adjoint_worst <= math.sqrt(tol), adjoint_worst, adjoint_where)
        terminal = _terminal_concavity(i, payoff, [candidate.x[-1]] + xs, dirs, dx, tol)
        results.append(
            {
                "max_attainment": attain,
                "adjoint_consistency": adjoint,
                "hamiltonian_concavity": concave,
                "terminal_concavity": terminal,
            }
        )
    return SufficiencyReport(tuple(sel), results)


def _terminal_concavity(i, payoff, points, dirs, dx, tol) -> ClauseResult:
    worst = ClauseResult(True, 0.0)
    if payoff.players[i].terminal is None:
        return worst
    for xv in points:
        for end in (0, 1):
            f0 = float(payoff.terminal_endpoints(i, 0, xv)[end])
            for d in dirs:
                fp = float(payoff.terminal_endpoints(i, 0, xv + dx * d)[end])
                fm = float(payoff.terminal_endpoints(i, 0, xv - dx * d)[end])
                second = (fp - 2.0 * f0 + fm) / dx**2
                if second > worst.worst:
                    worst = ClauseResult(second <= tol, float(second), {"x": xv.tolist(), "endpoint": end})
    return worst
