"""Acceptance criteria 1-10, one PASS/FAIL line each in the terminal summary."""

import math

import mpmath as mp
import numpy as np
import pytest

from idgame.game import ControlTrajectory, check_pareto_nash
from idgame.interval import Interval, IntervalVector, add, gh_difference, strictly_dominates
from idgame.lq import (
    Corner,
    LQIntervalGameSpec,
    as_interval_game,
    build_adjoint_matrix,
    corner_game,
    eigen_solve,
    integrate_forward,
    payoff_intervals,
    solve_corner,
    solve_shooting,
)
from idgame.pontryagin import inclusion_check, necessary_residuals, sufficiency_probe

from oracles import example_payoffs, rel, stated_ll_u1, stated_ll_x, stated_payoffs, stated_uu_u1
from specgen import random_specs

SPEC = LQIntervalGameSpec.example()
LABELS = ("ll", "lu", "ul", "uu")
N = 2000


@pytest.fixture(scope="module")
def solutions():
    return {label: solve_corner(SPEC, label, N) for label in LABELS}


def rel_or_abs(value, reference):
    """Relative gap; absolute where the reference vanishes."""
    reference = mp.mpf(reference)
    if reference == 0:
        return abs(float(value))
    return rel(value, reference)


def test_criterion_01_corner_eigenvalues(criterion):
    with criterion(1, "corner eigenvalues 3, sqrt10, sqrt8, 3") as c:
        expected = {"ll": 3.0, "lu": math.sqrt(10), "ul": math.sqrt(8), "uu": 3.0}
        worst = 0.0
        for label, s in expected.items():
            eig = eigen_solve(build_adjoint_matrix(corner_game(SPEC, Corner(label)), SPEC.a, SPEC.b, SPEC.c))
            worst = max(worst, abs(eig.s[0] - s))
        c.detail = f"max |s1 - expected| = {worst:.2e} (tol 1e-12)"
        assert worst <= 1e-12


def test_criterion_02_ll_closed_forms(criterion, solutions):
    with criterion(2, "LL u1*, u2*, x* at 101 times") as c:
        ts = np.linspace(0.0, 3.0, 101)
        x, _, _, u1, u2 = solutions["ll"].evaluate(ts)
        worst = 0.0
        for k, t in enumerate(ts):
            ref_u1 = stated_ll_u1(t)
            worst = max(
                worst,
                rel_or_abs(x[k], stated_ll_x(t)),
                rel_or_abs(u1[k], ref_u1),
                rel_or_abs(u2[k], ref_u1 * 2 / 3),
            )
        c.detail = f"max relative gap {worst:.2e} (tol 1e-8; absolute at t = 3 where u* = 0)"
        assert worst < 1e-8


def test_criterion_03_ll_payoff_intervals(criterion, solutions):
    with criterion(3, "LL payoff intervals vs closed form") as c:
        oracle = example_payoffs("ll")  # computed before the stated values are consulted
        J1, J2 = payoff_intervals(solutions["ll"], SPEC, N)
        stated = stated_payoffs()["ll"]
        got = [(J1.lo, J1.hi), (J2.lo, J2.hi)]
        vs_stated = max(rel(got[i][j], stated[i][j]) for i in range(2) for j in range(2))
        vs_oracle = max(rel(got[i][j], oracle[i][j]) for i in range(2) for j in range(2))
        oracle_vs_stated = max(rel(stated[i][j], oracle[i][j]) for i in range(2) for j in range(2))
        c.detail = (
            f"solver vs stated {vs_stated:.2e}, solver vs oracle {vs_oracle:.2e} (tol 1e-6); "
            f"oracle vs stated {oracle_vs_stated:.1e}"
        )
        assert vs_stated < 1e-6 and vs_oracle < 1e-6


def test_criterion_04_uu_roles_swap(criterion, solutions):
    with criterion(4, "UU controls swap the LL coefficients") as c:
        ts = np.linspace(0.0, 3.0, 101)
        _, _, _, u1, u2 = solutions["uu"].evaluate(ts)
        worst = 0.0
        for k, t in enumerate(ts):
            ref = stated_uu_u1(t)  # coefficient 2 for player 1, 3 for player 2
            worst = max(worst, rel_or_abs(u1[k], ref), rel_or_abs(u2[k], ref * 3 / 2))
        c.detail = f"max relative gap {worst:.2e} (tol 1e-8)"
        assert worst < 1e-8


def test_criterion_05_boundary_residuals(criterion, solutions):
    with criterion(5, "boundary residuals at every corner") as c:
        worst_p, worst_x = 0.0, 0.0
        for sol in solutions.values():
            scale = max(np.max(np.abs(sol.p1)), np.max(np.abs(sol.p2)))
            worst_p = max(worst_p, abs(sol.p1[-1]) / scale, abs(sol.p2[-1]) / scale)
            worst_x = max(worst_x, abs(sol.x[0] - SPEC.x0))
        c.detail = f"max |p_i(t1)|/scale {worst_p:.2e} (tol 1e-8), max |x(t0) - x0| {worst_x:.2e} (tol 1e-12)"
        assert worst_p < 1e-8 and worst_x <= 1e-12


def test_criterion_06_oracle_equivalence(criterion):
    with criterion(6, "closed form vs RK4 and vs shooting, Example + 20 random specs") as c:
        specs = [SPEC] + random_specs(20, seed=2024)
        worst_rk4, worst_shoot = 0.0, 0.0
        for spec in specs:
            for label in LABELS:
                sol = solve_corner(spec, label, N)
                ys = integrate_forward(sol.eig.A, sol.grid, sol.y[0])
                worst_rk4 = max(worst_rk4, float(np.max(np.abs(ys - sol.y))))
                sh = solve_shooting(spec, label, N)
                worst_shoot = max(worst_shoot, float(np.max(np.abs(sh.y - sol.y))))
        c.detail = f"RK4 max-norm {worst_rk4:.2e} (tol 1e-7), shooting max-norm {worst_shoot:.2e} (tol 1e-6)"
        assert worst_rk4 < 1e-7 and worst_shoot < 1e-6


def test_criterion_07_necessary_conditions(criterion, solutions):
    with criterion(7, "necessary-condition residuals and inclusion") as c:
        dyn, payoff = as_interval_game(SPEC)
        worst, ratios, flags = 0.0, [], []
        for label, sol in solutions.items():
            sel = sol.corner.selection
            r1 = necessary_residuals(sol.candidate(), sel, dyn, payoff).max_residual()
            r2 = necessary_residuals(solve_corner(SPEC, label, 2 * N).candidate(), sel, dyn, payoff).max_residual()
            worst = max(worst, r1)
            ratios.append(r1 / r2)
            flags.extend(inclusion_check(sol.candidate(), dyn, payoff, tol=1e-4).flags)
        c.detail = (
            f"max residual {worst:.2e} (tol 1e-5), N-doubling ratios "
            f"{', '.join(f'{r:.2f}' for r in ratios)}, inclusion all {all(flags)}"
        )
        assert worst < 1e-5
        assert all(r == pytest.approx(4.0, rel=0.1) for r in ratios)
        assert all(flags)


def test_criterion_08_falsification(criterion, solutions):
    with criterion(8, "falsification search at budget 500") as c:
        dyn, payoff = as_interval_game(SPEC)
        margins = []
        for sol in solutions.values():
            report = check_pareto_nash(ControlTrajectory(sol.grid, (sol.u1, sol.u2)), dyn, payoff, budget=500, sense="min")
            margins.append(max(p.best_margin for p in report.players))
            assert report.passed, "falsifier found for an exact corner equilibrium"
        ll = solutions["ll"]
        bad = check_pareto_nash(ControlTrajectory(ll.grid, (ll.u1 + 0.1, ll.u2)), dyn, payoff, budget=500, sense="min")
        found = bad.players[0].falsifier is not None
        c.detail = (
            f"corners pass (best margin {max(margins):.1e}); u1 + 0.1 falsified: {found} "
            f"(margin {bad.players[0].best_margin:.2e})"
        )
        assert found and not bad.passed


def test_criterion_09_interval_properties(criterion):
    with criterion(9, "interval algebra on 10^4 random triples") as c:
        rng = np.random.default_rng(9)
        chains = 0
        for _ in range(10_000):
            d = int(rng.integers(1, 4))
            vecs = []
            for _ in range(3):
                a, b = rng.integers(-30, 31, size=(2, d)).astype(float)
                vecs.append(IntervalVector([Interval(min(p, q), max(p, q)) for p, q in zip(a, b)]))
            A, B, C = vecs
            assert gh_difference(A, A) == IntervalVector.zeros(d)
            assert gh_difference(add(A, B), B) == A
            if strictly_dominates(A, B) and strictly_dominates(B, C):
                chains += 1
                assert strictly_dominates(A, C)
        c.detail = f"self-difference and cancellation exact on 10000 triples; {chains} dominance chains, all transitive"
        assert chains > 0


def test_criterion_10_sufficiency_honesty(criterion, solutions):
    with criterion(10, "sufficiency concavity clause fails on the Example") as c:
        dyn, payoff = as_interval_game(SPEC)
        worst = {}
        for label, sol in solutions.items():
            cg = sol.corner
            report = sufficiency_probe(
                sol.candidate(), cg.selection, dyn, payoff, [[0.0], [0.5], [1.0]],
                [[(-5.0, 5.0)], [(-5.0, 5.0)]], n_nodes=5,
            )
            c1 = report.clauses[0]["hamiltonian_concavity"]
            c2 = report.clauses[1]["hamiltonian_concavity"]
            assert not c1.passed and not c2.passed
            assert c1.worst == pytest.approx(cg.g1, abs=1e-6) and c2.worst == pytest.approx(cg.h1, abs=1e-6)
            assert report.summary.startswith("sufficiency not established")
            worst[label] = (c1.worst, c2.worst)
        c.detail = "second x-difference = g1, h1 per corner: " + ", ".join(
            f"{k} ({a:.3f}, {b:.3f})" for k, (a, b) in worst.items()
        ) + "; report says not established"
