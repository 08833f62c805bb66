"""``idgame`` command line: solve, verify, probe and export.

Exit codes: 0 success, 1 invalid input or missing artifacts, 2 solver or
checker failure, 3 verification found a violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import (
    ArtifactError,
    read_csv,
    read_json,
    trajectory_columns,
    write_csv,
    write_json,
)
from .calculus import quasi_concavity_probe
from .game import check_pareto_nash
from .interval import Interval
from .pontryagin import (
    Candidate,
    Endpoint,
    inclusion_check,
    necessary_residuals,
    sufficiency_probe,
)
from .specfile import SpecError, load_spec, parse_numerics

log = logging.getLogger("idgame")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VIOLATION = 0, 1, 2, 3
LQ_COLUMNS = trajectory_columns(1, (1, 1))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _threads() -> int:
    raw = os.environ.get("IDGAME_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise CliError(f"IDGAME_THREADS must be a positive integer, got {raw!r}", EXIT_INPUT)
    return n


def _load(path, **overrides):
    try:
        spec = load_spec(path)
        given = {k: str(v) for k, v in overrides.items() if v is not None}
        if given:
            base = {k: str(v) for k, v in spec.numerics.items()}
            spec = dataclasses.replace(spec, numerics=parse_numerics({**base, **given}))
        return spec
    except SpecError as exc:
        raise CliError(f"invalid spec: {exc}", EXIT_INPUT) from None


def _lq(spec):
    if spec.kind != "lq":
        raise CliError("this command needs kind = lq (general games support verify only)", EXIT_INPUT)
    try:
        return spec.lq_spec()
    except ValueError as exc:
        raise CliError(f"invalid spec: {exc}", EXIT_INPUT) from None


# --- solve ---------------------------------------------------------------


def cmd_solve(args) -> int:
    from .lq import solve_corner

    spec = _load(args.spec, corner=args.corner, grid=args.grid, out=args.out)
    game = _lq(spec)
    workers = _threads()
    out = Path(spec.numerics["out"])
    started = time.perf_counter()

    def run(label):
        t = time.perf_counter()
        try:
            return label, solve_corner(game, label, spec.grid), None, time.perf_counter() - t
        except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            return label, None, exc, time.perf_counter() - t

    if workers > 1 and len(spec.corners) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, spec.corners))
    else:
        results = [run(c) for c in spec.corners]

    payoffs, status, timings, files = {}, {}, {}, []
    for label, sol, err, seconds in results:
        timings[label] = seconds
        if err is not None:
            status[label] = {"status": "failed", "error": f"{type(err).__name__}: {err}"}
            log.error("corner %s failed: %s", label, err)
            continue
        name = f"trajectory_{label}.csv"
        write_csv(out / name, LQ_COLUMNS, [sol.grid, sol.x, sol.u1, sol.u2, sol.p1, sol.p2])
        files.append(name)
        payoffs[label] = {"J1": [sol.J1.lo, sol.J1.hi], "J2": [sol.J2.lo, sol.J2.hi], "method": sol.method}
        status[label] = {"status": "ok", "method": sol.method}
        if sol.method == "shooting":
            status[label]["shooting_iterations"] = len(sol.shooting_history)
    write_json(out / "payoffs.json", payoffs)
    files.append("payoffs.json")
    timings["total"] = time.perf_counter() - started
    manifest = {
        "tool": "idgame",
        "version": __version__,
        "command": "solve",
        "input": {"name": Path(args.spec).name, "sha256": spec.sha256},
        "parameters": spec.resolved(),
        "corners": status,
        "files": sorted(files),
        "timings": timings,
    }
    write_json(out / "manifest.json", manifest)
    failed = [c for c, s in status.items() if s["status"] != "ok"]
    for label in spec.corners:
        if label in payoffs:
            J = payoffs[label]
            print(f"{label}: J1 = [{J['J1'][0]:.10g}, {J['J1'][1]:.10g}]  J2 = [{J['J2'][0]:.10g}, {J['J2'][1]:.10g}]")
    if failed:
        print(f"solver failed for corner(s) {', '.join(failed)}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


# --- shared helpers for verify / probe -----------------------------------


def _candidate_from_table(table, m, dims) -> Candidate:
    cols = trajectory_columns(m, dims)
    pos = 1

    def take(k):
        nonlocal pos
        block = np.column_stack([table[c] for c in cols[pos:pos + k]])
        pos += k
        return block

    x = take(m)
    us = tuple(take(k) for k in dims)
    ps = tuple(take(m) for _ in dims)
    return Candidate(table["t"], x, us, ps)


def _control_box(candidate: Candidate):
    box = []
    for u in candidate.u:
        span = float(np.max(np.abs(u)))
        r = max(1.0, span)
        box.append([(float(lo) - r, float(hi) + r) for lo, hi in zip(u.min(axis=0), u.max(axis=0))])
    return box


def _x_samples(candidate: Candidate, k: int):
    lo, hi = candidate.x.min(axis=0), candidate.x.max(axis=0)
    return [lo + (hi - lo) * s for s in np.linspace(0.0, 1.0, k)]


def _selection(label: str):
    pick = {"l": Endpoint.LOWER, "u": Endpoint.UPPER}
    return tuple(pick[ch] for ch in label)


def _game_for(spec):
    if spec.kind == "lq":
        from .lq import LQGradients, as_interval_game

        game = _lq(spec)
        dyn, payoff = as_interval_game(game)
        return dyn, payoff, LQGradients(game)
    try:
        dyn, payoff = spec.general_model()
    except SpecError as exc:
        raise CliError(f"invalid spec: {exc}", EXIT_INPUT) from None
    if dyn.t0 != spec.t0 or dyn.t1 != spec.t1:
        raise CliError("invalid spec: [horizon] does not match the model's horizon", EXIT_INPUT)
    if dyn.state_dim != len(spec.x0):
        raise CliError(f"invalid spec: x0 has {len(spec.x0)} entries, model state has {dyn.state_dim}", EXIT_INPUT)
    dyn = dataclasses.replace(dyn, x0=np.asarray(spec.x0, dtype=float))
    return dyn, payoff, None


def _labels(spec, directory: Path, n_players: int) -> list[str]:
    if spec.kind == "lq":
        return list(spec.corners)
    labels = sorted(p.stem[len("trajectory_"):] for p in directory.glob("trajectory_*.csv"))
    labels = [s for s in labels if len(s) == n_players and set(s) <= {"l", "u"}]
    if not labels:
        raise CliError(f"missing artifacts: no trajectory_<selection>.csv in {str(directory)!r}", EXIT_INPUT)
    return labels


# --- verify --------------------------------------------------------------


def cmd_verify(args) -> int:
    spec = _load(args.spec, tol=args.tol, budget=args.budget, seed=args.seed)
    directory = Path(args.dir)
    if not directory.is_dir():
        raise CliError(f"missing artifacts: {str(directory)!r} is not a directory", EXIT_INPUT)
    num = spec.numerics
    if num["budget"] < 1:
        raise CliError("invalid spec: [numerics] budget must be >= 1 for verify", EXIT_INPUT)
    dyn, payoff, grads = _game_for(spec)
    labels = _labels(spec, directory, dyn.n_players)
    cols = trajectory_columns(dyn.state_dim, dyn.control_dims)
    tables = {}
    for label in labels:
        try:
            tables[label] = read_csv(directory / f"trajectory_{label}.csv", cols)
        except ArtifactError as exc:
            raise CliError(f"missing artifacts: {exc}", EXIT_INPUT) from None

    report, all_ok = {}, True
    for label in labels:
        try:
            cand = _candidate_from_table(tables[label], dyn.state_dim, dyn.control_dims)
            sel = _selection(label)
            res = necessary_residuals(cand, sel, dyn, payoff, gradients=grads)
            inc = inclusion_check(cand, dyn, payoff, gradients=grads)
            dom = check_pareto_nash(
                cand.controls, dyn, payoff, budget=num["budget"], seed=num["seed"],
                sense=spec.sense, tol=num["dominance_tol"],
            )
            suff = sufficiency_probe(
                cand, sel, dyn, payoff, _x_samples(cand, max(num["samples"], 1)), _control_box(cand),
                seed=num["seed"],
            )
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            raise CliError(f"checker failed on {label}: {exc}", EXIT_SOLVER) from None
        ok = res.max_residual() < num["tol"] and dom.passed
        all_ok &= ok
        report[label] = {
            "passed": ok,
            "max_residual": res.max_residual(),
            "residuals": res.as_dict(),
            "inclusion": inc.as_dict(),
            "dominance": dom.as_dict(),
            "sufficiency": suff.as_dict(),
        }
        worst = max(res.players, key=lambda p: p.stationarity_residual)
        print(
            f"{label}: max residual {res.max_residual():.3e} "
            f"(stationarity {worst.stationarity_residual:.3e}, player {worst.player + 1}); "
            f"inclusion {inc.flags}; falsifier {'none' if dom.passed else 'FOUND'}; "
            f"{suff.summary}"
        )
    write_json(
        directory / "residuals.json",
        {"tol": num["tol"], "dominance_tol": num["dominance_tol"], "passed": all_ok, "corners": report},
    )
    return EXIT_OK if all_ok else EXIT_VIOLATION


# --- probe ---------------------------------------------------------------


def cmd_probe(args) -> int:
    from .lq import as_interval_game, deviation_family, solve_corner

    spec = _load(args.spec, samples=args.samples)
    k = spec.numerics["samples"]
    if k < 1:
        raise CliError("invalid request: the probe sample set K is empty (samples = 0)", EXIT_INPUT)
    game = _lq(spec)
    dyn, payoff = as_interval_game(game)
    rng = np.random.default_rng(spec.numerics["seed"])
    out = Path(spec.numerics["out"])
    report = {}
    for label in spec.corners:
        try:
            sol = solve_corner(game, label, spec.grid)
        except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            raise CliError(f"solver failed on {label}: {exc}", EXIT_SOLVER) from None
        cand = sol.candidate()
        qc = []
        for i in (0, 1):
            u = sol.u1 if i == 0 else sol.u2
            r = 0.1 * max(1.0, float(np.max(np.abs(u))))
            thetas = rng.uniform(-r, r, size=(k, 2))
            J = sol.J1 if i == 0 else sol.J2
            res = quasi_concavity_probe(deviation_family(sol, i), thetas, Interval(J.lo, J.hi))
            qc.append({"player": i + 1, "radius": r, **res.as_dict()})
        suff = sufficiency_probe(
            cand, sol.corner.selection, dyn, payoff, _x_samples(cand, k), _control_box(cand),
            seed=spec.numerics["seed"],
        )
        report[label] = {"quasi_concavity": qc, "sufficiency": suff.as_dict()}
        print(f"{label}: {suff.summary}")
    write_json(out / "probe.json", {"samples": k, "seed": spec.numerics["seed"], "corners": report})
    return EXIT_OK


# --- export --------------------------------------------------------------


def cmd_export(args) -> int:
    directory = Path(args.dir)
    try:
        manifest = read_json(directory / "manifest.json")
    except ArtifactError as exc:
        raise CliError(f"missing artifacts: {exc}", EXIT_INPUT) from None
    params = manifest.get("parameters", {})
    coeffs = params.get("coefficients")
    if params.get("kind") != "lq" or not coeffs:
        raise CliError("export needs the manifest of an LQ solve", EXIT_INPUT)
    W = {k: Interval(*coeffs[k]) for k in ("g1", "g2", "h1", "h2")}
    labels = [c for c, s in sorted(manifest.get("corners", {}).items()) if s.get("status") == "ok"]
    if not labels:
        raise CliError("missing artifacts: the manifest lists no solved corner", EXIT_INPUT)
    for label in labels:
        try:
            tab = read_csv(directory / f"trajectory_{label}.csv", LQ_COLUMNS)
        except ArtifactError as exc:
            raise CliError(f"missing artifacts: {exc}", EXIT_INPUT) from None
        x2 = tab["x"] ** 2
        for player, (w1, w2, u) in enumerate(((W["g1"], W["g2"], tab["u1"]), (W["h1"], W["h2"], tab["u2"])), 1):
            lo = 0.5 * (w1.lo * x2 + w2.lo * u**2)
            hi = 0.5 * (w1.hi * x2 + w2.hi * u**2)
            write_csv(directory / f"lagrange_{player}_{label}.csv", ["t", "L_lo", "L_hi"], [tab["t"], lo, hi])
    print(f"wrote Lagrange data for {', '.join(labels)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="idgame", description="Interval differential games: solve and verify.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the LQ corner games and write trajectories")
    p.add_argument("spec")
    p.add_argument("--corner", choices=["ll", "lu", "ul", "uu", "all"])
    p.add_argument("--grid", type=int, help="number of grid intervals (even)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check solved artifacts against the necessary conditions")
    p.add_argument("spec")
    p.add_argument("dir")
    p.add_argument("--tol", type=float, help="residual tolerance (default 1e-4)")
    p.add_argument("--budget", type=int, help="deviations per player in the falsification search")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", help="sampled quasi-concavity and sufficiency probes")
    p.add_argument("spec")
    p.add_argument("--samples", type=int, help="sample count K")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("export", help="write interval Lagrange data for plotting")
    p.add_argument("dir")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"idgame: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
