"""Game definition files.

Format (INI-style, ``#`` or ``;`` comments)::

    [game]
    kind = lq            # or: general
    a = 2
    b = 1
    c = 1
    x0 = 1
    g1 = 0.9 1.2         # intervals: two whitespace-separated reals
    g2 = 0.3 0.6
    h1 = 0.8 1.5
    h2 = 0.4 0.5
    sense = min          # optional; min for lq, max for general

    [horizon]
    t0 = 0
    t1 = 3

    [numerics]           # optional section, every key optional
    grid = 2000
    corner = all
    out = out
    tol = 1e-4
    dominance_tol = 1e-6
    budget = 500
    seed = 0
    samples = 8

A ``general`` game replaces the coefficients with ``model = package.module:factory``
where ``factory()`` returns ``(DynamicsSpec, IntervalPayoffSpec)``, plus
``x0`` (whitespace-separated state vector).

Every check runs in :func:`load_spec`; nothing is solved on invalid input.
"""

from __future__ import annotations

import configparser
import hashlib
import importlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .interval import Interval

CORNERS = ("ll", "lu", "ul", "uu")

_GAME_KEYS = {
    "lq": {"kind", "a", "b", "c", "x0", "g1", "g2", "h1", "h2", "sense"},
    "general": {"kind", "model", "x0", "sense"},
}
_NUMERIC_DEFAULTS = {
    "grid": 2000,
    "corner": "all",
    "out": "out",
    "tol": 1e-4,
    "dominance_tol": 1e-6,
    "budget": 500,
    "seed": 0,
    "samples": 8,
}


class SpecError(ValueError):
    """Invalid game file; the message names the violated rule."""


@dataclass(frozen=True)
class GameSpecFile:
    kind: str
    path: Path
    sha256: str
    t0: float
    t1: float
    sense: str
    numerics: dict
    coefficients: dict = field(default_factory=dict)
    model: Optional[str] = None
    x0: tuple[float, ...] = ()

    @property
    def grid(self) -> int:
        return self.numerics["grid"]

    @property
    def corners(self) -> tuple[str, ...]:
        c = self.numerics["corner"]
        return CORNERS if c == "all" else (c,)

    def lq_spec(self):
        """The validated :class:`~idgame.lq.LQIntervalGameSpec` (``kind = lq`` only)."""
        from .lq import LQIntervalGameSpec

        if self.kind != "lq":
            raise SpecError("this command requires kind = lq")
        c = self.coefficients
        return LQIntervalGameSpec(
            c["a"], c["b"], c["c"], c["g1"], c["g2"], c["h1"], c["h2"], self.t0, self.t1, self.x0[0]
        )

    def general_model(self):
        """Import and call the ``module:function`` factory of a general game."""
        if self.kind != "general":
            raise SpecError("kind = lq has no model factory")
        module, _, name = self.model.partition(":")
        try:
            factory = getattr(importlib.import_module(module), name)
        except (ImportError, AttributeError) as exc:
            raise SpecError(f"[game] model: cannot load {self.model!r}: {exc}") from exc
        return factory()

    def resolved(self) -> dict:
        """Plain-data view of every parameter after defaults, for manifests."""
        out = {
            "kind": self.kind,
            "sense": self.sense,
            "t0": self.t0,
            "t1": self.t1,
            "x0": list(self.x0),
            "numerics": dict(self.numerics),
        }
        if self.kind == "lq":
            out["coefficients"] = {
                k: ([v.lo, v.hi] if isinstance(v, Interval) else v) for k, v in self.coefficients.items()
            }
        else:
            out["model"] = self.model
        return out


def _real(section: str, key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SpecError(f"[{section}] {key}: expected a real number, got {text!r}") from None
    if not math.isfinite(value):
        raise SpecError(f"[{section}] {key}: must be finite, got {text!r}")
    return value


def _interval(key: str, text: str) -> Interval:
    parts = text.split()
    if len(parts) != 2:
        raise SpecError(f"[game] {key}: expected two reals 'lo hi', got {text!r}")
    lo, hi = (_real("game", key, p) for p in parts)
    if lo > hi:
        raise SpecError(f"[game] {key}: lower endpoint {lo!r} exceeds upper endpoint {hi!r}")
    return Interval(lo, hi)


def _integer(key: str, text: str, minimum: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise SpecError(f"[numerics] {key}: expected an integer, got {text!r}") from None
    if value < minimum:
        raise SpecError(f"[numerics] {key}: must be >= {minimum}, got {value}")
    return value


def _check_keys(section: str, present, allowed, required=()) -> None:
    unknown = sorted(set(present) - set(allowed))
    if unknown:
        raise SpecError(f"[{section}]: unknown key(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in present]
    if missing:
        raise SpecError(f"[{section}]: missing required key(s) {', '.join(missing)}")


def parse_numerics(raw: dict) -> dict:
    """Validate and complete a ``[numerics]`` mapping (also used for CLI overrides)."""
    _check_keys("numerics", raw, _NUMERIC_DEFAULTS)
    out = dict(_NUMERIC_DEFAULTS)
    for key, text in raw.items():
        text = str(text).strip()
        if key == "grid":
            out[key] = _integer(key, text, 2)
            if out[key] % 2:
                raise SpecError(f"[numerics] grid: Simpson quadrature needs an even interval count, got {out[key]}")
        elif key in ("budget", "samples"):
            out[key] = _integer(key, text, 0)
        elif key == "seed":
            out[key] = _integer(key, text, 0)
        elif key in ("tol", "dominance_tol"):
            out[key] = _real("numerics", key, text)
            if out[key] < 0:
                raise SpecError(f"[numerics] {key}: must be nonnegative, got {text!r}")
        elif key == "corner":
            if text not in CORNERS + ("all",):
                raise SpecError(f"[numerics] corner: expected one of ll, lu, ul, uu, all, got {text!r}")
            out[key] = text
        else:
            if not text:
                raise SpecError("[numerics] out: must not be empty")
            out[key] = text
    return out


def parse_spec_text(text: str, path: Path = Path("<string>")) -> GameSpecFile:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise SpecError(f"malformed spec file: {exc}") from None
    sections = set(parser.sections())
    unknown = sorted(sections - {"game", "horizon", "numerics"})
    if unknown:
        raise SpecError(f"unknown section(s): {', '.join(unknown)}")
    for required in ("game", "horizon"):
        if required not in sections:
            raise SpecError(f"missing required section [{required}]")

    game = dict(parser["game"])
    kind = game.get("kind", "").strip()
    if kind not in _GAME_KEYS:
        raise SpecError(f"[game] kind: expected 'lq' or 'general', got {kind!r}")
    required = sorted(_GAME_KEYS[kind] - {"sense"})
    _check_keys("game", game, _GAME_KEYS[kind], required)

    horizon = dict(parser["horizon"])
    _check_keys("horizon", horizon, {"t0", "t1"}, ("t0", "t1"))
    t0, t1 = _real("horizon", "t0", horizon["t0"]), _real("horizon", "t1", horizon["t1"])
    if not t1 > t0:
        raise SpecError(f"[horizon]: t0 < t1 required, got t0={t0!r}, t1={t1!r}")

    sense = game.get("sense", "min" if kind == "lq" else "max").strip()
    if sense not in ("min", "max"):
        raise SpecError(f"[game] sense: expected 'min' or 'max', got {sense!r}")

    numerics = parse_numerics(dict(parser["numerics"]) if "numerics" in sections else {})
    x0 = tuple(_real("game", "x0", v) for v in game["x0"].split())
    if not x0:
        raise SpecError("[game] x0: empty")
    sha = hashlib.sha256(text.encode("utf-8")).hexdigest()

    if kind == "general":
        model = game["model"].strip()
        if ":" not in model:
            raise SpecError(f"[game] model: expected 'module:function', got {model!r}")
        return GameSpecFile(kind, path, sha, t0, t1, sense, numerics, model=model, x0=x0)

    if len(x0) != 1:
        raise SpecError(f"[game] x0: the LQ game has a scalar state, got {len(x0)} values")
    coeffs = {k: _real("game", k, game[k]) for k in ("a", "b", "c")}
    for k in ("g1", "g2", "h1", "h2"):
        coeffs[k] = _interval(k, game[k])
    for k in ("g2", "h2"):
        v = coeffs[k]
        if v.lo <= 0.0 <= v.hi:
            raise SpecError(f"[game] {k}: interval {v!r} contains 0; control weights must be nonzero")
    return GameSpecFile(kind, path, sha, t0, t1, sense, numerics, coefficients=coeffs, x0=x0)


def load_spec(path) -> GameSpecFile:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {str(path)!r}: {exc.strerror}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise SpecError(f"spec file {str(path)!r} is not UTF-8 text") from None
    return parse_spec_text(text, path)
