"""Game and strategy files, and parsing of numeric inputs.

Files are INI style. A game file has a ``[game]`` section and may carry a
``[strategy]`` section; a profile file has only ``[strategy]``::

    [game]
    players = 3
    rounds = 2
    # one of hit / miss / theta, one value per player
    miss = 2/3, 1/3, 0
    alpha = 0, 0, 0
    beta = 0, 0, 0
    utilities = 1, 1/2, 1/3
    firing_order = A, B, C

    [strategy]
    A = air, B
    B = C, A
    C = B, A

Players are letters (A, B, ...) or 1-based numbers; ``air`` means firing
into the air. Numbers may be decimals or exact rationals such as ``2/3``;
angles may also use ``pi`` (``-2pi/3``, ``pi/4``).
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .engine import GameConfig, StrategyProfile, parse_player
from .errors import ConfigError
from .operators import Marksmanship, PhaseParams

MARKSMANSHIP_KEYS = ("hit", "miss", "theta")
_PI = re.compile(r"^([+-]?)(\d*(?:\.\d*)?)\*?(?:pi|π)(?:/(\d+(?:\.\d*)?))?$")


def parse_number(text: str) -> Fraction | float:
    """Exact :class:`Fraction` for integers, decimals and ``p/q``; else float."""
    text = str(text).strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"not a finite number: {text!r}")
    return x


def parse_angle(text: str) -> float:
    """Number of radians, allowing multiples of pi (``2pi/3``, ``-pi``)."""
    compact = str(text).strip().replace(" ", "").lower()
    m = _PI.match(compact)
    if m:
        sign, coef, den = m.groups()
        value = (float(coef) if coef else 1.0) * math.pi / (float(den) if den else 1.0)
        return -value if sign == "-" else value
    return float(parse_number(text))


def is_exact(x) -> bool:
    return isinstance(x, Fraction)


def split_list(text: str) -> list[str]:
    return [t.strip() for t in str(text).replace(";", ",").split(",") if t.strip()]


def marksmanship_from(kind: str, value) -> Marksmanship:
    if kind == "hit":
        return Marksmanship.from_hit(value)
    if kind == "miss":
        return Marksmanship.from_miss(value)
    if kind == "theta":
        return Marksmanship(float(value))
    raise ConfigError(f"unknown marksmanship form {kind!r}")


@dataclass(frozen=True)
class LoadedGame:
    """A parsed game file. ``exact`` is true when every marksmanship input
    was rational and every phase zero, so rational results can be shown as
    fractions."""

    config: GameConfig
    profile: StrategyProfile | None
    exact: bool


def _read(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # keep player letters as written
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parser


def profile_from_section(section, n: int, rounds: int | None = None) -> StrategyProfile:
    rows: list = [None] * n
    for key, value in section.items():
        j = parse_player(key, n)
        if rows[j] is not None:
            raise ConfigError(f"strategy for player {key!r} given twice")
        rows[j] = split_list(value)
    missing = [k for k, r in enumerate(rows) if r is None]
    if missing:
        raise ConfigError(f"no strategy for player(s) {', '.join(chr(65 + k) for k in missing)}")
    prof = StrategyProfile.parse(rows, n)
    if rounds is not None and any(len(r) != rounds for r in prof.actions):
        raise ConfigError(f"every strategy needs {rounds} actions")
    return prof


def game_from_section(section) -> tuple[GameConfig, bool]:
    try:
        n = int(section["players"])
        rounds = int(section.get("rounds", "1"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"[game] needs integer 'players' and 'rounds': {exc}") from None
    forms = [k for k in MARKSMANSHIP_KEYS if k in section]
    if len(forms) != 1:
        raise ConfigError("[game] needs exactly one of hit, miss, theta")
    kind = forms[0]
    raw = split_list(section[kind])
    if len(raw) != n:
        raise ConfigError(f"{kind} needs {n} values, got {len(raw)}")
    values = [parse_angle(t) if kind == "theta" else parse_number(t) for t in raw]
    marks = tuple(marksmanship_from(kind, v) for v in values)
    alphas = [parse_angle(t) for t in split_list(section.get("alpha", ""))] or [0.0] * n
    betas = [parse_angle(t) for t in split_list(section.get("beta", ""))] or [0.0] * n
    if len(alphas) != n or len(betas) != n:
        raise ConfigError(f"alpha and beta need {n} values each")
    utilities = tuple(float(parse_number(t)) for t in split_list(section.get("utilities", "")))
    order = tuple(parse_player(t, n) for t in split_list(section.get("firing_order", "")))
    cfg = GameConfig(n, rounds, marks, tuple(PhaseParams(x, y) for x, y in zip(alphas, betas)), order, utilities)
    exact = kind != "theta" and all(map(is_exact, values)) and not any(alphas) and not any(betas)
    return cfg, exact


def load_game(path: str | Path) -> LoadedGame:
    """Read a game file (and its optional strategy section)."""
    parser = _read(path)
    if not parser.has_section("game"):
        raise ConfigError(f"{path}: missing [game] section")
    cfg, exact = game_from_section(parser["game"])
    prof = None
    if parser.has_section("strategy"):
        prof = profile_from_section(parser["strategy"], cfg.n_players, cfg.rounds)
    return LoadedGame(cfg, prof, exact)


def load_profile(path: str | Path, n: int, rounds: int | None = None) -> StrategyProfile:
    """Read the ``[strategy]`` section of a profile file."""
    parser = _read(path)
    if not parser.has_section("strategy"):
        raise ConfigError(f"{path}: missing [strategy] section")
    return profile_from_section(parser["strategy"], n, rounds)
