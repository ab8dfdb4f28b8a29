"""Classical duels and truels: closed forms, exact tree evaluation, sampling.

These serve as independent oracles for the quantum engine. Nothing here
touches amplitudes: the game state is the set of living players.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .engine import (
    AIR,
    FireAt,
    FireInAir,
    GameConfig,
    Payoffs,
    Policy,
    PolicyMixture,
    Record,
    check_action,
    payoff_matrix,
)
from .errors import ConfigError, InvalidProbability, OrderingError, SizeError
from .qstate import index_to_bits

MAX_TREE_WORK = 5_000_000


def _check_miss(*xs: float) -> None:
    for x in xs:
        if not 0.0 <= x < 1.0:
            raise InvalidProbability(f"miss probability must lie in [0, 1), got {x}")


@dataclass(frozen=True)
class ClassicalDuelParams:
    """Miss probabilities and bullets per player; ``m=None`` is unlimited."""

    a: float
    b: float
    m: int | None = None

    def __post_init__(self):
        _check_miss(self.a, self.b)
        if self.m is not None and (int(self.m) != self.m or self.m < 0):
            raise ConfigError(f"bullet count must be a nonnegative integer, got {self.m}")


def duel_payoff(p: ClassicalDuelParams, u2: float = 0.5) -> float:
    """Alice's expected payoff when she shoots first; Bob gets one minus this.

    With ``m`` bullets each, ``v_m = 1 - a + a b v_{m-1}`` and ``v_0 = u2``
    (both survive once the ammunition is gone).
    """
    a, b = p.a, p.b
    if p.m is None:
        return (1 - a) / (1 - a * b)
    v = u2
    for _ in range(p.m):
        v = 1 - a + a * b * v
    return v


class ClassicalTruelStrategy(enum.Enum):
    """What Alice does while both Bob and Charles are alive."""

    AIR = "air"
    TARGET_B = "B"
    TARGET_C = "C"


def truel_survival(a: float, b: float, c: float, s: ClassicalTruelStrategy) -> tuple[float, float, float]:
    """Sole-survival probabilities of Alice, Bob and Charles.

    Sequential truel with unlimited ammunition, Alice shooting first and
    Charles last. Bob and Charles target each other while both live; any
    resulting duel is played to the end.
    """
    _check_miss(a, b, c)
    if not a > b > c:
        raise OrderingError(f"need a > b > c (worst shot first), got a={a}, b={b}, c={c}")

    def first_wins(x, y):
        # shooter with miss x fires first against miss y
        return (1 - x) / (1 - x * y)

    # after Alice's turn: Bob fires at Charles, then Charles at Bob
    bob_kills = 1 - b  # -> duel A vs B, A first
    charles_kills = b * (1 - c)  # -> duel A vs C, A first
    pa_ab = first_wins(a, b)
    pa_ac = first_wins(a, c)
    rest = (
        bob_kills * pa_ab + charles_kills * pa_ac,
        bob_kills * (1 - pa_ab),
        charles_kills * (1 - pa_ac),
    )
    if s is ClassicalTruelStrategy.AIR:
        loop = 1 - b * c
        return tuple(x / loop for x in rest)

    loop = 1 - a * b * c
    if s is ClassicalTruelStrategy.TARGET_B:
        # Alice kills Bob -> duel C vs A with Charles first
        pc_first = first_wins(c, a)
        hit = ((1 - a) * (1 - pc_first), 0.0, (1 - a) * pc_first)
    else:
        # Alice kills Charles -> duel B vs A with Bob first
        pb_first = first_wins(b, a)
        hit = ((1 - a) * (1 - pb_first), (1 - a) * pb_first, 0.0)
    return tuple((h + a * r) / loop for h, r in zip(hit, rest))


def survival_payoffs(
    dist: Sequence[float] | NDArray, utilities: Sequence[float]
) -> tuple[float, ...]:
    """Convert an alive-set distribution to utility payoffs."""
    n = len(utilities)
    return tuple(float(x) for x in np.asarray(dist) @ payoff_matrix(n, utilities))


# ---------------------------------------------------------------- exact tree


def hit_arrays(cfg: GameConfig) -> NDArray[np.float64]:
    return np.array([m.hit for m in cfg.marksmanship])


def _bit(state: int, j: int, n: int) -> int:
    return (state >> (n - 1 - j)) & 1


def _record_for(state: int, n: int, info: str) -> Record:
    return index_to_bits(state, n) if info == "full" else None


def tree_distribution(
    n: int,
    hits: NDArray,
    moves: Sequence[tuple[int, int]],
    pol: Sequence[Policy] | PolicyMixture,
    info: str = "full",
) -> NDArray[np.float64]:
    """Exact distribution over alive sets after ``moves``.

    ``hits`` has shape ``(n, *batch)``. States are basis indices (bit set =
    alive). Shooting a dead player, or shooting while dead, does nothing.
    With ``info="full"`` policies see the current alive set, with
    ``"hidden"`` they always see ``None``.
    """
    if info not in ("full", "hidden"):
        raise ConfigError(f"info must be 'full' or 'hidden', got {info!r}")
    if len(moves) * 2**n > MAX_TREE_WORK:
        raise SizeError(f"tree of {len(moves)} moves over {2**n} alive sets exceeds the work cap")
    mix = PolicyMixture.wrap(pol)
    hits = np.asarray(hits, dtype=np.float64)
    batch = hits.shape[1:]
    d = 2**n
    total = np.zeros(batch + (d,))
    for weight, pols in mix.components:
        dist = {d - 1: np.ones(batch)}
        for rnd, j in moves:
            nxt: dict[int, NDArray] = {}
            for state, w in dist.items():
                action = pols[j](rnd, _record_for(state, n, info))
                check_action(action, j, n)
                if isinstance(action, FireAt) and _bit(state, j, n) and _bit(state, action.target, n):
                    dead = state & ~(1 << (n - 1 - action.target))
                    nxt[dead] = nxt.get(dead, 0.0) + w * hits[j]
                    nxt[state] = nxt.get(state, 0.0) + w * (1.0 - hits[j])
                else:
                    nxt[state] = nxt.get(state, 0.0) + w
            dist = nxt
        for state, w in dist.items():
            total[..., state] += weight * w
    return total


def game_tree_expectation(
    cfg: GameConfig, pol: Sequence[Policy] | PolicyMixture, info: str = "full"
) -> Payoffs:
    """Exact classical expected payoffs for a finite number of rounds."""
    dist = tree_distribution(cfg.n_players, hit_arrays(cfg), cfg.move_sequence(), pol, info)
    return Payoffs(survival_payoffs(dist, cfg.utilities))


def game_tree_distribution(
    cfg: GameConfig, pol: Sequence[Policy] | PolicyMixture, info: str = "full"
) -> NDArray[np.float64]:
    return tree_distribution(cfg.n_players, hit_arrays(cfg), cfg.move_sequence(), pol, info)


def tail_bound(cfg: GameConfig) -> float:
    """Upper bound on the chance that nobody is hit in ``cfg.rounds`` rounds
    when everybody fires at a living opponent every turn."""
    misses = np.array([m.miss for m in cfg.marksmanship])
    return float(np.prod(misses) ** cfg.rounds)


# ---------------------------------------------------------------- sampling


def mc_classical(
    cfg: GameConfig,
    pol: Sequence[Policy] | PolicyMixture,
    trials: int,
    seed: int | None = 0,
    info: str = "full",
) -> Payoffs:
    """Monte Carlo estimate of :func:`game_tree_expectation`."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    n = cfg.n_players
    rng = np.random.default_rng(seed)
    mix = PolicyMixture.wrap(pol)
    weights = np.array([w for w, _ in mix.components])
    comp = rng.choice(len(weights), size=trials, p=weights)
    hits = hit_arrays(cfg)
    state = np.full(trials, 2**n - 1)
    for rnd, j in cfg.move_sequence():
        u = rng.random(trials)
        keys = comp * 2**n + (state if info == "full" else 0)
        for key in np.unique(keys):
            ci, st = divmod(int(key), 2**n)
            action = mix.components[ci][1][j](rnd, _record_for(st, n, info))
            check_action(action, j, n)
            if isinstance(action, FireInAir):
                continue
            tmask = 1 << (n - 1 - action.target)
            smask = 1 << (n - 1 - j)
            sel = (keys == key) & (state & smask != 0) & (state & tmask != 0) & (u < hits[j])
            state[sel] &= ~tmask
    samples = payoff_matrix(n, cfg.utilities)[state]
    se = samples.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(n)
    return Payoffs(tuple(float(x) for x in samples.mean(axis=0)), tuple(float(x) for x in se))


# ---------------------------------------------------------------- standard truel policies


def classical_truel_policies(s: ClassicalTruelStrategy) -> list[Policy]:
    """Full-information policies behind :func:`truel_survival`.

    Bob and Charles shoot each other while both live; everyone shoots the
    last remaining opponent. Alice follows ``s`` while Bob and Charles both
    live. A ``None`` record is read as everyone alive.
    """

    def alive(record: Record, j: int) -> bool:
        return record is None or bool(record[j])

    def survivor(record: Record, me: int):
        others = [k for k in range(3) if k != me and alive(record, k)]
        return FireAt(others[0]) if len(others) == 1 else None

    def alice(rnd: int, record: Record):
        if alive(record, 1) and alive(record, 2):
            return {
                ClassicalTruelStrategy.AIR: AIR,
                ClassicalTruelStrategy.TARGET_B: FireAt(1),
                ClassicalTruelStrategy.TARGET_C: FireAt(2),
            }[s]
        return survivor(record, 0) or AIR

    def bob(rnd: int, record: Record):
        return FireAt(2) if alive(record, 2) else (survivor(record, 1) or AIR)

    def charles(rnd: int, record: Record):
        return FireAt(1) if alive(record, 1) else (survivor(record, 2) or AIR)

    return [alice, bob, charles]
