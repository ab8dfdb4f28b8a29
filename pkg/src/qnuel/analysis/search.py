"""Exhaustive search over pre-committed strategy profiles."""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..engine import (
    AIR,
    Action,
    FireAt,
    GameConfig,
    ParamArrays,
    Payoffs,
    StrategyProfile,
    action_key,
    check_action,
    expected_payoffs,
    initial_amplitudes,
    payoff_matrix,
    play,
)
from ..errors import ConfigError, SizeError

TIE_EPS = 1e-9
MAX_PROFILES = 500_000


@dataclass(frozen=True)
class StrategySpace:
    """Allowed actions per player (outer) and round (inner)."""

    slots: tuple[tuple[tuple[Action, ...], ...], ...]

    def __post_init__(self):
        slots = tuple(
            tuple(tuple(sorted(dict.fromkeys(opts), key=action_key)) for opts in row)
            for row in self.slots
        )
        n = len(slots)
        for j, row in enumerate(slots):
            for opts in row:
                if not opts:
                    raise ConfigError(f"empty action set for player {j}")
                for a in opts:
                    check_action(a, j, n)
        object.__setattr__(self, "slots", slots)

    @classmethod
    def full(cls, cfg: GameConfig) -> StrategySpace:
        n = cfg.n_players
        row = lambda j: tuple([AIR] + [FireAt(t) for t in range(n) if t != j])  # noqa: E731
        return cls(tuple(tuple(row(j) for _ in range(cfg.rounds)) for j in range(n)))

    def restrict(self, player: int, rnd: int, actions: Sequence[Action]) -> StrategySpace:
        slots = [list(row) for row in self.slots]
        slots[player][rnd] = tuple(actions)
        return StrategySpace(tuple(tuple(r) for r in slots))

    def lists(self, player: int) -> list[tuple[Action, ...]]:
        """Every action list of ``player``, in tie-break order."""
        return list(itertools.product(*self.slots[player]))

    def sizes(self) -> list[int]:
        return [int(np.prod([len(o) for o in row])) for row in self.slots]

    def n_profiles(self) -> int:
        return int(np.prod(self.sizes(), dtype=object))


def payoff_table(cfg: GameConfig, space: StrategySpace, max_profiles: int = MAX_PROFILES) -> NDArray:
    """Expected payoffs of every profile in ``space``.

    Returns an array of shape ``(*space.sizes(), n)``; axis ``j`` indexes
    player j's action lists in the order of ``space.lists(j)``. Profiles
    sharing a prefix of moves share its evolution.
    """
    n = cfg.n_players
    if len(space.slots) != n or any(len(r) != cfg.rounds for r in space.slots):
        raise ConfigError("strategy space does not match the game")
    total = space.n_profiles()
    if total > max_profiles:
        raise SizeError(
            f"{total} profiles exceed the enumeration cap of {max_profiles}; "
            "restrict the space or use coordinate search with best_response"
        )
    params = ParamArrays.from_config(cfg)
    amps = initial_amplitudes(n, (1,))
    idx = np.zeros((n, 1), dtype=np.int64)
    for rnd, j in cfg.move_sequence():
        opts = space.slots[j][rnd]
        parts, idxs = [], []
        for o, action in enumerate(opts):
            parts.append(params.fire(amps, n, rnd, j, action))
            step = idx.copy()
            step[j] = step[j] * len(opts) + o
            idxs.append(step)
        amps = np.concatenate(parts)
        idx = np.concatenate(idxs, axis=1)
    values = (np.abs(amps) ** 2) @ payoff_matrix(n, cfg.utilities)
    table = np.empty(tuple(space.sizes()) + (n,))
    table[tuple(idx)] = values
    return table


@dataclass(frozen=True)
class EquilibriumReport:
    equilibria: tuple[tuple[StrategyProfile, Payoffs], ...]
    eps: float
    n_profiles: int

    def __len__(self) -> int:
        return len(self.equilibria)

    def profiles(self) -> list[StrategyProfile]:
        return [p for p, _ in self.equilibria]


def _profile_at(space: StrategySpace, index: Sequence[int]) -> StrategyProfile:
    return StrategyProfile(tuple(space.lists(j)[i] for j, i in enumerate(index)))


def find_equilibria(cfg: GameConfig, space: StrategySpace, eps: float = TIE_EPS,
                    max_profiles: int = MAX_PROFILES) -> EquilibriumReport:
    """All pure-strategy Nash equilibria within ``space``."""
    table = payoff_table(cfg, space, max_profiles)
    n = cfg.n_players
    ok = np.ones(table.shape[:-1], dtype=bool)
    for j in range(n):
        mine = table[..., j]
        ok &= mine >= mine.max(axis=j, keepdims=True) - eps
    found = []
    for index in zip(*np.nonzero(ok)):
        found.append((_profile_at(space, index), Payoffs(tuple(float(x) for x in table[index]))))
    return EquilibriumReport(tuple(found), eps, table[..., 0].size)


def is_equilibrium(cfg: GameConfig, space: StrategySpace, prof: StrategyProfile, eps: float = TIE_EPS) -> bool:
    """Check every unilateral deviation by replaying it from scratch."""
    base = expected_payoffs(play(cfg, prof), cfg)
    for j in range(cfg.n_players):
        for alt in space.lists(j):
            if expected_payoffs(play(cfg, prof.replace(j, alt)), cfg)[j] > base[j] + eps:
                return False
    return True


def best_response(
    cfg: GameConfig,
    space: StrategySpace,
    fixed: StrategyProfile,
    player: int,
    eps: float = TIE_EPS,
) -> tuple[tuple[Action, ...], float]:
    """Payoff-maximising action list for ``player`` against ``fixed``.

    Ties within ``eps`` go to the earliest list in tie-break order (air
    before any target, lower target index first, earlier rounds dominant).
    """
    best, best_value = None, -np.inf
    for actions in space.lists(player):
        value = expected_payoffs(play(cfg, fixed.replace(player, actions)), cfg)[player]
        if value > best_value + eps:
            best, best_value = actions, value
    return best, float(best_value)
