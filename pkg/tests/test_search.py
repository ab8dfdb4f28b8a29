from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from qnuel.analysis.search import (
    StrategySpace,
    best_response,
    find_equilibria,
    is_equilibrium,
    payoff_table,
)
from qnuel.engine import AIR, FireAt, GameConfig, StrategyProfile, expected_payoffs, play
from qnuel.errors import ConfigError, SizeError
from qnuel.operators import Marksmanship

A, B, C = 0, 1, 2


def truel(rounds):
    return GameConfig.from_miss([2 / 3, 1 / 3, 0], rounds)


def payoff(cfg, rows):
    return expected_payoffs(play(cfg, StrategyProfile.parse(rows)), cfg)


def brute_force_equilibria(cfg, space, eps=1e-9):
    """Replay every profile and every unilateral deviation from scratch."""
    lists = [space.lists(j) for j in range(cfg.n_players)]
    found = []
    for combo in itertools.product(*lists):
        prof = StrategyProfile(combo)
        base = expected_payoffs(play(cfg, prof), cfg)
        if all(
            expected_payoffs(play(cfg, prof.replace(j, alt)), cfg)[j] <= base[j] + eps
            for j in range(cfg.n_players) for alt in lists[j]
        ):
            found.append(prof)
    return found


def test_strategy_space_defaults_and_order():
    space = StrategySpace.full(truel(2))
    assert space.slots[0][0] == (AIR, FireAt(1), FireAt(2))
    assert space.sizes() == [9, 9, 9]
    assert space.lists(0)[0] == (AIR, AIR)
    with pytest.raises(ConfigError):
        space.restrict(0, 0, [])


def test_payoff_table_matches_direct_play():
    cfg = truel(2)
    space = StrategySpace.full(cfg)
    table = payoff_table(cfg, space)
    rng = np.random.default_rng(0)
    for _ in range(30):
        idx = tuple(int(rng.integers(9)) for _ in range(3))
        prof = StrategyProfile(tuple(space.lists(j)[i] for j, i in enumerate(idx)))
        assert table[idx] == pytest.approx(expected_payoffs(play(cfg, prof), cfg).values, abs=1e-12)


@pytest.mark.parametrize(
    "cfg",
    [
        GameConfig.from_miss([0.6, 0.3], 1),
        GameConfig.from_miss([0.6, 0.3], 2),
        GameConfig.from_miss([0.8, 0.5], 2, alphas=[0.4, -1.0]),
        GameConfig.from_miss([2 / 3, 1 / 3, 0], 1),
        GameConfig.from_miss([2 / 3, 1 / 3, 0], 2),
        GameConfig.from_miss([0.7, 0.4, 0.2], 2),
    ],
)
def test_equilibria_complete_against_brute_force(cfg):
    space = StrategySpace.full(cfg)
    report = find_equilibria(cfg, space)
    assert set(report.profiles()) == set(brute_force_equilibria(cfg, space))
    for prof in report.profiles():
        assert is_equilibrium(cfg, space, prof)


def test_blind_duel_everything_is_an_equilibrium():
    cfg = GameConfig(2, 2, (Marksmanship(0.0), Marksmanship(0.0)))
    space = StrategySpace.full(cfg)
    assert len(find_equilibria(cfg, space)) == space.n_profiles()


def test_size_cap():
    cfg = GameConfig.from_miss([0.5] * 4, 3)
    with pytest.raises(SizeError, match="coordinate search"):
        find_equilibria(cfg, StrategySpace.full(cfg), max_profiles=1000)


def test_best_response_tie_goes_to_air():
    cfg = GameConfig(3, 1, (Marksmanship(0.0), Marksmanship(1.0), Marksmanship(2.0)))
    fixed = StrategyProfile.parse(["B", "C", "A"])
    actions, value = best_response(cfg, StrategySpace.full(cfg), fixed, 0)
    assert actions == (AIR,)


def test_three_round_duel_phase_values():
    # both Alice and Bob fire at Charles first, who then cannot matter
    cfg = truel(4)
    assert payoff(cfg, ["C,B,B,B", "C,A,A,A", "air,air,air,air"])[0] == pytest.approx(0.448, abs=5e-4)
    assert payoff(cfg, ["C,B,B,air", "C,A,A,A", "air,air,air,air"])[0] == pytest.approx(0.761, abs=5e-4)


def test_best_response_finds_abstaining_last_shot():
    cfg = truel(4)
    space = StrategySpace.full(cfg)
    for r, act in enumerate((FireAt(C), FireAt(B), FireAt(B))):
        space = space.restrict(A, r, [act])
    fixed = StrategyProfile.parse(["C,B,B,B", "C,A,A,A", "air,air,air,air"])
    actions, value = best_response(cfg, space, fixed, A)
    assert actions[-1] == AIR
    assert value == pytest.approx(0.761, abs=5e-4)


def test_mutual_air_equilibrium_value():
    cfg = truel(4)
    space = StrategySpace.full(cfg)
    for j in (A, B):
        space = space.restrict(j, 0, [FireAt(C)])
    for r in range(4):
        space = space.restrict(C, r, [AIR])
    report = find_equilibria(cfg, space)
    assert len(report) == 1
    prof, pay = report.equilibria[0]
    assert prof == StrategyProfile.parse(["C,B,B,air", "C,A,air,air", "air,air,air,air"])
    assert pay[0] == pytest.approx(0.554, abs=5e-4)
    assert is_equilibrium(cfg, space, prof, 1e-9)


def test_air_first_continuation_has_profitable_deviations():
    # after the two air-first rounds, a third round of mutual abstention is
    # not stable: Alice gains by firing at Bob
    cfg = truel(3)
    base = payoff(cfg, ["air,B,air", "C,A,air", "B,A,air"])
    assert base.values == pytest.approx((52 / 162, 67 / 162, 43 / 162), abs=1e-12)
    deviate = payoff(cfg, ["air,B,B", "C,A,air", "B,A,air"])
    r = 1 / math.sqrt(3)
    hand = ((2 + 2 * r) ** 2 + (2 * r - 1) ** 2 + 1 / 3 + 4 / 9) / 27
    assert deviate[0] == pytest.approx(hand, abs=1e-12)
    assert deviate[0] > base[0]
    space = StrategySpace.full(cfg)
    for j, row in enumerate((("air", "B"), ("C", "A"), ("B", "A"))):
        for r_, tok in enumerate(row):
            act = AIR if tok == "air" else FireAt("ABC".index(tok))
            space = space.restrict(j, r_, [act])
    assert not is_equilibrium(cfg, space, StrategyProfile.parse(["air,B,air", "C,A,air", "B,A,air"]))
