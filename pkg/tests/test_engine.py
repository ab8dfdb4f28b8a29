from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnuel.engine import (
    AIR,
    FireAt,
    GameConfig,
    PolicyMixture,
    StrategyProfile,
    as_fraction,
    dynamic_payoffs,
    estimate_payoffs_mc,
    expected_payoffs,
    parse_action,
    play,
    play_mixture,
    profile_policies,
    run_trajectory,
    sample_outcomes,
)
from qnuel.errors import ConfigError, InvalidPlayer, InvalidProbability, ProfileError, WeightError
from qnuel.operators import Marksmanship, PhaseParams
from qnuel.qstate import all_alive, measure_probabilities, to_density

AIR_FIRST = StrategyProfile.parse(["air, B", "C, A", "B, A"])


def truel(rounds=2):
    return GameConfig.from_miss([2 / 3, 1 / 3, 0], rounds)


def duel(a, b, rounds, alphas=None, betas=None):
    return GameConfig.from_miss([a, b], rounds, alphas, betas)


MUTUAL2 = StrategyProfile(((FireAt(1), FireAt(1)), (FireAt(0), FireAt(0))))
AIR_SECOND = StrategyProfile(((FireAt(1), AIR), (FireAt(0), FireAt(0))))


def test_two_round_truel_state():
    s = play(truel(), AIR_FIRST)
    expected = {
        "001": -math.sqrt(6), "010": -math.sqrt(8), "100": -math.sqrt(6),
        "011": -1j, "110": 2j, "111": math.sqrt(2), "000": 0, "101": 0,
    }
    for bits, amp in expected.items():
        assert s.amplitude(bits) == pytest.approx(amp / math.sqrt(27), abs=1e-12)


def test_two_round_truel_payoffs():
    pay = expected_payoffs(play(truel(), AIR_FIRST), truel())
    assert pay.values == pytest.approx((52 / 162, 67 / 162, 43 / 162), abs=1e-12)
    assert as_fraction(pay[1]) == pytest.approx(67 / 162)


def test_all_alive_payoffs_are_a_third():
    pay = expected_payoffs(all_alive(3), truel())
    assert pay.values == pytest.approx((1 / 3,) * 3, abs=1e-15)


def test_two_round_duel_sole_survival_at_zero_phase():
    a, b = 2 / 3, 1 / 2
    s = play(duel(a, b, 2), MUTUAL2)
    assert abs(s.amplitude("10")) ** 2 == pytest.approx(a * (1 - a) * (1 + b + 2 * math.sqrt(b)), abs=1e-12)
    assert abs(s.amplitude("10")) ** 2 == pytest.approx(0.6476, abs=1e-4)


def test_duel_payoff_identity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = rng.uniform(0, 1, 2)
        cfg = duel(a, b, 3, list(rng.uniform(-3, 3, 2)), list(rng.uniform(-3, 3, 2)))
        prof = StrategyProfile(((FireAt(1),) * 3, (FireAt(0),) * 3))
        s = play(cfg, prof)
        p10, p01 = abs(s.amplitude("10")) ** 2, abs(s.amplitude("01")) ** 2
        assert expected_payoffs(s, cfg)[0] == pytest.approx(0.5 * (1 + p10 - p01), abs=1e-12)


def test_air_second_shot_probabilities_against_hand_derivation():
    # Bob's two shots compose to a block whose off-diagonal is 2i e^{i beta} c s cos(alpha)
    rng = np.random.default_rng(8)
    for _ in range(25):
        a, b = rng.uniform(0, 1, 2)
        al = rng.uniform(-math.pi, math.pi, 2)
        be = rng.uniform(-math.pi, math.pi, 2)
        s = play(duel(a, b, 2, list(al), list(be)), AIR_SECOND)
        assert abs(s.amplitude("10")) ** 2 == pytest.approx(1 - a, abs=1e-12)
        assert abs(s.amplitude("01")) ** 2 == pytest.approx(
            2 * a * b * (1 - b) * (1 + math.cos(2 * al[1])), abs=1e-12)


def test_payoffs_sum_to_one_for_random_profiles():
    rng = np.random.default_rng(4)
    for n in (2, 3, 4):
        for _ in range(10):
            rounds = int(rng.integers(1, 4))
            cfg = GameConfig(n, rounds, tuple(Marksmanship(rng.uniform(0, math.pi)) for _ in range(n)),
                             tuple(PhaseParams(*rng.uniform(-3, 3, 2)) for _ in range(n)))
            rows = []
            for j in range(n):
                opts = [AIR] + [FireAt(t) for t in range(n) if t != j]
                rows.append(tuple(opts[int(rng.integers(len(opts)))] for _ in range(rounds)))
            s = play(cfg, StrategyProfile(tuple(rows)))
            assert s.norm() == pytest.approx(1, abs=1e-12)
            assert abs(s.amplitudes[0]) < 1e-12
            assert expected_payoffs(s, cfg).total() == pytest.approx(1, abs=1e-9)


def test_mixture_is_linear():
    cfg = GameConfig.from_miss([0.3, 0.5, 0], 1)
    p1 = StrategyProfile.parse(["C", "C", "A"])
    p2 = StrategyProfile.parse(["C", "C", "B"])
    mixed = expected_payoffs(play_mixture(cfg, [(0.5, p1), (0.5, p2)]), cfg)
    pure = [expected_payoffs(play(cfg, p), cfg).as_array() for p in (p1, p2)]
    assert mixed.as_array() == pytest.approx((pure[0] + pure[1]) / 2, abs=1e-12)
    same = play_mixture(cfg, [(0.5, p1), (0.5, p1)])
    assert np.allclose(same.entries, to_density(play(cfg, p1)).entries, atol=1e-12)
    single = play_mixture(cfg, [(1.0, p2)])
    assert np.allclose(single.entries, to_density(play(cfg, p2)).entries, atol=1e-15)
    with pytest.raises(WeightError):
        play_mixture(cfg, [(0.7, p1), (0.7, p2)])


def test_config_validation():
    with pytest.raises(ConfigError):
        GameConfig.from_miss([0.5, 0.5], 0)
    with pytest.raises(ConfigError):
        GameConfig.from_miss([0.5, 0.5, 0.5], 1, utilities=(1, 1 / 3, 1 / 2))
    with pytest.raises(ConfigError):
        GameConfig.from_miss([0.5, 0.5], 1, utilities=(0.9, 0.5))
    with pytest.raises(ConfigError):
        GameConfig.from_miss([0.5, 0.5, 0.5], 1, firing_order=(0, 0, 1))
    with pytest.raises(InvalidProbability):
        GameConfig.from_miss([1.5, 0.5], 1)


def test_profile_validation():
    cfg = truel()
    with pytest.raises(ProfileError):
        play(cfg, StrategyProfile.parse(["air", "C", "B"]))
    with pytest.raises(ProfileError):
        play(cfg, StrategyProfile(((AIR, FireAt(0)), (FireAt(2), FireAt(0)), (FireAt(1), FireAt(0)))))
    with pytest.raises(InvalidPlayer):
        parse_action("D", 3)
    assert parse_action("2", 3) == FireAt(1)
    assert parse_action("air", 3) == AIR


def test_firing_order_changes_play():
    cfg = GameConfig.from_miss([0.5, 0.5], 1, firing_order=(1, 0))
    prof = StrategyProfile(((FireAt(1),), (FireAt(0),)))
    pay = expected_payoffs(play(cfg, prof), cfg)
    # Bob shoots first: he wins outright with probability 1/2
    assert pay.values == pytest.approx((0.5 * 0.5 + 0.25 * 0.5, 0.5 + 0.25 * 0.5), abs=1e-12)


def test_round_phase_override():
    base = duel(0.4, 0.6, 2)
    over = GameConfig(2, 2, base.marksmanship, round_phases={(1, 0): PhaseParams(0.8, 0)})
    ref = duel(0.4, 0.6, 2, [0.8, 0.0])
    a = play(over, MUTUAL2)
    # round 0 uses alpha 0 for Alice, so it differs from a fixed alpha of 0.8
    assert not np.allclose(a.amplitudes, play(ref, MUTUAL2).amplitudes)
    assert not np.allclose(a.amplitudes, play(base, MUTUAL2).amplitudes)


# ---------------------------------------------------------------- decoherence


def test_dynamic_payoffs_at_zero_p_equal_coherent_play():
    cfg = truel()
    exact = expected_payoffs(play(cfg, AIR_FIRST), cfg)
    assert dynamic_payoffs(cfg, profile_policies(AIR_FIRST), 0.0).values == pytest.approx(exact.values, abs=1e-12)


def test_dynamic_payoffs_at_full_p_are_classical():
    # duel, both always fire, a = 2/3, b = 1/2, three rounds: classical recurrence
    a, b = 2 / 3, 1 / 2
    cfg = duel(a, b, 3)
    prof = StrategyProfile(((FireAt(1),) * 3, (FireAt(0),) * 3))
    v = 0.5
    for _ in range(3):
        v = (1 - a) + a * b * v
    assert dynamic_payoffs(cfg, profile_policies(prof), 1.0)[0] == pytest.approx(v, abs=1e-12)
    assert v == pytest.approx(0.5)


def test_trajectory_p_zero_matches_measurement_statistics():
    cfg = truel()
    k = sample_outcomes(cfg, profile_policies(AIR_FIRST), 0.0, 60_000, seed=3)
    freq = np.bincount(k, minlength=8) / k.size
    probs = np.array([o.probability for o in measure_probabilities(play(cfg, AIR_FIRST))])
    se = np.sqrt(probs * (1 - probs) / k.size)
    assert np.all(np.abs(freq - probs) <= 4 * se + 1e-12)


def test_trajectory_p_one_duel_is_fair():
    cfg = duel(2 / 3, 1 / 2, 40)
    prof = StrategyProfile(((FireAt(1),) * 40, (FireAt(0),) * 40))
    est = estimate_payoffs_mc(cfg, profile_policies(prof), 1.0, 40_000, seed=5)
    assert abs(est[0] - 0.5) < 3 * est.stderr[0]


def test_run_trajectory_outcome_and_seed():
    cfg = truel()
    o1 = run_trajectory(cfg, profile_policies(AIR_FIRST), 0.4, seed=9)
    o2 = run_trajectory(cfg, profile_policies(AIR_FIRST), 0.4, seed=9)
    assert o1 == o2
    assert len(o1.bits) == 3 and 0 < o1.probability <= 1
    with pytest.raises(InvalidProbability):
        run_trajectory(cfg, profile_policies(AIR_FIRST), 1.2)


def test_policies_see_none_before_any_measurement():
    seen = []

    def alice(rnd, record):
        seen.append(record)
        return FireAt(1)

    cfg = duel(0.5, 0.5, 2)
    run_trajectory(cfg, [alice, lambda r, rec: FireAt(0)], 0.0, seed=1)
    assert seen == [None, None]


def test_mc_single_trial_and_determinism():
    cfg = truel()
    pols = profile_policies(AIR_FIRST)
    one = estimate_payoffs_mc(cfg, pols, 0.3, 1, seed=4)
    assert any(v in (0.0, 1 / 3, 0.5, 1.0) for v in one.values)
    a = estimate_payoffs_mc(cfg, pols, 0.3, 70_000, seed=4)
    b = estimate_payoffs_mc(cfg, pols, 0.3, 70_000, seed=4, threads=3)
    assert a == b


def test_mc_matches_exact_decoherent_payoffs():
    cfg = truel(2)
    mix = PolicyMixture(((0.5, tuple(profile_policies(AIR_FIRST))),
                         (0.5, tuple(profile_policies(StrategyProfile.parse(["C, B", "C, A", "A, B"]))))))
    exact = dynamic_payoffs(cfg, mix, 0.35)
    est = estimate_payoffs_mc(cfg, mix, 0.35, 50_000, seed=12)
    for j in range(3):
        assert abs(est[j] - exact[j]) <= 3 * est.stderr[j]


@settings(max_examples=25, deadline=None)
@given(p=st.floats(0, 1), a=st.floats(0, 0.99), b=st.floats(0, 0.99))
def test_dynamic_distribution_is_normalised(p, a, b):
    cfg = GameConfig.from_miss([a, b, 0.2], 2)
    pay = dynamic_payoffs(cfg, profile_policies(AIR_FIRST), p)
    assert pay.total() == pytest.approx(1, abs=1e-9)
