from __future__ import annotations

import numpy as np
import pytest

from qnuel.analysis.phases import (
    air_second_shot,
    duel_config,
    local_maxima,
    maximin_phases,
    mutual_fire,
    phase_axis,
    phase_landscape,
    repeated_duel_curve,
    second_shot_advantage_surface,
)
from qnuel.engine import GameConfig, StrategyProfile, play
from qnuel.errors import ConfigError, UnsupportedConfig

PI = np.pi


def printed_p10(a, b, a1, a2):
    return a * (1 - a) * (1 + b + 2 * np.sqrt(b) * np.cos(2 * a1 + a2))


def printed_p01(a, b, a1, a2):
    return (1 - b) * (
        a * b * (1 + a) + (1 - a) ** 2
        + 2 * a * b * np.sqrt(a) * np.cos(a1 + 2 * a2)
        - 2 * a * (1 - a) * np.sqrt(b) * np.cos(2 * a1 + a2)
        - 2 * (1 - a) * np.sqrt(a * b) * np.cos(a1 - a2)
    )


def duel_probs(a, b, a1, a2, prof):
    cfg = GameConfig.from_miss([a, b], 2, alphas=[a1, a2])
    return np.abs(play(cfg, prof).amplitudes) ** 2


def test_mutual_fire_interference_formulas():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a, b = rng.uniform(0, 1, 2)
        a1, a2 = rng.uniform(-PI, PI, 2)
        p = duel_probs(a, b, a1, a2, mutual_fire(2))
        assert p[0b10] == pytest.approx(printed_p10(a, b, a1, a2), abs=1e-9)
        assert p[0b01] == pytest.approx(printed_p01(a, b, a1, a2), abs=1e-9)
        assert p[0b00] == pytest.approx(0, abs=1e-15)


def test_air_second_shot_survival():
    rng = np.random.default_rng(12)
    for _ in range(50):
        a, b = rng.uniform(0, 1, 2)
        a1, a2 = rng.uniform(-PI, PI, 2)
        p = duel_probs(a, b, a1, a2, air_second_shot())
        assert p[0b10] == pytest.approx(1 - a, abs=1e-12)


def test_landscape_conjugation_symmetry_and_zero_sum():
    cfg = duel_config(2 / 3, 1 / 2, 2)
    land = phase_landscape(cfg, mutual_fire(2), 37)
    pa, pb = land.values["payoff_A"], land.values["payoff_B"]
    # the axis is symmetric, so reversing both indices negates both phases
    assert np.allclose(pa, pa[::-1, ::-1], atol=1e-12)
    assert np.allclose(pa + pb, 1.0, atol=1e-12)


def test_duel_payoffs_do_not_depend_on_beta():
    cfg = duel_config(0.4, 0.7, 3)
    ref = phase_landscape(cfg, mutual_fire(3), 13).values["payoff_A"]
    for b1 in np.linspace(-PI, PI, 5):
        for b2 in np.linspace(-PI, PI, 5):
            got = phase_landscape(cfg, mutual_fire(3), 13, betas=(b1, b2)).values["payoff_A"]
            assert np.allclose(got, ref, atol=1e-12)


def test_bob_maxima_positions():
    cfg = duel_config(2 / 3, 1 / 2, 2)
    land = phase_landscape(cfg, mutual_fire(2), 73)
    ax = land.axis("alpha1")
    pb = land.values["payoff_B"]
    top = {(round(ax[i] / PI, 3), round(ax[j] / PI, 3)) for i, j in local_maxima(pb)
           if pb[i, j] > pb.max() - 1e-9}
    expected = {(0.0, 1.0), (0.0, -1.0), (0.667, -0.333), (-0.667, 0.333)}
    assert top == expected


def test_alice_landscape_maximum_value():
    # the coarse-grid maximum is close to the continuous optimum
    cfg = duel_config(2 / 3, 1 / 2, 2)
    coarse = phase_landscape(cfg, mutual_fire(2), 73).values["payoff_A"].max()
    fine = phase_landscape(cfg, mutual_fire(2), 361).values["payoff_A"].max()
    assert fine >= coarse - 1e-12
    assert fine - coarse < 1e-3


def test_local_maxima_simple_cases():
    i, j = np.meshgrid(np.arange(7), np.arange(7), indexing="ij")
    v = -((i - 2) ** 2) - (j - 4) ** 2.0
    assert local_maxima(v, periodic=False) == [(2, 4)]
    w = -np.add.outer(np.arange(4.0), np.arange(4.0))
    assert local_maxima(w, periodic=False) == [(0, 0)]


def test_maximin_choice_is_stable_under_refinement():
    cfg = duel_config(2 / 3, 1 / 2, 2)
    r73 = maximin_phases(cfg, mutual_fire(2), 73)
    r145 = maximin_phases(cfg, mutual_fire(2), 145)
    assert r73.alpha1 == pytest.approx(r145.alpha1, abs=2 * PI / 72)
    assert r73.alpha2 == pytest.approx(r145.alpha2, abs=2 * PI / 72)
    assert sum(r73.payoffs) == pytest.approx(1.0, abs=1e-12)
    assert r73.security[0] <= r73.payoffs[0] + 1e-12
    assert r73.security[1] <= r73.payoffs[1] + 1e-12


def test_repeated_duel_curve():
    curve = repeated_duel_curve(2 / 3, 1 / 2, max_rounds=6, grid=13)
    assert curve.payoff[0] == pytest.approx(0.5, abs=1e-12)
    assert np.all(curve.lo <= curve.payoff + 1e-12)
    assert np.all(curve.payoff <= curve.hi + 1e-12)
    shifted = repeated_duel_curve(2 / 3, 1 / 2, (0.0, 0.0, 1.1, -2.0), max_rounds=6, grid=13)
    assert np.allclose(shifted.payoff, curve.payoff, atol=1e-12)
    with pytest.raises(ConfigError):
        repeated_duel_curve(0.5, 0.5, max_rounds=0)


def test_second_shot_surface_oracles():
    a = np.linspace(0, 1, 11)
    b = np.linspace(0, 1, 11)
    g = second_shot_advantage_surface(a, b)
    delta = g.values["delta"]
    # b = 1: Bob never hits, so only Alice's hit probabilities matter
    assert np.allclose(delta[:, -1], (1 - a) * (1 - 4 * a) / 2, atol=1e-12)
    A, Bm = np.meshgrid(a, b, indexing="ij")
    fire_both = 0.5 * (1 + printed_p10(A, Bm, 0, 0) - printed_p01(A, Bm, 0, 0))
    assert np.allclose(g.values["fire_both"], fire_both, atol=1e-12)
    # zero-phase air-second payoff from the hand-derived probabilities
    p01 = 2 * A * Bm * (1 - Bm) * 2
    assert np.allclose(g.values["air_second"], 0.5 * (1 + (1 - A) - p01), atol=1e-12)


def test_phase_studies_reject_non_duels():
    cfg = GameConfig.from_miss([0.5, 0.5, 0.5], 1)
    prof = StrategyProfile.parse(["B", "C", "A"])
    with pytest.raises(UnsupportedConfig):
        phase_landscape(cfg, prof, 5)
    with pytest.raises(ConfigError):
        phase_axis(1)
