"""Phase-parameter studies of the two-player duel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..engine import (
    AIR,
    FireAt,
    GameConfig,
    ParamArrays,
    StrategyProfile,
    check_profile,
    evolve,
    payoff_matrix,
)
from ..errors import ConfigError, UnsupportedConfig
from ..operators import Marksmanship
from .grids import SweepGrid

PHASE_POINTS = 73
TIE_EPS = 1e-9


def phase_axis(points: int = PHASE_POINTS) -> NDArray:
    if points < 2:
        raise ConfigError("phase grid needs at least 2 points")
    return np.linspace(-np.pi, np.pi, points)


def _duel_payoffs(cfg: GameConfig, prof: StrategyProfile, alpha1, alpha2, beta1=None, beta2=None) -> NDArray:
    """Payoffs (..., 2) of ``prof`` for broadcast arrays of phases."""
    if cfg.n_players != 2:
        raise UnsupportedConfig("phase studies are defined for duels only")
    check_profile(cfg, prof)
    base = ParamArrays.from_config(cfg)
    b1 = base.beta[0] if beta1 is None else beta1
    b2 = base.beta[1] if beta2 is None else beta2
    alpha1, alpha2, b1, b2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (alpha1, alpha2, b1, b2)))
    shape = alpha1.shape
    params = ParamArrays(
        base.c.reshape((2,) + (1,) * len(shape)),
        base.s.reshape((2,) + (1,) * len(shape)),
        np.stack([alpha1, alpha2]),
        np.stack([b1, b2]),
    )
    amps = evolve(2, params, cfg.move_sequence(), prof.actions)
    return (np.abs(amps) ** 2) @ payoff_matrix(2, cfg.utilities)


def mutual_fire(rounds: int) -> StrategyProfile:
    return StrategyProfile(((FireAt(1),) * rounds, (FireAt(0),) * rounds))


def air_second_shot() -> StrategyProfile:
    """Alice fires, then abstains; Bob fires both times."""
    return StrategyProfile(((FireAt(1), AIR), (FireAt(0), FireAt(0))))


def duel_config(a: float, b: float, rounds: int, **kw) -> GameConfig:
    return GameConfig(2, rounds, (Marksmanship.from_miss(a), Marksmanship.from_miss(b)), **kw)


def phase_landscape(
    cfg: GameConfig,
    prof: StrategyProfile,
    grid: int | NDArray = PHASE_POINTS,
    betas: tuple[float, float] | None = None,
) -> SweepGrid:
    """Both players' expected payoffs over an (alpha1, alpha2) grid."""
    axis = phase_axis(grid) if np.isscalar(grid) else np.asarray(grid, dtype=float)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    b1, b2 = betas if betas is not None else (None, None)
    pay = _duel_payoffs(cfg, prof, x, y, b1, b2)
    return SweepGrid(
        [("alpha1", axis), ("alpha2", axis)],
        {"payoff_A": pay[..., 0], "payoff_B": pay[..., 1]},
        {"kind": "phase_landscape", "profile": str(prof)},
    )


def local_maxima(values: NDArray, periodic: bool = True, eps: float = 1e-12) -> list[tuple[int, ...]]:
    """Grid cells no smaller than any of their 8 neighbours.

    On a periodic [-pi, pi] axis the first and last points coincide, so the
    neighbour lookup skips the duplicated endpoint.
    """
    v = np.asarray(values, dtype=float)
    out = []
    for idx in np.ndindex(*v.shape):
        ok = True
        for off in np.ndindex(*(3,) * v.ndim):
            delta = [o - 1 for o in off]
            if not any(delta):
                continue
            nb = []
            for k, (i, dk) in enumerate(zip(idx, delta)):
                size = v.shape[k]
                j = i + dk
                if periodic:
                    j %= size - 1
                elif not 0 <= j < size:
                    break
                nb.append(j)
            else:
                if v[tuple(nb)] > v[idx] + eps:
                    ok = False
                    break
        if ok:
            out.append(idx)
    return out


@dataclass(frozen=True)
class MaximinResult:
    alpha1: float
    alpha2: float
    payoffs: tuple[float, float]
    security: tuple[float, float]
    balanced: bool


def _pick(axis: NDArray, scores: NDArray, eps: float) -> int:
    # ties: smallest |alpha|, then the nonnegative one
    best = scores.max()
    cands = np.nonzero(scores >= best - eps)[0]
    return int(min(cands, key=lambda i: (round(abs(axis[i]), 12), axis[i] < 0)))


def maximin_phases(
    cfg: GameConfig,
    prof: StrategyProfile,
    grid: int | NDArray = PHASE_POINTS,
    eps: float = TIE_EPS,
    balance_tol: float = 1e-9,
) -> MaximinResult:
    """Each player's security-level phase choice on a grid.

    Alice picks alpha1 maximising her minimum over alpha2, Bob picks alpha2
    likewise. Ties among grid points go to the smallest |alpha|.
    """
    land = phase_landscape(cfg, prof, grid)
    axis = land.axis("alpha1")
    pa, pb = land.values["payoff_A"], land.values["payoff_B"]
    sec_a = pa.min(axis=1)
    sec_b = pb.min(axis=0)
    i, j = _pick(axis, sec_a, eps), _pick(axis, sec_b, eps)
    payoffs = (float(pa[i, j]), float(pb[i, j]))
    return MaximinResult(
        float(axis[i]), float(axis[j]), payoffs, (float(sec_a[i]), float(sec_b[j])),
        abs(payoffs[0] - payoffs[1]) <= balance_tol,
    )


@dataclass(frozen=True)
class RepeatedDuelCurve:
    rounds: NDArray
    payoff: NDArray
    lo: NDArray
    hi: NDArray


def repeated_duel_curve(
    a: float,
    b: float,
    phases: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0),
    max_rounds: int = 10,
    grid: int = 37,
) -> RepeatedDuelCurve:
    """Alice's payoff after m rounds of mutual fire, m = 1..max_rounds.

    ``phases`` is (alpha1, alpha2, beta1, beta2) for the main curve; the
    envelope spans an (alpha1, alpha2) grid at the same betas.
    """
    if max_rounds < 1:
        raise ConfigError("max_rounds must be >= 1")
    a1, a2, b1, b2 = phases
    axis = phase_axis(grid)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    ms = np.arange(1, max_rounds + 1)
    payoff, lo, hi = [], [], []
    for m in ms:
        cfg = duel_config(a, b, int(m))
        prof = mutual_fire(int(m))
        payoff.append(_duel_payoffs(cfg, prof, a1, a2, b1, b2)[..., 0])
        env = _duel_payoffs(cfg, prof, x, y, b1, b2)[..., 0]
        lo.append(min(env.min(), payoff[-1]))
        hi.append(max(env.max(), payoff[-1]))
    return RepeatedDuelCurve(ms, np.array(payoff, dtype=float), np.array(lo), np.array(hi))


def second_shot_advantage_surface(a_values: NDArray, b_values: NDArray) -> SweepGrid:
    """Gain to Alice from abstaining on her second shot (alphas zero).

    Positive cells mean firing into the air on the second shot pays more
    than firing both times.
    """
    a, b = np.meshgrid(np.asarray(a_values, float), np.asarray(b_values, float), indexing="ij")
    c = np.stack([np.sqrt(a), np.sqrt(b)])
    s = np.stack([np.sqrt(1 - a), np.sqrt(1 - b)])
    params = ParamArrays(c, s, np.zeros_like(c), np.zeros_like(c))
    w = payoff_matrix(2, (1.0, 0.5))
    moves = [(0, 0), (0, 1), (1, 0), (1, 1)]
    both = (np.abs(evolve(2, params, moves, mutual_fire(2).actions)) ** 2) @ w
    skip = (np.abs(evolve(2, params, moves, air_second_shot().actions)) ** 2) @ w
    return SweepGrid(
        [("a", a_values), ("b", b_values)],
        {"delta": skip[..., 0] - both[..., 0], "fire_both": both[..., 0], "air_second": skip[..., 0]},
        {"kind": "second_shot_advantage"},
    )
