"""Games, strategy profiles, coherent play and decoherent trajectories."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, InvalidPlayer, ProfileError, SelfTargetError, WeightError
from .operators import Marksmanship, Operator, PhaseParams, build_firing_op, fire_in_air, rotate
from .qstate import (
    BasisOutcome,
    DensityMatrix,
    StateVector,
    all_alive,
    alive_table,
    check_players,
    check_probability,
    index_to_bits,
    to_density,
)

# ---------------------------------------------------------------- actions


@dataclass(frozen=True)
class FireAt:
    target: int

    def __str__(self) -> str:
        return player_name(self.target)


@dataclass(frozen=True)
class FireInAir:
    def __str__(self) -> str:
        return "air"


AIR = FireInAir()
Action = Union[FireAt, FireInAir]


def action_key(action: Action) -> int:
    """Tie-break order: air first, then ascending target."""
    return -1 if isinstance(action, FireInAir) else action.target


def player_name(j: int) -> str:
    return chr(ord("A") + j) if j < 26 else f"P{j + 1}"


def parse_player(token: str, n: int) -> int:
    """Accept ``"B"`` or the 1-based ``"2"``."""
    token = token.strip()
    if token.isdigit():
        j = int(token) - 1
    elif len(token) == 1 and token.isalpha():
        j = ord(token.upper()) - ord("A")
    elif token.upper().startswith("P") and token[1:].isdigit():
        j = int(token[1:]) - 1
    else:
        raise InvalidPlayer(f"cannot parse player {token!r}")
    if not 0 <= j < n:
        raise InvalidPlayer(f"player {token!r} out of range for {n} players")
    return j


def parse_action(token: str, n: int) -> Action:
    if token.strip().lower() in ("air", "-", "none", "0"):
        return AIR
    return FireAt(parse_player(token, n))


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True)
class StrategyProfile:
    """Per player, the pre-committed action for every round."""

    actions: tuple[tuple[Action, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(tuple(a) for a in self.actions))

    @classmethod
    def parse(cls, rows: Sequence[str | Sequence[str]], n: int | None = None) -> StrategyProfile:
        """Build from strings such as ``["air, B", "C, A", "B, A"]``."""
        n = n or len(rows)
        out = []
        for row in rows:
            tokens = row.replace(";", ",").split(",") if isinstance(row, str) else row
            out.append(tuple(parse_action(t, n) for t in tokens if t.strip()))
        return cls(tuple(out))

    @property
    def n_players(self) -> int:
        return len(self.actions)

    @property
    def rounds(self) -> int:
        return len(self.actions[0]) if self.actions else 0

    def replace(self, player: int, actions: Sequence[Action]) -> StrategyProfile:
        rows = list(self.actions)
        rows[player] = tuple(actions)
        return StrategyProfile(tuple(rows))

    def __str__(self) -> str:
        return "; ".join(
            f"{player_name(j)}: " + ",".join(str(a) for a in row) for j, row in enumerate(self.actions)
        )


# ---------------------------------------------------------------- games


def default_utilities(n: int) -> tuple[float, ...]:
    """u_k = 1/k, so every outcome's payoffs sum to one."""
    return tuple(1.0 / k for k in range(1, n + 1))


@dataclass(frozen=True)
class GameConfig:
    """An n-player game.

    ``utilities[k - 1]`` is the payoff for surviving among ``k`` players.
    ``round_phases`` optionally overrides a player's phases in one round,
    keyed by ``(round, player)``.
    """

    n_players: int
    rounds: int
    marksmanship: tuple[Marksmanship, ...]
    phases: tuple[PhaseParams, ...] = ()
    firing_order: tuple[int, ...] = ()
    utilities: tuple[float, ...] = ()
    round_phases: Mapping[tuple[int, int], PhaseParams] = field(default_factory=dict)

    def __post_init__(self):
        n = check_players(self.n_players)
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ConfigError(f"rounds must be a positive integer, got {self.rounds}")
        if len(self.marksmanship) != n:
            raise ConfigError(f"need {n} marksmanship values, got {len(self.marksmanship)}")
        object.__setattr__(self, "marksmanship", tuple(self.marksmanship))
        phases = tuple(self.phases) or tuple(PhaseParams() for _ in range(n))
        if len(phases) != n:
            raise ConfigError(f"need {n} phase pairs, got {len(phases)}")
        object.__setattr__(self, "phases", phases)
        order = tuple(self.firing_order) or tuple(range(n))
        if sorted(order) != list(range(n)):
            raise ConfigError(f"firing order {order} is not a permutation of the players")
        object.__setattr__(self, "firing_order", order)
        u = tuple(float(x) for x in (self.utilities or default_utilities(n)))
        if len(u) != n:
            raise ConfigError(f"need {n} utilities u_1..u_n, got {len(u)}")
        if u[0] != 1.0 or u[-1] <= 0 or any(u[k + 1] > u[k] for k in range(n - 1)):
            raise ConfigError(f"utilities must satisfy 0 < u_n <= ... <= u_1 = 1, got {u}")
        object.__setattr__(self, "utilities", u)
        for (r, j) in self.round_phases:
            if not (0 <= r < self.rounds and 0 <= j < n):
                raise ConfigError(f"round_phases key {(r, j)} out of range")

    @classmethod
    def from_miss(
        cls,
        misses: Sequence[float],
        rounds: int = 1,
        alphas: Sequence[float] | None = None,
        betas: Sequence[float] | None = None,
        **kw,
    ) -> GameConfig:
        """Convenience constructor from miss probabilities a, b, c, ..."""
        n = len(misses)
        alphas = alphas or [0.0] * n
        betas = betas or [0.0] * n
        return cls(
            n,
            rounds,
            tuple(Marksmanship.from_miss(a) for a in misses),
            tuple(PhaseParams(x, y) for x, y in zip(alphas, betas)),
            **kw,
        )

    def phase(self, rnd: int, player: int) -> PhaseParams:
        return self.round_phases.get((rnd, player), self.phases[player])

    def with_rounds(self, rounds: int) -> GameConfig:
        return GameConfig(
            self.n_players, rounds, self.marksmanship, self.phases, self.firing_order, self.utilities,
            {k: v for k, v in self.round_phases.items() if k[0] < rounds},
        )

    def move_sequence(self) -> list[tuple[int, int]]:
        """``(round, player)`` for every move, in play order."""
        return [(r, j) for r in range(self.rounds) for j in self.firing_order]


def check_action(action: Action, player: int, n: int) -> None:
    if isinstance(action, FireAt):
        if not 0 <= action.target < n:
            raise ProfileError(f"{player_name(player)} targets nonexistent player {action.target}")
        if action.target == player:
            raise ProfileError(f"{player_name(player)} cannot target themselves")
    elif not isinstance(action, FireInAir):
        raise ProfileError(f"not an action: {action!r}")


def check_profile(cfg: GameConfig, prof: StrategyProfile) -> None:
    if prof.n_players != cfg.n_players:
        raise ProfileError(f"profile has {prof.n_players} players, game has {cfg.n_players}")
    for j, row in enumerate(prof.actions):
        if len(row) != cfg.rounds:
            raise ProfileError(f"{player_name(j)} lists {len(row)} actions for {cfg.rounds} rounds")
        for action in row:
            check_action(action, j, cfg.n_players)


def operator_for(cfg: GameConfig, rnd: int, player: int, action: Action) -> Operator:
    if isinstance(action, FireInAir):
        return fire_in_air(cfg.n_players)
    try:
        return build_firing_op(
            cfg.n_players, player, action.target, cfg.marksmanship[player], cfg.phase(rnd, player)
        )
    except SelfTargetError as exc:
        raise ProfileError(str(exc)) from exc


# ---------------------------------------------------------------- batched kernel


@dataclass
class ParamArrays:
    """Marksmanship and phases as arrays of shape ``(n, *batch)``.

    Lets sweeps evolve a whole parameter grid at once. ``overrides`` maps
    ``(round, player)`` to replacement ``(alpha, beta)`` arrays.
    """

    c: NDArray
    s: NDArray
    alpha: NDArray
    beta: NDArray
    overrides: dict = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: GameConfig) -> ParamArrays:
        th = np.array([m.theta for m in cfg.marksmanship])
        return cls(
            np.cos(th / 2),
            np.sin(th / 2),
            np.array([p.alpha for p in cfg.phases]),
            np.array([p.beta for p in cfg.phases]),
            {k: (v.alpha, v.beta) for k, v in cfg.round_phases.items()},
        )

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return np.broadcast_shapes(self.c.shape[1:], self.alpha.shape[1:])

    def fire(self, amps: NDArray, n: int, rnd: int, player: int, action: Action) -> NDArray:
        if isinstance(action, FireInAir):
            return amps
        alpha, beta = self.overrides.get((rnd, player), (self.alpha[player], self.beta[player]))
        return rotate(amps, n, player, action.target, self.c[player], self.s[player], alpha, beta)


def initial_amplitudes(n: int, batch_shape: tuple[int, ...] = ()) -> NDArray:
    amps = np.zeros(batch_shape + (2**n,), dtype=np.complex128)
    amps[..., -1] = 1.0
    return amps


def evolve(
    n: int,
    params: ParamArrays,
    moves: Sequence[tuple[int, int]],
    actions: Sequence[Sequence[Action]],
    amps: NDArray | None = None,
) -> NDArray:
    """Coherent evolution of (possibly batched) amplitudes through ``moves``."""
    if amps is None:
        amps = initial_amplitudes(n, params.batch_shape)
    for rnd, j in moves:
        amps = params.fire(amps, n, rnd, j, actions[j][rnd])
    return amps


@dataclass(frozen=True)
class Payoffs:
    values: tuple[float, ...]
    stderr: tuple[float, ...] | None = None

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, j):
        return self.values[j]

    def __len__(self) -> int:
        return len(self.values)

    def total(self) -> float:
        return math.fsum(self.values)

    def as_array(self) -> NDArray[np.float64]:
        return np.array(self.values)


def payoff_matrix(n: int, utilities: Sequence[float]) -> NDArray[np.float64]:
    """W[k, j] = payoff to player j when basis outcome k is measured."""
    table = alive_table(n).astype(np.float64)
    count = table.sum(axis=1).astype(int)
    u = np.concatenate([[0.0], np.asarray(utilities, dtype=np.float64)])
    return table * u[count][:, None]


# ---------------------------------------------------------------- coherent play


def play(cfg: GameConfig, prof: StrategyProfile, initial: StateVector | None = None) -> StateVector:
    """Apply every pre-committed move, round by round, in firing order."""
    check_profile(cfg, prof)
    start = all_alive(cfg.n_players) if initial is None else initial
    if start.n_players != cfg.n_players:
        raise ProfileError("initial state has the wrong number of players")
    amps = evolve(cfg.n_players, ParamArrays.from_config(cfg), cfg.move_sequence(), prof.actions,
                  np.array(start.amplitudes))
    return StateVector(cfg.n_players, amps)


def expected_payoffs(s: StateVector | DensityMatrix, cfg: GameConfig) -> Payoffs:
    probs = s.probabilities()
    w = payoff_matrix(cfg.n_players, cfg.utilities)
    return Payoffs(tuple(float(x) for x in probs @ w))


def play_mixture(cfg: GameConfig, profiles: Sequence[tuple[float, StrategyProfile]]) -> DensityMatrix:
    """Density matrix of a game whose profile is drawn at random beforehand."""
    weights = np.array([w for w, _ in profiles], dtype=np.float64)
    if len(weights) == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise WeightError(f"mixture weights must be nonnegative and sum to 1, got {weights.tolist()}")
    d = 2**cfg.n_players
    rho = np.zeros((d, d), dtype=np.complex128)
    for w, prof in profiles:
        rho += w * to_density(play(cfg, prof)).entries
    return DensityMatrix(cfg.n_players, rho)


# ---------------------------------------------------------------- dynamic play

Record = Union[tuple[int, ...], None]
Policy = Callable[[int, Record], Action]


def profile_policy(actions: Sequence[Action]) -> Policy:
    """A policy that ignores all measurement records."""
    actions = tuple(actions)

    def policy(rnd: int, record: Record) -> Action:
        return actions[rnd]

    return policy


def profile_policies(prof: StrategyProfile) -> list[Policy]:
    return [profile_policy(row) for row in prof.actions]


@dataclass(frozen=True)
class PolicyMixture:
    """Policy sets drawn at random (once, before play) with given weights."""

    components: tuple[tuple[float, tuple[Policy, ...]], ...]

    def __post_init__(self):
        comps = tuple((float(w), tuple(p)) for w, p in self.components)
        weights = np.array([w for w, _ in comps])
        if len(comps) == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise WeightError(f"mixture weights must be nonnegative and sum to 1, got {weights.tolist()}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def wrap(cls, pol: Sequence[Policy] | PolicyMixture) -> PolicyMixture:
        return pol if isinstance(pol, PolicyMixture) else cls(((1.0, tuple(pol)),))


def _resolve(pols: Sequence[Policy], rnd: int, player: int, record: Record, n: int) -> Action:
    action = pols[player](rnd, record)
    check_action(action, player, n)
    return action


def _sample(probs: NDArray, rng: np.random.Generator) -> NDArray[np.intp]:
    cum = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    return np.minimum((cum < u[:, None]).sum(axis=1), probs.shape[1] - 1)


def _trajectory_batch(
    cfg: GameConfig, mix: PolicyMixture, p: float, trials: int, rng: np.random.Generator
) -> tuple[NDArray[np.intp], NDArray[np.float64]]:
    n, d = cfg.n_players, 2**cfg.n_players
    params = ParamArrays.from_config(cfg)
    weights = np.array([w for w, _ in mix.components])
    comp = rng.choice(len(weights), size=trials, p=weights) if len(weights) > 1 else np.zeros(trials, int)
    amps = initial_amplitudes(n, (trials,))
    record = np.full(trials, -1)
    for rnd, j in cfg.move_sequence():
        keys = comp * (d + 1) + record + 1
        for key in np.unique(keys):
            ci, ri = divmod(int(key), d + 1)
            rec = None if ri == 0 else index_to_bits(ri - 1, n)
            action = _resolve(mix.components[ci][1], rnd, j, rec, n)
            if isinstance(action, FireInAir):
                continue
            sel = keys == key
            amps[sel] = params.fire(amps[sel], n, rnd, j, action)
        if p > 0.0:
            hit = rng.random(trials) < p
            if hit.any():
                k = _sample(np.abs(amps[hit]) ** 2, rng)
                collapsed = np.zeros((k.size, d), dtype=np.complex128)
                collapsed[np.arange(k.size), k] = 1.0
                amps[hit] = collapsed
                record[hit] = k
    probs = np.abs(amps) ** 2
    k = _sample(probs, rng)
    return k, probs[np.arange(trials), k] / probs.sum(axis=1)


def run_trajectory(
    cfg: GameConfig, pol: Sequence[Policy] | PolicyMixture, p: float, seed: int | None = None
) -> BasisOutcome:
    """One realisation of a game under per-move partial decoherence.

    After each move the whole system is measured with probability ``p`` and
    the result becomes public; policies see the latest result (``None``
    before any measurement). ``probability`` on the returned outcome is the
    Born probability of the terminal measurement.
    """
    p = check_probability(p)
    k, prob = _trajectory_batch(cfg, PolicyMixture.wrap(pol), p, 1, np.random.default_rng(seed))
    return BasisOutcome(index_to_bits(int(k[0]), cfg.n_players), float(prob[0]))


MC_CHUNK = 1 << 16


def sample_outcomes(
    cfg: GameConfig,
    pol: Sequence[Policy] | PolicyMixture,
    p: float,
    trials: int,
    seed: int | None = 0,
    threads: int = 1,
) -> NDArray[np.intp]:
    """Terminal basis indices of ``trials`` trajectories.

    Trials are split into fixed-size chunks, each with its own child seed,
    so results do not depend on ``threads``.
    """
    p = check_probability(p)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    mix = PolicyMixture.wrap(pol)
    sizes = [MC_CHUNK] * (trials // MC_CHUNK) + ([trials % MC_CHUNK] if trials % MC_CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(i: int) -> NDArray:
        return _trajectory_batch(cfg, mix, p, sizes[i], np.random.default_rng(seeds[i]))[0]

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(i) for i in range(len(sizes))]
    return np.concatenate(parts)


def estimate_payoffs_mc(
    cfg: GameConfig,
    pol: Sequence[Policy] | PolicyMixture,
    p: float,
    trials: int,
    seed: int | None = 0,
    threads: int = 1,
) -> Payoffs:
    """Monte Carlo payoff means with their standard errors."""
    k = sample_outcomes(cfg, pol, p, trials, seed, threads)
    samples = payoff_matrix(cfg.n_players, cfg.utilities)[k]
    mean = samples.mean(axis=0)
    if trials > 1:
        se = samples.std(axis=0, ddof=1) / math.sqrt(trials)
    else:
        se = np.zeros(cfg.n_players)
    return Payoffs(tuple(float(x) for x in mean), tuple(float(x) for x in se))


def dynamic_distribution(
    n: int,
    params: ParamArrays,
    moves: Sequence[tuple[int, int]],
    mix: PolicyMixture,
    p: float,
) -> NDArray[np.float64]:
    """Exact terminal outcome distribution under per-move decoherence.

    Enumerates every measurement history. Branches that collapsed onto the
    same basis state at the same time are merged, so the branch count grows
    only linearly in the number of moves. Batched over ``params``.
    """
    d = 2**n
    batch = params.batch_shape
    total = np.zeros(batch + (d,))
    for weight, pols in mix.components:
        # (record index or -1, branch weight, amplitudes)
        branches = [(-1, np.ones(batch), initial_amplitudes(n, batch))]
        for rnd, j in moves:
            collapsed = np.zeros(batch + (d,))
            nxt = []
            for rec, w, amps in branches:
                record = None if rec < 0 else index_to_bits(rec, n)
                amps = params.fire(amps, n, rnd, j, _resolve(pols, rnd, j, record, n))
                if p < 1.0:
                    nxt.append((rec, w * (1.0 - p), amps))
                if p > 0.0:
                    collapsed += (w * p)[..., None] * np.abs(amps) ** 2
            for k in range(d):
                wk = collapsed[..., k]
                if np.any(wk > 0):
                    basis = np.zeros(batch + (d,), dtype=np.complex128)
                    basis[..., k] = 1.0
                    nxt.append((k, wk, basis))
            branches = nxt
        for _, w, amps in branches:
            total += weight * w[..., None] * np.abs(amps) ** 2
    return total


def grouped_outcome_counts(
    n: int,
    params: ParamArrays,
    moves: Sequence[tuple[int, int]],
    mix: PolicyMixture,
    p: float,
    trials: int,
    rng: np.random.Generator,
) -> NDArray[np.int64]:
    """Terminal outcome counts of ``trials`` sampled trajectories per cell.

    Trajectories sharing a measurement history have identical states, so
    they are sampled together: each move measures a binomial share of a
    group and splits it multinomially over basis states. The result has
    the same law as running the trajectories one by one, at a cost that
    does not grow with ``trials``. Shape ``(*batch, 2**n)``.
    """
    p = check_probability(p)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    d = 2**n
    batch = params.batch_shape
    weights = np.array([w for w, _ in mix.components])
    comp = rng.multinomial(trials, weights, size=batch)
    total = np.zeros(batch + (d,), dtype=np.int64)
    for ci, (_, pols) in enumerate(mix.components):
        groups = [(-1, comp[..., ci], initial_amplitudes(n, batch))]
        for rnd, j in moves:
            measured = np.zeros(batch + (d,), dtype=np.int64)
            nxt = []
            for rec, count, amps in groups:
                record = None if rec < 0 else index_to_bits(rec, n)
                amps = params.fire(amps, n, rnd, j, _resolve(pols, rnd, j, record, n))
                hit = rng.binomial(count, p) if p > 0.0 else np.zeros_like(count)
                if p < 1.0 and np.any(count > hit):
                    nxt.append((rec, count - hit, amps))
                if np.any(hit):
                    measured += rng.multinomial(hit, _normalised(amps))
            for k in range(d):
                if np.any(measured[..., k]):
                    basis = np.zeros(batch + (d,), dtype=np.complex128)
                    basis[..., k] = 1.0
                    nxt.append((k, measured[..., k], basis))
            groups = nxt
        for _, count, amps in groups:
            total += rng.multinomial(count, _normalised(amps))
    return total


def _normalised(amps: NDArray) -> NDArray[np.float64]:
    probs = np.abs(amps) ** 2
    return probs / probs.sum(axis=-1, keepdims=True)


def counts_to_payoffs(counts: NDArray, utilities: Sequence[float]) -> tuple[NDArray, NDArray]:
    """Sample mean and standard error of each player's payoff, ``(..., n)``."""
    n = len(utilities)
    w = payoff_matrix(n, utilities)
    trials = counts.sum(axis=-1, keepdims=True)
    mean = counts @ w / trials
    second = counts @ (w**2) / trials
    var = np.maximum(second - mean**2, 0.0) * trials / np.maximum(trials - 1, 1)
    return mean, np.sqrt(var / trials)


def dynamic_payoffs(cfg: GameConfig, pol: Sequence[Policy] | PolicyMixture, p: float) -> Payoffs:
    """Exact expected payoffs of the decoherent game (no sampling)."""
    p = check_probability(p)
    dist = dynamic_distribution(
        cfg.n_players, ParamArrays.from_config(cfg), cfg.move_sequence(), PolicyMixture.wrap(pol), p
    )
    return Payoffs(tuple(float(x) for x in dist @ payoff_matrix(cfg.n_players, cfg.utilities)))


def as_fraction(x: float, max_den: int = 100000, tol: float = 1e-12) -> Fraction | None:
    """Small-denominator rational equal to ``x`` within ``tol``, if any."""
    f = Fraction(x).limit_denominator(max_den)
    return f if abs(float(f) - x) <= tol else None
