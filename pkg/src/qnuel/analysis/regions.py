"""Strategy-region maps over Alice's and Bob's miss probabilities (a, b).

Charles is a perfect shot (c = 0) and all phases are zero. Each scenario
hard-codes the opponents' reasoning and lists the options of the deciding
player(s); a map labels every (a, b) cell with the option that maximises
the decider's expected payoff.

Policies read the public measurement record. In the coherent game the
record is always ``None`` and they fall back to their pre-committed
targets; in the classical game every move is observed. An option token
``*`` means "whoever the record shows is left".
"""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..classical import tree_distribution
from ..engine import (
    AIR,
    Action,
    FireAt,
    ParamArrays,
    Policy,
    PolicyMixture,
    Record,
    counts_to_payoffs,
    dynamic_distribution,
    grouped_outcome_counts,
    payoff_matrix,
)
from ..errors import ConfigError
from ..qstate import check_probability
from .grids import SweepGrid

A, B, C = 0, 1, 2
TIE_EPS = 1e-9
RESOLUTION = 201
MC_CELLS_PER_CHUNK = 64
SCENARIOS = ("one-shot", "two-shot-a>b", "two-shot-b>a")
REGIMES = ("quantum", "classical", "decoherent")


def unit_axis(points: int = RESOLUTION) -> NDArray:
    """``points`` evenly spaced values covering [0, 1)."""
    if points < 2:
        raise ConfigError("resolution must be >= 2")
    return np.arange(points) / points


def _alive(record: Record, j: int) -> bool:
    # no measurement yet: everyone is presumed alive
    return record is None or bool(record[j])


def targeting(*preferences: Sequence[int]) -> Policy:
    """Fire, in round r, at the first player of ``preferences[r]`` not known dead."""

    def policy(rnd: int, record: Record) -> Action:
        for j in preferences[rnd]:
            if _alive(record, j):
                return FireAt(j)
        return AIR

    return policy


def alice_policy(first: Action, second: int) -> Policy:
    """``first`` in round one; then the lone surviving opponent if the record
    shows one, otherwise ``second``."""

    def policy(rnd: int, record: Record) -> Action:
        if rnd == 0:
            return first
        if record is not None:
            left = [j for j in (B, C) if record[j]]
            if len(left) == 1:
                return FireAt(left[0])
            if not left:
                return AIR
        return FireAt(second)

    return policy


def _first(token: str) -> Action:
    return AIR if token == "air" else FireAt(C)


def _one_shot(choice: Sequence[str]) -> PolicyMixture:
    alice = alice_policy(_first(choice[0]), B)
    bob = targeting([C, A])
    # Charles is indifferent between A and B: fair coin before play
    comps = [(0.5, (alice, bob, targeting(pref))) for pref in ([A, B], [B, A])]
    return PolicyMixture(tuple(comps))


def _two_shot_ab(choice: Sequence[str]) -> PolicyMixture:
    alice = alice_policy(_first(choice[0]), C if choice[1] == "C" else B)
    bob = targeting([C, A], [A, C])
    charles = targeting([B, A], [A, B])
    return PolicyMixture(((1.0, (alice, bob, charles)),))


def _two_shot_ba(choice: Sequence[str]) -> PolicyMixture:
    alice = alice_policy(_first(choice[0]), B)
    bob = targeting([C, A], [C, A] if choice[1] == "C" else [A, C])
    charles = targeting([A, B], [B, A])
    return PolicyMixture(((1.0, (alice, bob, charles)),))


_BUILDERS = {"one-shot": _one_shot, "two-shot-a>b": _two_shot_ab, "two-shot-b>a": _two_shot_ba}


@dataclass(frozen=True)
class Scenario:
    """Fixed opponent logic plus the deciders' option lists.

    ``options[k]`` lists decider k's choices in tie-break order (air
    first). ``classical`` is used instead when full information already
    settles the later choices.
    """

    name: str
    rounds: int
    deciders: tuple[int, ...]
    options: tuple[tuple[str, ...], ...]
    classical: tuple[tuple[str, ...], ...]
    regions: dict[tuple[str, ...], str]

    def build(self, choice: Sequence[str]) -> PolicyMixture:
        return _BUILDERS[self.name](",".join(choice).split(","))

    def in_domain(self, a: NDArray, b: NDArray) -> NDArray:
        if self.name == "two-shot-a>b":
            return a > b
        if self.name == "two-shot-b>a":
            return b > a
        return np.ones(np.shape(a), dtype=bool)


SCENARIO_TABLE: dict[str, Scenario] = {
    "one-shot": Scenario("one-shot", 1, (A,), (("air", "C"),), (("air", "C"),), {}),
    "two-shot-a>b": Scenario(
        "two-shot-a>b", 2, (A,),
        (("air,B", "air,C", "C,B", "C,C"),),
        (("air,*", "C,*"),),
        {("air,B",): "I", ("C,C",): "II", ("C,B",): "III", ("air,C",): "IV"},
    ),
    "two-shot-b>a": Scenario(
        "two-shot-b>a", 2, (A, B),
        (("air", "C"), ("A", "C")),
        (("air", "C"), ("*",)),
        {("air", "C"): "V", ("C", "A"): "VI", ("C", "C"): "VII"},
    ),
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIO_TABLE[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None


def _check_regime(regime: str, p: float | None) -> float:
    if regime == "quantum":
        return 0.0
    if regime == "classical":
        return 1.0
    if regime == "decoherent":
        if p is None:
            raise ConfigError("the decoherent regime needs a probability p")
        return check_probability(p)
    raise ConfigError(f"unknown regime {regime!r}; choose from {', '.join(REGIMES)}")


def _moves(rounds: int) -> list[tuple[int, int]]:
    return [(r, j) for r in range(rounds) for j in (A, B, C)]


def grid_params(a: NDArray, b: NDArray) -> ParamArrays:
    """Batched parameters for miss probabilities a, b and a perfect Charles."""
    c = np.stack([np.sqrt(a), np.sqrt(b), np.zeros_like(a)])
    s = np.stack([np.sqrt(1 - a), np.sqrt(1 - b), np.ones_like(a)])
    zero = np.zeros_like(c)
    return ParamArrays(c, s, zero, zero)


def _exact(a, b, rounds, mix, regime, p, w):
    if regime == "classical":
        hits = np.stack([1 - a, 1 - b, np.ones_like(a)])
        dist = tree_distribution(3, hits, _moves(rounds), mix, "full")
    else:
        dist = dynamic_distribution(3, grid_params(a, b), _moves(rounds), mix, p)
    return dist @ w, np.zeros(a.shape + (3,))


def _sampled(a, b, rounds, mix, p, utilities, trials, seed, threads):
    """Grouped trajectory sampling, chunked over cells with one child seed
    per chunk so the result does not depend on ``threads``."""
    flat_a, flat_b = a.ravel(), b.ravel()
    starts = list(range(0, flat_a.size, MC_CELLS_PER_CHUNK))
    seeds = np.random.SeedSequence(seed).spawn(len(starts))

    def work(i):
        sl = slice(starts[i], starts[i] + MC_CELLS_PER_CHUNK)
        counts = grouped_outcome_counts(
            3, grid_params(flat_a[sl], flat_b[sl]), _moves(rounds), mix, p, trials,
            np.random.default_rng(seeds[i]),
        )
        return counts_to_payoffs(counts, utilities)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, range(len(starts))))
    else:
        parts = [work(i) for i in range(len(starts))]
    mean = np.concatenate([m for m, _ in parts]).reshape(a.shape + (3,))
    se = np.concatenate([s for _, s in parts]).reshape(a.shape + (3,))
    return mean, se


def _best(values: Sequence[NDArray], eps: float) -> NDArray:
    """Index of the best option per cell; ties go to the earliest option."""
    stack = np.stack(values)
    return np.argmax(stack >= stack.max(axis=0) - eps, axis=0)


def strategy_region_map(
    scenario: str,
    regime: str = "quantum",
    a_values: NDArray | None = None,
    b_values: NDArray | None = None,
    p: float | None = None,
    method: str = "exact",
    trials: int = 100_000,
    seed: int | None = 0,
    threads: int = 1,
    eps: float = TIE_EPS,
    utilities: Sequence[float] = (1.0, 0.5, 1.0 / 3.0),
) -> SweepGrid:
    """Label every (a, b) cell with the payoff-maximising option.

    ``regime`` is ``"quantum"`` (coherent play), ``"classical"`` (players
    observe every outcome) or ``"decoherent"`` (the system is measured
    with probability ``p`` after each move and results are public).
    ``method="mc"`` samples ``trials`` trajectories per cell instead of
    evaluating exactly; it needs the quantum or decoherent regime.

    Columns: ``label`` (the chosen option, ``"-"`` outside the scenario's
    domain), ``region`` (named region where the scenario has names), then
    the deciders' payoffs per option and, when sampling, their standard
    errors.

    With two deciders (Alice in round one, Bob in round two) the label is
    the unique pure equilibrium of the 2x2 game when there is one;
    otherwise Alice leads, anticipating Bob's best reply.
    """
    scen = get_scenario(scenario)
    p = _check_regime(regime, p)
    if method not in ("exact", "mc"):
        raise ConfigError(f"unknown method {method!r}; choose exact or mc")
    if method == "mc" and regime == "classical":
        raise ConfigError("sampled classical maps: use the decoherent regime with p=1")
    a_values = unit_axis() if a_values is None else np.asarray(a_values, dtype=float)
    b_values = unit_axis() if b_values is None else np.asarray(b_values, dtype=float)
    a, b = np.meshgrid(a_values, b_values, indexing="ij")
    w = payoff_matrix(3, utilities)
    opts = scen.classical if regime == "classical" else scen.options

    def evaluate(choice: tuple[str, ...]):
        mix = scen.build(choice)
        if method == "mc":
            return _sampled(a, b, scen.rounds, mix, p, utilities, trials, seed, threads)
        return _exact(a, b, scen.rounds, mix, regime, p, w)

    columns: dict[str, NDArray] = {}
    if len(scen.deciders) == 1:
        pay = []
        for o in opts[0]:
            mean, se = evaluate((o,))
            pay.append(mean[..., A])
            columns[f"payoff[{o}]"] = mean[..., A]
            if method == "mc":
                columns[f"stderr[{o}]"] = se[..., A]
        keys = [(opts[0][i],) for i in _best(pay, eps).ravel()]
    else:
        keys = _two_deciders(opts, evaluate, columns, eps, method, a.shape)

    label = np.array([",".join(k) for k in keys], dtype=object).reshape(a.shape)
    names = {} if regime == "classical" else scen.regions
    region = np.array([names.get(k, ",".join(k)) for k in keys], dtype=object).reshape(a.shape)
    outside = ~scen.in_domain(a, b)
    label[outside] = "-"
    region[outside] = "-"
    return SweepGrid(
        [("a", a_values), ("b", b_values)],
        {"label": label, "region": region, **columns},
        {"kind": "region_map", "scenario": scenario, "regime": regime, "p": p, "method": method},
    )


def _two_deciders(opts, evaluate, columns, eps, method, shape) -> list[tuple[str, str]]:
    alice_opts, bob_opts = opts
    pa, pb = {}, {}
    for x in alice_opts:
        for y in bob_opts:
            mean, se = evaluate((x, y))
            pa[x, y], pb[x, y] = mean[..., A], mean[..., B]
            columns[f"payoff_A[{x},{y}]"] = mean[..., A]
            columns[f"payoff_B[{x},{y}]"] = mean[..., B]
            if method == "mc":
                columns[f"stderr_A[{x},{y}]"] = se[..., A]
                columns[f"stderr_B[{x},{y}]"] = se[..., B]

    def first_best(vals):
        top = max(vals)
        return next(i for i, v in enumerate(vals) if v >= top - eps)

    keys = []
    for idx in np.ndindex(*shape):
        eq = [
            (x, y) for x in alice_opts for y in bob_opts
            if all(pa[x, y][idx] >= pa[x2, y][idx] - eps for x2 in alice_opts)
            and all(pb[x, y][idx] >= pb[x, y2][idx] - eps for y2 in bob_opts)
        ]
        if len(eq) == 1:
            keys.append(eq[0])
            continue
        reply = {x: bob_opts[first_best([pb[x, y][idx] for y in bob_opts])] for x in alice_opts}
        x = alice_opts[first_best([pa[x, reply[x]][idx] for x in alice_opts])]
        keys.append((x, reply[x]))
    return keys


def extract_boundary(g: SweepGrid, lower: str, upper: str) -> NDArray:
    """Points (a, b) where the label first switches from ``lower`` to
    ``upper`` scanning up the b axis, placed by linear interpolation of the
    payoff difference between the two cells. Shape (k, 2); columns with no
    switch are skipped."""
    a_values, b_values = g.axis("a"), g.axis("b")
    label = g.values["label"]
    diff = g.values[f"payoff[{upper}]"] - g.values[f"payoff[{lower}]"]
    pts = []
    for i, a in enumerate(a_values):
        for j in range(len(b_values) - 1):
            if label[i, j] == lower and label[i, j + 1] == upper:
                d0, d1 = diff[i, j], diff[i, j + 1]
                t = d0 / (d0 - d1) if d0 != d1 else 0.5
                t = min(max(t, 0.0), 1.0)
                pts.append((a, b_values[j] + t * (b_values[j + 1] - b_values[j])))
                break
    return np.array(pts, dtype=float).reshape(-1, 2)


def column_boundary(g: SweepGrid, lower: str, upper: str) -> NDArray:
    """Boundary b for every a column, NaN where the column has no switch."""
    lookup = {a: b for a, b in extract_boundary(g, lower, upper)}
    return np.array([lookup.get(a, np.nan) for a in g.axis("a")])


def decoherence_sweep(
    p_values: Sequence[float],
    a_values: NDArray | None = None,
    b_values: NDArray | None = None,
    method: str = "exact",
    trials: int = 100_000,
    seed: int | None = 0,
    threads: int = 1,
) -> tuple[list[SweepGrid], SweepGrid]:
    """One-shot maps for each decoherence probability, and the air/C
    boundary b(a, p) extracted from each."""
    if len(p_values) == 0:
        raise ConfigError("need at least one decoherence probability")
    maps = [
        strategy_region_map("one-shot", "decoherent", a_values, b_values, p=p, method=method,
                            trials=trials, seed=seed, threads=threads)
        for p in p_values
    ]
    bounds = np.stack([column_boundary(m, "air", "C") for m in maps], axis=1)
    grid = SweepGrid(
        [("a", maps[0].axis("a")), ("p", np.asarray(p_values, dtype=float))],
        {"boundary_b": bounds},
        {"kind": "decoherence_sweep", "method": method},
    )
    return maps, grid
