"""Command-line front end: ``qnuel <subcommand> [options]``.

Exit status is 0 on success, 2 for bad arguments and 1 when the
computation itself rejects the input.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from collections.abc import Sequence
from fractions import Fraction

import numpy as np

from . import classical
from .analysis import grids, phases, regions, search
from .config import LoadedGame, load_game, load_profile, marksmanship_from, parse_angle, parse_number, split_list
from .engine import (
    GameConfig,
    StrategyProfile,
    as_fraction,
    estimate_payoffs_mc,
    expected_payoffs,
    parse_action,
    parse_player,
    play,
    player_name,
    profile_policies,
)
from .errors import NuelError
from .operators import PhaseParams
from .qstate import iter_support


class UsageError(Exception):
    """Bad command-line input (exit status 2)."""


# ---------------------------------------------------------------- formatting


def fmt_value(x: float, exact: bool) -> str:
    text = format(float(x), ".9g")
    frac = as_fraction(float(x)) if exact else None
    if frac is not None and frac.denominator > 1:
        return f"{text} ({frac.numerator}/{frac.denominator})"
    return text


def print_payoffs(values: Sequence[float], exact: bool, stderr: Sequence[float] | None = None) -> None:
    for j, v in enumerate(values):
        extra = f" +/- {stderr[j]:.3g}" if stderr is not None else ""
        print(f"  {player_name(j)}: {fmt_value(v, exact)}{extra}")


def write_grid(g: grids.SweepGrid, args) -> None:
    if args.out:
        grids.emit_grid(g, args.format, args.out)
        print(f"wrote {args.out}")


def threads_from(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("QNUEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"QNUEL_THREADS must be an integer, got {env!r}") from None
    return 1


# ---------------------------------------------------------------- argument types


def number(text: str) -> Fraction | float:
    try:
        return parse_number(text)
    except NuelError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def angle(text: str) -> float:
    try:
        return parse_angle(text)
    except (NuelError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def number_list(text: str) -> list:
    return [number(t) for t in split_list(text)]


def angle_list(text: str) -> list[float]:
    return [angle(t) for t in split_list(text)]


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


# ---------------------------------------------------------------- game assembly


PLAYER_FLAGS = "abcdefghijklmnop"


def add_game_options(p: argparse.ArgumentParser, players: int | None) -> None:
    g = p.add_argument_group("game")
    g.add_argument("--config", help="game file ([game] and optional [strategy] sections)")
    if players is None:
        g.add_argument("--players", type=positive_int, help="number of players")
    for k, flag in enumerate(PLAYER_FLAGS[: players or 3]):
        g.add_argument(f"--{flag}", type=number, metavar="MISS",
                       help=f"miss probability of player {flag.upper()}")
    g.add_argument("--hit", type=number_list, help="hit probabilities, one per player")
    g.add_argument("--miss-prob", type=number_list, help="miss probabilities, one per player")
    g.add_argument("--theta", type=angle_list, help="rotation angles in [0, pi], one per player")
    g.add_argument("--rounds", type=positive_int)
    g.add_argument("--alpha", type=angle_list, help="phase alpha per player (accepts pi/3 etc.)")
    g.add_argument("--beta", type=angle_list, help="phase beta per player")
    g.add_argument("--utilities", type=number_list, help="u_1..u_n (default 1/k)")
    g.add_argument("--firing-order", help="e.g. C,A,B")


def build_game(args, n_default: int | None, rounds_default: int) -> LoadedGame:
    """Assemble a game from ``--config`` and/or marksmanship flags.

    Each player's marksmanship must come from exactly one form.
    """
    if args.config:
        loaded = load_game(args.config)
        if any(getattr(args, k, None) is not None for k in ("hit", "miss_prob", "theta", "players")):
            raise UsageError("--config cannot be combined with marksmanship flags")
        cfg = loaded.config
        if args.rounds is not None:
            cfg = cfg.with_rounds(args.rounds)
        return LoadedGame(cfg, loaded.profile if cfg.rounds == loaded.config.rounds else None, loaded.exact)

    n = getattr(args, "players", None) or n_default
    lists = {k: getattr(args, k.replace("-", "_"), None) for k in ("hit", "miss-prob", "theta")}
    sizes = {len(v) for v in lists.values() if v is not None}
    if n is None:
        flagged = [j for j, f in enumerate(PLAYER_FLAGS) if getattr(args, f, None) is not None]
        if sizes:
            n = sizes.pop()
        elif flagged:
            n = flagged[-1] + 1
        else:
            raise UsageError("give --players or a marksmanship list")
    per_player: list = [None] * n
    for kind, values in lists.items():
        if values is None:
            continue
        if len(values) != n:
            raise UsageError(f"--{kind} needs {n} values, got {len(values)}")
        for j, v in enumerate(values):
            if per_player[j] is not None:
                raise UsageError(f"player {player_name(j)} has marksmanship given twice")
            per_player[j] = ("theta" if kind == "theta" else kind.split("-")[0], v)
    for j in range(min(n, len(PLAYER_FLAGS))):
        v = getattr(args, PLAYER_FLAGS[j], None)
        if v is None:
            continue
        if per_player[j] is not None:
            raise UsageError(f"player {player_name(j)} has marksmanship given twice")
        per_player[j] = ("miss", v)
    missing = [player_name(j) for j, m in enumerate(per_player) if m is None]
    if missing:
        raise UsageError(f"no marksmanship for player(s) {', '.join(missing)}")
    marks = tuple(marksmanship_from(kind, v) for kind, v in per_player)
    alphas = args.alpha or [0.0] * n
    betas = args.beta or [0.0] * n
    if len(alphas) != n or len(betas) != n:
        raise UsageError(f"--alpha and --beta need {n} values")
    order = tuple(parse_player(t, n) for t in split_list(args.firing_order or ""))
    utilities = tuple(float(u) for u in (args.utilities or ()))
    cfg = GameConfig(
        n, args.rounds or rounds_default, marks,
        tuple(PhaseParams(x, y) for x, y in zip(alphas, betas)), order, utilities,
    )
    exact = all(k != "theta" and isinstance(v, Fraction) for k, v in per_player) and not any(alphas) \
        and not any(betas)
    return LoadedGame(cfg, None, exact)


def parse_profile_text(text: str, n: int) -> StrategyProfile:
    """``"A: air,B; B: C,A; C: B,A"`` or, in player order, ``"air,B; C,A; B,A"``."""
    rows: list = [None] * n
    for k, part in enumerate(p for p in text.split(";") if p.strip()):
        if ":" in part:
            who, acts = part.split(":", 1)
            j = parse_player(who, n)
        else:
            j, acts = k, part
        if j >= n:
            raise UsageError(f"too many strategies for {n} players")
        rows[j] = tuple(parse_action(t, n) for t in split_list(acts))
    if any(r is None for r in rows):
        raise UsageError("every player needs a strategy")
    return StrategyProfile(tuple(rows))


def resolve_profile(args, game: LoadedGame) -> StrategyProfile:
    cfg = game.config
    if args.profile and args.strategy:
        raise UsageError("give --profile or --strategy, not both")
    if args.profile:
        return load_profile(args.profile, cfg.n_players, cfg.rounds)
    if args.strategy:
        return parse_profile_text(args.strategy, cfg.n_players)
    if game.profile is not None:
        return game.profile
    raise UsageError("no strategy profile: use --profile, --strategy or a [strategy] section")


# ---------------------------------------------------------------- subcommands


def report_play(cfg: GameConfig, prof: StrategyProfile, exact: bool, args) -> int:
    state = play(cfg, prof)
    print(f"profile: {prof}")
    print("final state (nonzero amplitudes):")
    for k, amp in enumerate(state.amplitudes):
        if abs(amp) > 1e-15:
            label = format(k, f"0{cfg.n_players}b")
            print(f"  |{label}>  {amp.real:+.9f}{amp.imag:+.9f}i")
    print("outcome probabilities:")
    for o in iter_support(state, 1e-15):
        print(f"  {o.label}: {fmt_value(o.probability, exact)}")
    pay = expected_payoffs(state, cfg)
    print("expected payoffs:")
    print_payoffs(pay.values, exact)
    if args.out:
        rows = {"payoff": np.array(pay.values)}
        g = grids.SweepGrid([("player", np.arange(cfg.n_players, dtype=float))], rows,
                            {"kind": "payoffs", "profile": str(prof)})
        write_grid(g, args)
    return 0


def cmd_play(args, n_default: int | None) -> int:
    game = build_game(args, n_default, 1)
    if n_default is not None and game.config.n_players != n_default:
        raise UsageError(f"this subcommand needs {n_default} players")
    prof = resolve_profile(args, game)
    if getattr(args, "mc", None):
        cfg = game.config
        est = estimate_payoffs_mc(cfg, profile_policies(prof), args.p, args.mc, args.seed, threads_from(args))
        print(f"profile: {prof}")
        print(f"Monte Carlo payoffs (p={args.p}, {args.mc} trajectories):")
        print_payoffs(est.values, False, est.stderr)
        return 0
    return report_play(game.config, prof, game.exact, args)


def cmd_duel(args) -> int:
    game = build_game(args, 2, 2)
    cfg = game.config
    if args.air_second:
        if cfg.rounds != 2:
            raise UsageError("--air-second needs --rounds 2")
        prof = phases.air_second_shot()
    elif args.strategy or args.profile:
        prof = resolve_profile(args, game)
    else:
        prof = phases.mutual_fire(cfg.rounds)
    if args.phase_sweep:
        return phase_report(cfg, prof, args)
    return report_play(cfg, prof, game.exact, args)


def phase_report(cfg: GameConfig, prof: StrategyProfile, args) -> int:
    land = phases.phase_landscape(cfg, prof, args.points)
    axis = land.axis("alpha1")
    print(f"phase landscape over {args.points}x{args.points} grid, profile {prof}")
    for name, col in (("Alice", "payoff_A"), ("Bob", "payoff_B")):
        v = land.values[col]
        top = v.max()
        pts = [(axis[i], axis[j]) for i, j in np.argwhere(v >= top - 1e-9)]
        print(f"{name} grid maximum {top:.9g} at:")
        for x, y in pts:
            print(f"  alpha1 = {x / math.pi:+.4f} pi, alpha2 = {y / math.pi:+.4f} pi")
    mm = phases.maximin_phases(cfg, prof, args.points)
    print(
        f"maximin: alpha1 = {mm.alpha1 / math.pi:+.4f} pi, alpha2 = {mm.alpha2 / math.pi:+.4f} pi, "
        f"payoffs ({mm.payoffs[0]:.9g}, {mm.payoffs[1]:.9g}), balanced: {'yes' if mm.balanced else 'no'}"
    )
    write_grid(land, args)
    return 0


def cmd_phase_sweep(args) -> int:
    cfg = phases.duel_config(float(args.a), float(args.b), args.rounds)
    prof = phases.air_second_shot() if args.air_second else phases.mutual_fire(args.rounds)
    if args.air_second and args.rounds != 2:
        raise UsageError("--air-second needs --rounds 2")
    if args.repeated:
        curve = phases.repeated_duel_curve(float(args.a), float(args.b), max_rounds=args.rounds)
        print("rounds  payoff_A  min  max")
        for m, v, lo, hi in zip(curve.rounds, curve.payoff, curve.lo, curve.hi):
            print(f"{m:6d}  {v:.9g}  {lo:.9g}  {hi:.9g}")
        g = grids.SweepGrid([("rounds", curve.rounds.astype(float))],
                            {"payoff_A": curve.payoff, "min": curve.lo, "max": curve.hi},
                            {"kind": "repeated_duel"})
        write_grid(g, args)
        return 0
    return phase_report(cfg, prof, args)


def parse_restrictions(specs: Sequence[str], space: search.StrategySpace, n: int) -> search.StrategySpace:
    """``A1=C`` or ``B2=air,A``: player and 1-based round, then allowed actions."""
    for spec in specs:
        if "=" not in spec:
            raise UsageError(f"restriction {spec!r} should look like A1=air,C")
        slot, acts = spec.split("=", 1)
        slot = slot.strip()
        who, rnd = slot[:-1] if slot[-1].isdigit() else slot, slot[-1]
        if not rnd.isdigit():
            raise UsageError(f"restriction {spec!r} lacks a round number")
        j, r = parse_player(who, n), int(rnd) - 1
        if not 0 <= r < len(space.slots[j]):
            raise UsageError(f"round {r + 1} out of range in {spec!r}")
        space = space.restrict(j, r, [parse_action(t, n) for t in split_list(acts)])
    return space


def cmd_equilibria(args) -> int:
    game = build_game(args, None, 1)
    cfg = game.config
    space = parse_restrictions(args.restrict or [], search.StrategySpace.full(cfg), cfg.n_players)
    report = search.find_equilibria(cfg, space, args.eps, args.max_profiles)
    print(f"{report.n_profiles} profiles searched; {len(report)} pure equilibria (eps={args.eps:g})")
    for prof, pay in report.equilibria:
        print(f"{prof}")
        print_payoffs(pay.values, game.exact)
    return 0


def cmd_region_map(args) -> int:
    axis = regions.unit_axis(args.resolution)
    g = regions.strategy_region_map(
        args.scenario, args.regime, axis, axis, p=args.p, method=args.method,
        trials=args.trials, seed=args.seed, threads=threads_from(args),
    )
    labels = g.values["region"]
    names, counts = np.unique(labels[labels != "-"], return_counts=True)
    print(f"{args.scenario}, {args.regime}" + (f" p={args.p}" if args.regime == "decoherent" else ""))
    print("cells per option:")
    for name, count in zip(names, counts):
        print(f"  {name}: {count}")
    if args.scenario == "one-shot":
        pts = regions.extract_boundary(g, "air", "C")
        print(f"air/C boundary: {len(pts)} points")
        for a, b in pts[:: max(1, len(pts) // 10)]:
            print(f"  a = {a:.4f}  b = {b:.6f}")
    write_grid(g, args)
    return 0


def cmd_decoherence(args) -> int:
    axis = regions.unit_axis(args.resolution)
    _, g = regions.decoherence_sweep(args.p_values, axis, axis, args.method, args.trials, args.seed,
                                     threads_from(args))
    a = g.axis("a")
    print("air/C boundary b(a) per decoherence probability")
    print("a       " + "  ".join(f"p={p:<8g}" for p in g.axis("p")))
    for i in range(0, a.size, max(1, a.size // 10)):
        print(f"{a[i]:.4f}  " + "  ".join(f"{b:10.6f}" for b in g.values["boundary_b"][i]))
    write_grid(g, args)
    return 0


def cmd_classical(args) -> int:
    exact = all(isinstance(x, Fraction) for x in (args.a, args.b) if x is not None)
    if args.truel:
        if args.c is None:
            raise UsageError("--truel needs --a, --b and --c")
        exact = exact and isinstance(args.c, Fraction)
        s = {"air": classical.ClassicalTruelStrategy.AIR, "b": classical.ClassicalTruelStrategy.TARGET_B,
             "c": classical.ClassicalTruelStrategy.TARGET_C}[args.strategy.lower()]
        probs = classical.truel_survival(float(args.a), float(args.b), float(args.c), s)
        print(f"classical truel, Alice strategy {args.strategy}: sole-survival probabilities")
        print_payoffs(probs, exact)
        return 0
    m = args.bullets
    v = classical.duel_payoff(classical.ClassicalDuelParams(float(args.a), float(args.b), m))
    print(f"classical duel ({'unlimited' if m is None else m} shots each), Alice first:")
    print_payoffs((v, 1.0 - v), exact)
    return 0


# ---------------------------------------------------------------- parser


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def add_output(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("output")
    g.add_argument("--out", help="write results to this file")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=positive_int, help="worker threads (else QNUEL_THREADS, else 1)")


def add_strategy(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", help="strategy file with a [strategy] section")
    p.add_argument("--strategy", help='inline profile, e.g. "A: air,B; B: C,A; C: B,A"')


def probability(text: str) -> float:
    v = float(number(text))
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="qnuel", description="Quantum duels, truels and n-uels.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("duel", help="play a two-player duel")
    add_game_options(p, 2)
    add_strategy(p)
    p.add_argument("--air-second", action="store_true", help="Alice fires then abstains; Bob fires twice")
    p.add_argument("--phase-sweep", action="store_true", help="sweep (alpha1, alpha2) instead")
    p.add_argument("--points", type=positive_int, default=phases.PHASE_POINTS)
    add_output(p)
    p.set_defaults(func=cmd_duel)

    for name, n in (("truel", 3), ("nuel", None)):
        p = sub.add_parser(name, help=f"play a {'three' if n else 'n'}-player game")
        add_game_options(p, n)
        add_strategy(p)
        p.add_argument("--mc", type=positive_int, metavar="TRIALS", help="sample trajectories instead")
        p.add_argument("--p", type=probability, default=0.0, help="decoherence probability for --mc")
        add_output(p)
        p.set_defaults(func=lambda a, n=n: cmd_play(a, n))

    p = sub.add_parser("equilibria", help="enumerate pure-strategy Nash equilibria")
    add_game_options(p, None)
    p.add_argument("--restrict", action="append", metavar="SLOT=ACTIONS",
                   help="limit a slot, e.g. A1=C or B3=air,A (repeatable)")
    p.add_argument("--eps", type=float, default=search.TIE_EPS)
    p.add_argument("--max-profiles", type=positive_int, default=search.MAX_PROFILES)
    add_output(p)
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("phase-sweep", help="duel payoff landscape over phases")
    p.add_argument("--a", type=number, required=True)
    p.add_argument("--b", type=number, required=True)
    p.add_argument("--rounds", type=positive_int, default=2)
    p.add_argument("--points", type=positive_int, default=phases.PHASE_POINTS)
    p.add_argument("--air-second", action="store_true")
    p.add_argument("--repeated", action="store_true", help="payoff versus round count instead")
    add_output(p)
    p.set_defaults(func=cmd_phase_sweep)

    p = sub.add_parser("region-map", help="preferred strategy over (a, b)")
    p.add_argument("--scenario", choices=regions.SCENARIOS, default="one-shot")
    p.add_argument("--regime", choices=regions.REGIMES, default="quantum")
    p.add_argument("--p", type=probability)
    p.add_argument("--resolution", type=positive_int, default=regions.RESOLUTION)
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--trials", type=positive_int, default=100_000)
    add_output(p)
    p.set_defaults(func=cmd_region_map)

    p = sub.add_parser("decoherence-sweep", help="one-shot boundary versus decoherence")
    p.add_argument("--p-values", type=lambda t: [probability(x) for x in split_list(t)],
                   default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--resolution", type=positive_int, default=regions.RESOLUTION)
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--trials", type=positive_int, default=100_000)
    add_output(p)
    p.set_defaults(func=cmd_decoherence)

    p = sub.add_parser("classical", help="classical closed forms")
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--truel", action="store_true")
    kind.add_argument("--duel", action="store_true")
    p.add_argument("--a", type=number, required=True)
    p.add_argument("--b", type=number, required=True)
    p.add_argument("--c", type=number)
    p.add_argument("--strategy", choices=("air", "B", "C", "b", "c"), default="air")
    p.add_argument("--bullets", type=positive_int, help="shots per duellist (default unlimited)")
    add_output(p)
    p.set_defaults(func=cmd_classical)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "regime", None) == "decoherent" and args.p is None:
            raise UsageError("--regime decoherent needs --p")
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qnuel: error: {exc}", file=sys.stderr)
        return 2
    except NuelError as exc:
        print(f"qnuel: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"qnuel: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
