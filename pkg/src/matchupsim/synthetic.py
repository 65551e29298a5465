"""Synthetic leagues with known parameters.

Real play-by-play data is not shipped, so tests, demos and the acceptance
suite run against leagues generated here: a ground-truth
:class:`~matchupsim.model.MatchupModel`, plate-appearance records drawn from
it, and steal counts consistent with each batter's running speed.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .baserunning import (
    MAX_RUNS,
    N_SUCC,
    StealProfile,
    TransitionTable,
    _advance_all,
    default_successor,
    fit_steal_prior,
)
from .events import (
    N_OUTCOMES,
    N_STATES,
    TERMINAL,
    BaseOutState,
    Outcome,
    PlateAppearanceRecord,
)
from .gamesim import Player, Roster
from .model import MatchupModel, PriorSpec, RunningModel
from .outcome_model import Log5Weights, PlayerParams
from .stats import beta_from_moments, gamma_from_moments

# K, BB, HBP, GO, FO, 1B, 2B, 3B, HR
LEAGUE_RATES = np.array([0.224, 0.083, 0.011, 0.235, 0.218, 0.143, 0.045, 0.004, 0.037])
OPENING_DAY = dt.date(2023, 3, 30)


# ---------------------------------------------------------------------------
# base running
# ---------------------------------------------------------------------------


def _out(outs: int, bases: int, runs: int = 0) -> tuple[int, int]:
    return (TERMINAL, 0) if outs >= 3 else (outs * 8 + bases, runs)


def _branches(state: int, outcome: int, speed: float) -> list[tuple[float, int, int]]:
    """(probability, successor, runs) for one row of a speed-dependent table."""
    outs, bases = divmod(state, 8)
    r1, r2, r3 = bases & 1, bases >> 1 & 1, bases >> 2 & 1
    if outcome in (Outcome.STRIKEOUT, Outcome.WALK, Outcome.HIT_BY_PITCH, Outcome.HOME_RUN, Outcome.TRIPLE):
        succ, runs = default_successor(state, outcome)
        return [(1.0, succ, runs)]

    out = []
    if outcome == Outcome.SINGLE:
        score2 = 0.40 + 0.35 * speed
        first_to_third = 0.20 + 0.35 * speed
        for p2, scored2 in ((score2, True), (1 - score2, False)) if r2 else ((1.0, False),):
            third_free = scored2 or not r2
            options = ((first_to_third, True), (1 - first_to_third, False)) if r1 and third_free else ((1.0, False),)
            for p1, takes_third in options:
                new = 1
                runs = r3 + (1 if scored2 else 0)
                if r2 and not scored2:
                    new |= 4
                if r1:
                    new |= 4 if takes_third else 2
                out.append((p2 * p1, outs * 8 + new, runs))
    elif outcome == Outcome.DOUBLE:
        score1 = 0.30 + 0.40 * speed
        for p1, scores in ((score1, True), (1 - score1, False)) if r1 else ((1.0, False),):
            new = 2 | (4 if r1 and not scores else 0)
            out.append((p1, outs * 8 + new, r2 + r3 + (1 if scores else 0)))
    elif outcome == Outcome.GROUND_OUT:
        if r1 and outs < 2:
            dp = 0.55 - 0.35 * speed
            out.append((dp, *_out(outs + 2, bases & ~1)))
            new, runs = _advance_all(bases, 1)
            out.append((1 - dp, *_out(outs + 1, new & ~1, runs)))
        else:
            adv = 0.35 + 0.35 * speed
            if bases and outs < 2:
                new, runs = _advance_all(bases, 1)
                out.append((adv, *_out(outs + 1, new & ~1, runs)))
                out.append((1 - adv, *_out(outs + 1, bases)))
            else:
                out.append((1.0, *_out(outs + 1, bases)))
    elif outcome == Outcome.FLY_OUT:
        if outs == 2:
            return [(1.0, TERMINAL, 0)]
        tag3 = 0.55 + 0.35 * speed if r3 else 0.0
        tag2 = 0.15 + 0.35 * speed
        for p3, scores in ((tag3, True), (1 - tag3, False)) if r3 else ((1.0, False),):
            third_free = scores or not r3
            options = ((tag2, True), (1 - tag2, False)) if r2 and third_free else ((1.0, False),)
            for p2, moves in options:
                new = bases
                if scores:
                    new &= ~4
                if moves:
                    new = (new & ~2) | 4
                out.append((p3 * p2, (outs + 1) * 8 + new, 1 if scores else 0))
    return out


def speed_table(speed: float) -> TransitionTable:
    """Transition table for runners of the given speed in [0, 1].

    Faster runners score from second on singles and from first on doubles
    more often, go first-to-third more, ground into fewer double plays and
    tag up more on fly balls.
    """
    if not 0.0 <= speed <= 1.0:
        raise ValueError("speed must lie in [0, 1]")
    probs = np.zeros((N_STATES, N_OUTCOMES, N_SUCC, MAX_RUNS + 1))
    for s in range(N_STATES):
        for o in range(N_OUTCOMES):
            for p, succ, runs in _branches(s, o, speed):
                probs[s, o, succ, runs] += p
    return TransitionTable(probs)


def steal_rate_for_speed(speed: float) -> float:
    return 0.004 + 0.05 * speed**2


# ---------------------------------------------------------------------------
# populations
# ---------------------------------------------------------------------------


@dataclass
class Population:
    """A ground-truth league."""

    truth: MatchupModel
    pitchers: dict[str, Player]
    batters: dict[str, Player]
    speeds: dict[str, float]
    steals: dict[str, tuple[int, int]] = field(default_factory=dict)


def _draw_params(rng, n: int, spread: float, platoon: float, scale: np.ndarray | None = None) -> list[PlayerParams]:
    out = []
    for _ in range(n):
        mult = np.exp(rng.normal(0.0, spread, N_OUTCOMES))
        if scale is not None:
            mult *= scale
        base = np.clip(LEAGUE_RATES * mult, 1e-4, 0.8)
        offsets = np.exp(rng.normal(0.0, platoon, N_OUTCOMES))
        out.append(PlayerParams(base, offsets))
    return out


def _prior_from(params: Sequence[PlayerParams]) -> PriorSpec:
    base = np.array([p.base for p in params])
    off = np.array([p.offsets for p in params])
    ab = np.array([beta_from_moments(base[:, j]) for j in range(N_OUTCOMES)])
    kr = np.array([gamma_from_moments(off[:, j]) for j in range(N_OUTCOMES)])
    return PriorSpec(ab[:, 0], ab[:, 1], kr[:, 0], kr[:, 1])


def truth_running(speeds: dict[str, float], rng, groups: int = 5) -> tuple[RunningModel, dict[str, tuple[int, int]]]:
    """Running model whose group tables follow speed, plus steal counts."""
    steals = {}
    for b, s in sorted(speeds.items()):
        n = int(rng.integers(200, 1500))
        steals[b] = (n, int(rng.binomial(n, steal_rate_for_speed(s))))
    prior = fit_steal_prior(steals, min_opportunities=200)
    rates = np.array([StealProfile(n, x, *prior).posterior_rate for n, x in steals.values()])
    boundaries = np.percentile(rates, [100.0 * g / groups for g in range(1, groups)])
    tables = tuple(speed_table((g + 0.5) / groups) for g in range(groups))
    return RunningModel(tables, boundaries, prior, steals), steals


def make_population(
    seed: int,
    n_pitchers: int = 30,
    n_batters: int = 90,
    spread: float = 0.15,
    platoon: float = 0.08,
    weights: Log5Weights | None = None,
    running: bool = True,
    prefix: str = "",
) -> Population:
    """Random ground-truth league.  ``running=False`` uses one league-wide
    base-running table (the textbook one at average speed)."""
    rng = np.random.default_rng(seed)
    pitchers = {f"{prefix}p{i:02d}": Player(f"{prefix}p{i:02d}", "L" if rng.random() < 0.3 else "R") for i in range(n_pitchers)}
    batters = {f"{prefix}b{i:03d}": Player(f"{prefix}b{i:03d}", "L" if rng.random() < 0.4 else "R") for i in range(n_batters)}
    p_params = dict(zip(pitchers, _draw_params(rng, n_pitchers, spread, platoon)))
    b_params = dict(zip(batters, _draw_params(rng, n_batters, spread, platoon)))
    speeds = {b: float(rng.random()) for b in batters}
    return assemble_population(pitchers, batters, p_params, b_params, speeds, rng, weights, running)


def assemble_population(pitchers, batters, p_params, b_params, speeds, rng, weights=None, running=True) -> Population:
    league = np.vstack([LEAGUE_RATES, LEAGUE_RATES])
    run_model, steals = truth_running(speeds, rng) if running else (None, {})
    truth = MatchupModel(
        variant="BR" if running else "PB",
        league=league,
        order_rates=np.broadcast_to(LEAGUE_RATES, (9, 2, N_OUTCOMES)).copy(),
        weights=weights if weights is not None else Log5Weights.neutral(),
        pitchers=dict(p_params),
        batters=dict(b_params),
        pitcher_prior=_prior_from(list(p_params.values())),
        batter_prior=_prior_from(list(b_params.values())),
        league_table=speed_table(0.5),
        running=run_model,
        provenance={"synthetic": True},
    )
    return Population(truth, dict(pitchers), dict(batters), dict(speeds), steals)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


def _half_inning(model, pitcher: Player, lineup: Sequence[Player], slot: int, rng, date, out: list) -> int:
    outs, bases = 0, 0
    while True:
        b = lineup[slot]
        probs = model.outcome_probs(pitcher.id, pitcher.hand, b.id, b.hand, slot)
        o = int(rng.choice(N_OUTCOMES, p=probs))
        row = model.transition_table(b.id).probs[outs * 8 + bases, o].ravel()
        j = int(rng.choice(row.size, p=row))
        succ, runs = divmod(j, MAX_RUNS + 1)
        post = BaseOutState(3, 0) if succ == TERMINAL else BaseOutState(*divmod(succ, 8))
        out.append(
            PlateAppearanceRecord(
                date, pitcher.id, b.id, pitcher.hand, b.hand, slot + 1, Outcome(o), BaseOutState(outs, bases), post, runs
            )
        )
        slot = (slot + 1) % 9
        if succ == TERMINAL:
            return slot
        outs, bases = divmod(succ, 8)


def generate_records(
    pop: Population,
    n_games: int,
    seed: int,
    lineups: Sequence[Sequence[Player]] | None = None,
    staffs: Sequence[Sequence[Player]] | None = None,
) -> list[PlateAppearanceRecord]:
    """Play ``n_games`` nine-inning games under the truth model and log every
    plate appearance.  Without ``lineups``/``staffs`` each game draws two
    random lineups and two random pitchers from the population; otherwise
    teams cycle through the given lineups and pitching staffs."""
    rng = np.random.default_rng(seed)
    pitchers = sorted(pop.pitchers.values(), key=lambda p: p.id)
    batters = sorted(pop.batters.values(), key=lambda p: p.id)
    records: list[PlateAppearanceRecord] = []
    for g in range(n_games):
        date = OPENING_DAY + dt.timedelta(days=g // 8)
        if lineups is None:
            picks = rng.choice(len(batters), 18, replace=False)
            teams = [[batters[i] for i in picks[:9]], [batters[i] for i in picks[9:]]]
        else:
            teams = [list(lineups[(2 * g) % len(lineups)]), list(lineups[(2 * g + 1) % len(lineups)])]
        if staffs is None:
            arms = [pitchers[i] for i in rng.choice(len(pitchers), 2, replace=False)]
        else:
            arms = [staffs[(2 * g + 1) % len(staffs)], staffs[(2 * g) % len(staffs)]]
            arms = [a[int(rng.integers(len(a)))] for a in arms]
        slots = [0, 0]
        for _ in range(9):
            for side in (0, 1):
                slots[side] = _half_inning(pop.truth, arms[side], teams[side], slots[side], rng, date, records)
    return records


# ---------------------------------------------------------------------------
# a league built for manager comparisons
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    population: Population
    home: Roster
    away: Roster
    records: list[PlateAppearanceRecord]


def information_scenario(seed: int = 7, n_games: int = 1500) -> Scenario:
    """Two fixture clubs in a league where batter identity matters.

    Each club bats two weak hitters at the top of its order and carries two
    strong bench bats.  All of a club's hitters bat from the same side, so a
    manager that sees only batting-order averages cannot tell the bench from
    the starters, while one that knows individual batters can upgrade the
    lineup in the first inning.
    """
    rng = np.random.default_rng(seed)
    pop = make_population(seed, n_pitchers=24, n_batters=60, spread=0.12)
    weak = np.array([1.35, 0.8, 1.0, 1.1, 1.1, 0.8, 0.7, 1.0, 0.45])
    strong = np.array([0.7, 1.3, 1.0, 0.9, 0.9, 1.25, 1.4, 1.0, 2.0])
    p_params = dict(pop.truth.pitchers)
    b_params = dict(pop.truth.batters)
    clubs = []
    for c, name in enumerate(("home", "away")):
        ids = [f"{name[0]}{i}" for i in range(13)]
        hands = ["R" if c == 0 else "L"] * 13
        players = [Player(pid, h) for pid, h in zip(ids, hands)]
        lineup, bench, arms = players[:9], players[9:11], [Player(f"{name[0]}P{i}", "R" if i else "L") for i in range(4)]
        for i, p in enumerate(lineup):
            scale = weak if i in (0, 1) else None
            b_params[p.id] = _draw_params(rng, 1, 0.08, 0.05, scale)[0]
        for p in bench:
            b_params[p.id] = _draw_params(rng, 1, 0.05, 0.05, strong)[0]
        for p in arms:
            p_params[p.id] = _draw_params(rng, 1, 0.1, 0.05)[0]
        clubs.append(Roster(tuple(lineup), tuple(bench), tuple(arms), name=name))
    batters = dict(pop.batters)
    pitchers = dict(pop.pitchers)
    for r in clubs:
        batters.update({p.id: p for p in r.lineup + r.bench})
        pitchers.update({p.id: p for p in r.pitchers})
    speeds = dict(pop.speeds)
    for pid in batters:
        speeds.setdefault(pid, float(rng.random()))
    full = assemble_population(pitchers, batters, p_params, b_params, speeds, rng, pop.truth.weights)

    # the clubs' own games plus a league of random matchups
    lineups = [r.lineup for r in clubs] + [r.bench + r.lineup[2:] for r in clubs]
    staffs = [r.pitchers for r in clubs]
    records = generate_records(full, n_games // 3, seed + 1, lineups=lineups, staffs=staffs)
    records += generate_records(full, n_games - n_games // 3, seed + 2)
    return Scenario(full, clubs[0], clubs[1], records)


def population_roster(pop: Population, seed: int, name: str = "") -> Roster:
    """A random 9-man lineup, 2-man bench and 4-man staff from ``pop``."""
    rng = np.random.default_rng(seed)
    bats = sorted(pop.batters)
    arms = sorted(pop.pitchers)
    bi = rng.choice(len(bats), 11, replace=False)
    pi = rng.choice(len(arms), 4, replace=False)
    b = [pop.batters[bats[i]] for i in bi]
    return Roster(tuple(b[:9]), tuple(b[9:]), tuple(pop.pitchers[arms[i]] for i in pi), name=name)
