"""Full-game simulation over base-out states.

The engine plays plate appearances from a :class:`GameState`, asking each
team's policy for decisions before every plate appearance in a fixed order:
batting team, fielding team, then the batting team once more if the fielding
team acted.  All game randomness comes from a per-game uniform stream
derived from ``(seed, game_index)``; policies draw from their own streams, so
a replayed decision log reproduces the game exactly.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .decisions import BATTING, FIELDING, Choice, Decision, apply_decision, is_legal, ProtocolError
from .events import TERMINAL, BaseOutState, Outcome

REGULATION_INNINGS = 9
EXTRA_RUNNER_INNING = 10
INNING_CAP = 30
STRICT = "strict"
TOURNAMENT = "tournament"


class CappedGameError(RuntimeError):
    """A strict-mode game was still tied after the inning cap."""


@dataclass(frozen=True)
class Player:
    id: str
    hand: str

    def __post_init__(self):
        if self.hand not in ("L", "R"):
            raise ValueError(f"hand must be 'L' or 'R', got {self.hand!r} for {self.id}")

    @classmethod
    def from_obj(cls, obj) -> Player:
        if isinstance(obj, Player):
            return obj
        if isinstance(obj, dict):
            return cls(str(obj["id"]), obj["hand"])
        pid, hand = obj
        return cls(str(pid), hand)


@dataclass(frozen=True)
class Roster:
    lineup: tuple[Player, ...]
    bench: tuple[Player, ...] = ()
    pitchers: tuple[Player, ...] = ()
    starter: str | None = None
    name: str = ""

    def __post_init__(self):
        lineup = tuple(Player.from_obj(p) for p in self.lineup)
        bench = tuple(Player.from_obj(p) for p in self.bench)
        pitchers = tuple(Player.from_obj(p) for p in self.pitchers)
        if len(lineup) != 9:
            raise ValueError(f"a lineup has 9 batters, got {len(lineup)}")
        if not pitchers:
            raise ValueError("a roster needs at least one pitcher")
        ids = [p.id for p in lineup + bench + pitchers]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate players in roster: {dupes}")
        starter = self.starter if self.starter is not None else pitchers[0].id
        if starter not in {p.id for p in pitchers}:
            raise ValueError(f"starter {starter} is not among the pitchers")
        object.__setattr__(self, "lineup", lineup)
        object.__setattr__(self, "bench", bench)
        object.__setattr__(self, "pitchers", pitchers)
        object.__setattr__(self, "starter", starter)

    @property
    def starting_pitcher(self) -> Player:
        return next(p for p in self.pitchers if p.id == self.starter)

    def to_dict(self) -> dict:
        enc = lambda ps: [{"id": p.id, "hand": p.hand} for p in ps]  # noqa: E731
        return {
            "name": self.name,
            "lineup": enc(self.lineup),
            "bench": enc(self.bench),
            "pitchers": enc(self.pitchers),
            "starter": self.starter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Roster:
        return cls(
            lineup=tuple(d["lineup"]),
            bench=tuple(d.get("bench", ())),
            pitchers=tuple(d["pitchers"]),
            starter=d.get("starter"),
            name=d.get("name", ""),
        )


@dataclass(slots=True)
class TeamState:
    lineup: tuple[Player, ...]
    slot: int
    pitcher: Player
    bullpen: tuple[Player, ...]
    bench: tuple[Player, ...]
    removed: frozenset
    runs: int = 0
    faced: int = 0

    @classmethod
    def start(cls, roster: Roster) -> TeamState:
        starter = roster.starting_pitcher
        return cls(
            lineup=roster.lineup,
            slot=0,
            pitcher=starter,
            bullpen=tuple(p for p in roster.pitchers if p.id != starter.id),
            bench=roster.bench,
            removed=frozenset(),
        )

    def copy(self) -> TeamState:
        return TeamState(self.lineup, self.slot, self.pitcher, self.bullpen, self.bench, self.removed, self.runs, self.faced)


@dataclass(slots=True)
class GameState:
    away: TeamState
    home: TeamState
    inning: int = 1
    top: bool = True
    outs: int = 0
    bases: int = 0
    ibb: bool = False
    stage: int = 0
    terminal: bool = False
    winner: str | None = None
    capped: bool = False
    pa_count: int = 0

    @classmethod
    def start(cls, home: Roster, away: Roster) -> GameState:
        return cls(TeamState.start(away), TeamState.start(home))

    @property
    def half(self) -> str:
        return "top" if self.top else "bottom"

    @property
    def batting(self) -> TeamState:
        return self.away if self.top else self.home

    @property
    def fielding(self) -> TeamState:
        return self.home if self.top else self.away

    @property
    def batting_team(self) -> str:
        return "away" if self.top else "home"

    @property
    def base_out(self) -> BaseOutState:
        return BaseOutState(self.outs, self.bases)

    def team_for(self, side: str) -> str:
        batting = self.batting_team
        if side == BATTING:
            return batting
        return "home" if batting == "away" else "away"

    def copy(self) -> GameState:
        return GameState(
            self.away.copy(),
            self.home.copy(),
            self.inning,
            self.top,
            self.outs,
            self.bases,
            self.ibb,
            self.stage,
            self.terminal,
            self.winner,
            self.capped,
            self.pa_count,
        )


@dataclass(frozen=True)
class DecisionRecord:
    inning: int
    half: str
    side: str
    team: str
    decision: Decision
    value_mean: float = math.nan
    value_se: float = math.nan
    alternatives: int = 1
    forced: bool = False

    def csv_row(self) -> list:
        fmt = lambda v: "" if math.isnan(v) else repr(float(v))  # noqa: E731
        return [
            self.inning,
            self.half,
            self.side,
            self.decision.kind,
            self.decision.player_id or "",
            fmt(self.value_mean),
            fmt(self.value_se),
            self.alternatives,
        ]


DECISION_LOG_HEADER = ("inning", "half", "side", "decision", "player_id", "value_mean", "value_se", "alternatives_considered")


def decision_log_csv(records: Iterable[DecisionRecord]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(DECISION_LOG_HEADER)
    for r in records:
        w.writerow(r.csv_row())
    return out.getvalue()


@dataclass
class GameResult:
    winner: str
    home_runs: int
    away_runs: int
    innings: int
    capped: bool = False
    decisions: list[DecisionRecord] = field(default_factory=list)
    plate_appearances: int = 0


class UniformStream:
    """Buffered uniform draws from a PCG64 stream."""

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, seed):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._buf = self._gen.random(256).tolist()
        self._pos = 0

    def random(self) -> float:
        if self._pos == 256:
            self._buf = self._gen.random(256).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def game_stream(seed: int, game_index: int) -> UniformStream:
    return UniformStream(np.random.SeedSequence([seed, game_index]))


@dataclass
class DecisionContext:
    """What a policy may consult when asked for a decision."""

    engine: GameEngine
    seed: int
    game_index: int
    offer: int

    def rng(self) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, self.game_index, 1, self.offer])


def _is_passive(policy) -> bool:
    return policy is None or getattr(policy, "passive", False)


class GameEngine:
    """Rules and sampling for games between two fixed models.

    ``model_away`` drives away batters (against home pitchers) and
    ``model_home`` the reverse.  Outcome and transition lookups are cached
    per engine, so reuse one engine for many games.
    """

    def __init__(
        self,
        model_away,
        model_home,
        mode: str = TOURNAMENT,
        pitcher_cap: int | None = None,
        inning_cap: int = INNING_CAP,
    ):
        if mode not in (STRICT, TOURNAMENT):
            raise ValueError(f"mode must be {STRICT!r} or {TOURNAMENT!r}")
        self.models = (model_away, model_home)
        self.mode = mode
        self.pitcher_cap = pitcher_cap
        self.inning_cap = inning_cap
        self._cum: dict = {}
        self._rows: dict = {}

    def __getstate__(self):
        d = self.__dict__.copy()
        d["_cum"] = {}
        d["_rows"] = {}
        return d

    # -- lookups -------------------------------------------------------------

    def outcome_cum(self, team: int, pitcher: Player, batter: Player, slot: int) -> list[float]:
        key = (team, pitcher.id, batter.id, slot)
        c = self._cum.get(key)
        if c is None:
            probs = self.models[team].outcome_probs(pitcher.id, pitcher.hand, batter.id, batter.hand, slot)
            c = np.cumsum(probs).tolist()
            c[-1] = 1.0
            self._cum[key] = c
        return c

    def transition_rows(self, team: int, batter: Player):
        key = (team, batter.id)
        r = self._rows.get(key)
        if r is None:
            r = self._rows[key] = self.models[team].transition_table(batter.id).sampling_rows()
        return r

    # -- play ----------------------------------------------------------------

    def plate_appearance(self, st: GameState, rng, outcome: int | None = None) -> int:
        """Play one plate appearance and apply end-of-half/game rules.
        Returns the runs scored."""
        top = st.top
        team = 0 if top else 1
        bat = st.away if top else st.home
        fld = st.home if top else st.away
        slot = bat.slot
        batter = bat.lineup[slot]
        if st.ibb:
            outcome = Outcome.WALK
            st.ibb = False
        elif outcome is None:
            outcome = bisect_right(self.outcome_cum(team, fld.pitcher, batter, slot), rng.random())
        cum, succ = self.transition_rows(team, batter)[(st.outs * 8 + st.bases) * 9 + outcome]
        nxt, runs = succ[bisect_right(cum, rng.random())] if len(cum) > 1 else succ[0]
        bat.runs += runs
        bat.slot = slot + 1 if slot < 8 else 0
        fld.faced += 1
        st.pa_count += 1
        st.stage = 0
        if nxt == TERMINAL:
            self._end_half(st, rng)
        else:
            st.outs, st.bases = divmod(nxt, 8)
            if not top and st.inning >= REGULATION_INNINGS and st.home.runs > st.away.runs:
                st.terminal = True
                st.winner = "home"
        return runs

    def _end_half(self, st: GameState, rng) -> None:
        home, away = st.home.runs, st.away.runs
        if st.top:
            if st.inning >= REGULATION_INNINGS and home > away:
                st.terminal, st.winner = True, "home"
                return
            st.top = False
        else:
            if st.inning >= REGULATION_INNINGS and home != away:
                st.terminal, st.winner = True, ("home" if home > away else "away")
                return
            if st.inning >= self.inning_cap:
                if self.mode == STRICT:
                    raise CappedGameError(f"game still tied after {st.inning} innings")
                st.terminal, st.capped = True, True
                st.winner = "home" if rng.random() < 0.5 else "away"
                return
            st.inning += 1
            st.top = True
        st.outs = 0
        st.bases = 2 if st.inning >= EXTRA_RUNNER_INNING else 0

    def simulate_half_inning(
        self,
        st: GameState,
        rng,
        policies=(None, None),
        outcomes: Iterator[int] | None = None,
        ctx_factory: Callable[[int], DecisionContext] | None = None,
        log: list | None = None,
    ) -> GameState:
        """Play until the current half-inning (or the game) ends."""
        if st.terminal:
            raise ValueError("game is already over")
        inning, top = st.inning, st.top
        while not st.terminal and st.inning == inning and st.top == top:
            self.offer_decisions(st, policies, ctx_factory, log)
            forced = next(outcomes) if outcomes is not None else None
            self.plate_appearance(st, rng, forced)
        return st

    def offer_decisions(self, st: GameState, policies, ctx_factory=None, log=None) -> None:
        """Run the pre-plate-appearance decision protocol.  ``policies`` is
        ``(away_policy, home_policy)``."""
        bat_pol = policies[0] if st.top else policies[1]
        fld_pol = policies[1] if st.top else policies[0]
        if self.pitcher_cap is not None:
            fld = st.fielding
            if fld.faced >= self.pitcher_cap and fld.bullpen:
                forced = Decision("ChangePitcher", fld.bullpen[0].id)
                apply_decision(st, FIELDING, forced)
                if log is not None:
                    log.append(DecisionRecord(st.inning, st.half, FIELDING, st.team_for(FIELDING), forced, alternatives=0, forced=True))
        if _is_passive(bat_pol) and _is_passive(fld_pol):
            return
        st.stage = 0
        self._ask(bat_pol, st, BATTING, ctx_factory, log)
        st.stage = 1
        acted = self._ask(fld_pol, st, FIELDING, ctx_factory, log)
        if acted:
            st.stage = 2
            self._ask(bat_pol, st, BATTING, ctx_factory, log)
        st.stage = 3

    def _ask(self, policy, st: GameState, side: str, ctx_factory, log) -> bool:
        if _is_passive(policy):
            return False
        ctx = ctx_factory() if ctx_factory is not None else None
        choice = policy.decide(st, side, ctx)
        if isinstance(choice, Decision):
            choice = Choice(choice)
        if not is_legal(st, side, choice.decision):
            raise ProtocolError(f"policy {policy!r} returned illegal decision {choice.decision} for the {side} side")
        record = DecisionRecord(
            st.inning, st.half, side, st.team_for(side), choice.decision, choice.value, choice.se, choice.considered
        )
        apply_decision(st, side, choice.decision)
        if log is not None:
            log.append(record)
        return choice.decision.is_action

    def finish(self, st: GameState, rng, policies=(None, None), ctx_factory=None, log=None) -> GameState:
        """Play ``st`` to the end of the game."""
        if _is_passive(policies[0]) and _is_passive(policies[1]) and self.pitcher_cap is None:
            pa = self.plate_appearance
            while not st.terminal:
                pa(st, rng)
            return st
        while not st.terminal:
            self.offer_decisions(st, policies, ctx_factory, log)
            self.plate_appearance(st, rng)
        return st


def result_of(st: GameState, log: list | None = None) -> GameResult:
    return GameResult(
        winner=st.winner,
        home_runs=st.home.runs,
        away_runs=st.away.runs,
        innings=st.inning,
        capped=st.capped,
        decisions=list(log or []),
        plate_appearances=st.pa_count,
    )


def play_game(
    engine: GameEngine,
    home: Roster,
    away: Roster,
    seed: int,
    game_index: int = 0,
    policy_home=None,
    policy_away=None,
) -> GameResult:
    st = GameState.start(home, away)
    rng = game_stream(seed, game_index)
    log: list[DecisionRecord] = []
    offers = iter(range(1 << 62))
    factory = lambda: DecisionContext(engine, seed, game_index, next(offers))  # noqa: E731
    engine.finish(st, rng, (policy_away, policy_home), factory, log)
    return result_of(st, log)


def simulate_game(
    home: Roster,
    away: Roster,
    model_home,
    model_away,
    policy_home=None,
    policy_away=None,
    seed: int = 0,
    game_index: int = 0,
    mode: str = TOURNAMENT,
    pitcher_cap: int | None = None,
) -> GameResult:
    """Simulate one game; ``(seed, game_index)`` determines the result."""
    engine = GameEngine(model_away, model_home, mode=mode, pitcher_cap=pitcher_cap)
    return play_game(engine, home, away, seed, game_index, policy_home, policy_away)


# ---------------------------------------------------------------------------
# many games
# ---------------------------------------------------------------------------


@dataclass
class GameSpec:
    home: Roster
    away: Roster
    model_home: object
    model_away: object
    policy_home: object = None
    policy_away: object = None
    mode: str = TOURNAMENT
    pitcher_cap: int | None = None

    def engine(self) -> GameEngine:
        return GameEngine(self.model_away, self.model_home, mode=self.mode, pitcher_cap=self.pitcher_cap)


@dataclass(frozen=True)
class GameSummary:
    game_index: int
    winner: str
    home_runs: int
    away_runs: int
    innings: int
    capped: bool


SUMMARY_HEADER = ("game_index", "winner", "home_runs", "away_runs", "innings", "capped")


@dataclass
class ManyResult:
    home_wins: int
    away_wins: int
    games: list[GameSummary]
    decisions: dict[int, list[DecisionRecord]] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.home_wins + self.away_wins

    @property
    def home_win_rate(self) -> float:
        return self.home_wins / self.n

    def summary_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for g in self.games:
            w.writerow([g.game_index, g.winner, g.home_runs, g.away_runs, g.innings, int(g.capped)])
        return out.getvalue()


_WORKER_SPEC: GameSpec | None = None
_WORKER_ENGINE: GameEngine | None = None


def _init_worker(spec: GameSpec) -> None:
    global _WORKER_SPEC, _WORKER_ENGINE
    _WORKER_SPEC = spec
    _WORKER_ENGINE = spec.engine()


def _run_chunk(args):
    start, stop, seed, keep_logs = args
    spec, engine = _WORKER_SPEC, _WORKER_ENGINE
    games, logs = [], {}
    for i in range(start, stop):
        r = play_game(engine, spec.home, spec.away, seed, i, spec.policy_home, spec.policy_away)
        games.append(GameSummary(i, r.winner, r.home_runs, r.away_runs, r.innings, r.capped))
        if keep_logs and r.decisions:
            logs[i] = r.decisions
    return games, logs


def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(n / parts))
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def simulate_many(
    n: int,
    spec: GameSpec,
    seed: int,
    workers: int = 1,
    keep_logs: bool = False,
) -> ManyResult:
    """Simulate ``n`` games; game ``i`` uses stream ``(seed, i)``, so the result
    does not depend on ``workers``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if workers <= 1:
        _init_worker(spec)
        games, logs = _run_chunk((0, n, seed, keep_logs))
    else:
        games, logs = [], {}
        jobs = [(a, b, seed, keep_logs) for a, b in _chunks(n, workers * 4)]
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(spec,)) as pool:
            for g, lg in pool.map(_run_chunk, jobs):
                games.extend(g)
                logs.update(lg)
    games.sort(key=lambda g: g.game_index)
    home = sum(g.winner == "home" for g in games)
    return ManyResult(home, len(games) - home, games, logs)
