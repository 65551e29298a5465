"""Decision policies.

``Passive`` never acts.  ``Scripted`` replays a decision log.
``Equilibrium`` looks one decision ahead: every candidate is scored by the
deciding team's win probability after the opponent's best immediate reply
(itself chosen with no further lookahead), with passive play beyond.  Win
probabilities come from Monte Carlo rollouts or, when no pitcher cap is in
force, from the exact passive-play chain in :mod:`matchupsim.winexp`.
"""

from __future__ import annotations

import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decisions import (
    BATTING,
    CHANGE_PITCHER,
    FIELDING,
    PINCH_HIT,
    Choice,
    Decision,
    PASSIVE_CHOICE,
    ProtocolError,
    apply_decision,
    legal_decisions,
)
from .gamesim import (
    TOURNAMENT,
    DecisionRecord,
    GameEngine,
    GameSpec,
    ManyResult,
    UniformStream,
    simulate_many,
)
from .events import skip_comments
from .winexp import WinExpectancy

__all__ = [
    "Passive",
    "Scripted",
    "Equilibrium",
    "ManagerConfig",
    "ValueEstimate",
    "legal_decisions",
    "candidate_decisions",
    "estimate_value",
    "decide",
    "play_policy_match",
    "make_policy",
    "read_decision_log",
]

ROLLOUT = "rollout"
EXACT = "exact"


@dataclass(frozen=True)
class ValueEstimate:
    value: float
    rollouts: int
    se: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"win probability out of range: {self.value}")


@dataclass(frozen=True)
class ManagerConfig:
    rollouts: int = 2000
    tie_epsilon: float = 0.005
    seed: int = 0
    evaluator: str = ROLLOUT
    max_pitchers: int = 3
    max_bench: int = 2
    depth: int = 1

    def __post_init__(self):
        if self.evaluator not in (ROLLOUT, EXACT):
            raise ValueError(f"evaluator must be {ROLLOUT!r} or {EXACT!r}")
        if self.rollouts < 1 or self.depth not in (0, 1) or self.tie_epsilon < 0:
            raise ValueError("need rollouts >= 1, depth 0 or 1 and tie_epsilon >= 0")


class Passive:
    passive = True

    def decide(self, state, side, ctx=None) -> Choice:
        return PASSIVE_CHOICE

    def __repr__(self):
        return "Passive()"


class Scripted:
    """Replays one team's logged decisions in order.

    Forced pitcher changes in the log (``alternatives == 0``) are skipped
    because the engine repeats them on its own.
    """

    passive = False

    def __init__(self, records: Sequence[DecisionRecord], team: str):
        self.team = team
        self._records = [r for r in records if r.team == team and not r.forced]
        self._pos = 0

    def reset(self) -> None:
        self._pos = 0

    def decide(self, state, side, ctx=None) -> Choice:
        if self._pos >= len(self._records):
            return PASSIVE_CHOICE
        r = self._records[self._pos]
        if (r.inning, r.half, r.side) != (state.inning, state.half, side):
            raise ProtocolError(
                f"script expects {r.side} decision in {r.half} {r.inning}, asked for {side} in {state.half} {state.inning}"
            )
        self._pos += 1
        d = r.decision
        if d.kind == PINCH_HIT and d.slot is None:
            # the CSV log has no slot column; a pinch hitter always bats now
            d = Decision(PINCH_HIT, d.player_id, state.batting.slot)
        return Choice(d, r.value_mean, r.value_se, r.alternatives)

    def __repr__(self):
        return f"Scripted({self.team}, {len(self._records)} decisions)"


def read_decision_log(text: str) -> list[DecisionRecord]:
    """Parse a decision-log CSV back into records."""
    rows = list(csv.DictReader(skip_comments(io.StringIO(text))))
    out = []
    for row in rows:
        half, side = row["half"], row["side"]
        team = ("away" if half == "top" else "home") if side == BATTING else ("home" if half == "top" else "away")
        pid = row["player_id"] or None
        kind = row["decision"]
        num = lambda s: float(s) if s else math.nan  # noqa: E731
        n = int(row["alternatives_considered"])
        out.append(
            DecisionRecord(
                int(row["inning"]), half, side, team, Decision(kind, pid), num(row["value_mean"]), num(row["value_se"]), n, n == 0
            )
        )
    return out


def candidate_decisions(state, side: str, max_pitchers: int = 3, max_bench: int = 2) -> list[Decision]:
    """Legal decisions after pruning to the next ``max_pitchers`` relievers in
    roster order and the first ``max_bench`` bench batters.  NoAction first."""
    out = []
    pitchers = bench = 0
    for d in legal_decisions(state, side):
        if d.kind == CHANGE_PITCHER:
            pitchers += 1
            if pitchers > max_pitchers:
                continue
        elif d.kind == PINCH_HIT:
            bench += 1
            if bench > max_bench:
                continue
        out.append(d)
    return out


def _stream(path: tuple) -> UniformStream:
    return UniformStream(np.random.SeedSequence([int(x) for x in path]))


def estimate_value(
    state,
    side: str,
    decision: Decision,
    model=None,
    rollouts: int = 2000,
    seed=0,
    engine: GameEngine | None = None,
    exact: WinExpectancy | None = None,
) -> ValueEstimate:
    """Win probability for the team on ``side`` after ``decision``, with
    passive play for the rest of the game.

    Rollout ``k`` draws from the stream ``(*seed, k)``; pass ``exact`` to
    use the passive-play chain instead (no sampling, zero standard error).
    """
    team = state.team_for(side)
    if state.terminal:
        return ValueEstimate(1.0 if state.winner == team else 0.0, 0, 0.0)
    s = state.copy()
    apply_decision(s, side, decision)
    return _value_after(s, team, rollouts, seed, model, engine, exact)


def _value_after(s, team, rollouts, seed, model, engine, exact) -> ValueEstimate:
    if s.terminal:
        return ValueEstimate(1.0 if s.winner == team else 0.0, 0, 0.0)
    if exact is not None:
        v = exact.home_win(s)
        v = min(1.0, max(0.0, v if team == "home" else 1.0 - v))
        return ValueEstimate(v, 0, 0.0)
    if engine is None:
        engine = GameEngine(model, model)
    base = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    wins = 0
    for k in range(rollouts):
        s2 = s.copy()
        engine.finish(s2, _stream(base + (k,)))
        wins += s2.winner == team
    p = wins / rollouts
    return ValueEstimate(p, rollouts, math.sqrt(p * (1 - p) / rollouts))


class _Evaluator:
    """Shared machinery for one model: engines for rollouts and the exact chain."""

    def __init__(self, model, config: ManagerConfig):
        self.model = model
        self.config = config
        self.exact = WinExpectancy(model) if config.evaluator == EXACT else None
        self._engines: dict = {}

    def engine(self, mode: str, cap) -> GameEngine:
        key = (mode, cap)
        e = self._engines.get(key)
        if e is None:
            e = self._engines[key] = GameEngine(self.model, self.model, mode=mode, pitcher_cap=cap)
        return e

    def value(self, s, team: str, seed: tuple, mode: str, cap) -> ValueEstimate:
        exact = self.exact if cap is None else None
        engine = None if exact is not None else self.engine(mode, cap)
        return _value_after(s, team, self.config.rollouts, seed, self.model, engine, exact)


def _other(side: str) -> str:
    return FIELDING if side == BATTING else BATTING


def _opponent_offered(stage: int, side: str, decision: Decision) -> bool:
    """Does the opponent get another offer this plate appearance?"""
    if stage == 0:
        return True  # batting team first; the fielding team is next
    if stage == 1:
        return decision.is_action  # fielding acted -> batting re-offer
    return False


def _argmax(values: list[float], eps: float) -> int:
    best = int(np.argmax(values))
    return 0 if values[0] >= values[best] - eps else best


def decide(state, side: str, model, config: ManagerConfig = ManagerConfig(), seed: tuple = (), _ev=None, mode=TOURNAMENT, cap=None) -> Choice:
    """Choose a decision for ``side`` by one-step lookahead.

    Returns a :class:`Choice` carrying the chosen decision's value, its
    standard error and how many candidates were evaluated.
    """
    if state.terminal:
        raise ProtocolError("no decisions in a finished game")
    ev = _ev if _ev is not None else _Evaluator(model, config)
    cands = candidate_decisions(state, side, config.max_pitchers, config.max_bench)
    if len(cands) == 1:
        return Choice(cands[0], math.nan, math.nan, 1)
    team = state.team_for(side)
    root = (config.seed, *seed)
    estimates = []
    for i, c in enumerate(cands):
        s = state.copy()
        apply_decision(s, side, c)
        if config.depth >= 1 and not s.terminal and _opponent_offered(state.stage, side, c):
            s = _best_reply(s, _other(side), config, ev, root + (i,), mode, cap)
        estimates.append(ev.value(s, team, root + (i, 0), mode, cap))
    k = _argmax([e.value for e in estimates], config.tie_epsilon)
    return Choice(cands[k], estimates[k].value, estimates[k].se, len(cands))


def _best_reply(state, side, config, ev, root, mode, cap):
    """Apply the opponent's best depth-0 reply to ``state`` and return it."""
    cands = candidate_decisions(state, side, config.max_pitchers, config.max_bench)
    if len(cands) == 1:
        return state
    team = state.team_for(side)
    values, states = [], []
    for j, c in enumerate(cands):
        s = state.copy()
        apply_decision(s, side, c)
        states.append(s)
        values.append(ev.value(s, team, root + (j + 1,), mode, cap).value)
    return states[_argmax(values, config.tie_epsilon)]


def _state_key(st, side):
    def team(t):
        return (tuple(p.id for p in t.lineup), t.slot, t.pitcher.id, tuple(p.id for p in t.bullpen), tuple(p.id for p in t.bench))

    return (side, st.stage, st.inning, st.top, st.outs, st.bases, st.home.runs - st.away.runs, st.ibb, team(st.away), team(st.home))


class Equilibrium:
    """One-step lookahead manager using its own model for both teams."""

    passive = False

    def __init__(self, model, config: ManagerConfig = ManagerConfig(), cache_size: int = 200_000):
        self.model = model
        self.config = config
        self._ev = _Evaluator(model, config)
        self._cache: OrderedDict = OrderedDict()
        self.cache_size = cache_size

    def __repr__(self):
        return f"Equilibrium({self.model.variant}, evaluator={self.config.evaluator})"

    def __getstate__(self):
        d = self.__dict__.copy()
        d["_cache"] = OrderedDict()
        d["_ev"] = _Evaluator(self.model, self.config)
        return d

    def decide(self, state, side, ctx=None) -> Choice:
        mode = ctx.engine.mode if ctx is not None else TOURNAMENT
        cap = ctx.engine.pitcher_cap if ctx is not None else None
        cacheable = self.config.evaluator == EXACT and cap is None
        if cacheable:
            key = _state_key(state, side)
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        seed = (ctx.seed, ctx.game_index, ctx.offer) if ctx is not None else ()
        choice = decide(state, side, self.model, self.config, seed, self._ev, mode, cap)
        if cacheable:
            self._cache[key] = choice
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return choice


def make_policy(name: str, model=None, config: ManagerConfig | None = None):
    """Build a policy by name: ``passive`` or ``equilibrium``."""
    key = name.strip().lower()
    if key == "passive":
        return Passive()
    if key == "equilibrium":
        if model is None:
            raise ValueError("the equilibrium policy needs a model")
        return Equilibrium(model, config or ManagerConfig())
    raise ValueError(f"unknown policy {name!r}; expected 'passive' or 'equilibrium'")


def play_policy_match(spec: GameSpec, n: int, seed: int, workers: int = 1, keep_logs: bool = False) -> ManyResult:
    """Play ``n`` games of ``spec`` (rosters, models and policies)."""
    return simulate_many(n, spec, seed, workers=workers, keep_logs=keep_logs)
