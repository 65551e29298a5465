"""Managerial decisions and the rules for when they are legal."""

from __future__ import annotations

import math
from dataclasses import dataclass

NO_ACTION = "NoAction"
CHANGE_PITCHER = "ChangePitcher"
PINCH_HIT = "PinchHit"
INTENTIONAL_WALK = "IntentionalWalk"
KINDS = (NO_ACTION, CHANGE_PITCHER, PINCH_HIT, INTENTIONAL_WALK)

BATTING = "batting"
FIELDING = "fielding"


class ProtocolError(RuntimeError):
    """A policy returned a decision that is not legal in the current state."""


@dataclass(frozen=True)
class Decision:
    kind: str
    player_id: str | None = None
    slot: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown decision kind {self.kind!r}")

    def __str__(self):
        if self.kind == CHANGE_PITCHER:
            return f"ChangePitcher({self.player_id})"
        if self.kind == PINCH_HIT:
            if self.slot is None:
                return f"PinchHit({self.player_id})"
            return f"PinchHit({self.player_id}, slot {self.slot + 1})"
        return self.kind

    @property
    def is_action(self) -> bool:
        return self.kind != NO_ACTION


NoAction = Decision(NO_ACTION)
IntentionalWalk = Decision(INTENTIONAL_WALK)


def ChangePitcher(pitcher_id: str) -> Decision:
    return Decision(CHANGE_PITCHER, pitcher_id)


def PinchHit(batter_id: str, slot: int) -> Decision:
    return Decision(PINCH_HIT, batter_id, slot)


@dataclass(frozen=True)
class Choice:
    """A policy's answer: the decision plus what it believed about it."""

    decision: Decision
    value: float = math.nan
    se: float = math.nan
    considered: int = 1


PASSIVE_CHOICE = Choice(NoAction)


def legal_decisions(state, side: str) -> list[Decision]:
    """All legal decisions for ``side`` ("batting" or "fielding").

    NoAction is always first.  The fielding team may bring in any unused
    pitcher or walk the batter when first base is open; the batting team may
    send any bench player up for the current slot.
    """
    if state.terminal:
        raise ProtocolError("no decisions in a finished game")
    out = [NoAction]
    if side == FIELDING:
        out.extend(ChangePitcher(p.id) for p in state.fielding.bullpen)
        if not state.bases & 1 and not state.ibb:
            out.append(IntentionalWalk)
    elif side == BATTING:
        slot = state.batting.slot
        out.extend(PinchHit(b.id, slot) for b in state.batting.bench)
    else:
        raise ValueError(f"side must be 'batting' or 'fielding', got {side!r}")
    return out


def is_legal(state, side: str, decision: Decision) -> bool:
    if decision.kind == NO_ACTION:
        return True
    if decision.kind == CHANGE_PITCHER:
        return side == FIELDING and any(p.id == decision.player_id for p in state.fielding.bullpen)
    if decision.kind == INTENTIONAL_WALK:
        return side == FIELDING and not state.bases & 1 and not state.ibb
    if decision.kind == PINCH_HIT:
        return (
            side == BATTING
            and decision.slot == state.batting.slot
            and any(b.id == decision.player_id for b in state.batting.bench)
        )
    return False


def apply_decision(state, side: str, decision: Decision) -> None:
    """Mutate ``state`` by ``decision``; raises :class:`ProtocolError` if illegal."""
    if not is_legal(state, side, decision):
        raise ProtocolError(f"illegal decision {decision} for the {side} side")
    if decision.kind == CHANGE_PITCHER:
        team = state.fielding
        new = next(p for p in team.bullpen if p.id == decision.player_id)
        team.removed = team.removed | {team.pitcher.id}
        team.bullpen = tuple(p for p in team.bullpen if p.id != new.id)
        team.pitcher = new
        team.faced = 0
    elif decision.kind == PINCH_HIT:
        team = state.batting
        new = next(b for b in team.bench if b.id == decision.player_id)
        old = team.lineup[decision.slot]
        team.removed = team.removed | {old.id}
        team.bench = tuple(b for b in team.bench if b.id != new.id)
        team.lineup = team.lineup[: decision.slot] + (new,) + team.lineup[decision.slot + 1 :]
    elif decision.kind == INTENTIONAL_WALK:
        state.ibb = True
