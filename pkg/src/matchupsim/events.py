"""Plate-appearance records, CSV ingestion and empirical rate tables.

The canonical outcome index is fixed::

    0 K    strikeout        5 1B   single
    1 BB   walk             6 2B   double
    2 HBP  hit by pitch     7 3B   triple
    3 GO   ground out       8 HR   home run
    4 FO   fly out

Base occupancy is a 3-bit mask (bit 0 = first, bit 1 = second, bit 2 =
third).  A base-out state has a flat index ``outs * 8 + bases`` in 0..23 and
the three-out terminal state uses index 24.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field
from enum import IntEnum
from typing import IO, Iterable, Sequence

import numpy as np

N_OUTCOMES = 9
N_STATES = 24
TERMINAL = 24

SCHEMA_V1 = (
    "date",
    "pitcher_id",
    "batter_id",
    "pitcher_hand",
    "batter_hand",
    "batting_order",
    "outcome",
    "pre_outs",
    "pre_bases",
    "post_outs",
    "post_bases",
    "runs_scored",
)


class Outcome(IntEnum):
    STRIKEOUT = 0
    WALK = 1
    HIT_BY_PITCH = 2
    GROUND_OUT = 3
    FLY_OUT = 4
    SINGLE = 5
    DOUBLE = 6
    TRIPLE = 7
    HOME_RUN = 8

    @property
    def code(self) -> str:
        return OUTCOME_CODES[self]

    @classmethod
    def from_code(cls, code: str) -> Outcome:
        return _CODE_TO_OUTCOME[code]


OUTCOME_CODES = ("K", "BB", "HBP", "GO", "FO", "1B", "2B", "3B", "HR")
_CODE_TO_OUTCOME = {c: Outcome(i) for i, c in enumerate(OUTCOME_CODES)}

# Non-canonical event codes and the canonical outcome they are folded into.
# Reached-on-error and fielder's choice count as the batted-ball out the
# fielders should have made; interference is treated like a hit batter.
OUTCOME_ALIASES = {
    "SO": "K",
    "KS": "K",
    "STRIKEOUT": "K",
    "IBB": "BB",
    "UBB": "BB",
    "WALK": "BB",
    "HP": "HBP",
    "CI": "HBP",
    "INT": "HBP",
    "E": "GO",
    "ROE": "GO",
    "FC": "GO",
    "GDP": "GO",
    "GIDP": "GO",
    "DP": "GO",
    "SH": "GO",
    "SAC": "GO",
    "LO": "FO",
    "PO": "FO",
    "SF": "FO",
    "S": "1B",
    "D": "2B",
    "T": "3B",
}


class SchemaError(ValueError):
    """The input is missing a required column or is not a CSV table."""


class InsufficientDataError(ValueError):
    """A rate or prior cannot be estimated from the data supplied."""


@dataclass(frozen=True, order=True)
class BaseOutState:
    outs: int
    bases: int = 0

    def __post_init__(self):
        if not 0 <= self.outs <= 3:
            raise ValueError(f"outs must be in 0..3, got {self.outs}")
        if not 0 <= self.bases <= 7:
            raise ValueError(f"bases mask must be in 0..7, got {self.bases}")
        if self.outs == 3 and self.bases:
            raise ValueError("terminal state carries no runners")

    @property
    def terminal(self) -> bool:
        return self.outs == 3

    @property
    def index(self) -> int:
        return TERMINAL if self.outs == 3 else self.outs * 8 + self.bases

    @property
    def runners(self) -> int:
        return bin(self.bases).count("1")

    @classmethod
    def from_index(cls, idx: int) -> BaseOutState:
        if idx == TERMINAL:
            return cls(3, 0)
        return cls(idx // 8, idx % 8)

    def bases_string(self) -> str:
        return bases_to_string(self.bases)


def bases_to_string(mask: int) -> str:
    return "".join("1" if mask >> k & 1 else "0" for k in range(3))


def bases_from_string(text: str) -> int:
    if len(text) != 3 or set(text) - {"0", "1"}:
        raise ValueError(f"bases must be a 3-character 0/1 string, got {text!r}")
    return sum(1 << k for k, ch in enumerate(text) if ch == "1")


def runner_count(mask: int) -> int:
    return (mask & 1) + (mask >> 1 & 1) + (mask >> 2 & 1)


def stranded_runners(pre: int, post: int, runs: int) -> int:
    """Runners left on base when a transition from flat state ``pre`` ends the
    half-inning (``post == TERMINAL``); for other transitions this is the
    conservation residual and must be zero."""
    pre_outs, pre_bases = divmod(pre, 8)
    if post == TERMINAL:
        return runner_count(pre_bases) + 1 - (3 - pre_outs) - runs
    post_outs, post_bases = divmod(post, 8)
    return runner_count(pre_bases) + 1 - runner_count(post_bases) - (post_outs - pre_outs) - runs


def transition_conserves(pre: int, post: int, runs: int) -> bool:
    """Runs-conservation check for a single plate-appearance transition.

    Every runner on base before the plate appearance, plus the batter, ends up
    on base, out, or across the plate.  When the half-inning ends, runners may
    also be stranded, so the residual lies in 0..3 instead of being zero.
    """
    if not 0 <= runs <= 4 or pre == TERMINAL:
        return False
    if post != TERMINAL and post // 8 < pre // 8:
        return False
    residual = stranded_runners(pre, post, runs)
    if post == TERMINAL:
        return 0 <= residual <= 3
    return residual == 0


def same_hand(pitcher_hand: str, batter_hand: str) -> int:
    """Matchup flag: 1 for a same-handed matchup, 0 for opposite hands."""
    return int(pitcher_hand == batter_hand)


@dataclass(frozen=True)
class PlateAppearanceRecord:
    date: dt.date
    pitcher_id: str
    batter_id: str
    pitcher_hand: str
    batter_hand: str
    batting_order: int
    outcome: Outcome
    pre_state: BaseOutState
    post_state: BaseOutState
    runs_scored: int

    @property
    def h(self) -> int:
        return same_hand(self.pitcher_hand, self.batter_hand)

    def conserves_runs(self) -> bool:
        return transition_conserves(self.pre_state.index, self.post_state.index, self.runs_scored)


@dataclass(frozen=True)
class RowError:
    row: int
    reason: str

    def __str__(self):
        return f"row {self.row}: {self.reason}"


@dataclass
class ParseResult:
    records: list[PlateAppearanceRecord] = field(default_factory=list)
    errors: list[RowError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _row_to_record(row: dict[str, str], map_aliases: bool) -> PlateAppearanceRecord:
    try:
        date = dt.date.fromisoformat(row["date"])
    except ValueError:
        raise ValueError(f"invalid date {row['date']!r}") from None
    for key in ("pitcher_id", "batter_id"):
        if not row[key]:
            raise ValueError(f"empty {key}")
    for key in ("pitcher_hand", "batter_hand"):
        if row[key] not in ("L", "R"):
            raise ValueError(f"invalid {key} {row[key]!r}")
    try:
        order = int(row["batting_order"])
    except ValueError:
        raise ValueError(f"invalid batting_order {row['batting_order']!r}") from None
    if not 1 <= order <= 9:
        raise ValueError(f"batting_order {order} outside 1..9")

    code = row["outcome"]
    if code not in _CODE_TO_OUTCOME:
        alias = OUTCOME_ALIASES.get(code.upper()) if map_aliases else None
        if alias is None:
            raise ValueError(f"invalid outcome {code!r}")
        code = alias
    outcome = Outcome.from_code(code)

    try:
        pre_outs = int(row["pre_outs"])
        pre = BaseOutState(pre_outs, bases_from_string(row["pre_bases"]))
        if pre.terminal:
            raise ValueError
    except ValueError:
        raise ValueError("invalid pre_state") from None
    try:
        post = BaseOutState(int(row["post_outs"]), bases_from_string(row["post_bases"]))
    except ValueError:
        raise ValueError("invalid post_state") from None
    try:
        runs = int(row["runs_scored"])
    except ValueError:
        raise ValueError(f"invalid runs_scored {row['runs_scored']!r}") from None
    if runs < 0:
        raise ValueError("negative runs_scored")

    record = PlateAppearanceRecord(
        date=date,
        pitcher_id=row["pitcher_id"],
        batter_id=row["batter_id"],
        pitcher_hand=row["pitcher_hand"],
        batter_hand=row["batter_hand"],
        batting_order=order,
        outcome=outcome,
        pre_state=pre,
        post_state=post,
        runs_scored=runs,
    )
    if not record.conserves_runs():
        raise ValueError("runs conservation violated")
    return record


def skip_comments(lines: Iterable[str]) -> Iterable[str]:
    """Drop leading ``#`` lines (provenance headers written by the CLI)."""
    it = iter(lines)
    for line in it:
        if not line.startswith("#"):
            yield line
            break
    yield from it


def parse_event_log(
    source: IO[bytes] | IO[str] | bytes | str,
    format: str = "v1",
    map_aliases: bool = True,
) -> ParseResult:
    """Parse a plate-appearance CSV into validated records.

    Rows that fail validation are reported in ``errors`` with their 1-based
    data-row number; they never abort the parse.  A missing column raises
    :class:`SchemaError`.  Non-canonical outcome codes are folded through
    :data:`OUTCOME_ALIASES` unless ``map_aliases`` is false.
    """
    if format != "v1":
        raise SchemaError(f"unknown schema version {format!r}")
    if isinstance(source, bytes):
        text = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        text = io.StringIO(source)
    elif isinstance(source, io.TextIOBase):
        text = source
    else:
        text = io.TextIOWrapper(source, encoding="utf-8", newline="")

    reader = csv.DictReader(skip_comments(text))
    if reader.fieldnames is None:
        raise SchemaError("empty input: no header row")
    missing = [c for c in SCHEMA_V1 if c not in reader.fieldnames]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")

    result = ParseResult()
    for rownum, row in enumerate(reader, start=1):
        if None in row or any(row[c] is None for c in SCHEMA_V1):
            result.errors.append(RowError(rownum, "wrong number of fields"))
            continue
        try:
            result.records.append(_row_to_record(row, map_aliases))
        except ValueError as exc:
            result.errors.append(RowError(rownum, str(exc)))
    return result


def read_event_log(path, **kwargs) -> ParseResult:
    with open(path, "rb") as fh:
        return parse_event_log(fh.read(), **kwargs)


def serialize_event_log(records: Iterable[PlateAppearanceRecord]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SCHEMA_V1)
    for r in records:
        writer.writerow(
            [
                r.date.isoformat(),
                r.pitcher_id,
                r.batter_id,
                r.pitcher_hand,
                r.batter_hand,
                r.batting_order,
                r.outcome.code,
                r.pre_state.outs,
                r.pre_state.bases_string(),
                r.post_state.outs,
                r.post_state.bases_string(),
                r.runs_scored,
            ]
        )
    return out.getvalue().encode("utf-8")


def outcome_counts(records: Sequence[PlateAppearanceRecord]) -> np.ndarray:
    """Counts indexed ``[h, outcome]``."""
    counts = np.zeros((2, N_OUTCOMES))
    for r in records:
        counts[r.h, r.outcome] += 1
    return counts


def league_rates(records: Sequence[PlateAppearanceRecord]) -> np.ndarray:
    """League outcome frequencies per handedness flag, shape ``(2, 9)``."""
    counts = outcome_counts(records)
    totals = counts.sum(axis=1)
    for h, name in ((0, "opposite-hand (h=0)"), (1, "same-hand (h=1)")):
        if totals[h] == 0:
            raise InsufficientDataError(f"no plate appearances in the {name} stratum")
    return counts / totals[:, None]


def batting_order_rates(
    records: Sequence[PlateAppearanceRecord],
    pseudo_count: float = 100.0,
    league: np.ndarray | None = None,
    fallback: bool = True,
) -> np.ndarray:
    """Outcome frequencies per batting-order slot and handedness, ``(9, 2, 9)``.

    Each stratum is shrunk toward the league vector with an additive
    pseudo-count: ``(n * freq + k * c) / (n + k)``.  With ``pseudo_count=0``
    the raw frequencies are returned.
    """
    if not records:
        raise InsufficientDataError("no plate appearances")
    if league is None:
        league = league_rates(records)
    counts = np.zeros((9, 2, N_OUTCOMES))
    for r in records:
        counts[r.batting_order - 1, r.h, r.outcome] += 1
    n = counts.sum(axis=2, keepdims=True)
    empty = n[..., 0] == 0
    if empty.any() and not fallback:
        m, h = np.argwhere(empty)[0]
        raise InsufficientDataError(f"no plate appearances for batting order {m + 1}, h={h}")
    denom = n + pseudo_count
    with np.errstate(invalid="ignore", divide="ignore"):
        rates = (counts + pseudo_count * league[None, :, :]) / denom
    rates[empty] = np.broadcast_to(league, (9, 2, N_OUTCOMES))[empty]
    return rates
