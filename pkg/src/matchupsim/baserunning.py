"""Base-running transition tables and steal-rate stratification.

A :class:`TransitionTable` gives, for each of the 24 base-out states and nine
outcomes, a distribution over successor states (24 in-play states plus the
terminal) and runs scored (0..4).  Batter-specific tables are convex
mixtures of a handful of group tables, with weights taken from the batter's
beta posterior on his stolen-base rate.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .events import (
    N_OUTCOMES,
    N_STATES,
    TERMINAL,
    BaseOutState,
    InsufficientDataError,
    Outcome,
    PlateAppearanceRecord,
    SchemaError,
    skip_comments,
    transition_conserves,
)
from .outcome_model import ParameterError
from .stats import beta_from_moments

N_SUCC = N_STATES + 1
MAX_RUNS = 4
FORCED_OUTCOMES = (Outcome.STRIKEOUT, Outcome.WALK, Outcome.HIT_BY_PITCH, Outcome.HOME_RUN)


def _advance_all(bases: int, k: int) -> tuple[int, int]:
    """Every runner and the batter move up ``k`` bases."""
    runs = 0
    new = 0
    for base in range(3):
        if bases >> base & 1:
            dest = base + k
            if dest >= 3:
                runs += 1
            else:
                new |= 1 << dest
    if k >= 4:
        runs += 1
    else:
        new |= 1 << (k - 1)
    return new, runs


def forced_walk(bases: int) -> tuple[int, int]:
    """Bases and runs after a walk: only forced runners move."""
    if not bases & 1:
        return bases | 1, 0
    if not bases & 2:
        return bases | 3, 0
    if not bases & 4:
        return 7, 0
    return 7, 1


def default_successor(state: int, outcome: int) -> tuple[int, int]:
    """Deterministic textbook advancement, used where the data are silent.

    Outs retire only the batter and runners hold; hits advance every runner
    by the number of bases the batter gained.
    """
    outs, bases = divmod(state, 8)
    if outcome in (Outcome.STRIKEOUT, Outcome.GROUND_OUT, Outcome.FLY_OUT):
        if outs == 2:
            return TERMINAL, 0
        return (outs + 1) * 8 + bases, 0
    if outcome in (Outcome.WALK, Outcome.HIT_BY_PITCH):
        new, runs = forced_walk(bases)
        return outs * 8 + new, runs
    k = {Outcome.SINGLE: 1, Outcome.DOUBLE: 2, Outcome.TRIPLE: 3, Outcome.HOME_RUN: 4}[Outcome(outcome)]
    new, runs = _advance_all(bases, k)
    return outs * 8 + new, runs


def _default_probs() -> np.ndarray:
    probs = np.zeros((N_STATES, N_OUTCOMES, N_SUCC, MAX_RUNS + 1))
    for s in range(N_STATES):
        for o in range(N_OUTCOMES):
            succ, runs = default_successor(s, o)
            probs[s, o, succ, runs] = 1.0
    return probs


_DEFAULT = _default_probs()


class TransitionTable:
    """Successor distributions for all 216 (state, outcome) rows.

    ``probs`` has shape ``(24, 9, 25, 5)``: pre-state, outcome, successor
    state (24 = terminal) and runs scored.
    """

    def __init__(self, probs: np.ndarray, validate: bool = True):
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (N_STATES, N_OUTCOMES, N_SUCC, MAX_RUNS + 1):
            raise ParameterError(f"transition table has shape {probs.shape}")
        self.probs = probs
        self.probs.setflags(write=False)
        self._rows = None
        self._expected = None
        if validate:
            self.validate()

    def __eq__(self, other):
        return isinstance(other, TransitionTable) and np.array_equal(self.probs, other.probs)

    __hash__ = None

    @classmethod
    def default(cls) -> TransitionTable:
        return cls(_DEFAULT.copy())

    def row(self, state: int, outcome: int) -> np.ndarray:
        return self.probs[state, outcome]

    def validate(self, tol: float = 1e-12) -> None:
        p = self.probs
        if np.any(p < 0):
            raise ParameterError("negative transition probability")
        sums = p.sum(axis=(2, 3))
        bad = np.abs(sums - 1.0) > tol
        if bad.any():
            s, o = np.argwhere(bad)[0]
            raise ParameterError(f"row (state {s}, outcome {o}) sums to {sums[s, o]!r}")
        for s, o, succ, runs in np.argwhere(p > 0):
            if not transition_conserves(int(s), int(succ), int(runs)):
                raise ParameterError(
                    f"row (state {s}, outcome {o}) supports non-conserving successor ({succ}, {runs})"
                )

    def sampling_rows(self) -> list[tuple[list[float], list[tuple[int, int]]]]:
        """Per flat row ``state * 9 + outcome``: cumulative probabilities and the
        matching ``(successor, runs)`` pairs, for inverse-CDF draws."""
        if self._rows is None:
            rows = []
            flat = self.probs.reshape(N_STATES * N_OUTCOMES, N_SUCC * (MAX_RUNS + 1))
            for r in range(flat.shape[0]):
                nz = np.flatnonzero(flat[r])
                cum = np.cumsum(flat[r, nz]).tolist()
                cum[-1] = 1.0
                rows.append((cum, [divmod(int(j), MAX_RUNS + 1) for j in nz]))
            self._rows = rows
        return self._rows

    def kernel(self) -> np.ndarray:
        """Transition array collapsed for Markov-chain work, ``(24, 9, 5, 25)``
        indexed (state, outcome, runs, successor)."""
        return np.transpose(self.probs, (0, 1, 3, 2))

    def to_rows(self) -> list[list[list]]:
        rows = []
        for s in range(N_STATES):
            for o in range(N_OUTCOMES):
                nz = np.argwhere(self.probs[s, o] > 0)
                rows.append([[int(succ), int(runs), float(self.probs[s, o, succ, runs])] for succ, runs in nz])
        return rows

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Sequence]]) -> TransitionTable:
        if len(rows) != N_STATES * N_OUTCOMES:
            raise ParameterError(f"expected 216 rows, got {len(rows)}")
        probs = np.zeros((N_STATES, N_OUTCOMES, N_SUCC, MAX_RUNS + 1))
        for i, row in enumerate(rows):
            s, o = divmod(i, N_OUTCOMES)
            for succ, runs, p in row:
                probs[s, o, int(succ), int(runs)] = p
        return cls(probs)


def _forced_rows(probs: np.ndarray) -> None:
    for o in FORCED_OUTCOMES:
        probs[:, o] = _DEFAULT[:, o]


def transition_counts(records: Iterable[PlateAppearanceRecord]) -> np.ndarray:
    counts = np.zeros((N_STATES, N_OUTCOMES, N_SUCC, MAX_RUNS + 1))
    for r in records:
        counts[r.pre_state.index, r.outcome, r.post_state.index, min(r.runs_scored, MAX_RUNS)] += 1
    return counts


def league_table(records: Iterable[PlateAppearanceRecord]) -> TransitionTable:
    """Empirical relative-frequency table; unobserved rows use textbook
    advancement.  Strikeout, walk, hit-by-pitch and home-run rows are always
    the forced transitions."""
    counts = transition_counts(records)
    return _table_from_counts(counts, _DEFAULT, pseudo_count=0.0)


def _table_from_counts(counts: np.ndarray, fallback: np.ndarray, pseudo_count: float) -> TransitionTable:
    n = counts.sum(axis=(2, 3), keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = (counts + pseudo_count * fallback) / (n + pseudo_count)
    empty = (n == 0)[..., 0, 0]
    probs[empty] = fallback[empty]
    _forced_rows(probs)
    return TransitionTable(probs)


# ---------------------------------------------------------------------------
# steal rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StealProfile:
    opportunities: int
    steals: int
    alpha: float
    beta: float

    def __post_init__(self):
        if self.opportunities < 0 or not 0 <= self.steals <= self.opportunities:
            raise ParameterError(f"need 0 <= steals <= opportunities, got {self.steals}/{self.opportunities}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ParameterError("beta prior hyperparameters must be positive")

    @property
    def posterior_rate(self) -> float:
        return steal_rate_posterior(self.steals, self.opportunities, self.alpha, self.beta)

    @property
    def posterior(self) -> tuple[float, float]:
        return self.alpha + self.steals, self.beta + self.opportunities - self.steals


def steal_rate_posterior(x: int, n: int, alpha: float, beta: float) -> float:
    """Posterior predictive stolen-base rate ``(alpha + x) / (alpha + beta + n)``."""
    if not 0 <= x <= n:
        raise ParameterError(f"need 0 <= steals <= opportunities, got {x}/{n}")
    if alpha <= 0 or beta <= 0:
        raise ParameterError("beta prior hyperparameters must be positive")
    return (alpha + x) / (alpha + beta + n)


def fit_steal_prior(
    counts: Mapping[str, tuple[int, int]] | Iterable[tuple[int, int]],
    min_opportunities: int = 200,
) -> tuple[float, float]:
    """Beta prior on steal rates by moment matching over qualifying players.

    ``counts`` maps a player to ``(opportunities, steals)`` (or is an iterable
    of such pairs).
    """
    pairs = counts.values() if isinstance(counts, Mapping) else counts
    rates = [x / n for n, x in pairs if n >= min_opportunities and n > 0]
    if len(rates) < 2:
        raise InsufficientDataError(
            f"need at least 2 players with >= {min_opportunities} steal opportunities, got {len(rates)}"
        )
    return beta_from_moments(np.asarray(rates))


def read_steal_csv(path_or_text) -> dict[str, tuple[int, int]]:
    """Read ``batter_id,opportunities,steals`` rows."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="")
    with fh:
        reader = csv.DictReader(skip_comments(fh))
        need = ("batter_id", "opportunities", "steals")
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in need):
            raise SchemaError("steal file needs columns batter_id,opportunities,steals")
        out = {}
        for i, row in enumerate(reader, start=1):
            n, x = int(row["opportunities"]), int(row["steals"])
            if not 0 <= x <= n:
                raise ParameterError(f"steal row {i}: need 0 <= steals <= opportunities")
            out[row["batter_id"]] = (n, x)
    return out


# ---------------------------------------------------------------------------
# grouping and mixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupTables:
    tables: tuple[TransitionTable, ...]
    boundaries: np.ndarray
    league: TransitionTable


def _strictly_increasing(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float)
    for i in range(1, len(out)):
        if out[i] <= out[i - 1]:
            out[i] = np.nextafter(out[i - 1], 1.0)
    return out


def build_group_tables(
    records: Sequence[PlateAppearanceRecord],
    rates: Mapping[str, float],
    k: int = 5,
    pseudo_count: float = 5.0,
) -> GroupTables:
    """Split transitions into ``k`` equal-count groups by the batter's steal rate.

    Records are ordered by their batter's posterior rate (ties keep input
    order) and cut into ``k`` runs of equal size, extra records going to the
    lowest groups.  Each group row is shrunk toward the league row with
    ``pseudo_count`` pseudo-observations; ``k=1`` returns the league table.
    Boundaries are the ``100*g/k`` percentiles of the batters' rates.
    """
    if len(records) < k:
        raise InsufficientDataError(f"need at least {k} records to form {k} groups, got {len(records)}")
    missing = {r.batter_id for r in records} - set(rates)
    if missing:
        raise InsufficientDataError(f"no steal rate for batter(s): {sorted(missing)[:5]}")
    league = league_table(records)
    if k == 1:
        return GroupTables((league,), np.array([]), league)

    order = sorted(range(len(records)), key=lambda i: rates[records[i].batter_id])
    size, extra = divmod(len(records), k)
    tables = []
    start = 0
    for g in range(k):
        stop = start + size + (1 if g < extra else 0)
        counts = transition_counts(records[i] for i in order[start:stop])
        tables.append(_table_from_counts(counts, league.probs, pseudo_count))
        start = stop

    population = np.array([rates[b] for b in sorted({r.batter_id for r in records})])
    boundaries = np.percentile(population, [100.0 * g / k for g in range(1, k)])
    return GroupTables(tuple(tables), _strictly_increasing(boundaries), league)


def batter_mixture_weights(
    profile: StealProfile,
    boundaries: Sequence[float],
    mc_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Posterior mass of the batter's steal rate inside each group interval.

    Uses the beta CDF directly unless ``mc_samples`` is given, in which case
    the weights are Monte Carlo frequencies from ``rng``.
    """
    edges = np.asarray(boundaries, dtype=float)
    if edges.ndim != 1 or np.any(np.diff(edges) <= 0):
        raise ParameterError("group boundaries must be strictly increasing")
    a, b = profile.posterior
    if mc_samples is None:
        cdf = stats.beta.cdf(edges, a, b)
        weights = np.diff(np.concatenate(([0.0], cdf, [1.0])))
    else:
        if mc_samples < 1000:
            raise ParameterError("mc_samples must be at least 1000")
        rng = rng if rng is not None else np.random.default_rng(0)
        draws = rng.beta(a, b, size=mc_samples)
        weights = np.bincount(np.searchsorted(edges, draws, side="right"), minlength=len(edges) + 1) / mc_samples
    weights = np.clip(weights, 0.0, None)
    return weights / weights.sum()


def batter_transition_table(weights: Sequence[float], group_tables: Sequence[TransitionTable]) -> TransitionTable:
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(group_tables),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ParameterError("mixture weights must be a simplex over the group tables")
    probs = np.tensordot(w, np.stack([t.probs for t in group_tables]), axes=1)
    # renormalize against rounding so every row is a simplex to 1e-12
    probs /= probs.sum(axis=(2, 3), keepdims=True)
    return TransitionTable(probs, validate=False)


def apply_transition(
    state: BaseOutState, outcome: Outcome | int, table: TransitionTable, rng
) -> tuple[BaseOutState, int]:
    """Sample the successor state and runs scored for one plate appearance."""
    cum, succ = table.sampling_rows()[state.index * N_OUTCOMES + int(outcome)]
    nxt, runs = succ[bisect_right(cum, rng.random()) if len(cum) > 1 else 0]
    return BaseOutState.from_index(nxt), runs
