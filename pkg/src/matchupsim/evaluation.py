"""Scoring fitted models, added-wins posteriors and betting backtests."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .events import TERMINAL, PlateAppearanceRecord, SchemaError, skip_comments
from .outcome_model import ParameterError

SEASON_GAMES = 162


# ---------------------------------------------------------------------------
# log loss and GMP
# ---------------------------------------------------------------------------


def gmp(loss: float) -> float:
    """Geometric mean probability for a mean log loss."""
    return math.exp(-loss)


@dataclass(frozen=True)
class LossResult:
    log_loss: float
    gmp: float
    infinite: bool = False


def log_loss_and_gmp(predictions, actuals) -> LossResult:
    """Mean negative log probability of the realized outcomes.

    A zero probability on a realized outcome gives an infinite loss (and a
    GMP of 0) flagged in the result rather than an exception.
    """
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(actuals, dtype=int)
    if p.ndim != 2 or len(p) == 0 or len(p) != len(y):
        raise ValueError("predictions and actuals must be aligned and nonempty")
    hit = p[np.arange(len(y)), y]
    if np.any(hit <= 0):
        return LossResult(math.inf, 0.0, True)
    loss = float(-np.mean(np.log(hit)))
    return LossResult(loss, gmp(loss), False)


def cross_model_gmp(predictions, truth) -> float:
    """exp of minus the expected log loss when outcomes follow ``truth``."""
    p = np.asarray(predictions, dtype=float)
    q = np.asarray(truth, dtype=float)
    if p.shape != q.shape or p.size == 0:
        raise ValueError("prediction and ground-truth arrays must be aligned and nonempty")
    support = q > 0
    if np.any(support & (p <= 0)):
        return 0.0
    logs = np.zeros_like(p)
    logs[support] = np.log(p[support])
    return gmp(float(-np.mean(np.sum(q * logs, axis=-1))))


def predict_outcomes(model, records: Sequence[PlateAppearanceRecord]) -> np.ndarray:
    return np.array(
        [model.outcome_probs(r.pitcher_id, r.pitcher_hand, r.batter_id, r.batter_hand, r.batting_order - 1) for r in records]
    )


def _successor_index(r: PlateAppearanceRecord) -> int:
    return TERMINAL if r.post_state.terminal else r.post_state.index


def transition_rows(model, records: Sequence[PlateAppearanceRecord]) -> np.ndarray:
    """Flattened successor distributions ``(n, 125)`` given (state, outcome)."""
    return np.array(
        [model.transition_table(r.batter_id).probs[r.pre_state.index, int(r.outcome)].ravel() for r in records]
    )


def _realized_transitions(records) -> np.ndarray:
    return np.array([_successor_index(r) * 5 + r.runs_scored for r in records])


@dataclass
class MetricReport:
    outcome_log_loss: float
    outcome_gmp: float
    transition_log_loss: float
    transition_gmp: float
    n: int
    outcome_gmp_vs_truth: float | None = None
    transition_gmp_vs_truth: float | None = None
    infinite_loss: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.outcome_gmp_vs_truth is None:
            d.pop("outcome_gmp_vs_truth")
            d.pop("transition_gmp_vs_truth")
        return d


def evaluate_model(model, records: Sequence[PlateAppearanceRecord], truth=None) -> MetricReport:
    """Outcome and transition log loss/GMP on ``records``; with ``truth``, also
    the GMPs expected if outcomes followed the ground-truth model."""
    if not records:
        raise ValueError("no validation records")
    outcomes = predict_outcomes(model, records)
    o = log_loss_and_gmp(outcomes, [int(r.outcome) for r in records])
    trans = transition_rows(model, records)
    t = log_loss_and_gmp(trans, _realized_transitions(records))
    report = MetricReport(o.log_loss, o.gmp, t.log_loss, t.gmp, len(records), infinite_loss=o.infinite or t.infinite)
    if truth is not None:
        report.outcome_gmp_vs_truth = cross_model_gmp(outcomes, predict_outcomes(truth, records))
        report.transition_gmp_vs_truth = cross_model_gmp(trans, transition_rows(truth, records))
    return report


# ---------------------------------------------------------------------------
# added wins
# ---------------------------------------------------------------------------


def win_rate_posterior(wins: int, games: int) -> tuple[int, int]:
    """Beta posterior of a win rate under a uniform prior."""
    if not 0 <= wins <= games:
        raise ValueError(f"need 0 <= wins <= games, got {wins}/{games}")
    return 1 + wins, 1 + games - wins


def _beta_moments(a: float, b: float) -> tuple[float, float]:
    n = a + b
    return a / n, a * b / (n * n * (n + 1))


@dataclass
class AddedWinsPosterior:
    per_game_mean: np.ndarray  # per-162 scale
    per_game_sd: np.ndarray
    samples: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def sd(self) -> float:
        return float(self.samples.std(ddof=1))

    @property
    def mc_se(self) -> float:
        return self.sd / math.sqrt(len(self.samples))

    def interval(self, level: float = 0.9) -> tuple[float, float]:
        lo = (1 - level) / 2
        q = np.quantile(self.samples, [lo, 1 - lo])
        return float(q[0]), float(q[1])


def added_wins_posterior(
    per_game: Sequence[tuple[tuple[int, int], tuple[int, int]]],
    samples: int = 100_000,
    seed: int = 0,
) -> AddedWinsPosterior:
    """Season-scaled posterior of challenger-minus-baseline wins.

    ``per_game`` holds ``((baseline_wins, baseline_games), (challenger_wins,
    challenger_games))`` per game.  Each difference of beta posteriors is
    approximated by a normal with matched mean and variance; the pooled
    posterior picks a game uniformly per draw.
    """
    if not per_game:
        raise ValueError("need at least one game")
    means, sds = [], []
    for (bw, bn), (cw, cn) in per_game:
        mb, vb = _beta_moments(*win_rate_posterior(bw, bn))
        mc, vc = _beta_moments(*win_rate_posterior(cw, cn))
        means.append(mc - mb)
        sds.append(math.sqrt(vb + vc))
    means = np.array(means) * SEASON_GAMES
    sds = np.array(sds) * SEASON_GAMES
    rng = np.random.default_rng(seed)
    pick = rng.integers(len(means), size=samples)
    draws = rng.normal(means[pick], sds[pick])
    return AddedWinsPosterior(means, sds, draws)


# ---------------------------------------------------------------------------
# betting
# ---------------------------------------------------------------------------


def _check_line(m: int) -> None:
    if abs(m) < 100:
        raise ParameterError(f"moneyline magnitude must be at least 100, got {m}")


def implied_probability(moneyline: int) -> float:
    _check_line(moneyline)
    if moneyline < 0:
        return -moneyline / (-moneyline + 100.0)
    return 100.0 / (moneyline + 100.0)


def win_multiple(moneyline: int) -> float:
    """Profit per unit staked on a winning bet."""
    _check_line(moneyline)
    return 100.0 / -moneyline if moneyline < 0 else moneyline / 100.0


def settle(moneyline: int, stake: float, won: bool) -> float:
    """Net profit of one bet."""
    return stake * win_multiple(moneyline) if won else -stake


def overround(home_line: int, away_line: int) -> float:
    return implied_probability(home_line) + implied_probability(away_line) - 1.0


HOME, AWAY = "home", "away"


def betting_decision(model_home_prob: float, home_line: int, away_line: int, cushion: float = 0.0) -> str | None:
    """``"home"``, ``"away"`` or ``None``: bet a side only if the model's
    probability beats the book's implied probability by more than ``cushion``."""
    if cushion < 0:
        raise ValueError("cushion must be non-negative")
    ih, ia = implied_probability(home_line), implied_probability(away_line)
    home = model_home_prob > ih + cushion
    away = 1.0 - model_home_prob > ia + cushion
    assert not (home and away), "both sides qualify; the lines have a negative overround"
    return HOME if home else AWAY if away else None


@dataclass(frozen=True)
class OddsRow:
    game_id: str
    home_team: str
    away_team: str
    home_ml: int
    away_ml: int
    home_won: int


ODDS_HEADER = ("game_id", "home_team", "away_team", "home_ml", "away_ml", "home_won")


def read_odds_csv(text: str) -> list[OddsRow]:
    reader = csv.DictReader(skip_comments(io.StringIO(text)))
    if reader.fieldnames is None or any(c not in reader.fieldnames for c in ODDS_HEADER):
        raise SchemaError(f"odds file needs columns {','.join(ODDS_HEADER)}")
    rows = []
    for i, r in enumerate(reader, start=1):
        won = int(r["home_won"])
        if won not in (0, 1):
            raise ParameterError(f"odds row {i}: home_won must be 0 or 1")
        row = OddsRow(r["game_id"], r["home_team"], r["away_team"], int(r["home_ml"]), int(r["away_ml"]), won)
        _check_line(row.home_ml)
        _check_line(row.away_ml)
        rows.append(row)
    return rows


@dataclass
class LedgerEntry:
    game_id: str
    model_home_prob: float
    home_ml: int
    away_ml: int
    implied_home: float
    implied_away: float
    overround: float
    cushion: float
    bet_side: str | None
    stake: float
    payout: float
    result: str | None  # "win", "loss" or None when no bet


def bet_ledger(probs: Sequence[float], odds: Sequence[OddsRow], cushion: float, stake: float = 1000.0) -> list[LedgerEntry]:
    if len(probs) != len(odds):
        raise ValueError("one model probability per odds row is required")
    out = []
    for p, g in zip(probs, odds):
        side = betting_decision(p, g.home_ml, g.away_ml, cushion)
        payout, result, staked = 0.0, None, 0.0
        if side is not None:
            line = g.home_ml if side == HOME else g.away_ml
            won = bool(g.home_won) == (side == HOME)
            payout = settle(line, stake, won)
            result = "win" if won else "loss"
            staked = stake
        out.append(
            LedgerEntry(
                g.game_id,
                float(p),
                g.home_ml,
                g.away_ml,
                implied_probability(g.home_ml),
                implied_probability(g.away_ml),
                overround(g.home_ml, g.away_ml),
                cushion,
                side,
                staked,
                payout,
                result,
            )
        )
    return out


@dataclass(frozen=True)
class RoiRow:
    cushion: float
    bets: int
    staked: float
    profit: float
    roi: float  # NaN when no bet was placed
    lower: float = math.nan
    upper: float = math.nan


def roi_report(
    probs: Sequence[float], odds: Sequence[OddsRow], cushions: Iterable[float], stake: float = 1000.0
) -> list[RoiRow]:
    """Settle every cushion's bets against the actual results."""
    rows = []
    for c in cushions:
        ledger = bet_ledger(probs, odds, c, stake)
        placed = [e for e in ledger if e.bet_side is not None]
        staked = sum(e.stake for e in placed)
        profit = sum(e.payout for e in placed)
        rows.append(RoiRow(c, len(placed), staked, profit, profit / staked if staked else math.nan))
    return rows


def roi_confidence(
    probs: Sequence[float],
    odds: Sequence[OddsRow],
    cushions: Iterable[float],
    mc_samples: int = 10_000,
    seed: int = 0,
    stake: float = 1000.0,
    level: float = 0.9,
) -> list[tuple[float, float, float]]:
    """``(cushion, lower, upper)`` ROI percentiles when the results are redrawn
    as independent Bernoulli trials with the model's home-win probabilities."""
    if mc_samples < 1000:
        raise ValueError("mc_samples must be at least 1000")
    p = np.asarray(probs, dtype=float)
    rng = np.random.default_rng(seed)
    home_won = rng.random((mc_samples, len(p))) < p
    tail = (1 - level) / 2 * 100
    out = []
    for c in cushions:
        sides = [betting_decision(pi, g.home_ml, g.away_ml, c) for pi, g in zip(p, odds)]
        idx = [i for i, s in enumerate(sides) if s is not None]
        if not idx:
            out.append((c, 0.0, 0.0))
            continue
        win_profit = np.array(
            [stake * win_multiple(odds[i].home_ml if sides[i] == HOME else odds[i].away_ml) for i in idx]
        )
        bet_home = np.array([sides[i] == HOME for i in idx])
        won = home_won[:, idx] == bet_home
        roi = np.where(won, win_profit, -stake).sum(axis=1) / (stake * len(idx))
        lo, hi = np.percentile(roi, [tail, 100 - tail])
        out.append((c, float(lo), float(hi)))
    return out


def expected_roi(probs: Sequence[float], odds: Sequence[OddsRow], cushion: float) -> float:
    """Closed-form ROI expectation under the model's own probabilities."""
    total, n = 0.0, 0
    for p, g in zip(probs, odds):
        side = betting_decision(p, g.home_ml, g.away_ml, cushion)
        if side is None:
            continue
        q = p if side == HOME else 1 - p
        m = win_multiple(g.home_ml if side == HOME else g.away_ml)
        total += q * m - (1 - q)
        n += 1
    return total / n if n else 0.0


ROI_HEADER = ("cushion", "bets_placed", "total_staked", "roi_lower", "roi_upper", "actual_roi")
PLOT_HEADER = ("game_id", "model_home_prob", "implied_home", "implied_away", "bet_side", "result")


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def roi_table_csv(rows: Sequence[RoiRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(ROI_HEADER)
    for r in rows:
        w.writerow([repr(float(r.cushion)), r.bets, _fmt(r.staked), _fmt(r.lower), _fmt(r.upper), _fmt(r.roi)])
    return out.getvalue()


def plot_data_csv(ledger: Sequence[LedgerEntry]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(PLOT_HEADER)
    for e in ledger:
        w.writerow([e.game_id, _fmt(e.model_home_prob), _fmt(e.implied_home), _fmt(e.implied_away), e.bet_side or "", e.result or ""])
    return out.getvalue()
