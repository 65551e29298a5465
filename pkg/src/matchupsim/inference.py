"""Parameter estimation for the four matchup-model variants.

Priors are fitted by moments to per-player empirical rates.  Posteriors are
explored with an adaptive random-walk Metropolis-within-Gibbs sampler over
transformed coordinates (logit base probabilities, log offsets, raw log5
weights).  Pitchers are conditionally independent given the batter side and
the weights (and vice versa), so each player block is updated for all
players at once with per-player accept/reject decisions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betaln, gammaln

from .baserunning import (
    StealProfile,
    build_group_tables,
    fit_steal_prior,
    league_table,
)
from .events import (
    N_OUTCOMES,
    InsufficientDataError,
    PlateAppearanceRecord,
    batting_order_rates,
    league_rates,
)
from .model import VARIANTS, MatchupModel, PriorSpec, RunningModel
from .outcome_model import (
    PROB_FLOOR,
    WEIGHT_HIGH,
    WEIGHT_LOW,
    Log5Weights,
    PlayerParams,
    logit,
    weights_feasible,
)
from .stats import beta_from_moments, gamma_from_moments

log = logging.getLogger(__name__)

BLOCK_SIZE = 500
SUMMARY_SMOOTHING = 20.0


class SamplerError(RuntimeError):
    """The sampler failed to move (zero acceptance after burn-in)."""


class NumericalFault(FloatingPointError):
    """A likelihood evaluation produced NaN."""


# ---------------------------------------------------------------------------
# priors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlayerSummary:
    pa: int
    base: np.ndarray
    offsets: np.ndarray


def player_summaries(
    records: Sequence[PlateAppearanceRecord],
    role: str = "pitcher",
    league: np.ndarray | None = None,
    smoothing: float = SUMMARY_SMOOTHING,
) -> dict[str, PlayerSummary]:
    """Empirical base probabilities and handedness offsets per player.

    Same- and opposite-hand rates are smoothed toward the league with
    ``smoothing`` pseudo-counts, then inverted through the offset relation:
    with ``r0 = a**o`` and ``r1 = a**(1/o)``, ``log a = -sqrt(log r0 * log r1)``
    and ``o = sqrt(log r0 / log r1)``.
    """
    if role not in ("pitcher", "batter"):
        raise ValueError("role must be 'pitcher' or 'batter'")
    if league is None:
        league = league_rates(records)
    key = (lambda r: r.pitcher_id) if role == "pitcher" else (lambda r: r.batter_id)
    counts: dict[str, np.ndarray] = {}
    for r in records:
        c = counts.get(key(r))
        if c is None:
            c = counts[key(r)] = np.zeros((2, N_OUTCOMES))
        c[r.h, r.outcome] += 1
    out = {}
    for pid, c in counts.items():
        n = c.sum(axis=1, keepdims=True)
        rates = (c + smoothing * league) / (n + smoothing)
        rates = np.clip(rates, PROB_FLOOR, 1 - PROB_FLOOR)
        l0, l1 = np.log(rates[0]), np.log(rates[1])
        out[pid] = PlayerSummary(int(n.sum()), np.exp(-np.sqrt(l0 * l1)), np.sqrt(l0 / l1))
    return out


def fit_priors(summaries: Mapping[str, PlayerSummary], min_pa: int = 100) -> PriorSpec:
    """Moment-matched beta (base) and gamma (offset) priors per outcome over
    players with more than ``min_pa`` plate appearances."""
    qualifying = [s for s in summaries.values() if s.pa > min_pa]
    if len(qualifying) < 2:
        raise InsufficientDataError(f"need at least 2 players with more than {min_pa} PA, got {len(qualifying)}")
    base = np.stack([s.base for s in qualifying])
    offsets = np.stack([s.offsets for s in qualifying])
    ab = np.array([beta_from_moments(base[:, i]) for i in range(N_OUTCOMES)])
    kr = np.array([gamma_from_moments(offsets[:, i]) for i in range(N_OUTCOMES)])
    return PriorSpec(ab[:, 0], ab[:, 1], kr[:, 0], kr[:, 1])


# ---------------------------------------------------------------------------
# likelihood
# ---------------------------------------------------------------------------


@dataclass
class Params:
    """Raw (unvalidated) parameter values; out-of-domain values are allowed so
    that :func:`log_posterior` can reject them."""

    pitchers: dict[str, tuple[np.ndarray, np.ndarray]]
    weights: tuple[np.ndarray, np.ndarray]
    batters: dict[str, tuple[np.ndarray, np.ndarray]] | None = None


class _Design:
    """Records collapsed to outcome counts per distinct likelihood cell."""

    def __init__(
        self,
        records: Sequence[PlateAppearanceRecord],
        league: np.ndarray,
        order_rates: np.ndarray | None,
        pitchers: Sequence[str] | None = None,
        batters: Sequence[str] | None = None,
    ):
        self.with_batters = order_rates is None
        self.pitchers = sorted({r.pitcher_id for r in records}) if pitchers is None else list(pitchers)
        p_index = {p: i for i, p in enumerate(self.pitchers)}
        if self.with_batters:
            self.batters = sorted({r.batter_id for r in records}) if batters is None else list(batters)
            b_index = {b: i for i, b in enumerate(self.batters)}
        else:
            self.batters = []
        cells: dict[tuple[int, int, int], int] = {}
        rows = []
        for r in records:
            bkey = b_index[r.batter_id] if self.with_batters else r.batting_order - 1
            k = (p_index[r.pitcher_id], bkey, r.h)
            j = cells.get(k)
            if j is None:
                j = cells[k] = len(rows)
                rows.append(np.zeros(N_OUTCOMES))
            rows[j][r.outcome] += 1
        keys = np.array(list(cells), dtype=np.int64).reshape(-1, 3)
        self.p_idx = keys[:, 0]
        self.b_idx = keys[:, 1]
        self.h = keys[:, 2]
        self.same = (self.h == 1)[:, None]
        self.counts = np.array(rows).reshape(-1, N_OUTCOMES)
        self.n = self.counts.sum(axis=1)
        self.logit_c = logit(league)[self.h]
        self.logit_b = None if self.with_batters else logit(order_rates[self.b_idx, self.h])
        self.n_pitchers = len(self.pitchers)
        self.n_batters = len(self.batters)

    def _side_log(self, u, v, idx):
        """Handedness-adjusted log probability from logit base ``u`` and log
        offset ``v`` rows, gathered per cell."""
        log_base = -np.logaddexp(0.0, -u[idx])
        e = np.exp(np.where(self.same, -v[idx], v[idx]))
        return e * log_base

    def log_x(self, pu, pv, bu, bv, P, B):
        lo, hi = np.log(PROB_FLOOR), np.log1p(-PROB_FLOOR)
        log_a = np.clip(self._side_log(pu, pv, self.p_idx), lo, hi)
        logit_a = log_a - np.log1p(-np.exp(log_a))
        if self.with_batters:
            log_b = np.clip(self._side_log(bu, bv, self.b_idx), lo, hi)
            logit_b = log_b - np.log1p(-np.exp(log_b))
        else:
            logit_b = self.logit_b
        S = P * logit_a + B * logit_b - (P + B - 1.0) * self.logit_c
        return -np.logaddexp(0.0, -S)

    def cell_loglik(self, log_x):
        z = np.logaddexp.reduce(log_x, axis=1)
        ll = (self.counts * log_x).sum(axis=1) - self.n * z
        if np.isnan(ll).any():
            raise NumericalFault("NaN in likelihood evaluation")
        return ll


def _beta_logpdf(p, a, b):
    return (a - 1) * np.log(p) + (b - 1) * np.log1p(-p) - betaln(a, b)


def _gamma_logpdf(x, k, rate):
    return k * np.log(rate) + (k - 1) * np.log(x) - rate * x - gammaln(k)


def _log_prior_player(base, offsets, prior: PriorSpec) -> float:
    return float(
        _beta_logpdf(base, prior.base_alpha, prior.base_beta).sum()
        + _gamma_logpdf(offsets, prior.offset_shape, prior.offset_rate).sum()
    )


def log_posterior(
    params: Params,
    records: Sequence[PlateAppearanceRecord],
    priors: PriorSpec | None,
    league: np.ndarray,
    order_rates: np.ndarray | None = None,
    batter_priors: PriorSpec | None = None,
    include_prior: bool = True,
) -> float:
    """Categorical log likelihood of ``records`` plus log prior densities.

    Pass ``order_rates`` for the pitcher-only model (batter side from lineup
    slot rates) or ``params.batters`` for models with batter parameters.
    Parameters outside their domain give ``-inf``; NaN raises
    :class:`NumericalFault`.
    """
    if not records:
        raise InsufficientDataError("log_posterior needs at least one record")
    players = list(params.pitchers.values()) + list((params.batters or {}).values())
    for base, offsets in players:
        base, offsets = np.asarray(base), np.asarray(offsets)
        if np.any(~((base > 0) & (base < 1))) or np.any(~(offsets > 0)):
            return -np.inf
    P, B = (np.asarray(w, dtype=float) for w in params.weights)
    if not weights_feasible(P, B, tol=0.0):
        return -np.inf

    with_batters = order_rates is None
    pitchers = sorted(params.pitchers)
    batters = sorted(params.batters or {})
    design = _Design(records, league, order_rates, pitchers, batters if with_batters else None)
    pu = logit(np.array([params.pitchers[p][0] for p in pitchers]))
    pv = np.log(np.array([params.pitchers[p][1] for p in pitchers]))
    if with_batters:
        bu = logit(np.array([params.batters[b][0] for b in batters]))
        bv = np.log(np.array([params.batters[b][1] for b in batters]))
    else:
        bu = bv = None
    total = float(design.cell_loglik(design.log_x(pu, pv, bu, bv, P, B)).sum())
    if include_prior:
        if priors is not None:
            total += sum(_log_prior_player(np.asarray(b), np.asarray(o), priors) for b, o in params.pitchers.values())
        if with_batters and batter_priors is not None:
            total += sum(_log_prior_player(np.asarray(b), np.asarray(o), batter_priors) for b, o in params.batters.values())
        # uniform weight prior: constant density on the feasible region
    if np.isnan(total):
        raise NumericalFault("NaN in log posterior")
    return total


# ---------------------------------------------------------------------------
# sampler
# ---------------------------------------------------------------------------

BLOCKS = ("pitcher_base", "pitcher_offsets", "batter_base", "batter_offsets", "weights")


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    steps: int = 5000
    burn_in: int = 2000
    proposal_scale: float = 0.15
    weight_scale: float = 0.05
    target_accept: float = 0.3
    adapt_every: int = 50
    fixed: frozenset = frozenset()
    init_weights: tuple[float, float] = (0.8, 0.8)
    chain: int = 0

    def __post_init__(self):
        if self.seed is None:
            raise ValueError("an explicit seed is required")
        if self.steps < 1 or self.burn_in < 0:
            raise ValueError("steps must be >= 1 and burn_in >= 0")
        unknown = set(self.fixed) - set(BLOCKS)
        if unknown:
            raise ValueError(f"unknown parameter blocks {sorted(unknown)}")
        object.__setattr__(self, "fixed", frozenset(self.fixed))


@dataclass
class PosteriorSummary:
    pitchers: dict[str, PlayerParams]
    pitcher_sd: dict[str, tuple[np.ndarray, np.ndarray]]
    weights: Log5Weights
    weights_sd: tuple[np.ndarray, np.ndarray]
    batters: dict[str, PlayerParams] = field(default_factory=dict)
    batter_sd: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    acceptance: dict[str, float] = field(default_factory=dict)
    ess: float = float("nan")

    def diagnostics(self) -> dict:
        return {"acceptance": dict(sorted(self.acceptance.items())), "min_ess": self.ess}


def _batch_means_ess(trace: np.ndarray) -> float:
    """Smallest effective sample size across columns, by batch means."""
    n = trace.shape[0]
    if n < 20:
        return float(n)
    n_batches = int(np.sqrt(n))
    size = n // n_batches
    t = trace[: n_batches * size]
    var = t.var(axis=0, ddof=1)
    batch = t.reshape(n_batches, size, -1).mean(axis=1).var(axis=0, ddof=1) * size
    ok = var > 0
    if not ok.any():
        return float(n)
    return float(np.min(n * var[ok] / np.maximum(batch[ok], 1e-300)))


class _Block:
    """Random-walk state for a set of parameter rows with per-row scales."""

    def __init__(self, values: np.ndarray, scale: float):
        self.values = values
        self.scale = np.full(values.shape[0], scale)
        self.accepted = np.zeros(values.shape[0])
        self.window = np.zeros(values.shape[0])
        self.total = 0
        self.total_accepted = 0.0

    def adapt(self, steps: int, target: float) -> None:
        rate = self.window / steps
        self.scale *= np.exp(2.0 * (rate - target))
        self.window[:] = 0


def sample_posterior(
    records: Sequence[PlateAppearanceRecord],
    priors: PriorSpec,
    config: SamplerConfig,
    league: np.ndarray | None = None,
    order_rates: np.ndarray | None = None,
    batter_priors: PriorSpec | None = None,
    initial: Params | None = None,
) -> PosteriorSummary:
    """Posterior means and spreads of player parameters and log5 weights.

    With ``order_rates`` the batter side is the fixed slot-rate table
    (pitcher-only model); otherwise batter parameters are sampled under
    ``batter_priors``.  Blocks named in ``config.fixed`` stay at their
    ``initial`` values (or prior means).
    """
    if not records:
        raise InsufficientDataError("sample_posterior needs at least one record")
    if league is None:
        league = league_rates(records)
    with_batters = order_rates is None
    if with_batters and batter_priors is None:
        raise ValueError("batter_priors are required when batter parameters are sampled")
    design = _Design(records, league, order_rates)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, config.chain]))

    def init_rows(ids, which, prior):
        base = np.tile(prior.base_mean, (len(ids), 1))
        offsets = np.tile(prior.offset_mean, (len(ids), 1))
        src = None if initial is None else (initial.pitchers if which == "pitcher" else initial.batters)
        for i, pid in enumerate(ids):
            if src and pid in src:
                base[i], offsets[i] = src[pid]
        return logit(base), np.log(offsets)

    pu, pv = init_rows(design.pitchers, "pitcher", priors)
    if with_batters:
        bu, bv = init_rows(design.batters, "batter", batter_priors)
    else:
        bu = bv = np.zeros((0, N_OUTCOMES))
    if initial is not None:
        P, B = (np.array(w, dtype=float) for w in initial.weights)
    else:
        P = np.full(N_OUTCOMES, config.init_weights[0])
        B = np.full(N_OUTCOMES, config.init_weights[1])
    if not weights_feasible(P, B):
        raise ValueError("initial weights are infeasible")

    blocks = {
        "pitcher_base": _Block(pu, config.proposal_scale),
        "pitcher_offsets": _Block(pv, config.proposal_scale),
        "batter_base": _Block(bu, config.proposal_scale),
        "batter_offsets": _Block(bv, config.proposal_scale),
    }
    wblock = _Block(np.stack([P, B], axis=1), config.weight_scale)
    active = [name for name, b in blocks.items() if b.values.shape[0] and name not in config.fixed]
    sample_weights = "weights" not in config.fixed

    def prior_rows(name, values):
        prior = priors if name.startswith("pitcher") else batter_priors
        if name.endswith("base"):
            # beta density on sigmoid(u) times the logit Jacobian
            return (
                -prior.base_alpha * np.logaddexp(0.0, -values) - prior.base_beta * np.logaddexp(0.0, values)
            ).sum(axis=1)
        return (prior.offset_shape * values - prior.offset_rate * np.exp(values)).sum(axis=1)

    def current_log_x():
        return design.log_x(
            blocks["pitcher_base"].values,
            blocks["pitcher_offsets"].values,
            blocks["batter_base"].values,
            blocks["batter_offsets"].values,
            wblock.values[:, 0],
            wblock.values[:, 1],
        )

    log_x = current_log_x()
    cell_ll = design.cell_loglik(log_x)

    n_kept = config.steps
    sums = {name: np.zeros_like(b.values) for name, b in blocks.items()}
    sq = {name: np.zeros_like(b.values) for name, b in blocks.items()}
    w_sum = np.zeros_like(wblock.values)
    w_sq = np.zeros_like(wblock.values)
    trace = np.empty((n_kept, 2 * N_OUTCOMES + N_OUTCOMES))

    total = config.burn_in + config.steps
    for it in range(total):
        burning = it < config.burn_in
        for name in active:
            blk = blocks[name]
            old = blk.values
            prop = old + blk.scale[:, None] * rng.standard_normal(old.shape)
            blk.values = prop
            new_log_x = current_log_x()
            new_ll = design.cell_loglik(new_log_x)
            idx = design.p_idx if name.startswith("pitcher") else design.b_idx
            delta = np.bincount(idx, weights=new_ll - cell_ll, minlength=old.shape[0])
            delta += prior_rows(name, prop) - prior_rows(name, old)
            accept = np.log(rng.random(old.shape[0])) < delta
            blk.values = np.where(accept[:, None], prop, old)
            cell_mask = accept[idx]
            log_x = np.where(cell_mask[:, None], new_log_x, log_x)
            cell_ll = np.where(cell_mask, new_ll, cell_ll)
            blk.window += accept
            if not burning:
                blk.total_accepted += accept.sum()
                blk.total += accept.size

        if sample_weights:
            # pairwise updates: (P_i, B_i) only touch column i of log x
            x_sum = np.exp(np.logaddexp.reduce(log_x, axis=1))
            lo, hi = np.log(PROB_FLOOR), np.log1p(-PROB_FLOOR)
            log_a = np.clip(design._side_log(blocks["pitcher_base"].values, blocks["pitcher_offsets"].values, design.p_idx), lo, hi)
            logit_a = log_a - np.log1p(-np.exp(log_a))
            if design.with_batters:
                log_b = np.clip(design._side_log(blocks["batter_base"].values, blocks["batter_offsets"].values, design.b_idx), lo, hi)
                logit_b = log_b - np.log1p(-np.exp(log_b))
            else:
                logit_b = design.logit_b
            steps_w = wblock.scale[:, None] * rng.standard_normal((N_OUTCOMES, 2))
            log_u = np.log(rng.random(N_OUTCOMES))
            for i in range(N_OUTCOMES):
                Pi, Bi = wblock.values[i] + steps_w[i]
                ok = WEIGHT_LOW <= Pi <= WEIGHT_HIGH and WEIGHT_LOW <= Bi <= WEIGHT_HIGH and 1.0 <= Pi + Bi <= 2.0
                accepted = False
                if ok:
                    S = Pi * logit_a[:, i] + Bi * logit_b[:, i] - (Pi + Bi - 1.0) * design.logit_c[:, i]
                    col = -np.logaddexp(0.0, -S)
                    new_sum = x_sum - np.exp(log_x[:, i]) + np.exp(col)
                    d_cell = design.counts[:, i] * (col - log_x[:, i]) - design.n * (np.log(new_sum) - np.log(x_sum))
                    if log_u[i] < d_cell.sum():
                        accepted = True
                        wblock.values[i] = (Pi, Bi)
                        log_x[:, i] = col
                        x_sum = new_sum
                        cell_ll = cell_ll + d_cell
                wblock.window[i] += accepted
                if not burning:
                    wblock.total_accepted += accepted
                    wblock.total += 1

        if burning and (it + 1) % config.adapt_every == 0:
            for name in active:
                blocks[name].adapt(config.adapt_every, config.target_accept)
            if sample_weights:
                wblock.adapt(config.adapt_every, config.target_accept)
        if it + 1 == config.burn_in:
            # resync against drift from incremental updates
            log_x = current_log_x()
            cell_ll = design.cell_loglik(log_x)

        if not burning:
            k = it - config.burn_in
            for name in ("pitcher_base", "batter_base"):
                p = 1.0 / (1.0 + np.exp(-blocks[name].values))
                sums[name] += p
                sq[name] += p * p
            for name in ("pitcher_offsets", "batter_offsets"):
                o = np.exp(blocks[name].values)
                sums[name] += o
                sq[name] += o * o
            w_sum += wblock.values
            w_sq += wblock.values**2
            trace[k, : 2 * N_OUTCOMES] = wblock.values.T.ravel()
            trace[k, 2 * N_OUTCOMES :] = blocks["pitcher_base"].values.mean(axis=0) if design.n_pitchers else 0.0

    acceptance = {}
    for name in active:
        blk = blocks[name]
        acceptance[name] = blk.total_accepted / blk.total if blk.total else 0.0
    if sample_weights:
        acceptance["weights"] = wblock.total_accepted / wblock.total if wblock.total else 0.0
    dead = [k for k, v in acceptance.items() if v == 0.0]
    if dead:
        raise SamplerError(f"zero acceptance after burn-in for block(s) {dead}; acceptance={acceptance}")

    def summarize(ids, base_name, off_name):
        mb, mo = sums[base_name] / n_kept, sums[off_name] / n_kept
        sb = np.sqrt(np.maximum(sq[base_name] / n_kept - mb**2, 0.0))
        so = np.sqrt(np.maximum(sq[off_name] / n_kept - mo**2, 0.0))
        means = {pid: PlayerParams(mb[i], mo[i]) for i, pid in enumerate(ids)}
        sds = {pid: (sb[i], so[i]) for i, pid in enumerate(ids)}
        return means, sds

    pitchers, pitcher_sd = summarize(design.pitchers, "pitcher_base", "pitcher_offsets")
    batters, batter_sd = summarize(design.batters, "batter_base", "batter_offsets") if with_batters else ({}, {})
    wm = w_sum / n_kept
    wsd = np.sqrt(np.maximum(w_sq / n_kept - wm**2, 0.0))
    return PosteriorSummary(
        pitchers=pitchers,
        pitcher_sd=pitcher_sd,
        weights=Log5Weights(np.clip(wm[:, 0], WEIGHT_LOW, WEIGHT_HIGH), np.clip(wm[:, 1], WEIGHT_LOW, WEIGHT_HIGH)),
        weights_sd=(wsd[:, 0], wsd[:, 1]),
        batters=batters,
        batter_sd=batter_sd,
        acceptance=acceptance,
        ess=_batch_means_ess(trace[:, : 2 * N_OUTCOMES] if sample_weights else trace[:, 2 * N_OUTCOMES :]),
    )


# ---------------------------------------------------------------------------
# recency chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecencyChains:
    """Per player, the records in each chain (chain 0 is the longest)."""

    chains: dict[str, tuple[tuple[PlateAppearanceRecord, ...], ...]]

    def sizes(self, player: str) -> tuple[int, ...]:
        return tuple(len(c) for c in self.chains[player])


def _chain_limit(n: int, chain: int, n_chains: int, block: int) -> int:
    if n < block:
        return n
    return min(n, (n_chains - chain) * block)


def _recency_order(records: Sequence[PlateAppearanceRecord]) -> list[int]:
    """Indices newest first; equal dates keep their input order reversed
    (later rows are taken as later plate appearances)."""
    idx = sorted(range(len(records)), key=lambda i: (records[i].date, i))
    return idx[::-1]


def build_recency_chains(
    records_by_player: Mapping[str, Sequence[PlateAppearanceRecord]],
    n_chains: int = 4,
    block: int = BLOCK_SIZE,
) -> RecencyChains:
    """Nested recency chains: the newest ``block`` records of each player are
    in every chain, the next block in one chain fewer, and so on; records
    older than ``n_chains * block`` are dropped.  Players with fewer than
    ``block`` records keep everything in every chain."""
    out = {}
    for player, recs in records_by_player.items():
        order = _recency_order(recs)
        newest_first = [recs[i] for i in order]
        out[player] = tuple(
            tuple(newest_first[: _chain_limit(len(recs), j, n_chains, block)]) for j in range(n_chains)
        )
    return RecencyChains(out)


def chain_datasets(
    records: Sequence[PlateAppearanceRecord],
    roles: Iterable[str] = ("pitcher", "batter"),
    n_chains: int = 4,
    block: int = BLOCK_SIZE,
) -> list[list[PlateAppearanceRecord]]:
    """Training sets for each chain: a record belongs to chain ``j`` when it is
    inside chain ``j`` for every participant whose role is listed."""
    rank_limits = []
    for role in roles:
        groups: dict[str, list[int]] = {}
        for i, r in enumerate(records):
            groups.setdefault(r.pitcher_id if role == "pitcher" else r.batter_id, []).append(i)
        rank = np.empty(len(records), dtype=np.int64)
        total = np.empty(len(records), dtype=np.int64)
        for members in groups.values():
            sub = [records[i] for i in members]
            for pos, k in enumerate(_recency_order(sub)):
                rank[members[k]] = pos
                total[members[k]] = len(members)
        rank_limits.append((rank, total))
    datasets = []
    for j in range(n_chains):
        keep = np.ones(len(records), dtype=bool)
        for rank, total in rank_limits:
            limit = np.array([_chain_limit(int(t), j, n_chains, block) for t in total])
            keep &= rank < limit
        datasets.append([r for r, k in zip(records, keep) if k])
    return datasets


# ---------------------------------------------------------------------------
# variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitConfig:
    seed: int
    steps: int = 5000
    burn_in: int = 2000
    min_pa: int = 100
    chains: int = 4
    order_pseudo_count: float = 100.0
    min_opportunities: int = 200
    group_count: int = 5
    cell_pseudo_count: float = 5.0

    def sampler(self, chain: int = 0, **kw) -> SamplerConfig:
        return SamplerConfig(seed=self.seed, steps=self.steps, burn_in=self.burn_in, chain=chain, **kw)


def _average_summaries(summaries: Sequence[PosteriorSummary], priors: PriorSpec, batter_priors: PriorSpec | None):
    def avg(attr, prior):
        ids = sorted(set().union(*(getattr(s, attr) for s in summaries)))
        out = {}
        for pid in ids:
            params = [getattr(s, attr).get(pid, prior.mean_params()) for s in summaries]
            out[pid] = PlayerParams(np.mean([p.base for p in params], axis=0), np.mean([p.offsets for p in params], axis=0))
        return out

    pitchers = avg("pitchers", priors)
    batters = avg("batters", batter_priors) if batter_priors is not None else {}
    weights = Log5Weights(
        np.mean([s.weights.pitcher for s in summaries], axis=0),
        np.mean([s.weights.batter for s in summaries], axis=0),
    )
    return pitchers, batters, weights


def fit_variant(
    variant: str,
    records: Sequence[PlateAppearanceRecord],
    config: FitConfig,
    priors: PriorSpec | None = None,
    batter_priors: PriorSpec | None = None,
    steals: Mapping[str, tuple[int, int]] | None = None,
) -> MatchupModel:
    """Fit one of the four matchup-model variants.

    ``P``   pitcher parameters; batter side from batting-order rates.
    ``PB``  adds batter parameters.
    ``PBR`` PB fitted on each recency chain, posterior means averaged.
    ``BR``  PBR outcomes plus steal-rate stratified base running; needs
            ``steals`` mapping batter id to ``(opportunities, steals)``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown model variant {variant!r}; expected one of {VARIANTS}")
    if variant == "BR" and steals is None:
        raise ValueError("the BR variant needs steal counts (batter_id -> (opportunities, steals))")
    if not records:
        raise InsufficientDataError("no training records")

    league = league_rates(records)
    order_rates = batting_order_rates(records, pseudo_count=config.order_pseudo_count, league=league)
    if priors is None:
        priors = fit_priors(player_summaries(records, "pitcher", league), config.min_pa)
    if variant != "P" and batter_priors is None:
        batter_priors = fit_priors(player_summaries(records, "batter", league), config.min_pa)

    diagnostics: dict = {}
    if variant == "P":
        s = sample_posterior(records, priors, config.sampler(), league=league, order_rates=order_rates)
        pitchers, batters, weights = s.pitchers, {}, s.weights
        diagnostics["chains"] = [s.diagnostics()]
    elif variant == "PB":
        s = sample_posterior(records, priors, config.sampler(), league=league, batter_priors=batter_priors)
        pitchers, batters, weights = s.pitchers, s.batters, s.weights
        diagnostics["chains"] = [s.diagnostics()]
    else:
        summaries = []
        for j, data in enumerate(chain_datasets(records, n_chains=config.chains)):
            log.info("recency chain %d: %d records", j, len(data))
            summaries.append(
                sample_posterior(data, priors, config.sampler(chain=j), league=league, batter_priors=batter_priors)
            )
        pitchers, batters, weights = _average_summaries(summaries, priors, batter_priors)
        diagnostics["chains"] = [s.diagnostics() for s in summaries]

    running = None
    if variant == "BR":
        running = fit_base_running(records, steals, config)
        diagnostics["steal_prior"] = list(running.steal_prior)

    return MatchupModel(
        variant=variant,
        league=league,
        order_rates=order_rates,
        weights=weights,
        pitchers=pitchers,
        batters=batters,
        pitcher_prior=priors,
        batter_prior=batter_priors if variant != "P" else None,
        league_table=league_table(records),
        running=running,
        diagnostics=diagnostics,
    )


def fit_base_running(
    records: Sequence[PlateAppearanceRecord],
    steals: Mapping[str, tuple[int, int]],
    config: FitConfig,
) -> RunningModel:
    prior = fit_steal_prior(steals, config.min_opportunities)
    counts = {b: (int(n), int(x)) for b, (n, x) in steals.items()}
    rates = {}
    for b in {r.batter_id for r in records}:
        n, x = counts.get(b, (0, 0))
        rates[b] = StealProfile(n, x, *prior).posterior_rate
    groups = build_group_tables(records, rates, k=config.group_count, pseudo_count=config.cell_pseudo_count)
    return RunningModel(groups.tables, groups.boundaries, prior, counts)

