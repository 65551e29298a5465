import datetime as dt
import math

import numpy as np
import pytest
from scipy import stats

from matchupsim.baserunning import default_successor
from matchupsim.events import BaseOutState, InsufficientDataError, Outcome, PlateAppearanceRecord, league_rates
from matchupsim.inference import (
    FitConfig,
    Params,
    PlayerSummary,
    SamplerConfig,
    build_recency_chains,
    chain_datasets,
    fit_priors,
    fit_variant,
    log_posterior,
    sample_posterior,
)
from matchupsim.model import MatchupModel, PriorSpec
from matchupsim.outcome_model import Log5Weights, PlayerParams, outcome_distribution
from matchupsim.synthetic import LEAGUE_RATES

LEAGUE2 = np.vstack([LEAGUE_RATES, LEAGUE_RATES])
DAY0 = dt.date(2024, 4, 1)


def make_records(outcomes, pitcher="P1", batters=9, start=0, hand_flip=True):
    out = []
    for i, o in enumerate(outcomes):
        succ, runs = default_successor(0, int(o))
        k = start + i
        out.append(
            PlateAppearanceRecord(
                DAY0 + dt.timedelta(days=k // 40),
                pitcher,
                f"b{k % batters}",
                "R",
                "L" if hand_flip and k % 2 else "R",
                k % 9 + 1,
                Outcome(int(o)),
                BaseOutState(0),
                BaseOutState.from_index(succ),
                runs,
            )
        )
    return out


def prior(k=150.0):
    return PriorSpec(k * LEAGUE_RATES, k * (1 - LEAGUE_RATES), np.full(9, 50.0), np.full(9, 50.0))


class TestFitPriors:
    def test_degenerate_rates(self):
        s = {f"p{i}": PlayerSummary(500, np.full(9, 0.2), np.ones(9)) for i in range(5)}
        pr = fit_priors(s)
        np.testing.assert_allclose(pr.base_mean, 0.2, atol=1e-12)
        assert np.all(np.isfinite(pr.base_alpha))

    def test_moment_matching_recovers_beta(self):
        rng = np.random.default_rng(2)
        s = {f"p{i}": PlayerSummary(1000, rng.beta(8, 32, 9), rng.gamma(50, 1 / 50, 9)) for i in range(2000)}
        pr = fit_priors(s)
        np.testing.assert_allclose(pr.base_alpha, 8, rtol=0.15)
        np.testing.assert_allclose(pr.base_beta, 32, rtol=0.15)

    def test_min_pa_filters(self):
        a = PlayerSummary(300, np.full(9, 0.2), np.ones(9))
        b = PlayerSummary(300, np.full(9, 0.3), np.ones(9))
        tiny = PlayerSummary(50, np.full(9, 0.9), np.ones(9))
        with_tiny = fit_priors({"a": a, "b": b, "t": tiny}, min_pa=100)
        without = fit_priors({"a": a, "b": b}, min_pa=100)
        np.testing.assert_array_equal(with_tiny.base_alpha, without.base_alpha)
        np.testing.assert_array_equal(with_tiny.base_beta, without.base_beta)
        with pytest.raises(InsufficientDataError):
            fit_priors({"a": a, "t": tiny})


def record_prob(rec, base, offs, order_rates, league, weights):
    """Scalar recomputation of one record's outcome probability (pitcher-only model)."""
    h = rec.h
    xs = []
    for i in range(9):
        e = offs[i] if h == 0 else 1 / offs[i]
        a = base[i] ** e
        b = order_rates[rec.batting_order - 1, h, i]
        c = league[h, i]
        P, B = weights[0][i], weights[1][i]
        S = P * math.log(a / (1 - a)) + B * math.log(b / (1 - b)) - (P + B - 1) * math.log(c / (1 - c))
        xs.append(1 / (1 + math.exp(-S)))
    return xs[int(rec.outcome)] / sum(xs)


class TestLogPosterior:
    base = np.array([0.25, 0.08, 0.01, 0.24, 0.2, 0.15, 0.05, 0.005, 0.03])
    offs = np.array([1.1, 0.9, 1.0, 1.05, 0.95, 1.0, 1.2, 0.8, 1.3])
    weights = (np.full(9, 0.9), np.full(9, 0.8))
    order = np.broadcast_to(LEAGUE_RATES * 1.1 / 1.1, (9, 2, 9)).copy()

    def params(self):
        return Params({"P1": (self.base, self.offs)}, self.weights)

    def test_single_record_no_prior(self):
        r = make_records([Outcome.SINGLE])
        got = log_posterior(self.params(), r, None, LEAGUE2, order_rates=self.order, include_prior=False)
        expect = math.log(record_prob(r[0], self.base, self.offs, self.order, LEAGUE2, self.weights))
        assert got == pytest.approx(expect, abs=1e-12)

    def test_additivity(self):
        r = make_records([Outcome.SINGLE])
        one = log_posterior(self.params(), r, None, LEAGUE2, order_rates=self.order, include_prior=False)
        two = log_posterior(self.params(), r + r, None, LEAGUE2, order_rates=self.order, include_prior=False)
        assert two == pytest.approx(2 * one, abs=1e-12)
        a, b = make_records([0, 3, 5]), make_records([8, 1], start=3)
        pr = prior()
        lp = lambda recs, inc: log_posterior(self.params(), recs, pr, LEAGUE2, order_rates=self.order, include_prior=inc)  # noqa: E731
        prior_term = lp(a, True) - lp(a, False)
        assert lp(a + b, True) == pytest.approx(lp(a, False) + lp(b, False) + prior_term, abs=1e-9)

    def test_straight_line_with_prior(self):
        recs = make_records([Outcome.STRIKEOUT, Outcome.HOME_RUN])
        pr = prior(40.0)
        got = log_posterior(self.params(), recs, pr, LEAGUE2, order_rates=self.order)
        expect = sum(math.log(record_prob(r, self.base, self.offs, self.order, LEAGUE2, self.weights)) for r in recs)
        expect += sum(stats.beta.logpdf(self.base[i], pr.base_alpha[i], pr.base_beta[i]) for i in range(9))
        expect += sum(stats.gamma.logpdf(self.offs[i], pr.offset_shape[i], scale=1 / pr.offset_rate[i]) for i in range(9))
        assert got == pytest.approx(expect, abs=1e-9)

    def test_matches_outcome_distribution(self):
        r = make_records([Outcome.WALK])[0]
        probs = outcome_distribution(
            PlayerParams(self.base, self.offs), self.order[r.batting_order - 1, r.h], LEAGUE2[r.h], Log5Weights(*self.weights), r.h
        )
        got = log_posterior(self.params(), [r], None, LEAGUE2, order_rates=self.order, include_prior=False)
        assert got == pytest.approx(math.log(probs[Outcome.WALK]), abs=1e-12)

    def test_out_of_domain_is_minus_infinity(self):
        r = make_records([0])
        bad = Params({"P1": (np.full(9, 1.2), self.offs)}, self.weights)
        assert log_posterior(bad, r, None, LEAGUE2, order_rates=self.order) == -math.inf
        bad_w = Params({"P1": (self.base, self.offs)}, (np.full(9, 1.5), np.full(9, 1.5)))
        assert log_posterior(bad_w, r, None, LEAGUE2, order_rates=self.order) == -math.inf
        with pytest.raises(InsufficientDataError):
            log_posterior(self.params(), [], None, LEAGUE2, order_rates=self.order)


def synthetic_pitcher(seed, n):
    rng = np.random.default_rng(seed)
    truth = LEAGUE_RATES * np.exp(rng.normal(0, 0.15, 9))
    truth /= truth.sum()
    return truth, make_records(rng.choice(9, n, p=truth))


def fit_one(recs, seed, steps=1000, burn_in=500, pr=None):
    cfg = SamplerConfig(seed=seed, steps=steps, burn_in=burn_in, fixed={"pitcher_offsets", "weights"}, init_weights=(1.0, 1.0))
    return sample_posterior(
        recs,
        pr or prior(),
        cfg,
        league=LEAGUE2,
        order_rates=np.broadcast_to(LEAGUE2, (9, 2, 9)).copy(),
        initial=Params({"P1": (LEAGUE_RATES, np.ones(9))}, (np.ones(9), np.ones(9))),
    )


class TestSampler:
    def test_deterministic(self):
        _, recs = synthetic_pitcher(1, 300)
        a, b = fit_one(recs, 4, steps=200, burn_in=100), fit_one(recs, 4, steps=200, burn_in=100)
        np.testing.assert_array_equal(a.pitchers["P1"].base, b.pitchers["P1"].base)
        assert a.acceptance == b.acceptance

    def test_recovery_improves_with_sample_size(self):
        small, large = [], []
        for cfg in range(20):
            truth, recs = synthetic_pitcher(100 + cfg, 2000)
            mask = truth >= 0.05
            for n, bucket in ((200, small), (2000, large)):
                est = fit_one(recs[:n], cfg, steps=600, burn_in=300).pitchers["P1"].base
                bucket.extend(np.abs(est - truth)[mask])
        assert np.median(large) < np.median(small)

    def test_constraints_hold_and_diagnostics(self):
        _, recs = synthetic_pitcher(3, 400)
        league = league_rates(recs)
        s = sample_posterior(
            recs, prior(), SamplerConfig(seed=2, steps=300, burn_in=300), league=league, order_rates=np.broadcast_to(league, (9, 2, 9)).copy()
        )
        w = s.weights
        assert np.all((w.pitcher + w.batter >= 1 - 1e-12) & (w.pitcher + w.batter <= 2 + 1e-12))
        p = s.pitchers["P1"]
        assert np.all((p.base > 0) & (p.base < 1)) and np.all(p.offsets > 0)
        acc = s.diagnostics()["acceptance"]
        assert set(acc) == {"pitcher_base", "pitcher_offsets", "weights"}
        assert all(0.05 < v < 0.8 for v in acc.values())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(seed=None)
        with pytest.raises(ValueError):
            SamplerConfig(seed=1, fixed={"nonsense"})


class TestRecencyChains:
    def recs(self, n):
        return make_records([0] * n, batters=1)

    def test_2200(self):
        r = self.recs(2200)
        ch = build_recency_chains({"P1": r})
        assert ch.sizes("P1") == (2000, 1500, 1000, 500)
        kept = {id(x) for c in ch.chains["P1"] for x in c}
        # newest are the last rows (later dates); the oldest 200 are gone
        assert not any(id(x) in kept for x in r[:200])

    def test_small_players(self):
        for n in (300, 500):
            ch = build_recency_chains({"P1": self.recs(n)})
            assert ch.sizes("P1") == (n,) * 4
            assert len({c for c in ch.chains["P1"]}) == 1

    def test_block_membership(self):
        r = self.recs(2000)
        ch = build_recency_chains({"P1": r})
        count = {}
        for c in ch.chains["P1"]:
            for x in c:
                count[id(x)] = count.get(id(x), 0) + 1
        newest_first = r[::-1]
        for k in range(4):
            block = newest_first[500 * k : 500 * (k + 1)]
            assert {count[id(x)] for x in block} == {4 - k}
        total = sum(count.values())
        shares = [sum(count[id(x)] for x in newest_first[500 * k : 500 * (k + 1)]) / total for k in range(4)]
        np.testing.assert_allclose(shares, [0.4, 0.3, 0.2, 0.1])

    def test_chain_datasets_intersect_roles(self):
        # one pitcher with 1000 PAs against batters with few PAs each
        r = make_records([0] * 1000, batters=50)
        sets = chain_datasets(r)
        assert [len(s) for s in sets] == [1000, 1000, 1000, 500]


class TestVariants:
    def test_unseen_pitcher_uses_prior_mean(self, fixture_records):
        m = fit_variant("P", fixture_records, FitConfig(seed=1, steps=100, burn_in=100))
        p = m.pitcher_params("nobody")
        np.testing.assert_array_equal(p.base, m.pitcher_prior.base_mean)
        np.testing.assert_array_equal(p.offsets, m.pitcher_prior.offset_mean)

    def test_unknown_variant_and_br_without_steals(self, fixture_records):
        with pytest.raises(ValueError, match="variant"):
            fit_variant("XYZ", fixture_records, FitConfig(seed=1))
        with pytest.raises(ValueError, match="steal"):
            fit_variant("BR", fixture_records, FitConfig(seed=1))

    def test_pbr_equals_pb_when_chains_coincide(self, fixture_records):
        cfg = FitConfig(seed=3, steps=1500, burn_in=500, min_pa=10)
        pb = fit_variant("PB", fixture_records, cfg)
        pbr = fit_variant("PBR", fixture_records, cfg)
        # every player has fewer than 500 PAs, so all four chains are the full data
        for pid in pb.pitchers:
            np.testing.assert_allclose(pbr.pitchers[pid].base, pb.pitchers[pid].base, atol=0.01)
        assert len(pbr.diagnostics["chains"]) == 4

    def test_pbr_tracks_drift(self):
        rng = np.random.default_rng(9)
        early = LEAGUE_RATES.copy()
        early[0] = 0.15
        early /= early.sum()
        late = early.copy()
        late[0] = 0.30
        late[1:] *= (1 - 0.30) / late[1:].sum()
        outs = np.concatenate([rng.choice(9, 1000, p=early / early.sum()), rng.choice(9, 1000, p=late)])
        main = make_records(outs, pitcher="ace", batters=60)
        # a second pitcher so the priors have two qualifying players
        other = make_records(rng.choice(9, 400, p=LEAGUE_RATES / LEAGUE_RATES.sum()), pitcher="mate", batters=60, start=0)
        recs = main + other
        cfg = FitConfig(seed=5, steps=800, burn_in=400)
        pr = prior(60.0)
        pb = fit_variant("PB", recs, cfg, priors=pr, batter_priors=pr)
        pbr = fit_variant("PBR", recs, cfg, priors=pr, batter_priors=pr)

        def k_rate(m):
            return m.outcome_probs("ace", "R", "new batter", "R", 0)[Outcome.STRIKEOUT]

        assert abs(k_rate(pbr) - 0.30) < abs(k_rate(pb) - 0.30)

    def test_model_json_round_trip(self, fixture_records, tmp_path):
        m = fit_variant("P", fixture_records, FitConfig(seed=2, steps=100, burn_in=50))
        m.save(tmp_path / "m.json")
        back = MatchupModel.load(tmp_path / "m.json")
        assert back.to_json() == m.to_json()
        for pid, p in m.pitchers.items():
            np.testing.assert_array_equal(back.pitchers[pid].base, p.base)
