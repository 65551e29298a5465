"""End-to-end acceptance checks, one test per criterion."""

import datetime as dt
import json
import math

import numpy as np
import pytest
from conftest import DATA

from matchupsim.baserunning import (
    TransitionTable,
    batter_mixture_weights,
    batter_transition_table,
    build_group_tables,
    default_successor,
    league_table,
    read_steal_csv,
    steal_rate_posterior,
    StealProfile,
)
from matchupsim.cli import main
from matchupsim.evaluation import added_wins_posterior, gmp, read_odds_csv, roi_report, settle
from matchupsim.events import TERMINAL, BaseOutState, Outcome, PlateAppearanceRecord
from matchupsim.gamesim import GameSpec, Roster, simulate_many
from matchupsim.inference import FitConfig, Params, PlayerSummary, SamplerConfig, fit_priors, fit_variant, sample_posterior
from matchupsim.manager import EXACT, Equilibrium, ManagerConfig
from matchupsim.outcome_model import Log5Weights, PlayerParams, outcome_distribution
from matchupsim.synthetic import LEAGUE_RATES, information_scenario, speed_table

from test_baserunning import beta_mass_dense


def criterion(number, title):
    def mark(fn):
        fn.criterion, fn.criterion_title = number, title
        return fn

    return mark


def roster(name):
    return Roster.from_dict(json.loads((DATA / name).read_text()))


REPORTED = [(1.788, 16.73), (1.772, 17.00), (1.771, 17.02), (1.166, 31.15)]


@pytest.mark.xfail(
    strict=True,
    reason="exp(-1.166) is 31.161%, which rounds to 31.16%; the reported 31.15% was computed from an unrounded loss",
)
@criterion(1, "GMP identity against the reported losses")
def test_gmp_identity():
    for loss, pct in REPORTED:
        assert gmp(loss) == math.exp(-loss)
    misses = [(loss, pct) for loss, pct in REPORTED if abs(round(100 * gmp(loss), 2) - pct) > 0.005]
    assert not misses, f"rows off by more than 0.005 points: {misses}"


def test_reported_gmp_consistent_with_loss_precision():
    # every row is reproduced by some loss that rounds to the printed value
    for loss, pct in REPORTED:
        lo, hi = 100 * gmp(loss + 0.0005), 100 * gmp(loss - 0.0005)
        assert lo - 0.005 <= pct <= hi + 0.005
    assert [round(100 * gmp(x), 2) for x, _ in REPORTED[:3]] == [p for _, p in REPORTED[:3]]


@criterion(2, "symmetry over 100,000 passive games")
def test_symmetry(fixture_model):
    r = roster("home_roster.json")
    n = 100_000
    res = simulate_many(n, GameSpec(r, r, fixture_model, fixture_model), seed=2024)
    rate = res.home_wins / n
    print(f"home win rate {rate:.4f}")
    assert abs(rate - 0.5) < 3 * math.sqrt(0.25 / n)


def _pitcher_records(outcomes):
    out = []
    for i, o in enumerate(outcomes):
        succ, runs = default_successor(0, int(o))
        out.append(
            PlateAppearanceRecord(
                dt.date(2024, 4, 1) + dt.timedelta(days=i // 40), "P1", f"b{i % 9}", "R", "L" if i % 2 else "R",
                i % 9 + 1, Outcome(int(o)), BaseOutState(0), BaseOutState.from_index(succ), runs,
            )
        )
    return out


@criterion(3, "posterior recovery for one pitcher from 2000 plate appearances")
def test_posterior_recovery():
    rng = np.random.default_rng(0)

    def draw():
        t = LEAGUE_RATES * np.exp(rng.normal(0, 0.15, 9))
        return t / t.sum()

    # the prior comes from a population of pitchers like the one being fitted
    priors = fit_priors({f"p{i}": PlayerSummary(1000, draw(), np.ones(9)) for i in range(300)})
    truth = draw()
    records = _pitcher_records(rng.choice(9, 2000, p=truth))
    league = np.vstack([LEAGUE_RATES, LEAGUE_RATES])
    cfg = SamplerConfig(seed=0, steps=2000, burn_in=1000, fixed={"pitcher_offsets", "weights"}, init_weights=(1.0, 1.0))
    fit = lambda: sample_posterior(  # noqa: E731
        records, priors, cfg, league=league, order_rates=np.broadcast_to(league, (9, 2, 9)).copy(),
        initial=Params({"P1": (priors.base_mean, np.ones(9))}, (np.ones(9), np.ones(9))),
    ).pitchers["P1"].base
    est = fit()
    mask = truth >= 0.05
    err = np.abs(est - truth)[mask]
    print("max abs error", err.max())
    assert np.all(err < 0.02)
    np.testing.assert_array_equal(fit(), est)


@criterion(4, "log5 fixed point over 1,000 random draws")
def test_log5_fixed_point():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        c = rng.dirichlet(np.ones(9))
        c = np.clip(c, 1e-6, None)
        c /= c.sum()
        while True:
            P, B = rng.uniform(0.25, 1.75, (2, 9))
            if np.all((P + B >= 1) & (P + B <= 2)):
                break
        out = outcome_distribution(PlayerParams(c, np.ones(9)), c, c, Log5Weights(P, B), int(rng.integers(2)))
        np.testing.assert_allclose(out, c, atol=1e-12, rtol=0)


@criterion(5, "steal posterior exactness and mixture weights against dense integration")
def test_steal_posterior_and_mixture():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        a, b = rng.uniform(0.1, 50, 2)
        n = int(rng.integers(0, 5000))
        x = int(rng.integers(0, n + 1))
        expect = (a + x) / (a + b + n)
        assert abs(steal_rate_posterior(x, n, a, b) - expect) <= 2 * np.spacing(expect)
    bounds = [0.03, 0.06, 0.09, 0.13]
    edges = [0.0] + bounds + [1.0]
    for n, x, a, b in [(50, 5, 2, 18), (400, 10, 3, 37), (0, 0, 4, 40), (120, 30, 1, 1)]:
        w = batter_mixture_weights(StealProfile(n, x, a, b), bounds)
        oracle = [beta_mass_dense(a + x, b + n - x, edges[i], edges[i + 1]) for i in range(5)]
        np.testing.assert_allclose(w, oracle, atol=1e-3)


def _forced_rows_hold(t: TransitionTable):
    p = t.probs
    for s in range(24):
        outs, bases = divmod(s, 8)
        assert p[s, Outcome.HOME_RUN, outs * 8, bin(bases).count("1") + 1] == 1.0
        k_next = TERMINAL if outs == 2 else (outs + 1) * 8 + bases
        assert p[s, Outcome.STRIKEOUT, k_next, 0] == 1.0
    for outs in range(3):
        assert p[outs * 8, Outcome.WALK, outs * 8 + 1, 0] == 1.0


@criterion(6, "every transition table is valid and forced transitions are certain")
def test_transition_validity(fixture_records, fixture_model):
    steals = read_steal_csv(DATA / "steals.csv")
    rates = {b: steal_rate_posterior(x, n, 2, 30) for b, (n, x) in steals.items()}
    groups = build_group_tables(fixture_records, rates)
    tables = [TransitionTable.default(), league_table(fixture_records), *groups.tables]
    tables += [speed_table(s) for s in np.linspace(0, 1, 11)]
    tables += [batter_transition_table(batter_mixture_weights(StealProfile(n, x, 2, 30), groups.boundaries), groups.tables) for n, x in steals.values()]
    tables += [fixture_model.transition_table(b) for b in fixture_model.batters]
    for t in tables:
        assert t.probs.shape[:2] == (24, 9)  # 216 rows
        t.validate()
        _forced_rows_hold(t)


@pytest.mark.slow
@criterion(7, "information advantage: ground-truth manager beats a pitcher-only manager")
def test_information_advantage():
    sc = information_scenario(seed=7, n_games=1500)
    truth = sc.population.truth
    fitted = fit_variant("P", sc.records, FitConfig(seed=1, steps=1000, burn_in=500))
    cfg = ManagerConfig(evaluator=EXACT)
    knows, guesses = Equilibrium(truth, cfg), Equilibrium(fitted, cfg)
    half = 10_000
    # the same clubs throughout; the managers trade dugouts halfway
    a = simulate_many(half, GameSpec(sc.home, sc.away, truth, truth, policy_home=knows, policy_away=guesses), seed=71)
    b = simulate_many(half, GameSpec(sc.home, sc.away, truth, truth, policy_home=guesses, policy_away=knows), seed=72)
    n = 2 * half
    rate = (a.home_wins + b.away_wins) / n
    sigma = math.sqrt(0.25 / n)
    print(f"ground-truth manager win rate {rate:.4f} ({(rate - 0.5) / sigma:.1f} sigma)")
    assert rate - 0.5 > 3 * sigma


@criterion(8, "added wins of a model against itself are zero")
def test_added_wins_null(fixture_model):
    home, away = roster("home_roster.json"), roster("away_roster.json")
    per_game = []
    for k, (h, a) in enumerate([(home, away), (away, home), (home, home), (away, away)]):
        spec = GameSpec(h, a, fixture_model, fixture_model)
        base = simulate_many(400, spec, seed=80 + k)
        chal = simulate_many(400, spec, seed=80 + k)
        per_game.append(((base.home_wins, 400), (chal.home_wins, 400)))
    post = added_wins_posterior(per_game, samples=100_000, seed=8)
    assert abs(post.mean) < 3 * post.mc_se


@criterion(9, "betting arithmetic matches a hand-settled ledger")
def test_betting_arithmetic():
    odds = read_odds_csv((DATA / "odds.csv").read_text())
    preds = dict(line.split(",") for line in (DATA / "predictions.csv").read_text().splitlines()[1:])
    probs = [float(preds[g.game_id]) for g in odds]
    rows = roi_report(probs, odds, [0.0, 0.015, 0.03])
    # hand ledger: g1 home +666.67, g2 home -1000, g3 away +909.09, g4 home +1500 (g4 edge 0.005)
    hand = {
        0.0: (4, (1000 / 1.5 - 1000 + 1000 / 1.1 + 1500) / 4000),
        0.015: (3, (1000 / 1.5 - 1000 + 1000 / 1.1) / 3000),
        0.03: (1, (1000 / 1.5) / 1000),
    }
    for r in rows:
        assert (r.bets, r.roi) == (hand[r.cushion][0], pytest.approx(hand[r.cushion][1], abs=1e-12))
    counts = [r.bets for r in rows]
    assert counts == sorted(counts, reverse=True)
    assert settle(-150, 1.0, True) == pytest.approx(2 / 3, abs=1e-15)
    single = roi_report([0.9], odds[:1], [0.0])[0]
    assert round(100 * single.roi, 2) == 66.67


@criterion(10, "fit and simulate are byte-identical across runs and worker counts")
def test_determinism(tmp_path):
    import shutil

    for f in DATA.iterdir():
        shutil.copy(f, tmp_path / f.name)
    fits = []
    for _ in range(2):
        assert main(["fit", "--variant", "PB", "--data", str(tmp_path / "events.csv"), "--seed", "10", "--min-pa", "10",
                     "--steps", "300", "--burn-in", "200", "--output", str(tmp_path / "model.json")]) == 0
        fits.append((tmp_path / "model.json").read_bytes())
    assert fits[0] == fits[1]
    sims = []
    for workers in (1, 1, 4):
        assert main(["simulate", "--spec", str(tmp_path / "game_spec.json"), "--n", "300", "--seed", "10",
                     "--workers", str(workers), "--output", str(tmp_path / "games.csv")]) == 0
        sims.append((tmp_path / "games.csv").read_bytes())
    assert sims[0] == sims[1] == sims[2]
