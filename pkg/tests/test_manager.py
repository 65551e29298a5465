import math

import numpy as np
import pytest
from conftest import StubModel, make_roster, one_hot
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from matchupsim.decisions import (
    BATTING,
    FIELDING,
    ChangePitcher,
    IntentionalWalk,
    NoAction,
    PinchHit,
    ProtocolError,
    is_legal,
    legal_decisions,
)
from matchupsim.events import Outcome
from matchupsim.gamesim import GameSpec, GameState, decision_log_csv, simulate_game, simulate_many
from matchupsim.manager import (
    EXACT,
    Equilibrium,
    ManagerConfig,
    Passive,
    Scripted,
    _argmax,
    candidate_decisions,
    decide,
    estimate_value,
    make_policy,
    play_policy_match,
    read_decision_log,
)
from matchupsim.winexp import WinExpectancy

K = one_hot(Outcome.STRIKEOUT)
LEAGUE = np.array([0.22, 0.08, 0.01, 0.23, 0.21, 0.15, 0.05, 0.005, 0.045])
LEAGUE = LEAGUE / LEAGUE.sum()


def state(home=None, away=None, **kw):
    s = GameState.start(home or make_roster("h"), away or make_roster("a"))
    for k, v in kw.items():
        setattr(s, k, v)
    return s


class TestLegalDecisions:
    def test_fielding_with_runner_on_first(self):
        s = state(away=make_roster("a"), home=make_roster("h", n_pitchers=2), bases=0b001)
        assert legal_decisions(s, FIELDING) == [NoAction, ChangePitcher("hP1")]

    def test_walk_offered_with_first_open(self):
        assert IntentionalWalk in legal_decisions(state(), FIELDING)

    def test_batting_side(self):
        s = state(away=make_roster("a", n_bench=2))
        assert legal_decisions(s, BATTING) == [NoAction, PinchHit("aB0", 0), PinchHit("aB1", 0)]

    def test_terminal_and_bad_side(self):
        with pytest.raises(ProtocolError):
            legal_decisions(state(terminal=True), FIELDING)
        with pytest.raises(ValueError):
            legal_decisions(state(), "coach")

    def test_pruning(self):
        s = state(home=make_roster("h", n_pitchers=6), away=make_roster("a", n_bench=5))
        assert [d.player_id for d in candidate_decisions(s, FIELDING)[1:4]] == ["hP1", "hP2", "hP3"]
        assert len(candidate_decisions(s, FIELDING)) == 5  # NoAction, three relievers, walk
        assert len(candidate_decisions(s, BATTING)) == 3


class TestEstimateValue:
    def test_terminal(self):
        s = state(inning=9, top=False, terminal=True, winner="home")
        v = estimate_value(s, BATTING, NoAction, StubModel(K), rollouts=10)
        assert (v.value, v.rollouts, v.se) == (1.0, 0, 0.0)

    def test_illegal_decision(self):
        with pytest.raises(ProtocolError):
            estimate_value(state(), FIELDING, ChangePitcher("nobody"), StubModel(K))

    def test_symmetric_tie_is_a_coin_flip(self):
        # nobody can score, so only the capped-game coin flip decides it
        s = state(inning=29)
        v = estimate_value(s, FIELDING, NoAction, StubModel(K), rollouts=10_000, seed=4)
        assert abs(v.value - 0.5) < 3 * math.sqrt(0.25 / 10_000)
        assert v.se == pytest.approx(math.sqrt(v.value * (1 - v.value) / 10_000))

    def test_dominant_pitcher(self):
        home = make_roster("h", n_pitchers=2)
        away = make_roster("a")
        outs = np.zeros(9)
        outs[[Outcome.STRIKEOUT, Outcome.GROUND_OUT]] = 0.5
        model = StubModel(LEAGUE, per_pair={("hP1", f"a{i}"): outs for i in range(9)})
        s = state(home, away, inning=7, top=True)
        n = 10_000
        stay = estimate_value(s, FIELDING, NoAction, model, rollouts=n, seed=1)
        swap = estimate_value(s, FIELDING, ChangePitcher("hP1"), model, rollouts=n, seed=2)
        assert swap.value - stay.value > -3 * math.hypot(stay.se, swap.se)
        assert swap.value > stay.value


class TestDecide:
    def test_single_candidate(self):
        c = decide(state(bases=0b001), FIELDING, StubModel(K))
        assert c.decision == NoAction and c.considered == 1

    def test_identical_pitchers_tie_to_no_action(self):
        s = state(home=make_roster("h", n_pitchers=2), bases=0b001)
        c = decide(s, FIELDING, StubModel(LEAGUE), ManagerConfig(evaluator=EXACT))
        assert c.decision == NoAction and c.considered == 2

    @given(
        st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8),
        st.floats(0.01, 100.0),
        st.floats(-10.0, 10.0),
        st.floats(0.0, 0.05),
    )
    def test_argmax_affine_invariance(self, values, a, b, eps):
        scaled = [a * v + b for v in values]
        assert _argmax(scaled, a * eps) == _argmax(values, eps)

    def test_tie_rule(self):
        assert _argmax([0.5, 0.504], 0.005) == 0
        assert _argmax([0.5, 0.506], 0.005) == 1

    def walk_setup(self):
        # bottom 9, tied, one out, runner on second; slot 3 is a slugger and
        # the two hitters behind him always strike out
        slugger = np.zeros(9)
        slugger[Outcome.HOME_RUN], slugger[Outcome.STRIKEOUT] = 0.6, 0.4
        model = StubModel(LEAGUE, per_batter={"h3": slugger, "h4": K, "h5": K})
        s = state(inning=9, top=False, outs=1, bases=0b010, stage=1)
        s.home.slot = 3
        s.home.runs = s.away.runs = 2
        return model, s

    def truncated_oracle(self, model):
        """Away win probability for each choice, enumerating the rest of the
        inning and valuing the tied 10th exactly."""
        we = WinExpectancy(model)

        def tenth(home_slot):
            t = state(inning=10, top=True, bases=0b010)
            t.home.slot = home_slot
            t.home.runs = t.away.runs = 2
            return 1 - we.home_win(t)

        pitch = 0.4 * tenth(5)  # homer ends it; after a strikeout slot 4 ends the inning
        walk = tenth(6)  # slots 4 and 5 strike out
        return pitch, walk

    def test_intentional_walk_against_expectimax(self):
        model, s = self.walk_setup()
        pitch, walk = self.truncated_oracle(model)
        assert walk > pitch
        c = decide(s, FIELDING, model, ManagerConfig(evaluator=EXACT))
        assert c.decision == IntentionalWalk
        assert c.value == pytest.approx(walk, abs=1e-9)
        v = estimate_value(s, FIELDING, NoAction, model, exact=WinExpectancy(model))
        assert v.value == pytest.approx(pitch, abs=1e-9)
        r = decide(s, FIELDING, model, ManagerConfig(rollouts=4000, seed=3))
        assert r.decision == IntentionalWalk
        assert abs(r.value - walk) < 4 * r.se + 1e-12

    def test_deterministic(self):
        model, s = self.walk_setup()
        cfg = ManagerConfig(rollouts=300, seed=9)
        assert decide(s, FIELDING, model, cfg) == decide(s, FIELDING, model, cfg)

    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(
        st.integers(1, 12),
        st.booleans(),
        st.integers(0, 2),
        st.integers(0, 7),
        st.integers(-3, 3),
        st.integers(0, 8),
        st.sampled_from([BATTING, FIELDING]),
    )
    def test_returns_legal_decisions(self, fixture_model, fixture_rosters, inning, top, outs, bases, diff, slot, side):
        home, away = fixture_rosters
        s = state(home, away, inning=inning, top=top, outs=outs, bases=bases, stage=0 if side == BATTING else 1)
        s.home.runs, s.away.runs = max(diff, 0), max(-diff, 0)
        s.batting.slot = slot
        if s.inning >= 9 and not s.top and s.home.runs > s.away.runs:
            s.home.runs = s.away.runs
        c = decide(s, side, fixture_model, ManagerConfig(evaluator=EXACT))
        assert is_legal(s, side, c.decision)
        assert c.decision in legal_decisions(s, side)


class TestPolicies:
    def test_make_policy(self, fixture_model):
        assert isinstance(make_policy("Passive"), Passive)
        assert isinstance(make_policy("equilibrium", fixture_model), Equilibrium)
        with pytest.raises(ValueError):
            make_policy("equilibrium")
        with pytest.raises(ValueError):
            make_policy("genius")

    def test_passive_symmetry(self, fixture_model):
        roster = make_roster("x", n_pitchers=2)
        model = StubModel(LEAGUE)
        res = play_policy_match(GameSpec(roster, roster, model, model), 4000, seed=2)
        # passive vs passive only differs by batting last; compare to the exact value
        p = WinExpectancy(model).home_win(GameState.start(roster, roster))
        assert abs(res.home_win_rate - p) < 3 * math.sqrt(p * (1 - p) / 4000)

    def test_scripted_replay_is_identical(self, fixture_model, fixture_rosters):
        home, away = fixture_rosters
        eq = Equilibrium(fixture_model, ManagerConfig(evaluator=EXACT))
        for i in range(10):
            r = simulate_game(home, away, fixture_model, fixture_model, policy_home=eq, seed=6, game_index=i)
            if r.decisions:
                break
        assert r.decisions, "no decisions in ten games"
        log = read_decision_log(decision_log_csv(r.decisions))
        again = simulate_game(home, away, fixture_model, fixture_model, policy_home=Scripted(log, "home"), seed=6, game_index=i)
        assert (again.winner, again.home_runs, again.away_runs, again.innings, again.plate_appearances) == (
            r.winner,
            r.home_runs,
            r.away_runs,
            r.innings,
            r.plate_appearances,
        )
        key = lambda d: (d.inning, d.half, d.side, d.decision.kind, d.decision.player_id)  # noqa: E731
        assert [key(d) for d in again.decisions] == [key(d) for d in r.decisions]

    def test_script_mismatch_raises(self, fixture_model, fixture_rosters):
        home, away = fixture_rosters
        bogus = read_decision_log(
            "inning,half,side,decision,player_id,value_mean,value_se,alternatives_considered\n5,top,fielding,NoAction,,,,3\n"
        )
        with pytest.raises(ProtocolError):
            simulate_game(home, away, fixture_model, fixture_model, policy_home=Scripted(bogus, "home"), seed=1)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ManagerConfig(evaluator="oracle")
        with pytest.raises(ValueError):
            ManagerConfig(rollouts=0)


@pytest.mark.slow
def test_equilibrium_beats_passive(fixture_model, fixture_rosters):
    home, away = fixture_rosters
    eq = Equilibrium(fixture_model, ManagerConfig(evaluator=EXACT))
    n = 20_000
    # equilibrium manages the home side in the first half, the away side in the second
    a = simulate_many(n // 2, GameSpec(home, away, fixture_model, fixture_model, policy_home=eq), seed=31)
    b = simulate_many(n // 2, GameSpec(home, away, fixture_model, fixture_model, policy_away=eq), seed=32)
    wins = a.home_wins + b.away_wins
    rate = wins / n
    se = math.sqrt(rate * (1 - rate) / n)
    print(f"equilibrium win rate {rate:.4f} (se {se:.4f})")
    assert rate - 0.5 > 3 * se
