"""Simulated games, exact win expectancy and one managerial decision.

Run with ``python3 demos/win_probability_and_manager.py``.
"""

# %%
import json
from importlib.resources import files

import numpy as np

from matchupsim.decisions import FIELDING
from matchupsim.gamesim import GameSpec, GameState, Roster, simulate_many
from matchupsim.manager import EXACT, ManagerConfig, decide
from matchupsim.model import MatchupModel
from matchupsim.winexp import WinExpectancy

data = files("matchupsim") / "data"
model = MatchupModel.load(data / "fixture_model.json")
home = Roster.from_dict(json.loads((data / "home_roster.json").read_text()))
away = Roster.from_dict(json.loads((data / "away_roster.json").read_text()))

# %% [markdown]
# With nobody managing, the home win probability from the first pitch can be
# computed exactly from the plate-appearance Markov chain.  Simulation agrees.

# %%
exact = WinExpectancy(model).home_win(GameState.start(home, away))
sim = simulate_many(5000, GameSpec(home, away, model, model), seed=1)
se = np.sqrt(exact * (1 - exact) / sim.n)
print(f"exact {exact:.4f}  simulated {sim.home_win_rate:.4f} (+/- {2 * se:.4f})")

# %% [markdown]
# Late and close: bottom of the ninth, tied, one out, runner on second.  A
# hitter with a huge home-run rate is due up, with two weak hitters behind him.
# Should the fielding side walk him?


# %%
class Situational:
    """The fixture model, except three hitters with hand-set rates."""

    variant = "demo"

    def __init__(self, base, special):
        self.base, self.special = base, special

    def outcome_probs(self, pid, phand, bid, bhand, slot):
        return self.special.get(bid, self.base.outcome_probs(pid, phand, bid, bhand, slot))

    def transition_table(self, bid):
        return self.base.transition_table(bid)


strikeout = np.eye(9)[0]
big_bat = np.zeros(9)
big_bat[8], big_bat[0] = 0.5, 0.5
lineup = list(home.lineup)
situational = Situational(model, {lineup[3].id: big_bat, lineup[4].id: strikeout, lineup[5].id: strikeout})

st = GameState.start(home, away)
st.inning, st.top, st.outs, st.bases, st.stage = 9, False, 1, 0b010, 1
st.home.runs = st.away.runs = 3
st.home.slot = 3
choice = decide(st, FIELDING, situational, ManagerConfig(evaluator=EXACT))
print(f"away manager chooses {choice.decision} (win probability {choice.value:.3f}, {choice.considered} options)")
