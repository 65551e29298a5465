"""Matchup probabilities: from player rates to a plate-appearance forecast.

Run with ``python3 demos/matchup_probabilities.py``.
"""

# %% [markdown]
# A pitcher and a batter each carry a vector of base rates over the nine
# outcomes plus a handedness offset per outcome.  The log5 combination puts
# both against the league in log-odds space, then renormalizes.

# %%
import numpy as np

from matchupsim.events import OUTCOME_CODES, read_event_log
from matchupsim.inference import FitConfig, fit_variant
from matchupsim.outcome_model import Log5Weights, PlayerParams, outcome_distribution
from matchupsim.synthetic import LEAGUE_RATES

np.set_printoptions(precision=3, suppress=True)

ace = LEAGUE_RATES.copy()
ace[0] *= 1.5  # more strikeouts
ace[8] *= 0.6  # fewer homers
ace /= ace.sum()
slugger = LEAGUE_RATES.copy()
slugger[8] *= 2.0
slugger /= slugger.sum()

# offsets above 1 shrink a rate against same-handed hitters and raise it
# against opposite-handed ones
platoon = np.ones(9)
platoon[[5, 6, 8]] = 1.12
pitcher = PlayerParams(ace, platoon)
weights = Log5Weights(np.full(9, 0.9), np.full(9, 0.9))
for h, label in ((0, "same hand"), (1, "opposite hand")):
    p = outcome_distribution(pitcher, slugger, LEAGUE_RATES, weights, h)
    print(f"{label:>13}:", "  ".join(f"{c} {x:.3f}" for c, x in zip(OUTCOME_CODES, p)))

# %% [markdown]
# Fitting the pitcher-only variant on the bundled 500-record fixture takes a
# few seconds.  Pitchers the data never saw fall back to the prior mean.

# %%
from importlib.resources import files

records = read_event_log(files("matchupsim") / "data" / "events.csv").records
model = fit_variant("P", records, FitConfig(seed=1, steps=600, burn_in=400))
print("fitted pitcher weights:", model.weights.pitcher)
for pid in sorted(model.pitchers):
    probs = model.outcome_probs(pid, "R", "anyone", "L", 0)
    print(pid, "K", round(probs[0], 3), "HR", round(probs[8], 3))
print("unknown pitcher K rate", round(model.outcome_probs("rookie", "R", "anyone", "L", 0)[0], 3))
