"""Backtesting a model against moneylines.

Run with ``python3 demos/betting_backtest.py``.
"""

# %%
from importlib.resources import files

from matchupsim.evaluation import bet_ledger, implied_probability, overround, read_odds_csv, roi_confidence, roi_report

data = files("matchupsim") / "data"
odds = read_odds_csv((data / "odds.csv").read_text())
preds = {}
for line in (data / "predictions.csv").read_text().splitlines()[1:]:
    gid, p = line.split(",")
    preds[gid] = float(p)
probs = [preds[g.game_id] for g in odds]

# %% [markdown]
# Implied probabilities include the book's margin, so the two sides add up
# to a bit more than one.

# %%
for g in odds:
    print(g.game_id, g.home_ml, g.away_ml, round(implied_probability(g.home_ml), 4), "margin", round(overround(g.home_ml, g.away_ml), 4))

# %% [markdown]
# A bet goes down only when the model beats the implied probability by more
# than the cushion.  Larger cushions mean fewer, more confident bets.

# %%
cushions = [0.0, 0.015, 0.03, 0.06]
intervals = roi_confidence(probs, odds, cushions, mc_samples=20_000, seed=0)
for row, (_, lo, hi) in zip(roi_report(probs, odds, cushions), intervals):
    roi = "n/a" if row.bets == 0 else f"{row.roi:+.3f}"
    print(f"cushion {row.cushion:.3f}: {row.bets} bets, ROI {roi}, 90% band [{lo:+.3f}, {hi:+.3f}]")

for e in bet_ledger(probs, odds, 0.0):
    print(e.game_id, e.bet_side, e.result, round(e.payout, 2))
