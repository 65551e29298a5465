"""Regenerate the small fixture files shipped in ``src/matchupsim/data``.

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from matchupsim.events import serialize_event_log
from matchupsim.synthetic import generate_records, make_population, population_roster

DATA = Path(__file__).resolve().parents[1] / "src" / "matchupsim" / "data"

# four games settled by hand in the tests
ODDS = [
    ("g1", "HOM", "AWY", -150, 130, 1, 0.70),
    ("g2", "HOM", "AWY", 120, -140, 0, 0.48),
    ("g3", "HOM", "AWY", -110, -110, 0, 0.45),
    ("g4", "HOM", "AWY", 150, -170, 1, 0.405),
]


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    pop = make_population(seed=11, n_pitchers=6, n_batters=27)
    pop.truth.save(DATA / "fixture_model.json")

    arms = sorted(pop.pitchers.values(), key=lambda p: p.id)
    # two workhorse arms so a pitcher-level fit has qualifying players
    records = generate_records(pop, n_games=8, seed=12, staffs=[arms[:1], arms[1:2]])[:500]
    (DATA / "events.csv").write_bytes(serialize_event_log(records))

    with open(DATA / "steals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["batter_id", "opportunities", "steals"])
        for b, (n, x) in sorted(pop.steals.items()):
            w.writerow([b, n, x])

    home = population_roster(pop, seed=13, name="home")
    away = population_roster(pop, seed=14, name="away")
    for name, roster in (("home", home), ("away", away)):
        (DATA / f"{name}_roster.json").write_text(json.dumps(roster.to_dict(), indent=1) + "\n")
    spec = {
        "home": "home_roster.json",
        "away": "away_roster.json",
        "model_home": "fixture_model.json",
        "model_away": "fixture_model.json",
        "policy_home": "passive",
        "policy_away": "passive",
    }
    (DATA / "game_spec.json").write_text(json.dumps(spec, indent=1) + "\n")

    with open(DATA / "odds.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["game_id", "home_team", "away_team", "home_ml", "away_ml", "home_won"])
        for row in ODDS:
            w.writerow(row[:6])
    with open(DATA / "predictions.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["game_id", "model_home_prob"])
        for row in ODDS:
            w.writerow([row[0], row[6]])


if __name__ == "__main__":
    main()
