"""Fitted matchup models and their JSON file format.

A :class:`MatchupModel` answers the two questions the simulator asks about a
plate appearance: the outcome distribution for a pitcher/batter pair in a
given lineup slot, and the base-running table that applies to the batter.
Players the model has never seen fall back to prior means.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .baserunning import (
    StealProfile,
    TransitionTable,
    batter_mixture_weights,
    batter_transition_table,
)
from .events import N_OUTCOMES, same_hand
from .outcome_model import Log5Weights, ParameterError, PlayerParams, outcome_distribution

FORMAT_VERSION = 1
VARIANTS = ("P", "PB", "PBR", "BR")


@dataclass(frozen=True)
class PriorSpec:
    """Beta priors on base probabilities and gamma priors on offsets, per outcome."""

    base_alpha: np.ndarray
    base_beta: np.ndarray
    offset_shape: np.ndarray
    offset_rate: np.ndarray

    def __post_init__(self):
        for name in ("base_alpha", "base_beta", "offset_shape", "offset_rate"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (N_OUTCOMES,) or np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ParameterError(f"{name} must be a positive 9-vector")
            object.__setattr__(self, name, v)

    @property
    def base_mean(self) -> np.ndarray:
        return self.base_alpha / (self.base_alpha + self.base_beta)

    @property
    def offset_mean(self) -> np.ndarray:
        return self.offset_shape / self.offset_rate

    def mean_params(self) -> PlayerParams:
        return PlayerParams(self.base_mean, self.offset_mean)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("base_alpha", "base_beta", "offset_shape", "offset_rate")}

    @classmethod
    def from_dict(cls, d: dict) -> PriorSpec:
        return cls(**{k: np.asarray(v, dtype=float) for k, v in d.items()})


@dataclass
class RunningModel:
    """Steal-rate stratified base running: group tables plus each batter's
    steal counts, from which mixture weights are derived."""

    group_tables: tuple[TransitionTable, ...]
    boundaries: np.ndarray
    steal_prior: tuple[float, float]
    steal_counts: dict[str, tuple[int, int]]

    def profile(self, batter_id: str) -> StealProfile:
        n, x = self.steal_counts.get(batter_id, (0, 0))
        return StealProfile(n, x, *self.steal_prior)

    def weights(self, batter_id: str) -> np.ndarray:
        return batter_mixture_weights(self.profile(batter_id), self.boundaries)


def _player_dict(players: dict[str, PlayerParams]) -> dict:
    return {pid: {"base": p.base.tolist(), "offsets": p.offsets.tolist()} for pid, p in sorted(players.items())}


def _player_from(d: dict) -> dict[str, PlayerParams]:
    return {pid: PlayerParams(np.asarray(v["base"]), np.asarray(v["offsets"])) for pid, v in d.items()}


@dataclass
class MatchupModel:
    variant: str
    league: np.ndarray
    order_rates: np.ndarray
    weights: Log5Weights
    pitchers: dict[str, PlayerParams]
    batters: dict[str, PlayerParams]
    pitcher_prior: PriorSpec
    batter_prior: PriorSpec | None
    league_table: TransitionTable
    running: RunningModel | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}; expected one of {VARIANTS}")
        self.league = np.asarray(self.league, dtype=float)
        self.order_rates = np.asarray(self.order_rates, dtype=float)
        self._probs_cache: dict = {}
        self._table_cache: dict = {}

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_probs_cache"] = {}
        state["_table_cache"] = {}
        return state

    @property
    def uses_batter_params(self) -> bool:
        return self.variant != "P"

    def pitcher_params(self, pitcher_id: str) -> PlayerParams:
        p = self.pitchers.get(pitcher_id)
        return p if p is not None else self.pitcher_prior.mean_params()

    def batter_params(self, batter_id: str) -> PlayerParams:
        p = self.batters.get(batter_id)
        if p is not None:
            return p
        if self.batter_prior is None:
            raise KeyError(f"model variant {self.variant} has no batter parameters")
        return self.batter_prior.mean_params()

    def outcome_probs(self, pitcher_id: str, pitcher_hand: str, batter_id: str, batter_hand: str, slot: int) -> np.ndarray:
        """Outcome distribution for a matchup; ``slot`` is the 0-based lineup slot."""
        key = (pitcher_id, pitcher_hand, batter_id, batter_hand, slot)
        probs = self._probs_cache.get(key)
        if probs is None:
            h = same_hand(pitcher_hand, batter_hand)
            if self.uses_batter_params:
                side = self.batter_params(batter_id)
            else:
                side = self.order_rates[slot, h]
            probs = outcome_distribution(self.pitcher_params(pitcher_id), side, self.league[h], self.weights, h)
            probs.setflags(write=False)
            self._probs_cache[key] = probs
        return probs

    def transition_table(self, batter_id: str) -> TransitionTable:
        if self.running is None:
            return self.league_table
        table = self._table_cache.get(batter_id)
        if table is None:
            table = batter_transition_table(self.running.weights(batter_id), self.running.group_tables)
            self._table_cache[batter_id] = table
        return table

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "format_version": FORMAT_VERSION,
            "variant": self.variant,
            "league_rates": self.league.tolist(),
            "batting_order_rates": self.order_rates.tolist(),
            "weights": {"pitcher": self.weights.pitcher.tolist(), "batter": self.weights.batter.tolist()},
            "pitcher_prior": self.pitcher_prior.to_dict(),
            "batter_prior": None if self.batter_prior is None else self.batter_prior.to_dict(),
            "pitchers": _player_dict(self.pitchers),
            "batters": _player_dict(self.batters),
            "league_table": self.league_table.to_rows(),
            "base_running": None,
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }
        if self.running is not None:
            d["base_running"] = {
                "group_tables": [t.to_rows() for t in self.running.group_tables],
                "boundaries": self.running.boundaries.tolist(),
                "steal_prior": list(self.running.steal_prior),
                "steal_counts": {k: list(v) for k, v in sorted(self.running.steal_counts.items())},
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> MatchupModel:
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model file version {version!r}")
        running = None
        if d.get("base_running") is not None:
            br = d["base_running"]
            running = RunningModel(
                tuple(TransitionTable.from_rows(rows) for rows in br["group_tables"]),
                np.asarray(br["boundaries"], dtype=float),
                tuple(br["steal_prior"]),
                {k: (int(v[0]), int(v[1])) for k, v in br["steal_counts"].items()},
            )
        return cls(
            variant=d["variant"],
            league=np.asarray(d["league_rates"]),
            order_rates=np.asarray(d["batting_order_rates"]),
            weights=Log5Weights(np.asarray(d["weights"]["pitcher"]), np.asarray(d["weights"]["batter"])),
            pitchers=_player_from(d["pitchers"]),
            batters=_player_from(d["batters"]),
            pitcher_prior=PriorSpec.from_dict(d["pitcher_prior"]),
            batter_prior=None if d["batter_prior"] is None else PriorSpec.from_dict(d["batter_prior"]),
            league_table=TransitionTable.from_rows(d["league_table"]),
            running=running,
            diagnostics=d.get("diagnostics", {}),
            provenance=d.get("provenance", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> MatchupModel:
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> MatchupModel:
        return cls.from_json(Path(path).read_text())
