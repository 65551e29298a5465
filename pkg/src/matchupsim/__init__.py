"""Matchup models, base-out game simulation and an AI manager for baseball."""

__version__ = "0.1.0"

from .decisions import ChangePitcher, Decision, IntentionalWalk, NoAction, PinchHit
from .events import BaseOutState, Outcome, PlateAppearanceRecord, parse_event_log
from .gamesim import GameSpec, Player, Roster, simulate_game, simulate_many
from .inference import FitConfig, fit_variant
from .manager import Equilibrium, ManagerConfig, Passive, Scripted
from .model import MatchupModel
from .outcome_model import Log5Weights, PlayerParams, outcome_distribution

__all__ = [
    "BaseOutState",
    "ChangePitcher",
    "Decision",
    "Equilibrium",
    "FitConfig",
    "GameSpec",
    "IntentionalWalk",
    "Log5Weights",
    "ManagerConfig",
    "MatchupModel",
    "NoAction",
    "Outcome",
    "Passive",
    "PinchHit",
    "PlateAppearanceRecord",
    "Player",
    "PlayerParams",
    "Roster",
    "Scripted",
    "fit_variant",
    "outcome_distribution",
    "parse_event_log",
    "simulate_game",
    "simulate_many",
]
