"""Log5 outcome model: handedness adjustment, log-odds combination, squash
and renormalization across the nine plate-appearance outcomes.

The scalar functions mirror the vectorized ``log_outcome_probs`` used by the
sampler; both go through the same clamping guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import N_OUTCOMES

PROB_FLOOR = 1e-9
WEIGHT_LOW = 0.25
WEIGHT_HIGH = 1.75


class ParameterError(ValueError):
    """A model parameter lies outside its domain."""


def _clamp(p):
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def logit(p):
    p = _clamp(p)
    return np.log(p) - np.log1p(-p)


@dataclass(frozen=True)
class PlayerParams:
    """Base probabilities and handedness offsets for one pitcher or batter."""

    base: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        if base.shape != (N_OUTCOMES,) or offsets.shape != (N_OUTCOMES,):
            raise ParameterError("base and offsets must be 9-vectors")
        if not np.all((base > 0) & (base < 1)):
            raise ParameterError(f"base probabilities must lie in (0, 1): {base}")
        if not np.all(offsets > 0):
            raise ParameterError(f"offsets must be positive: {offsets}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "offsets", offsets)

    def adjusted(self, h: int) -> np.ndarray:
        return handedness_adjust(self.base, self.offsets, h)


PitcherParams = PlayerParams
BatterParams = PlayerParams


@dataclass(frozen=True)
class Log5Weights:
    """League-wide pitcher and batter log5 weights, one pair per outcome."""

    pitcher: np.ndarray
    batter: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pitcher, dtype=float)
        b = np.asarray(self.batter, dtype=float)
        if p.shape != (N_OUTCOMES,) or b.shape != (N_OUTCOMES,):
            raise ParameterError("weights must be 9-vectors")
        if not weights_feasible(p, b):
            raise ParameterError(f"infeasible log5 weights P={p}, B={b}")
        object.__setattr__(self, "pitcher", p)
        object.__setattr__(self, "batter", b)

    @classmethod
    def neutral(cls) -> Log5Weights:
        return cls(np.ones(N_OUTCOMES), np.ones(N_OUTCOMES))


def weights_feasible(p, b, tol: float = 1e-12) -> bool:
    p = np.asarray(p)
    b = np.asarray(b)
    s = p + b
    return bool(
        np.all(p >= WEIGHT_LOW - tol)
        and np.all(p <= WEIGHT_HIGH + tol)
        and np.all(b >= WEIGHT_LOW - tol)
        and np.all(b <= WEIGHT_HIGH + tol)
        and np.all(s >= 1 - tol)
        and np.all(s <= 2 + tol)
    )


def handedness_adjust(base, offset, h: int):
    """Split a base probability into its same- or opposite-hand variant.

    Opposite hands (``h=0``) raise the base probability to the offset; same
    hands (``h=1``) raise it to the reciprocal.  Works elementwise on arrays.
    """
    base_arr = np.asarray(base, dtype=float)
    offset_arr = np.asarray(offset, dtype=float)
    if np.any((base_arr <= 0) | (base_arr >= 1)):
        raise ParameterError(f"base probability must lie in (0, 1): {base}")
    if np.any(offset_arr <= 0):
        raise ParameterError(f"offset must be positive: {offset}")
    if h not in (0, 1):
        raise ParameterError(f"handedness flag must be 0 or 1, got {h}")
    exponent = offset_arr if h == 0 else 1.0 / offset_arr
    out = base_arr**exponent
    return float(out) if out.ndim == 0 else out


def log5_combine(a, b, c, P, B):
    """Weighted log-odds combination of pitcher, batter and league rates."""
    for name, v in (("a", a), ("b", b), ("c", c)):
        v = np.asarray(v)
        if np.any((v <= 0) | (v >= 1)):
            raise ParameterError(f"{name} must lie in (0, 1) for a finite logit")
    if not weights_feasible(np.atleast_1d(P), np.atleast_1d(B)):
        raise ParameterError(f"infeasible log5 weights P={P}, B={B}")
    out = P * logit(a) + B * logit(b) - (P + B - 1.0) * logit(c)
    return float(out) if np.ndim(out) == 0 else out


def squash(S):
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise ParameterError("squash requires finite input")
    out = 1.0 / (1.0 + np.exp(-S))
    return float(out) if out.ndim == 0 else out


def outcome_distribution(
    pitcher: PlayerParams,
    batter_side: PlayerParams | np.ndarray,
    league: np.ndarray,
    weights: Log5Weights,
    h: int,
) -> np.ndarray:
    """Probability of each of the nine outcomes for one matchup.

    ``batter_side`` is either fitted batter parameters (adjusted for
    handedness the same way as the pitcher) or a fixed rate vector such as a
    batting-order row.
    """
    a = pitcher.adjusted(h)
    if isinstance(batter_side, PlayerParams):
        b = batter_side.adjusted(h)
    else:
        b = np.asarray(batter_side, dtype=float)
    c = np.asarray(league, dtype=float)
    x = squash(log5_combine(_clamp(a), _clamp(b), _clamp(c), weights.pitcher, weights.batter))
    return x / x.sum()


def log_outcome_probs(log_a, logit_b, logit_c, P, B):
    """Vectorized log outcome probabilities.

    ``log_a`` holds log pitcher-side probabilities (already handedness
    adjusted), ``logit_b``/``logit_c`` the batter and league log-odds; all are
    ``(..., 9)`` arrays.  Returns ``log X`` with the same shape.
    """
    log_a = np.clip(log_a, math.log(PROB_FLOOR), math.log1p(-PROB_FLOOR))
    logit_a = log_a - np.log1p(-np.exp(log_a))
    S = P * logit_a + B * logit_b - (P + B - 1.0) * logit_c
    log_x = -np.logaddexp(0.0, -S)
    return log_x - np.logaddexp.reduce(log_x, axis=-1, keepdims=True)
