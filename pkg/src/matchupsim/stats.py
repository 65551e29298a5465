"""Method-of-moments fits shared by the prior builders."""

from __future__ import annotations

import numpy as np

# Relative variance floor: a population with (near) zero spread becomes a
# prior with effective sample size ~1e4 instead of an infinite one.
MIN_RELATIVE_VARIANCE = 1e-4


def beta_from_moments(values) -> tuple[float, float]:
    """``(alpha, beta)`` matching the sample mean and variance of ``values``."""
    x = np.asarray(values, dtype=float)
    m = float(x.mean())
    if not 0 < m < 1:
        raise ValueError(f"beta moment fit needs a mean inside (0, 1), got {m}")
    v = float(x.var(ddof=1)) if x.size > 1 else 0.0
    cap = m * (1 - m)
    v = min(max(v, MIN_RELATIVE_VARIANCE * cap), 0.99 * cap)
    total = cap / v - 1.0
    return m * total, (1 - m) * total


def gamma_from_moments(values) -> tuple[float, float]:
    """``(shape, rate)`` matching the sample mean and variance of ``values``."""
    x = np.asarray(values, dtype=float)
    m = float(x.mean())
    if m <= 0:
        raise ValueError(f"gamma moment fit needs a positive mean, got {m}")
    v = float(x.var(ddof=1)) if x.size > 1 else 0.0
    v = max(v, MIN_RELATIVE_VARIANCE * m * m)
    return m * m / v, m / v
