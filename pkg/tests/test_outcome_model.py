import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchupsim.outcome_model import (
    Log5Weights,
    ParameterError,
    PlayerParams,
    handedness_adjust,
    log5_combine,
    log_outcome_probs,
    outcome_distribution,
    squash,
)

probs = st.floats(0.001, 0.999)
offsets = st.floats(0.2, 5.0)


def feasible_weights():
    return st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0)).map(lambda t: (0.5 + 0.5 * t[0], 0.5 + 0.5 * t[1]))


def test_handedness_identity_and_powers():
    assert handedness_adjust(0.2, 1.0, 0) == 0.2
    assert handedness_adjust(0.2, 1.0, 1) == 0.2
    assert handedness_adjust(0.25, 2.0, 0) == pytest.approx(0.0625, abs=1e-15)
    assert handedness_adjust(0.25, 2.0, 1) == pytest.approx(0.5, abs=1e-15)
    assert handedness_adjust(0.25, 2.0, 1) > handedness_adjust(0.25, 2.0, 0)


@pytest.mark.parametrize("base,off,h", [(0.0, 1.0, 0), (1.0, 1.0, 0), (0.3, 0.0, 1), (0.3, 1.0, 2)])
def test_handedness_domain(base, off, h):
    with pytest.raises(ParameterError):
        handedness_adjust(base, off, h)


@given(probs, offsets)
def test_handedness_reciprocity(p, o):
    assert handedness_adjust(p, o, 1) == pytest.approx(handedness_adjust(p, 1 / o, 0), rel=1e-12)


def test_log5_league_fixed_point():
    assert log5_combine(0.3, 0.3, 0.3, 0.7, 0.6) == pytest.approx(math.log(0.3 / 0.7), abs=1e-12)
    assert math.log(0.3 / 0.7) == pytest.approx(-0.8473, abs=1e-4)


def test_log5_hand_evaluation():
    lg = lambda p: math.log(p / (1 - p))  # noqa: E731
    expect = 0.7 * lg(0.25) + 0.6 * lg(0.20) - (0.7 + 0.6 - 1) * lg(0.22)
    assert log5_combine(0.25, 0.20, 0.22, 0.7, 0.6) == pytest.approx(expect, abs=1e-12)


@given(probs, probs, probs, st.floats(0.5, 0.5))
def test_log5_league_term_vanishes(a, b, c, p):
    assert log5_combine(a, b, c, p, 1 - p) == pytest.approx(log5_combine(a, b, 0.5, p, 1 - p), abs=1e-9)


def test_log5_domain():
    with pytest.raises(ParameterError):
        log5_combine(0.0, 0.2, 0.2, 1, 1)
    with pytest.raises(ParameterError):
        log5_combine(0.2, 0.2, 0.2, 1.0, 1.5)  # P + B > 2


def test_squash_values():
    assert squash(0.0) == 0.5
    assert squash(math.log(0.3 / 0.7)) == pytest.approx(0.3, abs=1e-15)
    # the commonly quoted 0.30002 is a rounding slip; the logistic value is 0.2999996
    assert squash(-0.8473) == pytest.approx(1 / (1 + math.exp(0.8473)), abs=1e-15)
    assert squash(-0.8473) == pytest.approx(0.30002, abs=1e-4)


def test_equal_components_give_uniform():
    p = PlayerParams(np.full(9, 0.3), np.ones(9))
    out = outcome_distribution(p, np.full(9, 0.3), np.full(9, 0.3), Log5Weights.neutral(), 0)
    np.testing.assert_allclose(out, np.full(9, 1 / 9), atol=1e-15)


def straight_line(pb, po, bb, bo, c, P, B, h):
    """Scalar re-evaluation of the outcome model, one component at a time."""
    xs = []
    for i in range(9):
        e_p = po[i] if h == 0 else 1 / po[i]
        e_b = bo[i] if h == 0 else 1 / bo[i]
        a = pb[i] ** e_p
        b = bb[i] ** e_b
        S = P[i] * math.log(a / (1 - a)) + B[i] * math.log(b / (1 - b)) - (P[i] + B[i] - 1) * math.log(c[i] / (1 - c[i]))
        xs.append(1 / (1 + math.exp(-S)))
    t = sum(xs)
    return [x / t for x in xs]


def test_worked_nine_outcome_case():
    pb = [0.25, 0.08, 0.01, 0.24, 0.2, 0.15, 0.05, 0.005, 0.03]
    po = [1.1, 0.9, 1.0, 1.05, 0.95, 1.0, 1.2, 0.8, 1.3]
    bb = [0.20, 0.10, 0.012, 0.22, 0.21, 0.16, 0.045, 0.004, 0.04]
    bo = [0.9, 1.1, 1.0, 1.0, 1.0, 0.9, 1.0, 1.0, 1.1]
    c = [0.224, 0.083, 0.011, 0.235, 0.218, 0.143, 0.045, 0.004, 0.037]
    P = [0.7] * 9
    B = [0.6] * 9
    for h in (0, 1):
        got = outcome_distribution(PlayerParams(pb, po), PlayerParams(bb, bo), np.array(c), Log5Weights(P, B), h)
        np.testing.assert_allclose(got, straight_line(pb, po, bb, bo, c, P, B, h), atol=1e-14)


simplex = st.lists(st.floats(0.01, 1.0), min_size=9, max_size=9).map(lambda v: np.array(v) / sum(v))


@given(simplex, feasible_weights(), st.integers(0, 1))
def test_fixed_point(c, w, h):
    P, B = w
    p = PlayerParams(c, np.ones(9))
    out = outcome_distribution(p, c, c, Log5Weights(np.full(9, P), np.full(9, B)), h)
    np.testing.assert_allclose(out, c, atol=1e-12)


@settings(max_examples=50)
@given(
    st.lists(probs, min_size=9, max_size=9),
    st.lists(offsets, min_size=9, max_size=9),
    st.lists(probs, min_size=9, max_size=9),
    feasible_weights(),
    st.integers(0, 1),
)
def test_output_is_simplex(base, offs, b, w, h):
    out = outcome_distribution(PlayerParams(base, offs), np.array(b), np.full(9, 0.1), Log5Weights(np.full(9, w[0]), np.full(9, w[1])), h)
    assert np.all(out >= 0) and abs(out.sum() - 1) < 1e-12


@settings(max_examples=50)
@given(st.integers(0, 8), st.floats(0.05, 0.5), st.floats(0.01, 0.2))
def test_monotone_in_pitcher_base(i, base_i, bump):
    base = np.full(9, 0.1)
    lo = base.copy()
    lo[i] = base_i
    hi = lo.copy()
    hi[i] = base_i + bump
    args = (np.full(9, 0.1), np.full(9, 0.1), Log5Weights(np.full(9, 0.8), np.full(9, 0.8)), 0)
    a = outcome_distribution(PlayerParams(lo, np.ones(9)), *args)
    b = outcome_distribution(PlayerParams(hi, np.ones(9)), *args)
    assert b[i] > a[i]
    others = np.arange(9) != i
    assert np.all(b[others] < a[others])


def test_vectorized_log_probs_agree():
    rng = np.random.default_rng(0)
    base = rng.uniform(0.02, 0.3, 9)
    offs = rng.uniform(0.7, 1.3, 9)
    b = rng.uniform(0.02, 0.3, 9)
    c = rng.uniform(0.02, 0.3, 9)
    w = Log5Weights(np.full(9, 0.9), np.full(9, 0.7))
    for h in (0, 1):
        expect = outcome_distribution(PlayerParams(base, offs), b, c, w, h)
        log_a = np.log(handedness_adjust(base, offs, h))
        lg = lambda p: np.log(p) - np.log1p(-p)  # noqa: E731
        got = np.exp(log_outcome_probs(log_a, lg(b), lg(c), w.pitcher, w.batter))
        np.testing.assert_allclose(got, expect, atol=1e-12)


def test_weights_validation():
    with pytest.raises(ParameterError):
        Log5Weights(np.full(9, 0.4), np.full(9, 0.5))  # sum below 1
    with pytest.raises(ParameterError):
        PlayerParams(np.full(9, 0.1), np.zeros(9))
