"""Exact win probability under passive play.

With lineups and pitchers frozen, a half-inning is a Markov chain over
(base-out state, lineup slot) and a game is a chain over (inning, half, score
difference, both lineup slots).  :class:`WinExpectancy` solves both chains
for one model and answers ``home_win(state)`` without sampling noise.

Run totals above ``MAX_HALF_RUNS - 1`` in a half-inning are lumped into the
top bucket and score differences are clipped at ``±DIFF_CAP``; both
truncations move win probabilities by far less than 1e-6 in realistic
leagues.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .baserunning import forced_walk
from .events import N_STATES, TERMINAL

MAX_HALF_RUNS = 14
DIFF_CAP = 25
_D = 2 * DIFF_CAP + 1
_SWEEPS = 48
_EXTRA_START = 2  # 0 outs, runner on second


def _shift_runs(F: np.ndarray, k: int) -> np.ndarray:
    """Shift the runs axis (axis 2) up by ``k``, lumping overflow in the top bucket."""
    if k == 0:
        return F
    out = np.zeros_like(F)
    out[:, :, k:-1] = F[:, :, : -k - 1]
    out[:, :, -1] = F[:, :, -k - 1 :].sum(axis=2)
    return out


def half_inning_tensor(pa_kernels: np.ndarray) -> np.ndarray:
    """Distribution of (runs, next slot) at the end of a half-inning.

    ``pa_kernels[s]`` is the ``(24, 5, 25)`` kernel (state, runs, successor)
    for the batter in slot ``s``.  Returns ``F`` with shape
    ``(24, 9, MAX_HALF_RUNS, 9)``: start state, start slot, runs, slot of the
    next half-inning's leadoff batter for this team.
    """
    R = MAX_HALF_RUNS
    # slot-major views: T[s] is (runs, 24, 24) over in-play successors
    T = np.transpose(pa_kernels[:, :, :, :N_STATES], (0, 2, 1, 3))
    end = pa_kernels[:, :, :, TERMINAL]  # (slot, state, runs)
    E = np.zeros((9, N_STATES, R, 9))
    for s in range(9):
        E[s, :, : end.shape[2], (s + 1) % 9] = end[s]
    F = E.copy()
    nxt = np.roll(np.arange(9), -1)
    for _ in range(_SWEEPS):
        G = F[nxt]  # G[s] = F for slot s+1
        new = E.copy()
        for k in range(T.shape[1]):
            new += np.matmul(T[:, k], _shift_runs(G, k).reshape(9, N_STATES, R * 9)).reshape(9, N_STATES, R, 9)
        F = new
    return np.transpose(F, (1, 0, 2, 3))


class WinExpectancy:
    """Passive-play win probabilities for one model, cached per configuration."""

    def __init__(self, model, cache_size: int = 256, inning_cap: int = 30):
        self.model = model
        self.inning_cap = inning_cap
        self._half: OrderedDict = OrderedDict()
        self._game: OrderedDict = OrderedDict()
        self.cache_size = cache_size

    # -- half-inning chains --------------------------------------------------

    def half_tensor(self, lineup: tuple, pitcher) -> np.ndarray:
        key = (tuple(p.id for p in lineup), pitcher.id)
        F = self._half.get(key)
        if F is not None:
            self._half.move_to_end(key)
            return F
        m = self.model
        kernels = np.empty((9, N_STATES, 5, N_STATES + 1))
        for s, b in enumerate(lineup):
            probs = m.outcome_probs(pitcher.id, pitcher.hand, b.id, b.hand, s)
            kernels[s] = np.einsum("o,aorq->arq", probs, m.transition_table(b.id).kernel())
        F = half_inning_tensor(kernels)
        self._half[key] = F
        if len(self._half) > 4 * self.cache_size:
            self._half.popitem(last=False)
        return F

    # -- game chain ----------------------------------------------------------

    def _game_tables(self, away_lineup, home_pitcher, home_lineup, away_pitcher):
        key = (tuple(p.id for p in away_lineup), home_pitcher.id, tuple(p.id for p in home_lineup), away_pitcher.id)
        t = self._game.get(key)
        if t is not None:
            self._game.move_to_end(key)
            return t
        Fa = self.half_tensor(away_lineup, home_pitcher)
        Fh = self.half_tensor(home_lineup, away_pitcher)
        t = _GameTables(Fa, Fh, self.inning_cap)
        self._game[key] = t
        if len(self._game) > self.cache_size:
            self._game.popitem(last=False)
        return t

    def home_win(self, st) -> float:
        """Probability that the home team wins from ``st`` with no further decisions."""
        if st.terminal:
            return 1.0 if st.winner == "home" else 0.0
        t = self._game_tables(st.away.lineup, st.home.pitcher, st.home.lineup, st.away.pitcher)
        d = st.home.runs - st.away.runs
        sa, sh = st.away.slot, st.home.slot
        state = st.outs * 8 + st.bases
        if st.ibb:
            nxt, runs = forced_walk(st.bases)
            state = st.outs * 8 + nxt
            if st.top:
                d -= runs
                sa = (sa + 1) % 9
            else:
                d += runs
                sh = (sh + 1) % 9
                if runs and st.inning >= 9 and d > 0:
                    return 1.0
        return t.value(st.inning, st.top, state, d, sa, sh)


def _clip(d):
    return np.clip(d, -DIFF_CAP, DIFF_CAP) + DIFF_CAP


class _GameTables:
    """Solved game chain for fixed lineups and pitchers."""

    def __init__(self, Fa: np.ndarray, Fh: np.ndarray, inning_cap: int):
        self.Fa, self.Fh = Fa, Fh
        R = MAX_HALF_RUNS
        runs = np.arange(R)
        self.runs = runs
        Ga, Gh = Fa[0], Fh[0]  # (slot, runs, next slot)
        Gax, Ghx = Fa[_EXTRA_START], Fh[_EXTRA_START]

        # extra innings: X[i][sa, sh] = home win prob at the start of the top of a tied inning i >= 10
        gt = np.array([Ghx[:, r + 1 :, :].sum(axis=(1, 2)) for r in range(R)])  # (r, sh)
        X = {inning_cap + 1: np.full((9, 9), 0.5)}
        for i in range(inning_cap, 9, -1):
            nxt = X[i + 1]
            acc = np.zeros((9, 9))
            for r in range(R):
                A = Gax[:, r, :]
                acc += np.outer(A.sum(axis=1), gt[r]) + A @ nxt @ Ghx[:, r, :].T
            X[i] = acc
        self.X = X
        self.gt = gt
        self.inning_cap = inning_cap

        # regulation: VT[i], VB[i] with shape (D, sa, sh) for i = 1..9
        d = np.arange(-DIFF_CAP, DIFF_CAP + 1)
        VT, VB = {}, {}
        after_bottom_9 = None
        for i in range(9, 0, -1):
            # value after the bottom of inning i, indexed (diff, sa, next sh)
            if i == 9:
                after = np.where(d[:, None, None] > 0, 1.0, 0.0) * np.ones((1, 9, 9))
                after[DIFF_CAP] = X[10]
                after_bottom_9 = after
            else:
                after = VT[i + 1]
            # bottom: VB[d, sa, sh] = sum_{r, sh'} Gh[sh, r, sh'] after[d + r, sa, sh']
            idx = _clip(d[:, None] + runs[None, :])  # (D, R)
            g = after[idx]  # (D, R, sa, sh')
            VB[i] = np.einsum("drak,hrk->dah", g, Gh)
            # value after the top: home already ahead in the 9th ends the game
            after_top = VB[i].copy()
            if i == 9:
                after_top[d > 0] = 1.0
            idx = _clip(d[:, None] - runs[None, :])
            g = after_top[idx]  # (D, R, sa', sh)
            VT[i] = np.einsum("drkh,ark->dah", g, Ga)
        self.VT, self.VB = VT, VB
        self.after_bottom_9 = after_bottom_9

    def _after_top_extra(self, i, dd, sh):
        """Home win prob after the top of extra inning ``i`` ended at diffs ``dd``;
        returns (len(dd), 9 sa') for the given home slot."""
        out = np.empty((len(dd), 9))
        X1 = self.X[i + 1]
        for j, dv in enumerate(dd):
            if dv > 0:
                out[j] = 1.0
                continue
            # bottom from (0 outs, runner on second); needs more than -dv runs
            need = -dv
            G = self.Fh[_EXTRA_START][sh]  # (runs, sh')
            win = G[need + 1 :].sum() if need + 1 < G.shape[0] else 0.0
            tie = G[need] @ X1.T if need < G.shape[0] else np.zeros(9)
            out[j] = win + tie
        return out

    def value(self, inning: int, top: bool, state: int, d: int, sa: int, sh: int) -> float:
        runs = self.runs
        if top:
            dist = self.Fa[state, sa]  # (runs, sa')
            dd = d - runs
            if inning <= 9:
                after = self.VB[inning][_clip(dd), :, sh]  # (runs, sa')
                if inning == 9:
                    after = np.where((dd > 0)[:, None], 1.0, after)
            else:
                after = self._after_top_extra(inning, dd, sh)
            return float(np.sum(dist * after))
        dist = self.Fh[state, sh]  # (runs, sh')
        dd = d + runs
        if inning < 9:
            after = self.VT[inning + 1][_clip(dd), sa, :]
        else:
            nxt = self.X.get(inning + 1, np.full((9, 9), 0.5))
            after = np.where((dd > 0)[:, None], 1.0, 0.0) * np.ones((1, 9))
            tie = dd == 0
            after[tie] = nxt[sa]
        return float(np.sum(dist * after))
