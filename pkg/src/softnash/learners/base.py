"""Shared learner plumbing: sampling kernels and the learner interface."""

from __future__ import annotations

import numpy as np
from numba import njit

from ..game import GameModel, TransitionRecord
from ..matrix_games import SolverError, _STATUS_TEXT, solve_matrix_games
from .params import HyperParams

# columns of the per-episode uniform block
U_PL, U_OP, U_NEXT, U_EXPLORE_PL, U_EXPLORE_OP = range(5)
U_COLS = 5


@njit(cache=True)
def draw(p, u):
    """Inverse-CDF draw from a probability vector."""
    acc = 0.0
    n = p.shape[0]
    for k in range(n):
        acc += p[k]
        if u < acc:
            return k
    for k in range(n - 1, -1, -1):
        if p[k] > 0.0:
            return k
    return n - 1


@njit(cache=True)
def eps_draw(p, u_pick, u_explore, eps):
    n = p.shape[0]
    if u_explore < eps:
        return min(int(u_pick * n), n - 1)
    return draw(p, u_pick)


@njit(cache=True)
def greedy_draw(q, u_pick, u_explore, eps, maximize):
    """Epsilon-greedy over ``q``; ties broken uniformly using ``u_pick``."""
    n = q.shape[0]
    if u_explore < eps:
        return min(int(u_pick * n), n - 1)
    best = q[0]
    for k in range(1, n):
        if (q[k] > best) if maximize else (q[k] < best):
            best = q[k]
    count = 0
    for k in range(n):
        if q[k] == best:
            count += 1
    pick = min(int(u_pick * count), count - 1)
    for k in range(n):
        if q[k] == best:
            if pick == 0:
                return k
            pick -= 1
    return 0


@njit(cache=True)
def draw_next(succ, prob, s, a, b, u):
    return succ[s, a, b, draw(prob[s, a, b], u)]


def raise_status(status: int):
    if status:
        raise SolverError(_STATUS_TEXT.get(status, f"solver status {status}"))


def equilibrium_policies(model: GameModel, Q: np.ndarray):
    """Per-state maximin/minimax strategies of a Q-table.

    Constant payoff matrices (untouched states) get uniform strategies; any
    strategy is optimal there. Terminal states get uniform rows.
    """
    S, A, B = Q.shape
    pi_pl = np.full((S, A), 1.0 / A)
    pi_op = np.full((S, B), 1.0 / B)
    live = model.nonterminal
    flat = Q[live].reshape(len(live), -1)
    varying = live[flat.max(axis=1) > flat.min(axis=1)]
    if varying.size:
        _, rows, cols = solve_matrix_games(Q[varying])
        pi_pl[varying] = rows
        pi_op[varying] = cols
    return pi_pl, pi_op


class Learner:
    """One training run's mutable state for a single algorithm.

    Subclasses implement ``run_episode`` (called with a start state and a
    ``(T_max, 5)`` block of uniforms), ``step`` for a single transition, and
    ``learnt_policies``.
    """

    name = "base"

    def __init__(self, model: GameModel, params: HyperParams, episodes: int, priors_in=None):
        self.model = model
        self.params = params.resolved(model)
        self.episodes = episodes
        # [steps, lp calls]
        self.counters = np.zeros(2, dtype=np.int64)

    @property
    def steps(self) -> int:
        return int(self.counters[0])

    @property
    def lp_calls(self) -> int:
        return int(self.counters[1])

    @property
    def beta_pl(self) -> float | None:
        return None

    @property
    def delta_m(self) -> int | None:
        return None

    def run_episode(self, s0: int, u: np.ndarray, episode: int):
        raise NotImplementedError

    def step(self, tr: TransitionRecord, episode: int = 1):
        raise NotImplementedError

    def learnt_policies(self):
        raise NotImplementedError

    def tables(self) -> dict:
        """Named value tables for dumping."""
        return {}
