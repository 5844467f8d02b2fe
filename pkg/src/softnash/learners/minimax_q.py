"""Minimax-Q: the maximin linear program at every step."""

from __future__ import annotations

import numpy as np
from numba import njit

from ..game import TransitionRecord
from ..matrix_games import PIVOT_TOL, _simplex_game
from .base import U_EXPLORE_OP, U_EXPLORE_PL, U_NEXT, U_OP, U_PL, Learner, draw_next, eps_draw, equilibrium_policies, raise_status
from .params import HyperParams, epsilon_at


@njit(cache=True)
def _minimax_update(Q, visits, pi_pl, pi_op, alpha0, decay, gamma, counters, s, a, b, r, s2, term2):
    counters[0] += 1
    v = 0.0
    if not term2:
        v, _, status = _simplex_game(Q[s2], pi_pl[s2], pi_op[s2], PIVOT_TOL)
        counters[1] += 1
        if status != 0:
            return status
    visits[s, a, b] += 1
    alpha = alpha0 / (1.0 + decay * visits[s, a, b])
    Q[s, a, b] = (1.0 - alpha) * Q[s, a, b] + alpha * (r + gamma * v)
    return 0


@njit(cache=True)
def _minimax_episode(succ, prob, reward, terminal, s0, u, Q, visits, pi_pl, pi_op, alpha0, decay, gamma, eps, counters):
    s = s0
    for t in range(u.shape[0]):
        if terminal[s]:
            break
        a = eps_draw(pi_pl[s], u[t, U_PL], u[t, U_EXPLORE_PL], eps)
        b = eps_draw(pi_op[s], u[t, U_OP], u[t, U_EXPLORE_OP], eps)
        s2 = draw_next(succ, prob, s, a, b, u[t, U_NEXT])
        status = _minimax_update(Q, visits, pi_pl, pi_op, alpha0, decay, gamma, counters, s, a, b, reward[s, a, b], s2, terminal[s2])
        if status != 0:
            return status
        s = s2
    return 0


class MinimaxQLearner(Learner):
    """Shared zero-sum Q-table; both agents act on the latest maximin strategies.

    The strategies of a state are refreshed whenever its linear program is
    solved as a next state, so exactly one program is solved per step.
    """

    name = "minimax-q"

    def __init__(self, model, params: HyperParams, episodes: int = 0, priors_in=None):
        super().__init__(model, params, episodes)
        S, A, B = model.n_states, model.n_pl, model.n_op
        self.Q = np.zeros((S, A, B))
        self.visits = np.zeros((S, A, B))
        self.pi_pl = np.full((S, A), 1.0 / A)
        self.pi_op = np.full((S, B), 1.0 / B)

    def run_episode(self, s0: int, u: np.ndarray, episode: int):
        m, p = self.model, self.params
        eps = epsilon_at(episode, self.episodes, p)
        status = _minimax_episode(
            m.succ, m.prob, m.reward, m.terminal, s0, u, self.Q, self.visits, self.pi_pl, self.pi_op,
            p.alpha0, p.visit_decay, p.gamma, eps, self.counters,
        )
        raise_status(status)

    def step(self, tr: TransitionRecord, episode: int = 1):
        minimax_q_step(self, tr, self.params)

    def learnt_policies(self):
        return equilibrium_policies(self.model, self.Q)

    def tables(self) -> dict:
        return {"Q": self.Q}


def minimax_q_step(state: MinimaxQLearner, tr: TransitionRecord, params: HyperParams) -> MinimaxQLearner:
    gamma = params.gamma if params.gamma is not None else state.model.gamma
    status = _minimax_update(
        state.Q, state.visits, state.pi_pl, state.pi_op, params.alpha0, params.visit_decay, gamma,
        state.counters, tr.s_t, tr.a_pl, tr.a_op, tr.r, tr.s_next, tr.terminal,
    )
    raise_status(status)
    return state
