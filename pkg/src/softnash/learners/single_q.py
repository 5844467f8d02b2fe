"""Independent Q-learners; each agent treats the other as part of the environment."""

from __future__ import annotations

import numpy as np
from numba import njit

from ..game import TransitionRecord
from .base import U_EXPLORE_OP, U_EXPLORE_PL, U_NEXT, U_OP, U_PL, Learner, draw_next, greedy_draw
from .params import HyperParams, epsilon_at


@njit(cache=True)
def _q_update(Q, visits, alpha0, decay, gamma, s, a, r, s2, term2):
    nxt = 0.0
    if not term2:
        nxt = Q[s2, 0]
        for k in range(1, Q.shape[1]):
            if Q[s2, k] > nxt:
                nxt = Q[s2, k]
    visits[s, a] += 1
    alpha = alpha0 / (1.0 + decay * visits[s, a])
    Q[s, a] = (1.0 - alpha) * Q[s, a] + alpha * (r + gamma * nxt)


@njit(cache=True)
def _single_q_episode(succ, prob, reward, terminal, s0, u, Qp, Qo, vp, vo, alpha0, decay, gamma, eps, counters):
    s = s0
    for t in range(u.shape[0]):
        if terminal[s]:
            break
        a = greedy_draw(Qp[s], u[t, U_PL], u[t, U_EXPLORE_PL], eps, True)
        b = greedy_draw(Qo[s], u[t, U_OP], u[t, U_EXPLORE_OP], eps, True)
        s2 = draw_next(succ, prob, s, a, b, u[t, U_NEXT])
        r = reward[s, a, b]
        _q_update(Qp, vp, alpha0, decay, gamma, s, a, r, s2, terminal[s2])
        _q_update(Qo, vo, alpha0, decay, gamma, s, b, -r, s2, terminal[s2])
        counters[0] += 1
        s = s2


def greedy_policy(Q: np.ndarray) -> np.ndarray:
    """Uniform over the maximizing actions of each row."""
    best = Q == Q.max(axis=1, keepdims=True)
    return best / best.sum(axis=1, keepdims=True)


class SingleQLearner(Learner):
    """Q-tables are in each agent's own reward units (the Opponent's is -r)."""

    name = "single-q"

    def __init__(self, model, params: HyperParams, episodes: int = 0, priors_in=None):
        super().__init__(model, params, episodes)
        S, A, B = model.n_states, model.n_pl, model.n_op
        self.Q_pl, self.Q_op = np.zeros((S, A)), np.zeros((S, B))
        self.visits_pl, self.visits_op = np.zeros((S, A)), np.zeros((S, B))

    def run_episode(self, s0: int, u: np.ndarray, episode: int):
        m, p = self.model, self.params
        _single_q_episode(
            m.succ, m.prob, m.reward, m.terminal, s0, u, self.Q_pl, self.Q_op, self.visits_pl, self.visits_op,
            p.alpha0, p.visit_decay, p.gamma, epsilon_at(episode, self.episodes, p), self.counters,
        )

    def step(self, tr: TransitionRecord, episode: int = 1):
        single_q_step(self, tr, self.params)

    def learnt_policies(self):
        return greedy_policy(self.Q_pl), greedy_policy(self.Q_op)

    def tables(self) -> dict:
        return {"Q_pl": self.Q_pl, "Q_op": self.Q_op}


def single_q_step(state: SingleQLearner, tr: TransitionRecord, params: HyperParams) -> SingleQLearner:
    p = params
    gamma = p.gamma if p.gamma is not None else state.model.gamma
    _q_update(state.Q_pl, state.visits_pl, p.alpha0, p.visit_decay, gamma, tr.s_t, tr.a_pl, tr.r, tr.s_next, tr.terminal)
    _q_update(state.Q_op, state.visits_op, p.alpha0, p.visit_decay, gamma, tr.s_t, tr.a_op, -tr.r, tr.s_next, tr.terminal)
    state.counters[0] += 1
    return state
