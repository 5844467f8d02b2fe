"""WoLF policy hill-climbing, one independent learner per agent.

Each agent keeps a Q-table over its own actions (in its own reward units),
a current policy and a running average policy. The policy climbs toward the
greedy action with a small step when winning (current policy beats the
average against its own Q) and a larger step when losing.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..game import TransitionRecord
from .base import U_EXPLORE_OP, U_EXPLORE_PL, U_NEXT, U_OP, U_PL, Learner, draw_next, eps_draw
from .params import HyperParams, epsilon_at


@njit(cache=True)
def _phc_update(Q, visits, pi, avg, count, alpha0, decay, gamma, d_win, d_lose, s, a, r, s2, term2):
    n = Q.shape[1]
    nxt = 0.0
    if not term2:
        nxt = Q[s2, 0]
        for k in range(1, n):
            if Q[s2, k] > nxt:
                nxt = Q[s2, k]
    visits[s, a] += 1
    alpha = alpha0 / (1.0 + decay * visits[s, a])
    Q[s, a] = (1.0 - alpha) * Q[s, a] + alpha * (r + gamma * nxt)

    count[s] += 1
    for k in range(n):
        avg[s, k] += (pi[s, k] - avg[s, k]) / count[s]
    if n == 1:
        return
    cur = 0.0
    ref = 0.0
    best = 0
    for k in range(n):
        cur += pi[s, k] * Q[s, k]
        ref += avg[s, k] * Q[s, k]
        if Q[s, k] > Q[s, best]:
            best = k
    delta = d_win if cur > ref else d_lose
    moved = 0.0
    for k in range(n):
        if k != best:
            step = min(pi[s, k], delta / (n - 1))
            pi[s, k] -= step
            moved += step
    pi[s, best] += moved


@njit(cache=True)
def _wolf_episode(succ, prob, reward, terminal, s0, u, Qp, Qo, vp, vo, pip, pio, avgp, avgo, cp, co,
                  alpha0, decay, gamma, d_win, d_lose, eps, counters):
    s = s0
    for t in range(u.shape[0]):
        if terminal[s]:
            break
        a = eps_draw(pip[s], u[t, U_PL], u[t, U_EXPLORE_PL], eps)
        b = eps_draw(pio[s], u[t, U_OP], u[t, U_EXPLORE_OP], eps)
        s2 = draw_next(succ, prob, s, a, b, u[t, U_NEXT])
        r = reward[s, a, b]
        _phc_update(Qp, vp, pip, avgp, cp, alpha0, decay, gamma, d_win, d_lose, s, a, r, s2, terminal[s2])
        _phc_update(Qo, vo, pio, avgo, co, alpha0, decay, gamma, d_win, d_lose, s, b, -r, s2, terminal[s2])
        counters[0] += 1
        s = s2


class WolfPhcLearner(Learner):
    name = "wolf-phc"

    def __init__(self, model, params: HyperParams, episodes: int = 0, priors_in=None):
        super().__init__(model, params, episodes)
        S, A, B = model.n_states, model.n_pl, model.n_op
        self.Q_pl, self.Q_op = np.zeros((S, A)), np.zeros((S, B))
        self.visits_pl, self.visits_op = np.zeros((S, A)), np.zeros((S, B))
        self.pi_pl, self.pi_op = np.full((S, A), 1.0 / A), np.full((S, B), 1.0 / B)
        self.avg_pl, self.avg_op = self.pi_pl.copy(), self.pi_op.copy()
        self.count_pl, self.count_op = np.zeros(S), np.zeros(S)

    def run_episode(self, s0: int, u: np.ndarray, episode: int):
        m, p = self.model, self.params
        _wolf_episode(
            m.succ, m.prob, m.reward, m.terminal, s0, u, self.Q_pl, self.Q_op, self.visits_pl, self.visits_op,
            self.pi_pl, self.pi_op, self.avg_pl, self.avg_op, self.count_pl, self.count_op,
            p.alpha0, p.visit_decay, p.gamma, p.wolf_delta_win, p.wolf_delta_lose,
            epsilon_at(episode, self.episodes, p), self.counters,
        )

    def step(self, tr: TransitionRecord, episode: int = 1):
        wolf_phc_step(self, tr, self.params)

    def learnt_policies(self):
        return self.pi_pl.copy(), self.pi_op.copy()

    def tables(self) -> dict:
        return {"Q_pl": self.Q_pl, "Q_op": self.Q_op}


def wolf_phc_step(state: WolfPhcLearner, tr: TransitionRecord, params: HyperParams) -> WolfPhcLearner:
    p = params
    gamma = p.gamma if p.gamma is not None else state.model.gamma
    _phc_update(state.Q_pl, state.visits_pl, state.pi_pl, state.avg_pl, state.count_pl, p.alpha0, p.visit_decay,
                gamma, p.wolf_delta_win, p.wolf_delta_lose, tr.s_t, tr.a_pl, tr.r, tr.s_next, tr.terminal)
    _phc_update(state.Q_op, state.visits_op, state.pi_op, state.avg_op, state.count_op, p.alpha0, p.visit_decay,
                gamma, p.wolf_delta_win, p.wolf_delta_lose, tr.s_t, tr.a_op, -tr.r, tr.s_next, tr.terminal)
    state.counters[0] += 1
    return state
