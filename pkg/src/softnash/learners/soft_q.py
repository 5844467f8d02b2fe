"""Two-agent soft Q-learning with fixed priors and temperatures."""

from __future__ import annotations

import numpy as np
from numba import njit

from ..game import TransitionRecord, check_policy, uniform_policy
from ..soft import InverseTemperatures, _soft_policies, _soft_target
from .base import U_NEXT, U_OP, U_PL, Learner, draw, draw_next
from .params import HyperParams


@njit(cache=True)
def _soft_q_update(QKL, visits, rho_pl, rho_op, beta_pl, beta_op, eta0, decay, gamma, counters, s, a, b, r, s2, term2):
    counters[0] += 1
    soft = 0.0
    if not term2:
        soft = _soft_target(QKL[s2], rho_pl[s2], rho_op[s2], beta_pl, beta_op)
    visits[s, a, b] += 1
    eta = eta0 / (1.0 + decay * visits[s, a, b])
    QKL[s, a, b] = (1.0 - eta) * QKL[s, a, b] + eta * (r + gamma * soft)


@njit(cache=True)
def _soft_q_episode(succ, prob, reward, terminal, s0, u, QKL, visits, rho_pl, rho_op, beta_pl, beta_op, eta0, decay, gamma, counters):
    pi_pl = np.empty(QKL.shape[1])
    pi_op = np.empty(QKL.shape[2])
    s = s0
    for t in range(u.shape[0]):
        if terminal[s]:
            break
        _soft_policies(QKL[s], rho_pl[s], rho_op[s], beta_pl, beta_op, pi_pl, pi_op)
        a = draw(pi_pl, u[t, U_PL])
        b = draw(pi_op, u[t, U_OP])
        s2 = draw_next(succ, prob, s, a, b, u[t, U_NEXT])
        _soft_q_update(QKL, visits, rho_pl, rho_op, beta_pl, beta_op, eta0, decay, gamma, counters, s, a, b, reward[s, a, b], s2, terminal[s2])
        s = s2


class SoftQLearner(Learner):
    """Soft-Q baseline: priors and temperatures never change."""

    name = "soft-q"

    def __init__(self, model, params: HyperParams, episodes: int = 0, priors_in=None):
        super().__init__(model, params, episodes)
        S, A, B = model.n_states, model.n_pl, model.n_op
        self.Q_KL = np.zeros((S, A, B))
        self.visits = np.zeros((S, A, B))
        if priors_in is None:
            self.rho_pl, self.rho_op = uniform_policy(S, A), uniform_policy(S, B)
        else:
            self.rho_pl = check_policy(priors_in[0], S, A, "rho_pl")
            self.rho_op = check_policy(priors_in[1], S, B, "rho_op")
        self.betas = InverseTemperatures.symmetric(self.params.beta0)

    @property
    def beta_pl(self) -> float:
        return self.betas.beta_pl

    def run_episode(self, s0: int, u: np.ndarray, episode: int):
        m, p = self.model, self.params
        _soft_q_episode(
            m.succ, m.prob, m.reward, m.terminal, s0, u, self.Q_KL, self.visits, self.rho_pl, self.rho_op,
            self.betas.beta_pl, self.betas.beta_op, p.eta0, p.visit_decay, p.gamma, self.counters,
        )

    def step(self, tr: TransitionRecord, episode: int = 1):
        soft_q_step(self, tr, self.params)

    def learnt_policies(self):
        S = self.model.n_states
        pi_pl = np.empty((S, self.model.n_pl))
        pi_op = np.empty((S, self.model.n_op))
        for s in range(S):
            _soft_policies(self.Q_KL[s], self.rho_pl[s], self.rho_op[s], self.betas.beta_pl, self.betas.beta_op, pi_pl[s], pi_op[s])
        return pi_pl, pi_op

    def tables(self) -> dict:
        return {"Q_KL": self.Q_KL}


def soft_q_step(state: SoftQLearner, tr: TransitionRecord, params: HyperParams) -> SoftQLearner:
    gamma = params.gamma if params.gamma is not None else state.model.gamma
    _soft_q_update(
        state.Q_KL, state.visits, state.rho_pl, state.rho_op, state.betas.beta_pl, state.betas.beta_op,
        params.eta0, params.visit_decay, gamma, state.counters, tr.s_t, tr.a_pl, tr.a_op, tr.r, tr.s_next, tr.terminal,
    )
    return state
