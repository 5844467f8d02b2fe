"""Soft Nash Q2-learning.

Two tables are learnt side by side. ``Q`` follows the standard game update
whose next-state value comes from the soft policies most of the time and
from the maximin linear program every ``T`` steps. ``Q_KL`` follows the
two-agent soft-Q update and drives behavior through Boltzmann policies tilted
by the priors. Every ``deltaM`` episodes the priors are replaced by the
(smoothed) equilibrium strategies of ``Q`` and the schedule adapts.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..game import TransitionRecord, check_policy, uniform_policy
from ..matrix_games import _game_value, solve_matrix_games
from ..soft import InverseTemperatures, _soft_policies, _soft_target
from .base import U_NEXT, U_OP, U_PL, Learner, draw, draw_next, equilibrium_policies, raise_status
from .params import HyperParams, dynamic_schedule, fixed_schedule


@njit(cache=True)
def _snq2_update(Q, QKL, visits, rho_pl, rho_op, beta_pl, beta_op, alpha, eta, decay, gamma, T, counters, s, a, b, r, s2, term2):
    counters[0] += 1
    v = 0.0
    soft = 0.0
    if not term2:
        if counters[0] % T == 0:
            v, status = _game_value(Q[s2])
            counters[1] += 1
            if status != 0:
                return status
        else:
            pi_pl = np.empty(Q.shape[1])
            pi_op = np.empty(Q.shape[2])
            _soft_policies(QKL[s2], rho_pl[s2], rho_op[s2], beta_pl, beta_op, pi_pl, pi_op)
            for i in range(Q.shape[1]):
                for j in range(Q.shape[2]):
                    v += pi_pl[i] * Q[s2, i, j] * pi_op[j]
        soft = _soft_target(QKL[s2], rho_pl[s2], rho_op[s2], beta_pl, beta_op)
    visits[s, a, b] += 1
    scale = 1.0 / (1.0 + decay * visits[s, a, b])
    alpha *= scale
    eta *= scale
    Q[s, a, b] = (1.0 - alpha) * Q[s, a, b] + alpha * (r + gamma * v)
    QKL[s, a, b] = (1.0 - eta) * QKL[s, a, b] + eta * (r + gamma * soft)
    return 0


@njit(cache=True)
def _snq2_episode(succ, prob, reward, terminal, s0, u, Q, QKL, visits, rho_pl, rho_op, beta_pl, beta_op, alpha, eta, decay, gamma, T, counters):
    pi_pl = np.empty(Q.shape[1])
    pi_op = np.empty(Q.shape[2])
    s = s0
    for t in range(u.shape[0]):
        if terminal[s]:
            break
        _soft_policies(QKL[s], rho_pl[s], rho_op[s], beta_pl, beta_op, pi_pl, pi_op)
        a = draw(pi_pl, u[t, U_PL])
        b = draw(pi_op, u[t, U_OP])
        s2 = draw_next(succ, prob, s, a, b, u[t, U_NEXT])
        status = _snq2_update(
            Q, QKL, visits, rho_pl, rho_op, beta_pl, beta_op, alpha, eta, decay, gamma, T, counters,
            s, a, b, reward[s, a, b], s2, terminal[s2],
        )
        if status != 0:
            return status
        s = s2
    return 0


class Snq2Learner(Learner):
    """Mutable state of one SNQ2 run.

    ``priors_in`` (a ``(pi_pl, pi_op)`` pair) warm-starts the priors and
    postpones the first prior update by ``params.warm_postpone``.
    """

    name = "snq2"

    def __init__(self, model, params: HyperParams, episodes: int = 0, priors_in=None):
        super().__init__(model, params, episodes)
        p = self.params
        S, A, B = model.n_states, model.n_pl, model.n_op
        self.Q = np.zeros((S, A, B))
        self.Q_KL = np.zeros((S, A, B))
        self.visits = np.zeros((S, A, B))
        self.Q_avg = np.zeros((S, A, B)) if p.polyak is not None else None
        if priors_in is None:
            self.rho_pl, self.rho_op = uniform_policy(S, A), uniform_policy(S, B)
            self.M = p.deltaM0
        else:
            self.rho_pl = check_policy(priors_in[0], S, A, "rho_pl")
            self.rho_op = check_policy(priors_in[1], S, B, "rho_op")
            self.M = max(1, math.ceil(p.warm_postpone * p.deltaM0))
        self.betas = InverseTemperatures.symmetric(p.beta0)
        self.deltaM = p.deltaM0
        self.alpha = p.alpha0
        self.eta = p.eta0
        self.prior_updates = 0
        self.beta_history = [self.betas.beta_pl]

    @property
    def beta_pl(self) -> float:
        return self.betas.beta_pl

    @property
    def delta_m(self) -> int:
        return self.deltaM

    def soft_policies_at(self, s: int):
        pi_pl = np.empty(self.model.n_pl)
        pi_op = np.empty(self.model.n_op)
        _soft_policies(self.Q_KL[s], self.rho_pl[s], self.rho_op[s], self.betas.beta_pl, self.betas.beta_op, pi_pl, pi_op)
        return pi_pl, pi_op

    def step(self, tr: TransitionRecord, episode: int = 1):
        snq2_step(self, tr, self.params)

    def run_episode(self, s0: int, u: np.ndarray, episode: int):
        m = self.model
        status = _snq2_episode(
            m.succ, m.prob, m.reward, m.terminal, s0, u, self.Q, self.Q_KL, self.visits, self.rho_pl, self.rho_op,
            self.betas.beta_pl, self.betas.beta_op, self.alpha, self.eta, self.params.snq2_visit_decay,
            self.params.gamma, self.params.T, self.counters,
        )
        raise_status(status)
        self.end_episode(episode)

    def end_episode(self, episode: int):
        if self.Q_avg is not None:
            tau = self.params.polyak
            self.Q_avg *= 1.0 - tau
            self.Q_avg += tau * self.Q
        if episode >= self.M:
            snq2_prior_update(self, self.params)

    def learnt_policies(self):
        return equilibrium_policies(self.model, self.Q)

    def tables(self) -> dict:
        return {"Q": self.Q, "Q_KL": self.Q_KL}


def snq2_step(state: Snq2Learner, tr: TransitionRecord, params: HyperParams) -> Snq2Learner:
    """Apply one transition to both tables (in place)."""
    status = _snq2_update(
        state.Q, state.Q_KL, state.visits, state.rho_pl, state.rho_op, state.betas.beta_pl, state.betas.beta_op,
        state.alpha, state.eta, params.snq2_visit_decay, params.gamma if params.gamma is not None else state.model.gamma, params.T,
        state.counters, tr.s_t, tr.a_pl, tr.a_op, tr.r, tr.s_next, tr.terminal,
    )
    raise_status(status)
    return state


def smooth(pi: np.ndarray, kappa: float) -> np.ndarray:
    return (1.0 - kappa) * pi + kappa / pi.shape[-1]


def smoothing_at(n_updates: int, params: HyperParams) -> float:
    """Prior smoothing weight used by the (n_updates + 1)-th prior update."""
    if params.prior_smoothing0 is None:
        return params.prior_smoothing
    return max(params.prior_smoothing, params.prior_smoothing0 * params.smoothing_decay**n_updates)


def snq2_prior_update(state: Snq2Learner, params: HyperParams) -> Snq2Learner:
    """Replace the priors with equilibrium strategies of the current Q."""
    p = params
    live = state.model.nonterminal
    source = state.Q_avg if state.Q_avg is not None else state.Q
    _, rows, cols = solve_matrix_games(source[live])
    state.counters[1] += len(live)
    new_pl, new_op = state.rho_pl.copy(), state.rho_op.copy()
    kappa = smoothing_at(state.prior_updates, p)
    new_pl[live] = smooth(rows, kappa)
    new_op[live] = smooth(cols, kappa)
    if p.schedule == "dynamic":
        dM, betas = dynamic_schedule(
            new_pl[live], new_op[live], state.rho_pl[live], state.rho_op[live], state.betas, state.deltaM, state.Q[live], p
        )
    else:
        dM, betas = fixed_schedule(state.deltaM, state.betas, p)
    state.deltaM = dM
    state.M += dM
    state.rho_pl, state.rho_op = new_pl, new_op
    state.betas = betas
    state.alpha = max(state.alpha * p.lr_decay, min(p.lr_floor, state.alpha))
    state.eta = max(state.eta * p.lr_decay, min(p.lr_floor, state.eta))
    state.prior_updates += 1
    state.beta_history.append(betas.beta_pl)
    return state
