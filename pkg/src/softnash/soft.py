"""Entropy-regularized policy math for two-agent soft Q-learning.

All log-sum-exps are shifted by the maximum over the prior's support, so
large inverse temperatures never overflow. Actions outside the support of a
prior stay at exactly zero probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .game import ContractError, check_distribution


@dataclass(frozen=True)
class InverseTemperatures:
    beta_pl: float
    beta_op: float

    def __post_init__(self):
        if not (self.beta_pl > 0.0 and self.beta_op < 0.0):
            raise ContractError("need beta_pl > 0 and beta_op < 0")

    @classmethod
    def symmetric(cls, magnitude: float) -> "InverseTemperatures":
        return cls(abs(magnitude), -abs(magnitude))


@njit(cache=True)
def _weighted_lse(x, w, beta):
    """(1/beta) log sum_k w_k exp(beta x_k) over the support of w (w renormalized)."""
    m = -np.inf
    for k in range(x.shape[0]):
        if w[k] > 0.0:
            z = beta * x[k]
            if z > m:
                m = z
    total = 0.0
    lo = np.inf
    hi = -np.inf
    for k in range(x.shape[0]):
        if w[k] > 0.0:
            total += w[k]
            lo = min(lo, x[k])
            hi = max(hi, x[k])
    if abs(beta) * (hi - lo) < 1e-6:
        # mean + beta/2 var; beta * x may underflow for subnormal beta
        mean = 0.0
        for k in range(x.shape[0]):
            if w[k] > 0.0:
                mean += w[k] / total * x[k]
        var = 0.0
        for k in range(x.shape[0]):
            if w[k] > 0.0:
                var += w[k] / total * (x[k] - mean) ** 2
        return mean + 0.5 * beta * var
    # acc - 1 accumulated through expm1 keeps precision when beta * x is
    # far below machine epsilon relative to 1
    acc = 0.0
    dev = 0.0
    for k in range(x.shape[0]):
        if w[k] > 0.0:
            z = beta * x[k] - m
            acc += w[k] / total * np.exp(z)
            dev += w[k] / total * np.expm1(z)
    if acc < 0.5:
        return (m + np.log(acc)) / beta
    return m / beta + np.log1p(dev) / beta


@njit(cache=True)
def _marginal_pl(Qs, rho_op, beta_op, out):
    # integrate the Opponent out: one entry per Player action
    for a in range(Qs.shape[0]):
        out[a] = _weighted_lse(Qs[a], rho_op, beta_op)


@njit(cache=True)
def _marginal_op(Qs, rho_pl, beta_pl, out):
    col = np.empty(Qs.shape[0])
    for b in range(Qs.shape[1]):
        for a in range(Qs.shape[0]):
            col[a] = Qs[a, b]
        out[b] = _weighted_lse(col, rho_pl, beta_pl)


@njit(cache=True)
def _boltzmann(q, rho, beta, out):
    m = -np.inf
    for k in range(q.shape[0]):
        if rho[k] > 0.0 and beta * q[k] > m:
            m = beta * q[k]
    z = 0.0
    for k in range(q.shape[0]):
        if rho[k] > 0.0:
            out[k] = rho[k] * np.exp(beta * q[k] - m)
            z += out[k]
        else:
            out[k] = 0.0
    for k in range(q.shape[0]):
        out[k] /= z


@njit(cache=True)
def _soft_policies(Qs, rho_pl, rho_op, beta_pl, beta_op, pi_pl, pi_op):
    """Soft-optimal policies of both agents at one state, written in place."""
    mp = np.empty(Qs.shape[0])
    mo = np.empty(Qs.shape[1])
    _marginal_pl(Qs, rho_op, beta_op, mp)
    _marginal_op(Qs, rho_pl, beta_pl, mo)
    _boltzmann(mp, rho_pl, beta_pl, pi_pl)
    _boltzmann(mo, rho_op, beta_op, pi_op)


@njit(cache=True)
def _soft_target(Qs, rho_pl, rho_op, beta_pl, beta_op):
    mp = np.empty(Qs.shape[0])
    _marginal_pl(Qs, rho_op, beta_op, mp)
    return _weighted_lse(mp, rho_pl, beta_pl)


def _prior(rho, n, name):
    rho = check_distribution(rho, n, name)
    if not np.any(rho > 0.0):
        raise ContractError(f"{name} has no support")
    return rho


def marginalize(Q_slice, rho_other, beta_other: float, axis: int = 1) -> np.ndarray:
    """Soft marginal of a payoff matrix with respect to the other agent.

    ``axis`` is the matrix axis being integrated out: 1 integrates the
    Opponent (result indexed by Player actions), 0 integrates the Player.
    """
    Q_slice = np.ascontiguousarray(Q_slice, dtype=float)
    if Q_slice.ndim != 2 or axis not in (0, 1):
        raise ContractError("Q_slice must be a matrix and axis 0 or 1")
    if beta_other == 0.0:
        raise ContractError("beta_other must be non-zero")
    rho_other = _prior(rho_other, Q_slice.shape[axis], "rho_other")
    out = np.empty(Q_slice.shape[1 - axis])
    if axis == 1:
        _marginal_pl(Q_slice, rho_other, float(beta_other), out)
    else:
        _marginal_op(Q_slice, rho_other, float(beta_other), out)
    return out


def soft_policy(marginal_q, rho_self, beta_self: float) -> np.ndarray:
    """Boltzmann tilt of a prior: rho(a) exp(beta q(a)) / Z."""
    q = np.ascontiguousarray(marginal_q, dtype=float)
    if not np.isfinite(beta_self):
        raise ContractError("beta_self must be finite")
    rho = _prior(rho_self, q.shape[0], "rho_self")
    out = np.empty_like(q)
    _boltzmann(q, rho, float(beta_self), out)
    return out


def soft_q_target(Q_slice, rho_pl, rho_op, betas: InverseTemperatures) -> float:
    """Nested soft value of a next-state payoff matrix (undiscounted)."""
    Q_slice = np.ascontiguousarray(Q_slice, dtype=float)
    rho_pl = _prior(rho_pl, Q_slice.shape[0], "rho_pl")
    rho_op = _prior(rho_op, Q_slice.shape[1], "rho_op")
    return float(_soft_target(Q_slice, rho_pl, rho_op, betas.beta_pl, betas.beta_op))


def soft_policies(Q_slice, rho_pl, rho_op, betas: InverseTemperatures):
    """Both agents' soft-optimal policies at one state."""
    Q_slice = np.ascontiguousarray(Q_slice, dtype=float)
    rho_pl = _prior(rho_pl, Q_slice.shape[0], "rho_pl")
    rho_op = _prior(rho_op, Q_slice.shape[1], "rho_op")
    pi_pl = np.empty(Q_slice.shape[0])
    pi_op = np.empty(Q_slice.shape[1])
    _soft_policies(Q_slice, rho_pl, rho_op, betas.beta_pl, betas.beta_op, pi_pl, pi_op)
    return pi_pl, pi_op
