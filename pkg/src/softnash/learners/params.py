"""Hyper-parameters and the prior-update schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ..game import ContractError, GameModel
from ..soft import InverseTemperatures

VALUE_FLOOR = 1e-6


@dataclass
class HyperParams:
    # learning rates; SNQ2 decays them at every prior update,
    # the baselines per visit: alpha0 / (1 + visit_decay * visits)
    alpha0: float = 1.0
    eta0: float = 1.0
    lr_decay: float = 0.8
    lr_floor: float = 0.01
    visit_decay: float = 1e-3
    # optional per-visit scaling on top of SNQ2's per-update decay; 0 disables
    snq2_visit_decay: float = 0.0
    gamma: float | None = None  # None: take the model's discount
    T: int = 20  # Nash value update every T steps
    deltaM0: int | None = None  # None: derived from the state/action counts
    beta0: float = 20.0
    beta_end: float = 0.1
    N_updates: int = 10
    sigma: float = 0.5
    delta: float = 0.05
    threshold: float = 0.8
    deltaM_min: int | None = None
    deltaM_max: int | None = None
    beta_min: float | None = None
    schedule: str = "dynamic"  # or "fixed"
    polyak: float | None = None
    prior_smoothing: float = 0.01
    # optional annealing: smoothing starts here and decays geometrically by
    # smoothing_decay per prior update down to prior_smoothing
    prior_smoothing0: float | None = None
    smoothing_decay: float = 0.95
    warm_postpone: float = 2.0
    T_max: int | None = None
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.5
    wolf_delta_win: float = 0.01
    wolf_delta_lose: float = 0.04

    def __post_init__(self):
        for name in ("alpha0", "eta0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.sigma < 1.0:
            raise ContractError("sigma must lie in (0, 1)")
        if not 0.0 < self.threshold <= 1.0:
            raise ContractError("threshold must lie in (0, 1]")
        if self.T < 1:
            raise ContractError("T must be a positive step count")
        if not 0.0 < self.beta_end < self.beta0:
            raise ContractError("need 0 < beta_end < beta0")
        if self.schedule not in ("dynamic", "fixed"):
            raise ContractError("schedule must be 'dynamic' or 'fixed'")
        if self.polyak is not None and not 0.0 < self.polyak <= 1.0:
            raise ContractError("polyak coefficient must lie in (0, 1]")

    @property
    def lam(self) -> float:
        """Per-update inverse-temperature decay factor."""
        return (self.beta_end / self.beta0) ** (1.0 / self.N_updates)

    def update(self, **overrides) -> "HyperParams":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise ContractError(f"unknown hyper-parameters: {sorted(bad)}")
        return replace(self, **overrides)

    def resolved(self, model: GameModel) -> "HyperParams":
        """Copy with every derived default filled in for ``model``."""
        p = replace(self)
        if p.gamma is None:
            p.gamma = model.gamma
        if p.T_max is None:
            p.T_max = model.horizon
        if p.deltaM0 is None:
            p.deltaM0 = compute_initial_schedule(model, p)
        if p.deltaM_min is None:
            p.deltaM_min = max(1, p.deltaM0 // 8)
        if p.deltaM_max is None:
            p.deltaM_max = 16 * p.deltaM0
        if p.beta_min is None:
            p.beta_min = p.beta_end
        return p


def initial_prior_interval(n_states: int, n_action_pairs: int, alpha0: float, T_max: int) -> int:
    """Episodes before the first prior update: ceil(S * AB / (alpha0 * T_max))."""
    if alpha0 <= 0.0 or T_max <= 0:
        raise ContractError("need alpha0 > 0 and T_max > 0")
    return max(1, math.ceil(n_states * n_action_pairs / (alpha0 * T_max) - 1e-9))


def compute_initial_schedule(model: GameModel, params: HyperParams) -> int:
    T_max = params.T_max if params.T_max is not None else model.horizon
    return initial_prior_interval(len(model.nonterminal), model.n_pl * model.n_op, params.alpha0, T_max)


def prior_values(rho_pl: np.ndarray, rho_op: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """rho_pl(s)' Q(s) rho_op(s) for a stack of states."""
    return np.einsum("sa,sab,sb->s", rho_pl, Q, rho_op)


def relative_difference(v_new: np.ndarray, v_old: np.ndarray) -> np.ndarray:
    diff = np.abs(v_new - v_old)
    scale = np.abs(v_new)
    return np.where(scale < VALUE_FLOOR, diff, diff / np.maximum(scale, VALUE_FLOOR))


def dynamic_schedule(rho_new_pl, rho_new_op, rho_pl, rho_op, betas: InverseTemperatures, deltaM: int, Q, params: HyperParams):
    """Adapt the prior-update interval and inverse temperatures.

    Arrays cover the states taking part in the prior update. When enough
    states see little change between old and new prior values the interval
    grows and both temperatures decay; otherwise the interval shrinks.
    Returns ``(deltaM, betas)``.
    """
    v_old = prior_values(rho_pl, rho_op, Q)
    v_new = prior_values(rho_new_pl, rho_new_op, Q)
    n_close = int(np.count_nonzero(relative_difference(v_new, v_old) < params.delta))
    if n_close / len(v_new) >= params.threshold:
        return expand_schedule(deltaM, betas, params)
    return max(int(params.sigma * deltaM), params.deltaM_min), betas


def expand_schedule(deltaM: int, betas: InverseTemperatures, params: HyperParams):
    """The trigger branch: longer interval, cooler inverse temperatures."""
    new_dm = min(math.ceil(deltaM / params.sigma - 1e-9), params.deltaM_max)
    mag = max(params.lam * betas.beta_pl, params.beta_min)
    mag_op = max(params.lam * abs(betas.beta_op), params.beta_min)
    return new_dm, InverseTemperatures(mag, -mag_op)


def fixed_schedule(deltaM: int, betas: InverseTemperatures, params: HyperParams):
    """Constant interval, temperature decay at every update."""
    _, new_betas = expand_schedule(deltaM, betas, params)
    return deltaM, new_betas


def epsilon_at(episode: int, episodes: int, params: HyperParams) -> float:
    """Linear exploration decay over the first ``eps_fraction`` of the budget."""
    horizon = max(1.0, params.eps_fraction * episodes)
    frac = min(1.0, (episode - 1) / horizon)
    return params.eps_start + frac * (params.eps_end - params.eps_start)
