"""Ground-truth machinery: Shapley iteration, best responses, Nash verdicts."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .game import GameModel, check_policy, expected_next, policy_value
from .matrix_games import solve_matrix_games

VALUE_FLOOR = 1e-6
DEFAULT_TOL = 1e-8


@dataclass
class ShapleyResult:
    values: np.ndarray
    pi_pl: np.ndarray
    pi_op: np.ndarray
    iterations: int
    residuals: list[float] = field(default_factory=list)

    def contraction_ratios(self, floor: float = 0.0) -> np.ndarray:
        """Successive residual ratios, skipping the first iteration.

        Residuals at or below ``floor`` are dropped; near machine precision
        their ratios measure rounding noise rather than the operator.
        """
        r = np.asarray(self.residuals)
        keep = r[:-1] > floor
        ratios = r[1:] / np.where(r[:-1] > 0, r[:-1], np.inf)
        return ratios[1:][keep[1:]] if ratios.size > 1 else np.empty(0)


def stage_games(model: GameModel, V: np.ndarray) -> np.ndarray:
    """R + gamma E[V(s')] for every state, shape (S, A, B)."""
    return model.reward + model.gamma * expected_next(model, V)


def shapley_solve(model: GameModel, tol: float = DEFAULT_TOL, max_iter: int = 100_000) -> ShapleyResult:
    """Value iteration where every backup solves the stage matrix game.

    Iterates until the sup-norm change falls below tol (1-gamma)/gamma, so the
    returned values are within ``tol`` of the fixed point.
    """
    live = model.nonterminal
    S = model.n_states
    V = np.zeros(S)
    pi_pl = np.zeros((S, model.n_pl))
    pi_op = np.zeros((S, model.n_op))
    pi_pl[:, 0] = 1.0
    pi_op[:, 0] = 1.0
    stop = tol * (1.0 - model.gamma) / model.gamma
    residuals = []
    for it in range(1, max_iter + 1):
        G = stage_games(model, V)[live]
        vals, rows, cols = solve_matrix_games(G)
        V_new = np.zeros(S)
        V_new[live] = vals
        res = float(np.max(np.abs(V_new - V)))
        residuals.append(res)
        V = V_new
        if res < stop:
            pi_pl[live] = rows
            pi_op[live] = cols
            return ShapleyResult(V, pi_pl, pi_op, it, residuals)
    raise RuntimeError(f"Shapley iteration did not converge in {max_iter} iterations (residual {res:.3e})")


def best_response_value(model: GameModel, fixed, maximize: bool, tol: float = DEFAULT_TOL, max_iter: int = 200_000) -> np.ndarray:
    """Optimal one-sided values against a fixed opposing policy.

    ``maximize=True``: ``fixed`` is the Opponent's policy and the Player
    maximizes. ``maximize=False``: ``fixed`` is the Player's policy and the
    Opponent minimizes.
    """
    S = model.n_states
    if maximize:
        fixed = check_policy(fixed, S, model.n_op, "opponent policy")
        R = np.einsum("sab,sb->sa", model.reward, fixed)
        contract = "sab,sb->sa"
    else:
        fixed = check_policy(fixed, S, model.n_pl, "player policy")
        R = np.einsum("sab,sa->sb", model.reward, fixed)
        contract = "sab,sa->sb"
    dead = model.terminal
    V = np.zeros(S)
    stop = tol * (1.0 - model.gamma) / model.gamma
    for _ in range(max_iter):
        Qm = R + model.gamma * np.einsum(contract, expected_next(model, V), fixed)
        V_new = Qm.max(axis=1) if maximize else Qm.min(axis=1)
        V_new[dead] = 0.0
        res = np.max(np.abs(V_new - V))
        V = V_new
        if res < stop:
            return V
    raise RuntimeError(f"best-response iteration did not converge (residual {res:.3e})")


def _rel_err(ref: np.ndarray, x: np.ndarray) -> np.ndarray:
    scale = np.abs(ref)
    return np.where(scale < VALUE_FLOOR, np.abs(x - ref), np.abs(x - ref) / np.maximum(scale, VALUE_FLOOR))


@dataclass
class EvalReport:
    v_nash: np.ndarray
    v_learn: np.ndarray
    v_br_pl: np.ndarray
    v_br_op: np.ndarray
    converged: np.ndarray  # per state; terminal states are False
    live: np.ndarray  # indices of non-terminal states
    epsilon: float

    @property
    def nash_fraction(self) -> float:
        return float(np.mean(self.converged[self.live]))

    @property
    def mean_abs_value_error(self) -> float:
        return float(np.mean(np.abs(self.v_nash - self.v_learn)[self.live]))


def nash_verdict(v_nash, v_learn, v_br_pl, v_br_op, epsilon: float) -> np.ndarray:
    """Per-state test that all three values sit within relative error epsilon.

    States whose Nash value is below VALUE_FLOOR in magnitude use absolute
    error instead of relative error.
    """
    return (
        (_rel_err(v_nash, v_learn) < epsilon)
        & (_rel_err(v_nash, v_br_pl) < epsilon)
        & (_rel_err(v_nash, v_br_op) < epsilon)
    )


def evaluate_nash(
    model: GameModel,
    learnt_pl,
    learnt_op,
    epsilon: float = 0.03,
    tol: float = DEFAULT_TOL,
    v_nash: np.ndarray | None = None,
) -> EvalReport:
    """Check a learnt policy pair against the exact Nash values.

    Pass ``v_nash`` to reuse a cached Shapley solution.
    """
    if v_nash is None:
        v_nash = shapley_solve(model, tol).values
    v_learn = policy_value(model, learnt_pl, learnt_op, tol * (1.0 - model.gamma) / model.gamma)
    v_br_pl = best_response_value(model, learnt_op, True, tol)
    v_br_op = best_response_value(model, learnt_pl, False, tol)
    conv = nash_verdict(v_nash, v_learn, v_br_pl, v_br_op, epsilon)
    conv &= ~model.terminal
    return EvalReport(v_nash, v_learn, v_br_pl, v_br_op, conv, model.nonterminal, epsilon)


# -- ground-truth cache -------------------------------------------------------


def ground_truth_doc(model: GameModel, result: ShapleyResult, tol: float) -> dict:
    return {
        "env": model.name,
        "gamma": model.gamma,
        "model_hash": model.content_hash(),
        "tol": tol,
        "iterations": result.iterations,
        "states": list(model.labels),
        "terminal": [bool(t) for t in model.terminal],
        "v_nash": [float(v) for v in result.values],
        "pi_pl": [[float(p) for p in row] for row in result.pi_pl],
        "pi_op": [[float(p) for p in row] for row in result.pi_op],
    }


def write_ground_truth(model: GameModel, path, tol: float = DEFAULT_TOL, result: ShapleyResult | None = None) -> ShapleyResult:
    result = result or shapley_solve(model, tol)
    with open(path, "w") as fh:
        json.dump(ground_truth_doc(model, result, tol), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return result


def cached_ground_truth(model: GameModel, cache_dir, tol: float = DEFAULT_TOL) -> ShapleyResult:
    """Shapley solution, read from ``cache_dir`` when the model hash matches."""
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"{model.name}_g{model.gamma:g}_{model.content_hash()}.json")
    if os.path.exists(path):
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("model_hash") == model.content_hash() and doc.get("tol", 1.0) <= tol:
            return ShapleyResult(
                np.asarray(doc["v_nash"]), np.asarray(doc["pi_pl"]), np.asarray(doc["pi_op"]), doc["iterations"]
            )
    return write_ground_truth(model, path, tol)
