"""Finite two-agent zero-sum stochastic games and the shared numeric containers.

A game is stored densely: states and actions are integer indices, and the
transition kernel is a padded successor list ``succ[s, a, b, k]`` with
probabilities ``prob[s, a, b, k]``. Q-tables are plain ``(S, A, B)`` arrays and
policy tables are ``(S, A)`` row-stochastic arrays.

Terminal states are absorbing: a self-loop with probability one and zero
reward, so their value is always 0.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

TRANSITION_TOL = 1e-12
POLICY_TOL = 1e-9


class ContractError(ValueError):
    """An argument violates an operation's precondition."""


class PolicyEvaluationError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"policy evaluation did not converge after {iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class TransitionRecord(NamedTuple):
    s_t: int
    a_pl: int
    a_op: int
    r: float
    s_next: int
    terminal: bool


@dataclass(eq=False)
class GameModel:
    """Exact description of a finite zero-sum stochastic game.

    Every agent has the same action set in every state. ``reward[s, a, b]`` is
    the expected immediate reward of the joint action.
    """

    succ: np.ndarray  # (S, A, B, K) int64
    prob: np.ndarray  # (S, A, B, K) float64
    reward: np.ndarray  # (S, A, B)
    terminal: np.ndarray  # (S,) bool
    gamma: float
    labels: list[str]
    pl_action_names: list[str]
    op_action_names: list[str]
    r_min: float = -1.0
    r_max: float = 1.0
    start_states: np.ndarray | None = None
    horizon: int = 100
    name: str = "game"
    _hash: str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.succ = np.ascontiguousarray(self.succ, dtype=np.int64)
        self.prob = np.ascontiguousarray(self.prob, dtype=float)
        self.reward = np.ascontiguousarray(self.reward, dtype=float)
        self.terminal = np.ascontiguousarray(self.terminal, dtype=bool)
        if self.start_states is None:
            self.start_states = np.flatnonzero(~self.terminal)
        self.start_states = np.asarray(self.start_states, dtype=np.int64)
        self.validate()

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_pl(self) -> int:
        return self.reward.shape[1]

    @property
    def n_op(self) -> int:
        return self.reward.shape[2]

    @property
    def nonterminal(self) -> np.ndarray:
        return np.flatnonzero(~self.terminal)

    def validate(self):
        S, A, B = self.reward.shape
        if self.succ.shape[:3] != (S, A, B) or self.succ.shape != self.prob.shape:
            raise ContractError("transition arrays do not match reward shape")
        if len(self.labels) != S:
            raise ContractError("one label per state required")
        if len(self.pl_action_names) != A or len(self.op_action_names) != B:
            raise ContractError("action name lists do not match action counts")
        if not 0.0 < self.gamma < 1.0:
            raise ContractError(f"gamma must lie in (0, 1), got {self.gamma}")
        if np.any(self.prob < 0.0):
            raise ContractError("negative transition probability")
        if np.any((self.succ < 0) | (self.succ >= S)):
            raise ContractError("successor index out of range")
        sums = self.prob.sum(axis=-1)
        if np.max(np.abs(sums - 1.0)) > TRANSITION_TOL:
            raise ContractError("transition rows must sum to 1")
        if not np.all(np.isfinite(self.reward)):
            raise ContractError("non-finite reward")
        if self.reward.min() < self.r_min - 1e-12 or self.reward.max() > self.r_max + 1e-12:
            raise ContractError("reward outside declared [r_min, r_max]")
        for s in np.flatnonzero(self.terminal):
            if np.any(self.reward[s] != 0.0) or np.any(expected_next(self, self._unit(s))[s] != 1.0):
                raise ContractError(f"terminal state {self.labels[s]} must be absorbing with zero reward")
        if len(self.start_states) == 0 or np.any(self.terminal[self.start_states]):
            raise ContractError("start states must be non-empty and non-terminal")

    def _unit(self, s: int) -> np.ndarray:
        v = np.zeros(self.n_states)
        v[s] = 1.0
        return v

    def content_hash(self) -> str:
        """Stable digest of the dynamics, rewards and discount."""
        if self._hash is None:
            h = hashlib.sha256()
            for arr in (self.succ, self.prob, self.reward, self.terminal.astype(np.uint8)):
                h.update(np.ascontiguousarray(arr).tobytes())
                h.update(repr(arr.shape).encode())
            h.update(repr(float(self.gamma)).encode())
            h.update("\x00".join(self.labels).encode())
            self._hash = h.hexdigest()[:16]
        return self._hash

    def with_gamma(self, gamma: float) -> "GameModel":
        return GameModel(
            self.succ, self.prob, self.reward, self.terminal, gamma, self.labels,
            self.pl_action_names, self.op_action_names, self.r_min, self.r_max,
            self.start_states, self.horizon, self.name,
        )

    def state_index(self, label: str) -> int:
        return self.labels.index(label)

    # -- JSON snapshot -----------------------------------------------------

    def to_json(self) -> dict:
        transitions, rewards = {}, {}
        S, A, B = self.reward.shape
        for s in range(S):
            for a in range(A):
                for b in range(B):
                    key = f"{s}|{a}|{b}"
                    p = self.prob[s, a, b]
                    nz = p > 0
                    transitions[key] = [[int(t), float(q)] for t, q in zip(self.succ[s, a, b][nz], p[nz])]
                    rewards[key] = float(self.reward[s, a, b])
        return {
            "name": self.name,
            "states": list(self.labels),
            "pl_actions": {lab: list(self.pl_action_names) for lab in self.labels},
            "op_actions": {lab: list(self.op_action_names) for lab in self.labels},
            "transitions": transitions,
            "rewards": rewards,
            "terminals": [int(s) for s in np.flatnonzero(self.terminal)],
            "gamma": float(self.gamma),
            "reward_range": [self.r_min, self.r_max],
            "start_states": [int(s) for s in self.start_states],
            "horizon": int(self.horizon),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GameModel":
        labels = list(doc["states"])
        pl_sets = {tuple(v) for v in doc["pl_actions"].values()}
        op_sets = {tuple(v) for v in doc["op_actions"].values()}
        if len(pl_sets) != 1 or len(op_sets) != 1:
            raise ContractError("per-state action sets must be identical across states")
        pl_names, op_names = list(pl_sets.pop()), list(op_sets.pop())
        S, A, B = len(labels), len(pl_names), len(op_names)
        rows = {}
        for key, outs in doc["transitions"].items():
            s, a, b = (int(x) for x in key.split("|"))
            rows[s, a, b] = outs
        K = max(len(v) for v in rows.values())
        succ = np.zeros((S, A, B, K), dtype=np.int64)
        prob = np.zeros((S, A, B, K))
        reward = np.zeros((S, A, B))
        for (s, a, b), outs in rows.items():
            succ[s, a, b, :] = s
            for k, (t, p) in enumerate(outs):
                succ[s, a, b, k] = int(t)
                prob[s, a, b, k] = float(p)
        for key, r in doc["rewards"].items():
            s, a, b = (int(x) for x in key.split("|"))
            reward[s, a, b] = float(r)
        terminal = np.zeros(S, dtype=bool)
        terminal[list(doc["terminals"])] = True
        lo, hi = doc.get("reward_range", [float(reward.min()), float(reward.max())])
        return cls(
            succ, prob, reward, terminal, float(doc["gamma"]), labels, pl_names, op_names,
            r_min=lo, r_max=hi, start_states=doc.get("start_states"),
            horizon=int(doc.get("horizon", 100)), name=doc.get("name", "game"),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "GameModel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def make_model(
    name: str,
    labels: Sequence[str],
    terminal: Sequence[bool],
    pl_actions: Sequence[str],
    op_actions: Sequence[str],
    outcomes,
    gamma: float,
    r_min: float = -1.0,
    r_max: float = 1.0,
    start_states=None,
    horizon: int = 100,
) -> GameModel:
    """Assemble a model from a callback ``outcomes(s, a, b) -> (dist, reward)``.

    ``dist`` maps successor index to probability; duplicates are merged by the
    callback. Terminal states are wired as absorbing automatically.
    """
    S, A, B = len(labels), len(pl_actions), len(op_actions)
    table = {}
    K = 1
    for s in range(S):
        if terminal[s]:
            continue
        for a in range(A):
            for b in range(B):
                dist, r = outcomes(s, a, b)
                table[s, a, b] = (dist, r)
                K = max(K, len(dist))
    succ = np.empty((S, A, B, K), dtype=np.int64)
    prob = np.zeros((S, A, B, K))
    reward = np.zeros((S, A, B))
    for s in range(S):
        succ[s] = s
        if terminal[s]:
            prob[s, :, :, 0] = 1.0
    for (s, a, b), (dist, r) in table.items():
        for k, (t, p) in enumerate(sorted(dist.items())):
            succ[s, a, b, k] = t
            prob[s, a, b, k] = p
        reward[s, a, b] = r
    return GameModel(
        succ, prob, reward, np.asarray(terminal, dtype=bool), gamma, list(labels),
        list(pl_actions), list(op_actions), r_min, r_max, start_states, horizon, name,
    )


# -- random streams ---------------------------------------------------------


class RngStream:
    """Deterministic counter-based random stream (Philox).

    Child streams derived with :meth:`spawn` are independent and depend only
    on the master seed and the spawn path.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self.gen = np.random.Generator(np.random.Philox(self._seq))

    @property
    def seed(self) -> int:
        return int(self._seq.entropy)

    def spawn(self, n: int) -> list["RngStream"]:
        return [RngStream(child) for child in self._seq.spawn(n)]

    def replicate(self, index: int) -> "RngStream":
        """Stream for replicate ``index``; independent of how many exist."""
        return RngStream(np.random.SeedSequence(self._seq.entropy, spawn_key=self._seq.spawn_key + (index,)))

    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)


# -- policies ---------------------------------------------------------------


def uniform_policy(n_states: int, n_actions: int) -> np.ndarray:
    return np.full((n_states, n_actions), 1.0 / n_actions)


def check_policy(pi, n_states: int, n_actions: int, name: str = "policy") -> np.ndarray:
    """Validate a policy table; renormalize rows that drift by less than 1e-9."""
    pi = np.array(pi, dtype=float)
    if pi.shape != (n_states, n_actions):
        raise ContractError(f"{name} has shape {pi.shape}, expected {(n_states, n_actions)}")
    if not np.all(np.isfinite(pi)) or np.any(pi < -POLICY_TOL):
        raise ContractError(f"{name} has negative or non-finite entries")
    sums = pi.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > POLICY_TOL)
    if bad.size:
        raise ContractError(f"{name} rows {bad[:5].tolist()} do not sum to 1")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum(axis=1, keepdims=True)


def check_distribution(p, n: int, name: str = "distribution") -> np.ndarray:
    return check_policy(np.asarray(p, dtype=float).reshape(1, -1), 1, n, name)[0]


# -- core operations --------------------------------------------------------


def sample_transition(model: GameModel, s: int, a_pl: int, a_op: int, rng: RngStream) -> TransitionRecord:
    if not 0 <= s < model.n_states:
        raise ContractError(f"state {s} out of range")
    if model.terminal[s]:
        raise ContractError(f"cannot act in terminal state {model.labels[s]}")
    if not (0 <= a_pl < model.n_pl and 0 <= a_op < model.n_op):
        raise ContractError(f"invalid joint action ({a_pl}, {a_op})")
    cdf = np.cumsum(model.prob[s, a_pl, a_op])
    k = min(int(np.searchsorted(cdf, rng.random(), side="right")), cdf.size - 1)
    # skip padding entries with zero mass
    while model.prob[s, a_pl, a_op, k] == 0.0:
        k -= 1
    s_next = int(model.succ[s, a_pl, a_op, k])
    return TransitionRecord(s, a_pl, a_op, float(model.reward[s, a_pl, a_op]), s_next, bool(model.terminal[s_next]))


def expected_next(model: GameModel, V: np.ndarray) -> np.ndarray:
    """E[V(s') | s, a, b] as an (S, A, B) array."""
    return np.einsum("sabk,sabk->sab", model.prob, V[model.succ])


def expected_q_value(Q_s, pi_pl, pi_op) -> float:
    """pi_pl' Q(s) pi_op for one state's payoff matrix."""
    Q_s = np.asarray(Q_s, dtype=float)
    pi_pl = np.asarray(pi_pl, dtype=float)
    pi_op = np.asarray(pi_op, dtype=float)
    if Q_s.ndim != 2 or pi_pl.shape != (Q_s.shape[0],) or pi_op.shape != (Q_s.shape[1],):
        raise ContractError(f"shape mismatch: Q{Q_s.shape}, pi_pl{pi_pl.shape}, pi_op{pi_op.shape}")
    return float(pi_pl @ Q_s @ pi_op)


def policy_value(model: GameModel, pi_pl, pi_op, tol: float = 1e-8, max_iter: int = 200_000) -> np.ndarray:
    """Value of a fixed policy pair, by iterating the policy Bellman operator.

    Stops when the sup-norm change drops below ``tol``.
    """
    pi_pl = check_policy(pi_pl, model.n_states, model.n_pl, "pi_pl")
    pi_op = check_policy(pi_op, model.n_states, model.n_op, "pi_op")
    joint = pi_pl[:, :, None] * pi_op[:, None, :]
    live = ~model.terminal
    r_pi = np.einsum("sab,sab->s", joint, model.reward)
    w = joint[..., None] * model.prob  # (S, A, B, K)
    V = np.zeros(model.n_states)
    for it in range(1, max_iter + 1):
        V_new = r_pi + model.gamma * np.einsum("sabk,sabk->s", w, V[model.succ])
        V_new[~live] = 0.0
        residual = np.max(np.abs(V_new - V))
        V = V_new
        if residual < tol:
            return V
    raise PolicyEvaluationError(float(residual), max_iter)
