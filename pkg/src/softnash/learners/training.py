"""The shared episode loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..game import ContractError, GameModel, RngStream
from .base import U_COLS, Learner
from .minimax_q import MinimaxQLearner
from .params import HyperParams
from .single_q import SingleQLearner
from .snq2 import Snq2Learner
from .soft_q import SoftQLearner
from .wolf_phc import WolfPhcLearner

LEARNERS: dict[str, type[Learner]] = {
    "snq2": Snq2Learner,
    "minimax-q": MinimaxQLearner,
    "soft-q": SoftQLearner,
    "wolf-phc": WolfPhcLearner,
    "single-q": SingleQLearner,
}
ALGORITHMS = tuple(LEARNERS)


def make_learner(algorithm: str, model: GameModel, params: HyperParams, episodes: int = 0, priors_in=None) -> Learner:
    try:
        cls = LEARNERS[algorithm]
    except KeyError:
        raise ContractError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}") from None
    if priors_in is not None and algorithm not in ("snq2", "soft-q"):
        raise ContractError(f"{algorithm} does not take priors")
    return cls(model, params, episodes, priors_in)


@dataclass
class TrainingResult:
    learner: Learner
    pi_pl: np.ndarray
    pi_op: np.ndarray
    episodes: int
    train_seconds: float
    snapshots: list = field(default_factory=list)

    @property
    def tables(self) -> dict:
        return self.learner.tables()

    @property
    def steps(self) -> int:
        return self.learner.steps

    @property
    def lp_calls(self) -> int:
        return self.learner.lp_calls


# callback(learner, episode, train_seconds) -> optional snapshot record
Callback = Callable[[Learner, int, float], object]


def run_training(
    model: GameModel,
    algorithm: str,
    params: HyperParams,
    rng: RngStream,
    priors_in=None,
    episodes: int = 1000,
    callback: Callback | None = None,
    eval_every: int | None = None,
) -> TrainingResult:
    """Train one learner for ``episodes`` episodes.

    Each episode starts at a state drawn uniformly from ``model.start_states``
    and consumes one ``(T_max, 5)`` block of uniforms. ``callback`` fires at
    episode 0, every ``eval_every`` episodes, and after the last one; the
    time it spends is excluded from ``train_seconds``. Whatever it returns
    (if not None) is collected in ``snapshots``.
    """
    if episodes < 0:
        raise ContractError("episode budget must be non-negative")
    learner = make_learner(algorithm, model, params, episodes, priors_in)
    T_max = learner.params.T_max
    starts = np.asarray(model.start_states, dtype=np.int64)
    snapshots = []
    elapsed = 0.0

    def fire(ep):
        if callback is not None:
            snap = callback(learner, ep, elapsed)
            if snap is not None:
                snapshots.append(snap)

    fire(0)
    for ep in range(1, episodes + 1):
        t0 = time.perf_counter()
        s0 = int(starts[rng.integers(len(starts))])
        u = rng.random((T_max, U_COLS))
        learner.run_episode(s0, u, ep)
        elapsed += time.perf_counter() - t0
        if eval_every and (ep % eval_every == 0 or ep == episodes):
            fire(ep)
        elif not eval_every and ep == episodes:
            fire(ep)
    pi_pl, pi_op = learner.learnt_policies()
    return TrainingResult(learner, pi_pl, pi_op, episodes, elapsed, snapshots)
