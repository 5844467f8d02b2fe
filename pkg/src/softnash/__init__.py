"""Tabular learning and exact solution of two-agent zero-sum stochastic games."""

from .envs import ENV_NAMES, build_env
from .exact import EvalReport, best_response_value, evaluate_nash, shapley_solve
from .game import ContractError, GameModel, RngStream, TransitionRecord, make_model
from .harness import ExperimentConfig, compare_runs, export_ground_truth, run_experiment
from .learners import ALGORITHMS, HyperParams, run_training
from .matrix_games import MatrixGameSolution, SolverError, solve_matrix_game
from .soft import InverseTemperatures, marginalize, soft_policy, soft_q_target

__version__ = "0.1.0"
