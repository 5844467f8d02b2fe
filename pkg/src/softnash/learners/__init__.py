from .base import Learner, equilibrium_policies
from .minimax_q import MinimaxQLearner, minimax_q_step
from .params import (
    HyperParams,
    compute_initial_schedule,
    dynamic_schedule,
    expand_schedule,
    fixed_schedule,
    initial_prior_interval,
)
from .single_q import SingleQLearner, single_q_step
from .snq2 import Snq2Learner, snq2_prior_update, snq2_step
from .soft_q import SoftQLearner, soft_q_step
from .training import ALGORITHMS, LEARNERS, TrainingResult, make_learner, run_training
from .wolf_phc import WolfPhcLearner, wolf_phc_step
