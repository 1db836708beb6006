"""Goal-intent inference for teleoperated grid-world navigation."""

from .baselines import EcfParams, RbiiParams, ecf_confidence, rbii_update
from .estimator import (
    AirmState,
    EstimatorParams,
    ObservationSet,
    airm_activate,
    airm_factor,
    boir_update,
    init_belief,
    normalize_minmax,
    normalize_observations,
    observation_likelihood,
    predict_intent,
    transition_predict,
)
from .metrics import TrialScore, accuracy, aggregate, log_loss, score_trial
from .planner import CostField, bearing_angle, dijkstra_field, euclidean_distance, path_length
from .simulator import (
    OperatorCommand,
    RobotState,
    TrialEngine,
    TrialLog,
    run_trial,
    scripted_policy,
    step,
)
from .world import Goal, OccupancyGrid, Pose2D, Scenario, load_map, load_scenario

__version__ = "0.1.0"
