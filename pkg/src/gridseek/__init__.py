"""Object search on occupancy grids with confidence-conditioned sensing."""

from .belief import Belief, BeliefUpdateError, uniform_init, update
from .detectors import ConfidenceModel, DetectorSpec, simulate_detection
from .episode import EpisodeLimits, EpisodeLog, NoiseModelConfig, run_episode
from .grid import (
    Direction,
    FanParams,
    GridError,
    OccupancyGrid,
    RobotPose,
    apply_move,
    fan_region,
    load_grid,
)
from .metrics import EpisodeResult, completion_rate, oracle_actions, spl
from .observation import (
    ConfidenceMap,
    NoiseParams,
    PROFILES,
    SEGMENTER_STATIC,
    SensorObservation,
    VILD_STATIC,
    event_probs,
    noise_for_confidence,
    observation_likelihood,
    sample_observation,
)
from .planner import PlannerConfig, POUCTPlanner, candidate_actions
from .pomdp import (
    Action,
    FindAction,
    LookAction,
    MoveAction,
    RewardConfig,
    SearchState,
    is_terminal,
    reward,
    transition,
)
from .scene import Scene, load_scene, save_scene, validate_scene

__version__ = "0.1.0"
