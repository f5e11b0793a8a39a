"""The episode loop: plan, act, sense, update, log.

One episode is a pure function of (scene, detector, configs, seed) as long
as the planner runs on a count budget. The master seed feeds a stream that
hands one sub-seed to the planner per step and drives detector sampling in
step order.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from timeit import default_timer as timer
from typing import Optional

from .belief import Belief, uniform_init, update
from .detectors import DetectorSpec, simulate_detection
from .grid import fan_region
from .observation import (
    ConfidenceMap,
    NoiseParams,
    PROFILES,
    SEGMENTER_STATIC,
    SensorObservation,
    combine_params,
    MODES,
    noise_for_confidence,
)
from .planner import PlannerConfig, POUCTPlanner
from .pomdp import (
    Action,
    FindAction,
    LookAction,
    MoveAction,
    RewardConfig,
    SearchState,
    action_from_str,
    is_terminal,
    reward,
    transition,
)
from .scene import Scene


@dataclass(frozen=True)
class NoiseModelConfig:
    """How belief updates obtain their noise parameters each step."""

    mode: str = "static"
    static_params: NoiseParams = field(default_factory=lambda: SEGMENTER_STATIC)
    confidence_map: ConfidenceMap = field(default_factory=lambda: PROFILES["hu-segmentation"])

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def params_for(self, confidence: float) -> NoiseParams:
        band = noise_for_confidence(confidence, self.confidence_map)
        return combine_params(self.mode, self.static_params, band)


@dataclass(frozen=True)
class EpisodeLimits:
    max_steps: int = 100
    find_budget: int = 10

    def __post_init__(self):
        if self.max_steps < 1 or self.find_budget < 1:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class StepRecord:
    step: int
    action: str
    observation: Optional[str]  # "x,y", "null", or None when no sensing happened
    confidence: Optional[float]
    noise: Optional[tuple[float, float, float, float]]  # sigma, tpr, tnr, smoothing
    reward: float
    belief_entropy: float
    elapsed_s: float


@dataclass
class EpisodeLog:
    scene: str
    seed: int
    mode: str
    detector_kind: str
    steps: list[StepRecord]
    success: bool
    actions: int
    finds_used: int
    discounted_return: float
    wallclock_s: float
    # Final belief, for rendering; not part of the serialized log.
    final_belief: Optional[Belief] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "scene": self.scene,
            "seed": self.seed,
            "mode": self.mode,
            "detector_kind": self.detector_kind,
            "success": self.success,
            "actions": self.actions,
            "finds_used": self.finds_used,
            "discounted_return": self.discounted_return,
            "wallclock_s": self.wallclock_s,
            "steps": [vars(s) for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeLog":
        steps = [
            StepRecord(
                step=s["step"],
                action=s["action"],
                observation=s["observation"],
                confidence=s["confidence"],
                noise=tuple(s["noise"]) if s["noise"] is not None else None,
                reward=s["reward"],
                belief_entropy=s["belief_entropy"],
                elapsed_s=s["elapsed_s"],
            )
            for s in data["steps"]
        ]
        return cls(
            scene=data["scene"],
            seed=data["seed"],
            mode=data["mode"],
            detector_kind=data["detector_kind"],
            steps=steps,
            success=data["success"],
            actions=data["actions"],
            finds_used=data["finds_used"],
            discounted_return=data["discounted_return"],
            wallclock_s=data["wallclock_s"],
        )

    @classmethod
    def from_json(cls, text: str) -> "EpisodeLog":
        return cls.from_dict(json.loads(text))


def _obs_str(z: Optional[SensorObservation]) -> Optional[str]:
    if z is None:
        return None
    if z.is_null:
        return "null"
    return f"{z.detection[0]},{z.detection[1]}"


class BridgeRuntimeError(RuntimeError):
    """Transport-level failure talking to an external detector; distinct
    from the search task failing."""


def run_episode(
    scene: Scene,
    detector: DetectorSpec,
    planner_cfg: PlannerConfig,
    reward_cfg: RewardConfig,
    noise_cfg: NoiseModelConfig,
    limits: EpisodeLimits,
    seed: int,
    bridge=None,
) -> EpisodeLog:
    """Run one search episode to termination, step cap, or Find exhaustion.

    ``bridge`` must be a :class:`gridseek.bridge.BridgeDetector` when the
    detector kind is "bridge".
    """
    if detector.kind == "bridge" and bridge is None:
        raise ValueError("bridge detector requires a bridge runtime")
    t0 = timer()
    master = random.Random(seed)
    # Independent streams: detector sampling must not perturb the planner
    # seeds, so an external detector (which consumes no local randomness)
    # replays the same plans as an in-process one fed identical outputs.
    plan_stream = random.Random(master.getrandbits(64))
    sense_stream = random.Random(master.getrandbits(64))
    belief = uniform_init(scene.grid)
    state = SearchState(scene.robot_start, scene.object_cell)
    planner = POUCTPlanner(scene.grid, scene.fan, planner_cfg, reward_cfg)
    records: list[StepRecord] = []
    finds_used = 0
    discounted = 0.0
    discount = 1.0
    success = False

    for step in range(1, limits.max_steps + 1):
        t_step = timer()
        plan_rng = random.Random(plan_stream.getrandbits(64))
        action = planner.plan(belief, state.robot, plan_rng)
        next_state = transition(scene.grid, state, action)
        r = reward(state, action, reward_cfg)
        discounted += discount * r
        discount *= reward_cfg.discount

        z: Optional[SensorObservation] = None
        params: Optional[NoiseParams] = None
        obs_key = None
        if isinstance(action, LookAction):
            view = fan_region(scene.grid, state.robot, scene.fan)
            if detector.kind == "bridge":
                z = bridge.observe(scene, state.robot, view, step)
            else:
                z = simulate_detection(detector, state.object_cell, view, sense_stream)
            params = noise_cfg.params_for(z.confidence)
            belief = update(belief, action, z, view, params)
            obs_key = z.detection
        elif isinstance(action, FindAction):
            finds_used += 1
            if next_state.found:
                success = True
            else:
                obs_key = False
                view = fan_region(scene.grid, state.robot, scene.fan)
                belief = update(belief, action, None, view, noise_cfg.static_params)
        planner.advance(action, obs_key)
        records.append(
            StepRecord(
                step=step,
                action=str(action),
                observation=_obs_str(z),
                confidence=z.confidence if z is not None else None,
                noise=(params.sigma, params.tpr, params.tnr, params.smoothing) if params else None,
                reward=r,
                belief_entropy=belief.entropy(),
                elapsed_s=timer() - t_step,
            )
        )
        state = next_state
        if is_terminal(state) or finds_used >= limits.find_budget:
            break

    return EpisodeLog(
        scene=scene.name,
        seed=seed,
        mode=noise_cfg.mode,
        detector_kind=detector.kind,
        steps=records,
        success=success,
        actions=len(records),
        finds_used=finds_used,
        discounted_return=discounted,
        wallclock_s=timer() - t0,
        final_belief=belief,
    )


def replay_discounted_return(log: EpisodeLog, reward_cfg: RewardConfig) -> float:
    """Recompute the discounted return from the logged action/reward trace."""
    total = 0.0
    disc = 1.0
    for rec in log.steps:
        total += disc * rec.reward
        disc *= reward_cfg.discount
    return total
