import pytest

from gridseek.detectors import ConfidenceModel, DetectorSpec
from gridseek.episode import (
    EpisodeLimits,
    EpisodeLog,
    NoiseModelConfig,
    replay_discounted_return,
    run_episode,
)
from gridseek.grid import Direction, FanParams, RobotPose, load_grid
from gridseek.observation import ConfidenceMap, NoiseParams, PROFILES
from gridseek.planner import PlannerConfig
from gridseek.pomdp import RewardConfig
from gridseek.scene import Scene

REWARDS = RewardConfig()

MATCHED_PERFECT = NoiseParams(sigma=0.05, tpr=0.99, tnr=0.99, smoothing=1e-3)


def semantic_steps(log):
    """Step records without the wall-clock column."""
    return [
        (s.step, s.action, s.observation, s.confidence, s.noise, s.reward, s.belief_entropy)
        for s in log.steps
    ]


def perfect_scene():
    grid = load_grid("\n".join(["....."] * 5))
    return Scene(
        grid=grid,
        object_cell=(2, 2),
        robot_start=RobotPose(2, 4, Direction.NORTH),
        language="the green mug on the left",
        fan=FanParams(90, 4),
        name="five",
    )


def small_planner(n=300, noise=MATCHED_PERFECT):
    return PlannerConfig(num_sims=n, planning_noise=noise)


class TestPerfectSensorEpisode:
    def test_quick_success_when_object_starts_visible(self):
        scene = perfect_scene()
        log = run_episode(
            scene,
            DetectorSpec(kind="perfect"),
            small_planner(),
            REWARDS,
            NoiseModelConfig(mode="static", static_params=MATCHED_PERFECT),
            EpisodeLimits(max_steps=10, find_budget=10),
            seed=3,
        )
        assert log.success
        assert log.actions <= 3
        assert log.steps[-1].action.startswith("find:2,2")


class TestDeterminism:
    def test_same_seed_identical_log(self):
        scene = perfect_scene()
        spec = DetectorSpec(kind="static")
        noise = NoiseModelConfig(mode="static")
        logs = [
            run_episode(scene, spec, small_planner(noise=noise.static_params), REWARDS, noise,
                        EpisodeLimits(max_steps=12, find_budget=10), seed=11)
            for _ in range(2)
        ]
        a, b = logs
        assert semantic_steps(a) == semantic_steps(b)
        assert (a.success, a.actions, a.discounted_return) == (b.success, b.actions, b.discounted_return)

    def test_different_seeds_diverge_eventually(self):
        scene = perfect_scene()
        spec = DetectorSpec(kind="static")
        noise = NoiseModelConfig(mode="static")
        traces = set()
        for seed in range(6):
            log = run_episode(scene, spec, small_planner(), REWARDS, noise,
                              EpisodeLimits(max_steps=8, find_budget=10), seed=seed)
            traces.add(tuple((s.action, s.observation) for s in log.steps))
        assert len(traces) > 1


class TestNeverDetectedFailure:
    def test_blind_detector_fails_with_no_finds(self):
        scene = perfect_scene()
        blind = NoiseParams(sigma=0.8, tpr=0.0, tnr=1.0, smoothing=1e-3)
        log = run_episode(
            scene,
            DetectorSpec(kind="static", base=blind),
            small_planner(n=200, noise=blind),
            REWARDS,
            NoiseModelConfig(mode="static", static_params=blind),
            EpisodeLimits(max_steps=12, find_budget=10),
            seed=0,
        )
        assert not log.success
        assert log.actions == 12  # ran to the step cap
        assert all(rec.observation in (None, "null") for rec in log.steps)


class TestAccounting:
    def test_discounted_return_matches_replay(self):
        scene = perfect_scene()
        log = run_episode(
            scene,
            DetectorSpec(kind="static"),
            small_planner(),
            REWARDS,
            NoiseModelConfig(mode="static"),
            EpisodeLimits(max_steps=15, find_budget=10),
            seed=21,
        )
        assert log.discounted_return == pytest.approx(replay_discounted_return(log, REWARDS), abs=1e-12)

    def test_find_budget_enforced(self):
        scene = perfect_scene()
        # Belief params that mistrust NULLs force early, repeated finds.
        overconfident = NoiseParams(sigma=0.3, tpr=0.05, tnr=0.05, smoothing=1e-3)
        log = run_episode(
            scene,
            DetectorSpec(kind="static", base=NoiseParams(0.8, 0.0, 1.0)),
            small_planner(n=150, noise=overconfident),
            REWARDS,
            NoiseModelConfig(mode="static", static_params=overconfident),
            EpisodeLimits(max_steps=60, find_budget=3),
            seed=2,
        )
        finds = sum(1 for rec in log.steps if rec.action.startswith("find:"))
        assert finds <= 3
        assert log.finds_used == finds

    def test_json_round_trip(self):
        scene = perfect_scene()
        log = run_episode(
            scene,
            DetectorSpec(kind="perfect"),
            small_planner(n=100),
            REWARDS,
            NoiseModelConfig(mode="static", static_params=MATCHED_PERFECT),
            EpisodeLimits(),
            seed=5,
        )
        restored = EpisodeLog.from_json(log.to_json())
        assert restored.steps == log.steps
        assert restored.success == log.success
        assert restored.final_belief is None  # belief is not serialized


class TestModeComparability:
    def test_mode_only_changes_noise_params_column(self):
        """A dynamic arm whose bands emit the static params reproduces the
        static arm's log exactly."""
        scene = perfect_scene()
        static = NoiseParams(sigma=0.827, tpr=0.581, tnr=0.918, smoothing=1e-3)
        degenerate_map = ConfidenceMap(bands=((1.0, static),), fallback=static)
        spec = DetectorSpec(kind="confidence")
        limits = EpisodeLimits(max_steps=15, find_budget=10)
        log_static = run_episode(
            scene, spec, small_planner(noise=static), REWARDS,
            NoiseModelConfig(mode="static", static_params=static),
            limits, seed=8,
        )
        log_dynamic = run_episode(
            scene, spec, small_planner(noise=static), REWARDS,
            NoiseModelConfig(mode="dynamic-both", static_params=static, confidence_map=degenerate_map),
            limits, seed=8,
        )
        assert [s.action for s in log_static.steps] == [s.action for s in log_dynamic.steps]
        assert [s.observation for s in log_static.steps] == [s.observation for s in log_dynamic.steps]
        assert [s.noise for s in log_static.steps] == [s.noise for s in log_dynamic.steps]
        assert log_static.success == log_dynamic.success

    def test_dynamic_mode_swaps_params_per_confidence(self):
        scene = perfect_scene()
        log = run_episode(
            scene,
            DetectorSpec(kind="confidence"),
            small_planner(),
            REWARDS,
            NoiseModelConfig(mode="dynamic-both", confidence_map=PROFILES["hu-segmentation"]),
            EpisodeLimits(max_steps=20, find_budget=10),
            seed=17,
        )
        seen = {
            (rec.confidence, rec.noise)
            for rec in log.steps
            if rec.action == "look"
        }
        for conf, noise in seen:
            expected_sigma, expected_tpr = (0.6, 0.7) if conf >= 1.0 else (1.0, 0.5)
            assert noise[0] == expected_sigma
            assert noise[1] == expected_tpr
            assert noise[2] == 0.918


class TestBridgeValidation:
    def test_bridge_without_runtime_rejected(self):
        scene = perfect_scene()
        with pytest.raises(ValueError):
            run_episode(
                scene,
                DetectorSpec(kind="bridge", endpoint="tcp:localhost:1"),
                small_planner(),
                REWARDS,
                NoiseModelConfig(),
                EpisodeLimits(),
                seed=0,
            )
