import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridseek.belief import (
    Belief,
    BeliefUpdateError,
    belief_csv_to_array,
    belief_to_csv,
    uniform_init,
    update,
)
from gridseek.grid import Direction, FanParams, RobotPose, fan_region, load_grid
from gridseek.observation import (
    NULL_OBSERVATION,
    NoiseParams,
    SensorObservation,
    sample_observation,
)
from gridseek.pomdp import FindAction, LOOK, MoveAction


def open_grid(w, h):
    return load_grid("\n".join("." * w for _ in range(h)))


class TestUniformInit:
    def test_16x16(self):
        b = uniform_init(open_grid(16, 16))
        assert b.probs.shape == (16, 16)
        assert np.allclose(b.probs, 1 / 256)

    def test_two_free_cells(self):
        b = uniform_init(load_grid(".#\n#."))
        assert b.prob((0, 0)) == 0.5
        assert b.prob((1, 1)) == 0.5

    def test_point_mass_single_cell(self):
        b = uniform_init(load_grid(".#\n##"))
        assert b.prob((0, 0)) == 1.0


class TestWorkedExample:
    """1x3 corridor, robot at cell 0 facing EAST, NULL Look observation."""

    def setup_method(self):
        self.grid = open_grid(3, 1)
        self.pose = RobotPose(0, 0, Direction.EAST)
        self.view = fan_region(self.grid, self.pose, FanParams())
        assert self.view == {(1, 0), (2, 0)}

    def test_posterior(self):
        params = NoiseParams(sigma=0.827, tpr=0.581, tnr=0.918, smoothing=0.0)
        prior = uniform_init(self.grid)
        post = update(prior, LOOK, NULL_OBSERVATION, self.view, params)
        assert post.prob((0, 0)) == pytest.approx(0.5228, abs=1e-3)
        assert post.prob((1, 0)) == pytest.approx(0.2386, abs=1e-3)
        assert post.prob((2, 0)) == pytest.approx(0.2386, abs=1e-3)

    def test_posterior_argmax_is_cell0(self):
        params = NoiseParams(sigma=0.827, tpr=0.581, tnr=0.918, smoothing=0.0)
        post = update(uniform_init(self.grid), LOOK, NULL_OBSERVATION, self.view, params)
        assert post.map_estimate() == (0, 0)


class TestUpdate:
    def test_move_leaves_belief_unchanged(self):
        grid = open_grid(4, 4)
        b = uniform_init(grid)
        out = update(b, MoveAction(Direction.EAST), None, frozenset(), NoiseParams(1, 0.5, 0.5))
        assert out is b

    def test_failed_find_zeroes_and_renormalizes(self):
        grid = open_grid(3, 1)
        b = uniform_init(grid)
        out = update(b, FindAction(0, 0), None, frozenset(), NoiseParams(1, 0.5, 0.5))
        assert out.prob((0, 0)) == 0.0
        assert out.prob((1, 0)) == pytest.approx(0.5)
        assert out.prob((2, 0)) == pytest.approx(0.5)

    def test_detection_concentrates_on_detected_cell(self):
        grid = open_grid(6, 6)
        pose = RobotPose(2, 5, Direction.NORTH)
        view = fan_region(grid, pose, FanParams(90, 4))
        params = NoiseParams(sigma=0.2, tpr=0.95, tnr=0.95)
        z = SensorObservation((2, 2))
        post = update(uniform_init(grid), LOOK, z, view, params)
        assert post.map_estimate() == (2, 2)
        assert post.prob((2, 2)) > 0.5

    def test_null_decreases_view_mass(self):
        # holds whenever (1 - tpr) < tnr and mass sits on both sides
        grid = open_grid(6, 6)
        pose = RobotPose(3, 5, Direction.NORTH)
        view = fan_region(grid, pose, FanParams(90, 3))
        params = NoiseParams(sigma=0.8, tpr=0.581, tnr=0.918)
        prior = uniform_init(grid)
        post = update(prior, LOOK, NULL_OBSERVATION, view, params)
        assert post.mass_in(view) < prior.mass_in(view)

    def test_support_never_leaks_onto_occupied(self):
        grid = load_grid("..#.\n....\n.#..\n....")
        pose = RobotPose(0, 3, Direction.NORTH)
        view = fan_region(grid, pose, FanParams(90, 4))
        b = uniform_init(grid)
        rng = random.Random(0)
        params = NoiseParams(sigma=0.8, tpr=0.6, tnr=0.9)
        for _ in range(50):
            z = sample_observation((3, 0), view, params, rng)
            b = update(b, LOOK, z, view, params)
        for y in range(4):
            for x in range(4):
                if not grid.is_free(x, y):
                    assert b.prob((x, y)) == 0.0

    def test_impossible_evidence_raises(self):
        grid = open_grid(2, 1)
        probs = np.array([[1.0, 0.0]])
        b = Belief(grid, probs)
        with pytest.raises(BeliefUpdateError) as exc_info:
            update(b, FindAction(0, 0), None, frozenset(), NoiseParams(1, 0.5, 0.5))
        assert exc_info.value.observation is None


class TestLongRunNormalization:
    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_hundred_step_random_updates_stay_normalized(self, seed):
        rng = random.Random(seed)
        grid = open_grid(5, 5)
        obj = (rng.randrange(5), rng.randrange(5))
        b = uniform_init(grid)
        pose = RobotPose(2, 4, Direction.NORTH)
        params = NoiseParams(sigma=0.8, tpr=0.6, tnr=0.9, smoothing=1e-3)
        fan = FanParams(90, 4)
        for _ in range(100):
            pose = RobotPose(rng.randrange(5), rng.randrange(5), Direction(rng.randrange(4)))
            view = fan_region(grid, pose, fan)
            z = sample_observation(obj, view, params, rng)
            b = update(b, LOOK, z, view, params)
            assert b.total() == pytest.approx(1.0, abs=1e-9)


class TestMapEstimate:
    def test_point_mass(self):
        grid = open_grid(4, 4)
        probs = np.zeros((4, 4))
        probs[3, 3] = 1.0
        assert Belief(grid, probs).map_estimate() == (3, 3)

    def test_uniform_tie_breaks_lexicographic(self):
        b = uniform_init(open_grid(2, 1))
        assert b.map_estimate() == (0, 0)

    def test_row_major_tie_break_prefers_smaller_y(self):
        grid = open_grid(2, 2)
        probs = np.full((2, 2), 0.25)
        assert Belief(grid, probs).map_estimate() == (0, 0)


class TestBeliefCsv:
    def test_round_trip(self):
        grid = load_grid("..#\n...")
        b = uniform_init(grid)
        arr = belief_csv_to_array(belief_to_csv(b))
        assert arr.shape == (2, 3)
        assert arr[0, 2] == -1
        assert np.allclose(arr[arr >= 0], 0.2)

    def test_ragged_rejected(self):
        with pytest.raises(ValueError):
            belief_csv_to_array("0.5,0.5\n0.2")
