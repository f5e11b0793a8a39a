"""Independent reference computations used by the test suite.

The expectimax oracle evaluates the same six-action candidate set as the
planner (four moves, Look, and Find at the current posterior's argmax) by
exact enumeration over the discrete observation space, with no sampling
anywhere.
"""
from __future__ import annotations

from gridseek.belief import Belief, update
from gridseek.grid import FanParams, OccupancyGrid, RobotPose, apply_move, fan_region
from gridseek.observation import NoiseParams, SensorObservation, observation_likelihood
from gridseek.planner import candidate_actions
from gridseek.pomdp import (
    Action,
    FindAction,
    LookAction,
    MoveAction,
    RewardConfig,
)


def expectimax_action_values(
    belief: Belief,
    pose: RobotPose,
    grid: OccupancyGrid,
    fan: FanParams,
    depth: int,
    params: NoiseParams,
    rewards: RewardConfig,
) -> list[tuple[Action, float]]:
    """Exact depth-limited values of the root candidate actions."""
    actions = candidate_actions(belief, pose, fan_region(grid, pose, fan))
    return [
        (a, _q_value(belief, pose, a, grid, fan, depth, params, rewards))
        for a in actions
    ]


def expectimax_best_action(belief, pose, grid, fan, depth, params, rewards) -> tuple[Action, float, float]:
    """Best root action plus the margin to the runner-up (for tie screening)."""
    values = expectimax_action_values(belief, pose, grid, fan, depth, params, rewards)
    ordered = sorted(values, key=lambda av: av[1], reverse=True)
    margin = ordered[0][1] - ordered[1][1]
    best = max(values, key=lambda av: av[1])  # first-in-order wins exact ties
    return best[0], best[1], margin


def _value(belief, pose, grid, fan, depth, params, rewards) -> float:
    if depth == 0:
        return 0.0
    best = None
    for a in candidate_actions(belief, pose, frozenset()):
        q = _q_value(belief, pose, a, grid, fan, depth, params, rewards)
        if best is None or q > best:
            best = q
    return best


def _q_value(belief, pose, action, grid, fan, depth, params, rewards) -> float:
    gamma = rewards.discount
    if isinstance(action, MoveAction):
        nxt = apply_move(grid, pose, action.direction)
        return rewards.move_cost + gamma * _value(belief, nxt, grid, fan, depth - 1, params, rewards)
    if isinstance(action, LookAction):
        view = fan_region(grid, pose, fan)
        outcomes = [SensorObservation(None)] + [SensorObservation(c) for c in sorted(view)]
        total = rewards.look_cost
        for z in outcomes:
            pz = sum(
                observation_likelihood(z, c, view, params) * belief.prob(c)
                for c in grid.free_cells()
            )
            if pz <= 0.0:
                continue
            posterior = update(belief, action, z, view, params)
            total += gamma * pz * _value(posterior, pose, grid, fan, depth - 1, params, rewards)
        return total
    if isinstance(action, FindAction):
        p_hit = belief.prob((action.x, action.y))
        value = p_hit * rewards.find_success + (1.0 - p_hit) * rewards.find_failure
        if p_hit < 1.0:
            posterior = update(belief, action, None, frozenset(), params)
            value += (1.0 - p_hit) * gamma * _value(posterior, pose, grid, fan, depth - 1, params, rewards)
        return value
    raise TypeError(action)
