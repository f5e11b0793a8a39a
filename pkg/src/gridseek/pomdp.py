"""The object-search decision process: states, actions, rewards, transitions.

The robot pose is fully observable; the object cell is hidden and static.
All dynamics are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

from .grid import Cell, Direction, GridError, OccupancyGrid, RobotPose, apply_move


class ContractViolation(RuntimeError):
    """An operation was invoked outside its precondition."""


@dataclass(frozen=True)
class MoveAction:
    direction: Direction

    def __str__(self):
        return f"move:{self.direction.name}"


@dataclass(frozen=True)
class LookAction:
    def __str__(self):
        return "look"


@dataclass(frozen=True)
class FindAction:
    x: int
    y: int

    def __str__(self):
        return f"find:{self.x},{self.y}"


Action = MoveAction | LookAction | FindAction

LOOK = LookAction()
MOVES = tuple(MoveAction(d) for d in Direction)


def action_from_str(text: str) -> Action:
    if text == "look":
        return LOOK
    kind, _, arg = text.partition(":")
    if kind == "move":
        return MoveAction(Direction[arg])
    if kind == "find":
        xs, _, ys = arg.partition(",")
        return FindAction(int(xs), int(ys))
    raise ValueError(f"unknown action string {text!r}")


@dataclass(frozen=True)
class SearchState:
    robot: RobotPose
    object_cell: Cell
    found: bool = False


@dataclass(frozen=True)
class RewardConfig:
    move_cost: float = -2.0
    look_cost: float = -1.0
    find_success: float = 1000.0
    find_failure: float = -1000.0
    discount: float = 0.9

    def __post_init__(self):
        if not 0 < self.discount < 1:
            raise ValueError(f"discount must be in (0,1), got {self.discount}")
        if not self.find_success > 0 > self.find_failure:
            raise ValueError("find_success must be positive and find_failure negative")


def transition(grid: OccupancyGrid, state: SearchState, action: Action) -> SearchState:
    """Deterministic successor state. The object never moves."""
    if state.found:
        raise ContractViolation("transition called on a terminal state")
    if isinstance(action, MoveAction):
        return SearchState(apply_move(grid, state.robot, action.direction), state.object_cell)
    if isinstance(action, LookAction):
        return state
    if isinstance(action, FindAction):
        if not grid.in_bounds(action.x, action.y):
            raise GridError(f"find target {(action.x, action.y)} out of bounds")
        if (action.x, action.y) == state.object_cell:
            return SearchState(state.robot, state.object_cell, found=True)
        return state
    raise TypeError(f"unknown action {action!r}")


def reward(state: SearchState, action: Action, cfg: RewardConfig) -> float:
    """Reward depends only on the action and the hidden object cell."""
    if isinstance(action, MoveAction):
        return cfg.move_cost
    if isinstance(action, LookAction):
        return cfg.look_cost
    if isinstance(action, FindAction):
        if (action.x, action.y) == state.object_cell:
            return cfg.find_success
        return cfg.find_failure
    raise TypeError(f"unknown action {action!r}")


def is_terminal(state: SearchState) -> bool:
    return state.found
