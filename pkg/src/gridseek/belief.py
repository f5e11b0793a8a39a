"""Exact Bayesian belief over the hidden object cell.

The robot pose is fully observable, so the belief factors exactly: only the
object cell is tracked. Probabilities are stored linearly; at a few hundred
cells underflow is not a concern (switch to log space if maps grow beyond
~10^4 cells).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .grid import Cell, OccupancyGrid
from .observation import NoiseParams, SensorObservation, likelihood_over_cells
from .pomdp import Action, ContractViolation, FindAction, LookAction, MoveAction

NORMALIZATION_TOL = 1e-9


class BeliefUpdateError(RuntimeError):
    """The posterior vanished: the observation was impossible under the model."""

    def __init__(self, message: str, observation: Optional[SensorObservation] = None):
        super().__init__(message)
        self.observation = observation


@dataclass(frozen=True, eq=False)
class Belief:
    """Per-cell object probability; zero on occupied cells, sums to one."""

    grid: OccupancyGrid
    probs: np.ndarray  # shape (height, width)

    def __post_init__(self):
        self.probs.setflags(write=False)

    def prob(self, cell: Cell) -> float:
        x, y = cell
        return float(self.probs[y, x])

    def map_estimate(self) -> Cell:
        """Argmax cell; ties resolve to the smallest (y, x) in row-major order."""
        idx = int(np.argmax(self.probs))
        y, x = divmod(idx, self.grid.width)
        return (x, y)

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())

    def total(self) -> float:
        return float(self.probs.sum())

    def mass_in(self, cells: Iterable[Cell]) -> float:
        return float(sum(self.probs[y, x] for x, y in cells))


def uniform_init(grid: OccupancyGrid) -> Belief:
    """Uniform belief over the free cells."""
    free = grid.free_cells()
    if not free:
        raise ValueError("grid has no free cells")
    probs = np.zeros((grid.height, grid.width), dtype=float)
    p = 1.0 / len(free)
    for x, y in free:
        probs[y, x] = p
    return Belief(grid, probs)


def belief_to_csv(belief: Belief) -> str:
    """CSV snapshot: one row per grid row, occupied cells written as -1."""
    lines = []
    for y in range(belief.grid.height):
        row = []
        for x in range(belief.grid.width):
            if belief.grid.is_free(x, y):
                row.append(repr(float(belief.probs[y, x])))
            else:
                row.append("-1")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def belief_csv_to_array(text: str) -> np.ndarray:
    """Parse a snapshot back into an array; occupied cells come back as -1."""
    rows = [line for line in text.strip().split("\n") if line]
    if not rows:
        raise ValueError("empty belief CSV")
    parsed = []
    width = None
    for i, line in enumerate(rows):
        try:
            values = [float(v) for v in line.split(",")]
        except ValueError as e:
            raise ValueError(f"belief CSV row {i}: {e}")
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ValueError(f"belief CSV row {i} has {len(values)} columns, expected {width}")
        parsed.append(values)
    return np.asarray(parsed, dtype=float)


def _renormalized(grid: OccupancyGrid, probs: np.ndarray, z: Optional[SensorObservation]) -> Belief:
    total = probs.sum()
    if total <= 0.0:
        raise BeliefUpdateError(f"posterior has zero mass after observation {z}", z)
    return Belief(grid, probs / total)


def update(
    belief: Belief,
    action: Action,
    observation: Optional[SensorObservation],
    view: frozenset[Cell],
    params: NoiseParams,
) -> Belief:
    """One Bayes step for the executed action and received observation.

    Move leaves the belief unchanged (deterministic motion, static object,
    and Move always observes NULL). Look multiplies by the observation
    likelihood and renormalizes. A Find that did not terminate is perfect
    negative evidence at the queried cell.
    """
    if isinstance(action, MoveAction):
        if observation is not None and not observation.is_null:
            raise ContractViolation("Move must observe NULL")
        return belief
    if isinstance(action, LookAction):
        if observation is None:
            raise ContractViolation("Look requires an observation")
        free = belief.grid.free_cells()
        lik = likelihood_over_cells(observation, free, view, params)
        probs = np.zeros_like(belief.probs)
        for (x, y), l in zip(free, lik):
            probs[y, x] = l * belief.probs[y, x]
        return _renormalized(belief.grid, probs, observation)
    if isinstance(action, FindAction):
        probs = np.array(belief.probs)
        probs[action.y, action.x] = 0.0
        return _renormalized(belief.grid, probs, observation)
    raise TypeError(f"unknown action {action!r}")
