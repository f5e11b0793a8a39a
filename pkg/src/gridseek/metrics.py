"""Task-completion rate, SPL, and the shortest-search oracle."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .grid import DIRECTIONS, RobotPose, apply_move, fan_region
from .scene import Scene


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeResult:
    """One benchmark episode: success flag, actions taken, oracle minimum."""

    success: bool
    actions: int
    oracle: int


def oracle_actions(scene: Scene) -> int:
    """Fewest actions that can find the object: breadth-first search over
    poses (each Move costs one action, including in-place turns against
    walls), plus one Look and one Find once the object is in view."""
    grid, fan = scene.grid, scene.fan
    start = scene.robot_start
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        pose, moves = queue.popleft()
        if scene.object_cell in fan_region(grid, pose, fan):
            return moves + 2
        for d in DIRECTIONS:
            nxt = apply_move(grid, pose, d)
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, moves + 1))
    raise MetricsError(f"object {scene.object_cell} is not visible from any reachable pose")


def spl(results: Sequence[EpisodeResult]) -> float:
    """Success weighted by normalized inverse path length:
    (1/N) * sum S_i * l_i / max(p_i, l_i)."""
    if not results:
        raise MetricsError("empty result set")
    total = 0.0
    for r in results:
        if r.actions < 1 or r.oracle < 1:
            raise MetricsError(f"actions and oracle must be >= 1, got {r}")
        if r.success:
            total += r.oracle / max(r.actions, r.oracle)
    return total / len(results)


def completion_rate(results: Sequence[EpisodeResult]) -> float:
    if not results:
        raise MetricsError("empty result set")
    return sum(1.0 for r in results if r.success) / len(results)


def mean_and_se(values: Iterable[float]) -> tuple[float, float]:
    """Mean and standard error; SE is 0 for a single value."""
    vals = list(values)
    if not vals:
        raise MetricsError("empty value set")
    mean = sum(vals) / len(vals)
    if len(vals) == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return mean, math.sqrt(var / len(vals))
