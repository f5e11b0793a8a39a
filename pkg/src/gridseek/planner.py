"""Online PO-UCT action selection over the search problem.

Each simulation samples an object cell from the current belief, descends
the tree with UCB1 action selection, simulates one step of dynamics with
observations drawn from a fixed planning-time noise model, expands one new
node, and evaluates the frontier with a uniform random rollout over the
non-declaring actions. Observations are discretized to {NULL} u V for
child keying; a declare attempt branches on hit/miss.

The declare action would naively be parameterized over every cell of the
map, exploding the branching factor. Instead every tree node carries the
exact posterior for its action/observation history and exposes a single
Find bound to that posterior's argmax (at the root, the argmax of the
root belief). Seeing a detection inside the tree therefore makes the
matching node's Find profitable, which is what gives Look and Move their
information value.
"""
from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from math import exp, log, sqrt
from timeit import default_timer as timer
from typing import Optional

import numpy as np

from .belief import Belief
from .grid import Cell, FanParams, OccupancyGrid, RobotPose, apply_move, fan_region
from .observation import (
    SEGMENTER_STATIC,
    NoiseParams,
    SensorObservation,
    likelihood_over_cells,
)
from .pomdp import (
    Action,
    FindAction,
    LOOK,
    MOVES,
    MoveAction,
    RewardConfig,
)


class PlannerError(ValueError):
    """Planning was requested with unusable inputs (no budget, empty belief)."""


@dataclass(frozen=True)
class PlannerConfig:
    depth: int = 3
    exploration_c: float = 10000.0
    num_sims: int = 1000
    # When set, run simulations until the wall clock expires instead of a
    # fixed count. Not reproducible across machines; keep None for tests.
    time_budget_s: Optional[float] = None
    planning_noise: NoiseParams = field(default_factory=lambda: SEGMENTER_STATIC)
    # Carry the executed action's observation subtree into the next plan
    # call instead of starting cold. Cuts step-to-step dithering; the
    # retained statistics reflect the planning noise model, so the episode
    # loop refreshes the root posterior before reuse.
    reuse_tree: bool = False

    def __post_init__(self):
        if self.depth < 1:
            raise PlannerError(f"depth must be >= 1, got {self.depth}")
        if self.exploration_c < 0:
            raise PlannerError("exploration_c must be nonnegative")
        if self.time_budget_s is None and self.num_sims < 1:
            raise PlannerError("simulation budget must be positive")
        if self.time_budget_s is not None and self.time_budget_s <= 0:
            raise PlannerError("time budget must be positive")


def candidate_actions(belief: Belief, robot: RobotPose, view: frozenset[Cell]) -> tuple[Action, ...]:
    """The fixed six-action set: Find at the belief argmax, Look, four moves.

    The order matters twice: unvisited actions are tried in it, and exact
    value ties resolve to the earliest entry. Find leads so that a freshly
    created observation child prices its declare action on the first visit;
    burying it behind the moves would need six visits per child before the
    success reward is ever sampled.
    """
    target = belief.map_estimate()
    return (FindAction(target[0], target[1]), LOOK) + MOVES


class _Node:
    __slots__ = ("visits", "edges", "probs", "target_idx")

    def __init__(self, probs: np.ndarray, target_idx: int):
        self.visits = 0
        self.edges = None  # expanded lazily: [n, q, children] per action
        self.probs = probs
        self.target_idx = target_idx


class POUCTPlanner:
    """Reusable planner for one (grid, fan, config) triple.

    ``plan`` is deterministic given the rng state and a count budget.
    Geometry, Gaussian-sampling, and observation-likelihood tables are
    memoized across calls, so keeping one instance per episode is cheap.
    """

    def __init__(
        self,
        grid: OccupancyGrid,
        fan: FanParams,
        config: PlannerConfig,
        rewards: RewardConfig,
    ):
        self.grid = grid
        self.fan = fan
        self.config = config
        self.rewards = rewards
        self.free = grid.free_cells()
        self._index = {c: i for i, c in enumerate(self.free)}
        self._moves: dict[RobotPose, tuple[RobotPose, ...]] = {}
        self._views: dict[RobotPose, tuple[tuple[Cell, ...], frozenset[Cell]]] = {}
        self._gauss: dict[tuple[RobotPose, Cell], tuple[float, ...]] = {}
        self._lik: dict[tuple[RobotPose, Optional[Cell]], np.ndarray] = {}
        self.last_root_stats: list[tuple[Action, int, float]] = []
        self.last_node_count = 0
        self.last_find_target: Optional[Cell] = None
        self._last_root: Optional[_Node] = None
        self._retained: Optional[_Node] = None

    # -- memoized model tables ---------------------------------------------

    def _successors(self, pose: RobotPose) -> tuple[RobotPose, ...]:
        cached = self._moves.get(pose)
        if cached is None:
            cached = tuple(apply_move(self.grid, pose, m.direction) for m in MOVES)
            self._moves[pose] = cached
        return cached

    def _view(self, pose: RobotPose) -> tuple[tuple[Cell, ...], frozenset[Cell]]:
        cached = self._views.get(pose)
        if cached is None:
            v = fan_region(self.grid, pose, self.fan)
            cached = (tuple(sorted(v)), v)
            self._views[pose] = cached
        return cached

    def _gauss_cum(self, pose: RobotPose, obj: Cell) -> tuple[float, ...]:
        key = (pose, obj)
        cached = self._gauss.get(key)
        if cached is None:
            cells, _ = self._view(pose)
            s2 = 2.0 * self.config.planning_noise.sigma ** 2
            acc = 0.0
            cum = []
            for (x, y) in cells:
                acc += exp(-((x - obj[0]) ** 2 + (y - obj[1]) ** 2) / s2)
                cum.append(acc)
            cached = tuple(cum)
            self._gauss[key] = cached
        return cached

    def _likelihood(self, pose: RobotPose, z: Optional[Cell]) -> np.ndarray:
        """p(z | object at c) over the free cells, under the planning noise."""
        key = (pose, z)
        cached = self._lik.get(key)
        if cached is None:
            _, vset = self._view(pose)
            cached = likelihood_over_cells(
                SensorObservation(z), self.free, vset, self.config.planning_noise
            )
            self._lik[key] = cached
        return cached

    def _sample_look(self, pose: RobotPose, obj: Cell, rng: random.Random) -> Optional[Cell]:
        cells, vset = self._view(pose)
        p = self.config.planning_noise
        if obj in vset:
            if rng.random() >= p.tpr:
                return None
            cum = self._gauss_cum(pose, obj)
            pick = rng.random() * cum[-1]
            return cells[min(bisect_right(cum, pick), len(cells) - 1)]
        if rng.random() >= 1.0 - p.tnr:
            return None
        if not cells:
            return None
        return cells[rng.randrange(len(cells))]

    # -- search --------------------------------------------------------------

    def plan(self, belief: Belief, pose: RobotPose, rng: random.Random | int) -> Action:
        if isinstance(rng, int):
            rng = random.Random(rng)
        cfg = self.config
        probs = np.array([belief.probs[y, x] for (x, y) in self.free])
        total = float(probs.sum())
        if total <= 0.0:
            raise PlannerError("belief has zero support")
        probs /= total
        if self.config.reuse_tree and self._retained is not None:
            root = self._retained
            root.probs = probs
            root.target_idx = int(np.argmax(probs))
            if root.edges is not None:
                # The declare edge priced an outdated posterior; re-seed it
                # from the refreshed one and let new samples re-estimate.
                b = float(probs[root.target_idx])
                root.edges[0][0] = 1
                root.edges[0][1] = b * self.rewards.find_success + (1.0 - b) * self.rewards.find_failure
        else:
            root = _Node(probs, int(np.argmax(probs)))
        self._retained = None
        self.last_find_target = self.free[root.target_idx]
        self.last_node_count = 0
        self._last_root = root

        cum = np.cumsum(probs)

        def sample_object() -> int:
            return min(int(np.searchsorted(cum, rng.random())), len(self.free) - 1)

        if cfg.time_budget_s is None:
            for _ in range(cfg.num_sims):
                self._simulate(pose, sample_object(), root, 0, rng)
        else:
            deadline = timer() + cfg.time_budget_s
            while True:
                self._simulate(pose, sample_object(), root, 0, rng)
                if timer() >= deadline:
                    break

        edges = root.edges
        actions = (FindAction(*self.free[root.target_idx]), LOOK) + MOVES
        self.last_root_stats = [
            (a, edges[i][0], edges[i][1]) for i, a in enumerate(actions)
        ]
        best, best_q = 0, edges[0][1]
        for i in range(1, 6):
            if edges[i][1] > best_q:
                best, best_q = i, edges[i][1]
        return actions[best]

    def advance(self, action: Action, observation_key) -> None:
        """Descend the retained tree along the executed (action, observation).

        ``observation_key`` is None after a Move, the detected cell or None
        after a Look, and False after a failed Find. No-op unless
        ``reuse_tree`` is enabled and the branch exists.
        """
        if not self.config.reuse_tree:
            return
        root = self._last_root
        self._last_root = None
        self._retained = None
        if root is None or root.edges is None:
            return
        if isinstance(action, FindAction):
            idx = 0
        elif isinstance(action, MoveAction):
            idx = 2 + int(action.direction)
        else:
            idx = 1
        self._retained = root.edges[idx][2].get(observation_key)

    def _rollout(self, depth: int, rng: random.Random) -> float:
        """Uniform random walk over the five non-declaring actions.

        Rewards do not depend on position, so only the action costs matter;
        nothing past the depth horizon contributes.
        """
        value = 0.0
        disc = 1.0
        for _ in range(self.config.depth - depth):
            cost = self.rewards.move_cost if rng.randrange(5) < 4 else self.rewards.look_cost
            value += disc * cost
            disc *= self.rewards.discount
        return value

    def _child_after_look(self, node: _Node, pose: RobotPose, z: Optional[Cell]) -> _Node:
        posterior = node.probs * self._likelihood(pose, z)
        total = float(posterior.sum())
        if total <= 0.0:
            posterior = node.probs.copy()  # unreachable with smoothing > 0
        else:
            posterior /= total
        return _Node(posterior, int(np.argmax(posterior)))

    def _child_after_miss(self, node: _Node) -> _Node:
        posterior = node.probs.copy()
        posterior[node.target_idx] = 0.0
        total = float(posterior.sum())
        if total <= 0.0:
            posterior = node.probs.copy()  # miss branch of a point mass
        else:
            posterior /= total
        return _Node(posterior, int(np.argmax(posterior)))

    def _simulate(self, pose: RobotPose, obj_idx: int, node: _Node, depth: int, rng) -> float:
        if depth >= self.config.depth:
            return 0.0
        if node.edges is None:
            # The declare edge starts from its exact one-step expectation
            # under this node's posterior rather than a sampled try: a
            # forced -1000 miss sample at every fresh node would swamp the
            # small navigation signals the tree needs to rank moves.
            b = float(node.probs[node.target_idx])
            find_init = b * self.rewards.find_success + (1.0 - b) * self.rewards.find_failure
            node.edges = [[1, find_init, {}]] + [[0, 0.0, {}] for _ in range(5)]
            node.visits = 1
            self.last_node_count += 1
            # Leaf estimate: declaring now or walking out the horizon,
            # whichever the posterior says is worth more. Observation
            # children often get a single visit, so the value returned here
            # is all the parent ever learns about them.
            return max(self._rollout(depth, rng), find_init)

        log_n = log(node.visits) if node.visits > 0 else 0.0
        c = self.config.exploration_c
        chosen = -1
        best_u = -float("inf")
        edges = node.edges
        for i in range(6):
            n = edges[i][0]
            if n == 0:
                chosen = i
                break
            u = edges[i][1] + c * sqrt(log_n / n)
            if u > best_u:
                best_u = u
                chosen = i

        edge = edges[chosen]
        gamma = self.rewards.discount
        if chosen == 0:  # find at this node's posterior argmax
            if node.target_idx == obj_idx:
                value = self.rewards.find_success
            else:
                child = edge[2].get(False)
                if child is None:
                    child = self._child_after_miss(node)
                    edge[2][False] = child
                value = self.rewards.find_failure + gamma * self._simulate(pose, obj_idx, child, depth + 1, rng)
        elif chosen == 1:  # look: sample z, condition the child belief on it
            z = self._sample_look(pose, self.free[obj_idx], rng)
            child = edge[2].get(z)
            if child is None:
                child = self._child_after_look(node, pose, z)
                edge[2][z] = child
            value = self.rewards.look_cost + gamma * self._simulate(pose, obj_idx, child, depth + 1, rng)
        else:  # moves keep the belief, change the pose
            nxt = self._successors(pose)[chosen - 2]
            child = edge[2].get(None)
            if child is None:
                child = _Node(node.probs, node.target_idx)
                edge[2][None] = child
            value = self.rewards.move_cost + gamma * self._simulate(nxt, obj_idx, child, depth + 1, rng)

        node.visits += 1
        edge[0] += 1
        edge[1] += (value - edge[1]) / edge[0]
        return value
