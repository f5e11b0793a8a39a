#!/usr/bin/env python3
"""Generate the committed benchmark scene suites.

Deterministic: re-running reproduces the same files. Two presets:

  main   -- wide, long-range sensing on nearly open maps with the object
            hidden from the start view. Searches resolve within the
            planner's horizon, so path efficiency against the exact oracle
            is meaningful.
  noisy  -- narrow, short-range sensing with more walls and farther
            objects. Many looks are needed per episode, so the quality of
            the detector noise model dominates the outcome. Used for the
            static-vs-dynamic comparisons.
"""
from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gridseek.grid import DIRECTIONS, FanParams, OccupancyGrid, RobotPose, fan_region
from gridseek.metrics import MetricsError, oracle_actions
from gridseek.scene import Scene, save_scene, validate_scene

LANGUAGE = [
    "the red mug on the counter",
    "the green watering can by the window",
    "the white cup next to the sink",
    "the blue notebook on the desk",
    "the black remote on the sofa",
    "the yellow ball under the table",
    "the silver kettle on the stove",
    "the orange towel on the rack",
    "the purple vase on the shelf",
    "the brown shoe by the door",
    "the pink toothbrush in the bathroom",
    "the gray laptop on the left",
]

SIZE = 16


@dataclass(frozen=True)
class Preset:
    fan: FanParams
    walls: tuple[int, int]        # segment count range
    wall_len: tuple[int, int]     # segment length range
    oracle: tuple[int, int]       # accepted oracle-action range
    out_dir: str
    seed: int


PRESETS = {
    "main": Preset(
        fan=FanParams(fov_degrees=180.0, range_cells=23.0, occlusion_enabled=True),
        walls=(1, 1),
        wall_len=(2, 2),
        oracle=(3, 4),
        out_dir="scenes",
        seed=20240817,
    ),
    "noisy": Preset(
        fan=FanParams(fov_degrees=90.0, range_cells=8.0, occlusion_enabled=True),
        walls=(3, 4),
        wall_len=(2, 3),
        oracle=(4, 9),
        out_dir="scenes_noisy",
        seed=20240818,
    ),
}


def random_grid(rng: random.Random, preset: Preset) -> OccupancyGrid:
    cells = [False] * (SIZE * SIZE)
    # Short interior segments only, kept clear of the borders: wall pockets
    # whose exit takes several moves sit past the planning horizon and would
    # turn an episode into a random walk.
    for _ in range(rng.randint(*preset.walls)):
        horizontal = rng.random() < 0.5
        length = rng.randint(*preset.wall_len)
        x0 = rng.randrange(4, SIZE - 6)
        y0 = rng.randrange(4, SIZE - 6)
        for i in range(length):
            x = x0 + i if horizontal else x0
            y = y0 if horizontal else y0 + i
            cells[y * SIZE + x] = True
    return OccupancyGrid(SIZE, SIZE, tuple(cells))


def try_scene(rng: random.Random, index: int, preset: Preset) -> Scene | None:
    grid = random_grid(rng, preset)
    free = grid.free_cells()
    rx, ry = free[rng.randrange(len(free))]
    start = RobotPose(rx, ry, rng.choice(DIRECTIONS))
    start_view = fan_region(grid, start, preset.fan)
    candidates = [c for c in free if c != start.cell and c not in start_view]
    if not candidates:
        return None
    obj = candidates[rng.randrange(len(candidates))]
    scene = Scene(
        grid=grid,
        object_cell=obj,
        robot_start=start,
        language=LANGUAGE[index % len(LANGUAGE)],
        fan=preset.fan,
        name=f"scene_{index:02d}",
    )
    findings = validate_scene(scene)
    if any(f.severity == "error" for f in findings):
        return None
    if any(f.code == "trivially-visible" for f in findings):
        return None
    try:
        oracle = oracle_actions(scene)
    except MetricsError:
        return None
    lo, hi = preset.oracle
    if not lo <= oracle <= hi:
        return None
    return scene


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", choices=sorted(PRESETS), default="main")
    parser.add_argument("--count", type=int, default=24)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    preset = PRESETS[args.preset]
    out = Path(args.out) if args.out else Path(__file__).resolve().parent.parent / preset.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(preset.seed)
    made = 0
    while made < args.count:
        scene = try_scene(rng, made, preset)
        if scene is None:
            continue
        save_scene(scene, out / f"{scene.name}.yaml")
        print(f"{scene.name}: object={scene.object_cell} start={scene.robot_start.cell} "
              f"oracle={oracle_actions(scene)}")
        made += 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
