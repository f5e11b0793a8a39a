"""Scene definitions: a map, an object placement, a start pose, a language
description, and the fan geometry. Scenes live in YAML files.

Schema (all keys required unless noted)::

    name: corridor-east            # optional, defaults to the file stem
    language: "the red mug on the table"
    map: |
      ........
      ..##....
    object: [11, 4]                # [x, y] on a free cell
    robot: [2, 3, EAST]            # [x, y, orientation]
    fan:                           # optional, defaults below
      fov_degrees: 90
      range_cells: 4
      occlusion: true
    cell_size_m: 0.25              # optional
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .grid import (
    Cell,
    DIRECTIONS,
    Direction,
    FanParams,
    GridError,
    OccupancyGrid,
    RobotPose,
    apply_move,
    fan_region,
    load_grid,
)


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    message: str


@dataclass(frozen=True)
class Scene:
    grid: OccupancyGrid
    object_cell: Cell
    robot_start: RobotPose
    language: str
    fan: FanParams = field(default_factory=FanParams)
    name: str = "scene"

    def __post_init__(self):
        if not self.language:
            raise SceneError("language must be nonempty")
        if not self.grid.is_free(*self.object_cell):
            raise SceneError(f"object cell {self.object_cell} is not a free cell")
        if not self.grid.is_free(self.robot_start.x, self.robot_start.y):
            raise SceneError(f"robot start {self.robot_start} is not on a free cell")


def scene_from_dict(data: dict, name: str = "scene") -> Scene:
    try:
        grid = load_grid(data["map"], cell_size_m=float(data.get("cell_size_m", 0.25)))
        ox, oy = data["object"]
        rx, ry, ro = data["robot"]
        fan_data = data.get("fan", {})
        fan = FanParams(
            fov_degrees=float(fan_data.get("fov_degrees", 90.0)),
            range_cells=float(fan_data.get("range_cells", 4.0)),
            occlusion_enabled=bool(fan_data.get("occlusion", True)),
        )
        return Scene(
            grid=grid,
            object_cell=(int(ox), int(oy)),
            robot_start=RobotPose(int(rx), int(ry), Direction[str(ro)]),
            language=str(data["language"]),
            fan=fan,
            name=str(data.get("name", name)),
        )
    except KeyError as e:
        raise SceneError(f"scene is missing required key {e.args[0]!r}") from e
    except (GridError, ValueError, TypeError) as e:
        raise SceneError(f"invalid scene: {e}") from e


def scene_to_dict(scene: Scene) -> dict:
    return {
        "name": scene.name,
        "language": scene.language,
        "map": scene.grid.to_text() + "\n",
        "object": list(scene.object_cell),
        "robot": [scene.robot_start.x, scene.robot_start.y, scene.robot_start.orientation.name],
        "fan": {
            "fov_degrees": scene.fan.fov_degrees,
            "range_cells": scene.fan.range_cells,
            "occlusion": scene.fan.occlusion_enabled,
        },
        "cell_size_m": scene.grid.cell_size_m,
    }


def load_scene(path: str | Path) -> Scene:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise SceneError(f"scene file not found: {path}")
    except yaml.YAMLError as e:
        raise SceneError(f"scene file {path} is not valid YAML: {e}")
    if not isinstance(data, dict):
        raise SceneError(f"scene file {path} must contain a mapping")
    return scene_from_dict(data, name=path.stem)


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(scene_to_dict(scene), sort_keys=False))


def reachable_poses(scene: Scene) -> set[RobotPose]:
    seen = {scene.robot_start}
    queue = deque([scene.robot_start])
    while queue:
        pose = queue.popleft()
        for d in DIRECTIONS:
            nxt = apply_move(scene.grid, pose, d)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def validate_scene(scene: Scene) -> list[Finding]:
    """Static checks an experiment scene must pass before it is run.

    A scene whose object no reachable pose can see would make every episode
    (and the search oracle) meaningless, so that is an error rather than a
    warning.
    """
    findings: list[Finding] = []
    if not scene.grid.is_free(scene.robot_start.x, scene.robot_start.y):
        findings.append(Finding("error", "bad-start", f"robot start {scene.robot_start} is occupied or out of bounds"))
        return findings
    visible = any(
        scene.object_cell in fan_region(scene.grid, pose, scene.fan)
        for pose in reachable_poses(scene)
    )
    if not visible:
        findings.append(
            Finding(
                "error",
                "unreachable",
                f"object {scene.object_cell} is not visible from any pose reachable from the start",
            )
        )
    if scene.object_cell in fan_region(scene.grid, scene.robot_start, scene.fan):
        findings.append(
            Finding("warning", "trivially-visible", "object is already inside the start pose's view")
        )
    return findings
