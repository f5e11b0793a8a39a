"""Batch entry point: run episodes, benchmark arms, compute oracles, render
belief snapshots.

    gridseek run    --config cfg.yaml [--out DIR] [--seeds 1,2,3] [--mode NAME]
    gridseek bench  --config cfg.yaml [--out DIR] [--seeds 1,2,3] [--jobs N]
    gridseek oracle --config cfg.yaml
    gridseek render BELIEF_CSV

The environment variable GRIDSEEK_DETECTOR overrides the detector endpoint
for bridge-mode runs.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .belief import belief_csv_to_array, belief_to_csv, uniform_init
from .bridge import BridgeDetector, DetectorClient, TransportError
from .config import ArmConfig, ConfigError, RunConfig, dump_config, load_config
from .episode import EpisodeLog, run_episode
from .metrics import EpisodeResult, completion_rate, mean_and_se, oracle_actions, spl
from .scene import SceneError, load_scene, validate_scene

BENCH_COLUMNS = [
    "row", "scene", "arm", "seed", "success", "actions", "oracle",
    "discounted_return", "wallclock_s",
    "completion_mean", "completion_se", "spl_mean", "spl_se",
    "actions_mean", "wallclock_mean_s",
]

HEAT_GLYPHS = " .:-=+*#%@"


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s)
    except ValueError:
        raise SystemExit(f"--seeds must be comma-separated integers, got {text!r}")


def _load_config_or_die(args) -> RunConfig:
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        raise SystemExit(f"config error: {e}")
    if getattr(args, "seeds", None):
        cfg = replace(cfg, seeds=_parse_seeds(args.seeds))
    if getattr(args, "out", None):
        cfg = replace(cfg, out=args.out)
    if getattr(args, "mode", None):
        try:
            cfg = replace(cfg, noise=replace(cfg.noise, mode=args.mode))
        except ValueError as e:
            raise SystemExit(f"--mode: {e}")
    return cfg


def _load_scenes_or_die(cfg: RunConfig):
    scenes = []
    for path in cfg.scenes:
        try:
            scene = load_scene(path)
        except SceneError as e:
            raise SystemExit(f"scene error: {e}")
        errors = [f for f in validate_scene(scene) if f.severity == "error"]
        if errors:
            raise SystemExit(f"scene {path} failed validation: {[f.message for f in errors]}")
        scenes.append((path, scene))
    return scenes


def _episode_with_bridge(scene, arm: ArmConfig, cfg: RunConfig, seed: int) -> EpisodeLog:
    if arm.detector.kind != "bridge":
        return run_episode(scene, arm.detector, arm.planner, cfg.reward, arm.noise, cfg.limits, seed)
    client = DetectorClient(arm.detector.endpoint)
    try:
        bridge = BridgeDetector(client, cfg.camera, episode_tag=f"{scene.name}-s{seed}")
        return run_episode(
            scene, arm.detector, arm.planner, cfg.reward, arm.noise, cfg.limits, seed, bridge=bridge
        )
    finally:
        client.close()


def _bench_worker(task) -> tuple:
    scene_path, arm, cfg, seed = task
    scene = load_scene(scene_path)
    log = _episode_with_bridge(scene, arm, cfg, seed)
    return (scene.name, arm.name, seed, log, oracle_actions(scene))


def cmd_run(args) -> int:
    cfg = _load_config_or_die(args)
    scenes = _load_scenes_or_die(cfg)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    arm = ArmConfig(cfg.noise.mode, cfg.noise, cfg.detector, cfg.planner)
    status = 0
    for path, scene in scenes:
        for seed in cfg.seeds:
            try:
                log = _episode_with_bridge(scene, arm, cfg, seed)
            except TransportError as e:
                print(f"transport error on {scene.name} seed {seed}: {e}", file=sys.stderr)
                status = 2
                continue
            stem = f"{scene.name}__seed{seed}"
            _atomic_write(out_dir / f"{stem}.json", log.to_json())
            if log.final_belief is not None:
                _atomic_write(out_dir / f"{stem}__belief.csv", belief_to_csv(log.final_belief))
            print(f"{scene.name} seed={seed} success={log.success} actions={log.actions}")
    return status


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_benchmark(cfg: RunConfig, jobs: int = 1):
    """All (scene, arm, seed) episodes plus per-arm aggregates.

    Returns (episode_rows, aggregate_rows, logs); rows are dicts keyed by
    BENCH_COLUMNS entries.
    """
    scenes = _load_scenes_or_die(cfg)
    arms = cfg.bench_arms()
    tasks = [
        (path, arm, cfg, seed)
        for path, scene in scenes
        for arm in arms
        for seed in cfg.seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_bench_worker, tasks, chunksize=1))
    else:
        outcomes = [_bench_worker(t) for t in tasks]

    episode_rows = []
    logs: list[tuple[str, EpisodeLog]] = []
    by_arm_seed: dict[tuple[str, int], list[EpisodeResult]] = {}
    wallclocks: dict[str, list[float]] = {}
    actions: dict[str, list[float]] = {}
    for scene_name, arm_name, seed, log, oracle in outcomes:
        episode_rows.append(
            {
                "row": "episode",
                "scene": scene_name,
                "arm": arm_name,
                "seed": seed,
                "success": int(log.success),
                "actions": log.actions,
                "oracle": oracle,
                "discounted_return": f"{log.discounted_return:.6f}",
                "wallclock_s": f"{log.wallclock_s:.3f}",
            }
        )
        logs.append((arm_name, log))
        by_arm_seed.setdefault((arm_name, seed), []).append(
            EpisodeResult(log.success, log.actions, oracle)
        )
        wallclocks.setdefault(arm_name, []).append(log.wallclock_s)
        actions.setdefault(arm_name, []).append(log.actions)

    aggregate_rows = []
    for arm in arms:
        per_seed = [by_arm_seed[(arm.name, seed)] for seed in cfg.seeds]
        completion_mean, completion_se = mean_and_se(completion_rate(r) for r in per_seed)
        spl_mean, spl_se = mean_and_se(spl(r) for r in per_seed)
        aggregate_rows.append(
            {
                "row": "aggregate",
                "arm": arm.name,
                "completion_mean": f"{completion_mean:.6f}",
                "completion_se": f"{completion_se:.6f}",
                "spl_mean": f"{spl_mean:.6f}",
                "spl_se": f"{spl_se:.6f}",
                "actions_mean": f"{np.mean(actions[arm.name]):.3f}",
                "wallclock_mean_s": f"{np.mean(wallclocks[arm.name]):.3f}",
            }
        )
    return episode_rows, aggregate_rows, logs


def bench_csv(episode_rows, aggregate_rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, restval="")
    writer.writeheader()
    for row in episode_rows:
        writer.writerow(row)
    for row in aggregate_rows:
        writer.writerow(row)
    return buf.getvalue()


def cmd_bench(args) -> int:
    cfg = _load_config_or_die(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        episode_rows, aggregate_rows, logs = run_benchmark(cfg, jobs=args.jobs)
    except TransportError as e:
        print(f"transport error: {e}", file=sys.stderr)
        return 2
    for arm_name, log in logs:
        stem = f"{log.scene}__{arm_name}__seed{log.seed}"
        _atomic_write(out_dir / f"{stem}.json", log.to_json())
    _atomic_write(out_dir / "bench.csv", bench_csv(episode_rows, aggregate_rows))
    for row in aggregate_rows:
        print(
            f"{row['arm']}: completion {row['completion_mean']} +/- {row['completion_se']}, "
            f"SPL {row['spl_mean']} +/- {row['spl_se']}"
        )
    print(f"wrote {out_dir / 'bench.csv'}")
    return 0


def cmd_oracle(args) -> int:
    cfg = _load_config_or_die(args)
    scenes = _load_scenes_or_die(cfg)
    print("scene,oracle")
    for _, scene in scenes:
        print(f"{scene.name},{oracle_actions(scene)}")
    return 0


def render_heatmap(array: np.ndarray) -> str:
    """Fixed-width glyph rendering of a belief snapshot: '#' for occupied
    cells, 'X' at the argmax, intensity glyphs elsewhere."""
    values = np.where(array < 0, 0.0, array)
    peak = values.max()
    flat_argmax = int(values.argmax())
    lines = []
    for y in range(array.shape[0]):
        chars = []
        for x in range(array.shape[1]):
            if array[y, x] < 0:
                chars.append("#")
            elif y * array.shape[1] + x == flat_argmax:
                chars.append("X")
            else:
                frac = values[y, x] / peak if peak > 0 else 0.0
                idx = min(int(frac * (len(HEAT_GLYPHS) - 1) + 1e-12), len(HEAT_GLYPHS) - 1)
                chars.append(HEAT_GLYPHS[idx])
        lines.append("".join(chars))
    return "\n".join(lines)


def cmd_render(args) -> int:
    try:
        text = Path(args.belief_csv).read_text()
    except FileNotFoundError:
        raise SystemExit(f"belief CSV not found: {args.belief_csv}")
    try:
        array = belief_csv_to_array(text)
    except ValueError as e:
        raise SystemExit(f"malformed belief CSV: {e}")
    print(render_heatmap(array))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridseek", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run episodes and write one log per (scene, seed)")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out")
    p_run.add_argument("--seeds")
    p_run.add_argument("--mode")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run all configured arms and aggregate")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out")
    p_bench.add_argument("--seeds")
    p_bench.add_argument("--mode")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.set_defaults(func=cmd_bench)

    p_oracle = sub.add_parser("oracle", help="print the minimum-action oracle per scene")
    p_oracle.add_argument("--config", required=True)
    p_oracle.set_defaults(func=cmd_oracle)

    p_render = sub.add_parser("render", help="render a belief CSV as a text heatmap")
    p_render.add_argument("belief_csv")
    p_render.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
