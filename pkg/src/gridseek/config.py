"""Run configuration: one YAML file drives episodes and benchmarks.

Validation errors carry the dotted path of the offending field. All
randomness flows from the configured seed list; nothing reads ambient
entropy.
"""
from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .bridge import CameraModel, Intrinsics
from .detectors import ConfidenceModel, DetectorSpec
from .episode import EpisodeLimits, NoiseModelConfig
from .observation import (
    ConfidenceMap,
    MODES,
    NoiseParams,
    PROFILES,
    SEGMENTER_STATIC,
)
from .planner import PlannerConfig
from .pomdp import RewardConfig

ENDPOINT_ENV_VAR = "GRIDSEEK_DETECTOR"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.field_path = path


def _get(data: dict, path: str, key: str, typ, default):
    value = data.get(key, default)
    if value is default:
        return default
    where = f"{path}.{key}" if path else key
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if typ is bool and isinstance(value, bool):
        return value
    if typ is str and isinstance(value, str):
        return value
    if typ in (dict, list) and isinstance(value, typ):
        return value
    raise ConfigError(where, f"expected {typ.__name__}, got {type(value).__name__} ({value!r})")


def _noise_params(data: Any, path: str, smoothing: float) -> NoiseParams:
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a mapping with sigma/tpr/tnr, got {data!r}")
    for key in ("sigma", "tpr", "tnr"):
        if key not in data:
            raise ConfigError(f"{path}.{key}", "missing required field")
    try:
        return NoiseParams(
            sigma=_get(data, path, "sigma", float, None),
            tpr=_get(data, path, "tpr", float, None),
            tnr=_get(data, path, "tnr", float, None),
            smoothing=_get(data, path, "smoothing", float, smoothing),
        )
    except ValueError as e:
        raise ConfigError(path, str(e))


def _confidence_map(data: dict, path: str, smoothing: float) -> ConfidenceMap:
    profile = _get(data, path, "profile", str, None)
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"{path}.profile", f"unknown profile {profile!r}, have {sorted(PROFILES)}")
        cmap = PROFILES[profile]
        return ConfidenceMap(
            bands=tuple((t, replace(p, smoothing=smoothing)) for t, p in cmap.bands),
            fallback=replace(cmap.fallback, smoothing=smoothing),
        )
    bands_raw = _get(data, path, "bands", list, None)
    fallback_raw = data.get("fallback")
    if bands_raw is None or fallback_raw is None:
        raise ConfigError(path, "need either 'profile' or both 'bands' and 'fallback'")
    bands = []
    for i, entry in enumerate(bands_raw):
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ConfigError(f"{path}.bands[{i}]", "expected [threshold, params]")
        thr, params = entry
        bands.append((float(thr), _noise_params(params, f"{path}.bands[{i}][1]", smoothing)))
    try:
        return ConfidenceMap(bands=tuple(bands), fallback=_noise_params(fallback_raw, f"{path}.fallback", smoothing))
    except ValueError as e:
        raise ConfigError(f"{path}.bands", str(e))


def _noise_model(data: dict, path: str, mode: str) -> NoiseModelConfig:
    smoothing = _get(data, path, "smoothing", float, 1e-3)
    static_raw = data.get("static")
    static = (
        _noise_params(static_raw, f"{path}.static", smoothing)
        if static_raw is not None
        else replace(SEGMENTER_STATIC, smoothing=smoothing)
    )
    cmap = _confidence_map(data, path, smoothing)
    try:
        return NoiseModelConfig(mode=mode, static_params=static, confidence_map=cmap)
    except ValueError as e:
        raise ConfigError(f"{path}.mode", str(e))


def _detector(data: dict, path: str, smoothing: float) -> DetectorSpec:
    kind = _get(data, path, "kind", str, "static")
    base_raw = data.get("base")
    base = (
        _noise_params(base_raw, f"{path}.base", smoothing)
        if base_raw is not None
        else replace(SEGMENTER_STATIC, smoothing=smoothing)
    )
    conf_raw = _get(data, path, "confidence", dict, {})
    cpath = f"{path}.confidence"
    try:
        confidence = ConfidenceModel(
            p_high_given_true=_get(conf_raw, cpath, "p_high_given_true", float, 0.9),
            p_high_given_false=_get(conf_raw, cpath, "p_high_given_false", float, 0.2),
            high_value=_get(conf_raw, cpath, "high_value", float, 1.5),
            low_value=_get(conf_raw, cpath, "low_value", float, 0.5),
            sigma_high=_get(conf_raw, cpath, "sigma_high", float, None),
            sigma_low=_get(conf_raw, cpath, "sigma_low", float, None),
        )
    except ValueError as e:
        raise ConfigError(cpath, str(e))
    endpoint = _get(data, path, "endpoint", str, None)
    env_endpoint = os.environ.get(ENDPOINT_ENV_VAR)
    if env_endpoint:
        endpoint = env_endpoint
    try:
        return DetectorSpec(
            kind=kind,
            base=base,
            confidence=confidence,
            constant_confidence=_get(data, path, "constant_confidence", float, 1.0),
            endpoint=endpoint,
        )
    except ValueError as e:
        raise ConfigError(path, str(e))


def _planner(data: dict, path: str, smoothing: float) -> PlannerConfig:
    noise_raw = data.get("planning_noise")
    noise = (
        _noise_params(noise_raw, f"{path}.planning_noise", smoothing)
        if noise_raw is not None
        else replace(SEGMENTER_STATIC, smoothing=smoothing)
    )
    try:
        return PlannerConfig(
            depth=_get(data, path, "depth", int, 3),
            exploration_c=_get(data, path, "exploration_c", float, 10000.0),
            num_sims=_get(data, path, "num_sims", int, 1000),
            time_budget_s=_get(data, path, "time_budget_s", float, None),
            planning_noise=noise,
        )
    except ValueError as e:
        raise ConfigError(path, str(e))


def _reward(data: dict, path: str) -> RewardConfig:
    try:
        return RewardConfig(
            move_cost=_get(data, path, "move_cost", float, -2.0),
            look_cost=_get(data, path, "look_cost", float, -1.0),
            find_success=_get(data, path, "find_success", float, 1000.0),
            find_failure=_get(data, path, "find_failure", float, -1000.0),
            discount=_get(data, path, "discount", float, 0.9),
        )
    except ValueError as e:
        raise ConfigError(path, str(e))


def _limits(data: dict, path: str) -> EpisodeLimits:
    try:
        return EpisodeLimits(
            max_steps=_get(data, path, "max_steps", int, 100),
            find_budget=_get(data, path, "find_budget", int, 10),
        )
    except ValueError as e:
        raise ConfigError(path, str(e))


def _camera(data: dict, path: str) -> CameraModel:
    try:
        return CameraModel(
            intrinsics=Intrinsics(
                fx=_get(data, path, "fx", float, 160.0),
                fy=_get(data, path, "fy", float, 160.0),
                cx=_get(data, path, "cx", float, 150.0),
                cy=_get(data, path, "cy", float, 150.0),
            ),
            mounting_yaw_deg=_get(data, path, "mounting_yaw_deg", float, 0.0),
        )
    except ValueError as e:
        raise ConfigError(path, str(e))


@dataclass(frozen=True)
class ArmConfig:
    name: str
    noise: NoiseModelConfig
    detector: DetectorSpec
    planner: PlannerConfig


@dataclass(frozen=True)
class RunConfig:
    scenes: tuple[str, ...]
    seeds: tuple[int, ...]
    out: str
    noise: NoiseModelConfig
    detector: DetectorSpec
    planner: PlannerConfig
    reward: RewardConfig
    limits: EpisodeLimits
    camera: CameraModel
    arms: tuple[ArmConfig, ...] = ()

    def bench_arms(self) -> tuple[ArmConfig, ...]:
        if self.arms:
            return self.arms
        return (ArmConfig(self.noise.mode, self.noise, self.detector, self.planner),)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_config(data: dict, base_dir: Path) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a mapping")
    patterns = _get(data, "", "scenes", list, None)
    if not patterns:
        raise ConfigError("scenes", "at least one scene path is required")
    scene_paths: list[str] = []
    for i, pattern in enumerate(patterns):
        if not isinstance(pattern, str):
            raise ConfigError(f"scenes[{i}]", f"expected a path string, got {pattern!r}")
        expanded = pattern if os.path.isabs(pattern) else str(base_dir / pattern)
        matches = sorted(glob.glob(expanded)) if glob.has_magic(expanded) else [expanded]
        if not matches:
            raise ConfigError(f"scenes[{i}]", f"pattern {pattern!r} matched no files")
        for m in matches:
            if not os.path.exists(m):
                raise ConfigError(f"scenes[{i}]", f"scene file not found: {m}")
        scene_paths.extend(matches)
    seeds_raw = _get(data, "", "seeds", list, [0])
    seeds = []
    for i, s in enumerate(seeds_raw):
        if not isinstance(s, int) or isinstance(s, bool):
            raise ConfigError(f"seeds[{i}]", f"expected an integer seed, got {s!r}")
        seeds.append(s)
    if not seeds:
        raise ConfigError("seeds", "at least one seed is required")

    mode = _get(data, "", "mode", str, "static")
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {MODES}, got {mode!r}")
    noise_raw = _get(data, "", "noise", dict, {})
    smoothing = _get(noise_raw, "noise", "smoothing", float, 1e-3)
    noise = _noise_model(noise_raw, "noise", mode)
    detector = _detector(_get(data, "", "detector", dict, {}), "detector", smoothing)
    planner = _planner(_get(data, "", "planner", dict, {}), "planner", smoothing)

    arms_raw = _get(data, "", "arms", list, [])
    arms = []
    for i, arm_raw in enumerate(arms_raw):
        apath = f"arms[{i}]"
        if not isinstance(arm_raw, dict):
            raise ConfigError(apath, "expected a mapping")
        arm_mode = _get(arm_raw, apath, "mode", str, mode)
        if arm_mode not in MODES:
            raise ConfigError(f"{apath}.mode", f"expected one of {MODES}, got {arm_mode!r}")
        name = _get(arm_raw, apath, "name", str, arm_mode)
        arm_noise_raw = _merge(noise_raw, _get(arm_raw, apath, "noise", dict, {}))
        arm_smoothing = _get(arm_noise_raw, f"{apath}.noise", "smoothing", float, 1e-3)
        arms.append(
            ArmConfig(
                name=name,
                noise=_noise_model(arm_noise_raw, f"{apath}.noise", arm_mode),
                detector=_detector(
                    _merge(_get(data, "", "detector", dict, {}), _get(arm_raw, apath, "detector", dict, {})),
                    f"{apath}.detector",
                    arm_smoothing,
                ),
                planner=_planner(
                    _merge(_get(data, "", "planner", dict, {}), _get(arm_raw, apath, "planner", dict, {})),
                    f"{apath}.planner",
                    arm_smoothing,
                ),
            )
        )
    names = [a.name for a in arms]
    if len(set(names)) != len(names):
        raise ConfigError("arms", f"arm names must be unique, got {names}")

    return RunConfig(
        scenes=tuple(scene_paths),
        seeds=tuple(seeds),
        out=_get(data, "", "out", str, "results"),
        noise=noise,
        detector=detector,
        planner=planner,
        reward=_reward(_get(data, "", "reward", dict, {}), "reward"),
        limits=_limits(_get(data, "", "limits", dict, {}), "limits"),
        camera=_camera(_get(data, "", "camera", dict, {}), "camera"),
        arms=tuple(arms),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError("", f"config is not valid YAML: {e}")
    return parse_config(data, base_dir=path.parent)


def _params_dict(p: NoiseParams) -> dict:
    return {"sigma": p.sigma, "tpr": p.tpr, "tnr": p.tnr, "smoothing": p.smoothing}


def dump_config(cfg: RunConfig) -> dict:
    """Config as a plain mapping; parse_config(dump_config(c)) == c."""
    def noise_dict(n: NoiseModelConfig) -> dict:
        return {
            "static": _params_dict(n.static_params),
            "smoothing": n.static_params.smoothing,
            "bands": [[t, _params_dict(p)] for t, p in n.confidence_map.bands],
            "fallback": _params_dict(n.confidence_map.fallback),
        }

    def detector_dict(d: DetectorSpec) -> dict:
        out: dict = {
            "kind": d.kind,
            "base": _params_dict(d.base),
            "confidence": {
                "p_high_given_true": d.confidence.p_high_given_true,
                "p_high_given_false": d.confidence.p_high_given_false,
                "high_value": d.confidence.high_value,
                "low_value": d.confidence.low_value,
                "sigma_high": d.confidence.sigma_high,
                "sigma_low": d.confidence.sigma_low,
            },
            "constant_confidence": d.constant_confidence,
        }
        if d.endpoint is not None:
            out["endpoint"] = d.endpoint
        return out

    def planner_dict(p: PlannerConfig) -> dict:
        out = {
            "depth": p.depth,
            "exploration_c": p.exploration_c,
            "num_sims": p.num_sims,
            "planning_noise": _params_dict(p.planning_noise),
        }
        if p.time_budget_s is not None:
            out["time_budget_s"] = p.time_budget_s
        return out

    data = {
        "scenes": list(cfg.scenes),
        "seeds": list(cfg.seeds),
        "out": cfg.out,
        "mode": cfg.noise.mode,
        "noise": noise_dict(cfg.noise),
        "detector": detector_dict(cfg.detector),
        "planner": planner_dict(cfg.planner),
        "reward": {
            "move_cost": cfg.reward.move_cost,
            "look_cost": cfg.reward.look_cost,
            "find_success": cfg.reward.find_success,
            "find_failure": cfg.reward.find_failure,
            "discount": cfg.reward.discount,
        },
        "limits": {"max_steps": cfg.limits.max_steps, "find_budget": cfg.limits.find_budget},
        "camera": {
            "fx": cfg.camera.intrinsics.fx,
            "fy": cfg.camera.intrinsics.fy,
            "cx": cfg.camera.intrinsics.cx,
            "cy": cfg.camera.intrinsics.cy,
            "mounting_yaw_deg": cfg.camera.mounting_yaw_deg,
        },
    }
    if cfg.arms:
        data["arms"] = [
            {
                "name": a.name,
                "mode": a.noise.mode,
                "noise": noise_dict(a.noise),
                "detector": detector_dict(a.detector),
                "planner": planner_dict(a.planner),
            }
            for a in cfg.arms
        ]
    return data
