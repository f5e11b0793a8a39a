"""Simulated detectors and the dispatch point for the out-of-process bridge.

Four kinds:

  perfect     -- reports the object's cell whenever it is in view, NULL
                 otherwise, always at the high confidence value.
  static      -- samples the event mixture at fixed noise parameters and
                 reports a constant confidence.
  confidence  -- samples the event mixture, then emits a two-point
                 confidence (high/low) whose distribution depends on
                 whether the sample was a true positive, then draws the
                 detection given the event. Optionally the true-positive
                 localization spread follows the confidence band, modeling
                 a detector whose scores track its accuracy.
  bridge      -- delegates to an external detector over the wire protocol.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .grid import Cell
from .observation import (
    NULL_OBSERVATION,
    NoiseParams,
    SEGMENTER_STATIC,
    SensorObservation,
    _gaussian_weights,
    event_probs,
)

DETECTOR_KINDS = ("perfect", "static", "confidence", "bridge")


@dataclass(frozen=True)
class ConfidenceModel:
    """Two-point confidence emission conditioned on true-positive-ness.

    ``sigma_high``/``sigma_low`` set the true-positive localization spread
    per confidence band; None keeps the base sigma for both (scores carry
    no information about localization accuracy).
    """

    p_high_given_true: float = 0.9
    p_high_given_false: float = 0.2
    high_value: float = 1.5
    low_value: float = 0.5
    sigma_high: Optional[float] = None
    sigma_low: Optional[float] = None

    def __post_init__(self):
        for name in ("p_high_given_true", "p_high_given_false"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if not self.high_value > self.low_value >= 0.0:
            raise ValueError("need high_value > low_value >= 0")


@dataclass(frozen=True)
class DetectorSpec:
    kind: str = "static"
    base: NoiseParams = field(default_factory=lambda: SEGMENTER_STATIC)
    confidence: ConfidenceModel = field(default_factory=ConfidenceModel)
    constant_confidence: float = 1.0
    endpoint: Optional[str] = None

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"detector kind must be one of {DETECTOR_KINDS}, got {self.kind!r}")
        if self.kind == "bridge" and not self.endpoint:
            raise ValueError("bridge detector requires an endpoint")


def _sample_cell_gaussian(object_cell: Cell, cells: list[Cell], sigma: float, rng: random.Random) -> Cell:
    weights = _gaussian_weights(object_cell, cells, sigma)
    total = float(weights.sum())
    pick = rng.random() * total
    acc = 0.0
    for cell, w in zip(cells, weights):
        acc += float(w)
        if pick < acc:
            return cell
    return cells[-1]


def simulate_detection(
    spec: DetectorSpec,
    object_cell: Cell,
    view: frozenset[Cell],
    rng: random.Random,
) -> SensorObservation:
    """One Look's worth of simulated sensing. Bridge detectors are handled
    by the episode loop, not here."""
    cells = sorted(view)
    in_view = object_cell in view
    if spec.kind == "perfect":
        if in_view:
            return SensorObservation(object_cell, spec.confidence.high_value)
        return SensorObservation(None, spec.confidence.high_value)
    if spec.kind == "static":
        z = _sample_event_cell(spec.base, object_cell, cells, in_view, rng, sigma=spec.base.sigma)
        return SensorObservation(z, spec.constant_confidence)
    if spec.kind == "confidence":
        alpha, beta, _ = event_probs(in_view, spec.base)
        u = rng.random()
        event = "A" if u < alpha else ("B" if u < alpha + beta else "C")
        cm = spec.confidence
        p_high = cm.p_high_given_true if event == "A" else cm.p_high_given_false
        high = rng.random() < p_high
        conf = cm.high_value if high else cm.low_value
        if event == "C":
            return SensorObservation(None, conf)
        if not cells:
            return SensorObservation(None, conf)
        if event == "B":
            return SensorObservation(cells[rng.randrange(len(cells))], conf)
        banded = cm.sigma_high if high else cm.sigma_low
        sigma = banded if banded is not None else spec.base.sigma
        return SensorObservation(_sample_cell_gaussian(object_cell, cells, sigma, rng), conf)
    raise ValueError(f"simulate_detection cannot handle detector kind {spec.kind!r}")


def _sample_event_cell(
    params: NoiseParams,
    object_cell: Cell,
    cells: list[Cell],
    in_view: bool,
    rng: random.Random,
    sigma: float,
) -> Optional[Cell]:
    alpha, beta, _ = event_probs(in_view, params)
    u = rng.random()
    if u < alpha:
        if not cells:
            return None
        return _sample_cell_gaussian(object_cell, cells, sigma, rng)
    if u < alpha + beta:
        if not cells:
            return None
        return cells[rng.randrange(len(cells))]
    return None
