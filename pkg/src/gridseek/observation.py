"""The fan-sensor observation model with confidence-conditioned noise.

A Look either returns NULL or a cell inside the current fan region V. The
detection is treated as coming from one of three exclusive events:

  A  true positive  -- the object is in V and the detection came from it;
  B  false positive -- the detection came from something else in V;
  C  negative       -- no detection (NULL).

Event probabilities depend on whether the object is inside V::

    object in V:      (alpha, beta, gamma) = (tpr, 0, 1 - tpr)
    object not in V:  (alpha, beta, gamma) = (0, 1 - tnr, tnr)

Given event A the detected cell is Gaussian around the object cell
(covariance sigma * I, density normalized over V); given B it is uniform
over V; given C it is NULL. Smoothing spreads a small probability delta
from each event onto the outcomes it would otherwise exclude, so the
mixture stays a proper distribution over {NULL} u V.

A detector's scalar confidence score is mapped to (sigma, tpr, tnr) through
a band table: high-confidence detections are trusted more (higher tpr,
smaller sigma) than low-confidence ones.
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .grid import Cell
from .pomdp import ContractViolation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseParams:
    """Sensor accuracy triple plus the additive smoothing constant."""

    sigma: float
    tpr: float
    tnr: float
    smoothing: float = 1e-3

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        for name in ("tpr", "tnr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if not 0.0 <= self.smoothing <= 0.1:
            raise ValueError(f"smoothing must be in [0, 0.1], got {self.smoothing}")


@dataclass(frozen=True)
class SensorObservation:
    """A detection cell (or None for NULL) with the detector's confidence."""

    detection: Optional[Cell]
    confidence: float = 0.0

    def __post_init__(self):
        if self.confidence < 0:
            raise ValueError(f"confidence must be nonnegative, got {self.confidence}")

    @property
    def is_null(self) -> bool:
        return self.detection is None


NULL_OBSERVATION = SensorObservation(None, 0.0)


class EventProbs(NamedTuple):
    alpha: float  # true positive
    beta: float   # false positive
    gamma: float  # negative


@dataclass(frozen=True)
class ConfidenceMap:
    """Step function from confidence score to noise parameters.

    ``bands`` is ordered by strictly decreasing threshold; the first band
    whose threshold is <= the score wins, else ``fallback`` applies.
    """

    bands: tuple[tuple[float, NoiseParams], ...]
    fallback: NoiseParams

    def __post_init__(self):
        thresholds = [t for t, _ in self.bands]
        if any(a <= b for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError(f"band thresholds must be strictly decreasing, got {thresholds}")


def noise_for_confidence(confidence: float, cmap: ConfidenceMap) -> NoiseParams:
    """Band lookup: params of the first band whose threshold <= confidence."""
    if confidence < 0:
        raise ValueError(f"confidence must be nonnegative, got {confidence}")
    for threshold, params in cmap.bands:
        if confidence >= threshold:
            return params
    return cmap.fallback


# Measured accuracy of the fine-tuned referring-expression segmenter,
# averaged over the evaluation scenes. Used both as the static belief-update
# profile and as the fixed model the planner simulates with.
SEGMENTER_STATIC = NoiseParams(sigma=0.827, tpr=0.581, tnr=0.918)

# Measured accuracy of the off-the-shelf ViLD open-vocabulary detector.
VILD_STATIC = NoiseParams(sigma=1.825, tpr=0.976, tnr=0.118)

PROFILES: dict[str, ConfidenceMap] = {
    # Fine-tuned segmenter: confidence modulates tpr and sigma, tnr stays at
    # its measured 0.918 (already high).
    "hu-segmentation": ConfidenceMap(
        bands=((1.0, NoiseParams(sigma=0.6, tpr=0.7, tnr=0.918)),),
        fallback=NoiseParams(sigma=1.0, tpr=0.5, tnr=0.918),
    ),
    # ViLD: confidence modulates tnr and sigma, tpr stays at its measured
    # 0.976 (already high).
    "vild": ConfidenceMap(
        bands=((0.25, NoiseParams(sigma=1.0, tpr=0.976, tnr=0.1)),),
        fallback=NoiseParams(sigma=2.0, tpr=0.976, tnr=0.3),
    ),
}


def event_probs(object_in_view: bool, params: NoiseParams) -> EventProbs:
    if object_in_view:
        return EventProbs(params.tpr, 0.0, 1.0 - params.tpr)
    return EventProbs(0.0, 1.0 - params.tnr, params.tnr)


def _gaussian_weights(center: Cell, cells: Sequence[Cell], sigma: float) -> np.ndarray:
    """Unnormalized Gaussian density at cell centers around ``center``."""
    pts = np.asarray(cells, dtype=float)
    d2 = (pts[:, 0] - center[0]) ** 2 + (pts[:, 1] - center[1]) ** 2
    return np.exp(-d2 / (2.0 * sigma * sigma))


def observation_likelihood(
    z: SensorObservation,
    object_cell: Cell,
    view: Iterable[Cell],
    params: NoiseParams,
) -> float:
    """p(z | object at object_cell, fan region ``view``).

    Sums to 1 over the outcome space {NULL} u V for any inputs.
    """
    cells = sorted(view)
    if not cells:
        if z.is_null:
            return 1.0
        raise ContractViolation(f"non-NULL observation {z.detection} with empty view")
    if not z.is_null and z.detection not in cells:
        raise ContractViolation(f"detection {z.detection} outside the view")
    alpha, beta, gamma = event_probs(object_cell in set(cells), params)
    delta = params.smoothing
    if z.is_null:
        return gamma * (1.0 - delta) + (alpha + beta) * delta
    n = len(cells)
    density = 0.0
    if alpha > 0.0:
        weights = _gaussian_weights(object_cell, cells, params.sigma)
        total = float(weights.sum())
        idx = cells.index(z.detection)
        density = float(weights[idx]) / total
    return (1.0 - delta) * (alpha * density + beta / n) + gamma * delta / n


def likelihood_over_cells(
    z: SensorObservation,
    candidate_cells: Sequence[Cell],
    view: Iterable[Cell],
    params: NoiseParams,
) -> np.ndarray:
    """Vector of p(z | object at c) over candidate object cells.

    Shares its arithmetic with :func:`observation_likelihood`; the belief
    filter uses this to score every free cell at once.
    """
    view_set = frozenset(view)
    cells = sorted(view_set)
    out = np.empty(len(candidate_cells), dtype=float)
    if not cells:
        if not z.is_null:
            raise ContractViolation(f"non-NULL observation {z.detection} with empty view")
        out.fill(1.0)
        return out
    if not z.is_null and z.detection not in view_set:
        raise ContractViolation(f"detection {z.detection} outside the view")
    delta = params.smoothing
    n = len(cells)
    in_a, _, in_c = event_probs(True, params)
    out_a, out_b, out_c = event_probs(False, params)
    if z.is_null:
        lik_in = in_c * (1.0 - delta) + in_a * delta
        lik_out = out_c * (1.0 - delta) + out_b * delta
        for i, c in enumerate(candidate_cells):
            out[i] = lik_in if c in view_set else lik_out
        return out
    # Detection at z: candidate cells inside V need the V-normalized Gaussian
    # density of the detected cell around each candidate.
    lik_out = (1.0 - delta) * (out_b / n) + out_c * delta / n
    pts = np.asarray(cells, dtype=float)
    zx, zy = z.detection
    for i, c in enumerate(candidate_cells):
        if c not in view_set:
            out[i] = lik_out
            continue
        w = np.exp(-((pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2) / (2.0 * params.sigma ** 2))
        total = float(w.sum())
        dz2 = (zx - c[0]) ** 2 + (zy - c[1]) ** 2
        density = math.exp(-dz2 / (2.0 * params.sigma ** 2)) / total if total > 0 else 0.0
        out[i] = (1.0 - delta) * in_a * density + in_c * delta / n
    return out


def sample_observation(
    object_cell: Cell,
    view: Iterable[Cell],
    params: NoiseParams,
    rng: random.Random | int,
) -> SensorObservation:
    """Draw one observation from the generative model.

    Deterministic given the rng state. If event A or B is drawn against an
    empty view there is nothing to detect; the draw degrades to NULL.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    cells = sorted(view)
    alpha, beta, gamma = event_probs(object_cell in set(cells), params)
    u = rng.random()
    if u < alpha:
        event = "A"
    elif u < alpha + beta:
        event = "B"
    else:
        event = "C"
    if event == "C":
        return NULL_OBSERVATION
    if not cells:
        log.debug("event %s drawn with empty view; emitting NULL", event)
        return NULL_OBSERVATION
    if event == "B":
        return SensorObservation(cells[rng.randrange(len(cells))], 0.0)
    weights = _gaussian_weights(object_cell, cells, params.sigma)
    cum = np.cumsum(weights)
    pick = rng.random() * float(cum[-1])
    idx = int(np.searchsorted(cum, pick, side="right"))
    idx = min(idx, len(cells) - 1)
    return SensorObservation(cells[idx], 0.0)


def combine_params(mode: str, static: NoiseParams, band: NoiseParams) -> NoiseParams:
    """Apply a dynamic-noise mode: take the mode's fields from the confidence
    band, everything else from the static profile."""
    fields = _MODE_FIELDS[mode]
    return replace(static, **{f: getattr(band, f) for f in fields})


_MODE_FIELDS: dict[str, tuple[str, ...]] = {
    "static": (),
    "dynamic-sigma": ("sigma",),
    "dynamic-tpr": ("tpr",),
    "dynamic-both": ("sigma", "tpr"),
    "dynamic-tnr": ("tnr",),
    "dynamic-tnr-sigma": ("sigma", "tnr"),
}

MODES = tuple(_MODE_FIELDS)
