import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from gridseek.observation import (
    ConfidenceMap,
    NULL_OBSERVATION,
    NoiseParams,
    PROFILES,
    SEGMENTER_STATIC,
    SensorObservation,
    combine_params,
    event_probs,
    likelihood_over_cells,
    noise_for_confidence,
    observation_likelihood,
    sample_observation,
)
from gridseek.pomdp import ContractViolation

HU = PROFILES["hu-segmentation"]
VILD = PROFILES["vild"]


class TestConfidenceBands:
    def test_hu_high_band(self):
        p = noise_for_confidence(1.2, HU)
        assert (p.tpr, p.sigma) == (0.7, 0.6)

    def test_hu_low_band(self):
        p = noise_for_confidence(0.5, HU)
        assert (p.tpr, p.sigma) == (0.5, 1.0)

    def test_hu_tnr_fixed(self):
        assert noise_for_confidence(0.5, HU).tnr == noise_for_confidence(2.0, HU).tnr == 0.918

    def test_vild_band_boundary_inclusive(self):
        p = noise_for_confidence(0.25, VILD)
        assert (p.tnr, p.sigma) == (0.1, 1.0)

    def test_vild_low_band(self):
        p = noise_for_confidence(0.1, VILD)
        assert (p.tnr, p.sigma) == (0.3, 2.0)

    def test_vild_tpr_fixed(self):
        assert noise_for_confidence(0.1, VILD).tpr == noise_for_confidence(0.9, VILD).tpr == 0.976

    def test_exact_threshold_is_stable(self):
        assert noise_for_confidence(1.0, HU) == noise_for_confidence(1.0 + 1e-12, HU)

    def test_thresholds_must_decrease(self):
        p = NoiseParams(1, 0.5, 0.5)
        with pytest.raises(ValueError):
            ConfidenceMap(bands=((0.5, p), (0.7, p)), fallback=p)

    def test_negative_confidence_rejected(self):
        with pytest.raises(ValueError):
            noise_for_confidence(-0.1, HU)


class TestEventProbs:
    def test_in_view(self):
        alpha, beta, gamma = event_probs(True, NoiseParams(1, 0.7, 0.9))
        assert (alpha, beta) == (0.7, 0.0)
        assert gamma == pytest.approx(0.3)

    def test_out_of_view(self):
        alpha, beta, gamma = event_probs(False, NoiseParams(1, 0.7, 0.918))
        assert (alpha, gamma) == (0.0, 0.918)
        assert beta == pytest.approx(0.082)

    def test_perfect_sensor_limit(self):
        assert event_probs(True, NoiseParams(1, 1.0, 1.0)) == (1.0, 0.0, 0.0)

    @given(st.booleans(), st.floats(0, 1), st.floats(0, 1))
    def test_sums_to_one(self, in_view, tpr, tnr):
        probs = event_probs(in_view, NoiseParams(1.0, tpr, tnr))
        assert math.isclose(sum(probs), 1.0, abs_tol=1e-12)


TWO_CELL_V = frozenset({(1, 0), (2, 0)})


class TestLikelihood:
    def test_certain_null_when_not_in_view(self):
        p = NoiseParams(sigma=1.0, tpr=0.7, tnr=1.0, smoothing=0.0)
        assert observation_likelihood(NULL_OBSERVATION, (5, 5), TWO_CELL_V, p) == 1.0

    def test_two_cell_worked_example(self):
        # alpha * D(z): D is the two-cell normalized Gaussian, so
        # D((1,0)) = 1 / (1 + exp(-1/(2 * 0.36))) computed independently.
        p = NoiseParams(sigma=0.6, tpr=0.7, tnr=0.918, smoothing=0.0)
        got = observation_likelihood(SensorObservation((1, 0)), (1, 0), TWO_CELL_V, p)
        expected = 0.7 * (1.0 / (1.0 + math.exp(-1.0 / (2.0 * 0.36))))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.5603, abs=1e-3)

    def test_two_cell_example_sums_to_one(self):
        p = NoiseParams(sigma=0.6, tpr=0.7, tnr=0.918, smoothing=0.0)
        outcomes = [NULL_OBSERVATION, SensorObservation((1, 0)), SensorObservation((2, 0))]
        total = sum(observation_likelihood(z, (1, 0), TWO_CELL_V, p) for z in outcomes)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_null_formula_matches_smoothed_mixture(self):
        p = NoiseParams(sigma=1.0, tpr=0.7, tnr=0.9, smoothing=1e-3)
        for obj in [(1, 0), (9, 9)]:
            alpha, beta, gamma = event_probs(obj in TWO_CELL_V, p)
            expected = gamma * (1 - p.smoothing) + (1 - gamma) * p.smoothing
            got = observation_likelihood(NULL_OBSERVATION, obj, TWO_CELL_V, p)
            assert got == pytest.approx(expected, abs=1e-15)

    def test_empty_view_null_is_certain(self):
        p = NoiseParams(1.0, 0.5, 0.5)
        assert observation_likelihood(NULL_OBSERVATION, (0, 0), frozenset(), p) == 1.0

    def test_empty_view_detection_is_contract_violation(self):
        with pytest.raises(ContractViolation):
            observation_likelihood(SensorObservation((1, 0)), (0, 0), frozenset(), NoiseParams(1, 0.5, 0.5))

    def test_detection_outside_view_rejected(self):
        with pytest.raises(ContractViolation):
            observation_likelihood(SensorObservation((9, 9)), (1, 0), TWO_CELL_V, NoiseParams(1, 0.5, 0.5))

    def test_event_a_density_symmetry(self):
        # Two view cells equidistant from the object see the same density.
        v = frozenset({(0, 1), (2, 1), (1, 0)})
        p = NoiseParams(sigma=0.8, tpr=0.6, tnr=0.9, smoothing=0.0)
        obj = (1, 1)
        left = observation_likelihood(SensorObservation((0, 1)), obj, v, p)
        right = observation_likelihood(SensorObservation((2, 1)), obj, v, p)
        assert left == pytest.approx(right, rel=1e-12)

    def test_vector_path_matches_scalar(self):
        v = frozenset({(1, 1), (2, 1), (3, 3)})
        p = NoiseParams(sigma=0.9, tpr=0.65, tnr=0.85, smoothing=1e-3)
        cells = [(0, 0), (1, 1), (2, 1), (3, 3), (4, 4)]
        for z in [NULL_OBSERVATION, SensorObservation((2, 1))]:
            vec = likelihood_over_cells(z, cells, v, p)
            for c, got in zip(cells, vec):
                assert got == pytest.approx(observation_likelihood(z, c, v, p), rel=1e-12)


@st.composite
def view_and_params(draw):
    w = draw(st.integers(2, 5))
    h = draw(st.integers(2, 5))
    all_cells = [(x, y) for x in range(w) for y in range(h)]
    v = draw(st.sets(st.sampled_from(all_cells), min_size=0, max_size=len(all_cells) - 1))
    obj = draw(st.sampled_from(all_cells))
    params = NoiseParams(
        sigma=draw(st.floats(0.2, 3.0)),
        tpr=draw(st.floats(0, 1)),
        tnr=draw(st.floats(0, 1)),
        smoothing=draw(st.sampled_from([0.0, 1e-3, 0.05])),
    )
    return frozenset(v), obj, params


class TestNormalization:
    @settings(max_examples=200, deadline=None)
    @given(view_and_params())
    def test_sums_to_one(self, case):
        view, obj, params = case
        outcomes = [NULL_OBSERVATION] + [SensorObservation(c) for c in view]
        total = sum(observation_likelihood(z, obj, view, params) for z in outcomes)
        assert total == pytest.approx(1.0, abs=1e-9)


class TestSampler:
    def test_tnr_one_out_of_view_always_null(self):
        p = NoiseParams(1.0, 0.7, 1.0)
        rng = random.Random(0)
        assert all(
            sample_observation((9, 9), TWO_CELL_V, p, rng).is_null for _ in range(200)
        )

    def test_tiny_sigma_detects_object_cell(self):
        p = NoiseParams(sigma=1e-3, tpr=1.0, tnr=1.0)
        rng = random.Random(1)
        for _ in range(100):
            z = sample_observation((1, 0), TWO_CELL_V, p, rng)
            assert z.detection == (1, 0)

    def test_null_fraction_matches_event_probs(self):
        p = NoiseParams(sigma=0.8, tpr=0.7, tnr=0.9)
        rng = random.Random(42)
        n = 100_000
        nulls = sum(sample_observation((1, 0), TWO_CELL_V, p, rng).is_null for _ in range(n))
        assert nulls / n == pytest.approx(0.30, abs=0.01)

    def test_deterministic_given_seed(self):
        p = NoiseParams(0.9, 0.6, 0.8)
        a = [sample_observation((1, 0), TWO_CELL_V, p, random.Random(5)) for _ in range(20)]
        b = [sample_observation((1, 0), TWO_CELL_V, p, random.Random(5)) for _ in range(20)]
        assert a == b

    def test_empty_view_degrades_to_null(self):
        p = NoiseParams(1.0, 0.5, 0.0)  # out-of-view draws are all event B
        rng = random.Random(3)
        assert sample_observation((0, 0), frozenset(), p, rng).is_null

    def test_frequencies_track_likelihood(self):
        v = frozenset({(0, 0), (1, 0), (1, 1)})
        p = NoiseParams(sigma=0.7, tpr=0.65, tnr=0.9, smoothing=0.0)
        obj = (1, 0)
        rng = random.Random(11)
        n = 50_000
        counts = Counter(sample_observation(obj, v, p, rng).detection for _ in range(n))
        for z in [None, (0, 0), (1, 0), (1, 1)]:
            expected = observation_likelihood(SensorObservation(z), obj, v, p)
            assert counts[z] / n == pytest.approx(expected, abs=0.01)


class TestCombineParams:
    def test_static_keeps_everything(self):
        band = NoiseParams(0.6, 0.7, 0.5)
        assert combine_params("static", SEGMENTER_STATIC, band) == SEGMENTER_STATIC

    def test_dynamic_both_takes_sigma_and_tpr(self):
        band = NoiseParams(0.6, 0.7, 0.5)
        out = combine_params("dynamic-both", SEGMENTER_STATIC, band)
        assert (out.sigma, out.tpr, out.tnr) == (0.6, 0.7, SEGMENTER_STATIC.tnr)

    def test_dynamic_tnr_sigma(self):
        band = NoiseParams(2.0, 0.9, 0.3)
        out = combine_params("dynamic-tnr-sigma", SEGMENTER_STATIC, band)
        assert (out.sigma, out.tpr, out.tnr) == (2.0, SEGMENTER_STATIC.tpr, 0.3)

    def test_unknown_mode(self):
        with pytest.raises(KeyError):
            combine_params("dynamic-everything", SEGMENTER_STATIC, SEGMENTER_STATIC)


class TestNoiseParamsValidation:
    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            NoiseParams(0.0, 0.5, 0.5)

    def test_rates_in_unit_interval(self):
        with pytest.raises(ValueError):
            NoiseParams(1.0, 1.1, 0.5)

    def test_smoothing_cap(self):
        with pytest.raises(ValueError):
            NoiseParams(1.0, 0.5, 0.5, smoothing=0.2)
