from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodeo_metrics import (
    Box,
    ImageSample,
    LabeledBox,
    apply_overunder,
    evaluate_rodeo,
    evaluate_rodeo_per_class,
    loc_score_pair,
    match_image,
    rodeo_matched,
    rodeo_total,
)
from rodeo_metrics.rodeo import match_dataset

from conftest import ALPHA, BETA, GOLDEN_EXPECTED, golden_samples, lb, random_dataset

unit = st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)


class TestLocScorePair:
    def test_aligned_centers(self):
        assert loc_score_pair(Box(3, 3, 2, 2), Box(3, 3, 5, 1)) == 1.0

    def test_relative_distance_one_scores_half(self):
        # dx equal to one target width
        assert loc_score_pair(Box(0, 0, 4, 4), Box(4, 0, 4, 4)) == pytest.approx(0.5, abs=1e-12)

    def test_diagonal_unit_offsets(self):
        # dx/w = dy/h = 1 -> exp(-2 ln 2) = 0.25
        assert loc_score_pair(Box(0, 0, 2, 3), Box(2, 3, 2, 3)) == pytest.approx(0.25, abs=1e-12)

    def test_normalized_by_target_not_prediction(self):
        tight = loc_score_pair(Box(0, 0, 1, 1), Box(2, 0, 9, 9))
        loose = loc_score_pair(Box(0, 0, 9, 9), Box(2, 0, 1, 1))
        assert tight < loose

    @given(
        dx=st.floats(-20, 20),
        dy=st.floats(-20, 20),
        scale=st.floats(min_value=0.01, max_value=100),
    )
    def test_joint_translation_and_uniform_scaling_invariance(self, dx, dy, scale):
        t = Box(1.0, 2.0, 4.0, 8.0)
        p = Box(2.5, 0.5, 6.0, 2.0)
        base = loc_score_pair(t, p)
        shifted = loc_score_pair(
            Box(t.x + dx, t.y + dy, t.w, t.h), Box(p.x + dx, p.y + dy, p.w, p.h)
        )
        scaled = loc_score_pair(
            Box(t.x * scale, t.y * scale, t.w * scale, t.h * scale),
            Box(p.x * scale, p.y * scale, p.w * scale, p.h * scale),
        )
        assert shifted == pytest.approx(base, rel=1e-9)
        assert scaled == pytest.approx(base, rel=1e-9)


class TestApplyOverunder:
    def test_half_matched(self):
        assert apply_overunder(0.8, 2, 1, 1) == pytest.approx(0.4, abs=1e-12)

    def test_all_matched_unchanged(self):
        assert apply_overunder(0.73, 5, 0, 0) == 0.73

    def test_no_matches(self):
        assert apply_overunder(0.9, 0, 3, 2) == 0.0

    def test_all_zero_counts(self):
        assert apply_overunder(0.9, 0, 0, 0) == 0.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            apply_overunder(0.5, -1, 0, 0)


class TestRodeoTotal:
    def test_perfect(self):
        assert rodeo_total(1.0, 1.0, 1.0) == 1.0

    def test_equal_inputs(self):
        assert rodeo_total(0.5, 0.5, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_zero_classification_zeroes_summary(self):
        assert rodeo_total(0.9, 0.8, 0.0) == 0.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            rodeo_total(1.2, 0.5, 0.5)

    @given(loc=unit, shape=unit, cls=unit)
    @settings(max_examples=300)
    def test_between_min_and_max(self, loc, shape, cls):
        total = rodeo_total(loc, shape, cls)
        assert min(loc, shape, cls) - 1e-12 <= total <= max(loc, shape, cls) + 1e-12

    @given(loc=unit, shape=unit, cls=unit)
    @settings(max_examples=300)
    def test_capped_by_three_times_minimum(self, loc, shape, cls):
        assert rodeo_total(loc, shape, cls) <= 3.0 * min(loc, shape, cls) + 1e-12

    @given(loc=st.floats(1e-6, 0.99), shape=unit, cls=unit, bump=st.floats(1e-6, 1.0))
    @settings(max_examples=300)
    def test_strictly_increasing_per_coordinate(self, loc, shape, cls, bump):
        improved = min(1.0, loc + bump * (1.0 - loc))
        if improved > loc:
            assert rodeo_total(improved, shape, cls) > rodeo_total(loc, shape, cls)


class TestRodeoMatched:
    def test_perfect_oracle_two_classes(self):
        samples = [
            ImageSample(
                "a",
                (10, 10),
                targets=(lb(2, 2, 1, 1, 0), lb(6, 6, 2, 2, 1)),
                predictions=(lb(2, 2, 1, 1, 0), lb(6, 6, 2, 2, 1)),
            )
        ]
        matches = match_dataset(samples)
        assert rodeo_matched(matches) == (1.0, 1.0, 1.0)

    def test_cyclic_class_shift_zeroes_cls_only(self):
        # Perfect geometry, all labels shifted by one: loc = shape = 1,
        # classification is a pure derangement (clamped MCC 0).
        samples = []
        for k in range(6):
            targets = tuple(lb(5 * c + 2, 5 * k + 2, 2, 2, c) for c in range(3))
            predictions = tuple(
                lb(5 * c + 2, 5 * k + 2, 2, 2, (c + 1) % 3) for c in range(3)
            )
            samples.append(ImageSample(f"s{k}", (20, 40), targets, predictions))
        loc, shape, cls = rodeo_matched(match_dataset(samples))
        assert loc == 1.0
        assert shape == 1.0
        assert cls == 0.0

    def test_pooled_mean_not_per_image_mean(self):
        # One pair at exactly loc 0.5 pooled with a perfect pair: 0.75.
        samples = [
            ImageSample(
                "a",
                (40, 40),
                targets=(lb(4, 4, 4, 4, 0),),
                predictions=(lb(8, 4, 4, 4, 0),),
            ),
            ImageSample(
                "b",
                (40, 40),
                targets=(lb(20, 20, 4, 4, 1),),
                predictions=(lb(20, 20, 4, 4, 1),),
            ),
        ]
        loc, shape, cls = rodeo_matched(match_dataset(samples))
        assert loc == pytest.approx(0.75, abs=1e-12)
        assert shape == 1.0
        assert cls == 1.0

    def test_no_pairs_gives_zeros(self):
        samples = [ImageSample("a", (10, 10), targets=(lb(2, 2, 1, 1, 0),))]
        assert rodeo_matched(match_dataset(samples)) == (0.0, 0.0, 0.0)


class TestEvaluateRodeo:
    def test_oracle_predictions_score_one(self, golden):
        echoed = [s.with_predictions(s.targets) for s in golden]
        scores = evaluate_rodeo(echoed)
        assert scores.total == 1.0
        assert (scores.loc, scores.shape, scores.cls) == (1.0, 1.0, 1.0)

    def test_single_class_perfect_oracle_scores_one(self):
        samples = [
            ImageSample(
                "a",
                (10, 10),
                targets=(lb(2, 2, 1, 1, 0),),
                predictions=(lb(2, 2, 1, 1, 0),),
            )
        ]
        assert evaluate_rodeo(samples).total == 1.0

    def test_no_predictions_scores_zero(self, golden):
        empty = [s.with_predictions(()) for s in golden]
        scores = evaluate_rodeo(empty)
        assert scores.total == 0.0
        assert scores.n_matched == 0

    def test_empty_dataset_raises(self):
        with pytest.raises(ValueError):
            evaluate_rodeo([])

    def test_golden_fixture_walkthrough(self, golden):
        scores = evaluate_rodeo(golden)
        assert scores.n_matched == 5
        assert scores.n_unmatched_targets == 1
        assert scores.n_unmatched_predictions == 1
        assert scores.loc == pytest.approx(GOLDEN_EXPECTED["loc"], abs=1e-12)
        assert scores.shape == pytest.approx(GOLDEN_EXPECTED["shape"], abs=1e-12)
        assert scores.cls == pytest.approx(GOLDEN_EXPECTED["cls"], abs=1e-12)
        assert scores.total == pytest.approx(GOLDEN_EXPECTED["total"], abs=1e-12)

    def test_image_order_permutation_stable(self):
        rng = np.random.default_rng(3)
        samples = random_dataset(rng, 25)
        base = evaluate_rodeo(samples)
        for seed in range(5):
            shuffled = list(samples)
            np.random.default_rng(seed).shuffle(shuffled)
            scores = evaluate_rodeo(shuffled)
            assert scores.loc == pytest.approx(base.loc, abs=1e-12)
            assert scores.shape == pytest.approx(base.shape, abs=1e-12)
            assert scores.cls == pytest.approx(base.cls, abs=1e-12)
            assert scores.total == pytest.approx(base.total, abs=1e-12)

    def test_adding_unmatched_prediction_never_improves(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            samples = random_dataset(rng, 4)
            # pad predictions so the extra far box stays unmatched
            padded = []
            for s in samples:
                extra_needed = max(0, len(s.targets) - len(s.predictions))
                fillers = tuple(
                    lb(float(rng.uniform(0, 100)), float(rng.uniform(0, 100)), 1, 1, 0, 0.5)
                    for _ in range(extra_needed)
                )
                padded.append(s.with_predictions(s.predictions + fillers))
            base = evaluate_rodeo(padded)
            far = lb(100_000.0, 100_000.0, 1.0, 1.0, 0, 0.5)
            target_sample = padded[0]
            modified = [target_sample.with_predictions(target_sample.predictions + (far,))] + padded[1:]
            result = match_image(modified[0].targets, modified[0].predictions)
            assert len(modified[0].predictions) - 1 in result.unmatched_predictions
            scores = evaluate_rodeo(modified)
            assert scores.loc <= base.loc + 1e-12
            assert scores.shape <= base.shape + 1e-12
            assert scores.cls <= base.cls + 1e-12


class TestEvaluateRodeoPerClass:
    def test_single_class_dataset_perfect(self):
        samples = [
            ImageSample(
                "a",
                (10, 10),
                targets=(lb(2, 2, 1, 1, 0),),
                predictions=(lb(2, 2, 1, 1, 0),),
            )
        ]
        per_class = evaluate_rodeo_per_class(samples, 0)
        overall = evaluate_rodeo(samples)
        assert per_class.total == overall.total == 1.0

    def test_absent_class_flagged_no_support(self, golden):
        scores = evaluate_rodeo_per_class(golden, 7)
        assert scores.no_support
        assert (scores.loc, scores.shape, scores.cls, scores.total) == (0.0, 0.0, 0.0, 0.0)

    def test_present_class_not_flagged(self, golden):
        assert not evaluate_rodeo_per_class(golden, ALPHA).no_support

    def test_golden_fixture_per_class(self, golden):
        for class_id in (ALPHA, BETA):
            expected = GOLDEN_EXPECTED["per_class"][class_id]
            scores = evaluate_rodeo_per_class(golden, class_id)
            assert scores.loc == pytest.approx(expected["loc"], abs=1e-12)
            assert scores.shape == pytest.approx(expected["shape"], abs=1e-12)
            assert scores.cls == pytest.approx(expected["cls"], abs=1e-12)
            assert scores.total == pytest.approx(expected["total"], abs=1e-12)

    def test_perfect_class_beats_mislocalized_class(self):
        # class 0 perfect, class 1 fully mislocalized
        samples = [
            ImageSample(
                "a",
                (200, 200),
                targets=(lb(10, 10, 4, 4, 0), lb(50, 50, 4, 4, 1)),
                predictions=(lb(10, 10, 4, 4, 0), lb(150, 150, 4, 4, 1)),
            )
        ]
        good = evaluate_rodeo_per_class(samples, 0)
        bad = evaluate_rodeo_per_class(samples, 1)
        assert good.total > bad.total
        assert good.total == 1.0
