import numpy as np
import pytest
from hypothesis import given

from segfuse import (
    BinaryMask,
    IntensityMap,
    ScoreMap,
    ShapeMismatchError,
    Volume,
    cast_mask_to_scores,
    count_foreground,
    overlap_count,
)
from strategies import mask_pairs


def mask_from_points(width, height, points):
    arr = np.zeros((height, width), dtype=np.uint8)
    for x, y in points:
        arr[y, x] = 1
    return BinaryMask(arr)


class TestConstruction:
    def test_score_map_accepts_unit_interval(self):
        m = ScoreMap([[0.0, 0.5], [1.0, 0.25]])
        assert m.width == 2 and m.height == 2
        assert m.data[1, 0] == 1.0

    @pytest.mark.parametrize("bad", [float("nan"), -0.1, 1.2, float("inf")])
    def test_score_map_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError, match=r"outside \[0, 1\]"):
            ScoreMap([[0.5, bad]])

    @pytest.mark.parametrize("bad", [2, -1, 0.5, float("nan")])
    def test_mask_rejects_non_binary(self, bad):
        with pytest.raises(ValueError, match="not 0 or 1"):
            BinaryMask([[1, bad]])

    def test_intensity_rejects_non_finite(self):
        with pytest.raises(ValueError, match="not finite"):
            IntensityMap([[0.0, float("inf")]])
        IntensityMap([[-1000.0, 1000.0]])  # arbitrary finite range is fine

    def test_rejects_empty_and_non_2d(self):
        with pytest.raises(ValueError):
            BinaryMask(np.zeros((0, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            BinaryMask([0, 1, 0])

    def test_grids_are_immutable_and_decoupled_from_source(self):
        src = np.zeros((2, 2), dtype=np.uint8)
        m = BinaryMask(src)
        src[0, 0] = 1
        assert m.data[0, 0] == 0
        with pytest.raises(ValueError):
            m.data[0, 0] = 1

    def test_equality_is_by_value_and_type(self):
        assert BinaryMask([[1, 0]]) == BinaryMask([[1, 0]])
        assert BinaryMask([[1, 0]]) != BinaryMask([[0, 0]])
        assert ScoreMap([[1.0, 0.0]]) != BinaryMask([[1, 0]])


class TestVolume:
    def test_requires_consistent_slices(self):
        with pytest.raises(ValueError, match="at least one slice"):
            Volume([])
        with pytest.raises(ShapeMismatchError):
            Volume([BinaryMask([[1]]), BinaryMask([[1, 0]])])
        with pytest.raises(ValueError, match="mixed slice kinds"):
            Volume([BinaryMask([[1]]), ScoreMap([[1.0]])])

    def test_kind_and_dims(self):
        v = Volume([ScoreMap([[0.5, 0.5]]), ScoreMap([[0.1, 0.9]])])
        assert (v.kind, v.width, v.height, v.depth) == ("score", 2, 1, 2)
        assert v.stacked().shape == (2, 1, 2)

    def test_counts_sum_over_slices(self):
        v = Volume([BinaryMask([[1, 1]]), BinaryMask([[0, 1]])])
        assert count_foreground(v) == 3

    def test_volume_overlap_checks_depth(self):
        a = Volume([BinaryMask([[1]])])
        b = Volume([BinaryMask([[1]]), BinaryMask([[1]])])
        with pytest.raises(ShapeMismatchError, match="1x1x1.*1x1x2"):
            overlap_count(a, b)


class TestCounting:
    def test_all_zero_and_all_one(self):
        zeros = BinaryMask(np.zeros((4, 4), dtype=np.uint8))
        ones = BinaryMask(np.ones((4, 4), dtype=np.uint8))
        assert count_foreground(zeros) == 0
        assert count_foreground(ones) == 16

    def test_hand_counted_diagonal(self):
        m = mask_from_points(4, 4, [(0, 0), (1, 1), (2, 2)])
        assert count_foreground(m) == 3

    def test_overlap_identity_and_disjoint(self):
        m = mask_from_points(4, 4, [(0, 0), (3, 3)])
        other = mask_from_points(4, 4, [(1, 1), (2, 2)])
        assert overlap_count(m, m) == 2
        assert overlap_count(m, other) == 0

    def test_overlap_hand_case(self):
        a = mask_from_points(3, 1, [(0, 0), (1, 0)])
        b = mask_from_points(3, 1, [(1, 0), (2, 0)])
        assert overlap_count(a, b) == 1

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeMismatchError, match="2x1.*3x1"):
            overlap_count(BinaryMask([[1, 0]]), BinaryMask([[1, 0, 1]]))

    def test_rejects_non_mask_inputs(self):
        with pytest.raises(TypeError):
            count_foreground(ScoreMap([[1.0]]))
        with pytest.raises(TypeError):
            overlap_count(BinaryMask([[1]]), Volume([BinaryMask([[1]])]))


class TestCastToScores:
    def test_zero_one_and_mixed(self):
        zeros = BinaryMask(np.zeros((2, 3), dtype=np.uint8))
        assert cast_mask_to_scores(zeros) == ScoreMap(np.zeros((2, 3)))
        ones = BinaryMask(np.ones((2, 3), dtype=np.uint8))
        assert cast_mask_to_scores(ones) == ScoreMap(np.ones((2, 3)))
        mixed = BinaryMask([[1, 0, 1]])
        assert np.array_equal(cast_mask_to_scores(mixed).data, [[1.0, 0.0, 1.0]])


@given(mask_pairs())
def test_overlap_is_symmetric(pair):
    a, b = pair
    assert overlap_count(a, b) == overlap_count(b, a)


@given(mask_pairs())
def test_overlap_with_self_is_count(pair):
    a, _ = pair
    assert overlap_count(a, a) == count_foreground(a)


@given(mask_pairs())
def test_overlap_bounded_by_smaller_mask(pair):
    a, b = pair
    assert overlap_count(a, b) <= min(count_foreground(a), count_foreground(b))
