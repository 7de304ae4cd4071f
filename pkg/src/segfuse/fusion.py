"""Ensemble fusion of score maps: average-then-threshold vs threshold-then-vote.

Two pixelwise pipelines combine N model score maps into one segmentation:

``msm`` (mean score maps)
    Average the raw score maps, then binarize the mean.

``mbm`` (mean binary masks)
    Binarize each score map first, average the resulting {0,1} masks, then
    binarize that mean again. For an odd ensemble at threshold 0.5 this is
    exactly per-pixel majority vote.

Binarization is strict at every stage: a pixel becomes 1 only when its value
is strictly greater than the threshold, and ties reject. The pixel example
(0.6, 0.7, 0.1) at threshold 0.5 separates the methods: the score mean 0.4667
fails the threshold (msm -> 0) while the votes (1, 1, 0) average to 0.6667 and
pass (mbm -> 1). When one model systematically under-scores, mbm cannot be
dragged below threshold by that single outlier, which is why it reduces false
negatives.

Means are computed in double precision regardless of storage precision so
results do not flip at threshold boundaries across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import BinaryMask, ScoreMap, ShapeMismatchError, Volume, cast_mask_to_scores

__all__ = [
    "METHODS",
    "FusionConfig",
    "binarize",
    "mean_maps",
    "fuse_msm",
    "fuse_mbm",
    "fuse_slices",
    "fuse_volumes",
]

METHODS = ("msm", "mbm")


def _check_threshold(threshold: float) -> float:
    threshold = float(threshold)
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must lie strictly inside (0, 1), got {threshold}")
    return threshold


@dataclass(frozen=True)
class FusionConfig:
    """Fusion settings: decision threshold and method name ("msm" or "mbm")."""

    threshold: float = 0.5
    method: str = "msm"

    def __post_init__(self):
        _check_threshold(self.threshold)
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


def binarize(score_map: ScoreMap, threshold: float = 0.5) -> BinaryMask:
    """Threshold a score map: 1 where value > threshold, else 0 (ties reject)."""
    threshold = _check_threshold(threshold)
    if not isinstance(score_map, ScoreMap):
        raise TypeError(f"expected ScoreMap, got {type(score_map).__name__}")
    return BinaryMask((score_map.data > threshold).astype(np.uint8))


def _stack_scores(maps: Sequence[ScoreMap]) -> np.ndarray:
    if not maps:
        raise ValueError("need at least one score map")
    first = maps[0]
    for k, m in enumerate(maps):
        if not isinstance(m, ScoreMap):
            raise TypeError(f"input {k} is {type(m).__name__}, expected ScoreMap")
        if (m.width, m.height) != (first.width, first.height):
            raise ShapeMismatchError(f"input {k}", m.shape_str(), first.shape_str())
    return np.stack([m.data for m in maps])


def mean_maps(maps: Sequence[ScoreMap]) -> ScoreMap:
    """Pixelwise arithmetic mean of N same-shape score maps, in float64."""
    mean = _stack_scores(maps).mean(axis=0)
    # guard against float drift just above 1.0; inputs are already in [0, 1]
    return ScoreMap(np.clip(mean, 0.0, 1.0))


def fuse_msm(maps: Sequence[ScoreMap], threshold: float = 0.5) -> BinaryMask:
    """Average the score maps, then binarize the mean."""
    return binarize(mean_maps(maps), threshold)


def fuse_mbm(maps: Sequence[ScoreMap], threshold: float = 0.5) -> BinaryMask:
    """Binarize each map, average the masks, binarize again.

    Equals per-pixel majority vote for odd N at threshold 0.5; for even N a
    split vote means the averaged mask sits exactly at 0.5 and the strict
    final threshold rejects it.
    """
    votes = [cast_mask_to_scores(binarize(m, threshold)) for m in maps]
    return binarize(mean_maps(votes), threshold)


def fuse_slices(maps: Sequence[ScoreMap], config: FusionConfig) -> BinaryMask:
    """Apply the configured fusion method to one stack of 2D score maps."""
    if config.method == "msm":
        return fuse_msm(maps, config.threshold)
    return fuse_mbm(maps, config.threshold)


def fuse_volumes(subject_maps: Sequence[Volume], config: FusionConfig) -> Volume:
    """Fuse N score volumes slice by slice into one mask volume.

    Slice k of the output is the fusion of slice k of every input. All inputs
    must be score volumes with identical width, height, and depth.
    """
    if not subject_maps:
        raise ValueError("need at least one score volume")
    first = subject_maps[0]
    for k, vol in enumerate(subject_maps):
        if not isinstance(vol, Volume) or vol.kind != "score":
            raise TypeError(f"input {k} must be a score Volume")
        if (vol.width, vol.height, vol.depth) != (first.width, first.height, first.depth):
            raise ShapeMismatchError(f"input volume {k}", vol.shape_str(), first.shape_str())
    fused = [
        fuse_slices([vol[k] for vol in subject_maps], config) for k in range(first.depth)
    ]
    return Volume(fused)
