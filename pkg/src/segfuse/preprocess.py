"""Slice preprocessing: size unification, intensity normalization, affine augmentation.

Sizes are unified by centered crop-or-pad with floor offsets, which is
deterministic and exactly invertible for sources that fit inside the target.
Intensity normalization is a per-slice z-score using the population standard
deviation (a per-volume variant pools statistics over all slices). Affine
augmentation composes scale, then shear, then rotation about the image center
and resamples by inverse mapping: bilinear for intensities, nearest-neighbor
for labels so they stay strictly binary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import BinaryMask, IntensityMap, ShapeMismatchError, Volume

__all__ = [
    "AffineParams",
    "crop_pad_center",
    "zscore_normalize",
    "zscore_normalize_volume",
    "affine_augment",
    "affine_augment_pair",
]

_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class AffineParams:
    """Rotation (degrees), shear factors, and positive scale factors."""

    rotation: float = 0.0
    shear_x: float = 0.0
    shear_y: float = 0.0
    scale_x: float = 1.0
    scale_y: float = 1.0

    def __post_init__(self):
        values = (self.rotation, self.shear_x, self.shear_y, self.scale_x, self.scale_y)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"affine parameters must be finite, got {values}")
        if self.scale_x <= 0 or self.scale_y <= 0:
            raise ValueError(f"scale factors must be positive, got ({self.scale_x}, {self.scale_y})")

    def matrix(self) -> np.ndarray:
        """Forward 2x2 transform acting on (x, y) offsets: rotate @ shear @ scale."""
        theta = math.radians(self.rotation)
        rotate = np.array(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        shear = np.array([[1.0, self.shear_x], [self.shear_y, 1.0]])
        scale = np.array([[self.scale_x, 0.0], [0.0, self.scale_y]])
        return rotate @ shear @ scale


def crop_pad_center(img, target_w: int, target_h: int, fill=0.0):
    """Center an image on a target-size canvas, cropping or padding per axis.

    The source lands at top-left offset floor((target - source) / 2) on each
    axis; when the source is larger, floor((source - target) / 2) rows or
    columns are removed from the leading side. Uncovered pixels take ``fill``.
    Returns the same grid kind as the input.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size must be at least 1x1, got {target_w}x{target_h}")
    src = img.data

    def spans(source: int, target: int) -> tuple[int, int, int]:
        if target >= source:
            return 0, (target - source) // 2, source
        return (source - target) // 2, 0, target

    sy, dy, span_h = spans(src.shape[0], target_h)
    sx, dx, span_w = spans(src.shape[1], target_w)
    out = np.full((target_h, target_w), fill, dtype=src.dtype)
    out[dy : dy + span_h, dx : dx + span_w] = src[sy : sy + span_h, sx : sx + span_w]
    return type(img)(out)


def zscore_normalize(img: IntensityMap) -> IntensityMap:
    """Per-slice z-score: (x - mean) / population std; constant slices map to zeros."""
    data = img.data
    std = float(data.std())
    if std < _STD_FLOOR:
        return IntensityMap(np.zeros_like(data))
    return IntensityMap((data - data.mean()) / std)


def zscore_normalize_volume(volume: Volume) -> Volume:
    """Z-score with mean and population std pooled over the whole volume."""
    if volume.kind != "intensity":
        raise TypeError(f"expected an intensity volume, got kind {volume.kind!r}")
    stacked = volume.stacked()
    std = float(stacked.std())
    if std < _STD_FLOOR:
        return Volume(IntensityMap(np.zeros_like(s.data)) for s in volume)
    mean = stacked.mean()
    return Volume(IntensityMap((s.data - mean) / std) for s in volume)


def _resample(arr: np.ndarray, params: AffineParams, order: int, fill) -> np.ndarray:
    """Inverse-mapped resampling about the image center (order 1 bilinear, 0 nearest)."""
    inverse = np.linalg.inv(params.matrix())
    h, w = arr.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    dx = xs - cx
    dy = ys - cy
    src_x = inverse[0, 0] * dx + inverse[0, 1] * dy + cx
    src_y = inverse[1, 0] * dx + inverse[1, 1] * dy + cy
    # grid-constant pads with the fill value and still interpolates across the
    # border, the usual warp semantics; plain "constant" would snap any sample
    # even marginally outside the grid straight to the fill value
    return ndimage.map_coordinates(
        arr, [src_y, src_x], order=order, mode="grid-constant", cval=fill, prefilter=False
    )


def affine_augment(img: IntensityMap, params: AffineParams) -> IntensityMap:
    """Scale, shear, then rotate about the image center; bilinear sampling, fill 0."""
    if not isinstance(img, IntensityMap):
        raise TypeError(f"expected IntensityMap, got {type(img).__name__}")
    return IntensityMap(_resample(img.data, params, order=1, fill=0.0))


def affine_augment_pair(
    img: IntensityMap, label: BinaryMask, params: AffineParams
) -> tuple[IntensityMap, BinaryMask]:
    """Apply one identical transform to an image and its label.

    The image is resampled bilinearly, the label by nearest neighbor, which
    keeps label values strictly in {0, 1}.
    """
    if (img.width, img.height) != (label.width, label.height):
        raise ShapeMismatchError("affine_augment_pair", img.shape_str(), label.shape_str())
    warped = affine_augment(img, params)
    warped_label = BinaryMask(_resample(label.data, params, order=0, fill=0))
    return warped, warped_label
