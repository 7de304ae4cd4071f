"""Error-overlay rendering: ground truth vs automatic segmentation on grayscale.

Disagreements get pure saturated colors so pixel counts are exactly testable:
red marks false negatives (truth only), blue false positives (segmentation
only), green the agreement region. Everything else shows the background
min-max scaled to gray. A nearest-neighbor zoom inset can be pasted at the
upper-left corner to magnify a region of interest.
"""

from __future__ import annotations

import numpy as np

from .grid import BinaryMask, IntensityMap, ShapeMismatchError

__all__ = ["RgbImage", "RED", "GREEN", "BLUE", "WHITE", "render_overlay", "zoom_inset"]

RED = (255, 0, 0)
GREEN = (0, 255, 0)
BLUE = (0, 0, 255)
WHITE = (255, 255, 255)


class RgbImage:
    """Immutable (height, width, 3) uint8 image."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"RGB data must have shape (height, width, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be at least 1x1, got {arr.shape[1]}x{arr.shape[0]}")
        if not ((arr >= 0) & (arr <= 255)).all():
            raise ValueError("RGB values must lie in [0, 255]")
        arr = np.ascontiguousarray(arr.astype(np.uint8))
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    def count_color(self, rgb: tuple[int, int, int]) -> int:
        """Number of pixels exactly equal to the given color."""
        return int((self._data == np.array(rgb, dtype=np.uint8)).all(axis=2).sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(
            np.array_equal(self._data, other._data)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"RgbImage({self.width}x{self.height})"


def render_overlay(background: IntensityMap, gs: BinaryMask, seg: BinaryMask) -> RgbImage:
    """Color-code segmentation errors over a grayscale background.

    gs=1, seg=0 -> red; gs=0, seg=1 -> blue; gs=1, seg=1 -> green; all other
    pixels show the background min-max scaled to 0..255 (a constant background
    degenerates to gray value 0).
    """
    shapes = {(g.width, g.height) for g in (background, gs, seg)}
    if len(shapes) != 1:
        raise ShapeMismatchError(
            "render_overlay", background.shape_str(), f"{gs.shape_str()} / {seg.shape_str()}"
        )
    bg = background.data
    lo, hi = float(bg.min()), float(bg.max())
    if hi - lo <= 0.0:
        gray = np.zeros(bg.shape, dtype=np.uint8)
    else:
        gray = np.rint((bg - lo) / (hi - lo) * 255.0).astype(np.uint8)

    out = np.repeat(gray[:, :, np.newaxis], 3, axis=2)
    truth = gs.data.astype(bool)
    auto = seg.data.astype(bool)
    out[truth & ~auto] = RED
    out[~truth & auto] = BLUE
    out[truth & auto] = GREEN
    return RgbImage(out)


def zoom_inset(
    img: RgbImage, rect: tuple[int, int, int, int], factor: int = 4
) -> RgbImage:
    """Magnify a rectangle and paste it flush at the upper-left corner.

    ``rect`` is (x, y, w, h) in pixels. The patch is replicated
    nearest-neighbor by ``factor`` and separated from the rest of the image
    by a 1-pixel white border along its right and bottom edges (skipped where
    the border would fall outside the image). The magnified patch must fit:
    factor*w <= width and factor*h <= height.
    """
    x, y, w, h = (int(v) for v in rect)
    if factor < 1:
        raise ValueError(f"zoom factor must be a positive integer, got {factor}")
    if w < 1 or h < 1:
        raise ValueError(f"zoom rect must be at least 1x1, got {w}x{h}")
    if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
        raise ValueError(
            f"zoom rect (x={x}, y={y}, w={w}, h={h}) out of bounds for {img.width}x{img.height}"
        )
    fw, fh = factor * w, factor * h
    if fw > img.width or fh > img.height:
        raise ValueError(
            f"magnified inset {fw}x{fh} does not fit inside {img.width}x{img.height}"
        )
    out = img.data.copy()
    patch = img.data[y : y + h, x : x + w]
    magnified = np.repeat(np.repeat(patch, factor, axis=0), factor, axis=1)
    out[:fh, :fw] = magnified
    if fh < img.height:
        out[fh, : min(fw + 1, img.width)] = WHITE
    if fw < img.width:
        out[: min(fh + 1, img.height), fw] = WHITE
    return RgbImage(out)
