"""Immutable 2D grid containers and the elementwise primitives shared by all modules.

Every grid stores its pixels in a read-only, C-contiguous numpy array of shape
(height, width), so the flat index ``y * width + x`` walks memory order. That
single canonical layout is what makes the file codecs bit-exact. Instances
never change after construction and every operation returns a new grid, which
makes sharing grids across worker threads safe without locks.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "ScoreMap",
    "BinaryMask",
    "IntensityMap",
    "Volume",
    "ShapeMismatchError",
    "count_foreground",
    "overlap_count",
    "cast_mask_to_scores",
]


class ShapeMismatchError(ValueError):
    """Two grids or volumes that must align have different shapes."""

    def __init__(self, what: str, shape_a: str, shape_b: str):
        super().__init__(f"{what}: shape {shape_a} does not match shape {shape_b}")


class _Grid2D:
    """Shared base: a validated, frozen (height, width) array."""

    __slots__ = ("_data",)
    kind: str = ""

    def __init__(self, data):
        arr = np.array(data, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"grid data must be 2D, got {arr.ndim}D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"grid must be at least 1x1, got {arr.shape[1]}x{arr.shape[0]}")
        arr = self._coerce(np.ascontiguousarray(arr))
        arr.setflags(write=False)
        self._data = arr

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def data(self) -> np.ndarray:
        """Read-only (height, width) pixel array."""
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    def shape_str(self) -> str:
        return f"{self.width}x{self.height}"

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(
            np.array_equal(self._data, other._data)
        )

    __hash__ = None  # value semantics without hashability

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.shape_str()})"


def _first_offender(bad: np.ndarray) -> tuple[int, int]:
    y, x = np.argwhere(bad)[0]
    return int(x), int(y)


class ScoreMap(_Grid2D):
    """Per-pixel foreground probabilities in [0, 1].

    Construction rejects NaN and out-of-range values instead of clamping:
    corrupt model outputs should fail loudly at the boundary.
    """

    kind = "score"

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        arr = arr.astype(np.float64)
        bad = ~((arr >= 0.0) & (arr <= 1.0))  # catches NaN too
        if bad.any():
            x, y = _first_offender(bad)
            raise ValueError(
                f"score value {arr[y, x]!r} at (x={x}, y={y}) is outside [0, 1]"
            )
        return arr


class BinaryMask(_Grid2D):
    """Per-pixel {0, 1} segmentation decisions, stored as uint8."""

    kind = "mask"

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        valid = (arr == 0) | (arr == 1)  # checked before the cast to avoid wraparound
        if not valid.all():
            x, y = _first_offender(~valid)
            raise ValueError(f"mask value {arr[y, x]!r} at (x={x}, y={y}) is not 0 or 1")
        return arr.astype(np.uint8)


class IntensityMap(_Grid2D):
    """Raw or normalized image intensities; any finite range."""

    kind = "intensity"

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        arr = arr.astype(np.float64)
        bad = ~np.isfinite(arr)
        if bad.any():
            x, y = _first_offender(bad)
            raise ValueError(f"intensity value {arr[y, x]!r} at (x={x}, y={y}) is not finite")
        return arr


Grid = ScoreMap | BinaryMask | IntensityMap


class Volume:
    """An ordered stack of same-sized, same-kind slices (one subject)."""

    __slots__ = ("_slices",)

    def __init__(self, slices: Iterable[Grid]):
        slices = tuple(slices)
        if not slices:
            raise ValueError("volume must contain at least one slice")
        first = slices[0]
        if not isinstance(first, _Grid2D):
            raise TypeError(f"volume slices must be grids, got {type(first).__name__}")
        for k, s in enumerate(slices[1:], start=1):
            if type(s) is not type(first):
                raise ValueError(
                    f"mixed slice kinds: slice 0 is {first.kind}, slice {k} is {s.kind}"
                )
            if s.width != first.width or s.height != first.height:
                raise ShapeMismatchError(
                    f"volume slice {k}", s.shape_str(), first.shape_str()
                )
        self._slices = slices

    @property
    def kind(self) -> str:
        return self._slices[0].kind

    @property
    def width(self) -> int:
        return self._slices[0].width

    @property
    def height(self) -> int:
        return self._slices[0].height

    @property
    def depth(self) -> int:
        return len(self._slices)

    def shape_str(self) -> str:
        return f"{self.width}x{self.height}x{self.depth}"

    def stacked(self) -> np.ndarray:
        """Fresh (depth, height, width) array of all slice data."""
        return np.stack([s.data for s in self._slices])

    def __len__(self) -> int:
        return len(self._slices)

    def __iter__(self) -> Iterator[Grid]:
        return iter(self._slices)

    def __getitem__(self, k: int) -> Grid:
        return self._slices[k]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Volume):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self, other))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Volume({self.shape_str()}, kind={self.kind!r})"


def _require_mask(value, name: str) -> None:
    if isinstance(value, Volume):
        if value.kind != "mask":
            raise TypeError(f"{name} must be a mask volume, got kind {value.kind!r}")
    elif not isinstance(value, BinaryMask):
        raise TypeError(f"{name} must be a BinaryMask or mask Volume, got {type(value).__name__}")


def count_foreground(mask: BinaryMask | Volume) -> int:
    """Number of 1-pixels; for a volume, summed over all slices."""
    _require_mask(mask, "mask")
    if isinstance(mask, Volume):
        return int(sum(int(s.data.sum()) for s in mask))
    return int(mask.data.sum())


def overlap_count(a: BinaryMask | Volume, b: BinaryMask | Volume) -> int:
    """Number of positions where both masks are 1.

    Raises ShapeMismatchError (naming both shapes) when the operands do not
    share dimensions, or depth for volumes.
    """
    _require_mask(a, "a")
    _require_mask(b, "b")
    if isinstance(a, Volume) != isinstance(b, Volume):
        raise TypeError("cannot overlap a single mask with a volume")
    if isinstance(a, Volume):
        if (a.width, a.height, a.depth) != (b.width, b.height, b.depth):
            raise ShapeMismatchError("overlap_count", a.shape_str(), b.shape_str())
        return int(sum(int((sa.data & sb.data).sum()) for sa, sb in zip(a, b)))
    if (a.width, a.height) != (b.width, b.height):
        raise ShapeMismatchError("overlap_count", a.shape_str(), b.shape_str())
    return int((a.data & b.data).sum())


def cast_mask_to_scores(mask: BinaryMask) -> ScoreMap:
    """Embed a {0,1} mask into score space (0 -> 0.0, 1 -> 1.0)."""
    if not isinstance(mask, BinaryMask):
        raise TypeError(f"expected BinaryMask, got {type(mask).__name__}")
    return ScoreMap(mask.data.astype(np.float64))
