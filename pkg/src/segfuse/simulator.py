"""Seeded synthetic data: lesion-style ground truth plus model score maps.

Ground truth masks are unions of filled ellipses. A model's score map is built
from the ground truth as

    score = clip(gain * blur3(gt) + bias + noise_sigma * n, 0, 1)

where blur3 is a 3x3 box blur whose edge pixels average only their in-bounds
neighbors, and n is seeded standard-normal noise. The ``good`` preset scores
lesion interiors around 0.92, comfortably above a 0.5 threshold; the ``bad``
preset's gain suppression plateaus interiors near 0.37, below threshold, so it
produces widespread false negatives. That single-parameter failure mode is
what makes a (good, good, bad) ensemble separate the two fusion strategies.

Randomness comes from numpy's default PCG64 generator. Cohort streams are
derived as SeedSequence([base_seed, subject_index, stream, slice_index]) with
stream 0 for ground truth and stream k >= 1 for model k, so any subject or
model can be regenerated independently and parallel generation equals
sequential generation. Determinism holds within one version of this package;
simulated cohorts are not a cross-implementation contract.

Scores are quantized to single precision so the in-memory maps equal their
on-disk f32 payloads exactly.
"""

from __future__ import annotations

import math
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import codec
from .grid import BinaryMask, ScoreMap, Volume

__all__ = [
    "ModelQuality",
    "LesionSpec",
    "QUALITY_PRESETS",
    "ellipse_interior",
    "generate_gt",
    "simulate_score_map",
    "simulate_subject",
    "simulate_cohort",
]

SeedLike = int | np.random.SeedSequence


@dataclass(frozen=True)
class ModelQuality:
    """Score-map fidelity knobs: signal gain, constant bias, noise level."""

    gain: float
    bias: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.gain <= 1.0):
            raise ValueError(f"gain must lie in (0, 1], got {self.gain}")
        if self.bias < 0.0 or self.noise_sigma < 0.0:
            raise ValueError(
                f"bias and noise_sigma must be non-negative, got {self.bias}, {self.noise_sigma}"
            )


QUALITY_PRESETS = {
    "good": ModelQuality(gain=0.9, bias=0.02, noise_sigma=0.05),
    "bad": ModelQuality(gain=0.35, bias=0.02, noise_sigma=0.05),
}


@dataclass(frozen=True)
class LesionSpec:
    """How many elliptical lesions to draw, how big, on what square grid."""

    count_range: tuple[int, int] = (2, 6)
    radius_range: tuple[float, float] = (3.0, 12.0)
    image_size: int = 200

    def __post_init__(self):
        c_lo, c_hi = self.count_range
        r_lo, r_hi = self.radius_range
        if c_lo < 0 or c_hi < c_lo:
            raise ValueError(f"count_range must be 0 <= lo <= hi, got {self.count_range}")
        if r_lo <= 0 or r_hi < r_lo:
            raise ValueError(f"radius_range must be 0 < lo <= hi, got {self.radius_range}")
        if self.image_size < 2 * math.ceil(r_hi) + 1:
            raise ValueError(
                f"image_size {self.image_size} too small for lesions of radius {r_hi}"
            )


def ellipse_interior(
    width: int, height: int, center: tuple[float, float], axes: tuple[float, float]
) -> np.ndarray:
    """Boolean grid of pixels with ((x-cx)/a)^2 + ((y-cy)/b)^2 <= 1."""
    cx, cy = center
    a, b = axes
    if a <= 0 or b <= 0:
        raise ValueError(f"ellipse axes must be positive, got ({a}, {b})")
    ys, xs = np.mgrid[0:height, 0:width]
    return ((xs - cx) / a) ** 2 + ((ys - cy) / b) ** 2 <= 1.0


def generate_gt(spec: LesionSpec, seed: SeedLike) -> BinaryMask:
    """Draw a seed-determined union of filled ellipses on a zero grid.

    Per lesion the draw order is fixed: axis a, axis b, center x, center y.
    Centers are sampled so the whole ellipse fits inside the image.
    """
    rng = np.random.default_rng(seed)
    size = spec.image_size
    grid = np.zeros((size, size), dtype=np.uint8)
    count = int(rng.integers(spec.count_range[0], spec.count_range[1] + 1))
    for _ in range(count):
        a = float(rng.uniform(*spec.radius_range))
        b = float(rng.uniform(*spec.radius_range))
        margin_x, margin_y = math.ceil(a), math.ceil(b)
        cx = int(rng.integers(margin_x, size - margin_x))
        cy = int(rng.integers(margin_y, size - margin_y))
        grid[ellipse_interior(size, size, (cx, cy), (a, b))] = 1
    return BinaryMask(grid)


def _box_blur3(mask: np.ndarray) -> np.ndarray:
    """3x3 box blur where edge pixels average only their in-bounds neighbors."""
    padded = np.pad(mask.astype(np.float64), 1)
    ones = np.pad(np.ones_like(mask, dtype=np.float64), 1)
    sums = np.zeros(mask.shape, dtype=np.float64)
    counts = np.zeros(mask.shape, dtype=np.float64)
    h, w = mask.shape
    for dy in range(3):
        for dx in range(3):
            sums += padded[dy : dy + h, dx : dx + w]
            counts += ones[dy : dy + h, dx : dx + w]
    return sums / counts


def simulate_score_map(gt: BinaryMask, quality: ModelQuality, seed: SeedLike) -> ScoreMap:
    """One model's score map for a ground-truth slice, deterministic per seed."""
    rng = np.random.default_rng(seed)
    signal = _box_blur3(gt.data)
    noise = rng.standard_normal(signal.shape)
    raw = quality.gain * signal + quality.bias + quality.noise_sigma * noise
    return ScoreMap(np.clip(raw, 0.0, 1.0).astype(np.float32))


def _derived_seed(base_seed: int, subject_index: int, stream: int, slice_index: int):
    # stream 0 = ground truth, stream k >= 1 = model k
    return np.random.SeedSequence([int(base_seed), subject_index, stream, slice_index])


def _subject_id(index: int, n_subjects: int) -> str:
    return f"s{index + 1:0{max(2, len(str(n_subjects)))}d}"


def simulate_subject(
    subject_index: int,
    n_subjects: int,
    spec: LesionSpec,
    qualities: Sequence[ModelQuality],
    base_seed: int,
    out_dir: Path,
    slices: int = 1,
) -> codec.SubjectRecord:
    """Materialize one subject: gt.sgm plus model_<k>.sgm under <out>/<subject_id>/."""
    subject_id = _subject_id(subject_index, n_subjects)
    subject_dir = Path(out_dir) / subject_id
    subject_dir.mkdir(parents=True, exist_ok=True)

    gt_slices = [
        generate_gt(spec, _derived_seed(base_seed, subject_index, 0, j)) for j in range(slices)
    ]
    gt_path = subject_dir / "gt.sgm"
    codec.write_sgm(Volume(gt_slices), gt_path)

    model_paths = []
    for k, quality in enumerate(qualities, start=1):
        score_slices = [
            simulate_score_map(gt_slices[j], quality, _derived_seed(base_seed, subject_index, k, j))
            for j in range(slices)
        ]
        path = subject_dir / f"model_{k}.sgm"
        codec.write_sgm(Volume(score_slices), path)
        model_paths.append(path)
    return codec.SubjectRecord(
        subject_id=subject_id, gt_path=gt_path, model_paths=tuple(model_paths)
    )


def simulate_cohort(
    n_subjects: int,
    spec: LesionSpec,
    qualities: Sequence[ModelQuality],
    base_seed: int,
    out_dir,
    slices: int = 1,
    subject_runner: Callable | None = None,
) -> list[codec.SubjectRecord]:
    """Materialize a cohort of subjects plus a manifest.tsv under ``out_dir``.

    ``subject_runner`` may replace the sequential map over subjects (for a
    worker pool); per-subject seeds make any execution order equivalent. On
    failure, everything this call created is removed.
    """
    if n_subjects < 1:
        raise ValueError(f"need at least one subject, got {n_subjects}")
    if not qualities:
        raise ValueError("need at least one model quality")
    out_dir = Path(out_dir)
    created_root = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)

    def build(index: int) -> codec.SubjectRecord:
        return simulate_subject(index, n_subjects, spec, qualities, base_seed, out_dir, slices)

    runner = subject_runner or (lambda fn, idxs: map(fn, idxs))
    try:
        records = list(runner(build, range(n_subjects)))
        codec.write_manifest(records, out_dir / "manifest.tsv")
    except BaseException:
        if created_root:
            shutil.rmtree(out_dir, ignore_errors=True)
        else:
            for index in range(n_subjects):
                shutil.rmtree(out_dir / _subject_id(index, n_subjects), ignore_errors=True)
            (out_dir / "manifest.tsv").unlink(missing_ok=True)
        raise
    return records
