"""Dice similarity coefficient and cohort summary statistics.

DSC(GS, SEG) = 2 * |GS intersect SEG| / (|GS| + |SEG|)

where |.| counts foreground pixels. Two empty masks score 1.0 by convention:
agreeing that nothing is present is a correct prediction, and blank slices do
occur in real volumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import codec
from .fusion import FusionConfig, binarize, fuse_volumes
from .grid import BinaryMask, Volume, count_foreground, overlap_count

__all__ = [
    "DscReport",
    "SummaryStats",
    "DSC_MODES",
    "dsc",
    "dsc_mode",
    "summary_stats",
    "evaluate_subject",
    "evaluate_subjects",
]

DSC_MODES = ("volume", "per_slice_mean")


@dataclass(frozen=True)
class SummaryStats:
    """The six per-method statistics reported for a cohort of DSC values."""

    mean: float
    max: float
    q75: float
    median: float
    q25: float
    min: float


@dataclass(frozen=True)
class DscReport:
    """Per-subject DSC values keyed by method name."""

    subject_id: str
    per_method: Mapping[str, float]

    def __post_init__(self):
        for method, value in self.per_method.items():
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"DSC for {method!r} is {value}, outside [0, 1]")


def dsc(gs: BinaryMask | Volume, seg: BinaryMask | Volume) -> float:
    """Dice similarity coefficient between two same-shape binary masks or volumes."""
    overlap = overlap_count(gs, seg)  # also validates shapes and kinds
    total = count_foreground(gs) + count_foreground(seg)
    if total == 0:
        return 1.0
    return 2.0 * overlap / total


def dsc_mode(gs: Volume, seg: Volume, mode: str = "volume") -> float:
    """DSC of two mask volumes under a chosen aggregation.

    ``volume`` pools foreground and overlap counts over all slices before the
    ratio (one 3D set comparison, the default). ``per_slice_mean`` averages
    the slice-wise DSCs, skipping slices where both masks are empty; if every
    slice is empty in both volumes the result is 1.0, matching the empty-set
    convention of :func:`dsc`.
    """
    if mode not in DSC_MODES:
        raise ValueError(f"mode must be one of {DSC_MODES}, got {mode!r}")
    if mode == "volume":
        return dsc(gs, seg)
    overlap_count(gs, seg)  # shape validation up front
    values = []
    for a, b in zip(gs, seg):
        if count_foreground(a) == 0 and count_foreground(b) == 0:
            continue
        values.append(dsc(a, b))
    if not values:
        return 1.0
    return math.fsum(values) / len(values)


def summary_stats(values: Sequence[float]) -> SummaryStats:
    """Mean, min/max, and quartiles of a non-empty list of reals.

    Quantiles interpolate linearly between order statistics at rank (n-1)*p,
    the inclusive convention, so [1, 2, 3, 4] yields q25=1.75, median=2.5,
    q75=3.25. The mean uses exact summation and is therefore independent of
    input order.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("summary_stats requires at least one value")
    q25, median, q75 = np.percentile(vals, [25.0, 50.0, 75.0])
    return SummaryStats(
        mean=math.fsum(vals) / len(vals),
        max=max(vals),
        q75=float(q75),
        median=float(median),
        q25=float(q25),
        min=min(vals),
    )


def _method_names(n_models: int) -> list[str]:
    return [f"model{k + 1}" for k in range(n_models)] + ["msm", "mbm"]


def evaluate_subject(
    record: "codec.SubjectRecord", config: FusionConfig | None = None, mode: str = "volume"
) -> DscReport:
    """Load one subject and score every individual model plus both fusions.

    Failures are re-raised with the subject id and offending file attached.
    """
    config = config or FusionConfig()
    try:
        gt = codec.read_sgm(record.gt_path, kind="mask")
    except (OSError, ValueError) as exc:
        raise ValueError(f"subject {record.subject_id!r}: ground truth: {exc}") from exc
    models: list[Volume] = []
    for path in record.model_paths:
        try:
            vol = codec.read_sgm(path, kind="score")
        except (OSError, ValueError) as exc:
            raise ValueError(f"subject {record.subject_id!r}: {exc}") from exc
        if (vol.width, vol.height, vol.depth) != (gt.width, gt.height, gt.depth):
            raise ValueError(
                f"subject {record.subject_id!r}: model volume {path} is "
                f"{vol.shape_str()}, ground truth {record.gt_path} is {gt.shape_str()}"
            )
        models.append(vol)

    per_method: dict[str, float] = {}
    for k, vol in enumerate(models):
        seg = Volume(binarize(s, config.threshold) for s in vol)
        per_method[f"model{k + 1}"] = dsc_mode(gt, seg, mode)
    for method in ("msm", "mbm"):
        fused = fuse_volumes(models, FusionConfig(threshold=config.threshold, method=method))
        per_method[method] = dsc_mode(gt, fused, mode)
    return DscReport(subject_id=record.subject_id, per_method=per_method)


def evaluate_subjects(
    records: Sequence["codec.SubjectRecord"],
    config: FusionConfig | None = None,
    mode: str = "volume",
    reports: Sequence[DscReport] | None = None,
) -> tuple[list[DscReport], dict[str, SummaryStats]]:
    """Evaluate a cohort: per-subject reports plus per-method summary stats.

    Every record must reference the same number of models so the method set
    is uniform. Results are independent of record order (up to the matching
    reordering of the report list). Precomputed ``reports`` may be supplied
    by callers that parallelize :func:`evaluate_subject` themselves.
    """
    if not records:
        raise ValueError("no subjects to evaluate")
    n_models = len(records[0].model_paths)
    for rec in records:
        if len(rec.model_paths) != n_models:
            raise ValueError(
                f"subject {rec.subject_id!r} has {len(rec.model_paths)} models, "
                f"expected {n_models} as in subject {records[0].subject_id!r}"
            )
    if reports is None:
        reports = [evaluate_subject(rec, config, mode) for rec in records]
    else:
        reports = list(reports)
    stats = {
        method: summary_stats([rep.per_method[method] for rep in reports])
        for method in _method_names(n_models)
    }
    return list(reports), stats
