"""Ensemble fusion and Dice evaluation for binary segmentation.

Fuses N per-pixel score maps into one segmentation either by averaging the
scores and thresholding (msm) or by thresholding each map and majority-style
averaging of the masks (mbm), then evaluates the results against ground truth
with the Dice similarity coefficient. Ships a bit-exact volume format, a
preprocessing toolkit, error-overlay rendering, and a seeded simulator for
desk-scale ensemble experiments.
"""

from .codec import (
    ManifestError,
    SgmParseError,
    SubjectRecord,
    read_manifest,
    read_sgm,
    write_csv_report,
    write_manifest,
    write_ppm,
    write_sgm,
)
from .fusion import (
    METHODS,
    FusionConfig,
    binarize,
    fuse_mbm,
    fuse_msm,
    fuse_slices,
    fuse_volumes,
    mean_maps,
)
from .grid import (
    BinaryMask,
    IntensityMap,
    ScoreMap,
    ShapeMismatchError,
    Volume,
    cast_mask_to_scores,
    count_foreground,
    overlap_count,
)
from .metrics import (
    DSC_MODES,
    DscReport,
    SummaryStats,
    dsc,
    dsc_mode,
    evaluate_subject,
    evaluate_subjects,
    summary_stats,
)
from .overlay import RgbImage, render_overlay, zoom_inset
from .preprocess import (
    AffineParams,
    affine_augment,
    affine_augment_pair,
    crop_pad_center,
    zscore_normalize,
    zscore_normalize_volume,
)
from .simulator import (
    QUALITY_PRESETS,
    LesionSpec,
    ModelQuality,
    ellipse_interior,
    generate_gt,
    simulate_cohort,
    simulate_score_map,
    simulate_subject,
)

__version__ = "0.1.0"
