#!/usr/bin/env python3
"""Render per-method error overlays for one subject of a cohort manifest.

Writes one PPM per segmentation source (each model binarized, msm, mbm): red
marks truth-only pixels (false negatives), blue segmentation-only pixels
(false positives), green the agreement. The background is the subject's
intensity volume when the manifest provides one, otherwise the mean model
score map.

Example:
    python scripts/render_error_overlays.py --manifest /tmp/cohort/manifest.tsv \
        --subject s01 --out-dir /tmp/panels --zoom 60,60,40,40
"""

import argparse
from pathlib import Path

from segfuse import (
    FusionConfig,
    IntensityMap,
    binarize,
    fuse_volumes,
    mean_maps,
    read_manifest,
    read_sgm,
    render_overlay,
    write_ppm,
    zoom_inset,
)


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--subject", default=None, help="subject id (default: first)")
    parser.add_argument("--slice", type=int, default=0)
    parser.add_argument("--threshold", type=float, default=0.5)
    parser.add_argument("--zoom", default=None, metavar="X,Y,W,H")
    parser.add_argument("--factor", type=int, default=4)
    parser.add_argument("--out-dir", required=True)
    return parser.parse_args()


def main():
    args = parse_args()
    records = read_manifest(args.manifest)
    if args.subject is None:
        record = records[0]
    else:
        by_id = {r.subject_id: r for r in records}
        record = by_id[args.subject]

    gt = read_sgm(record.gt_path, kind="mask")
    models = [read_sgm(p, kind="score") for p in record.model_paths]
    k = args.slice

    if record.intensity_path is not None:
        background = read_sgm(record.intensity_path, kind="intensity")[k]
    else:
        background = IntensityMap(mean_maps([m[k] for m in models]).data)

    segmentations = {
        f"model{i + 1}": binarize(m[k], args.threshold) for i, m in enumerate(models)
    }
    for method in ("msm", "mbm"):
        fused = fuse_volumes(models, FusionConfig(threshold=args.threshold, method=method))
        segmentations[method] = fused[k]

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    zoom = tuple(int(v) for v in args.zoom.split(",")) if args.zoom else None
    for name, seg in segmentations.items():
        image = render_overlay(background, gt[k], seg)
        if zoom is not None:
            image = zoom_inset(image, zoom, args.factor)
        path = out_dir / f"{record.subject_id}_slice{k}_{name}.ppm"
        write_ppm(image, path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
