"""Command-line front end binding the library into reproducible pipelines.

Exit codes: 0 on success with the requested artifact fully written, 1 on
runtime or data errors, 2 on usage errors. File writes are atomic, so a
failing invocation never leaves partial outputs behind. All subcommands are
deterministic for identical inputs and flags; ``--jobs`` parallelism yields
byte-identical output to sequential runs.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ThreadPoolExecutor

from . import codec, fusion, metrics, overlay, preprocess, simulator
from .grid import Volume

_MODE_FLAGS = {"volume": "volume", "per-slice-mean": "per_slice_mean"}


def _threshold(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError(f"threshold must lie strictly inside (0, 1), got {value}")
    return value


def _model_presets(text: str) -> list[simulator.ModelQuality]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    if not names:
        raise argparse.ArgumentTypeError("at least one model preset is required")
    qualities = []
    for name in names:
        if name not in simulator.QUALITY_PRESETS:
            raise argparse.ArgumentTypeError(
                f"unknown preset {name!r}; choose from {sorted(simulator.QUALITY_PRESETS)}"
            )
        qualities.append(simulator.QUALITY_PRESETS[name])
    return qualities


def _int_pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers 'lo,hi', got {text!r}") from None
    return lo, hi


def _float_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected decimals 'lo,hi', got {text!r}") from None
    return lo, hi


def _rect(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"expected 'x,y,w,h', got {text!r}")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers 'x,y,w,h', got {text!r}") from None


def _load_score_volumes(paths: list[str]) -> list[Volume]:
    volumes = []
    for path in paths:
        volumes.append((path, codec.read_sgm(path, kind="score")))
    first_path, first = volumes[0]
    for path, vol in volumes[1:]:
        if (vol.width, vol.height, vol.depth) != (first.width, first.height, first.depth):
            raise ValueError(
                f"shape mismatch: {path} is {vol.shape_str()}, "
                f"but {first_path} is {first.shape_str()}"
            )
    return [vol for _, vol in volumes]


def _cmd_fuse(args: argparse.Namespace) -> int:
    volumes = _load_score_volumes(args.inputs)
    config = fusion.FusionConfig(threshold=args.threshold, method=args.method)
    fused = fusion.fuse_volumes(volumes, config)
    codec.write_sgm(fused, args.output)
    return 0


def _cmd_dsc(args: argparse.Namespace) -> int:
    gt = codec.read_sgm(args.gt, kind="mask")
    seg = codec.read_sgm(args.seg, kind="mask")
    value = metrics.dsc_mode(gt, seg, _MODE_FLAGS[args.mode])
    print(f"{value:.4f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    records = codec.read_manifest(args.manifest)
    if not records:
        raise ValueError(f"no subjects in manifest {args.manifest}")
    config = fusion.FusionConfig(threshold=args.threshold)
    mode = _MODE_FLAGS[args.mode]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(lambda r: metrics.evaluate_subject(r, config, mode), records))
    else:
        reports = None
    reports, _stats = metrics.evaluate_subjects(records, config, mode, reports=reports)
    codec.write_csv_report(reports, args.out_csv)
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    with open(args.csv, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if rows and args.column not in rows[0]:
        raise ValueError(f"column {args.column!r} not found in {args.csv}")
    values = []
    for line_no, row in enumerate(rows, start=2):  # header is line 1
        if args.method is not None:
            if row.get("method") != args.method:
                continue
            if row.get("subject") in codec.STAT_ROW_LABELS:
                continue  # skip the report's own stats block
        text = row[args.column]
        try:
            values.append(float(text))
        except (TypeError, ValueError):
            raise ValueError(
                f"{args.csv}: line {line_no}: {args.column}={text!r} is not a number"
            ) from None
    if not values:
        raise ValueError(f"no values for column {args.column!r}"
                         + (f" and method {args.method!r}" if args.method else ""))
    stats = metrics.summary_stats(values)
    for label in codec.STAT_ROW_LABELS:
        print(f"{label},{getattr(stats, label):.4f}")
    return 0


def _cmd_overlay(args: argparse.Namespace) -> int:
    background = codec.read_sgm(args.background, kind="intensity")
    gt = codec.read_sgm(args.gt, kind="mask")
    seg = codec.read_sgm(args.seg, kind="mask")
    for name, vol in (("--gt", gt), ("--seg", seg)):
        if (vol.width, vol.height, vol.depth) != (
            background.width,
            background.height,
            background.depth,
        ):
            raise ValueError(
                f"{name} volume is {vol.shape_str()}, background is {background.shape_str()}"
            )
    if not (0 <= args.slice < background.depth):
        raise ValueError(f"slice {args.slice} out of range for depth {background.depth}")
    image = overlay.render_overlay(background[args.slice], gt[args.slice], seg[args.slice])
    if args.zoom is not None:
        image = overlay.zoom_inset(image, args.zoom, args.factor)
    codec.write_ppm(image, args.out)
    return 0


def _identity_affine(params: preprocess.AffineParams) -> bool:
    return params == preprocess.AffineParams()


def _cmd_preprocess(args: argparse.Namespace) -> int:
    volume = codec.read_sgm(args.input, kind="intensity")
    label = codec.read_sgm(args.label, kind="mask") if args.label else None
    if label is not None and args.label_output is None:
        raise ValueError("--label requires --label-output")
    if label is not None and (label.width, label.height, label.depth) != (
        volume.width,
        volume.height,
        volume.depth,
    ):
        raise ValueError(
            f"label volume is {label.shape_str()}, input is {volume.shape_str()}"
        )

    img_slices = list(volume)
    label_slices = list(label) if label is not None else None

    if args.width is not None or args.height is not None:
        if args.width is None or args.height is None:
            raise ValueError("--width and --height must be given together")
        img_slices = [
            preprocess.crop_pad_center(s, args.width, args.height, fill=args.fill)
            for s in img_slices
        ]
        if label_slices is not None:
            label_slices = [
                preprocess.crop_pad_center(s, args.width, args.height, fill=0)
                for s in label_slices
            ]

    if args.normalize == "slice":
        img_slices = [preprocess.zscore_normalize(s) for s in img_slices]
    elif args.normalize == "volume":
        img_slices = list(preprocess.zscore_normalize_volume(Volume(img_slices)))

    params = preprocess.AffineParams(
        rotation=args.rotation,
        shear_x=args.shear_x,
        shear_y=args.shear_y,
        scale_x=args.scale_x,
        scale_y=args.scale_y,
    )
    if not _identity_affine(params):
        if label_slices is not None:
            pairs = [
                preprocess.affine_augment_pair(img, lab, params)
                for img, lab in zip(img_slices, label_slices)
            ]
            img_slices = [img for img, _ in pairs]
            label_slices = [lab for _, lab in pairs]
        else:
            img_slices = [preprocess.affine_augment(s, params) for s in img_slices]

    codec.write_sgm(Volume(img_slices), args.output)
    if label_slices is not None:
        codec.write_sgm(Volume(label_slices), args.label_output)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = simulator.LesionSpec(
        count_range=args.count_range, radius_range=args.radius_range, image_size=args.size
    )
    runner = None
    if args.jobs > 1:
        def runner(fn, indices):  # noqa: ANN001 - local adapter
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                return list(pool.map(fn, indices))

    simulator.simulate_cohort(
        n_subjects=args.subjects,
        spec=spec,
        qualities=args.models,
        base_seed=args.seed,
        out_dir=args.out,
        slices=args.slices,
        subject_runner=runner,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segfuse",
        description="Fuse ensembles of segmentation score maps and evaluate them with Dice scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse N score volumes into one mask volume")
    p.add_argument("--method", choices=fusion.METHODS, required=True,
                   help="msm: average then threshold; mbm: threshold, average, threshold")
    p.add_argument("--threshold", type=_threshold, default=0.5)
    p.add_argument("--inputs", nargs="+", required=True, metavar="SGM",
                   help="score volumes (f32 SGM), all the same shape")
    p.add_argument("--output", required=True, help="fused mask volume (u8 SGM)")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("dsc", help="print the Dice coefficient of two mask volumes")
    p.add_argument("gt", help="ground-truth mask volume (u8 SGM)")
    p.add_argument("seg", help="segmentation mask volume (u8 SGM)")
    p.add_argument("--mode", choices=sorted(_MODE_FLAGS), default="volume")
    p.set_defaults(func=_cmd_dsc)

    p = sub.add_parser("eval", help="evaluate every manifest subject and write a CSV report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--threshold", type=_threshold, default=0.5)
    p.add_argument("--mode", choices=sorted(_MODE_FLAGS), default="volume")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--jobs", type=int, default=1, help="worker threads over subjects")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="print the six summary statistics of a CSV column")
    p.add_argument("--csv", required=True)
    p.add_argument("--column", default="dsc")
    p.add_argument("--method", default=None,
                   help="filter report rows to one method, skipping the stats block")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("overlay", help="render a truth-vs-segmentation error overlay as PPM")
    p.add_argument("--background", required=True, help="intensity volume (f32 SGM)")
    p.add_argument("--gt", required=True, help="ground-truth mask volume")
    p.add_argument("--seg", required=True, help="segmentation mask volume")
    p.add_argument("--slice", type=int, default=0)
    p.add_argument("--zoom", type=_rect, default=None, metavar="X,Y,W,H",
                   help="rectangle to magnify into the upper-left corner")
    p.add_argument("--factor", type=int, default=4, help="zoom magnification")
    p.add_argument("--out", required=True, help="output PPM path")
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser("preprocess", help="crop/pad, normalize, and augment an intensity volume")
    p.add_argument("--input", required=True, help="intensity volume (f32 SGM)")
    p.add_argument("--output", required=True)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--fill", type=float, default=0.0, help="pad value for the image")
    p.add_argument("--normalize", choices=("slice", "volume", "none"), default="slice",
                   help="z-score per slice, over the whole volume, or not at all")
    p.add_argument("--rotation", type=float, default=0.0, help="degrees")
    p.add_argument("--shear-x", type=float, default=0.0)
    p.add_argument("--shear-y", type=float, default=0.0)
    p.add_argument("--scale-x", type=float, default=1.0)
    p.add_argument("--scale-y", type=float, default=1.0)
    p.add_argument("--label", default=None, help="mask volume transformed alongside the image")
    p.add_argument("--label-output", default=None)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("simulate", help="materialize a synthetic cohort plus manifest")
    p.add_argument("--subjects", type=int, required=True)
    p.add_argument("--models", type=_model_presets, required=True, metavar="PRESET[,PRESET...]",
                   help=f"comma list of presets from {sorted(simulator.QUALITY_PRESETS)}")
    p.add_argument("--size", type=int, default=200, help="square slice size in pixels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="cohort output directory")
    p.add_argument("--slices", type=int, default=1, help="slices per subject volume")
    p.add_argument("--count-range", type=_int_pair, default=(2, 6), metavar="LO,HI")
    p.add_argument("--radius-range", type=_float_pair, default=(3.0, 12.0), metavar="LO,HI")
    p.add_argument("--jobs", type=int, default=1, help="worker threads over subjects")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    """Console-script entry point."""
    raise SystemExit(main())


if __name__ == "__main__":
    run()
