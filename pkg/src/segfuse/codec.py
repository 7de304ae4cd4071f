"""Bit-exact file formats and subject-manifest ingestion.

SGM volume format
    One ASCII header line ``SGM1 <width> <height> <depth> <dtype>\\n`` with
    single spaces, followed by exactly width*height*depth payload values in
    little-endian order, slice-major then row-major. ``dtype`` is ``u8`` for
    {0,1} masks (one byte per pixel) or ``f32`` for score and intensity data
    (4-byte IEEE-754 per pixel). Scores are range-checked to [0, 1] on load.

Manifest format
    UTF-8 TSV, one subject per line::

        subject_id<TAB>gt_path<TAB>model_path_1;model_path_2;...[<TAB>intensity_path]

    Blank lines and lines starting with ``#`` are ignored. Relative paths are
    resolved against the manifest's directory, so cohort folders relocate
    cleanly.

CSV report
    Header ``subject,method,dsc``, one row per (subject, method) with the DSC
    printed to 4 decimal places, then a trailing stats block per method with
    rows mean/max/q75/median/q25/min in the same three-column layout.

All writers go through an atomic temp-file + rename, so a failed write never
leaves a partial artifact behind.
"""

from __future__ import annotations

import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .grid import BinaryMask, IntensityMap, ScoreMap, Volume

if TYPE_CHECKING:
    from .metrics import DscReport
    from .overlay import RgbImage

__all__ = [
    "SgmParseError",
    "ManifestError",
    "SubjectRecord",
    "read_sgm",
    "write_sgm",
    "write_ppm",
    "read_manifest",
    "write_manifest",
    "write_csv_report",
    "STAT_ROW_LABELS",
]

_MAGIC = "SGM1"
_DTYPE_FOR_KIND = {"mask": "u8", "score": "f32", "intensity": "f32"}
_KIND_FOR_DTYPE = {"u8": ("mask",), "f32": ("score", "intensity")}
_SLICE_CLS = {"mask": BinaryMask, "score": ScoreMap, "intensity": IntensityMap}

STAT_ROW_LABELS = ("mean", "max", "q75", "median", "q25", "min")


class SgmParseError(ValueError):
    """Malformed SGM file; ``offset`` is the byte position of the defect."""

    def __init__(self, path, offset: int, message: str):
        self.offset = int(offset)
        super().__init__(f"{path}: byte {offset}: {message}")


class ManifestError(ValueError):
    """Malformed manifest; ``line_no`` is 1-based."""

    def __init__(self, path, line_no: int, message: str):
        self.line_no = int(line_no)
        super().__init__(f"{path}: line {line_no}: {message}")


@dataclass(frozen=True)
class SubjectRecord:
    """Paths binding one subject's ground truth and model score volumes."""

    subject_id: str
    gt_path: Path
    model_paths: tuple[Path, ...]
    intensity_path: Path | None = None

    def __post_init__(self):
        if not self.subject_id:
            raise ValueError("subject_id must be non-empty")
        if not self.model_paths:
            raise ValueError(f"subject {self.subject_id!r}: model_paths must be non-empty")


@contextmanager
def _atomic_write(path, mode: str):
    """Write to a temp file next to ``path`` and rename on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def read_sgm(path, kind: str | None = None) -> Volume:
    """Parse an SGM file into a Volume.

    ``kind`` selects how the payload is interpreted: u8 files are always
    masks; f32 files default to scores (range-checked to [0, 1]) and can be
    loaded as unchecked-but-finite intensities with ``kind="intensity"``.
    """
    path = Path(path)
    blob = path.read_bytes()

    nl = blob.find(b"\n")
    if nl < 0:
        raise SgmParseError(path, len(blob), "missing header newline")
    try:
        header = blob[:nl].decode("ascii")
    except UnicodeDecodeError:
        raise SgmParseError(path, 0, "header is not ASCII") from None
    tokens = header.split(" ")
    if not tokens or tokens[0] != _MAGIC:
        raise SgmParseError(path, 0, f"bad magic {tokens[0] if tokens else ''!r}, expected {_MAGIC!r}")
    if len(tokens) != 5:
        raise SgmParseError(path, 0, f"header has {len(tokens)} fields, expected 5")
    try:
        width, height, depth = (int(t) for t in tokens[1:4])
    except ValueError:
        raise SgmParseError(path, 0, f"non-integer dimensions in header {header!r}") from None
    if width < 1 or height < 1 or depth < 1:
        raise SgmParseError(path, 0, f"non-positive dimensions {width}x{height}x{depth}")
    dtype = tokens[4]
    if dtype not in _KIND_FOR_DTYPE:
        raise SgmParseError(path, 0, f"unknown dtype {dtype!r}")

    if kind is None:
        kind = _KIND_FOR_DTYPE[dtype][0]
    elif kind not in _SLICE_CLS:
        raise ValueError(f"unknown volume kind {kind!r}")
    elif kind not in _KIND_FOR_DTYPE[dtype]:
        raise ValueError(f"{path}: dtype {dtype!r} cannot be loaded as kind {kind!r}")

    payload_start = nl + 1
    itemsize = 4 if dtype == "f32" else 1
    expected = width * height * depth * itemsize
    available = len(blob) - payload_start
    if available < expected:
        raise SgmParseError(
            path, len(blob), f"payload truncated: have {available} of {expected} bytes"
        )
    if available > expected:
        raise SgmParseError(
            path, payload_start + expected, f"{available - expected} trailing bytes after payload"
        )

    raw = np.frombuffer(blob, dtype="<f4" if dtype == "f32" else np.uint8, offset=payload_start)
    if dtype == "u8":
        bad = ~((raw == 0) | (raw == 1))
        if bad.any():
            idx = int(np.argmax(bad))
            raise SgmParseError(
                path, payload_start + idx, f"mask byte {raw[idx]} is not 0 or 1"
            )
        values = raw
    else:
        values = raw.astype(np.float64)
        if kind == "score":
            bad = ~((values >= 0.0) & (values <= 1.0))
        else:
            bad = ~np.isfinite(values)
        if bad.any():
            idx = int(np.argmax(bad))
            raise SgmParseError(
                path,
                payload_start + 4 * idx,
                f"{kind} value {values[idx]!r} at flat index {idx} is invalid",
            )

    cls = _SLICE_CLS[kind]
    grids = values.reshape(depth, height, width)
    return Volume(cls(grids[k]) for k in range(depth))


def write_sgm(volume: Volume, path) -> None:
    """Serialize a Volume to the SGM byte format (atomic)."""
    dtype = _DTYPE_FOR_KIND[volume.kind]
    header = f"{_MAGIC} {volume.width} {volume.height} {volume.depth} {dtype}\n".encode("ascii")
    stacked = volume.stacked()
    payload = stacked.astype("<f4" if dtype == "f32" else np.uint8).tobytes()
    with _atomic_write(path, "wb") as f:
        f.write(header)
        f.write(payload)


def write_ppm(image: "RgbImage", path) -> None:
    """Serialize an RGB image as binary PPM ("P6", maxval 255), atomically."""
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    with _atomic_write(path, "wb") as f:
        f.write(header)
        f.write(image.data.tobytes())


def read_manifest(path) -> list[SubjectRecord]:
    """Parse a subject manifest, preserving subject and model order."""
    path = Path(path)
    base = path.parent

    def resolve(p: str) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    records: list[SubjectRecord] = []
    seen: set[str] = set()
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise ManifestError(path, line_no, f"expected 3 or 4 tab-separated fields, got {len(fields)}")
        subject_id, gt_path, model_field = fields[0], fields[1], fields[2]
        if not subject_id:
            raise ManifestError(path, line_no, "empty subject id")
        if subject_id in seen:
            raise ManifestError(path, line_no, f"duplicate subject id {subject_id!r}")
        if not gt_path:
            raise ManifestError(path, line_no, "empty ground-truth path")
        model_paths = model_field.split(";")
        if not model_field or any(not p for p in model_paths):
            raise ManifestError(path, line_no, "model path list is empty or has empty entries")
        intensity = fields[3] if len(fields) == 4 else None
        if intensity == "":
            raise ManifestError(path, line_no, "empty intensity path")
        seen.add(subject_id)
        records.append(
            SubjectRecord(
                subject_id=subject_id,
                gt_path=resolve(gt_path),
                model_paths=tuple(resolve(p) for p in model_paths),
                intensity_path=resolve(intensity) if intensity else None,
            )
        )
    return records


def write_manifest(records: Sequence[SubjectRecord], path) -> None:
    """Write a manifest; paths are stored relative to the manifest directory when possible."""
    path = Path(path)
    base = path.parent.resolve()

    def fmt(p: Path) -> str:
        p = Path(p)
        try:
            return os.path.relpath(p.resolve(), base)
        except ValueError:  # different drive on some platforms
            return str(p)

    lines = []
    for rec in records:
        fields = [rec.subject_id, fmt(rec.gt_path), ";".join(fmt(p) for p in rec.model_paths)]
        if rec.intensity_path is not None:
            fields.append(fmt(rec.intensity_path))
        lines.append("\t".join(fields))
    with _atomic_write(path, "w") as f:
        f.write("\n".join(lines) + ("\n" if lines else ""))


def write_csv_report(reports: Sequence["DscReport"], path) -> None:
    """Write per-subject DSC rows plus the per-method summary-stats block.

    Values are printed to 4 decimal places. An empty report list yields just
    the header. All reports must share one method set (same names, same order).
    """
    lines = ["subject,method,dsc"]
    if reports:
        methods = list(reports[0].per_method)
        for rep in reports:
            if list(rep.per_method) != methods:
                raise ValueError(
                    f"subject {rep.subject_id!r} has methods {list(rep.per_method)}, expected {methods}"
                )
            if "," in rep.subject_id or "\n" in rep.subject_id:
                raise ValueError(f"subject id {rep.subject_id!r} cannot contain commas or newlines")
            for m in methods:
                lines.append(f"{rep.subject_id},{m},{rep.per_method[m]:.4f}")

        from .metrics import summary_stats  # function-level import avoids a module cycle

        for m in methods:
            stats = summary_stats([rep.per_method[m] for rep in reports])
            for label in STAT_ROW_LABELS:
                lines.append(f"{label},{m},{getattr(stats, label):.4f}")

    with _atomic_write(path, "w") as f:
        f.write("\n".join(lines) + "\n")
