"""On-disk dataset format: one CSV per recording plus a JSON manifest.

CSV contract: header line exactly ``t,ax,ay,az``; ``t`` in seconds; values
decimal with up to 9 significant digits. Optional leading ``# key=value``
comment lines are tolerated on read (``# fs=...`` supplies the sampling
rate when the caller does not). Write output is byte-deterministic.

Manifest contract::

    {
      "unit": "g",
      "fs": 500,
      "subjects": [{"subject_id": ..., "height_m": ..., ...}, ...],
      "recordings": [{"subject_id": ..., "style": ..., "sensor": ...,
                      "path": ..., "fs": ..., "n_samples": ...}, ...]
    }

Sensor groups of one (subject, style) are truncated to their common
minimum length on load; nothing is ever resampled.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from runstyle.domain import (
    ACCEL_UNIT,
    Dataset,
    ImuRecording,
    SensorLocation,
    StyleLabel,
    SubjectMeta,
)

CSV_HEADER = "t,ax,ay,az"
MANIFEST_NAME = "manifest.json"


class CsvFormatError(ValueError):
    """The file does not follow the CSV contract (bad header or cell)."""


class CsvDataError(ValueError):
    """The file parses but carries non-finite values."""


class ManifestError(ValueError):
    """The manifest is inconsistent with itself or with the files on disk."""


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    style: str
    sensor: str
    path: str
    fs: float
    n_samples: int


def read_imu_csv(path, subject_id: str, style: StyleLabel, sensor: SensorLocation,
                 fs: float | None = None) -> ImuRecording:
    """Read one recording CSV; ``fs`` falls back to a ``# fs=...`` comment."""
    path = Path(path)
    comment_fs = None
    header_line_no = 1
    with open(path, "r") as fh:
        line = fh.readline()
        while line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("fs="):
                comment_fs = float(body[3:])
            header_line_no += 1
            line = fh.readline()
        if line.strip() != CSV_HEADER:
            raise CsvFormatError(
                f"{path}: line {header_line_no}: expected header {CSV_HEADER!r}, "
                f"got {line.strip()!r}")

    if fs is None:
        fs = comment_fs
    if fs is None:
        raise CsvFormatError(f"{path}: sampling rate not given and no '# fs=' comment")

    try:
        frame = pd.read_csv(path, comment="#", dtype=np.float64)
    except ValueError:
        frame = pd.read_csv(path, comment="#", dtype=str)
        for col in frame.columns:
            bad = pd.to_numeric(frame[col], errors="coerce").isna() & frame[col].notna()
            if bad.any():
                row = int(np.flatnonzero(bad.to_numpy())[0])
                raise CsvFormatError(
                    f"{path}: non-numeric value {frame[col].iloc[row]!r} in column "
                    f"{col!r}, data row {row}") from None
        raise  # pragma: no cover - unreachable unless pandas disagrees

    values = frame[["ax", "ay", "az"]].to_numpy(dtype=np.float64)
    if not np.isfinite(values).all():
        rows = np.flatnonzero(~np.isfinite(values).all(axis=1))
        raise CsvDataError(f"{path}: non-finite value at data row {rows[0]} "
                           f"({len(rows)} rows affected)")
    return ImuRecording(subject_id, style, sensor, fs, values)


def write_imu_csv(recording: ImuRecording, path) -> None:
    """Write one recording CSV (header + one row per sample, 9 significant digits)."""
    if recording.n_samples == 0:
        raise ValueError(f"refusing to write empty recording to {path}")
    path = Path(path)
    t = np.arange(recording.n_samples) / recording.fs
    frame = pd.DataFrame({
        "t": t,
        "ax": recording.samples[:, 0],
        "ay": recording.samples[:, 1],
        "az": recording.samples[:, 2],
    })
    try:
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            frame.to_csv(fh, header=False, index=False, float_format="%.9g",
                         lineterminator="\n")
    except OSError as exc:
        raise OSError(f"failed writing recording to {path}: {exc}") from exc


def recording_filename(subject_id: str, style: StyleLabel,
                       sensor: SensorLocation) -> str:
    return f"{subject_id}_{style.key}_{sensor.key}.csv"


def _subject_to_json(meta: SubjectMeta) -> dict:
    return {k: v for k, v in asdict(meta).items() if v is not None}


def write_dataset(dataset: Dataset, out_dir, overwrite: bool = False) -> Path:
    """Write all recordings plus the manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not overwrite:
        raise FileExistsError(f"output directory {out_dir} is not empty "
                              f"(pass overwrite to replace)")
    out_dir.mkdir(parents=True, exist_ok=True)

    fs_values = {rec.fs for rec in dataset.recordings}
    if len(fs_values) != 1:
        raise ValueError(f"all recordings must share one sampling rate, got {fs_values}")
    fs = fs_values.pop()

    entries = []
    for rec in dataset.recordings:
        name = recording_filename(rec.subject_id, rec.style, rec.sensor)
        write_imu_csv(rec, out_dir / name)
        entries.append(ManifestEntry(rec.subject_id, rec.style.key, rec.sensor.key,
                                     name, rec.fs, rec.n_samples))

    manifest = {
        "unit": ACCEL_UNIT,
        "fs": fs,
        "subjects": [_subject_to_json(s) for s in dataset.subjects],
        "recordings": [asdict(e) for e in entries],
    }
    manifest_path = out_dir / MANIFEST_NAME
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return manifest_path


def load_manifest(path) -> Dataset:
    """Load a dataset from its manifest, aligning sensor groups to equal length."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    root = path.parent
    with open(path) as fh:
        manifest = json.load(fh)

    unit = manifest.get("unit")
    if unit != ACCEL_UNIT:
        raise ManifestError(f"{path}: unit mismatch: expected {ACCEL_UNIT!r}, "
                            f"got {unit!r}")
    fs = float(manifest["fs"])

    subjects = tuple(SubjectMeta(**entry) for entry in manifest.get("subjects", []))

    raw_entries = manifest.get("recordings", [])
    entries = [ManifestEntry(**e) for e in raw_entries]

    seen: set[tuple[str, str, str]] = set()
    for e in entries:
        key = (e.subject_id, e.style, e.sensor)
        if key in seen:
            raise ManifestError(f"{path}: duplicate recording key {key}")
        seen.add(key)
        if e.fs != fs:
            raise ManifestError(f"{path}: entry {key} has fs={e.fs:g}, manifest "
                                f"fs={fs:g}; resampling is not supported")

    missing = [e.path for e in entries if not (root / e.path).is_file()]
    if missing:
        raise ManifestError(f"{path}: {len(missing)} referenced files missing: "
                            + ", ".join(missing))

    recordings = []
    for e in entries:
        rec = read_imu_csv(root / e.path, e.subject_id, StyleLabel.from_key(e.style),
                           SensorLocation.from_key(e.sensor), fs=e.fs)
        if rec.n_samples != e.n_samples:
            raise ManifestError(f"{path}: {e.path} has {rec.n_samples} samples, "
                                f"manifest says {e.n_samples}")
        recordings.append(rec)

    # Alignment rule: truncate each (subject, style) group to its shortest sensor.
    groups: dict[tuple[str, StyleLabel], list[int]] = {}
    for i, rec in enumerate(recordings):
        groups.setdefault((rec.subject_id, rec.style), []).append(i)
    for idxs in groups.values():
        n_min = min(recordings[i].n_samples for i in idxs)
        for i in idxs:
            if recordings[i].n_samples > n_min:
                recordings[i] = recordings[i].truncated(n_min)

    return Dataset(subjects=subjects, recordings=tuple(recordings))
