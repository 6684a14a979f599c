"""Fixed-size windowing: 10 s segments with 50% overlap, tiled into 8 sub-windows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from runstyle.domain import (
    Dataset,
    ImuRecording,
    SensorLocation,
    StyleLabel,
    label_index,
    validate_dataset,
)

WINDOW_SECONDS = 10.0
N_SUBSEGMENTS = 8
DEFAULT_OVERLAP = 0.5


class SegmentKey(NamedTuple):
    subject_id: str
    style: StyleLabel
    index: int  # segment position within the recording


@dataclass(frozen=True)
class Segment:
    """One analysis window: a (window_samples, 3) acceleration matrix in g."""

    subject_id: str
    style: StyleLabel
    sensor: SensorLocation
    data: np.ndarray
    origin: tuple[str, int]  # (recording id, start sample index)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"segment data must be (n, 3), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("segment contains non-finite values")

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class SubSegment:
    """One of the 8 contiguous slices of a segment, in position order."""

    data: np.ndarray
    position: int

    def __post_init__(self) -> None:
        if not 0 <= self.position < N_SUBSEGMENTS:
            raise ValueError(f"position must be 0-{N_SUBSEGMENTS - 1}, got {self.position}")


def segment(recording: ImuRecording, window_s: float = WINDOW_SECONDS,
            overlap: float = DEFAULT_OVERLAP) -> list[Segment]:
    """Slice a recording into fixed windows; a trailing partial window is dropped.

    Windows start at 0, hop, 2*hop, ... with hop = window * (1 - overlap)
    samples. A recording shorter than one window yields an empty list.
    """
    if not 0 <= overlap < 1:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    window = recording.fs * window_s
    if abs(window - round(window)) > 1e-9 or window <= 0:
        raise ValueError(f"window of {window_s} s at fs={recording.fs} is not an "
                         f"integral number of samples")
    window = int(round(window))
    hop = window * (1.0 - overlap)
    if abs(hop - round(hop)) > 1e-9 or round(hop) == 0:
        raise ValueError(f"hop {hop} samples is not a positive integer")
    hop = int(round(hop))

    n = recording.n_samples
    if n < window:
        return []
    count = (n - window) // hop + 1
    rec_id = f"{recording.subject_id}/{recording.style.key}/{recording.sensor.key}"
    return [
        Segment(recording.subject_id, recording.style, recording.sensor,
                recording.samples[i * hop:i * hop + window], (rec_id, i * hop))
        for i in range(count)
    ]


def subsegment(seg: Segment) -> list[SubSegment]:
    """Tile a segment into 8 contiguous, non-overlapping sub-segments."""
    n = seg.n_samples
    if n % N_SUBSEGMENTS != 0:
        raise ValueError(f"segment length {n} is not divisible by {N_SUBSEGMENTS}")
    sub_len = n // N_SUBSEGMENTS
    return [SubSegment(seg.data[p * sub_len:(p + 1) * sub_len], p)
            for p in range(N_SUBSEGMENTS)]


@dataclass(frozen=True)
class SegmentTable:
    """All segments of a dataset, index-aligned across the five sensors.

    Row i of every per-sensor array covers the identical time span of the
    identical (subject, style) session, so per-sensor predictions for row i
    can be fused directly. ``labels`` holds style indices, ``subject_ids``
    the owning subject per row.
    """

    keys: tuple[SegmentKey, ...]
    labels: np.ndarray  # (n,) int64 style indices
    subject_ids: np.ndarray  # (n,) str
    starts: np.ndarray  # (n,) int64 start sample indices
    data: dict[SensorLocation, np.ndarray]  # sensor -> (n, window, 3) float32
    fs: float

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def window_samples(self) -> int:
        first = next(iter(self.data.values()))
        return first.shape[1]

    def sensor_array(self, sensor: SensorLocation) -> np.ndarray:
        return self.data[sensor]


def segment_dataset(dataset: Dataset, window_s: float = WINDOW_SECONDS,
                    overlap: float = DEFAULT_OVERLAP) -> SegmentTable:
    """Window every recording and assemble the cross-sensor aligned table.

    The dataset must validate cleanly. Output ordering is deterministic:
    rows are sorted by (subject_id, style index, segment index) regardless
    of the order recordings appear in the dataset.
    """
    problems = validate_dataset(dataset)
    if problems:
        listing = "; ".join(str(v) for v in problems[:5])
        raise ValueError(f"dataset failed validation ({len(problems)} violations): {listing}")

    by_key: dict[tuple[str, StyleLabel, SensorLocation], ImuRecording] = {
        (rec.subject_id, rec.style, rec.sensor): rec for rec in dataset.recordings
    }
    group_ids = sorted({(rec.subject_id, rec.style) for rec in dataset.recordings},
                       key=lambda g: (g[0], g[1].value))

    keys: list[SegmentKey] = []
    labels: list[int] = []
    subjects: list[str] = []
    starts: list[int] = []
    arrays: dict[SensorLocation, list[np.ndarray]] = {s: [] for s in SensorLocation}
    fs = dataset.recordings[0].fs if dataset.recordings else 0.0

    for subject_id, style in group_ids:
        per_sensor = {s: segment(by_key[(subject_id, style, s)], window_s, overlap)
                      for s in SensorLocation}
        counts = {len(v) for v in per_sensor.values()}
        assert len(counts) == 1, "aligned recordings must give equal segment counts"
        count = counts.pop()
        for i in range(count):
            keys.append(SegmentKey(subject_id, style, i))
            labels.append(label_index(style))
            subjects.append(subject_id)
            starts.append(per_sensor[SensorLocation.COM][i].origin[1])
            for s in SensorLocation:
                arrays[s].append(per_sensor[s][i].data.astype(np.float32))

    data = {s: (np.stack(chunks) if chunks else
                np.zeros((0, int(round(fs * window_s)) if fs else 0, 3), np.float32))
            for s, chunks in arrays.items()}
    return SegmentTable(
        keys=tuple(keys),
        labels=np.asarray(labels, dtype=np.int64),
        subject_ids=np.asarray(subjects, dtype=object),
        starts=np.asarray(starts, dtype=np.int64),
        data=data,
        fs=fs,
    )
