"""Shared vocabulary: running styles, sensor locations, recordings, datasets."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SAMPLE_RATE_HZ = 500.0
ACCEL_UNIT = "g"  # 1 g = 9.81 m/s^2


class StyleLabel(Enum):
    """The eight running styles, in their fixed canonical order."""

    EGG_BEATER = 0
    BOUNCING = 1
    HEEL_STRIKE = 2
    TOE_STRIKE = 3
    LONG_STRIDE = 4
    SHORT_STRIDE = 5
    WIDE_STANCE = 6
    NARROW_STANCE = 7

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "StyleLabel":
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown style name: {key!r}") from None


class SensorLocation(Enum):
    """The five accelerometer placements, in report column order."""

    COM = 0  # lower-back centre of mass
    LFOOT = 1
    LSHANK = 2
    RFOOT = 3
    RSHANK = 4

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "SensorLocation":
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown sensor name: {key!r}") from None

    @property
    def side(self) -> str:
        """'left', 'right', or 'center'."""
        if self.name.startswith("L"):
            return "left"
        if self.name.startswith("R"):
            return "right"
        return "center"


N_STYLES = len(StyleLabel)
N_SENSORS = len(SensorLocation)


def label_index(label: StyleLabel) -> int:
    """Stable 0-7 index of a style."""
    return label.value


def index_label(index: int) -> StyleLabel:
    """Inverse of label_index."""
    return StyleLabel(index)


@dataclass(frozen=True)
class ImuRecording:
    """One sensor's tri-axial acceleration stream for a (subject, style) session.

    ``samples`` is an (n, 3) array in g with axis order x = fore-aft,
    y = lateral, z = vertical. Treated as immutable after construction.
    """

    subject_id: str
    style: StyleLabel
    sensor: SensorLocation
    fs: float
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"samples must be (n, 3), got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("samples contain non-finite values")
        if self.fs <= 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def truncated(self, n: int) -> "ImuRecording":
        """Copy with samples cut to the first n rows."""
        return ImuRecording(self.subject_id, self.style, self.sensor,
                            self.fs, self.samples[:n])


@dataclass(frozen=True)
class SubjectMeta:
    """Anthropometrics recorded per subject (never used as model inputs)."""

    subject_id: str
    height_m: float | None = None
    weight_kg: float | None = None
    age_years: float | None = None
    sex: str | None = None

    def __post_init__(self) -> None:
        for name in ("height_m", "weight_kg", "age_years"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive when present, got {v}")


@dataclass(frozen=True)
class Dataset:
    """A collection of subjects and their per-(subject, style, sensor) recordings."""

    subjects: tuple[SubjectMeta, ...] = field(default_factory=tuple)
    recordings: tuple[ImuRecording, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "recordings", tuple(self.recordings))

    def find(self, subject_id: str, style: StyleLabel,
             sensor: SensorLocation) -> ImuRecording | None:
        for rec in self.recordings:
            if (rec.subject_id, rec.style, rec.sensor) == (subject_id, style, sensor):
                return rec
        return None

    @property
    def subject_ids(self) -> tuple[str, ...]:
        return tuple(s.subject_id for s in self.subjects)


@dataclass(frozen=True)
class Violation:
    """One broken dataset invariant; ``key`` names the offending entity."""

    key: str
    rule: str

    def __str__(self) -> str:
        return f"{self.key}: {self.rule}"


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Check Dataset invariants; an empty list means the dataset is conformant.

    Violations are data, not failures: this function never raises for bad
    content and is pure (identical input gives an identical report).
    """
    violations: list[Violation] = []

    seen_subjects: set[str] = set()
    for meta in dataset.subjects:
        if meta.subject_id in seen_subjects:
            violations.append(Violation(meta.subject_id, "duplicate subject_id"))
        seen_subjects.add(meta.subject_id)

    seen_keys: set[tuple[str, StyleLabel, SensorLocation]] = set()
    groups: dict[tuple[str, StyleLabel], dict[SensorLocation, ImuRecording]] = {}
    for rec in dataset.recordings:
        key = (rec.subject_id, rec.style, rec.sensor)
        key_str = f"{rec.subject_id}/{rec.style.key}/{rec.sensor.key}"
        if key in seen_keys:
            violations.append(Violation(key_str, "duplicate (subject, style, sensor) key"))
            continue
        seen_keys.add(key)
        if rec.fs != SAMPLE_RATE_HZ:
            violations.append(Violation(key_str, f"sampling rate != {SAMPLE_RATE_HZ:g}"))
        if rec.n_samples == 0:
            violations.append(Violation(key_str, "empty recording"))
        groups.setdefault((rec.subject_id, rec.style), {})[rec.sensor] = rec

    for (subject_id, style), sensors in sorted(
            groups.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        group_str = f"{subject_id}/{style.key}"
        for sensor in SensorLocation:
            if sensor not in sensors:
                violations.append(Violation(f"{group_str}/{sensor.key}",
                                            "missing sensor recording"))
        lengths = {rec.n_samples for rec in sensors.values()}
        if len(lengths) > 1:
            violations.append(Violation(group_str,
                                        f"unequal sample counts across sensors: {sorted(lengths)}"))

    return violations
