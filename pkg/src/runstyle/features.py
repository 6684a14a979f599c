"""Hand-crafted per-axis window statistics for the classical baselines.

Eight statistics per axis, 24 in total, in axis-major order
(x first, then y, then z):

    mean, std, min, max, rms, skewness, kurtosis, p2p_time

Definitions are fixed so that an independent oracle can reproduce them
exactly: std is the population standard deviation (divide by N), skewness
and kurtosis use population central moments (m3/std^3 and m4/std^4 - 3,
i.e. excess kurtosis), and p2p_time is |argmax - argmin| / fs with the
first occurrence taken on ties. A zero-variance axis gets skewness and
kurtosis of 0 by convention.
"""

from __future__ import annotations

import numpy as np

from runstyle.domain import SAMPLE_RATE_HZ, SensorLocation
from runstyle.windowing import Segment, SegmentTable

STAT_NAMES = ("mean", "std", "min", "max", "rms", "skewness", "kurtosis", "p2p_time")
AXIS_NAMES = ("x", "y", "z")
FEATURE_NAMES = tuple(f"{ax}_{st}" for ax in AXIS_NAMES for st in STAT_NAMES)
N_FEATURES = len(FEATURE_NAMES)  # 24


def axis_features(values: np.ndarray, fs: float = SAMPLE_RATE_HZ) -> np.ndarray:
    """The 8 statistics of one axis, as float64."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"axis must be a non-empty 1-D array, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("axis contains non-finite values")

    mean = np.mean(x)
    d = x - mean
    m2 = np.mean(d * d)
    std = np.sqrt(m2)
    if m2 == 0.0:
        skew = 0.0
        kurt = 0.0
    else:
        skew = np.mean(d ** 3) / std ** 3
        kurt = np.mean(d ** 4) / std ** 4 - 3.0
    rms = np.sqrt(np.mean(x * x))
    p2p = abs(int(np.argmax(x)) - int(np.argmin(x))) / fs
    return np.array([mean, std, np.min(x), np.max(x), rms, skew, kurt, p2p])


def window_features(data: np.ndarray, fs: float = SAMPLE_RATE_HZ) -> np.ndarray:
    """24-entry feature vector of one (n, 3) window."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"window must be (n, 3), got {arr.shape}")
    return np.concatenate([axis_features(arr[:, a], fs) for a in range(3)])


def extract_features(seg: Segment, fs: float = SAMPLE_RATE_HZ) -> np.ndarray:
    """Feature vector of a Segment (see module docstring for the layout)."""
    return window_features(seg.data, fs)


def feature_matrix(table: SegmentTable,
                   sensor: SensorLocation) -> tuple[np.ndarray, np.ndarray]:
    """(n, 24) feature matrix and (n,) style-index labels for one sensor.

    Row order matches the table's key order; the computation is vectorised
    over segments but bit-identical across calls.
    """
    data = table.sensor_array(sensor)
    if data.shape[0] == 0:
        return np.zeros((0, N_FEATURES)), np.zeros(0, dtype=np.int64)
    if not np.isfinite(data).all():
        raise ValueError("segment table contains non-finite values")
    fs = table.fs

    cols = []
    for a in range(3):
        x = data[:, :, a].astype(np.float64)
        mean = x.mean(axis=1)
        d = x - mean[:, None]
        m2 = np.mean(d * d, axis=1)
        std = np.sqrt(m2)
        ok = m2 > 0.0
        skew = np.zeros_like(std)
        kurt = np.zeros_like(std)
        skew[ok] = np.mean(d[ok] ** 3, axis=1) / std[ok] ** 3
        kurt[ok] = np.mean(d[ok] ** 4, axis=1) / std[ok] ** 4 - 3.0
        rms = np.sqrt(np.mean(x * x, axis=1))
        p2p = np.abs(np.argmax(x, axis=1) - np.argmin(x, axis=1)) / fs
        cols.append(np.column_stack([mean, std, x.min(axis=1), x.max(axis=1),
                                     rms, skew, kurt, p2p]))
    return np.concatenate(cols, axis=1), table.labels.copy()


def features_to_csv(matrix: np.ndarray, path) -> None:
    """Write a feature matrix as CSV with the canonical 24-column header."""
    if matrix.ndim != 2 or matrix.shape[1] != N_FEATURES:
        raise ValueError(f"expected (n, {N_FEATURES}) matrix, got {matrix.shape}")
    header = ",".join(FEATURE_NAMES)
    np.savetxt(path, matrix, delimiter=",", header=header, comments="", fmt="%.9g")
