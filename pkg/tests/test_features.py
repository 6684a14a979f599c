import numpy as np
import pytest

from runstyle.domain import SensorLocation
from runstyle.features import (
    FEATURE_NAMES,
    N_FEATURES,
    axis_features,
    feature_matrix,
    features_to_csv,
    window_features,
)
from oracle_features import oracle_window

FS = 500.0


def test_feature_layout():
    assert N_FEATURES == 24
    assert FEATURE_NAMES[0] == "x_mean"
    assert FEATURE_NAMES[7] == "x_p2p_time"
    assert FEATURE_NAMES[-1] == "z_p2p_time"


def test_constant_axis_degenerate_conventions():
    out = axis_features(np.full(5000, 2.5), FS)
    assert out == pytest.approx([2.5, 0.0, 2.5, 2.5, 2.5, 0.0, 0.0, 0.0])


def test_pure_sine_analytics():
    t = np.arange(5000) / FS  # exactly 20 periods of a 2 Hz sine
    x = 2.0 * np.sin(2 * np.pi * 2.0 * t)
    mean, std, lo, hi, rms, skew, kurt, p2p = axis_features(x, FS)
    assert rms == pytest.approx(np.sqrt(2.0), abs=1e-3)
    assert skew == pytest.approx(0.0, abs=1e-3)
    assert p2p == pytest.approx(0.25, abs=1e-9)  # half a period
    assert kurt == pytest.approx(-1.5, abs=1e-2)


def test_matches_naive_oracle(rng):
    for _ in range(25):
        window = rng.normal(0.0, 1.0, (512, 3)) + rng.uniform(-2, 2, (1, 3))
        got = window_features(window, FS)
        want = np.asarray(oracle_window(window, FS))
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-12)


def test_translation_property(rng):
    x = rng.normal(0.0, 1.0, 2000)
    base = axis_features(x, FS)
    shifted = axis_features(x + 3.7, FS)
    assert shifted[0] == pytest.approx(base[0] + 3.7, rel=1e-9, abs=1e-9)
    assert shifted[2] == pytest.approx(base[2] + 3.7, rel=1e-9)
    assert shifted[3] == pytest.approx(base[3] + 3.7, rel=1e-9)
    for i in (1, 5, 6, 7):  # std, skewness, kurtosis, p2p_time
        assert shifted[i] == pytest.approx(base[i], rel=1e-6, abs=1e-9)


def test_positive_scaling_property(rng):
    x = rng.normal(1.0, 2.0, 2000)
    k = 4.25
    base = axis_features(x, FS)
    scaled = axis_features(k * x, FS)
    for i in (0, 1, 2, 3, 4):  # mean, std, min, max, rms
        assert scaled[i] == pytest.approx(k * base[i], rel=1e-9)
    for i in (5, 6, 7):
        assert scaled[i] == pytest.approx(base[i], rel=1e-9, abs=1e-12)


def test_non_finite_rejected():
    bad = np.ones(100)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        axis_features(bad, FS)
    with pytest.raises(ValueError):
        window_features(np.full((10, 2), 1.0), FS)


def test_feature_matrix_shape_and_labels(small_table):
    X, y = feature_matrix(small_table, SensorLocation.LFOOT)
    assert X.shape == (len(small_table), 24)
    np.testing.assert_array_equal(y, small_table.labels)
    assert np.isfinite(X).all()


def test_feature_matrix_matches_single_windows(small_table):
    X, _ = feature_matrix(small_table, SensorLocation.COM)
    data = small_table.sensor_array(SensorLocation.COM)
    for i in (0, len(small_table) // 2, len(small_table) - 1):
        np.testing.assert_allclose(X[i], window_features(data[i], small_table.fs),
                                   rtol=1e-9, atol=1e-12)


def test_feature_matrix_deterministic(small_table):
    a, _ = feature_matrix(small_table, SensorLocation.RSHANK)
    b, _ = feature_matrix(small_table, SensorLocation.RSHANK)
    assert np.array_equal(a, b)


def test_csv_export(tmp_path, small_table):
    X, _ = feature_matrix(small_table, SensorLocation.COM)
    path = tmp_path / "features.csv"
    features_to_csv(X, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(FEATURE_NAMES)
    assert len(lines) == len(X) + 1
