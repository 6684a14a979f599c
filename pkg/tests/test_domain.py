import numpy as np
import pytest

from runstyle.domain import (
    SAMPLE_RATE_HZ,
    Dataset,
    ImuRecording,
    SensorLocation,
    StyleLabel,
    SubjectMeta,
    index_label,
    label_index,
    validate_dataset,
)


def test_style_enumeration_fixed_order():
    assert len(StyleLabel) == 8
    assert label_index(StyleLabel.EGG_BEATER) == 0
    assert label_index(StyleLabel.NARROW_STANCE) == 7
    names = [s.key for s in StyleLabel]
    assert names == ["egg_beater", "bouncing", "heel_strike", "toe_strike",
                     "long_stride", "short_stride", "wide_stance", "narrow_stance"]


def test_label_index_round_trip():
    for style in StyleLabel:
        assert index_label(label_index(style)) is style


def test_sensor_enumeration():
    assert len(SensorLocation) == 5
    assert [s.key for s in SensorLocation] == ["com", "lfoot", "lshank",
                                               "rfoot", "rshank"]
    assert SensorLocation.COM.side == "center"
    assert SensorLocation.LFOOT.side == "left"
    assert SensorLocation.RSHANK.side == "right"


def test_enum_serialization_closed():
    for style in StyleLabel:
        assert StyleLabel.from_key(style.key) is style
    for sensor in SensorLocation:
        assert SensorLocation.from_key(sensor.key) is sensor
    with pytest.raises(ValueError):
        StyleLabel.from_key("moonwalk")
    with pytest.raises(ValueError):
        SensorLocation.from_key("wrist")


def _rec(subject="S01", style=StyleLabel.BOUNCING, sensor=SensorLocation.COM,
         fs=SAMPLE_RATE_HZ, n=100):
    return ImuRecording(subject, style, sensor, fs, np.zeros((n, 3)))


def test_recording_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ImuRecording("S01", StyleLabel.BOUNCING, SensorLocation.COM,
                     SAMPLE_RATE_HZ, np.zeros((10, 2)))
    bad = np.zeros((10, 3))
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        ImuRecording("S01", StyleLabel.BOUNCING, SensorLocation.COM,
                     SAMPLE_RATE_HZ, bad)


def test_subject_meta_positive_fields():
    SubjectMeta("S01", height_m=1.8)
    with pytest.raises(ValueError):
        SubjectMeta("S01", weight_kg=-3.0)


def _complete_dataset(n_subjects=2):
    recs = [
        _rec(subject=f"S{i:02d}", style=style, sensor=sensor)
        for i in range(1, n_subjects + 1)
        for style in StyleLabel for sensor in SensorLocation
    ]
    subjects = tuple(SubjectMeta(f"S{i:02d}") for i in range(1, n_subjects + 1))
    return Dataset(subjects=subjects, recordings=tuple(recs))


def test_validate_complete_dataset_is_clean():
    assert validate_dataset(_complete_dataset()) == []


def test_validate_flags_missing_sensor():
    ds = _complete_dataset()
    trimmed = tuple(r for r in ds.recordings
                    if not (r.subject_id == "S01" and r.style is StyleLabel.BOUNCING
                            and r.sensor is SensorLocation.COM))
    report = validate_dataset(Dataset(subjects=ds.subjects, recordings=trimmed))
    assert len(report) == 1
    assert report[0].key == "S01/bouncing/com"
    assert "missing sensor recording" in report[0].rule


def test_validate_flags_bad_sampling_rate():
    ds = _complete_dataset()
    recs = list(ds.recordings)
    recs[0] = _rec(subject="S01", style=StyleLabel.EGG_BEATER,
                   sensor=SensorLocation.COM, fs=100.0)
    report = validate_dataset(Dataset(subjects=ds.subjects, recordings=tuple(recs)))
    assert any("sampling rate != 500" in v.rule for v in report)


def test_validate_flags_duplicates_and_unequal_lengths():
    ds = _complete_dataset()
    dup = ds.recordings + (ds.recordings[0],)
    report = validate_dataset(Dataset(subjects=ds.subjects, recordings=dup))
    assert any("duplicate (subject, style, sensor)" in v.rule for v in report)

    recs = list(ds.recordings)
    recs[0] = _rec(subject="S01", style=StyleLabel.EGG_BEATER,
                   sensor=SensorLocation.COM, n=99)
    report = validate_dataset(Dataset(subjects=ds.subjects, recordings=tuple(recs)))
    assert any("unequal sample counts" in v.rule for v in report)


def test_validate_is_pure():
    ds = _complete_dataset()
    assert validate_dataset(ds) == validate_dataset(ds)
