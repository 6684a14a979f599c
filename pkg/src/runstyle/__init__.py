"""runstyle: multi-sensor running-style classification workbench.

A small library for generating synthetic 5-sensor running accelerometry,
slicing it into fixed windows, extracting hand-crafted features, training
classical and CNN-LSTM classifiers per sensor, fusing their scores, and
evaluating under within-subject and leave-subjects-out protocols with
optional per-subject fine-tuning.
"""

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

__all__ = [
    "SAMPLE_RATE_HZ",
    "Dataset",
    "ImuRecording",
    "SensorLocation",
    "StyleLabel",
    "SubjectMeta",
    "index_label",
    "label_index",
    "validate_dataset",
]

__version__ = "0.1.0"
