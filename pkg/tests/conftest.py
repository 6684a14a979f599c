import numpy as np
import pytest

from runstyle.domain import Dataset, SensorLocation, StyleLabel
from runstyle.synthgait import GeneratorConfig, generate_recording, make_subject
from runstyle.windowing import segment_dataset

_ACCEPTANCE_LINES = []


def record_acceptance(criterion: int, passed: bool, detail: str) -> None:
    _ACCEPTANCE_LINES.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {criterion}: {status} - {detail}")


def build_dataset(n_subjects=2, duration_s=30.0, p=0.15, seed=7, **kw) -> Dataset:
    """Small in-memory synthetic dataset for unit tests."""
    cfg = GeneratorConfig(n_subjects=n_subjects, duration_s=duration_s,
                          personalization=p, seed=seed, **kw)
    subjects = [make_subject(i, cfg) for i in range(n_subjects)]
    recordings = tuple(generate_recording(s, style, sensor, cfg)
                       for s in subjects for style in StyleLabel
                       for sensor in SensorLocation)
    return Dataset(subjects=tuple(s.meta for s in subjects), recordings=recordings)


@pytest.fixture(scope="session")
def small_dataset() -> Dataset:
    return build_dataset()


@pytest.fixture(scope="session")
def small_table(small_dataset):
    return segment_dataset(small_dataset)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
