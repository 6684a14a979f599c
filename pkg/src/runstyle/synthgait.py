"""Deterministic synthetic generator for 5-sensor running accelerations.

Each recording is a sum of three parts per axis: a 4-harmonic stride
oscillation, a decaying-sinusoid impact transient at every step, and white
Gaussian noise. Eight named styles modify a neutral parameter set; every
subject additionally carries per-style multiplicative deltas so that the
same style is executed differently by different subjects (the mechanism
behind the within- vs cross-subject evaluation gap).

All constants below are synthetic calibration values, not measurements.
They are chosen so that (a) all eight classes are learnable, (b) several
class contrasts live only in temporal structure (harmonic weighting,
phase, impact shape, stride frequency) rather than in per-axis marginal
statistics, and (c) cross-subject generalisation is measurably harder
than within-subject classification. Everything is overridable through
GeneratorConfig.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from runstyle.domain import (
    SAMPLE_RATE_HZ,
    Dataset,
    ImuRecording,
    SensorLocation,
    StyleLabel,
    SubjectMeta,
)
from runstyle.ingest import write_dataset

N_HARMONICS = 4

# Parameter groups that style modifiers and per-subject deltas apply to.
PARAM_KEYS = ("vertical", "foreaft", "lateral", "impact_mag", "impact_tau",
              "impact_freq", "lateral_dc", "freq")

# Neutral baseline per sensor tier: harmonic fundamental amplitudes [g],
# impact magnitude [g]. Harmonics decay as A[h] = A[1]/h.
_TIER = {
    SensorLocation.LFOOT: "foot", SensorLocation.RFOOT: "foot",
    SensorLocation.LSHANK: "shank", SensorLocation.RSHANK: "shank",
    SensorLocation.COM: "com",
}
BASELINE = {
    #        vertical foreaft lateral impact
    "foot":  (1.0,    0.5,    0.3,    3.0),
    "shank": (0.7,    0.4,    0.25,   2.0),
    "com":   (0.4,    0.2,    0.15,   0.8),
}
IMPACT_TAU_S = 0.03
IMPACT_FREQ_HZ = 25.0
OPPOSITE_SIDE_COUPLING = 0.3
COM_COUPLING = 0.6

# Per-style multiplicative modifiers of the neutral parameters. Unlisted
# keys default to 1.0 (or 0.0 for lateral_dc). "lat_harmonics" reweights
# the lateral harmonic profile (energy-preserving shift of the dominant
# lateral frequency); "lat_phase" shifts all lateral phases on feet and
# shanks. Both change temporal structure without moving per-axis moments.
STYLE_MODIFIERS: dict[StyleLabel, dict[str, float | tuple]] = {
    StyleLabel.EGG_BEATER: {"lateral": 1.1, "lat_phase": np.pi / 2,
                            "lat_harmonics": (0.7, 1.7, 1.0, 1.0)},
    StyleLabel.BOUNCING: {"vertical": 1.8},
    StyleLabel.HEEL_STRIKE: {"impact_mag": 1.25, "impact_tau": 0.75,
                             "impact_freq": 1.25, "vertical": 1.3},
    StyleLabel.TOE_STRIKE: {"impact_mag": 0.8, "impact_tau": 1.3, "foreaft": 1.2},
    StyleLabel.LONG_STRIDE: {"freq": 0.8, "foreaft": 1.05},
    StyleLabel.SHORT_STRIDE: {"freq": 1.25, "foreaft": 0.95},
    StyleLabel.WIDE_STANCE: {"lateral_dc": 0.2, "com_lateral": 1.5},
    StyleLabel.NARROW_STANCE: {"lateral": 0.5, "lateral_dc": -0.05},
}


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the synthetic dataset; the dataset is a pure function of this."""

    n_subjects: int = 10
    duration_s: float = 300.0
    fs: float = SAMPLE_RATE_HZ
    personalization: float = 0.15  # spread of the per-style deltas
    seed: int = 0
    modifier_overrides: dict = field(default_factory=dict)  # style key -> {param: value}

    def __post_init__(self) -> None:
        n = self.duration_s * self.fs
        if abs(n - round(n)) > 1e-9 or n <= 0:
            raise ValueError("duration_s * fs must be a positive integer")
        if self.personalization < 0:
            raise ValueError("personalization must be >= 0")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.fs))

    def to_json(self) -> dict:
        return {
            "n_subjects": self.n_subjects, "duration_s": self.duration_s,
            "fs": self.fs, "personalization": self.personalization,
            "seed": self.seed, "modifier_overrides": self.modifier_overrides,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorConfig":
        return cls(**obj)


@dataclass(frozen=True)
class SubjectProfile:
    """One synthetic runner: base gait parameters plus per-style deltas."""

    subject_id: str
    index: int
    stride_freq: float  # strides per second
    amplitude_scale: float
    noise_sigma: float  # [g]
    deltas: dict  # style key -> {param key -> multiplicative delta}
    meta: SubjectMeta


@dataclass(frozen=True)
class StyleParams:
    """Fully resolved signal parameters for one (subject, style, sensor)."""

    amps: np.ndarray  # (3 axes, 4 harmonics) amplitudes [g]
    phases: np.ndarray  # (3, 4) [rad]
    impact_mag: float  # [g]
    impact_tau: float  # [s]
    impact_freq: float  # [Hz]
    lateral_dc: float  # [g]
    freq_mult: float  # multiplies the subject's stride frequency


def make_subject(index: int, cfg: GeneratorConfig) -> SubjectProfile:
    """Draw one subject from the stream derived from (seed, index)."""
    if not 0 <= index < cfg.n_subjects:
        raise ValueError(f"subject index {index} out of range")
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, index)))
    stride_freq = rng.uniform(1.2, 1.6)
    amplitude_scale = rng.uniform(0.8, 1.2)
    noise_sigma = rng.uniform(0.05, 0.15)
    p = cfg.personalization
    deltas = {
        style.key: {key: float(rng.uniform(1.0 - p, 1.0 + p)) for key in PARAM_KEYS}
        for style in StyleLabel
    }
    meta = SubjectMeta(
        subject_id=f"S{index + 1:02d}",
        height_m=round(float(rng.uniform(1.55, 1.95)), 2),
        weight_kg=round(float(rng.uniform(50.0, 90.0)), 1),
        age_years=float(rng.integers(20, 27)),
        sex="f" if rng.integers(0, 2) == 0 else "m",
    )
    return SubjectProfile(meta.subject_id, index, stride_freq, amplitude_scale,
                          noise_sigma, deltas, meta)


_UNIT_DELTAS = {key: 1.0 for key in PARAM_KEYS}


def _resolve(mods: dict, d: dict, subject: SubjectProfile) -> dict[SensorLocation, StyleParams]:
    alpha = subject.amplitude_scale
    out: dict[SensorLocation, StyleParams] = {}
    for sensor in SensorLocation:
        vert, fore, lat, imp = BASELINE[_TIER[sensor]]
        lat_mult = mods.get("lateral", 1.0)
        if sensor is SensorLocation.COM:
            lat_mult *= mods.get("com_lateral", 1.0)
        axis_amp = np.array([
            fore * mods.get("foreaft", 1.0) * d["foreaft"],
            lat * lat_mult * d["lateral"],
            vert * mods.get("vertical", 1.0) * d["vertical"],
        ]) * alpha

        harmonic_decay = 1.0 / np.arange(1, N_HARMONICS + 1)
        weights = np.tile(harmonic_decay, (3, 1))
        lat_weights = np.asarray(mods.get("lat_harmonics", (1.0, 1.0, 1.0, 1.0)),
                                 dtype=np.float64)
        weights[1] = weights[1] * lat_weights
        amps = axis_amp[:, None] * weights

        # Base phase ramp per harmonic; fore-aft leads by a quarter cycle and
        # right-side sensors lag by half a stride (one step) per harmonic.
        h = np.arange(1, N_HARMONICS + 1)
        phases = np.tile((h - 1) * np.pi / 6, (3, 1)).astype(np.float64)
        phases[0] += np.pi / 2
        if sensor.side == "right":
            phases += h * np.pi
        if sensor.side != "center":
            phases[1] += mods.get("lat_phase", 0.0)

        # Stance offset is a geometry effect, deliberately not scaled by the
        # subject's effort amplitude.
        dc = mods.get("lateral_dc", 0.0) * d["lateral_dc"]
        if sensor is SensorLocation.LFOOT:
            lateral_dc = dc
        elif sensor is SensorLocation.RFOOT:
            lateral_dc = -dc
        else:
            lateral_dc = 0.0

        out[sensor] = StyleParams(
            amps=amps,
            phases=phases,
            impact_mag=imp * mods.get("impact_mag", 1.0) * d["impact_mag"] * alpha,
            impact_tau=IMPACT_TAU_S * mods.get("impact_tau", 1.0) * d["impact_tau"],
            impact_freq=IMPACT_FREQ_HZ * mods.get("impact_freq", 1.0) * d["impact_freq"],
            lateral_dc=lateral_dc,
            freq_mult=mods.get("freq", 1.0) * d["freq"],
        )
    return out


def style_params(style: StyleLabel, subject: SubjectProfile,
                 cfg: GeneratorConfig) -> dict[SensorLocation, StyleParams]:
    """Resolve the per-sensor signal parameters for one (subject, style)."""
    mods = dict(STYLE_MODIFIERS.get(style, {}))
    mods.update(cfg.modifier_overrides.get(style.key, {}))
    return _resolve(mods, subject.deltas[style.key], subject)


def neutral_params(subject: SubjectProfile) -> dict[SensorLocation, StyleParams]:
    """The subject's unmodified gait parameters (no style, no deltas).

    Reference point for style-effect checks: every style modifier is a
    ratio against these values.
    """
    return _resolve({}, _UNIT_DELTAS, subject)


def synthesize(params: StyleParams, stride_freq: float, sensor: SensorLocation,
               n_samples: int, fs: float, noise_sigma: float,
               rng: np.random.Generator) -> np.ndarray:
    """Render one (n, 3) acceleration stream from resolved parameters."""
    f_eff = stride_freq * params.freq_mult
    t = np.arange(n_samples) / fs
    out = np.zeros((n_samples, 3))
    h = np.arange(1, N_HARMONICS + 1)
    for axis in range(3):
        phase = 2.0 * np.pi * np.outer(t, h * f_eff) + params.phases[axis]
        out[:, axis] = np.sin(phase) @ params.amps[axis]
    out[:, 1] += params.lateral_dc

    # Impact train on the vertical axis: steps alternate sides at half-stride
    # spacing; the off-side transient couples through at reduced magnitude.
    step_period = 1.0 / (2.0 * f_eff)
    k = np.arange(int(np.floor((n_samples - 1) / fs / step_period)) + 1)
    step_idx = np.round(k * step_period * fs).astype(np.int64)
    step_idx = step_idx[step_idx < n_samples]
    k = k[: len(step_idx)]
    if sensor is SensorLocation.COM:
        weight = np.full(len(k), COM_COUPLING)
    else:
        same_side_even = sensor.side == "left"  # left strikes are the even steps
        is_same = (k % 2 == 0) if same_side_even else (k % 2 == 1)
        weight = np.where(is_same, 1.0, OPPOSITE_SIDE_COUPLING)
    spikes = np.zeros(n_samples)
    np.add.at(spikes, step_idx, weight)
    kernel_len = max(2, int(round(8.0 * params.impact_tau * fs)))
    tk = np.arange(kernel_len) / fs
    kernel = params.impact_mag * np.exp(-tk / params.impact_tau) \
        * np.sin(2.0 * np.pi * params.impact_freq * tk)
    out[:, 2] += np.convolve(spikes, kernel)[:n_samples]

    if noise_sigma > 0:
        out += rng.normal(0.0, noise_sigma, out.shape)
    return out


def generate_recording(subject: SubjectProfile, style: StyleLabel,
                       sensor: SensorLocation, cfg: GeneratorConfig) -> ImuRecording:
    """Deterministic recording for one (subject, style, sensor)."""
    rng = np.random.default_rng(np.random.SeedSequence(
        (cfg.seed, subject.index, style.value, sensor.value)))
    params = style_params(style, subject, cfg)[sensor]
    samples = synthesize(params, subject.stride_freq, sensor, cfg.n_samples,
                         cfg.fs, subject.noise_sigma, rng)
    return ImuRecording(subject.subject_id, style, sensor, cfg.fs, samples)


def generate_dataset(cfg: GeneratorConfig, out_dir=None,
                     overwrite: bool = False) -> Dataset:
    """Build the full n_subjects x 8 styles x 5 sensors dataset.

    When ``out_dir`` is given the dataset is also written as CSV files plus
    manifest (refusing to clobber a non-empty directory unless
    ``overwrite``); regeneration with the same config is byte-identical.
    """
    subjects = [make_subject(i, cfg) for i in range(cfg.n_subjects)]
    recordings = []
    for subject in subjects:
        for style in StyleLabel:
            for sensor in SensorLocation:
                recordings.append(generate_recording(subject, style, sensor, cfg))
    dataset = Dataset(subjects=tuple(s.meta for s in subjects),
                      recordings=tuple(recordings))
    if out_dir is not None:
        write_dataset(dataset, out_dir, overwrite=overwrite)
        with open(f"{out_dir}/generator.json", "w") as fh:
            json.dump(cfg.to_json(), fh, indent=1)
            fh.write("\n")
    return dataset
