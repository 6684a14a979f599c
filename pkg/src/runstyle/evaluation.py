"""Experiment protocols: split planning, scheme runs, metrics, fine-tuning.

Two schemes. ``random_segments`` draws an independent 20% of segments for
testing in each of 5 trials (with 10% of the remaining training segments
held out for validation); despite the "k-fold" name such protocols often
carry, the draws are independent, so the scheme is named for what it does.
``leave_subjects_out`` shuffles the subjects once and partitions them into
disjoint test groups covering every subject exactly once.

The same segment indices select all five sensors' windows, which keeps the
per-sensor predictions aligned for score-level fusion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from runstyle import classical as cl
from runstyle import deepnet as dn
from runstyle.domain import N_STYLES, SensorLocation, StyleLabel
from runstyle.features import feature_matrix
from runstyle.windowing import SegmentTable

SCHEMES = ("random_segments", "leave_subjects_out")
DEEP_FAMILIES = ("cnn_lstm", "cnn")
MODEL_FAMILIES = DEEP_FAMILIES + cl.KINDS
FUSION = "fusion"


# ---------------------------------------------------------------------------
# Metrics


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_f1: float
    confusion: np.ndarray  # (8, 8) int64, rows = truth, cols = prediction

    def to_json(self, with_confusion: bool = False) -> dict:
        out = {"accuracy": self.accuracy, "f1": self.macro_f1}
        if with_confusion:
            out["confusion"] = self.confusion.tolist()
        return out


def compute_metrics(truth, predicted) -> Metrics:
    """Accuracy, macro-F1 over classes present in truth, and the confusion matrix."""
    t = np.asarray(truth, dtype=np.int64)
    p = np.asarray(predicted, dtype=np.int64)
    if len(t) != len(p) or len(t) == 0:
        raise ValueError("truth and prediction must be equal-length and non-empty")
    if t.min() < 0 or t.max() >= N_STYLES or p.min() < 0 or p.max() >= N_STYLES:
        raise ValueError(f"labels must be in 0-{N_STYLES - 1}")

    confusion = np.zeros((N_STYLES, N_STYLES), dtype=np.int64)
    np.add.at(confusion, (t, p), 1)
    accuracy = confusion.trace() / confusion.sum()

    f1s = []
    for c in np.unique(t):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(2 * precision * recall / (precision + recall)
                   if precision + recall else 0.0)
    return Metrics(float(accuracy), float(np.mean(f1s)), confusion)


# ---------------------------------------------------------------------------
# Split planning


@dataclass(frozen=True)
class TrialSplit:
    train: np.ndarray  # segment row indices
    val: np.ndarray
    test: np.ndarray
    test_subjects: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"train": self.train.tolist(), "val": self.val.tolist(),
                "test": self.test.tolist(),
                "test_subjects": list(self.test_subjects)}

    @classmethod
    def from_json(cls, obj: dict) -> "TrialSplit":
        return cls(np.asarray(obj["train"], np.int64), np.asarray(obj["val"], np.int64),
                   np.asarray(obj["test"], np.int64), tuple(obj["test_subjects"]))


@dataclass(frozen=True)
class SplitPlan:
    scheme: str
    seed: int
    trials: tuple[TrialSplit, ...]

    def to_json(self) -> dict:
        return {"scheme": self.scheme, "seed": self.seed,
                "trials": [t.to_json() for t in self.trials]}

    @classmethod
    def from_json(cls, obj: dict) -> "SplitPlan":
        return cls(obj["scheme"], obj["seed"],
                   tuple(TrialSplit.from_json(t) for t in obj["trials"]))


def plan_random_segment_split(table: SegmentTable, trials: int = 5,
                              test_frac: float = 0.2, val_frac: float = 0.1,
                              seed: int = 0) -> SplitPlan:
    """Independent uniform test draws per trial; floor rounding, remainder to train."""
    n = len(table)
    if n < 10:
        raise ValueError(f"need at least 10 segments, got {n}")
    if not 0 < test_frac < 1 or not 0 <= val_frac < 1:
        raise ValueError("fractions must lie in (0, 1)")
    n_test = int(n * test_frac)
    n_val = int((n - n_test) * val_frac)
    if n_test == 0 or n - n_test - n_val == 0:
        raise ValueError("split fractions leave an empty train or test set")

    out = []
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence((seed, trial)))
        perm = rng.permutation(n)
        test = np.sort(perm[:n_test])
        val = np.sort(perm[n_test:n_test + n_val])
        train = np.sort(perm[n_test + n_val:])
        out.append(TrialSplit(train, val, test))
    return SplitPlan("random_segments", seed, tuple(out))


def plan_leave_subjects_out(table: SegmentTable, test_subject_frac: float = 0.2,
                            val_frac: float = 0.1, seed: int = 0) -> SplitPlan:
    """Disjoint test-subject groups covering every subject exactly once."""
    if not 0 < test_subject_frac <= 0.5:
        raise ValueError("test_subject_frac must lie in (0, 0.5]")
    subjects = sorted(set(table.subject_ids))
    n_trials = int(np.ceil(1.0 / test_subject_frac))
    if len(subjects) < max(n_trials, 5):
        raise ValueError(f"need at least {max(n_trials, 5)} subjects for "
                         f"test fraction {test_subject_frac}, got {len(subjects)}")

    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    order = [subjects[i] for i in rng.permutation(len(subjects))]
    base, extra = divmod(len(order), n_trials)
    groups = []
    at = 0
    for g in range(n_trials):
        size = base + (1 if g < extra else 0)
        groups.append(tuple(sorted(order[at:at + size])))
        at += size

    subject_ids = np.asarray(table.subject_ids)
    out = []
    for trial, group in enumerate(groups):
        test_mask = np.isin(subject_ids, group)
        test = np.flatnonzero(test_mask)
        pool = np.flatnonzero(~test_mask)
        trial_rng = np.random.default_rng(np.random.SeedSequence((seed, 1 + trial)))
        perm = trial_rng.permutation(len(pool))
        n_val = int(len(pool) * val_frac)
        val = np.sort(pool[perm[:n_val]])
        train = np.sort(pool[perm[n_val:]])
        out.append(TrialSplit(train, val, np.sort(test), group))
    return SplitPlan("leave_subjects_out", seed, tuple(out))


def check_plan(plan: SplitPlan, table: SegmentTable) -> None:
    """Raise if any trial leaks data between train/val/test."""
    subject_ids = np.asarray(table.subject_ids)
    for i, t in enumerate(plan.trials):
        sets = [set(t.train.tolist()), set(t.val.tolist()), set(t.test.tolist())]
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise AssertionError(f"trial {i}: overlapping split sets")
        if t.test_subjects:
            train_subj = set(subject_ids[t.train]) | set(subject_ids[t.val])
            if train_subj & set(t.test_subjects):
                raise AssertionError(f"trial {i}: test subject leaked into training")


# ---------------------------------------------------------------------------
# Scheme execution


@dataclass(frozen=True)
class TrialResult:
    sensors: dict  # sensor key -> Metrics
    fusion: Metrics

    def to_json(self) -> dict:
        out = {s: m.to_json() for s, m in self.sensors.items()}
        return {"sensors": out, "fusion": self.fusion.to_json(),
                "confusion": self.fusion.confusion.tolist()}


@dataclass
class EvaluationReport:
    scheme: str
    family: str
    seed: int
    trials: list[TrialResult]
    config: dict = field(default_factory=dict)

    def columns(self) -> list[str]:
        return [s.key for s in SensorLocation] + [FUSION]

    def trial_values(self, column: str, metric: str = "accuracy") -> np.ndarray:
        vals = []
        for t in self.trials:
            m = t.fusion if column == FUSION else t.sensors[column]
            vals.append(m.accuracy if metric == "accuracy" else m.macro_f1)
        return np.asarray(vals)

    def aggregate(self) -> dict:
        """mean and population std of accuracy and F1 per column."""
        out = {}
        for col in self.columns():
            acc = self.trial_values(col, "accuracy")
            f1 = self.trial_values(col, "f1")
            out[col] = {"accuracy_mean": float(acc.mean()),
                        "accuracy_std": float(acc.std()),
                        "f1_mean": float(f1.mean()), "f1_std": float(f1.std())}
        return out

    def to_json(self) -> dict:
        return {"scheme": self.scheme, "family": self.family, "seed": self.seed,
                "trials": [t.to_json() for t in self.trials],
                "aggregate": self.aggregate(), "config": self.config}

    def render_table(self) -> str:
        """Plain-text table: one row per trial plus the mean +/- std row."""
        cols = self.columns()
        width = 16
        lines = [f"scheme={self.scheme} model={self.family} seed={self.seed}",
                 "trial".ljust(8) + "".join(c.ljust(width) for c in cols)
                 + "(accuracy / F1)"]
        for i, t in enumerate(self.trials):
            cells = []
            for c in cols:
                m = t.fusion if c == FUSION else t.sensors[c]
                cells.append(f"{m.accuracy:.3f}/{m.macro_f1:.3f}".ljust(width))
            lines.append(f"{i}".ljust(8) + "".join(cells))
        agg = self.aggregate()
        cells = [f"{agg[c]['accuracy_mean']:.3f}+-{agg[c]['accuracy_std']:.3f}".ljust(width)
                 for c in cols]
        lines.append("mean".ljust(8) + "".join(cells))
        return "\n".join(lines)

    def fused_confusion(self) -> np.ndarray:
        """Sum of the per-trial fusion confusion matrices."""
        return np.sum([t.fusion.confusion for t in self.trials], axis=0)

    def confusion_to_csv(self, path) -> None:
        header = ",".join(s.key for s in StyleLabel)
        np.savetxt(path, self.fused_confusion(), fmt="%d", delimiter=",",
                   header=header, comments="")


def _train_one_deep(family: str, X, y, Xv, yv, cfg: dn.TrainConfig,
                    torch_threads: int | None = None):
    import torch
    if torch_threads is not None:
        torch.set_num_threads(torch_threads)
    net = dn.build_cnn_lstm(seed=cfg.seed) if family == "cnn_lstm" \
        else dn.build_cnn(seed=cfg.seed)
    return dn.train(net, X, y, Xv, yv, cfg)


def _deep_task(family, X, y, Xv, yv, Xt, cfg, torch_threads):
    model = _train_one_deep(family, X, y, Xv, yv, cfg, torch_threads)
    probs = dn.predict_proba(model, Xt)
    return model, probs


def _trial_seed(base: int, trial: int, sensor: SensorLocation) -> int:
    return base + 1009 * trial + sensor.value


def run_scheme(table: SegmentTable, plan: SplitPlan, family: str,
               train_cfg: dn.TrainConfig | None = None, seed: int | None = None,
               n_jobs: int = 1, return_models: bool = False):
    """Train one model per (trial, sensor), evaluate each sensor and the fusion.

    Deep families use ``train_cfg`` (required); classical families use their
    per-sensor default configuration. With ``n_jobs > 1`` the per-sensor deep
    trainings of one trial run in parallel worker processes (each pinned to a
    single torch thread); rerunning with the same arguments, including
    ``n_jobs``, reproduces the report.

    Returns the report, or ``(report, models)`` with ``models[(trial, sensor)]``
    when ``return_models`` is set.
    """
    if family not in MODEL_FAMILIES:
        raise ValueError(f"unknown model family {family!r}")
    check_plan(plan, table)
    deep = family in DEEP_FAMILIES
    if deep and train_cfg is None:
        raise ValueError("deep families require a TrainConfig")
    base_seed = seed if seed is not None else (train_cfg.seed if train_cfg else 0)

    feature_cache = {}
    if not deep:
        for sensor in SensorLocation:
            feature_cache[sensor] = feature_matrix(table, sensor)[0]

    labels = table.labels
    trial_results = []
    models = {}

    for trial_idx, split in enumerate(plan.trials):
        y_train, y_val, y_test = (labels[split.train], labels[split.val],
                                  labels[split.test])
        sensor_probs = {}
        if deep:
            tasks = []
            for sensor in SensorLocation:
                data = table.sensor_array(sensor)
                cfg = dn.TrainConfig(**{**train_cfg.to_json(),
                                        "seed": _trial_seed(base_seed, trial_idx, sensor)})
                tasks.append((sensor, data[split.train], y_train, data[split.val],
                              y_val, data[split.test], cfg))
            if n_jobs > 1:
                from joblib import Parallel, delayed
                results = Parallel(n_jobs=n_jobs)(
                    delayed(_deep_task)(family, X, y, Xv, yv, Xt, cfg, 1)
                    for (_, X, y, Xv, yv, Xt, cfg) in tasks)
            else:
                results = [_deep_task(family, X, y, Xv, yv, Xt, cfg, None)
                           for (_, X, y, Xv, yv, Xt, cfg) in tasks]
            for (sensor, *_), (model, probs) in zip(tasks, results):
                sensor_probs[sensor] = probs
                if return_models:
                    models[(trial_idx, sensor)] = model
        else:
            for sensor in SensorLocation:
                cfg = cl.default_config(family, sensor)
                Xf = feature_cache[sensor]
                model = cl.train_classical(cfg, Xf[split.train], y_train,
                                           seed=_trial_seed(base_seed, trial_idx, sensor))
                sensor_probs[sensor] = cl.predict_proba_classical(model, Xf[split.test])
                if return_models:
                    models[(trial_idx, sensor)] = model

        stack = np.stack([sensor_probs[s] for s in SensorLocation])
        fused = stack.mean(axis=0)
        sensors = {s.key: compute_metrics(y_test, sensor_probs[s].argmax(axis=1))
                   for s in SensorLocation}
        trial_results.append(TrialResult(
            sensors=sensors, fusion=compute_metrics(y_test, fused.argmax(axis=1))))

    config = {"family": family, "scheme": plan.scheme, "plan_seed": plan.seed,
              "n_trials": len(plan.trials), "base_seed": base_seed,
              "train_cfg": train_cfg.to_json() if train_cfg else None}
    report = EvaluationReport(scheme=plan.scheme, family=family, seed=base_seed,
                              trials=trial_results, config=config)
    return (report, models) if return_models else report


# ---------------------------------------------------------------------------
# Fine-tuning


def select_tuning_segments(labels: np.ndarray, subject_ids: np.ndarray,
                           fraction: float, seed: int = 0):
    """Class-stratified per-subject selection; floor rounding.

    Returns (tune_positions, eval_positions) as positions into the given
    arrays. Classes whose floor(fraction * count) is zero contribute no
    tuning segments; the caller is warned.
    """
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    labels = np.asarray(labels)
    subject_ids = np.asarray(subject_ids)
    tune = []
    starved = []
    rng = np.random.default_rng(np.random.SeedSequence((seed, 17)))
    for subject in sorted(set(subject_ids.tolist())):
        for c in sorted(set(labels[subject_ids == subject].tolist())):
            pos = np.flatnonzero((subject_ids == subject) & (labels == c))
            k = int(len(pos) * fraction)
            if fraction > 0 and k == 0:
                starved.append((subject, int(c)))
            if k:
                tune.extend(rng.choice(pos, size=k, replace=False).tolist())
    if starved:
        warnings.warn(f"fine-tune fraction {fraction} leaves {len(starved)} "
                      f"(subject, class) pairs without tuning segments")
    tune = np.asarray(sorted(tune), dtype=np.int64)
    eval_pos = np.setdiff1d(np.arange(len(labels)), tune)
    return tune, eval_pos


def fine_tune(model: dn.TrainedModel, test_segments: np.ndarray,
              test_labels: np.ndarray, test_subject_ids: np.ndarray,
              fraction: float, tune_cfg: dn.TrainConfig):
    """Continue training on a stratified fraction of the held-out subjects' data.

    All parameters stay unfrozen and the stored input normalization is kept.
    Evaluation uses only the remaining, untouched test segments. Fraction 0
    is the identity: the untuned model evaluated on everything.
    """
    tune_pos, eval_pos = select_tuning_segments(test_labels, test_subject_ids,
                                                fraction, seed=tune_cfg.seed)
    if len(tune_pos) == 0:
        probs = dn.predict_proba(model, test_segments[eval_pos])
        return model, compute_metrics(test_labels[eval_pos], probs.argmax(axis=1))

    tuned = dn.clone_model(model)
    tuned = dn.train(tuned.net, test_segments[tune_pos], test_labels[tune_pos],
                     None, None, tune_cfg, norm=model.norm)
    probs = dn.predict_proba(tuned, test_segments[eval_pos])
    return tuned, compute_metrics(test_labels[eval_pos], probs.argmax(axis=1))


def run_finetune_ladder(models: dict, table: SegmentTable, plan: SplitPlan,
                        fractions=(0.0, 0.02, 0.05, 0.10, 0.20),
                        tune_cfg: dn.TrainConfig | None = None,
                        n_jobs: int = 1) -> dict:
    """Fine-tune every (trial, sensor) model of a leave-subjects-out run.

    Returns {fraction: {"trials": [fusion Metrics...], "mean_accuracy": float,
    "mean_f1": float}} where trial metrics are fusion-level on the untouched
    remainder of the test-subject segments.
    """
    if plan.scheme != "leave_subjects_out":
        raise ValueError("fine-tuning expects a leave_subjects_out plan")
    if tune_cfg is None:
        raise ValueError("tune_cfg is required")
    ladder = {}
    for fraction in fractions:
        per_trial = []
        for trial_idx, split in enumerate(plan.trials):
            y_test = table.labels[split.test]
            subj = np.asarray(table.subject_ids)[split.test]
            tune_pos, eval_pos = select_tuning_segments(
                y_test, subj, fraction, seed=tune_cfg.seed)

            def tune_sensor(sensor):
                model = models[(trial_idx, sensor)]
                Xt = table.sensor_array(sensor)[split.test]
                if len(tune_pos) == 0:
                    return dn.predict_proba(model, Xt[eval_pos])
                tuned = dn.clone_model(model)
                cfg = dn.TrainConfig(**{**tune_cfg.to_json(),
                                        "seed": _trial_seed(tune_cfg.seed, trial_idx,
                                                            sensor)})
                tuned = dn.train(tuned.net, Xt[tune_pos], y_test[tune_pos],
                                 None, None, cfg, norm=model.norm)
                return dn.predict_proba(tuned, Xt[eval_pos])

            if n_jobs > 1:
                from joblib import Parallel, delayed

                def tune_sensor_mp(sensor):
                    import torch
                    torch.set_num_threads(1)
                    return tune_sensor(sensor)

                probs = Parallel(n_jobs=n_jobs)(
                    delayed(tune_sensor_mp)(s) for s in SensorLocation)
            else:
                probs = [tune_sensor(s) for s in SensorLocation]
            fused = np.stack(probs).mean(axis=0)
            per_trial.append(compute_metrics(y_test[eval_pos], fused.argmax(axis=1)))
        ladder[fraction] = {
            "trials": per_trial,
            "mean_accuracy": float(np.mean([m.accuracy for m in per_trial])),
            "mean_f1": float(np.mean([m.macro_f1 for m in per_trial])),
        }
    return ladder
