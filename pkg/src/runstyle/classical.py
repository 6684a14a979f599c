"""The four classical baselines trained on 24-entry feature vectors.

Per-sensor default configurations: the SVM uses a cubic polynomial kernel
with a one-vs-one scheme everywhere except the left foot (Gaussian kernel,
one-vs-all); the decision tree splits by maximum deviance reduction except
on the lower-back sensor, which uses the twoing rule; Naive Bayes is
Gaussian per feature; the bagged tree ensemble uses 100 trees.

Every model standardizes features with training-set statistics and emits
probability vectors over the 8 classes. Kinds without native probabilities
use documented surrogates: leaf class frequencies (decision tree),
pairwise-vote shares (one-vs-one SVM), normalized positive-margin scores
(one-vs-all SVM), and hard-vote fractions (bagged ensemble).
"""

from __future__ import annotations

import json
import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.ensemble import BaggingClassifier
from sklearn.multiclass import OneVsRestClassifier
from sklearn.naive_bayes import GaussianNB
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier

from runstyle.cart import CartTree
from runstyle.domain import N_STYLES, SensorLocation

KINDS = ("naive_bayes", "decision_tree", "svm", "bagged_tree_ensemble")
SVM_KERNELS = ("cubic_polynomial", "gaussian")
SVM_SCHEMES = ("one_vs_one", "one_vs_all")
SPLIT_CRITERIA = ("max_deviance_reduction", "twoing")

_REQUIRED_PARAMS = {
    "naive_bayes": set(),
    "decision_tree": {"split_criterion"},
    "svm": {"kernel", "scheme", "box_constraint"},
    "bagged_tree_ensemble": {"n_trees"},
}


@dataclass(frozen=True)
class ClassicalConfig:
    kind: str
    sensor: SensorLocation
    params: dict

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown classical kind {self.kind!r}")
        required = _REQUIRED_PARAMS[self.kind]
        got = set(self.params)
        if got != required:
            raise ValueError(f"{self.kind} expects params {sorted(required)}, "
                             f"got {sorted(got)}")
        if self.kind == "svm":
            if self.params["kernel"] not in SVM_KERNELS:
                raise ValueError(f"unknown SVM kernel {self.params['kernel']!r}")
            if self.params["scheme"] not in SVM_SCHEMES:
                raise ValueError(f"unknown SVM scheme {self.params['scheme']!r}")
        if self.kind == "decision_tree":
            if self.params["split_criterion"] not in SPLIT_CRITERIA:
                raise ValueError(
                    f"unknown split criterion {self.params['split_criterion']!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "sensor": self.sensor.key, "params": self.params}

    @classmethod
    def from_json(cls, obj: dict) -> "ClassicalConfig":
        return cls(obj["kind"], SensorLocation.from_key(obj["sensor"]), obj["params"])


def default_config(kind: str, sensor: SensorLocation) -> ClassicalConfig:
    """Per-sensor baseline configuration."""
    if kind == "svm":
        if sensor is SensorLocation.LFOOT:
            params = {"kernel": "gaussian", "scheme": "one_vs_all",
                      "box_constraint": 1.0}
        else:
            params = {"kernel": "cubic_polynomial", "scheme": "one_vs_one",
                      "box_constraint": 1.0}
    elif kind == "decision_tree":
        criterion = ("twoing" if sensor is SensorLocation.COM
                     else "max_deviance_reduction")
        params = {"split_criterion": criterion}
    elif kind == "bagged_tree_ensemble":
        params = {"n_trees": 100}
    elif kind == "naive_bayes":
        params = {}
    else:
        raise ValueError(f"unknown classical kind {kind!r}")
    return ClassicalConfig(kind, sensor, params)


@dataclass
class ClassicalModel:
    config: ClassicalConfig
    feat_mean: np.ndarray  # (d,) training-set per-feature mean
    feat_std: np.ndarray  # (d,) training-set per-feature std, zeros replaced by 1
    classes: np.ndarray  # sorted class labels present in training data
    impl: object  # fitted learner, opaque per kind
    seed: int

    @property
    def n_features(self) -> int:
        return len(self.feat_mean)


def _build_impl(config: ClassicalConfig, seed: int):
    kind = config.kind
    if kind == "naive_bayes":
        return GaussianNB()
    if kind == "decision_tree":
        return CartTree(criterion=config.params["split_criterion"])
    if kind == "svm":
        c = float(config.params["box_constraint"])
        if config.params["kernel"] == "cubic_polynomial":
            svc = SVC(kernel="poly", degree=3, coef0=1.0, C=c, gamma="scale",
                      decision_function_shape="ovo")
        else:
            svc = SVC(kernel="rbf", C=c, gamma="scale",
                      decision_function_shape="ovo")
        if config.params["scheme"] == "one_vs_all":
            return OneVsRestClassifier(svc)
        return svc
    if kind == "bagged_tree_ensemble":
        base = DecisionTreeClassifier(criterion="entropy", random_state=0)
        return BaggingClassifier(estimator=base,
                                 n_estimators=int(config.params["n_trees"]),
                                 random_state=seed)
    raise ValueError(kind)


def train_classical(config: ClassicalConfig, features: np.ndarray,
                    labels: np.ndarray, seed: int = 0) -> ClassicalModel:
    """Standardize with training statistics, then fit the configured learner."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("features must be (n, d) with matching non-empty labels")
    if not np.isfinite(X).all():
        raise ValueError("features contain non-finite values")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("training set must contain at least 2 classes")
    if y.min() < 0 or y.max() >= N_STYLES:
        raise ValueError(f"labels must be in 0-{N_STYLES - 1}")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)  # constant feature standardizes to 0
    Xs = (X - mean) / std

    impl = _build_impl(config, seed)
    if isinstance(impl, CartTree):
        impl.fit(Xs, y, n_classes=N_STYLES)
    else:
        impl.fit(Xs, y)
    return ClassicalModel(config, mean, std, classes, impl, seed)


def _spread_to_full(proba: np.ndarray, classes: np.ndarray) -> np.ndarray:
    full = np.zeros((len(proba), N_STYLES))
    full[:, classes] = proba
    return full


def _ovo_vote_shares(svc: SVC, Xs: np.ndarray) -> np.ndarray:
    df = svc.decision_function(Xs)
    if df.ndim == 1:  # binary: single column, positive favours classes_[1]
        df = df[:, None]
        votes = np.zeros((len(Xs), 2))
        votes[:, 1] = (df[:, 0] > 0)
        votes[:, 0] = 1 - votes[:, 1]
    else:
        k = len(svc.classes_)
        votes = np.zeros((len(Xs), k))
        col = 0
        for i in range(k):
            for j in range(i + 1, k):
                wins_i = df[:, col] > 0
                votes[:, i] += wins_i
                votes[:, j] += ~wins_i
                col += 1
    return votes / votes.sum(axis=1, keepdims=True)


def _ova_margin_scores(ovr: OneVsRestClassifier, Xs: np.ndarray) -> np.ndarray:
    margins = ovr.decision_function(Xs)
    if margins.ndim == 1:
        margins = np.column_stack([-margins, margins])
    scores = np.clip(margins, 0.0, None)
    sums = scores.sum(axis=1)
    dead = sums == 0.0  # every margin negative: fall back to the least-bad class
    if dead.any():
        scores[dead, :] = 0.0
        scores[dead, np.argmax(margins[dead], axis=1)] = 1.0
        sums = scores.sum(axis=1)
    return scores / sums[:, None]


def _bagging_vote_fractions(bag: BaggingClassifier, Xs: np.ndarray) -> np.ndarray:
    # member trees are fitted on label-encoded targets, i.e. positions in classes_
    votes = np.zeros((len(Xs), len(bag.classes_)))
    rows = np.arange(len(Xs))
    for est in bag.estimators_:
        votes[rows, est.predict(Xs).astype(np.int64)] += 1
    return votes / votes.sum(axis=1, keepdims=True)


def predict_proba_classical(model: ClassicalModel, features: np.ndarray) -> np.ndarray:
    """(n, 8) probability rows; argmax (lowest index on ties) is the prediction."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    Xs = (X - model.feat_mean) / model.feat_std

    kind = model.config.kind
    if kind == "naive_bayes":
        return _spread_to_full(model.impl.predict_proba(Xs), model.impl.classes_)
    if kind == "decision_tree":
        return model.impl.predict_proba(Xs)  # CartTree is already 8-wide
    if kind == "bagged_tree_ensemble":
        return _spread_to_full(_bagging_vote_fractions(model.impl, Xs),
                               model.impl.classes_)
    # svm
    if model.config.params["scheme"] == "one_vs_one":
        return _spread_to_full(_ovo_vote_shares(model.impl, Xs), model.impl.classes_)
    return _spread_to_full(_ova_margin_scores(model.impl, Xs), model.impl.classes_)


def predict_classical(model: ClassicalModel, features: np.ndarray) -> np.ndarray:
    return np.argmax(predict_proba_classical(model, features), axis=1)


def save_classical(model: ClassicalModel, out_dir) -> None:
    """Serialize to a directory: config.json + opaque parameter blob."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w") as fh:
        json.dump({"config": model.config.to_json(), "seed": model.seed}, fh, indent=1)
    blob = {
        "feat_mean": model.feat_mean, "feat_std": model.feat_std,
        "classes": model.classes,
        "impl": model.impl.to_state() if isinstance(model.impl, CartTree) else model.impl,
    }
    with open(out_dir / "params.pkl", "wb") as fh:
        pickle.dump(blob, fh)


def load_classical(in_dir) -> ClassicalModel:
    in_dir = Path(in_dir)
    with open(in_dir / "config.json") as fh:
        head = json.load(fh)
    config = ClassicalConfig.from_json(head["config"])
    with open(in_dir / "params.pkl", "rb") as fh:
        blob = pickle.load(fh)
    impl = blob["impl"]
    if config.kind == "decision_tree":
        impl = CartTree.from_state(impl)
    return ClassicalModel(config, blob["feat_mean"], blob["feat_std"],
                          blob["classes"], impl, head["seed"])
