"""Per-sensor CNN-LSTM, the CNN baseline, training loop, and score fusion.

The CNN-LSTM consumes a 10 s window as 8 sub-windows of 625 samples. One
shared convolution stack (3 blocks of two kernel-3 convolutions with 64,
128, 256 filters) embeds every sub-window; the 8 embeddings feed a 2-layer
bidirectional LSTM (256 hidden units per direction) whose last-time-step
state drives a 200-unit ReLU layer and the 8-way softmax.

Pooling comes in two modes. ``per_block`` (default) max-pools by 2 after
every block and mean-pools by ``reduce_factor`` before flattening, keeping
the recurrent input small enough to train on a CPU. ``literal`` applies a
single pool-2 after the three blocks, which matches the narrowest reading
of the source architecture but produces a very large recurrent input; it
exists for fidelity experiments.

The CNN baseline consumes the whole 5000-sample window through 4
conv+pool-4 blocks (128, 256, 384, 512 filters) and a 384-200-120-8 head.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from runstyle.domain import N_SENSORS, N_STYLES

PREDICT_BATCH = 16


@dataclass(frozen=True)
class CnnLstmSpec:
    conv_filters: tuple = ((64, 64), (128, 128), (256, 256))
    kernel_size: int = 3
    pooling_mode: str = "per_block"  # or "literal"
    reduce_factor: int = 8  # extra temporal mean-pool before flatten
    lstm_hidden: int = 256
    lstm_layers: int = 2
    head_hidden: int = 200
    n_subsegments: int = 8
    subsegment_len: int = 625
    in_channels: int = 3
    n_classes: int = N_STYLES

    def __post_init__(self) -> None:
        if self.pooling_mode not in ("per_block", "literal"):
            raise ValueError(f"pooling_mode must be per_block|literal, "
                             f"got {self.pooling_mode!r}")
        if self.reduce_factor < 1:
            raise ValueError("reduce_factor must be >= 1")

    @property
    def window_len(self) -> int:
        return self.n_subsegments * self.subsegment_len

    def to_json(self) -> dict:
        d = asdict(self)
        d["conv_filters"] = [list(b) for b in self.conv_filters]
        d["model"] = "cnn_lstm"
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "CnnLstmSpec":
        obj = {k: v for k, v in obj.items() if k != "model"}
        obj["conv_filters"] = tuple(tuple(b) for b in obj["conv_filters"])
        return cls(**obj)


@dataclass(frozen=True)
class CnnSpec:
    conv_filters: tuple = (128, 256, 384, 512)
    kernel_size: int = 3
    pool_size: int = 4
    head_hidden: tuple = (384, 200, 120)
    segment_len: int = 5000
    in_channels: int = 3
    n_classes: int = N_STYLES

    def to_json(self) -> dict:
        d = asdict(self)
        d["conv_filters"] = list(self.conv_filters)
        d["head_hidden"] = list(self.head_hidden)
        d["model"] = "cnn"
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "CnnSpec":
        obj = {k: v for k, v in obj.items() if k != "model"}
        obj["conv_filters"] = tuple(obj["conv_filters"])
        obj["head_hidden"] = tuple(obj["head_hidden"])
        return cls(**obj)


def spec_from_json(obj: dict):
    return CnnLstmSpec.from_json(obj) if obj.get("model") == "cnn_lstm" \
        else CnnSpec.from_json(obj)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 2e-4
    seed: int = 0
    patience: int | None = None  # epochs without val-accuracy improvement
    steps_per_epoch: int | None = None  # cap optimizer steps per epoch

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


class CnnLstmNet(nn.Module):
    def __init__(self, spec: CnnLstmSpec):
        super().__init__()
        self.spec = spec
        layers: list[nn.Module] = []
        in_ch = spec.in_channels
        length = spec.subsegment_len
        pad = spec.kernel_size // 2
        for block in spec.conv_filters:
            for filters in block:
                layers += [nn.Conv1d(in_ch, filters, spec.kernel_size, padding=pad),
                           nn.ReLU()]
                in_ch = filters
            if spec.pooling_mode == "per_block":
                layers.append(nn.MaxPool1d(2))
                length //= 2
        if spec.pooling_mode == "literal":
            layers.append(nn.MaxPool1d(2))
            length //= 2
        if spec.reduce_factor > 1:
            layers.append(nn.AvgPool1d(spec.reduce_factor))
            length //= spec.reduce_factor
        if length < 1:
            raise ValueError("spec pools the sub-segment away entirely")
        self.cnn = nn.Sequential(*layers)
        self.embed_dim = length * in_ch
        self.lstm = nn.LSTM(self.embed_dim, spec.lstm_hidden,
                            num_layers=spec.lstm_layers, bidirectional=True,
                            batch_first=True)
        self.fc1 = nn.Linear(2 * spec.lstm_hidden, spec.head_hidden)
        self.fc2 = nn.Linear(spec.head_hidden, spec.n_classes)

    def embed_subsegments(self, x: torch.Tensor) -> torch.Tensor:
        """(B, 8, 625, 3) -> (B, 8, embed_dim); weights shared across positions."""
        b, s, n, c = x.shape
        flat = x.reshape(b * s, n, c).permute(0, 2, 1)
        z = self.cnn(flat)
        return z.reshape(b, s, self.embed_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.embed_subsegments(x)
        out, _ = self.lstm(z)
        h = out[:, -1, :]  # concatenated forward/backward state at the last step
        return self.fc2(torch.relu(self.fc1(h)))


class CnnNet(nn.Module):
    def __init__(self, spec: CnnSpec):
        super().__init__()
        self.spec = spec
        layers: list[nn.Module] = []
        in_ch = spec.in_channels
        length = spec.segment_len
        pad = spec.kernel_size // 2
        for filters in spec.conv_filters:
            layers += [nn.Conv1d(in_ch, filters, spec.kernel_size, padding=pad),
                       nn.ReLU(), nn.MaxPool1d(spec.pool_size)]
            in_ch = filters
            length //= spec.pool_size
        self.cnn = nn.Sequential(*layers)
        self.flat_dim = length * in_ch
        head: list[nn.Module] = []
        prev = self.flat_dim
        for width in spec.head_hidden:
            head += [nn.Linear(prev, width), nn.ReLU()]
            prev = width
        head.append(nn.Linear(prev, spec.n_classes))
        self.head = nn.Sequential(*head)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.cnn(x.permute(0, 2, 1))
        return self.head(z.reshape(x.shape[0], -1))


def build_cnn_lstm(spec: CnnLstmSpec | None = None, seed: int = 0) -> CnnLstmNet:
    spec = spec or CnnLstmSpec()
    torch.manual_seed(seed)
    return CnnLstmNet(spec)


def build_cnn(spec: CnnSpec | None = None, seed: int = 0) -> CnnNet:
    spec = spec or CnnSpec()
    torch.manual_seed(seed)
    return CnnNet(spec)


def parameter_count(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters())


@dataclass(frozen=True)
class NormStats:
    """Per-channel z-score statistics, computed from the training split only."""

    mean: np.ndarray  # (3,)
    std: np.ndarray  # (3,)

    @classmethod
    def from_segments(cls, segments: np.ndarray) -> "NormStats":
        mean = segments.mean(axis=(0, 1), dtype=np.float64)
        std = segments.std(axis=(0, 1), dtype=np.float64)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean.astype(np.float32), std.astype(np.float32))

    def apply(self, segments: np.ndarray) -> np.ndarray:
        return ((segments - self.mean) / self.std).astype(np.float32)

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "NormStats":
        return cls(np.asarray(obj["mean"], np.float32),
                   np.asarray(obj["std"], np.float32))


@dataclass
class TrainedModel:
    spec: CnnLstmSpec | CnnSpec
    net: nn.Module
    norm: NormStats
    history: dict = field(default_factory=dict)  # per-epoch train/val curves


def _as_model_input(spec, segments: np.ndarray) -> torch.Tensor:
    """Accept (n, window, 3) or a single (window, 3); reshape for the CNN-LSTM."""
    arr = np.asarray(segments, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None]
    if isinstance(spec, CnnLstmSpec):
        if arr.ndim == 3:
            if arr.shape[1] != spec.window_len:
                raise ValueError(f"expected window of {spec.window_len} samples, "
                                 f"got {arr.shape[1]}")
            arr = arr.reshape(len(arr), spec.n_subsegments, spec.subsegment_len, 3)
        elif arr.shape[1:] != (spec.n_subsegments, spec.subsegment_len, 3):
            raise ValueError(f"bad CNN-LSTM input shape {arr.shape}")
    else:
        if arr.ndim != 3 or arr.shape[1] != spec.segment_len:
            raise ValueError(f"expected (n, {spec.segment_len}, 3) input, "
                             f"got {arr.shape}")
    return torch.from_numpy(arr)


def _forward_batched(net: nn.Module, x: torch.Tensor,
                     batch: int = PREDICT_BATCH) -> torch.Tensor:
    outs = []
    with torch.no_grad():
        for i in range(0, len(x), batch):
            outs.append(net(x[i:i + batch]))
    return torch.cat(outs)


def predict_proba(model: TrainedModel | nn.Module, segments: np.ndarray) -> np.ndarray:
    """Softmax class probabilities; applies the stored normalization if trained.

    A single (window, 3) segment gives an (8,) vector, a batch gives (n, 8).
    """
    if isinstance(model, TrainedModel):
        net, spec = model.net, model.spec
        segments = np.asarray(segments, dtype=np.float32)
        single = segments.ndim == 2
        segments = model.norm.apply(segments)
    else:
        net, spec = model, model.spec
        single = np.asarray(segments).ndim == 2
    x = _as_model_input(spec, segments)
    net.eval()
    probs = torch.softmax(_forward_batched(net, x), dim=1).numpy()
    return probs[0] if single else probs


def _evaluate(net, x, y, lossfn):
    logits = _forward_batched(net, x, batch=2 * PREDICT_BATCH)
    loss = float(lossfn(logits, y)) if len(y) else 0.0
    acc = float((logits.argmax(1) == y).float().mean()) if len(y) else 0.0
    return loss, acc


def train(net: nn.Module, train_segments: np.ndarray, train_labels: np.ndarray,
          val_segments: np.ndarray | None, val_labels: np.ndarray | None,
          cfg: TrainConfig, norm: NormStats | None = None) -> TrainedModel:
    """Cross-entropy training with Adam; retains the best-validation epoch.

    Normalization statistics come from the training split (or are inherited
    via ``norm`` when continuing training, e.g. for fine-tuning). The best
    epoch is the one with the highest validation accuracy (ties: lower
    validation loss, then earlier epoch); without a validation set the last
    epoch wins and early stopping is disabled.
    """
    y = np.asarray(train_labels, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("training set is empty")
    if y.min() < 0 or y.max() >= N_STYLES:
        raise ValueError(f"labels must be in 0-{N_STYLES - 1}")
    spec = net.spec

    if norm is None:
        norm = NormStats.from_segments(np.asarray(train_segments, np.float32))
    xt = _as_model_input(spec, norm.apply(train_segments))
    yt = torch.from_numpy(y)
    has_val = val_segments is not None and len(val_segments) > 0
    if has_val:
        xv = _as_model_input(spec, norm.apply(val_segments))
        yv = torch.from_numpy(np.asarray(val_labels, dtype=np.int64))

    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    lossfn = nn.CrossEntropyLoss()

    history = {"train_loss": [], "val_loss": [], "val_acc": []}
    best = None  # (acc, -loss, -epoch, state_dict)
    since_best = 0

    for epoch in range(cfg.epochs):
        net.train()
        order = rng.permutation(len(xt))
        if cfg.steps_per_epoch is not None:
            order = order[: cfg.steps_per_epoch * cfg.batch_size]
        losses = []
        for i in range(0, len(order), cfg.batch_size):
            idx = order[i:i + cfg.batch_size]
            opt.zero_grad()
            loss = lossfn(net(xt[idx]), yt[idx])
            loss.backward()
            opt.step()
            losses.append(float(loss))
        history["train_loss"].append(float(np.mean(losses)))

        if has_val:
            net.eval()
            val_loss, val_acc = _evaluate(net, xv, yv, lossfn)
            history["val_loss"].append(val_loss)
            history["val_acc"].append(val_acc)
            key = (val_acc, -val_loss, -epoch)
            if best is None or key > best[0]:
                best = (key, copy.deepcopy(net.state_dict()))
                since_best = 0
            else:
                since_best += 1
                if cfg.patience is not None and since_best > cfg.patience:
                    break

    if best is not None:
        net.load_state_dict(best[1])
    net.eval()
    return TrainedModel(spec=spec, net=net, norm=norm, history=history)


def fuse_scores(probs) -> np.ndarray:
    """Element-wise mean of the five per-sensor probability vectors."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim == 1 or arr.shape[0] != N_SENSORS:
        raise ValueError(f"expected {N_SENSORS} probability vectors, "
                         f"got shape {arr.shape}")
    if (arr < 0).any() or np.abs(arr.sum(axis=-1) - 1.0).max() > 1e-5:
        raise ValueError("inputs must lie on the probability simplex")
    return arr.mean(axis=0)


def fused_prediction(probs) -> int:
    """Fused class: argmax of the mean, ties broken by the lowest index."""
    return int(np.argmax(fuse_scores(probs)))


def save_model(model: TrainedModel, out_dir) -> None:
    """Artifact directory: spec.json, norm.json, params.pt, history.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "spec.json", "w") as fh:
        json.dump(model.spec.to_json(), fh, indent=1)
    with open(out_dir / "norm.json", "w") as fh:
        json.dump(model.norm.to_json(), fh, indent=1)
    with open(out_dir / "history.json", "w") as fh:
        json.dump(model.history, fh, indent=1)
    torch.save(model.net.state_dict(), out_dir / "params.pt")


def load_model(in_dir) -> TrainedModel:
    in_dir = Path(in_dir)
    with open(in_dir / "spec.json") as fh:
        spec = spec_from_json(json.load(fh))
    with open(in_dir / "norm.json") as fh:
        norm = NormStats.from_json(json.load(fh))
    with open(in_dir / "history.json") as fh:
        history = json.load(fh)
    net = CnnLstmNet(spec) if isinstance(spec, CnnLstmSpec) else CnnNet(spec)
    net.load_state_dict(torch.load(in_dir / "params.pt", weights_only=True))
    net.eval()
    return TrainedModel(spec=spec, net=net, norm=norm, history=history)


def clone_model(model: TrainedModel) -> TrainedModel:
    """Deep copy whose training can continue without touching the original."""
    net = CnnLstmNet(model.spec) if isinstance(model.spec, CnnLstmSpec) \
        else CnnNet(model.spec)
    net.load_state_dict(copy.deepcopy(model.net.state_dict()))
    return TrainedModel(spec=model.spec, net=net, norm=model.norm,
                        history={k: list(v) for k, v in model.history.items()})
