"""Run profiles: the full-fidelity configuration and a desk-scale one.

``full`` mirrors the reference training recipe (300 s recordings, 300
epochs, batch 64, Adam at 2e-4). ``desk`` is sized so that a complete
two-scheme CNN-LSTM comparison finishes on a two-core laptop CPU: shorter
recordings, a capped number of optimizer steps per epoch, a larger
learning rate to compensate for the small step budget, and early stopping
on validation accuracy. Both profiles drive the same code paths.
"""

from __future__ import annotations

from dataclasses import dataclass

from runstyle.deepnet import TrainConfig


@dataclass(frozen=True)
class Profile:
    name: str
    duration_s: float
    train: TrainConfig
    tune: TrainConfig
    jobs: int = 1


DESK = Profile(
    name="desk",
    duration_s=120.0,
    train=TrainConfig(epochs=8, batch_size=16, learning_rate=2e-3,
                      patience=1, steps_per_epoch=25),
    tune=TrainConfig(epochs=12, batch_size=16, learning_rate=2e-3),
    jobs=2,
)

FULL = Profile(
    name="full",
    duration_s=300.0,
    train=TrainConfig(epochs=300, batch_size=64, learning_rate=2e-4),
    tune=TrainConfig(epochs=50, batch_size=64, learning_rate=2e-4),
    jobs=1,
)

PROFILES = {"desk": DESK, "full": FULL}
