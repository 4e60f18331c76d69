"""
Gate-based versus pulse-based classifier on the circle task
===========================================================

Train a one-qubit model, warm-start a two-qubit model from it with the
entangler switched off, and keep training.  Without noise the warm start
reproduces the one-qubit loss exactly.  With noise the idle entangler still
costs its two-qubit error and decay, so the second stage starts slightly above
where the first ended.

Takes about ten seconds.
"""

from pulseforge.datasets import split, synth_circle
from pulseforge.models import dataset_loss
from pulseforge.noise import NOISELESS, NoisePolicy, brisbane_device
from pulseforge.training import TrainConfig, train, warm_start_two_qubit

dev = brisbane_device()
policy = NoisePolicy()  # Brisbane noise and readout errors
train_set, test_set = split(synth_circle(300, seed=0), 200, 100, seed=0)
layers = 3

for variant in ("gate", "pulsed"):
    r1 = train(variant, layers, train_set, dev, policy, TrainConfig(epochs=60, seed=0), test=test_set)
    init = warm_start_two_qubit(r1.params, seed=0)
    print(f"{variant}: 1q train/test accuracy {r1.train_accuracy:.2f}/{r1.test_accuracy:.2f}, "
          f"loss {dataset_loss(train_set, r1.params, dev, policy):.4f} -> warm start "
          f"{dataset_loss(train_set, init, dev, policy):.4f} (noiseless: "
          f"{dataset_loss(train_set, r1.params, dev, NOISELESS):.6f} -> "
          f"{dataset_loss(train_set, init, dev, NOISELESS):.6f})")
    r2 = train(variant, layers, train_set, dev, policy, TrainConfig(epochs=60, seed=0), init=init, test=test_set)
    print(f"{variant}: 2q train/test accuracy {r2.train_accuracy:.2f}/{r2.test_accuracy:.2f} "
          f"({r2.wall_time:.1f} s)")
