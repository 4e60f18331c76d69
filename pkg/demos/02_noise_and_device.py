"""
Device noise from the Brisbane datasheet
========================================

Every native operation is followed by a depolarizing channel, amplitude
damping and phase damping, with strengths derived from the device table.
Here we watch a superposition decay through repeated idle-length pulses.
"""

import math

import numpy as np

from pulseforge.noise import (
    NoisePolicy, amplitude_damping, apply_channel, brisbane_device, confusion_matrix, damping_params,
    describe_device, phase_damping, post_op_channels,
)
from pulseforge.qcore import projector, purity

dev = brisbane_device()
info = describe_device(dev)
q1 = info["qubits"][0]
print(f"qubit 1: p_dep = {q1['depolarizing_p']:.3g}, gamma(300 ns) = {q1['gamma_1q']:.4e}")
print("closed form 1 - exp(-300/180000) =", 1 - math.exp(-300 / 180_000))

# |+> after n single-qubit pulses on qubit 1
plus = projector(np.array([1, 1]) / math.sqrt(2))
rho = plus
channels = post_op_channels("1q-pulse", 300.0, (0,), dev, NoisePolicy())
for n in range(1, 2001):
    for ch, targets in channels:
        rho = apply_channel(rho, ch, targets)
    if n in (1, 10, 100, 1000, 2000):
        print(f"after {n:5d} pulses: purity {purity(rho):.4f}, |rho_01| {abs(rho[0, 1]):.4f}")

# damping alone over the same elapsed time; the gap to the loop above is the depolarizing part
gamma, lam = damping_params(2000 * 300.0, dev.qubit(0).t1, dev.qubit(0).t2)
print("damping only, applied once: |rho_01| =", abs(apply_channel(apply_channel(plus, amplitude_damping(gamma)),
                                                      phase_damping(lam))[0, 1]))

# Readout: the confusion matrix maps true to measured probabilities.
print("confusion matrix for qubit 1:")
print(confusion_matrix(dev, 0))
