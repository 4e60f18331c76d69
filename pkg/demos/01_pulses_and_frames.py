"""
Pulses, virtual-Z frames and the cross-resonance entangler
==========================================================

A resonant drive of area pi flips the qubit; Z rotations are free because they
only shift the phase of later pulses.  We check both, then build a CNOT out of
a single cross-resonance pulse and a handful of single-qubit blocks.
"""

import math

import numpy as np

from pulseforge.gates import CNOT, cnot_from_cr_blocks
from pulseforge.noise import brisbane_device
from pulseforge.pulses import SingleQubitPulse, VirtualZFrame, rz, single_qubit_propagator, vz
from pulseforge.qcore import SX, global_phase_distance

np.set_printoptions(precision=4, suppress=True)

# A 300 ns resonant pulse with area pi is an X gate (up to a global phase).
T = 300.0
pi_pulse = SingleQubitPulse(amplitude=math.pi / T, phase=0.0, duration=T)
print("pi pulse vs X:", global_phase_distance(single_qubit_propagator(pi_pulse), SX))

# Playing the same pulse after a virtual Z of angle phi is the same as
# sandwiching it between explicit Z rotations.
phi = 0.7
frame = vz(VirtualZFrame.zero(1), 0, phi)
half = SingleQubitPulse(math.pi / (2 * T), 0.3, T)
in_frame = rz(phi) @ single_qubit_propagator(half, frame)
explicit = single_qubit_propagator(half) @ rz(phi)
print("frame tracking vs explicit RZ:", np.abs(in_frame - explicit).max())

# Cross resonance: drive qubit 1 at the frequency of qubit 2.  A calibrated
# schedule around one CR pulse reproduces the CNOT.
dev = brisbane_device()
schedule, fidelity = cnot_from_cr_blocks(dev)
print(f"CNOT from one CR pulse: process fidelity {fidelity:.6f} ({len(schedule)} scheduled operations)")
print("target CNOT:")
print(CNOT.real)
