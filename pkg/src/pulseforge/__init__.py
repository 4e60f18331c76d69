"""Simulation and training of pulse-level data re-uploading classifiers on transmon qubits.

Modules
-------
qcore     linear-algebra primitives for one- and two-qubit states
pulses    rotating-frame pulse Hamiltonians, propagators and virtual-Z frames
gates     Euler decompositions, SX/virtual-Z transpilation, controlled gates, CNOT from cross resonance
noise     Kraus channels, device descriptions and the per-operation noise schedule
circuit   noisy circuits and their single-input and batched executors
models    the gate-based and pulse-based classifiers
training  finite-difference Adam training and the two-qubit warm start
datasets  CSV loading, PCA reduction and the synthetic circle task
"""

__version__ = "0.1.0"
