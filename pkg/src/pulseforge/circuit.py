"""Noisy one/two-qubit circuits made of pulses, virtual-Z updates and Kraus channels.

A :class:`Circuit` is an ordered list of operations.  Two executors run it:

* :func:`run_reference` plays one input through the circuit literally: virtual
  Z rotations only update a :class:`~pulseforge.pulses.VirtualZFrame`, pulses are
  played in the current frame, channels are applied as Kraus sums and the frame
  is flushed at the end.
* :class:`CompiledCircuit` evaluates a whole batch of inputs.  Virtual Z
  rotations become explicit ``RZ`` unitaries (every channel used here commutes
  with Z rotations, so the result is the same), runs of input-independent
  operations are fused into one superoperator, and input-dependent Z rotations
  are applied as elementwise phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import KrausChannel, apply_channel, embed_operator
from .pulses import (
    CrossResonancePulse,
    SingleQubitPulse,
    VirtualZFrame,
    conjugate_into_frame,
    cr_propagator,
    flush_frames,
    rz,
    single_qubit_propagator,
    vz,
)
from .qcore import dagger


@dataclass(frozen=True)
class VZOp:
    qubit: int
    angle: float


@dataclass(frozen=True)
class DataVZOp:
    """Virtual ``RZ(offset + scale * x[feature])`` on ``qubit``."""

    qubit: int
    feature: int
    offset: float = 0.0
    scale: float = 1.0

    def angle(self, x):
        return self.offset + self.scale * x[..., self.feature]


@dataclass(frozen=True)
class PulseOp:
    pulse: SingleQubitPulse


@dataclass(frozen=True)
class CROp:
    pulse: CrossResonancePulse


@dataclass(frozen=True)
class GateOp:
    """Fixed unitary on the whole register (already in qubit-1-first order)."""

    matrix: np.ndarray
    label: str = "gate"


@dataclass(frozen=True)
class ChannelOp:
    channel: KrausChannel
    targets: tuple


@dataclass
class Circuit:
    n_qubits: int
    dev: object
    ops: list

    @property
    def dim(self):
        return 2**self.n_qubits

    def add(self, *ops):
        self.ops.extend(ops)
        return self

    def noise(self, channels):
        self.ops.extend(ChannelOp(ch, tuple(t)) for ch, t in channels)
        return self


def run_reference(circuit, x, rho0):
    """Literal single-input execution with frame tracking; returns the flushed state."""
    x = np.asarray(x, dtype=float)
    n = circuit.n_qubits
    rho = np.asarray(rho0, dtype=complex)
    frames = VirtualZFrame.zero(n)
    for op in circuit.ops:
        if isinstance(op, VZOp):
            frames = vz(frames, op.qubit, op.angle)
        elif isinstance(op, DataVZOp):
            frames = vz(frames, op.qubit, float(op.angle(x)))
        elif isinstance(op, PulseOp):
            u = embed_operator(single_qubit_propagator(op.pulse, frames), (op.pulse.qubit,), n)
            rho = u @ rho @ dagger(u)
        elif isinstance(op, CROp):
            u = cr_propagator(op.pulse, circuit.dev, frames)
            rho = u @ rho @ dagger(u)
        elif isinstance(op, GateOp):
            u = conjugate_into_frame(op.matrix, frames, n)
            rho = u @ rho @ dagger(u)
        elif isinstance(op, ChannelOp):
            rho = apply_channel(rho, op.channel, op.targets)
        else:
            raise TypeError(f"unknown circuit operation {op!r}")
    rho, _ = flush_frames(rho, frames)
    return rho


# ---------------------------------------------------------------------------
# Batched execution
# ---------------------------------------------------------------------------


def unitary_superop(u):
    return np.kron(u, u.conj())


_SUPEROP_CACHE = {}


def channel_superop(channel, targets, n_qubits):
    """Superoperator of ``channel`` on ``targets`` (memoized on the Kraus operator values)."""
    key = (tuple(np.asarray(k).tobytes() for k in channel.operators), tuple(targets), n_qubits)
    s = _SUPEROP_CACHE.get(key)
    if s is None:
        ops = [embed_operator(k, targets, n_qubits) for k in channel.operators]
        s = sum(np.kron(k, k.conj()) for k in ops)
        if len(_SUPEROP_CACHE) > 4096:
            _SUPEROP_CACHE.clear()
        _SUPEROP_CACHE[key] = s
    return s


def _z_signs(n_qubits, qubit):
    # +1 where the qubit's bit is 0, -1 where it is 1, over the register basis
    bits = (np.arange(2**n_qubits) >> (n_qubits - 1 - qubit)) & 1
    return 1.0 - 2.0 * bits


def _op_unitary(op, circuit):
    n = circuit.n_qubits
    if isinstance(op, VZOp):
        return embed_operator(rz(op.angle), (op.qubit,), n)
    if isinstance(op, PulseOp):
        return embed_operator(single_qubit_propagator(op.pulse), (op.pulse.qubit,), n)
    if isinstance(op, CROp):
        return cr_propagator(op.pulse, circuit.dev)
    if isinstance(op, GateOp):
        return op.matrix
    return None


def op_superop(op, circuit):
    """Superoperator (row-major vectorization) of one input-independent operation."""
    if isinstance(op, ChannelOp):
        return channel_superop(op.channel, op.targets, circuit.n_qubits)
    u = _op_unitary(op, circuit)
    if u is None:
        raise TypeError(f"unknown circuit operation {op!r}")
    return unitary_superop(u)


def fuse_superops(ops, circuit):
    """Product superoperator of a run of input-independent operations (first op acts first)."""
    total = None
    for op in ops:
        s = op_superop(op, circuit)
        total = s if total is None else s @ total
    if total is None:
        total = np.eye(circuit.dim**2, dtype=complex)
    return total


def split_data_ops(ops):
    """Split ``ops`` into maximal runs: ``[("fixed", [...]), ("data", [...]), ...]``."""
    runs = []
    for op in ops:
        kind = "data" if isinstance(op, DataVZOp) else "fixed"
        if runs and runs[-1][0] == kind:
            runs[-1][1].append(op)
        else:
            runs.append((kind, [op]))
    return runs


def data_phases(data_ops, X, n_qubits):
    """Elementwise factors ``(N, d*d)`` applying the input-dependent Z rotations to vec(rho)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = 2**n_qubits
    arg = np.zeros((X.shape[0], d))
    for op in data_ops:
        # RZ(a) multiplies basis state |k> by exp(-i a z_k / 2)
        arg += np.outer(op.angle(X), -0.5 * _z_signs(n_qubits, op.qubit))
    ph = np.exp(1j * arg)
    return (ph[:, :, None] * ph.conj()[:, None, :]).reshape(X.shape[0], d * d)


class CompiledCircuit:
    """Batched executor; see the module docstring."""

    def __init__(self, circuit):
        self.n_qubits = circuit.n_qubits
        self.dim = circuit.dim
        self.stages = []
        for kind, ops in split_data_ops(circuit.ops):
            if kind == "fixed":
                self.stages.append(("superop", fuse_superops(ops, circuit).T.copy()))
            else:
                self.stages.append(("phase", tuple(ops)))

    def run(self, X, rho0):
        """Final states for every row of ``X``; shape ``(len(X), dim, dim)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        d = self.dim
        vec = np.broadcast_to(np.asarray(rho0, dtype=complex).reshape(1, d * d), (n, d * d)).copy()
        for kind, payload in self.stages:
            if kind == "superop":
                vec = vec @ payload
            else:
                vec *= data_phases(payload, X, self.n_qubits)
        return vec.reshape(n, d, d)
