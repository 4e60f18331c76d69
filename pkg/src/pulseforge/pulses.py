"""Rotating-frame pulse Hamiltonians, their propagators and virtual-Z frames.

Units: angular frequencies in rad/ns, times in ns.

A :class:`VirtualZFrame` records, per qubit, the total angle ``phi`` of the
Z rotations ``RZ(phi) = exp(-i phi/2 Z)`` that have been requested but not
physically applied.  A pulse played while a frame is pending is the conjugate
``RZ(phi)^dagger U RZ(phi)``, which for an XY drive amounts to shifting its
phase to ``gamma - phi``; :func:`flush_frames` finally applies the pending
rotations to the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qcore import I2, SX, SY, SZ, apply_unitary, dagger, expm_hermitian, kron

DEFAULT_ENVELOPE_SAMPLES = 128
_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


@dataclass(frozen=True)
class Constant:
    """Flat-top envelope ``s(t) = 1``."""

    def samples(self):
        return (1.0,)


@dataclass(frozen=True)
class PiecewiseSampled:
    """Envelope given by its value on ``len(values)`` equal sub-intervals of the pulse."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("a sampled envelope needs at least one sample")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("envelope samples must be finite")
        if any(v < 0 or v > 1 for v in vals):
            raise ValueError("envelope samples must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, fn, n=DEFAULT_ENVELOPE_SAMPLES):
        """Sample ``fn`` on ``[0, 1]`` at the midpoints of ``n`` equal sub-intervals."""
        t = (np.arange(n) + 0.5) / n
        return cls(tuple(float(fn(x)) for x in t))

    def samples(self):
        return self.values


def _normalized_amplitude(omega, gamma):
    if omega < 0:
        return -omega, gamma + math.pi
    return omega, gamma


@dataclass(frozen=True)
class SingleQubitPulse:
    """Drive on one qubit: amplitude (rad/ns), phase (rad), detuning (rad/ns), duration (ns)."""

    amplitude: float
    phase: float
    duration: float
    detuning: float = 0.0
    envelope: object = field(default_factory=Constant)
    qubit: int = 0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"pulse duration must be positive, got {self.duration}")
        omega, gamma = _normalized_amplitude(float(self.amplitude), float(self.phase))
        object.__setattr__(self, "amplitude", omega)
        object.__setattr__(self, "phase", gamma)


@dataclass(frozen=True)
class CrossResonancePulse:
    """Drive on ``control`` at the frequency of ``target``, offset by ``detuning`` (rad/ns)."""

    amplitude: float
    phase: float
    duration: float
    detuning: float = 0.0
    envelope: object = field(default_factory=Constant)
    control: int = 0
    target: int = 1

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("control and target must differ")
        if not self.duration > 0:
            raise ValueError(f"pulse duration must be positive, got {self.duration}")
        omega, gamma = _normalized_amplitude(float(self.amplitude), float(self.phase))
        object.__setattr__(self, "amplitude", omega)
        object.__setattr__(self, "phase", gamma)


@dataclass(frozen=True)
class VirtualZFrame:
    """Pending Z-rotation angle per qubit."""

    phases: tuple = (0.0, 0.0)

    def __post_init__(self):
        phases = tuple(float(p) for p in self.phases)
        if not all(math.isfinite(p) for p in phases):
            raise ValueError("frame phases must be finite")
        object.__setattr__(self, "phases", phases)

    @classmethod
    def zero(cls, n_qubits=2):
        return cls((0.0,) * n_qubits)

    def phase(self, qubit):
        return self.phases[qubit] if qubit < len(self.phases) else 0.0


def _xy(gamma):
    return math.cos(gamma) * SX + math.sin(gamma) * SY


def drive_hamiltonian(p, s_value=1.0, frame_phase=0.0):
    """``-(detuning/2) Z + (amplitude * s / 2)(cos g X + sin g Y)`` with ``g = phase - frame_phase``."""
    gamma = p.phase - frame_phase
    return -0.5 * p.detuning * SZ + 0.5 * p.amplitude * s_value * _xy(gamma)


def _evolve(hamiltonian_at, duration, envelope):
    samples = envelope.samples()
    dt = duration / len(samples)
    cache = {}
    u = None
    for s in samples:
        step = cache.get(s)
        if step is None:
            step = cache[s] = expm_hermitian(hamiltonian_at(s), dt)
        u = step if u is None else step @ u
    return u


def single_qubit_propagator(p, frame=None):
    """Unitary of ``p`` played in ``frame`` (the frame itself is not modified)."""
    phi = 0.0 if frame is None else frame.phase(p.qubit)
    return _evolve(lambda s: drive_hamiltonian(p, s, phi), p.duration, p.envelope)


def cr_coefficients(dev, control, target):
    """``(detuning, mu, nu)`` for a cross-resonance drive on ``control`` at the ``target`` frequency."""
    qc, qt = dev.qubit(control), dev.qubit(target)
    detuning = qc.frequency - qt.frequency
    if dev.mu is not None:
        mu = dev.mu
    else:
        mu = dev.coupling / detuning if detuning != 0 else 0.0
    return detuning, mu, dev.cr_nu


def _to_register_order(h, control):
    # matrices are built as control (x) target; reorder when qubit 2 is the control
    return h if control == 0 else _SWAP @ h @ _SWAP


def cr_hamiltonian(p, dev, s_value=1.0, frames=None):
    """Effective cross-resonance Hamiltonian in register (qubit 1 first) ordering.

    The trainable drive detuning ``delta`` enters as ``Delta_12 -> Delta_12 + delta``
    on the control drift plus ``-(delta/2) Z`` on the target.
    """
    detuning, mu, nu = cr_coefficients(dev, p.control, p.target)
    phi_c = 0.0 if frames is None else frames.phase(p.control)
    phi_t = 0.0 if frames is None else frames.phase(p.target)
    xy_c = _xy(p.phase - phi_c)
    xy_t = _xy(p.phase - phi_t)
    drift = -0.5 * (detuning + p.detuning) * kron(SZ, I2) - 0.5 * p.detuning * kron(I2, SZ)
    drive = kron(xy_c, I2) + mu * kron(SZ, xy_t) + nu * kron(I2, xy_t)
    return _to_register_order(drift + 0.5 * p.amplitude * s_value * drive, p.control)


def cr_propagator(p, dev, frames=None):
    """Unitary of the cross-resonance pulse ``p`` played in ``frames``."""
    return _evolve(lambda s: cr_hamiltonian(p, dev, s, frames), p.duration, p.envelope)


def cr_drift_correction(p, dev):
    """Virtual-Z angles ``[(qubit, angle), ...]`` that undo the pulse's free Z drift.

    The drift terms generate ``RZ_c(-(Delta + delta) T) RZ_t(-delta T)``; applying
    these frame updates after the pulse returns both qubits to their own rotating
    frames, so a zero-amplitude entangler is exactly the identity.
    """
    detuning, _, _ = cr_coefficients(dev, p.control, p.target)
    return [
        (p.control, (detuning + p.detuning) * p.duration),
        (p.target, p.detuning * p.duration),
    ]


def vz(frames, qubit, angle):
    """Return ``frames`` with a further ``RZ(angle)`` pending on ``qubit``."""
    phases = list(frames.phases)
    while len(phases) <= qubit:
        phases.append(0.0)
    phases[qubit] += float(angle)
    return VirtualZFrame(tuple(phases))


def rz(angle):
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def frame_unitary(frames, n_qubits):
    """The pending rotation ``RZ(phi_1) (x) RZ(phi_2)`` as a matrix."""
    u = np.ones((1, 1), dtype=complex)
    for q in range(n_qubits):
        u = kron(u, rz(frames.phase(q)))
    return u


def conjugate_into_frame(u, frames, n_qubits):
    """Physical operation that realizes the logical gate ``u`` while ``frames`` is pending."""
    f = frame_unitary(frames, n_qubits)
    return dagger(f) @ u @ f


def flush_frames(rho, frames):
    """Apply the pending Z rotations to ``rho``; returns ``(rho, zero_frame)``."""
    rho = np.asarray(rho)
    n = int(round(math.log2(rho.shape[0])))
    rho = apply_unitary(rho, frame_unitary(frames, n))
    return rho, VirtualZFrame.zero(len(frames.phases))


def effective_coupling(g1, g2, w1, w2, wr):
    """Resonator-mediated qubit-qubit coupling ``J`` in the dispersive regime."""
    if w1 == wr or w2 == wr:
        raise ValueError("qubit resonant with the coupler: effective coupling diverges")
    return g1 * g2 * (w1 + w2 - 2 * wr) / (2 * (w1 - wr) * (w2 - wr))
