"""Gate algebra: ZYZ Euler angles, SX/virtual-Z transpilation, controlled-SU(2)
decomposition and a CNOT built from native transmon pulses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .noise import embed_operator
from .pulses import (
    CrossResonancePulse,
    SingleQubitPulse,
    VirtualZFrame,
    cr_coefficients,
    cr_drift_correction,
    cr_propagator,
    frame_unitary,
    rz,
    single_qubit_propagator,
    vz,
)
from .qcore import I2, SX, SY, dagger, is_unitary, kron, process_fidelity

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
# CNOT with qubit 2 as control and qubit 1 as target
CNOT_21 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)

_GIMBAL_TOL = 1e-14


def rx(theta):
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * SX


def ry(theta):
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * SY


@dataclass(frozen=True)
class EulerAngles:
    """``U = RZ(theta1) RY(theta2) RZ(theta3)``."""

    theta1: float = 0.0
    theta2: float = 0.0
    theta3: float = 0.0

    def __post_init__(self):
        for v in (self.theta1, self.theta2, self.theta3):
            if not math.isfinite(v):
                raise ValueError("Euler angles must be finite")

    def as_tuple(self):
        return (self.theta1, self.theta2, self.theta3)


def su2_from_euler(a):
    t1, t2, t3 = a.as_tuple() if isinstance(a, EulerAngles) else a
    return rz(t1) @ ry(t2) @ rz(t3)


def euler_from_su2(u):
    """ZYZ angles reproducing ``u`` up to global phase, with ``theta2`` in ``[0, pi]``.

    At ``theta2 = 0`` or ``pi`` only a sum or difference of the outer angles is
    defined; ``theta3 = 0`` is chosen.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, 1e-8):
        raise ValueError("euler_from_su2 expects a 2x2 unitary")
    u = u / np.sqrt(np.linalg.det(u))
    c = 0.5 * (abs(u[0, 0]) + abs(u[1, 1]))
    s = 0.5 * (abs(u[1, 0]) + abs(u[0, 1]))
    theta2 = 2 * math.atan2(s, c)
    if s < _GIMBAL_TOL:
        return EulerAngles(_wrap(float(np.angle(u[1, 1] / u[0, 0]))), 0.0, 0.0)
    if c < _GIMBAL_TOL:
        return EulerAngles(_wrap(float(np.angle(-u[1, 0] / u[0, 1]))), math.pi, 0.0)
    # with det u = 1: u00 = e^{-i(a+c)/2} cos, u10 = e^{i(a-c)/2} sin, up to one shared sign
    half_sum = -float(np.angle(u[0, 0]))
    half_diff = float(np.angle(u[1, 0]))
    return EulerAngles(_wrap(half_sum + half_diff), theta2, _wrap(half_sum - half_diff))


def _wrap(angle):
    """Map to ``(-pi, pi]``; shifting an outer Euler angle by 2 pi only flips the global sign."""
    w = math.remainder(angle, 2 * math.pi)
    return math.pi if w == -math.pi else w


def u3_matrix(theta, phi, lam):
    """``U(theta, phi, lambda) = RZ(phi) RY(theta) RZ(lambda)``."""
    return rz(phi) @ ry(theta) @ rz(lam)


# ---------------------------------------------------------------------------
# Native operations
# ---------------------------------------------------------------------------

NATIVE_KINDS = ("RZ-virtual", "SX", "X", "RY-pulse", "CNOT", "ControlledSU2")


@dataclass(frozen=True)
class NativeOp:
    kind: str
    params: tuple = ()
    qubits: tuple = (0,)
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in NATIVE_KINDS:
            raise ValueError(f"unknown native op {self.kind!r}")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.kind == "RZ-virtual" and self.duration != 0:
            raise ValueError("virtual Z rotations take no time")

    def matrix(self):
        """Unitary on the op's own qubits (control first for CNOT)."""
        if self.kind == "RZ-virtual":
            return rz(self.params[0])
        if self.kind == "SX":
            return rx(math.pi / 2)
        if self.kind == "X":
            return rx(math.pi)
        if self.kind == "RY-pulse":
            return ry(self.params[0])
        if self.kind == "CNOT":
            return CNOT
        return controlled_su2(EulerAngles(*self.params))

    def register_matrix(self, n_qubits=2):
        """Unitary on the full register, qubit 1 first."""
        m = self.matrix()
        if m.shape == (2, 2):
            return embed_operator(m, self.qubits, n_qubits)
        if self.kind == "CNOT":
            return CNOT if tuple(self.qubits) == (0, 1) else CNOT_21
        return m


def sequence_unitary(ops, n_qubits):
    u = np.eye(2**n_qubits, dtype=complex)
    for op in ops:
        u = op.register_matrix(n_qubits) @ u
    return u


def u3_sx_vz_sequence(theta, phi, lam, qubit=0, sx_duration=300.0):
    """Five native ops, in time order, realizing ``U(theta, phi, lambda)`` up to global phase:
    ``RZ(phi) SX RZ(pi - theta) SX RZ(lambda - pi)``.

    With ``SX = RX(pi/2)`` the two SX pulses around ``RZ(pi - theta)`` give
    ``RY(theta) RZ(pi)``, hence the ``-pi`` on the first virtual rotation.
    """
    return [
        NativeOp("RZ-virtual", (lam - math.pi,), (qubit,)),
        NativeOp("SX", (), (qubit,), sx_duration),
        NativeOp("RZ-virtual", (math.pi - theta,), (qubit,)),
        NativeOp("SX", (), (qubit,), sx_duration),
        NativeOp("RZ-virtual", (phi,), (qubit,)),
    ]


def euler_sx_vz_sequence(a, qubit=0, sx_duration=300.0):
    """Native sequence for ``RZ(a1) RY(a2) RZ(a3)``."""
    t1, t2, t3 = a.as_tuple()
    return u3_sx_vz_sequence(t2, t1, t3, qubit, sx_duration)


def controlled_su2(a):
    """``I (x) |0><0| + U (x) |1><1|``: qubit 2 controls ``U = su2_from_euler(a)`` on qubit 1."""
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    return kron(I2, p0) + kron(su2_from_euler(a), p1)


def abc_factors(a):
    """Single-qubit factors with ``A B C = I`` and ``A X B X C = U``."""
    t1, t2, t3 = a.as_tuple()
    fa = EulerAngles(t1, t2 / 2, 0.0)
    fb = EulerAngles(0.0, -t2 / 2, -(t1 + t3) / 2)
    fc = (t3 - t1) / 2
    return fa, fb, fc


def decompose_controlled_su2(a, oneq_duration=300.0, twoq_duration=660.0):
    """Native sequence, in time order, for :func:`controlled_su2`: ``C, CNOT, B, CNOT, A``.

    ``A`` and ``B`` are transpiled to SX/virtual-Z sequences; ``C`` is a pure
    Z rotation and stays virtual.
    """
    fa, fb, fc = abc_factors(a)
    cx = NativeOp("CNOT", (), (1, 0), twoq_duration)
    return (
        [NativeOp("RZ-virtual", (fc,), (0,))]
        + [cx]
        + euler_sx_vz_sequence(fb, 0, oneq_duration)
        + [cx]
        + euler_sx_vz_sequence(fa, 0, oneq_duration)
    )


# ---------------------------------------------------------------------------
# CNOT from cross-resonance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VirtualZ:
    qubit: int
    angle: float


def schedule_unitary(schedule, dev, n_qubits=2):
    """Noiseless unitary of a pulse schedule (pulses and virtual-Z updates), frames flushed."""
    frames = VirtualZFrame.zero(n_qubits)
    u = np.eye(2**n_qubits, dtype=complex)
    for item in schedule:
        if isinstance(item, VirtualZ):
            frames = vz(frames, item.qubit, item.angle)
        elif isinstance(item, SingleQubitPulse):
            step = embed_operator(single_qubit_propagator(item, frames), (item.qubit,), n_qubits)
            u = step @ u
        elif isinstance(item, CrossResonancePulse):
            u = cr_propagator(item, dev, frames) @ u
        else:
            raise TypeError(f"unsupported schedule item {item!r}")
    return frame_unitary(frames, n_qubits) @ u


def _block(qubit, params, duration):
    nu1, nu2, area, gamma = params
    return [
        VirtualZ(qubit, nu2),
        SingleQubitPulse(area / duration, gamma, duration, qubit=qubit),
        VirtualZ(qubit, nu1),
    ]


def _build_cnot_schedule(x, dev, control, target, cr_amplitude):
    t1q = dev.qubit(control).oneq_duration
    cr = CrossResonancePulse(cr_amplitude, x[8], x[9], control=control, target=target)
    sched = _block(control, x[0:4], t1q) + _block(target, x[4:8], t1q) + [cr]
    sched += [VirtualZ(q, ang) for q, ang in cr_drift_correction(cr, dev)]
    sched += _block(control, x[10:14], t1q) + _block(target, x[14:18], t1q)
    return sched


def _cnot_target(control, target):
    return CNOT if (control, target) == (0, 1) else CNOT_21


def _phase_aligned_residual(u, v):
    ov = np.trace(dagger(v) @ u)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    d = u / phase - v
    return np.concatenate([d.real.ravel(), d.imag.ravel()])


def cnot_from_cr_blocks(dev, control=0, target=1, cr_amplitude=None, fidelity_target=0.9999,
                        max_iterations=500, seed=0):
    """Schedule of single-qubit pulses, virtual-Z updates and one CR pulse realizing CNOT.

    The CR pulse starts at the duration ``pi / (2 mu Omega)`` that gives a
    ``pi/2`` ZX angle; the surrounding single-qubit blocks, the CR phase and its
    duration are then refined numerically (least squares on the phase-aligned
    matrix residual) to cancel the residual single-qubit terms.  Returns
    ``(schedule, fidelity)``.
    """
    _, mu, _ = cr_coefficients(dev, control, target)
    if mu == 0:
        raise ValueError("device has no cross-resonance interaction (mu = 0)")
    if cr_amplitude is None:
        # nominal ZX(pi/2) within the device's two-qubit gate time
        cr_amplitude = math.pi / (2 * abs(mu) * dev.twoq_duration)
    t_cr = math.pi / (2 * abs(mu) * cr_amplitude)
    goal = _cnot_target(control, target)
    # ZX(pi/2) followed by S^dagger on the control and RX(-pi/2) on the target
    gamma0 = 0.0 if mu > 0 else math.pi
    x0 = np.zeros(18)
    x0[8], x0[9] = gamma0, t_cr
    x0[10:14] = (-math.pi / 2, 0.0, 0.0, 0.0)
    x0[14:18] = (0.0, 0.0, math.pi / 2, math.pi)

    def residual(x):
        if x[9] <= 0:
            return np.full(32, 10.0)
        u = schedule_unitary(_build_cnot_schedule(x, dev, control, target, cr_amplitude), dev)
        return _phase_aligned_residual(u, goal)

    rng = np.random.default_rng(seed)
    best_x, best_f = x0, -1.0
    for attempt in range(16):
        start = x0.copy()
        if attempt:
            start[np.r_[0:8, 10:18]] = rng.uniform(-math.pi, math.pi, 16)
            start[8] = rng.uniform(-math.pi, math.pi)
            start[9] = t_cr * rng.uniform(0.5, 1.5)
        sol = least_squares(residual, start, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=max_iterations * 20)
        sched = _build_cnot_schedule(sol.x, dev, control, target, cr_amplitude)
        f = process_fidelity(goal, schedule_unitary(sched, dev))
        if f > best_f:
            best_x, best_f = sol.x, f
        if best_f > 1 - 1e-14 or (best_f >= fidelity_target and attempt >= 1):
            break
    return _build_cnot_schedule(best_x, dev, control, target, cr_amplitude), best_f
