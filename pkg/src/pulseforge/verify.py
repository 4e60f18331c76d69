"""Fast self-checks of the simulator's core invariants (used by ``pulseforge verify``)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CROp, PulseOp, VZOp, run_reference
from .datasets import split, synth_circle
from .gates import (
    controlled_su2,
    cnot_from_cr_blocks,
    decompose_controlled_su2,
    euler_from_su2,
    sequence_unitary,
    su2_from_euler,
    u3_matrix,
    u3_sx_vz_sequence,
)
from .models import dataset_loss
from .noise import (
    NOISELESS,
    amplitude_damping,
    depolarizing_1q,
    depolarizing_2q,
    embed_operator,
    load_device,
    phase_damping,
)
from .pulses import CrossResonancePulse, SingleQubitPulse, cr_propagator, rz, single_qubit_propagator
from .qcore import global_phase_distance, random_density_matrix, random_unitary
from .training import TrainConfig, train, warm_start_two_qubit


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_pulse(rng, qubit=0):
    return SingleQubitPulse(rng.uniform(0, 0.05), rng.uniform(-math.pi, math.pi), rng.uniform(10, 700),
                            detuning=rng.uniform(-0.02, 0.02), qubit=qubit)


def _random_cr(rng, control):
    return CrossResonancePulse(rng.uniform(0, 0.05), rng.uniform(-math.pi, math.pi), rng.uniform(10, 700),
                               detuning=rng.uniform(-0.02, 0.02), control=control, target=1 - control)


def check_channels(rng, n_states=50):
    worst = 0.0
    grid = (0.0, 1e-4, 0.01, 0.3, 1.0)
    channels = [f(v) for v in grid for f in (depolarizing_1q, depolarizing_2q, amplitude_damping, phase_damping)]
    for ch in channels:
        worst = max(worst, ch.completeness_error())
        d = ch.dim
        for _ in range(n_states):
            rho = random_density_matrix(d, rng)
            out = sum(k @ rho @ k.conj().T for k in ch.operators)
            worst = max(worst, abs(np.trace(out) - 1), np.abs(out - out.conj().T).max())
            worst = max(worst, max(0.0, -np.linalg.eigvalsh(out).min() - 1e-9))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def check_unitarity(rng, dev, n=100):
    worst = 0.0
    for i in range(n):
        u = single_qubit_propagator(_random_pulse(rng)) if i % 2 else cr_propagator(_random_cr(rng, i % 4 // 2), dev)
        worst = max(worst, np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())
    return worst < 1e-10, f"max |U^dag U - I| {worst:.2e}"


def check_vz_equivalence(rng, dev, n=40):
    worst = 0.0
    for _ in range(n):
        circ = Circuit(2, dev, [])
        rho = random_density_matrix(4, rng)
        explicit = rho
        for _ in range(6):
            r = rng.integers(3)
            if r == 0:
                op = VZOp(int(rng.integers(2)), rng.uniform(-math.pi, math.pi))
                u = embed_operator(rz(op.angle), (op.qubit,), 2)
            elif r == 1:
                op = PulseOp(_random_pulse(rng, int(rng.integers(2))))
                u = embed_operator(single_qubit_propagator(op.pulse), (op.pulse.qubit,), 2)
            else:
                op = CROp(_random_cr(rng, int(rng.integers(2))))
                u = cr_propagator(op.pulse, dev)
            circ.add(op)
            explicit = u @ explicit @ u.conj().T
        worst = max(worst, np.abs(run_reference(circ, np.zeros(3), rho) - explicit).max())
    return worst < 1e-9, f"max deviation {worst:.2e}"


def check_decompositions(rng, n=100):
    worst = 0.0
    for _ in range(n):
        u = random_unitary(2, rng)
        worst = max(worst, global_phase_distance(su2_from_euler(euler_from_su2(u)), u))
        t, p, l = rng.uniform(-math.pi, math.pi, 3)
        worst = max(worst, global_phase_distance(sequence_unitary(u3_sx_vz_sequence(t, p, l), 1), u3_matrix(t, p, l)))
        a = euler_from_su2(random_unitary(2, rng))
        worst = max(worst, np.abs(sequence_unitary(decompose_controlled_su2(a), 2) - controlled_su2(a)).max())
    return worst < 1e-9, f"max deviation {worst:.2e}"


def check_cnot_from_cr(dev):
    if len(dev.qubits) < 2:
        return True, "skipped (single-qubit device)"
    _, fidelity = cnot_from_cr_blocks(dev)
    return fidelity > 0.999, f"process fidelity {fidelity:.8f}"


def check_warm_start(dev, epochs=5):
    tr, _ = split(synth_circle(40, 0), 30, 10, 0)
    worst = 0.0
    for variant in ("gate", "pulsed"):
        r1 = train(variant, 2, tr, dev, NOISELESS, TrainConfig(epochs=epochs, seed=0))
        loss1 = dataset_loss(tr, r1.params, dev, NOISELESS)
        loss2 = dataset_loss(tr, warm_start_two_qubit(r1.params, 1), dev, NOISELESS)
        worst = max(worst, abs(loss2 - loss1))
    return worst < 1e-9, f"max |loss_2q - loss_1q| {worst:.2e}"


def run_checks(device_source="builtin-brisbane", seed=0):
    """Run every check; a device that fails to load is reported and skips the device-dependent checks."""
    rng = np.random.default_rng(seed)
    results = []

    def run(name, fn, *args):
        t0 = time.perf_counter()
        try:
            ok, detail = fn(*args)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))

    t0 = time.perf_counter()
    try:
        dev = load_device(device_source)
        results.append(CheckResult("device-load", True, f"{dev.name}, {len(dev.qubits)} qubit(s)",
                                   time.perf_counter() - t0))
    except (ValueError, OSError) as exc:
        dev = None
        results.append(CheckResult("device-load", False, str(exc), time.perf_counter() - t0))
    run("channels-cptp", check_channels, rng)
    run("euler-u3-abc", check_decompositions, rng)
    if dev is not None:
        run("propagator-unitarity", check_unitarity, rng, dev)
        if len(dev.qubits) >= 2:
            run("vz-equivalence", check_vz_equivalence, rng, dev)
            run("cnot-from-cr", check_cnot_from_cr, dev)
            run("warm-start-continuity", check_warm_start, dev)
    return results

