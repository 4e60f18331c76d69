"""Gate-based and pulse-based data re-uploading classifiers.

Both ansaetze share the same structure per layer: an angle encoding of the
3-feature input on every qubit, a trainable single-qubit block on every qubit
and, for two qubits, a trainable entangler in which qubit 2 acts on qubit 1.
Classification reads out qubit 1 against two trainable orthogonal target
states.

Gate model
    Single-qubit blocks are ``RZ RY RZ`` Euler rotations and the entangler is a
    controlled-SU(2) gate.  Every single-qubit gate is transpiled to two SX
    pulses and three virtual Z rotations; the controlled gate is decomposed
    into two CNOTs plus single-qubit gates.  Noise channels follow each SX and
    CNOT.
Pulsed model
    Single-qubit blocks are ``VZ(nu1) U(Omega, gamma) VZ(nu2)`` with one resonant
    pulse of the device's single-qubit gate time; the entangler is a single
    cross-resonance pulse of the two-qubit gate time with trainable amplitude,
    phase and drive detuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import (
    Circuit,
    CompiledCircuit,
    CROp,
    DataVZOp,
    GateOp,
    PulseOp,
    VZOp,
    run_reference,
)
from .gates import CNOT, CNOT_21, EulerAngles, decompose_controlled_su2, euler_sx_vz_sequence, ry
from .noise import NOISELESS, apply_channel, embed_operator, post_op_channels, prep_state, readout_probs
from .pulses import CrossResonancePulse, SingleQubitPulse, cr_drift_correction, rz, single_qubit_propagator, vz
from .qcore import partial_trace_keep_first

VARIANTS = ("gate", "pulsed")
# qubit 2 drives the entangler, qubit 1 is read out
ENTANGLER_CONTROL, ENTANGLER_TARGET = 1, 0


@dataclass(frozen=True)
class TargetStateParams:
    theta: float = 0.0
    phi: float = 0.0


@dataclass(frozen=True)
class GateLayerParams:
    qubits: tuple  # EulerAngles per qubit
    entangler: EulerAngles | None = None


@dataclass(frozen=True)
class PulseBlockParams:
    nu1: float = 0.0
    nu2: float = 0.0
    omega: float = 0.0  # rad/ns
    gamma: float = 0.0


@dataclass(frozen=True)
class EntanglerPulseParams:
    omega: float = 0.0  # rad/ns
    gamma: float = 0.0
    delta: float = 0.0  # rad/ns


@dataclass(frozen=True)
class PulseLayerParams:
    blocks: tuple  # PulseBlockParams per qubit
    entangler: EntanglerPulseParams | None = None


@dataclass(frozen=True)
class ModelParams:
    """Complete trainable parameter set of one classifier.

    ``pulse_duration`` and ``cr_duration`` (ns) are the fixed durations of the
    pulsed model's single-qubit and entangling pulses.
    """

    variant: str
    n_qubits: int
    layers: tuple
    targets: TargetStateParams = field(default_factory=TargetStateParams)
    pulse_duration: float = 300.0
    cr_duration: float = 660.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.n_qubits not in (1, 2):
            raise ValueError("only one- and two-qubit models are supported")
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a model needs at least one layer")

    @property
    def n_layers(self):
        return len(self.layers)


# ---------------------------------------------------------------------------
# Encoding, targets, readout
# ---------------------------------------------------------------------------


def encode(x):
    """Data unitary ``RZ(x1) RY(x2) RZ(x3)``."""
    x1, x2, x3 = (float(v) for v in x)
    return rz(x1) @ ry(x2) @ rz(x3)


def target_state(label, t):
    c, s, e = math.cos(t.theta), math.sin(t.theta), np.exp(1j * t.phi)
    if label == 0:
        return np.array([c, e * s], dtype=complex)
    if label == 1:
        return np.array([-s, e * c], dtype=complex)
    raise ValueError("label must be 0 or 1")


def target_basis(t):
    """Unitary whose columns are ``|s0>`` and ``|s1>``."""
    return np.column_stack([target_state(0, t), target_state(1, t)])


def _qubit1_marginal(rho):
    rho = np.asarray(rho)
    return partial_trace_keep_first(rho) if rho.shape[-1] == 4 else rho


def class_probabilities(rho_final, targets, dev, policy):
    """(SPAM-adjusted) probabilities of reading ``|s0>`` and ``|s1>`` on qubit 1."""
    return readout_probs(_qubit1_marginal(rho_final), target_basis(targets), dev, 0, policy)


def sample_loss(rho_final, label, targets, dev, policy):
    """``(1 - F)^2`` with ``F`` the (SPAM-adjusted) probability of reading the label's target.

    ``rho_final`` may be a stack with one label per state.
    """
    probs = class_probabilities(rho_final, targets, dev, policy)
    label = np.asarray(label, dtype=int)
    if label.ndim == 0:
        f = probs[..., int(label)]
    else:
        f = np.take_along_axis(probs, label[..., None], axis=-1)[..., 0]
    return (1.0 - f) ** 2


def predict(rho_final, targets, dev, policy):
    """Most probable class; ties go to 0.  Works on one state or a stack."""
    p = class_probabilities(rho_final, targets, dev, policy)
    out = (p[..., 1] > p[..., 0]).astype(int)
    return int(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Circuit construction
# ---------------------------------------------------------------------------


def _sx_pulse(qubit, duration):
    return SingleQubitPulse(math.pi / 2 / duration, 0.0, duration, qubit=qubit)


def _append_native(circ, ops, policy):
    """Lower gate-level native ops: virtual Z -> frame update, SX -> pulse, CNOT -> gate."""
    dev = circ.dev
    for op in ops:
        if op.kind == "RZ-virtual":
            circ.add(VZOp(op.qubits[0], op.params[0]))
        elif op.kind == "SX":
            (q,) = op.qubits
            circ.add(PulseOp(_sx_pulse(q, op.duration)))
            circ.noise(post_op_channels("1q-gate", op.duration, (q,), dev, policy))
        elif op.kind == "CNOT":
            m = CNOT if tuple(op.qubits) == (0, 1) else CNOT_21
            circ.add(GateOp(m, "CNOT"))
            circ.noise(post_op_channels("2q-op", op.duration, op.qubits, dev, policy))
        else:
            raise ValueError(f"cannot lower native op {op.kind}")


def _append_encoding(circ, qubit, policy):
    # RZ(x1) RY(x2) RZ(x3) as RZ(x1) SX RZ(pi - x2) SX RZ(x3 - pi), data angles kept virtual
    t = circ.dev.qubit(qubit).oneq_duration
    circ.add(DataVZOp(qubit, 2, -math.pi, 1.0))
    circ.add(PulseOp(_sx_pulse(qubit, t)))
    circ.noise(post_op_channels("1q-gate", t, (qubit,), circ.dev, policy))
    circ.add(DataVZOp(qubit, 1, math.pi, -1.0))
    circ.add(PulseOp(_sx_pulse(qubit, t)))
    circ.noise(post_op_channels("1q-gate", t, (qubit,), circ.dev, policy))
    circ.add(DataVZOp(qubit, 0, 0.0, 1.0))


def append_pulse_block(circ, qubit, b, duration, policy):
    """``VZ(nu2)``, resonant pulse ``(Omega, gamma)``, its channels, then ``VZ(nu1)``."""
    circ.add(VZOp(qubit, b.nu2))
    circ.add(PulseOp(SingleQubitPulse(b.omega, b.gamma, duration, qubit=qubit)))
    circ.noise(post_op_channels("1q-pulse", duration, (qubit,), circ.dev, policy))
    circ.add(VZOp(qubit, b.nu1))
    return circ


def pulse_block(rho, b, dev, frames, qubit=0, duration=None, policy=None):
    """Apply one pulse block to ``rho`` given the pending ``frames``.

    Returns ``(rho, frames)``: the pulse is played in the frame left by
    ``VZ(nu2)`` and followed by its channels; ``VZ(nu1)`` stays pending.
    """
    policy = NOISELESS if policy is None else policy
    duration = dev.qubit(qubit).oneq_duration if duration is None else duration
    n = int(round(math.log2(np.asarray(rho).shape[-1])))
    frames = vz(frames, qubit, b.nu2)
    pulse = SingleQubitPulse(b.omega, b.gamma, duration, qubit=qubit)
    u = embed_operator(single_qubit_propagator(pulse, frames), (qubit,), n)
    rho = u @ rho @ u.conj().T
    for ch, targets in post_op_channels("1q-pulse", duration, (qubit,), dev, policy):
        rho = apply_channel(rho, ch, targets)
    return rho, vz(frames, qubit, b.nu1)


def append_cr_entangler(circ, e, duration, policy):
    p = CrossResonancePulse(e.omega, e.gamma, duration, detuning=e.delta,
                            control=ENTANGLER_CONTROL, target=ENTANGLER_TARGET)
    circ.add(CROp(p))
    circ.noise(post_op_channels("2q-op", duration, (ENTANGLER_CONTROL, ENTANGLER_TARGET), circ.dev, policy))
    circ.add(*(VZOp(q, a) for q, a in cr_drift_correction(p, circ.dev)))
    return circ


def group_keys(params):
    """Operation groups of a model, in time order.

    Keys are ``("enc", layer, qubit)``, ``("block", layer, qubit)`` and
    ``("ent", layer)``.  Each trainable parameter influences exactly one group.
    """
    keys = []
    for l in range(params.n_layers):
        keys.extend(("enc", l, q) for q in range(params.n_qubits))
        keys.extend(("block", l, q) for q in range(params.n_qubits))
        if params.n_qubits == 2:
            keys.append(("ent", l))
    return keys


def append_group(circ, params, key, policy):
    """Append the operations of one group (see :func:`group_keys`) to ``circ``."""
    dev = circ.dev
    kind, l = key[0], key[1]
    layer = params.layers[l]
    if kind == "enc":
        _append_encoding(circ, key[2], policy)
    elif kind == "block":
        q = key[2]
        if params.variant == "gate":
            _append_native(circ, euler_sx_vz_sequence(layer.qubits[q], q, dev.qubit(q).oneq_duration), policy)
        else:
            append_pulse_block(circ, q, layer.blocks[q], params.pulse_duration, policy)
    elif kind == "ent":
        if params.variant == "gate":
            ops = decompose_controlled_su2(layer.entangler, dev.qubit(0).oneq_duration, dev.twoq_duration)
            _append_native(circ, ops, policy)
        else:
            append_cr_entangler(circ, layer.entangler, params.cr_duration, policy)
    else:
        raise ValueError(f"unknown group {key!r}")
    return circ


def build_circuit(params, dev, policy):
    """Circuit of the whole model (input-dependent encoding angles left symbolic).

    Per layer: encoding on every qubit, the trainable single-qubit block on
    every qubit, then the entangler for two qubits.
    """
    circ = Circuit(params.n_qubits, dev, [])
    for key in group_keys(params):
        append_group(circ, params, key, policy)
    return circ


def _check_variant(params, variant):
    if params.variant != variant:
        raise ValueError(f"expected {variant} parameters, got {params.variant}")


def gate_forward(x, params, dev, policy):
    """Final register state of the gate model for one input (frames flushed)."""
    _check_variant(params, "gate")
    circ = build_circuit(params, dev, policy)
    return run_reference(circ, x, prep_state(dev, params.n_qubits, policy))


def pulsed_forward(x, params, dev, policy):
    """Final register state of the pulsed model for one input (frames flushed)."""
    _check_variant(params, "pulsed")
    circ = build_circuit(params, dev, policy)
    return run_reference(circ, x, prep_state(dev, params.n_qubits, policy))


def forward(x, params, dev, policy):
    fn = gate_forward if params.variant == "gate" else pulsed_forward
    return fn(x, params, dev, policy)


def batch_forward(X, params, dev, policy):
    """Final states for all rows of ``X`` via the fused batched executor."""
    circ = build_circuit(params, dev, policy)
    return CompiledCircuit(circ).run(X, prep_state(dev, params.n_qubits, policy))


def pulse_block_unitary(b, duration):
    """Noiseless single-qubit unitary ``RZ(nu1) U(Omega, gamma) RZ(nu2)`` of a pulse block."""
    u = single_qubit_propagator(SingleQubitPulse(b.omega, b.gamma, duration))
    return rz(b.nu1) @ u @ rz(b.nu2)


def pulse_block_from_euler(a, duration):
    """Pulse block realizing ``RZ(a1) RY(a2) RZ(a3)`` exactly: a ``gamma = pi/2`` drive is RY."""
    return PulseBlockParams(nu1=a.theta1, nu2=a.theta3, omega=a.theta2 / duration, gamma=math.pi / 2)


def dataset_loss(ds, params, dev, policy):
    """Mean fidelity loss over a dataset."""
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    rho = batch_forward(ds.features, params, dev, policy)
    losses = sample_loss(rho, ds.labels, params.targets, dev, policy)
    return float(np.mean(losses))


def accuracy(ds, params, dev, policy):
    rho = batch_forward(ds.features, params, dev, policy)
    return float(np.mean(predict(rho, params.targets, dev, policy) == np.asarray(ds.labels)))


# ---------------------------------------------------------------------------
# Parameter vectors
# ---------------------------------------------------------------------------


def n_parameters(variant, n_qubits, n_layers):
    if variant == "gate":
        per_layer = 3 * n_qubits + (3 if n_qubits == 2 else 0)
    else:
        per_layer = 4 * n_qubits + (3 if n_qubits == 2 else 0)
    return per_layer * n_layers + 2


def flatten(params):
    """Parameter vector: per layer, qubit 1 then qubit 2 then the entangler; targets last.

    Pulse amplitudes and the entangler detuning are stored as dimensionless
    products with their pulse duration (``Omega * T``, ``delta * T``) so that all
    coordinates live on comparable scales.
    """
    out = []
    for layer in params.layers:
        if params.variant == "gate":
            for a in layer.qubits:
                out.extend(a.as_tuple())
            if params.n_qubits == 2:
                out.extend(layer.entangler.as_tuple())
        else:
            for b in layer.blocks:
                out.extend((b.nu1, b.nu2, b.omega * params.pulse_duration, b.gamma))
            if params.n_qubits == 2:
                e = layer.entangler
                out.extend((e.omega * params.cr_duration, e.gamma, e.delta * params.cr_duration))
    out.extend((params.targets.theta, params.targets.phi))
    return np.array(out, dtype=float)


def unflatten(vec, template):
    """Inverse of :func:`flatten`, using ``template`` for the model shape and durations."""
    vec = np.asarray(vec, dtype=float)
    n = n_parameters(template.variant, template.n_qubits, template.n_layers)
    if vec.shape != (n,):
        raise ValueError(f"expected a vector of length {n}, got shape {vec.shape}")
    it = iter(vec.tolist())
    take = lambda k: [next(it) for _ in range(k)]  # noqa: E731
    layers = []
    for _ in range(template.n_layers):
        if template.variant == "gate":
            qubits = tuple(EulerAngles(*take(3)) for _ in range(template.n_qubits))
            ent = EulerAngles(*take(3)) if template.n_qubits == 2 else None
            layers.append(GateLayerParams(qubits, ent))
        else:
            blocks = []
            for _ in range(template.n_qubits):
                nu1, nu2, area, gamma = take(4)
                blocks.append(PulseBlockParams(nu1, nu2, area / template.pulse_duration, gamma))
            ent = None
            if template.n_qubits == 2:
                area, gamma, dphase = take(3)
                ent = EntanglerPulseParams(area / template.cr_duration, gamma, dphase / template.cr_duration)
            layers.append(PulseLayerParams(tuple(blocks), ent))
    theta, phi = take(2)
    return replace(template, layers=tuple(layers), targets=TargetStateParams(theta, phi))


def init_params(variant, n_qubits, n_layers, dev, rng):
    """Seeded random parameters.

    Angles are uniform in ``[-pi, pi]``.  Pulse areas ``Omega * T`` are uniform in
    ``[0, 2 pi]`` and the entangler's detuning phase ``delta * T`` in ``[-pi, pi]``.
    """
    t1q = dev.qubit(0).oneq_duration
    t2q = dev.twoq_duration
    template = ModelParams(variant, n_qubits, _zero_layers(variant, n_qubits, n_layers),
                           pulse_duration=t1q, cr_duration=t2q)
    vec = rng.uniform(-math.pi, math.pi, n_parameters(variant, n_qubits, n_layers))
    if variant == "pulsed":
        for idx in _amplitude_indices(template):
            vec[idx] = rng.uniform(0.0, 2 * math.pi)
    return unflatten(vec, template)


def _zero_layers(variant, n_qubits, n_layers):
    if variant == "gate":
        ent = EulerAngles() if n_qubits == 2 else None
        return tuple(GateLayerParams(tuple(EulerAngles() for _ in range(n_qubits)), ent) for _ in range(n_layers))
    ent = EntanglerPulseParams() if n_qubits == 2 else None
    return tuple(PulseLayerParams(tuple(PulseBlockParams() for _ in range(n_qubits)), ent) for _ in range(n_layers))


def zero_params(variant, n_qubits, n_layers, dev):
    return ModelParams(variant, n_qubits, _zero_layers(variant, n_qubits, n_layers),
                       pulse_duration=dev.qubit(0).oneq_duration, cr_duration=dev.twoq_duration)


def _amplitude_indices(template):
    """Positions of the pulse-area coordinates in the flat vector."""
    idx = []
    pos = 0
    for _ in range(template.n_layers):
        for _ in range(template.n_qubits):
            idx.append(pos + 2)
            pos += 4
        if template.n_qubits == 2:
            idx.append(pos)
            pos += 3
    return idx


def entangler_indices(params):
    """Positions of the entangler coordinates in the flat vector."""
    if params.n_qubits != 2:
        return []
    per_q = 3 if params.variant == "gate" else 4
    per_layer = 2 * per_q + 3
    return [l * per_layer + 2 * per_q + k for l in range(params.n_layers) for k in range(3)]


def param_groups(params):
    """Map each group key to the flat-vector indices of the parameters it uses."""
    per_q = 3 if params.variant == "gate" else 4
    groups = {}
    pos = 0
    for l in range(params.n_layers):
        for q in range(params.n_qubits):
            groups[("block", l, q)] = list(range(pos, pos + per_q))
            pos += per_q
        if params.n_qubits == 2:
            groups[("ent", l)] = list(range(pos, pos + 3))
            pos += 3
    groups["targets"] = [pos, pos + 1]
    return groups


def params_to_dict(params):
    """JSON-ready description of ``params`` (angles in rad, amplitudes in rad/ns)."""
    layers = []
    for layer in params.layers:
        if params.variant == "gate":
            entry = {"qubits": [list(a.as_tuple()) for a in layer.qubits]}
            if layer.entangler is not None:
                entry["entangler"] = list(layer.entangler.as_tuple())
        else:
            entry = {"blocks": [{"nu1": b.nu1, "nu2": b.nu2, "omega_rad_per_ns": b.omega, "gamma": b.gamma}
                                for b in layer.blocks]}
            if layer.entangler is not None:
                e = layer.entangler
                entry["entangler"] = {"omega_rad_per_ns": e.omega, "gamma": e.gamma, "delta_rad_per_ns": e.delta}
        layers.append(entry)
    return {
        "variant": params.variant,
        "n_qubits": params.n_qubits,
        "n_layers": params.n_layers,
        "pulse_duration_ns": params.pulse_duration,
        "cr_duration_ns": params.cr_duration,
        "targets": {"theta": params.targets.theta, "phi": params.targets.phi},
        "layers": layers,
        "vector": flatten(params).tolist(),
    }


def params_from_dict(d):
    """Inverse of :func:`params_to_dict` (rebuilt from the flat vector)."""
    try:
        variant, n_qubits, n_layers = d["variant"], int(d["n_qubits"]), int(d["n_layers"])
        template = ModelParams(variant, n_qubits, _zero_layers(variant, n_qubits, n_layers),
                               pulse_duration=float(d["pulse_duration_ns"]), cr_duration=float(d["cr_duration_ns"]))
        return unflatten(np.asarray(d["vector"], dtype=float), template)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed parameter description: {exc}") from None
