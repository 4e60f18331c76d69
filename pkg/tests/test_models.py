import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import least_squares

from pulseforge.datasets import Dataset
from pulseforge.gates import EulerAngles, euler_from_su2, su2_from_euler
from pulseforge.models import (
    EntanglerPulseParams, GateLayerParams, ModelParams, PulseBlockParams, PulseLayerParams,
    TargetStateParams, accuracy, batch_forward, dataset_loss, encode, flatten, gate_forward, init_params,
    n_parameters, params_from_dict, params_to_dict, predict, pulse_block, pulse_block_from_euler,
    pulse_block_unitary, pulsed_forward, sample_loss, target_state, unflatten, zero_params,
)
from pulseforge.noise import NOISELESS, NoisePolicy, apply_channel, depolarizing_1q
from pulseforge.pulses import VirtualZFrame, flush_frames
from pulseforge.qcore import (
    I2, SX, SY, fidelity_pure, global_phase_distance, is_unitary, partial_trace_keep_first, projector,
    purity, random_density_matrix, random_unitary,
)

NO_SPAM = NoisePolicy(enabled=False, spam_enabled=False)


def test_encode():
    assert np.allclose(encode((0, 0, 0)), I2)
    assert np.allclose(encode((0, math.pi, 0)), -1j * SY)
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert is_unitary(encode(rng.uniform(-math.pi, math.pi, 3)), tol=1e-12)


def test_target_states():
    t = TargetStateParams(0.0, 0.9)
    assert np.allclose(target_state(0, t), [1, 0])
    assert global_phase_distance(target_state(1, t)[:, None], np.array([[0], [np.exp(0.9j)]])) < 1e-12
    assert np.allclose(target_state(0, TargetStateParams(math.pi / 4, 0.0)), np.array([1, 1]) / math.sqrt(2))
    with pytest.raises(ValueError):
        target_state(2, t)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_targets_orthonormal(theta, phi):
    t = TargetStateParams(theta, phi)
    s0, s1 = target_state(0, t), target_state(1, t)
    assert abs(np.vdot(s0, s1)) < 1e-12
    assert np.linalg.norm(s0) == pytest.approx(1.0) and np.linalg.norm(s1) == pytest.approx(1.0)


def test_gate_forward_trivial(dev):
    p = zero_params("gate", 1, 1, dev)
    rho = gate_forward(np.zeros(3), p, dev, NOISELESS)
    assert np.allclose(rho, np.diag([1, 0]), atol=1e-12)


def test_gate_forward_is_the_ideal_product(dev, rng):
    # oracle: U(theta_L) U(x) ... U(theta_1) U(x) |0>
    p = init_params("gate", 1, 3, dev, rng)
    x = rng.uniform(-math.pi, math.pi, 3)
    psi = np.array([1, 0], dtype=complex)
    for layer in p.layers:
        psi = su2_from_euler(layer.qubits[0]) @ encode(x) @ psi
    assert np.allclose(gate_forward(x, p, dev, NOISELESS), projector(psi), atol=1e-10)


def test_pulsed_forward_is_the_ideal_product(dev, rng):
    p = init_params("pulsed", 1, 3, dev, rng)
    x = rng.uniform(-math.pi, math.pi, 3)
    psi = np.array([1, 0], dtype=complex)
    for layer in p.layers:
        psi = pulse_block_unitary(layer.blocks[0], p.pulse_duration) @ encode(x) @ psi
    assert np.allclose(pulsed_forward(x, p, dev, NOISELESS), projector(psi), atol=1e-10)


def test_noiseless_outputs_are_pure(dev, rng):
    for variant in ("gate", "pulsed"):
        for n in (1, 2):
            p = init_params(variant, n, 2, dev, rng)
            rho = batch_forward(rng.uniform(-3, 3, (5, 3)), p, dev, NOISELESS)
            assert np.allclose([purity(r) for r in rho], 1.0, atol=1e-10)


def test_noisy_outputs_are_states(dev, rng):
    for variant in ("gate", "pulsed"):
        p = init_params(variant, 2, 2, dev, rng)
        rho = batch_forward(rng.uniform(-3, 3, (5, 3)), p, dev, NoisePolicy())
        for r in rho:
            assert abs(np.trace(r) - 1) < 1e-12
            assert np.linalg.eigvalsh(r).min() > -1e-9
            assert purity(r) < 1


def test_variant_mismatch(dev):
    with pytest.raises(ValueError):
        gate_forward(np.zeros(3), zero_params("pulsed", 1, 1, dev), dev, NOISELESS)
    with pytest.raises(ValueError):
        pulsed_forward(np.zeros(3), zero_params("gate", 1, 1, dev), dev, NOISELESS)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams("analog", 1, (GateLayerParams((EulerAngles(),)),))
    with pytest.raises(ValueError):
        ModelParams("gate", 3, (GateLayerParams((EulerAngles(),)),))
    with pytest.raises(ValueError):
        ModelParams("gate", 1, ())


def _one_qubit_marginal_matches(dev, rng, variant):
    p2 = init_params(variant, 2, 3, dev, rng)
    layers = []
    for layer in p2.layers:
        if variant == "gate":
            layers.append(GateLayerParams(layer.qubits, EulerAngles()))
        else:
            layers.append(PulseLayerParams(layer.blocks, EntanglerPulseParams()))
    p2 = ModelParams(variant, 2, tuple(layers), p2.targets, p2.pulse_duration, p2.cr_duration)
    if variant == "gate":
        p1 = ModelParams(variant, 1, tuple(GateLayerParams(l.qubits[:1]) for l in layers), p2.targets)
    else:
        p1 = ModelParams(variant, 1, tuple(PulseLayerParams(l.blocks[:1]) for l in layers), p2.targets,
                         p2.pulse_duration, p2.cr_duration)
    X = rng.uniform(-math.pi, math.pi, (6, 3))
    r2 = partial_trace_keep_first(batch_forward(X, p2, dev, NOISELESS))
    r1 = batch_forward(X, p1, dev, NOISELESS)
    return np.abs(r2 - r1).max()


def test_zero_entangler_factorizes(dev, rng):
    assert _one_qubit_marginal_matches(dev, rng, "gate") < 1e-10
    assert _one_qubit_marginal_matches(dev, rng, "pulsed") < 1e-10


def test_pulsed_all_zero_is_ground_state(dev):
    p = zero_params("pulsed", 2, 2, dev)
    rho = pulsed_forward(np.zeros(3), p, dev, NOISELESS)
    assert np.allclose(rho, np.diag([1, 0, 0, 0]), atol=1e-10)


def test_pulse_block_pi_pulse(dev):
    b = PulseBlockParams(0.0, 0.0, math.pi / 300.0, 0.0)
    assert global_phase_distance(pulse_block_unitary(b, 300.0), SX) < 1e-12
    rho, frames = pulse_block(np.diag([1.0, 0.0]).astype(complex), b, dev, VirtualZFrame.zero(1))
    assert np.allclose(rho, np.diag([0, 1]), atol=1e-12)


def test_pulse_block_zero_amplitude_only_moves_frames(dev, rng):
    rho = np.diag([0.7, 0.3]).astype(complex)
    b = PulseBlockParams(0.4, 1.1, 0.0, 0.3)
    out, frames = pulse_block(rho, b, dev, VirtualZFrame.zero(1))
    assert np.allclose(out, rho)
    assert frames.phase(0) == pytest.approx(1.5)


def test_pulse_block_state_action_matches_unitary(dev, rng):
    b = PulseBlockParams(0.3, -0.9, 0.004, 1.2)
    rho = random_density_matrix(2, rng)
    out, frames = pulse_block(rho, b, dev, VirtualZFrame.zero(1))
    out, _ = flush_frames(out, frames)
    u = pulse_block_unitary(b, dev.qubit(0).oneq_duration)
    assert np.allclose(out, u @ rho @ u.conj().T, atol=1e-12)


def test_pulse_block_reaches_random_su2_numerically():
    rng = np.random.default_rng(5)
    for _ in range(5):
        v = random_unitary(2, rng)

        def block(z):
            return pulse_block_unitary(PulseBlockParams(z[0], z[1], z[2] / 300.0, z[3]), 300.0)

        def resid(z):
            d = np.exp(1j * z[4]) * block(z) - v
            return np.concatenate([d.real.ravel(), d.imag.ravel()])

        best = min((least_squares(resid, rng.uniform(-3, 3, 5), xtol=1e-15, ftol=1e-15, gtol=1e-15)
                    for _ in range(8)), key=lambda s: s.cost)
        fid = abs(np.trace(v.conj().T @ block(best.x))) / 2
        assert fid > 1 - 1e-6


def test_gate_pulse_correspondence():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = euler_from_su2(random_unitary(2, rng))
        b = pulse_block_from_euler(a, 300.0)
        assert global_phase_distance(pulse_block_unitary(b, 300.0), su2_from_euler(a)) < 1e-8


def test_sample_loss_values(dev):
    t = TargetStateParams(0.3, 0.2)
    s0, s1 = target_state(0, t), target_state(1, t)
    assert sample_loss(projector(s0), 0, t, dev, NO_SPAM) == pytest.approx(0.0, abs=1e-15)
    assert sample_loss(projector(s1), 0, t, dev, NO_SPAM) == pytest.approx(1.0)
    assert sample_loss(I2 / 2, 1, t, dev, NO_SPAM) == pytest.approx(0.25)
    # a stack of states with per-state labels
    stack = np.stack([projector(s0), projector(s0)])
    assert np.allclose(sample_loss(stack, np.array([0, 1]), t, dev, NO_SPAM), [0.0, 1.0])


def test_sample_loss_with_spam_uses_confusion(dev):
    t = TargetStateParams()
    loss = sample_loss(np.diag([1.0, 0.0]), 0, t, dev, NoisePolicy())
    assert loss == pytest.approx(0.0459**2)


def test_predict(dev):
    t = TargetStateParams(0.7, -0.4)
    assert predict(projector(target_state(0, t)), t, dev, NO_SPAM) == 0
    assert predict(projector(target_state(1, t)), t, dev, NO_SPAM) == 1
    assert predict(I2 / 2, t, dev, NO_SPAM) == 0
    stack = np.stack([projector(target_state(1, t)), I2 / 2])
    assert list(predict(stack, t, dev, NO_SPAM)) == [1, 0]


def test_dataset_loss_examples(dev):
    # identity model with |0> target: x = 0 gives F = 1 for label 0 and F = 0 for label 1
    p = zero_params("gate", 1, 1, dev)
    both = Dataset(np.zeros((2, 3)), np.array([0, 1]))
    assert dataset_loss(both, p, dev, NOISELESS) == pytest.approx(0.5)
    good = Dataset(np.zeros((3, 3)), np.zeros(3, dtype=int))
    assert dataset_loss(good, p, dev, NOISELESS) == pytest.approx(0.0, abs=1e-20)
    assert accuracy(good, p, dev, NOISELESS) == 1.0
    one = Dataset(np.array([[0.3, 1.2, -0.4]]), np.array([1]))
    rho = gate_forward(one.features[0], p, dev, NOISELESS)
    assert dataset_loss(one, p, dev, NOISELESS) == pytest.approx(sample_loss(rho, 1, p.targets, dev, NOISELESS))
    with pytest.raises(ValueError):
        dataset_loss(Dataset(np.zeros((0, 3)), np.zeros(0, dtype=int)), p, dev, NOISELESS)


def test_dataset_loss_bounds_and_determinism(dev, rng):
    ds = Dataset(rng.uniform(-3, 3, (20, 3)), rng.integers(0, 2, 20))
    for variant in ("gate", "pulsed"):
        p = init_params(variant, 2, 2, dev, rng)
        a = dataset_loss(ds, p, dev, NoisePolicy())
        assert 0 <= a <= 1
        assert a == dataset_loss(ds, p, dev, NoisePolicy())


def test_depolarizing_never_raises_fidelity(rng):
    for _ in range(200):
        rho = random_density_matrix(2, rng)
        psi = random_unitary(2, rng)[:, 0]
        p, q = sorted(rng.uniform(0, 0.75, 2))
        fp = fidelity_pure(psi, apply_channel(rho, depolarizing_1q(p)))
        fq = fidelity_pure(psi, apply_channel(rho, depolarizing_1q(q)))
        if fidelity_pure(psi, rho) >= 0.5:
            assert fq <= fp + 1e-12


def test_flatten_sizes(dev):
    rng = np.random.default_rng(0)
    for variant, n, per_layer in (("gate", 1, 3), ("gate", 2, 9), ("pulsed", 1, 4), ("pulsed", 2, 11)):
        for L in (1, 4):
            p = init_params(variant, n, L, dev, rng)
            assert flatten(p).shape == (per_layer * L + 2,)
            assert n_parameters(variant, n, L) == per_layer * L + 2


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["gate", "pulsed"]), st.sampled_from([1, 2]), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_flatten_roundtrip(variant, n, L, seed):
    from pulseforge.noise import brisbane_device

    dev = brisbane_device()
    p = init_params(variant, n, L, dev, np.random.default_rng(seed))
    vec = flatten(p)
    q = unflatten(vec, p)
    assert np.array_equal(flatten(q), vec)
    for la, lb in zip(p.layers, q.layers):
        if variant == "pulsed":
            for a, b in zip(la.blocks, lb.blocks):
                assert a.omega == pytest.approx(b.omega, rel=1e-15)


def test_unflatten_length_mismatch(dev):
    p = zero_params("gate", 1, 2, dev)
    with pytest.raises(ValueError):
        unflatten(np.zeros(5), p)


def test_params_dict_roundtrip(dev, rng):
    for variant in ("gate", "pulsed"):
        p = init_params(variant, 2, 3, dev, rng)
        q = params_from_dict(params_to_dict(p))
        assert np.array_equal(flatten(q), flatten(p))
        assert q.variant == variant and q.n_layers == 3


def test_zero_noise_residual_scales_as_inverse_coherence(dev, rng):
    # with no depolarizing and no SPAM, the only deviation left is damping ~ t / T, so it falls as 1/T
    from pulseforge.noise import with_ideal_coherence

    policy = NoisePolicy(enabled=True, depolarizing_override_p=0.0, spam_enabled=False)
    for variant in ("gate", "pulsed"):
        p = init_params(variant, 2, 2, dev, rng)
        x = rng.uniform(-math.pi, math.pi, (3, 3))
        clean = batch_forward(x, p, dev, NOISELESS)
        d12 = np.abs(batch_forward(x, p, with_ideal_coherence(dev, 1e12), policy) - clean).max()
        d15 = np.abs(batch_forward(x, p, with_ideal_coherence(dev, 1e15), policy) - clean).max()
        assert 0 < d12 < 1e-7
        assert d15 < 1e-11
        assert d12 / d15 == pytest.approx(1e3, rel=1e-3)
