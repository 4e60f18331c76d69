import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulseforge.noise import (
    BRISBANE_TABLE, NOISELESS, DeviceFileError, KrausChannel, NoisePolicy, amplitude_damping,
    apply_channel, confusion_matrix, damping_params, depolarizing_1q, depolarizing_2q,
    describe_device, device_from_dict, device_to_dict, embed_operator, estimate_depolarizing_p,
    load_device, phase_damping, post_op_channels, prep_state, readout_probs,
)
from pulseforge.qcore import I2, SX, KET0, KET1, check_density_matrix, kron, projector, random_density_matrix

probs = st.sampled_from([0.0, 1e-4, 0.01, 0.3, 1.0]) | st.floats(0, 1)


@settings(max_examples=60, deadline=None)
@given(probs, st.integers(0, 2**31 - 1))
def test_channels_are_cptp(p, seed):
    rng = np.random.default_rng(seed)
    for ch in (depolarizing_1q(p), depolarizing_2q(p), amplitude_damping(p), phase_damping(p)):
        assert ch.completeness_error() < 1e-12
        check_density_matrix(apply_channel(random_density_matrix(ch.dim, rng), ch))


def test_depolarizing_1q_action(rng):
    # sqrt(1-p) I and sqrt(p/3) Paulis: rho -> (1 - 4p/3) rho + (2p/3) I
    rho = random_density_matrix(2, rng)
    p = 0.27
    assert np.allclose(apply_channel(rho, depolarizing_1q(p)), (1 - 4 * p / 3) * rho + (2 * p / 3) * I2)


def test_depolarizing_2q_full_strength_twirl(rng):
    # sum over all 16 Pauli pairs of P rho P = 4 I; so rho -> (1 - 16p/15) rho + (4p/15) I
    rho = random_density_matrix(4, rng)
    p = 0.3
    out = apply_channel(rho, depolarizing_2q(p))
    assert np.allclose(out, (1 - 16 * p / 15) * rho + (4 * p / 15) * np.eye(4))
    assert len(depolarizing_2q(p).operators) == 16


def test_amplitude_damping_action():
    out = apply_channel(projector(KET1), amplitude_damping(0.2))
    assert np.allclose(out, np.diag([0.2, 0.8]))
    plus = projector(np.array([1, 1]) / math.sqrt(2))
    assert apply_channel(plus, amplitude_damping(0.36))[0, 1] == pytest.approx(0.5 * 0.8)


def test_phase_damping_action():
    plus = projector(np.array([1, 1]) / math.sqrt(2))
    out = apply_channel(plus, phase_damping(0.19))
    assert out[0, 1] == pytest.approx(0.5 * math.sqrt(0.81))
    assert np.allclose(np.diag(out), [0.5, 0.5])


def test_probability_validation():
    for f in (depolarizing_1q, depolarizing_2q, amplitude_damping, phase_damping):
        with pytest.raises(ValueError):
            f(-0.1)
        with pytest.raises(ValueError):
            f(1.5)


def test_kraus_channel_validation():
    with pytest.raises(ValueError):
        KrausChannel(())
    with pytest.raises(ValueError):
        KrausChannel((np.eye(2), np.eye(4)))


def test_damping_params():
    g, l = damping_params(300.0, 180e3, 180e3)
    assert g == pytest.approx(1 - math.exp(-300 / 180e3), rel=1e-12)
    assert g == pytest.approx(1.665e-3, rel=1e-3)
    assert damping_params(0.0, 1.0, 1.0) == (0.0, 0.0)


def test_embed_operator_order():
    assert np.allclose(embed_operator(SX, (0,), 2), kron(SX, I2))
    assert np.allclose(embed_operator(SX, (1,), 2), kron(I2, SX))
    m = kron(SX, np.diag([1, 0]))
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert np.allclose(embed_operator(m, (1, 0), 2), swap @ m @ swap)


def test_post_op_channel_schedule(dev):
    pol = NoisePolicy()
    chans = post_op_channels("1q-gate", 300.0, (0,), dev, pol)
    assert [c.name for c, _ in chans] == ["depolarizing_1q", "amplitude_damping", "phase_damping"]
    chans2 = post_op_channels("2q-op", 660.0, (1, 0), dev, pol)
    assert [c.name for c, _ in chans2][0] == "depolarizing_2q"
    assert len(chans2) == 5
    assert post_op_channels("vz", 0.0, (0,), dev, pol) == []
    assert post_op_channels("1q-gate", 300.0, (0,), dev, NOISELESS) == []
    with pytest.raises(ValueError):
        post_op_channels("3q", 1.0, (0,), dev, pol)


def test_override_replaces_only_depolarizing(dev):
    base = post_op_channels("1q-pulse", 300.0, (0,), dev, NoisePolicy())
    over = post_op_channels("1q-pulse", 300.0, (0,), dev, NoisePolicy(depolarizing_override_p=0.1))
    assert np.allclose(over[0][0].operators[0], math.sqrt(0.9) * I2)
    for (a, _), (b, _) in zip(base[1:], over[1:]):
        assert all(np.allclose(x, y) for x, y in zip(a.operators, b.operators))


def test_depolarizing_estimate(dev):
    assert estimate_depolarizing_p(dev, 0) == pytest.approx(0.000187)


def test_spam(dev):
    m = confusion_matrix(dev, 0)
    assert np.allclose(m.sum(axis=0), 1)
    p = readout_probs(projector(KET0), np.eye(2), dev, 0, NoisePolicy())
    assert np.allclose(p, [1 - 0.0459, 0.0459])
    p = readout_probs(projector(KET1), np.eye(2), dev, 0, NoisePolicy())
    assert np.allclose(p, [0.0215, 1 - 0.0215])
    assert np.allclose(readout_probs(projector(KET1), np.eye(2), dev, 0, NOISELESS), [0, 1])


def test_prep_state(dev):
    assert np.allclose(prep_state(dev, 2, NoisePolicy()), np.diag([1, 0, 0, 0]))
    d = device_from_dict({**BRISBANE_TABLE, "qubits": [{**BRISBANE_TABLE["qubits"][0], "p_prep": 0.1}]})
    assert np.allclose(prep_state(d, 1, NoisePolicy()), np.diag([0.9, 0.1]))
    assert np.allclose(prep_state(d, 1, NOISELESS), np.diag([1, 0]))


def test_brisbane_values(dev):
    assert dev.ecr_err == 0.00431
    assert dev.twoq_duration == 660.0
    assert dev.coupling == pytest.approx(2 * math.pi * 0.013)
    assert dev.qubit(0).t1 == pytest.approx(180e3)
    assert dev.qubit(1).t2 == pytest.approx(250e3)
    assert dev.qubit(0).readout_p10 == 0.0459
    assert dev.qubit(1).readout_p01 == 0.0176


def test_device_roundtrip(dev, tmp_path):
    d = device_to_dict(dev)
    assert device_from_dict(d) == dev
    path = tmp_path / "dev.json"
    path.write_text(json.dumps(d))
    assert load_device(str(path)) == dev
    assert load_device("builtin-brisbane") == dev


def test_device_file_errors(tmp_path):
    bad = {**BRISBANE_TABLE, "qubits": [{**BRISBANE_TABLE["qubits"][0], "t1_us": -5}]}
    with pytest.raises(DeviceFileError):
        device_from_dict(bad)
    with pytest.raises(DeviceFileError):
        device_from_dict({**BRISBANE_TABLE, "qubits": []})
    with pytest.raises(DeviceFileError):
        load_device(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(DeviceFileError):
        load_device(str(broken))
    missing = {k: v for k, v in BRISBANE_TABLE.items() if k != "twoq_time_ns"}
    with pytest.raises(DeviceFileError):
        device_from_dict(missing)


def test_describe_device(dev):
    info = describe_device(dev)
    assert info["qubits"][0]["gamma_1q"] == pytest.approx(1.665e-3, rel=1e-3)
    assert info["mu"] == pytest.approx(0.065)
    assert info["detuning_12_rad_per_ns"] == pytest.approx(2 * math.pi * 0.2)
