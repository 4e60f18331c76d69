import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulseforge.gates import (
    CNOT, CNOT_21, EulerAngles, NativeOp, VirtualZ, abc_factors, cnot_from_cr_blocks, controlled_su2,
    decompose_controlled_su2, euler_from_su2, euler_sx_vz_sequence, rx, ry, schedule_unitary,
    sequence_unitary, su2_from_euler, u3_matrix, u3_sx_vz_sequence,
)
from pulseforge.noise import device_from_dict
from pulseforge.pulses import rz
from pulseforge.qcore import I2, SX, SY, SZ, global_phase_distance, kron, process_fidelity, random_unitary

angles = st.floats(-math.pi, math.pi, allow_nan=False)


def test_rotation_conventions():
    assert np.allclose(rx(math.pi), -1j * SX)
    assert np.allclose(ry(math.pi), -1j * SY)
    assert np.allclose(rz(math.pi), -1j * SZ)


def test_su2_from_euler_is_rz_ry_rz():
    a = EulerAngles(0.3, 1.2, -0.7)
    assert np.allclose(su2_from_euler(a), rz(0.3) @ ry(1.2) @ rz(-0.7))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_euler_roundtrip(seed):
    u = random_unitary(2, np.random.default_rng(seed))
    a = euler_from_su2(u)
    assert global_phase_distance(su2_from_euler(a), u) < 1e-9
    assert -math.pi < a.theta1 <= math.pi and -math.pi < a.theta3 <= math.pi
    assert 0 <= a.theta2 <= math.pi


def test_euler_gimbal_cases():
    a = euler_from_su2(rz(0.8))
    assert a.theta2 == 0 and a.theta3 == 0 and a.theta1 == pytest.approx(0.8)
    b = euler_from_su2(ry(math.pi) @ rz(0.4))
    assert b.theta2 == pytest.approx(math.pi) and b.theta3 == 0
    assert global_phase_distance(su2_from_euler(b), ry(math.pi) @ rz(0.4)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(angles, angles, angles)
def test_u3_sequence(theta, phi, lam):
    ops = u3_sx_vz_sequence(theta, phi, lam)
    assert [o.kind for o in ops] == ["RZ-virtual", "SX", "RZ-virtual", "SX", "RZ-virtual"]
    assert global_phase_distance(sequence_unitary(ops, 1), u3_matrix(theta, phi, lam)) < 1e-9


def test_euler_sequence_on_second_qubit():
    a = EulerAngles(0.2, -1.0, 2.5)
    u = sequence_unitary(euler_sx_vz_sequence(a, qubit=1), 2)
    assert global_phase_distance(u, kron(I2, su2_from_euler(a))) < 1e-12


def test_controlled_su2_structure():
    a = EulerAngles(0.4, 1.3, -0.2)
    m = controlled_su2(a)
    # qubit 2 is the control: |x, 0> untouched, |x, 1> gets U on qubit 1
    assert np.allclose(m[np.ix_([0, 2], [0, 2])], I2)
    assert np.allclose(m[np.ix_([1, 3], [1, 3])], su2_from_euler(a))
    assert np.allclose(controlled_su2(EulerAngles(0, 0, 0)), np.eye(4))


@settings(max_examples=100, deadline=None)
@given(angles, st.floats(0, math.pi), angles)
def test_abc_decomposition(t1, t2, t3):
    a = EulerAngles(t1, t2, t3)
    fa, fb, fc = abc_factors(a)
    ua, ub, uc = su2_from_euler(fa), su2_from_euler(fb), rz(fc)
    assert np.allclose(ua @ ub @ uc, I2, atol=1e-12)
    assert np.allclose(ua @ SX @ ub @ SX @ uc, su2_from_euler(a), atol=1e-12)
    ops = decompose_controlled_su2(a)
    assert sum(o.kind == "CNOT" for o in ops) == 2
    assert np.abs(sequence_unitary(ops, 2) - controlled_su2(a)).max() < 1e-9


def test_cnot_matrices():
    assert np.allclose(CNOT_21, np.eye(4)[[0, 3, 2, 1]])
    assert np.allclose(NativeOp("CNOT", (), (1, 0)).register_matrix(2), CNOT_21)
    assert np.allclose(NativeOp("CNOT", (), (0, 1)).register_matrix(2), CNOT)


def test_native_op_validation():
    with pytest.raises(ValueError):
        NativeOp("H")
    with pytest.raises(ValueError):
        NativeOp("RZ-virtual", (0.1,), (0,), 10.0)


def test_schedule_unitary_virtual_only(dev):
    u = schedule_unitary([VirtualZ(0, 0.3), VirtualZ(1, 0.5), VirtualZ(0, 0.1)], dev)
    assert np.allclose(u, kron(rz(0.4), rz(0.5)))


def test_cnot_from_cr_on_brisbane(dev):
    sched, fidelity = cnot_from_cr_blocks(dev)
    assert fidelity > 0.999
    assert process_fidelity(schedule_unitary(sched, dev), CNOT) == pytest.approx(fidelity, abs=1e-12)


def test_cnot_from_cr_reversed_roles(dev):
    sched, fidelity = cnot_from_cr_blocks(dev, control=1, target=0)
    assert fidelity > 0.999
    assert process_fidelity(schedule_unitary(sched, dev), CNOT_21) > 0.999


def test_cnot_from_cr_needs_interaction():
    d = device_from_dict({
        "coupling_ghz": 0.0, "twoq_time_ns": 660, "ecr_err": 0.0,
        "qubits": [{"t1_us": 100, "t2_us": 100, "freq_ghz": f, "oneq_time_ns": 300, "p0_given_1": 0,
                    "p1_given_0": 0, "sx_err": 0, "x_err": 0} for f in (4.8, 4.6)],
    })
    with pytest.raises(ValueError):
        cnot_from_cr_blocks(d)
