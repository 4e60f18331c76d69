"""Kraus channels, the device model and the channel-insertion policy.

Device parameters are held in simulation units (ns, rad/ns).  Datasheet files
use the units printed on the calibration table (us, GHz, ns) and are converted
on load; see :func:`device_from_dict` and :func:`device_to_dict`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import product
from pathlib import Path

import numpy as np

from .qcore import I2, PAULIS, SX, SY, SZ, dagger, kron

TWO_PI = 2.0 * math.pi


class DeviceFileError(ValueError):
    """A device description could not be parsed or failed validation."""


@dataclass(frozen=True)
class KrausChannel:
    """Operator-sum representation ``rho -> sum_k K_k rho K_k^dagger``."""

    operators: tuple
    name: str = "kraus"

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must share one shape")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self):
        return self.operators[0].shape[0]

    def completeness_error(self):
        total = sum(dagger(k) @ k for k in self.operators)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def superoperator(self):
        """Matrix ``S`` with ``vec(E(rho)) = S vec(rho)`` for row-major ``vec``."""
        return sum(np.kron(k, k.conj()) for k in self.operators)


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0 or not math.isfinite(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def depolarizing_1q(p):
    _check_prob("p", p)
    ops = [math.sqrt(1 - p) * I2] + [math.sqrt(p / 3) * s for s in (SX, SY, SZ)]
    return KrausChannel(tuple(ops), "depolarizing_1q")


def depolarizing_2q(p):
    """Uniform two-qubit depolarizing: ``sqrt(1-p) I`` plus the 15 non-identity Pauli pairs."""
    _check_prob("p", p)
    ops = [math.sqrt(1 - p) * np.eye(4, dtype=complex)]
    for a, b in product(range(4), repeat=2):
        if a == 0 and b == 0:
            continue
        ops.append(math.sqrt(p / 15) * kron(PAULIS[a], PAULIS[b]))
    return KrausChannel(tuple(ops), "depolarizing_2q")


def amplitude_damping(gamma):
    _check_prob("gamma", gamma)
    k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)
    return KrausChannel((k0, k1), "amplitude_damping")


def phase_damping(lam):
    _check_prob("lambda", lam)
    k0 = np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex)
    k1 = np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex)
    return KrausChannel((k0, k1), "phase_damping")


def damping_params(t, t1, t2):
    """Decay probabilities ``(gamma, lambda)`` for an operation of duration ``t``."""
    if t < 0 or t1 <= 0 or t2 <= 0:
        raise ValueError("need t >= 0 and positive T1, T2")
    return -math.expm1(-t / t1), -math.expm1(-t / t2)


@dataclass(frozen=True)
class QubitNoiseParams:
    t1: float  # ns
    t2: float  # ns
    frequency: float  # rad/ns
    anharmonicity: float  # rad/ns, not used by the two-level simulation
    oneq_duration: float  # ns
    readout_p01: float  # P(read 0 | prepared 1)
    readout_p10: float  # P(read 1 | prepared 0)
    rz_err: float = 0.0
    sx_err: float = 0.0
    x_err: float = 0.0
    p_prep: float = 0.0
    readout_err: float | None = None

    def __post_init__(self):
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError(f"T1 and T2 must be positive (got T1={self.t1}, T2={self.t2})")
        if self.oneq_duration <= 0:
            raise ValueError("single-qubit gate time must be positive")
        for name in ("readout_p01", "readout_p10", "rz_err", "sx_err", "x_err", "p_prep"):
            _check_prob(name, getattr(self, name))


@dataclass(frozen=True)
class DeviceModel:
    """Hardware parameters of a one- or two-qubit register.

    ``mu`` and ``nu`` are the cross-resonance coefficients.  When left as
    ``None`` they default to ``mu = J / detuning_12`` and ``nu = 0``.
    """

    qubits: tuple
    coupling: float  # J, rad/ns
    twoq_duration: float  # ns
    ecr_err: float
    mu: float | None = None
    nu: float | None = None
    name: str = "device"

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if not self.qubits:
            raise ValueError("device needs at least one qubit")
        if self.twoq_duration <= 0:
            raise ValueError("two-qubit gate time must be positive")
        _check_prob("ecr_err", self.ecr_err)

    @property
    def detuning_12(self):
        """``omega_1 - omega_2`` in rad/ns (0 for a single-qubit device)."""
        if len(self.qubits) < 2:
            return 0.0
        return self.qubits[0].frequency - self.qubits[1].frequency

    @property
    def cr_mu(self):
        if self.mu is not None:
            return self.mu
        d = self.detuning_12
        return self.coupling / d if d != 0 else 0.0

    @property
    def cr_nu(self):
        return 0.0 if self.nu is None else self.nu

    def qubit(self, q):
        return self.qubits[q]


@dataclass(frozen=True)
class NoisePolicy:
    enabled: bool = True
    depolarizing_override_p: float | None = None
    spam_enabled: bool = True

    def __post_init__(self):
        if self.depolarizing_override_p is not None:
            _check_prob("depolarizing_override_p", self.depolarizing_override_p)


NOISELESS = NoisePolicy(enabled=False, spam_enabled=False)


def estimate_depolarizing_p(dev, qubit):
    """Single-qubit depolarizing probability: mean of the X and SX error rates."""
    q = dev.qubit(qubit)
    return 0.5 * (q.x_err + q.sx_err)


def post_op_channels(kind, duration, qubits, dev, policy):
    """Ordered ``(channel, targets)`` pairs to apply after one native operation.

    ``kind`` is ``"1q-pulse"``, ``"1q-gate"``, ``"2q-op"`` or ``"vz"``.  Virtual-Z
    operations and disabled policies yield no channels.
    """
    return list(_post_op_channels(kind, float(duration), tuple(qubits), dev, policy))


@lru_cache(maxsize=1024)
def _post_op_channels(kind, duration, qubits, dev, policy):
    if not policy.enabled or kind == "vz":
        return ()
    override = policy.depolarizing_override_p
    out = []
    if kind in ("1q-pulse", "1q-gate"):
        (q,) = qubits
        p = estimate_depolarizing_p(dev, q) if override is None else override
        out.append((depolarizing_1q(p), (q,)))
    elif kind == "2q-op":
        p = dev.ecr_err if override is None else override
        out.append((depolarizing_2q(p), qubits))
    else:
        raise ValueError(f"unknown operation kind {kind!r}")
    for q in qubits:
        gamma, lam = damping_params(duration, dev.qubit(q).t1, dev.qubit(q).t2)
        out.append((amplitude_damping(gamma), (q,)))
        out.append((phase_damping(lam), (q,)))
    return tuple(out)


def embed_operator(op, targets, n_qubits):
    """Lift a one-qubit operator on ``targets[0]`` (or a full two-qubit operator) to the register."""
    op = np.asarray(op, dtype=complex)
    targets = tuple(targets)
    if op.shape[0] == 2**n_qubits:
        if n_qubits == 2 and targets == (1, 0):
            swap = np.eye(4)[[0, 2, 1, 3]]
            return swap @ op @ swap
        return op
    if op.shape != (2, 2) or len(targets) != 1:
        raise ValueError(f"cannot embed operator of shape {op.shape} on targets {targets}")
    if n_qubits == 1:
        return op
    return kron(op, I2) if targets[0] == 0 else kron(I2, op)


def apply_channel(rho, ch, targets=None):
    """Apply a Kraus channel to ``rho``; one-qubit channels are embedded on ``targets``."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[-1]
    n = {2: 1, 4: 2}.get(dim)
    if n is None:
        raise ValueError(f"unsupported state dimension {dim}")
    if targets is None:
        targets = tuple(range(n)) if ch.dim == dim else (0,)
    if ch.dim != dim and ch.dim != 2:
        raise ValueError(f"channel of dimension {ch.dim} does not fit state of dimension {dim}")
    out = np.zeros_like(rho)
    for k in ch.operators:
        kk = embed_operator(k, targets, n)
        out += kk @ rho @ dagger(kk)
    return out


def prep_state(dev, n_qubits, policy):
    """Initial register state; with SPAM each qubit starts in ``|1>`` with probability ``p_prep``."""
    if n_qubits not in (1, 2):
        raise ValueError("n_qubits must be 1 or 2")
    rho = np.ones((1, 1), dtype=complex)
    for q in range(n_qubits):
        p = dev.qubit(q).p_prep if policy.spam_enabled else 0.0
        rho = kron(rho, np.diag([1 - p, p]))
    return rho


def confusion_matrix(dev, qubit):
    q = dev.qubit(qubit)
    return np.array([[1 - q.readout_p10, q.readout_p01], [q.readout_p10, 1 - q.readout_p01]])


def readout_probs(rho1, basis, dev, qubit, policy):
    """Outcome probabilities ``(p0, p1)`` for a measurement in the basis of ``basis``' columns.

    With SPAM enabled the ideal probabilities pass through the qubit's
    column-stochastic confusion matrix.  ``rho1`` may be a stack ``(..., 2, 2)``.
    """
    v = np.asarray(basis, dtype=complex)
    rho1 = np.asarray(rho1)
    ideal = np.real(np.einsum("ia,...ij,ja->...a", v.conj(), rho1, v))
    if policy.spam_enabled:
        ideal = ideal @ confusion_matrix(dev, qubit).T
    return ideal


# ---------------------------------------------------------------------------
# Device description files
# ---------------------------------------------------------------------------

def brisbane_device():
    """Qubits 1 and 2 of ``ibm_brisbane`` as listed on the public calibration table."""
    return device_from_dict(BRISBANE_TABLE)


BRISBANE_TABLE = {
    "name": "ibm_brisbane",
    "coupling_ghz": 0.013,
    "twoq_time_ns": 660,
    "ecr_err": 0.00431,
    "qubits": [
        {
            "t1_us": 180, "t2_us": 180, "freq_ghz": 4.8, "anharmonicity_ghz": -0.31,
            "oneq_time_ns": 300, "readout_err": 0.0337, "p0_given_1": 0.0215,
            "p1_given_0": 0.0459, "rz_err": 0, "sx_err": 0.000187, "x_err": 0.000187,
        },
        {
            "t1_us": 310, "t2_us": 250, "freq_ghz": 4.6, "anharmonicity_ghz": -0.31,
            "oneq_time_ns": 300, "readout_err": 0.0256, "p0_given_1": 0.0176,
            "p1_given_0": 0.0337, "rz_err": 0, "sx_err": 0.000367, "x_err": 0.000367,
        },
    ],
}


def _num(d, key, where):
    try:
        v = d[key]
    except KeyError:
        raise DeviceFileError(f"{where}: missing key {key!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DeviceFileError(f"{where}: {key!r} must be a number, got {v!r}")
    return float(v)


def device_from_dict(d):
    """Build a :class:`DeviceModel` from a datasheet-unit mapping."""
    if not isinstance(d, dict):
        raise DeviceFileError("device description must be a JSON object")
    raw_qubits = d.get("qubits")
    if not isinstance(raw_qubits, list) or not raw_qubits:
        raise DeviceFileError("device description needs a non-empty 'qubits' list")
    qubits = []
    for i, q in enumerate(raw_qubits):
        where = f"qubit {i + 1}"
        if not isinstance(q, dict):
            raise DeviceFileError(f"{where}: expected an object")
        try:
            qubits.append(
                QubitNoiseParams(
                    t1=1e3 * _num(q, "t1_us", where),
                    t2=1e3 * _num(q, "t2_us", where),
                    frequency=TWO_PI * _num(q, "freq_ghz", where),
                    anharmonicity=TWO_PI * float(q.get("anharmonicity_ghz", 0.0)),
                    oneq_duration=_num(q, "oneq_time_ns", where),
                    readout_p01=_num(q, "p0_given_1", where),
                    readout_p10=_num(q, "p1_given_0", where),
                    rz_err=float(q.get("rz_err", 0.0)),
                    sx_err=_num(q, "sx_err", where),
                    x_err=_num(q, "x_err", where),
                    p_prep=float(q.get("p_prep", 0.0)),
                    readout_err=None if q.get("readout_err") is None else float(q["readout_err"]),
                )
            )
        except ValueError as exc:
            if isinstance(exc, DeviceFileError):
                raise
            raise DeviceFileError(f"{where}: {exc}") from None
    try:
        return DeviceModel(
            qubits=tuple(qubits),
            coupling=TWO_PI * float(d.get("coupling_ghz", 0.0)),
            twoq_duration=_num(d, "twoq_time_ns", "device") if len(qubits) > 1 else float(d.get("twoq_time_ns", 1.0)),
            ecr_err=float(d.get("ecr_err", 0.0)),
            mu=None if d.get("mu") is None else float(d["mu"]),
            nu=None if d.get("nu") is None else float(d["nu"]),
            name=str(d.get("name", "device")),
        )
    except ValueError as exc:
        if isinstance(exc, DeviceFileError):
            raise
        raise DeviceFileError(f"device: {exc}") from None


def _clean(x):
    # undo unit-conversion round-off so files round-trip exactly
    return float(f"{x:.12g}")


def device_to_dict(dev):
    """Inverse of :func:`device_from_dict` (datasheet units)."""
    qubits = []
    for q in dev.qubits:
        entry = {
            "t1_us": _clean(q.t1 / 1e3),
            "t2_us": _clean(q.t2 / 1e3),
            "freq_ghz": _clean(q.frequency / TWO_PI),
            "anharmonicity_ghz": _clean(q.anharmonicity / TWO_PI),
            "oneq_time_ns": _clean(q.oneq_duration),
            "p0_given_1": q.readout_p01,
            "p1_given_0": q.readout_p10,
            "rz_err": q.rz_err,
            "sx_err": q.sx_err,
            "x_err": q.x_err,
            "p_prep": q.p_prep,
        }
        if q.readout_err is not None:
            entry["readout_err"] = q.readout_err
        qubits.append(entry)
    return {
        "name": dev.name,
        "coupling_ghz": _clean(dev.coupling / TWO_PI),
        "twoq_time_ns": _clean(dev.twoq_duration),
        "ecr_err": dev.ecr_err,
        "mu": dev.mu,
        "nu": dev.nu,
        "qubits": qubits,
    }


def load_device(source="builtin-brisbane"):
    """Resolve ``builtin-brisbane`` or a path to a JSON device file."""
    if source in (None, "builtin-brisbane"):
        return brisbane_device()
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise DeviceFileError(f"cannot read device file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DeviceFileError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return device_from_dict(data)


def with_ideal_coherence(dev, t=1e12):
    """Copy of ``dev`` with T1 = T2 = ``t`` ns on every qubit."""
    return replace(dev, qubits=tuple(replace(q, t1=t, t2=t) for q in dev.qubits))


def describe_device(dev, probe_durations=None):
    """Derived quantities shown by the ``device`` command."""
    probe = probe_durations or {}
    info = {
        "detuning_12_rad_per_ns": dev.detuning_12,
        "coupling_J_rad_per_ns": dev.coupling,
        "mu": dev.cr_mu,
        "nu": dev.cr_nu,
        "qubits": [],
    }
    for i, q in enumerate(dev.qubits):
        t1q = probe.get("1q", q.oneq_duration)
        g1, l1 = damping_params(t1q, q.t1, q.t2)
        g2, l2 = damping_params(dev.twoq_duration, q.t1, q.t2)
        info["qubits"].append(
            {
                "qubit": i + 1,
                "depolarizing_p": estimate_depolarizing_p(dev, i),
                "gamma_1q": g1,
                "lambda_1q": l1,
                "gamma_2q": g2,
                "lambda_2q": l2,
            }
        )
    return info

