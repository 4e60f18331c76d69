"""Dense complex linear algebra and state primitives for one and two qubits.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Qubit 1 is the
leftmost tensor factor everywhere, so ``kron(a, b)`` acts with ``a`` on qubit 1
and ``b`` on qubit 2.
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


def kron(a, b):
    """Kronecker product of two matrices; ``a`` becomes the leftmost (first-qubit) factor."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    (m, n), (p, q) = a.shape, b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(m * p, n * q)


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - dagger(h)), initial=0.0) <= tol


def is_unitary(u, tol=1e-10):
    u = np.asarray(u)
    return np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol


def expm_hermitian(h, t=1.0):
    """Return ``exp(-i h t)`` for a Hermitian generator ``h``.

    Uses the spectral decomposition ``h = V diag(w) V^dagger``, which is exact to
    machine precision for the 2x2 and 4x4 generators simulated here.

    Raises
    ------
    ValueError
        If ``h`` is not Hermitian within 1e-10.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("generator is not Hermitian")
    h = 0.5 * (h + dagger(h))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ dagger(v)


def apply_unitary(rho, u):
    """Return ``u rho u^dagger``."""
    rho = np.asarray(rho)
    u = np.asarray(u)
    if u.shape != rho.shape:
        raise ValueError(f"dimension mismatch: operator {u.shape} vs state {rho.shape}")
    return u @ rho @ dagger(u)


def partial_trace_keep_first(rho):
    """Reduced state of qubit 1 from a two-qubit density matrix.

    Also accepts a stack of density matrices with shape ``(..., 4, 4)``.
    """
    rho = np.asarray(rho)
    if rho.shape[-2:] != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got shape {rho.shape}")
    r = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    return np.einsum("...ajbj->...ab", r)


def fidelity_pure(target, rho):
    """Overlap ``<target|rho|target>`` clamped to ``[0, 1]``."""
    target = np.asarray(target, dtype=complex)
    rho = np.asarray(rho)
    if rho.shape != (target.size, target.size):
        raise ValueError(f"dimension mismatch: state of size {target.size} vs rho {rho.shape}")
    f = np.real(np.vdot(target, rho @ target))
    return float(min(1.0, max(0.0, f)))


def pure_state(amplitudes):
    """Normalized copy of ``amplitudes`` as a state vector; rejects the zero vector."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    if psi.size not in (2, 4):
        raise ValueError("only one- and two-qubit states are supported")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("zero vector is not a state")
    return psi / norm


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho, tol=TRACE_TOL, psd_tol=PSD_TOL):
    """Raise ``ValueError`` unless ``rho`` is a valid 2x2 or 4x4 density matrix."""
    rho = np.asarray(rho)
    if rho.shape not in ((2, 2), (4, 4)):
        raise ValueError(f"unsupported density-matrix shape {rho.shape}")
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.3e}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + dagger(rho))).min() < -psd_tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def global_phase_distance(u, v):
    """Max-norm distance between ``u`` and ``v`` after removing a global phase.

    The phase is fixed by aligning the largest-magnitude entry of ``v``.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(u[k]) == 0:
        return float(np.max(np.abs(u - v)))
    phase = u[k] / abs(u[k]) * abs(v[k]) / v[k]
    return float(np.max(np.abs(u - phase * v)))


def equal_up_to_global_phase(u, v, tol=1e-9):
    return global_phase_distance(u, v) < tol


def process_fidelity(u, v):
    """``|tr(u^dagger v)|^2 / d^2`` for two unitaries of dimension ``d``."""
    u = np.asarray(u)
    d = u.shape[0]
    return float(abs(np.trace(dagger(u) @ np.asarray(v))) ** 2 / d**2)


def random_unitary(dim, rng):
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim, rng, rank=None):
    """Random density matrix from the induced (Hilbert-Schmidt-like) measure."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_hermitian(dim, rng, scale=1.0):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (a + dagger(a))
