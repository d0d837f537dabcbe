"""Dense complex linear algebra on multi-qubit registers.

Conventions used throughout the package:
  * a state on q qubits is a 1-D complex ndarray of length 2**q,
  * qubit 0 is the least significant bit of the amplitude index,
  * operators are dense square complex ndarrays.

All functions are pure; nothing here mutates its arguments.
"""
from __future__ import annotations

import numpy as np

HERMITIAN_ATOL = 1e-10


def num_qubits(dim: int) -> int:
    """Qubit count for a power-of-two dimension (raises otherwise)."""
    q = (dim - 1).bit_length()
    if dim <= 0 or dim != 1 << q:
        raise ValueError(f"dimension {dim} is not a power of two")
    return q


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value (sup norm)."""
    return float(np.linalg.norm(np.asarray(a), ord=2))


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return operator_norm(a - a.conj().T) <= atol


def is_unitary(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return operator_norm(a.conj().T @ a - np.eye(a.shape[0])) <= atol


def expm_neg_i_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i*h*t) for Hermitian h, computed by eigendecomposition.

    Eigenphases are exact up to the eigensolver's accuracy, so the result
    stays unitary to ~1e-12 even for large |t|.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("generator is not Hermitian within 1e-10")
    w, q = np.linalg.eigh(h)
    return (q * np.exp(-1j * t * w)) @ q.conj().T


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|<u|v>| for two normalized state vectors of equal length."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"state lengths differ: {u.shape} vs {v.shape}")
    return float(abs(np.vdot(u, v)))


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def apply_to_targets(state: np.ndarray, gate: np.ndarray, targets) -> np.ndarray:
    """Apply ``gate`` to the listed qubits of ``state``, identity elsewhere.

    Bit j of the gate's own basis index corresponds to ``targets[j]``, so a
    two-qubit gate on targets (2, 0) reads global qubit 2 as its low bit.
    """
    state = np.asarray(state, dtype=complex)
    gate = np.asarray(gate, dtype=complex)
    q = num_qubits(state.shape[0])
    targets = list(targets)
    k = len(targets)
    if len(set(targets)) != k:
        raise ValueError(f"duplicate target qubits: {targets}")
    if any(t < 0 or t >= q for t in targets):
        raise ValueError(f"target out of range for {q} qubits: {targets}")
    if gate.shape != (1 << k, 1 << k):
        raise ValueError(f"gate shape {gate.shape} does not match {k} targets")

    rest = [i for i in range(q) if i not in set(targets)]
    idx = np.arange(state.shape[0])
    ti = np.zeros_like(idx)
    for j, t in enumerate(targets):
        ti |= ((idx >> t) & 1) << j
    ri = np.zeros_like(idx)
    for j, r in enumerate(rest):
        ri |= ((idx >> r) & 1) << j
    block = np.zeros((1 << k, state.shape[0] >> k), dtype=complex)
    block[ti, ri] = state
    block = gate @ block
    return block[ti, ri]


def random_state(q: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state on q qubits."""
    v = rng.normal(size=1 << q) + 1j * rng.normal(size=1 << q)
    return normalize(v)


def random_hermitian(dim: int, rng: np.random.Generator, norm: float | None = None) -> np.ndarray:
    """Random Hermitian matrix, optionally rescaled to a given sup norm."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    if norm is not None:
        cur = operator_norm(h)
        if cur > 0:
            h = h * (norm / cur)
    return h


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
