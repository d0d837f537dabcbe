"""Query operators built from a hidden bit string.

Everything is a phase oracle, diagonal in the computational basis: the full
query flips the sign of |j> when bit j of the hidden string is set, and the
fractional query applies exp(-i*theta) there instead.  Diagonals are exposed
alongside the dense matrices because most of the simulator applies queries
as elementwise multiplications.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THETA_SLACK = 1e-12


@dataclass(frozen=True)
class OracleInstance:
    """Hidden string x over N = 2**n_qubits entries, each 0 or 1."""

    n_qubits: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        bits = tuple(int(b) for b in self.bits)
        if len(bits) != 1 << self.n_qubits:
            raise ValueError(
                f"expected {1 << self.n_qubits} bits for n_qubits={self.n_qubits}, "
                f"got {len(bits)}"
            )
        if any(b not in (0, 1) for b in bits):
            raise ValueError("oracle bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @property
    def n_entries(self) -> int:
        return 1 << self.n_qubits


def random_instance(n_qubits: int, rng: np.random.Generator) -> OracleInstance:
    bits = tuple(int(b) for b in rng.integers(0, 2, size=1 << n_qubits))
    return OracleInstance(n_qubits, bits)


@dataclass
class QueryCounter:
    """Single authority for full-query accounting.

    Every site that consumes full queries (the probabilistic gadget, the
    two-query fractional circuit, segment circuits) increments one of these.
    """

    full_queries: int = 0

    def add(self, n: int = 1) -> None:
        self.full_queries += n


def _check_theta(theta: float) -> None:
    if not (-np.pi - THETA_SLACK < theta <= np.pi + THETA_SLACK):
        raise ValueError(f"theta must lie in (-pi, pi], got {theta}")


def query_hamiltonian(x: OracleInstance) -> np.ndarray:
    """Diagonal Hamiltonian with eigenvalue x_j on |j>."""
    return np.diag(np.asarray(x.bits, dtype=complex))


def full_query_diag(x: OracleInstance) -> np.ndarray:
    """Diagonal of the full query: (-1)**x_j."""
    return (1.0 - 2.0 * np.asarray(x.bits, dtype=float)).astype(complex)


def full_query(x: OracleInstance) -> np.ndarray:
    """Self-inverse phase query with entry (-1)**x_j at index j."""
    return np.diag(full_query_diag(x))


def fractional_query_diag(x: OracleInstance, theta: float) -> np.ndarray:
    _check_theta(theta)
    return np.exp(-1j * theta * np.asarray(x.bits, dtype=float))


def fractional_query(x: OracleInstance, theta: float) -> np.ndarray:
    """Diagonal query exp(-i*theta*x_j); a full query at theta = pi."""
    return np.diag(fractional_query_diag(x, theta))


def controlled_full_query_diag(x: OracleInstance) -> np.ndarray:
    """Diagonal of the controlled query on 1 + n qubits.

    The control is the most significant qubit: identity on the control-0
    block, the full query on the control-1 block.
    """
    n = x.n_entries
    return np.concatenate([np.ones(n, dtype=complex), full_query_diag(x)])


def controlled_full_query(x: OracleInstance) -> np.ndarray:
    return np.diag(controlled_full_query_diag(x))
