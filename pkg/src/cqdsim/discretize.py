"""Conversion of a continuous-time algorithm into a fractional-query program.

The program alternates a fractional query at angle theta = T/p with the exact
drive evolution over each length-theta slice.  The slice count p is chosen so
the first-order product-formula defect stays below sqrt(eps1), and the defect
itself can be measured exactly against the piecewise ground truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .continuous import ContinuousAlgorithm, drive_evolve, evolve_interval
from .numerics import operator_norm
from .oracle import OracleInstance, fractional_query_diag, query_hamiltonian

_INT_TOL = 1e-9


def _ceil_tol(v: float) -> int:
    """ceil that forgives values a hair above an integer."""
    n = round(v)
    if abs(v - n) <= _INT_TOL * max(1.0, abs(v)):
        return int(n)
    return int(math.ceil(v))


def _floor_tol(v: float) -> int:
    """floor that forgives values a hair below an integer."""
    n = round(v)
    if abs(v - n) <= _INT_TOL * max(1.0, abs(v)):
        return int(n)
    return int(math.floor(v))


@dataclass(frozen=True)
class FractionalProgram:
    """p drive unitaries interleaved with fractional queries at angle theta."""

    theta: float
    drives: tuple[np.ndarray, ...]
    n_qubits: int

    def __post_init__(self):
        if not (0 < self.theta < np.pi):
            raise ValueError(f"step angle must lie in (0, pi), got {self.theta}")
        object.__setattr__(self, "drives", tuple(np.asarray(v, dtype=complex) for v in self.drives))

    @property
    def p(self) -> int:
        return len(self.drives)

    @property
    def total_time(self) -> float:
        return self.p * self.theta


def choose_p(T: float, r: float, eps1: float) -> int:
    """Slice count for discretization fidelity 1 - eps1.

    Floored so that theta = T/p stays below pi, keeping every fractional
    query in its domain even for drive-free or tiny-T programs.
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    if r < 0:
        raise ValueError(f"average norm must be nonnegative, got {r}")
    if not (0 < eps1 < 1):
        raise ValueError(f"eps1 must lie in (0, 1), got {eps1}")
    p_bound = _ceil_tol(2.0 * T * T * r / math.sqrt(eps1)) if r > 0 else 0
    p_range = _floor_tol(T / np.pi) + 1
    return max(p_bound, p_range, 1)


def build_program(alg: ContinuousAlgorithm, p: int) -> FractionalProgram:
    """Slice the drive into p equal windows; the k-th drive covers [k, k+1]*theta."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    T = alg.total_time
    theta = T / p
    if theta >= np.pi:
        raise ValueError(f"p={p} gives step angle {theta} >= pi; increase p")
    drives = tuple(drive_evolve(alg.schedule, k * theta, (k + 1) * theta) for k in range(p))
    n = (alg.schedule.dim - 1).bit_length()
    return FractionalProgram(theta=theta, drives=drives, n_qubits=n)


def run_ideal(prog: FractionalProgram, x: OracleInstance, psi0: np.ndarray) -> np.ndarray:
    """Apply the program exactly: query then drive, for each of the p slices."""
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (x.n_entries,) or x.n_qubits != prog.n_qubits:
        raise ValueError("state, oracle, and program dimensions must agree")
    qdiag = fractional_query_diag(x, prog.theta)
    for v in prog.drives:
        psi = v @ (qdiag * psi)
    return psi


def trotter_defect(alg: ContinuousAlgorithm, prog: FractionalProgram, x: OracleInstance) -> float:
    """Sup-norm distance between the exact evolution and the program.

    Both sides are accumulated as full products over all p slices, matching
    the global bound 2*T^2*r/p rather than a per-slice estimate.
    """
    h = query_hamiltonian(x)
    dim = alg.schedule.dim
    exact = np.eye(dim, dtype=complex)
    approx = np.eye(dim, dtype=complex)
    theta = prog.theta
    qdiag = fractional_query_diag(x, theta)
    for k, v in enumerate(prog.drives):
        exact = evolve_interval(alg.schedule, k * theta, (k + 1) * theta, extra=h) @ exact
        approx = (v * qdiag[None, :]) @ approx
    return operator_norm(exact - approx)
