"""Continuous-time query algorithms with piecewise-constant driving.

A driving schedule is a time-ordered list of (duration, Hermitian generator)
pieces.  Restricting to piecewise-constant drives makes both the reference
evolution and the average norm exact, so every downstream bound is checked
against ground truth rather than against another approximation.  Smooth
drives are modelled by refining the pieces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import expm_neg_i_hermitian, num_qubits, operator_norm
from .oracle import OracleInstance, query_hamiltonian

_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class DrivingSchedule:
    """Piecewise-constant time-dependent Hamiltonian."""

    pieces: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("schedule needs at least one piece")
        norm_pieces = []
        dim = None
        for dur, gen in self.pieces:
            dur = float(dur)
            if dur <= 0:
                raise ValueError(f"piece duration must be positive, got {dur}")
            gen = np.asarray(gen, dtype=complex)
            if gen.ndim != 2 or gen.shape[0] != gen.shape[1]:
                raise ValueError("generators must be square matrices")
            if dim is None:
                dim = gen.shape[0]
                num_qubits(dim)
            elif gen.shape[0] != dim:
                raise ValueError("all generators must share one dimension")
            norm_pieces.append((dur, gen))
        object.__setattr__(self, "pieces", tuple(norm_pieces))

    @property
    def total_time(self) -> float:
        return float(sum(dur for dur, _ in self.pieces))

    @property
    def dim(self) -> int:
        return self.pieces[0][1].shape[0]


@dataclass(frozen=True)
class ContinuousAlgorithm:
    """A driving schedule with its initial state; run time is the schedule's."""

    schedule: DrivingSchedule
    initial_state: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.initial_state, dtype=complex)
        if psi.shape != (self.schedule.dim,):
            raise ValueError(
                f"initial state length {psi.shape} does not match schedule "
                f"dimension {self.schedule.dim}"
            )
        if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
            raise ValueError("initial state must be normalized")
        object.__setattr__(self, "initial_state", psi)

    @property
    def total_time(self) -> float:
        return self.schedule.total_time


def average_norm(s: DrivingSchedule) -> float:
    """Duration-weighted mean of the generators' sup norms."""
    total = s.total_time
    return float(sum(dur * operator_norm(gen) for dur, gen in s.pieces) / total)


def _window_slices(s: DrivingSchedule, t_a: float, t_b: float) -> list[tuple[float, np.ndarray]]:
    """Split [t_a, t_b] at piece boundaries; tolerant to fp at the ends."""
    total = s.total_time
    tol = _EDGE_TOL * max(1.0, total)
    if t_b < t_a - tol:
        raise ValueError(f"interval reversed: [{t_a}, {t_b}]")
    if t_a < -tol or t_b > total + tol:
        raise ValueError(f"interval [{t_a}, {t_b}] outside [0, {total}]")
    t_a = min(max(t_a, 0.0), total)
    t_b = min(max(t_b, 0.0), total)
    out = []
    start = 0.0
    for dur, gen in s.pieces:
        end = start + dur
        lo, hi = max(t_a, start), min(t_b, end)
        if hi - lo > 1e-15:
            out.append((hi - lo, gen))
        start = end
    return out


def evolve_interval(
    s: DrivingSchedule, t_a: float, t_b: float, extra: np.ndarray | None = None
) -> np.ndarray:
    """Exact unitary for evolution over [t_a, t_b].

    With ``extra`` set, it is added to every piece's generator, which gives
    the exact joint evolution of the drive together with a constant term.
    """
    dim = s.dim
    u = np.eye(dim, dtype=complex)
    for dur, gen in _window_slices(s, t_a, t_b):
        h = gen if extra is None else gen + extra
        u = expm_neg_i_hermitian(h, dur) @ u
    return u


def drive_evolve(s: DrivingSchedule, t_a: float, t_b: float) -> np.ndarray:
    """Exact drive-only evolution operator over [t_a, t_b]."""
    return evolve_interval(s, t_a, t_b)


def reference_evolve(alg: ContinuousAlgorithm, x: OracleInstance) -> np.ndarray:
    """Ground-truth final state: evolve under drive plus query Hamiltonian."""
    if x.n_entries != alg.schedule.dim:
        raise ValueError(
            f"oracle dimension {x.n_entries} does not match system "
            f"dimension {alg.schedule.dim}"
        )
    u = evolve_interval(alg.schedule, 0.0, alg.total_time, extra=query_hamiltonian(x))
    return u @ alg.initial_state
