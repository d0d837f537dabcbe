"""Size-m segments: joint control preparation, the weight-controlled circuit
rearrangement, its low-Hamming-weight truncation, and segment execution.

Register layout for joint operators: the system sits on qubits 0..n-1 and
control position j on qubit n+j, so a joint basis index splits as
z * 2**n + s with z the control string (bit j of z = position j).

A plan's positions each hold either a probabilistic gadget or a
deterministic fractional-query fix at +-pi/2 (used by recovery).  In a
forward plan the query step precedes the drive at each position; a reverse
plan mirrors that order.  Fix circuits are deterministic and are folded
into the drive sequence between gadgets, so the controlled structure only
ever sees the gadget positions.

The rearranged circuit replaces controlled queries with fixed queries
interleaved with weight-controlled drive blocks: block h applies the drives
lying between the h-th and (h+1)-th set control bits, every control branch
applying the whole drive sequence exactly once.  Surplus fixed queries
square away pairwise, leaving one final query controlled on the register
parity.  Dropping all but the first k interleaved queries (and flipping the
parity control when the dropped count is odd) leaves the action on control
strings of weight <= k unchanged, at a cost of k+1 full queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .discretize import FractionalProgram, _floor_tol
from .gadget import (
    FORWARD,
    REVERSE,
    apply_gadget,
    exact_fractional_circuit,
    r1_conjugate_matrix,
    r1_matrix,
    r2_matrix,
)
from .numerics import normalize
from .oracle import OracleInstance, QueryCounter, full_query_diag

DENSE_JOINT_QUBIT_CAP = 12


@dataclass(frozen=True)
class SegmentPlan:
    """One block of positions to execute and post-select as a unit.

    ``fix_angles[j]`` is None where position j holds a gadget, otherwise the
    angle of the deterministic fractional-query fix applied there.  ``k`` is
    the truncation weight for the control register over gadget positions.
    """

    theta: float
    drives: tuple[np.ndarray, ...]
    k: int
    direction: str = FORWARD
    fix_angles: tuple[float | None, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not (0 < self.theta <= np.pi):
            raise ValueError(f"step angle must lie in (0, pi], got {self.theta}")
        if self.direction not in (FORWARD, REVERSE):
            raise ValueError(f"bad direction {self.direction!r}")
        drives = tuple(np.asarray(v, dtype=complex) for v in self.drives)
        if not drives:
            raise ValueError("a segment needs at least one position")
        object.__setattr__(self, "drives", drives)
        fixes = self.fix_angles
        if fixes is None:
            fixes = (None,) * len(drives)
        fixes = tuple(fixes)
        if len(fixes) != len(drives):
            raise ValueError("fix_angles length must match drives length")
        object.__setattr__(self, "fix_angles", fixes)
        if not (0 <= self.k <= len(drives)):
            raise ValueError(f"k must lie in [0, {len(drives)}], got {self.k}")

    @property
    def m(self) -> int:
        return len(self.drives)

    @property
    def gadget_positions(self) -> tuple[int, ...]:
        return tuple(j for j, a in enumerate(self.fix_angles) if a is None)

    @property
    def n_fixes(self) -> int:
        return self.m - len(self.gadget_positions)


@dataclass(frozen=True)
class ControlState:
    """Normalized amplitudes over the m-qubit control basis."""

    m: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.m,):
            raise ValueError(f"expected {1 << self.m} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)


def choose_m(theta: float) -> int:
    """Segment length floor(1/(4*theta)); requires theta <= 1/4."""
    if not (0 < theta <= 0.25):
        raise ValueError(
            f"step angle {theta} too coarse to segment (need theta <= 1/4); increase p"
        )
    return max(_floor_tol(1.0 / (4.0 * theta)), 1)


def _weights(m: int) -> np.ndarray:
    return np.array([z.bit_count() for z in range(1 << m)], dtype=np.int64)


def _chi_bit_amps(theta: float, direction: str) -> tuple[complex, complex]:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    v = c + s
    sign = 1j if direction == FORWARD else -1j
    return complex(np.sqrt(c / v)), sign * np.sqrt(s / v)


def chi_state(m: int, theta: float, direction: str = FORWARD) -> ControlState:
    """Product state left on m control qubits by the preparation rotations."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    a0, a1 = _chi_bit_amps(theta, direction)
    wt = _weights(m)
    amps = a0 ** (m - wt) * a1**wt
    return ControlState(m, amps)


def truncate_chi(chi: ControlState, k: int) -> ControlState:
    """Renormalized projection onto control strings of Hamming weight <= k."""
    if not (0 <= k <= chi.m):
        raise ValueError(f"k must lie in [0, {chi.m}], got {k}")
    keep = _weights(chi.m) <= k
    amps = np.where(keep, chi.amplitudes, 0)
    mass = float(np.vdot(amps, amps).real)
    if mass <= 0:
        raise ValueError("projection onto the Hamming ball is empty")
    return ControlState(chi.m, amps / np.sqrt(mass))


def overlap_bound(m: int, theta: float, k: int) -> float:
    """Exact squared overlap between the control state and its truncation.

    1 - sum_{j>k} C(m,j) (1-B)^(m-j) B^j  with  B = sin(t/2)/(cos(t/2)+sin(t/2)).
    """
    if k >= m:
        return 1.0
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    b = s / (c + s)
    tail = sum(math.comb(m, j) * (1 - b) ** (m - j) * b**j for j in range(k + 1, m + 1))
    return 1.0 - float(tail)


def choose_k(T: float, eps2: float, eps3: float, m: int, theta: float) -> int:
    """Smallest truncation weight whose overlap loss is below eps2*eps3/T."""
    if not (0 < eps2 < 1 and 0 < eps3 < 1):
        raise ValueError("eps2 and eps3 must lie in (0, 1)")
    req = eps2 * eps3 / T
    for k in range(m + 1):
        if 1.0 - overlap_bound(m, theta, k) <= req:
            return k
    return m


def vbar_targets(h: int, z: int, m: int) -> tuple[int, int]:
    """Half-open drive range [start, stop) applied by weight block h on
    control string z (bit j of z = position j, positions 0..m-1).

    Block 0 covers the drives before the first set bit (all of them when z
    is zero, none when position 0 is set); block h > 0 covers the drives
    from the h-th set bit up to the next one, running to the end when there
    is no next one and doing nothing when there is no h-th bit.
    """
    if not (0 <= h <= m):
        raise ValueError(f"h must lie in [0, {m}], got {h}")
    if not (0 <= z < 1 << m):
        raise ValueError(f"z out of range for {m} control qubits: {z}")
    ones = [j for j in range(m) if (z >> j) & 1]
    if h == 0:
        if not ones:
            return (0, m)
        return (0, ones[0])
    if h > len(ones):
        return (0, 0)
    start = ones[h - 1]
    if h == len(ones):
        return (start, m)
    return (start, ones[h])


def _effective_sequence(
    plan: SegmentPlan, x: OracleInstance, counter: QueryCounter | None = None
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Fold fix circuits and drives into the stretches between gadgets.

    Returns (pre, eff) where ``pre`` acts before the first gadget and
    ``eff[t]`` follows gadget t; each fix costs two full queries.
    """
    dim = x.n_entries
    pre = np.eye(dim, dtype=complex)
    eff: list[np.ndarray] = []
    acc = np.eye(dim, dtype=complex)
    seen = False
    for j in range(plan.m):
        if plan.direction == FORWARD:
            steps = (("q", j), ("d", j))
        else:
            steps = (("d", j), ("q", j))
        for kind, jj in steps:
            if kind == "d":
                acc = plan.drives[jj] @ acc
            elif plan.fix_angles[jj] is not None:
                acc = exact_fractional_circuit(x, plan.fix_angles[jj], counter) @ acc
            else:
                if seen:
                    eff.append(acc)
                else:
                    pre = acc
                acc = np.eye(dim, dtype=complex)
                seen = True
    if seen:
        eff.append(acc)
    else:
        pre = acc
    return pre, eff


def _segment_block(
    eff: list[np.ndarray], qdiag: np.ndarray, z: int, k: int
) -> np.ndarray:
    """System operator of the (possibly truncated) circuit on control string z.

    Walks the gate list in time order: weight block h, then a fixed query
    while h < k, ending with the query controlled on parity(z) xor parity(k).
    """
    m = len(eff)
    op = np.eye(len(qdiag), dtype=complex)
    for h in range(m + 1):
        a, b = vbar_targets(h, z, m)
        for t in range(a, b):
            op = eff[t] @ op
        if h < k:
            op = qdiag[:, None] * op
    if (z.bit_count() + k) % 2 == 1:
        op = qdiag[:, None] * op
    return op


def _build_blocks(plan: SegmentPlan, x: OracleInstance, k: int, counter: QueryCounter | None) -> np.ndarray:
    pre, eff = _effective_sequence(plan, x, counter)
    m_eff = len(eff)
    n = x.n_qubits
    if m_eff + n > DENSE_JOINT_QUBIT_CAP:
        raise ValueError(
            f"dense joint operator on {m_eff + n} qubits exceeds the cap of "
            f"{DENSE_JOINT_QUBIT_CAP}"
        )
    dim = x.n_entries
    qdiag = full_query_diag(x)
    out = np.zeros(((1 << m_eff) * dim, (1 << m_eff) * dim), dtype=complex)
    for z in range(1 << m_eff):
        lo = z * dim
        out[lo : lo + dim, lo : lo + dim] = _segment_block(eff, qdiag, z, k) @ pre
    if counter is not None:
        counter.add(k + 1)
    return out


def build_rearranged(
    plan: SegmentPlan, x: OracleInstance, counter: QueryCounter | None = None
) -> np.ndarray:
    """Weight-controlled equivalent of the interleaved segment circuit.

    Agrees with the naive controlled-query circuit on every control basis
    state; uses m interleaved queries plus the parity-controlled one.
    """
    m_eff = len(plan.gadget_positions)
    return _build_blocks(plan, x, m_eff, counter)


def build_truncated(
    plan: SegmentPlan, x: OracleInstance, counter: QueryCounter | None = None
) -> np.ndarray:
    """Rearranged circuit with only the first k interleaved queries kept.

    Valid on control strings of Hamming weight <= k; uses k+1 full queries.
    """
    m_eff = len(plan.gadget_positions)
    return _build_blocks(plan, x, min(plan.k, m_eff), counter)


@lru_cache(maxsize=64)
def _hamming_ball_cached(m: int, k: int) -> np.ndarray:
    keys = []
    for w in range(min(k, m) + 1):
        for pos in combinations(range(m), w):
            acc = 0
            for p in pos:
                acc |= 1 << p
            keys.append(acc)
    out = np.array(sorted(keys), dtype=np.int64)
    out.setflags(write=False)
    return out


def hamming_ball(m: int, k: int) -> np.ndarray:
    """Sorted integers in [0, 2**m) with at most k set bits."""
    if m > 62:
        raise ValueError(f"control register of {m} qubits exceeds the 62-bit key limit")
    return _hamming_ball_cached(m, min(k, m))


def _rows_for(keys: np.ndarray, vecs: np.ndarray, want: np.ndarray) -> np.ndarray:
    """Rows of ``vecs`` for the sorted lookup strings ``want`` (zero if absent)."""
    idx = np.searchsorted(keys, want)
    idx_c = np.minimum(idx, len(keys) - 1)
    present = keys[idx_c] == want
    return np.where(present[:, None], vecs[idx_c], 0)


def segment_plans(prog: FractionalProgram, m: int, k: int) -> tuple[SegmentPlan, ...]:
    """Split a program into ceil(p/m) forward plans; the last may be shorter."""
    plans = []
    for start in range(0, prog.p, m):
        drives = prog.drives[start : start + m]
        plans.append(
            SegmentPlan(theta=prog.theta, drives=drives, k=min(k, len(drives)), direction=FORWARD)
        )
    return tuple(plans)


def _run_exact(psi, x, plan, rng, counter):
    outcomes = [0] * plan.m
    for j in range(plan.m):
        if plan.direction == FORWARD:
            steps = (("q", j), ("d", j))
        else:
            steps = (("d", j), ("q", j))
        for kind, jj in steps:
            if kind == "d":
                psi = plan.drives[jj] @ psi
            elif plan.fix_angles[jj] is not None:
                psi = exact_fractional_circuit(x, plan.fix_angles[jj], counter) @ psi
            else:
                out, psi = apply_gadget(psi, x, plan.theta, plan.direction, rng.random(), counter)
                outcomes[jj] = out.measured_bit
    return tuple(outcomes), psi


def _run_truncated(psi, x, plan, rng, counter):
    pre, eff = _effective_sequence(plan, x, counter)
    m_eff = len(eff)
    psi = pre @ psi
    if m_eff == 0:
        return (0,) * plan.m, normalize(psi)
    k_eff = min(plan.k, m_eff)
    counter.add(k_eff + 1)

    keys = hamming_ball(m_eff, k_eff)
    a0, a1 = _chi_bit_amps(plan.theta, plan.direction)
    wt = np.bitwise_count(keys).astype(np.int64)
    amps = a0 ** (m_eff - wt) * np.asarray(a1, dtype=complex) ** wt
    amps = amps / np.linalg.norm(amps)
    vecs = amps[:, None] * psi[None, :]

    # Interleaved controlled-query action; on the weight-<=k ball this equals
    # the truncated circuit exactly (the equivalence the dense builders test).
    qdiag = full_query_diag(x)
    for t in range(m_eff):
        mask = ((keys >> t) & 1) == 1
        vecs[mask] *= qdiag
        vecs = vecs @ eff[t].T

    # R2 and measurement, one control qubit at a time, exact chain rule.
    r2 = r2_matrix(plan.theta)
    outcomes_eff = []
    for t in range(m_eff):
        bit = np.int64(1 << t)
        base = np.unique(keys & ~bit)
        v0 = _rows_for(keys, vecs, base)
        v1 = _rows_for(keys, vecs, base | bit)
        n0 = r2[0, 0] * v0 + r2[0, 1] * v1
        n1 = r2[1, 0] * v0 + r2[1, 1] * v1
        p0 = float(np.sum(np.abs(n0) ** 2))
        p1 = float(np.sum(np.abs(n1) ** 2))
        if rng.random() < p0 / (p0 + p1):
            outcomes_eff.append(0)
            keys, vecs = base, n0 / np.sqrt(p0)
        else:
            outcomes_eff.append(1)
            keys, vecs = base | bit, n1 / np.sqrt(p1)

    psi_out = normalize(vecs[0])
    outcomes = [0] * plan.m
    for t, j in enumerate(plan.gadget_positions):
        outcomes[j] = outcomes_eff[t]
    return tuple(outcomes), psi_out


EXACT_SEQUENTIAL = "exact_sequential"
TRUNCATED = "truncated"


def run_segment(
    psi: np.ndarray,
    x: OracleInstance,
    plan: SegmentPlan,
    mode: str,
    rng: np.random.Generator,
    counter: QueryCounter | None = None,
) -> tuple[tuple[int, ...], np.ndarray, int]:
    """Execute one segment; returns (outcome bits, post state, queries used).

    ``exact_sequential`` runs the m gadgets one at a time (m full queries for
    a fix-free plan); ``truncated`` prepares the truncated control state
    jointly and samples the measurement record from its exact distribution
    (k+1 full queries).  Outcome bit 0 means success at that position; fix
    positions always report 0.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (x.n_entries,):
        raise ValueError("state length does not match oracle dimension")
    if counter is None:
        counter = QueryCounter()
    before = counter.full_queries
    if mode == EXACT_SEQUENTIAL:
        outcomes, psi2 = _run_exact(psi, x, plan, rng, counter)
    elif mode == TRUNCATED:
        outcomes, psi2 = _run_truncated(psi, x, plan, rng, counter)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return outcomes, psi2, counter.full_queries - before
