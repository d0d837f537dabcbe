"""Undo/redo error correction for failed segments.

A failed segment leaves known quarter-turn errors at the measured positions.
The undo plan runs the segment in reverse (inverted drives, opposite gadget
sign) with each recorded error replaced by its deterministic inverse fix;
the segment is then redone from scratch.  Undo plans can themselves fail,
so execution is a biased random walk over a stack of pending plans, with a
Markov-style budget guaranteeing termination.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

from .discretize import FractionalProgram
from .gadget import FORWARD, REVERSE
from .oracle import OracleInstance, QueryCounter
from .segment import (
    EXACT_SEQUENTIAL,
    SegmentPlan,
    choose_k,
    choose_m,
    run_segment,
    segment_plans,
)

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class ErrorRecord:
    """Gadget positions that failed in one segment run, with the angle of the
    error operator each failure left on the system."""

    positions: tuple[int, ...]
    signs: tuple[float, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.signs):
            raise ValueError("positions and signs must have equal length")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("positions must be strictly increasing")


@dataclass
class TrajectoryStats:
    full_queries: int
    segment_computations: int
    error_fixes: int
    succeeded: bool
    max_recursion_depth: int


def error_record(plan: SegmentPlan, outcomes: tuple[int, ...]) -> ErrorRecord | None:
    """Record of the failed gadget positions, or None on full success."""
    pos = tuple(j for j in plan.gadget_positions if outcomes[j] == 1)
    if not pos:
        return None
    sign = -HALF_PI if plan.direction == FORWARD else HALF_PI
    return ErrorRecord(pos, (sign,) * len(pos))


def undo_plan(failed: SegmentPlan, record: ErrorRecord) -> SegmentPlan:
    """Reverse plan inverting everything the failed run actually applied.

    Position m-1-t of the result mirrors position t of the failed plan:
    inverted drive, a gadget of opposite sign where the original gadget
    succeeded, and a deterministic fix at the inverse angle where it failed
    (or where the original plan already carried a fix).
    """
    gadgets = set(failed.gadget_positions)
    if any(p not in gadgets for p in record.positions):
        raise ValueError("record names a position that holds no gadget")
    err = dict(zip(record.positions, record.signs))
    m = failed.m
    drives = tuple(failed.drives[m - 1 - t].conj().T for t in range(m))
    fixes = []
    for t in range(m):
        j = m - 1 - t
        if failed.fix_angles[j] is not None:
            fixes.append(-failed.fix_angles[j])
        elif j in err:
            fixes.append(-err[j])
        else:
            fixes.append(None)
    direction = REVERSE if failed.direction == FORWARD else FORWARD
    return SegmentPlan(
        theta=failed.theta,
        drives=drives,
        k=failed.k,
        direction=direction,
        fix_angles=tuple(fixes),
    )


def run_with_recovery(
    psi0: np.ndarray,
    x: OracleInstance,
    prog: FractionalProgram,
    eps2: float,
    budget_factor: float,
    rng: np.random.Generator,
    mode: str = EXACT_SEQUENTIAL,
    eps3: float | None = None,
    counter: QueryCounter | None = None,
) -> tuple[np.ndarray, TrajectoryStats]:
    """Run the whole program as post-selected segments with recovery.

    The program is split into ceil(p/m) segments.  A failed segment pushes
    its undo plan and then a fresh attempt; a failed undo recurses the same
    way.  Execution stops unsuccessfully once segment computations or fix
    applications exceed ceil(budget_factor * segments / eps2).
    """
    if budget_factor < 1:
        raise ValueError(f"budget_factor must be >= 1, got {budget_factor}")
    if not (0 < eps2 < 1):
        raise ValueError(f"eps2 must lie in (0, 1), got {eps2}")
    if eps3 is None:
        eps3 = eps2
    theta = prog.theta
    m = choose_m(theta)
    k = choose_k(prog.total_time, eps2, eps3, m, theta)
    plans = segment_plans(prog, m, k)
    budget = math.ceil(budget_factor * len(plans) / eps2)
    if counter is None:
        counter = QueryCounter()

    psi = np.asarray(psi0, dtype=complex)
    pending: list[tuple[SegmentPlan, int]] = [(pl, 0) for pl in reversed(plans)]
    computations = 0
    fixes = 0
    max_depth = 0
    succeeded = True
    while pending:
        plan, depth = pending.pop()
        outcomes, psi, _ = run_segment(psi, x, plan, mode, rng, counter)
        computations += 1
        fixes += plan.n_fixes
        max_depth = max(max_depth, depth)
        record = error_record(plan, outcomes)
        if record is not None:
            pending.append((plan, depth))
            pending.append((undo_plan(plan, record), depth + 1))
        if computations > budget or fixes > budget:
            succeeded = False
            break
    stats = TrajectoryStats(
        full_queries=counter.full_queries,
        segment_computations=computations,
        error_fixes=fixes,
        succeeded=succeeded,
        max_recursion_depth=max_depth,
    )
    return psi, stats


@dataclass(frozen=True)
class WalkSummary:
    """Monte Carlo walk statistics, normalized per original segment."""

    trials: int
    segments: int
    mean_computations: float
    se_computations: float
    mean_fixes: float
    se_fixes: float
    success_rate: float
    se_success_rate: float
    budget_failure_rate: float
    se_budget_failure_rate: float


def estimate_walk_stats(
    prog: FractionalProgram,
    x: OracleInstance,
    trials: int,
    seed: int,
    eps2: float = 0.05,
    budget_factor: float = 2.0,
    mode: str = EXACT_SEQUENTIAL,
) -> WalkSummary:
    """Estimate per-segment walk costs over independent trajectories.

    Per-computation success rate is derived from successful trajectories,
    where failures = (computations - segments) / 2 exactly.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    n = prog.n_qubits
    psi0 = np.zeros(1 << n, dtype=complex)
    psi0[0] = 1.0
    m = choose_m(prog.theta)
    segments = math.ceil(prog.p / m)

    comps = np.empty(trials)
    fixes = np.empty(trials)
    failed_budget = np.empty(trials)
    ok_comp_total = 0
    ok_failure_total = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        _, stats = run_with_recovery(
            psi0, x, prog, eps2, budget_factor, rng, mode=mode
        )
        comps[t] = stats.segment_computations
        fixes[t] = stats.error_fixes
        failed_budget[t] = 0.0 if stats.succeeded else 1.0
        if stats.succeeded:
            ok_comp_total += stats.segment_computations
            ok_failure_total += (stats.segment_computations - segments) // 2

    def _mean_se(a: np.ndarray) -> tuple[float, float]:
        mean = float(np.mean(a))
        if trials < 2:
            return mean, 0.0
        return mean, float(np.std(a, ddof=1) / math.sqrt(trials))

    mean_c, se_c = _mean_se(comps / segments)
    mean_f, se_f = _mean_se(fixes / segments)
    rate_b, se_b = _mean_se(failed_budget)
    if ok_comp_total > 0:
        rate_s = 1.0 - ok_failure_total / ok_comp_total
        se_s = math.sqrt(max(rate_s * (1.0 - rate_s), 1e-12) / ok_comp_total)
    else:
        rate_s, se_s = 0.0, 0.0
    return WalkSummary(
        trials=trials,
        segments=segments,
        mean_computations=mean_c,
        se_computations=se_c,
        mean_fixes=mean_f,
        se_fixes=se_f,
        success_rate=rate_s,
        se_success_rate=se_s,
        budget_failure_rate=rate_b,
        se_budget_failure_rate=se_b,
    )


T = TypeVar("T")


def amplify(
    run: Callable[[], tuple[T, bool]], eps2: float, eps2_prime: float
) -> tuple[T | None, int]:
    """Repeat an attempt until success or the amplification quota runs out.

    With per-attempt success probability at least 1 - eps2, the quota
    ceil(log(1/eps2')/log(1/eps2)) attempts brings the overall failure
    probability below eps2'.  Returns (first success or None, attempts).
    """
    if not (0 < eps2 < 1) or not (0 < eps2_prime < 1):
        raise ValueError("eps2 and eps2_prime must lie in (0, 1)")
    max_attempts = max(1, math.ceil(math.log(1 / eps2_prime) / math.log(1 / eps2)))
    for attempt in range(1, max_attempts + 1):
        result, ok = run()
        if ok:
            return result, attempt
    return None, max_attempts
