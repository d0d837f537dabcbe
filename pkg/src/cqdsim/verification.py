"""Named, seeded self-checks for every module's invariants.

Each check reports the worst measured value against its bound.  The fast
level finishes in well under a minute; the full level adds the larger
brute-force circuit equivalences and the Monte Carlo walk checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config as config_mod
from . import experiment
from .continuous import ContinuousAlgorithm, DrivingSchedule, average_norm, drive_evolve, reference_evolve
from .discretize import build_program, choose_p, run_ideal, trotter_defect
from .gadget import (
    FORWARD,
    REVERSE,
    exact_fractional_circuit,
    gadget_joint_state,
    gadget_success_probability,
    r1_conjugate_matrix,
    r1_matrix,
    r2_matrix,
)
from .numerics import (
    apply_to_targets,
    expm_neg_i_hermitian,
    fidelity,
    operator_norm,
    random_hermitian,
    random_state,
    random_unitary,
)
from .oracle import (
    OracleInstance,
    QueryCounter,
    fractional_query,
    fractional_query_diag,
    full_query,
    full_query_diag,
    query_hamiltonian,
    random_instance,
)
from .recovery import ErrorRecord, error_record, run_with_recovery, undo_plan
from .segment import (
    EXACT_SEQUENTIAL,
    SegmentPlan,
    build_rearranged,
    build_truncated,
    chi_state,
    choose_m,
    hamming_ball,
    overlap_bound,
    run_segment,
    truncate_chi,
)

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    note: str = ""


def _result(name, measured, bound, note="", larger_ok=False):
    passed = measured >= bound if larger_ok else measured <= bound
    return CheckResult(name, bool(passed), float(measured), float(bound), note)


def _phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over global phases of ||a - e^{i phi} b||."""
    c = np.trace(b.conj().T @ a)
    phase = c / abs(c) if abs(c) > 0 else 1.0
    return operator_norm(a - phase * b)


def _random_schedule(rng, dim, n_pieces, max_norm, total_time):
    durs = rng.uniform(0.3, 1.0, size=n_pieces)
    durs *= total_time / durs.sum()
    pieces = [(d, random_hermitian(dim, rng, norm=rng.uniform(0.2, max_norm))) for d in durs]
    return DrivingSchedule(tuple(pieces))


# ---------------------------------------------------------------- numerics


def check_expm_additivity():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        h = random_hermitian(8, rng)
        s, t = rng.uniform(-10, 10, size=2)
        d = operator_norm(
            expm_neg_i_hermitian(h, s) @ expm_neg_i_hermitian(h, t)
            - expm_neg_i_hermitian(h, s + t)
        )
        worst = max(worst, d)
    return _result("numerics.expm_additivity", worst, 1e-9)


def check_expm_unitarity():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(20):
        u = expm_neg_i_hermitian(random_hermitian(8, rng), rng.uniform(-10, 10))
        worst = max(worst, abs(operator_norm(u) - 1.0))
    return _result("numerics.expm_unitarity", worst, 1e-9)


def check_disjoint_targets_commute():
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(10):
        psi = random_state(4, rng)
        g1, g2 = random_unitary(2, rng), random_unitary(4, rng)
        a = apply_to_targets(apply_to_targets(psi, g1, [0]), g2, [3, 1])
        b = apply_to_targets(apply_to_targets(psi, g2, [3, 1]), g1, [0])
        worst = max(worst, float(np.max(np.abs(a - b))))
    return _result("numerics.disjoint_targets_commute", worst, 1e-12)


# ------------------------------------------------------------------ oracle


def check_fractional_additivity():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(25):
        x = random_instance(2, rng)
        t1 = rng.uniform(-1.5, 1.5)
        t2 = rng.uniform(-1.5, 1.5)
        if not (-np.pi < t1 + t2 <= np.pi):
            continue
        d = operator_norm(
            fractional_query(x, t1) @ fractional_query(x, t2) - fractional_query(x, t1 + t2)
        )
        worst = max(worst, d)
    return _result("oracle.fractional_additivity", worst, 1e-12)


def check_fractional_adjoint():
    rng = np.random.default_rng(22)
    worst = 0.0
    for _ in range(25):
        x = random_instance(2, rng)
        t = rng.uniform(-3.1, 3.1)
        worst = max(
            worst,
            operator_norm(fractional_query(x, t).conj().T - fractional_query(x, -t)),
        )
    return _result("oracle.fractional_adjoint", worst, 1e-14)


def check_oracle_unitary_diagonal():
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(10):
        x = random_instance(3, rng)
        for op in (full_query(x), fractional_query(x, rng.uniform(-3, 3))):
            worst = max(worst, operator_norm(op.conj().T @ op - np.eye(op.shape[0])))
            worst = max(worst, float(np.max(np.abs(op - np.diag(np.diagonal(op))))))
        h = query_hamiltonian(x)
        worst = max(
            worst, float(np.max(np.abs(expm_neg_i_hermitian(h, np.pi) - full_query(x))))
        )
    return _result("oracle.unitary_diagonal", worst, 1e-12)


# -------------------------------------------------------------- continuous


def check_drive_composition():
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(5):
        s = _random_schedule(rng, 4, 3, 2.0, 2.0)
        ta, tb, tc = sorted(rng.uniform(0, s.total_time, size=3))
        d = operator_norm(
            drive_evolve(s, tb, tc) @ drive_evolve(s, ta, tb) - drive_evolve(s, ta, tc)
        )
        worst = max(worst, d)
    return _result("continuous.drive_composition", worst, 1e-10)


def check_reference_norm():
    rng = np.random.default_rng(32)
    worst = 0.0
    for _ in range(5):
        s = _random_schedule(rng, 4, 2, 2.0, 1.5)
        alg = ContinuousAlgorithm(s, random_state(2, rng))
        psi = reference_evolve(alg, random_instance(2, rng))
        worst = max(worst, abs(float(np.linalg.norm(psi)) - 1.0))
    return _result("continuous.reference_norm", worst, 1e-10)


def check_average_norm_split():
    rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(5):
        s = _random_schedule(rng, 4, 2, 2.0, 1.5)
        (d0, g0), (d1, g1) = s.pieces
        split = DrivingSchedule(((d0 / 2, g0), (d0 / 2, g0), (d1, g1)))
        worst = max(worst, abs(average_norm(s) - average_norm(split)))
    return _result("continuous.average_norm_split", worst, 1e-12)


# -------------------------------------------------------------- discretize


def check_trotter_bound():
    rng = np.random.default_rng(41)
    worst = 0.0
    for _ in range(5):
        T = rng.uniform(0.5, 2.0)
        s = _random_schedule(rng, 4, 2, 2.0, T)
        alg = ContinuousAlgorithm(s, random_state(2, rng))
        x = random_instance(2, rng)
        r = average_norm(s)
        p = choose_p(T, r, 0.04)
        prog = build_program(alg, p)
        defect = trotter_defect(alg, prog, x)
        worst = max(worst, defect - 2 * T * T * r / p)
    return _result("discretize.trotter_bound", worst, 1e-9, note="defect minus 2T^2r/p")


def check_defect_shrinks_with_p():
    rng = np.random.default_rng(42)
    s = _random_schedule(rng, 4, 2, 2.0, 1.0)
    alg = ContinuousAlgorithm(s, random_state(2, rng))
    x = random_instance(2, rng)
    d1 = trotter_defect(alg, build_program(alg, 20), x)
    d2 = trotter_defect(alg, build_program(alg, 40), x)
    return _result("discretize.defect_shrinks_with_p", d2, d1 + 1e-9, note=f"p=40 vs p=20 ({d1:.3g})")


def check_run_ideal_norm():
    rng = np.random.default_rng(43)
    worst = 0.0
    for _ in range(5):
        s = _random_schedule(rng, 4, 2, 2.0, 1.0)
        alg = ContinuousAlgorithm(s, random_state(2, rng))
        prog = build_program(alg, 15)
        psi = run_ideal(prog, random_instance(2, rng), alg.initial_state)
        worst = max(worst, abs(float(np.linalg.norm(psi)) - 1.0))
    return _result("discretize.run_ideal_norm", worst, 1e-10)


# ------------------------------------------------------------------ gadget


def check_rotation_unitarity(r2_perturbation=0.0):
    rng = np.random.default_rng(51)
    worst = 0.0
    eye = np.eye(2)
    for _ in range(100):
        t = rng.uniform(1e-4, np.pi)
        for mat in (r1_matrix(t), r1_conjugate_matrix(t)):
            worst = max(worst, operator_norm(mat.conj().T @ mat - eye))
        r2 = r2_matrix(t).copy()
        r2[0, 0] += r2_perturbation
        worst = max(worst, operator_norm(r2.conj().T @ r2 - eye))
    return _result("gadget.rotation_unitarity", worst, 1e-12)


def check_joint_state_closed_form():
    rng = np.random.default_rng(52)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        x = random_instance(n, rng)
        psi = random_state(n, rng)
        t = rng.uniform(1e-3, np.pi - 1e-3)
        v = np.cos(t / 2) + np.sin(t / 2)
        fwd = gadget_joint_state(psi, x, t, FORWARD)
        expect = (1 / v) * np.concatenate(
            [
                np.exp(1j * t / 2) * fractional_query_diag(x, t) * psi,
                np.sqrt(np.sin(t)) * np.exp(-1j * np.pi / 4) * fractional_query_diag(x, -HALF_PI) * psi,
            ]
        )
        worst = max(worst, float(np.max(np.abs(fwd - expect))))
        rev = gadget_joint_state(psi, x, t, REVERSE)
        expect_r = (1 / v) * np.concatenate(
            [
                np.exp(-1j * t / 2) * fractional_query_diag(x, -t) * psi,
                np.sqrt(np.sin(t)) * np.exp(1j * np.pi / 4) * fractional_query_diag(x, HALF_PI) * psi,
            ]
        )
        worst = max(worst, float(np.max(np.abs(rev - expect_r))))
    return _result("gadget.joint_state_closed_form", worst, 1e-12)


def check_branch_probabilities():
    rng = np.random.default_rng(53)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        x = random_instance(n, rng)
        psi = random_state(n, rng)
        t = rng.uniform(1e-3, np.pi)
        joint = gadget_joint_state(psi, x, t, FORWARD)
        dim = 1 << n
        p0 = float(np.vdot(joint[:dim], joint[:dim]).real)
        p1 = float(np.vdot(joint[dim:], joint[dim:]).real)
        worst = max(worst, abs(p0 + p1 - 1.0))
        worst = max(worst, abs(p0 - gadget_success_probability(t)))
    return _result("gadget.branch_probabilities", worst, 1e-12)


def check_exact_circuit_equals_fractional():
    rng = np.random.default_rng(54)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        x = random_instance(n, rng)
        t = rng.uniform(-np.pi + 1e-6, np.pi)
        worst = max(worst, _phase_distance(exact_fractional_circuit(x, t), fractional_query(x, t)))
    return _result("gadget.exact_circuit_equals_fractional", worst, 1e-12)


def check_exact_circuit_inverse():
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(10):
        x = random_instance(2, rng)
        t = rng.uniform(0.1, np.pi - 0.1)
        prod = exact_fractional_circuit(x, t) @ exact_fractional_circuit(x, -t)
        worst = max(worst, _phase_distance(prod, np.eye(x.n_entries, dtype=complex)))
    return _result("gadget.exact_circuit_inverse", worst, 1e-12)


def check_reverse_error_adjoint():
    rng = np.random.default_rng(56)
    worst = 0.0
    for _ in range(5):
        x = random_instance(2, rng)
        worst = max(
            worst,
            operator_norm(fractional_query(x, HALF_PI) - fractional_query(x, -HALF_PI).conj().T),
        )
    return _result("gadget.reverse_error_adjoint", worst, 1e-14)


# ----------------------------------------------------------------- segment


def _naive_segment_operator(drives, x):
    """Controlled-query interleaving built directly, outside the circuit
    rearrangement code path."""
    m = len(drives)
    n = x.n_qubits
    dim = 1 << n
    big = (1 << m) * dim
    idx = np.arange(big)
    qfull = full_query_diag(x)[idx & (dim - 1)]
    op = np.eye(big, dtype=complex)
    eye_ctrl = np.eye(1 << m)
    for j, v in enumerate(drives):
        cq = np.where(((idx >> (n + j)) & 1) == 1, qfull, 1.0)
        op = np.kron(eye_ctrl, v) @ (cq[:, None] * op)
    return op


def check_rearranged_equals_naive(max_m=4):
    rng = np.random.default_rng(61)
    worst = 0.0
    for m in range(1, max_m + 1):
        x = random_instance(2, rng)
        drives = tuple(random_unitary(4, rng) for _ in range(m))
        plan = SegmentPlan(theta=0.05, drives=drives, k=m)
        worst = max(
            worst,
            operator_norm(build_rearranged(plan, x) - _naive_segment_operator(drives, x)),
        )
    return _result("segment.rearranged_equals_naive", worst, 1e-9, note=f"m<={max_m}")


def check_truncated_on_ball(max_m=4):
    rng = np.random.default_rng(62)
    worst = 0.0
    counts_ok = True
    for m in range(1, max_m + 1):
        x = random_instance(2, rng)
        dim = x.n_entries
        drives = tuple(random_unitary(4, rng) for _ in range(m))
        full_plan = SegmentPlan(theta=0.05, drives=drives, k=m)
        reference = build_rearranged(full_plan, x)
        for k in range(m + 1):
            plan = SegmentPlan(theta=0.05, drives=drives, k=k)
            counter = QueryCounter()
            trunc = build_truncated(plan, x, counter)
            counts_ok = counts_ok and counter.full_queries == k + 1
            for z in hamming_ball(m, k):
                lo = int(z) * dim
                worst = max(
                    worst,
                    operator_norm(
                        trunc[lo : lo + dim, lo : lo + dim]
                        - reference[lo : lo + dim, lo : lo + dim]
                    ),
                )
    note = "query counts k+1" if counts_ok else "QUERY COUNT MISMATCH"
    result = _result("segment.truncated_on_ball", worst, 1e-9, note=note)
    if not counts_ok:
        result = CheckResult(result.name, False, result.measured, result.bound, note)
    return result


def check_overlap_matches_projection():
    worst = 0.0
    for m in (1, 2, 5, 10):
        for theta in (0.0125, 0.05, 0.1, 0.25):
            chi = chi_state(m, theta)
            for k in range(m + 1):
                proj = truncate_chi(chi, k)
                got = abs(np.vdot(proj.amplitudes, chi.amplitudes)) ** 2
                worst = max(worst, abs(got - overlap_bound(m, theta, k)))
    return _result("segment.overlap_matches_projection", worst, 1e-12)


def check_success_probability_floor():
    worst = 1.0
    for theta in (0.25, 0.1, 0.05, 0.01, 0.002):
        m = choose_m(theta)
        worst = min(worst, gadget_success_probability(theta) ** m)
    return _result("segment.success_probability_floor", worst, 0.75, larger_ok=True, note="(1/v^2)^m over m*theta<=1/4 grid")


def check_error_count_binomial():
    rng = np.random.default_rng(63)
    x = random_instance(2, rng)
    theta = 0.1
    m = choose_m(theta)
    drives = tuple(random_unitary(4, rng) for _ in range(m))
    plan = SegmentPlan(theta=theta, drives=drives, k=m)
    psi0 = random_state(2, rng)
    trials = 4000
    counts = np.empty(trials)
    for t in range(trials):
        outcomes, _, _ = run_segment(psi0, x, plan, EXACT_SEQUENTIAL, np.random.default_rng([630, t]))
        counts[t] = sum(outcomes)
    pf = 1.0 - gadget_success_probability(theta)
    se_mean = math.sqrt(m * pf * (1 - pf) / trials)
    dev = abs(float(np.mean(counts)) - m * pf)
    return _result(
        "segment.error_count_binomial",
        dev,
        4 * se_mean,
        note=f"mean errors vs Binomial({m},{pf:.4f}), mean<=1/4: {np.mean(counts):.4f}",
    )


# ---------------------------------------------------------------- recovery


def _ideal_realized(plan, x, outcomes):
    """Dense operator a segment run applies for the given gadget outcomes,
    with every gadget phase kept."""
    dim = x.n_entries
    op = np.eye(dim, dtype=complex)
    sign = 1.0 if plan.direction == FORWARD else -1.0
    for j in range(plan.m):
        if plan.direction == FORWARD:
            steps = (("q", j), ("d", j))
        else:
            steps = (("d", j), ("q", j))
        for kind, jj in steps:
            if kind == "d":
                op = plan.drives[jj] @ op
            elif plan.fix_angles[jj] is not None:
                op = exact_fractional_circuit(x, plan.fix_angles[jj]) @ op
            elif outcomes[jj] == 0:
                step = np.exp(1j * sign * plan.theta / 2) * np.diag(
                    fractional_query_diag(x, sign * plan.theta)
                )
                op = step @ op
            else:
                step = np.exp(-1j * sign * np.pi / 4) * np.diag(
                    fractional_query_diag(x, -sign * HALF_PI)
                )
                op = step @ op
    return op


def check_undo_inverts():
    rng = np.random.default_rng(71)
    worst = 0.0
    x = random_instance(2, rng)
    eye = np.eye(4, dtype=complex)
    for n_err in (0, 1, 2):
        drives = tuple(random_unitary(4, rng) for _ in range(4))
        plan = SegmentPlan(theta=0.06, drives=drives, k=4)
        outcomes = [0, 0, 0, 0]
        for j in range(n_err):
            outcomes[1 + 2 * j] = 1
        failed = _ideal_realized(plan, x, tuple(outcomes))
        record = error_record(plan, tuple(outcomes)) or ErrorRecord((), ())
        undo = undo_plan(plan, record)
        undone = _ideal_realized(undo, x, (0,) * undo.m)
        worst = max(worst, _phase_distance(undone @ failed, eye))
    return _result("recovery.undo_inverts", worst, 1e-10)


def check_exact_mode_lossless():
    rng = np.random.default_rng(72)
    worst = 0.0
    for i in range(5):
        s = _random_schedule(rng, 4, 2, 1.5, 1.0)
        alg = ContinuousAlgorithm(s, random_state(2, rng))
        x = random_instance(2, rng)
        p = choose_p(1.0, average_norm(s), 0.04)
        prog = build_program(alg, max(p, 4))
        ideal = run_ideal(prog, x, alg.initial_state)
        psi, stats = run_with_recovery(
            alg.initial_state, x, prog, 0.05, 4.0, np.random.default_rng([720, i])
        )
        if stats.succeeded:
            worst = max(worst, 1.0 - fidelity(psi, ideal))
    return _result("recovery.exact_mode_lossless", worst, 1e-9, note="1 - fidelity vs ideal program")


def check_walk_bookkeeping():
    rng = np.random.default_rng(73)
    s = _random_schedule(rng, 4, 1, 1.0, 1.0)
    alg = ContinuousAlgorithm(s, random_state(2, rng))
    x = random_instance(2, rng)
    prog = build_program(alg, 10)
    segments = math.ceil(prog.p / choose_m(prog.theta))
    bad = 0
    for i in range(50):
        _, stats = run_with_recovery(
            alg.initial_state, x, prog, 0.05, 4.0, np.random.default_rng([730, i])
        )
        if stats.succeeded:
            net = stats.segment_computations - segments
            if net < 0 or net % 2 != 0:
                bad += 1
    return _result("recovery.walk_bookkeeping", bad, 0, note="successful walks with non-integral failure count")


def check_budget_markov():
    rng = np.random.default_rng(74)
    s = _random_schedule(rng, 4, 1, 1.0, 1.0)
    alg = ContinuousAlgorithm(s, random_state(2, rng))
    x = random_instance(2, rng)
    prog = build_program(alg, 10)
    eps2 = 0.05
    trials = 400
    fails = 0
    for i in range(trials):
        _, stats = run_with_recovery(
            alg.initial_state, x, prog, eps2, 2.0, np.random.default_rng([740, i])
        )
        fails += 0 if stats.succeeded else 1
    rate = fails / trials
    se = math.sqrt(max(rate * (1 - rate), 1e-9) / trials)
    return _result("recovery.budget_markov", rate, eps2 + 3 * se)


# --------------------------------------------------------------------- cli


def _tiny_config():
    return config_mod.parse_config(
        {
            "n_qubits": 1,
            "oracle": {"bits": [0, 1]},
            "schedule": [
                {"duration": 1.0, "hamiltonian": [[[0.4, 0], [0.2, -0.1]], [[0.2, 0.1], [-0.3, 0]]]}
            ],
            "epsilon": 0.09,
            "trials": 12,
            "seed": 7,
            "mode": "truncated",
        }
    )


def check_deterministic_outputs():
    cfg = _tiny_config()
    a = experiment.simulate(cfg)
    b = experiment.simulate(cfg)
    same = experiment.report_json_text(a) == experiment.report_json_text(b) and (
        experiment.trials_csv_text(a) == experiment.trials_csv_text(b)
    )
    return _result("cli.deterministic_outputs", 0.0 if same else 1.0, 0.0)


def check_aggregates_recomputable():
    cfg = _tiny_config()
    report = experiment.simulate(cfg)
    csv_rows = experiment.trials_csv_text(report).strip().splitlines()[1:]
    queries = [float(line.split(",")[2]) for line in csv_rows]
    agg = report.aggregate()
    dev = abs(agg["mean_full_queries"] - float(np.mean(queries)))
    return _result("cli.aggregates_recomputable", dev, 1e-12)


FAST_CHECKS = (
    check_expm_additivity,
    check_expm_unitarity,
    check_disjoint_targets_commute,
    check_fractional_additivity,
    check_fractional_adjoint,
    check_oracle_unitary_diagonal,
    check_drive_composition,
    check_reference_norm,
    check_average_norm_split,
    check_trotter_bound,
    check_defect_shrinks_with_p,
    check_run_ideal_norm,
    check_rotation_unitarity,
    check_joint_state_closed_form,
    check_branch_probabilities,
    check_exact_circuit_equals_fractional,
    check_exact_circuit_inverse,
    check_reverse_error_adjoint,
    check_rearranged_equals_naive,
    check_truncated_on_ball,
    check_overlap_matches_projection,
    check_success_probability_floor,
    check_undo_inverts,
    check_exact_mode_lossless,
    check_walk_bookkeeping,
    check_aggregates_recomputable,
)

FULL_ONLY_CHECKS = (
    lambda: check_rearranged_equals_naive(max_m=6),
    lambda: check_truncated_on_ball(max_m=6),
    check_error_count_binomial,
    check_budget_markov,
    check_deterministic_outputs,
)


def run_checks(level: str = "fast", r2_perturbation: float = 0.0) -> list[CheckResult]:
    """Run the invariant suite; the perturbation knob exists for fault-injection
    tests and feeds straight into the R2 unitarity check."""
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    results = []
    for fn in FAST_CHECKS:
        if fn is check_rotation_unitarity:
            results.append(fn(r2_perturbation))
        else:
            results.append(fn())
    if level == "full":
        for fn in FULL_ONLY_CHECKS:
            results.append(fn())
    return results
