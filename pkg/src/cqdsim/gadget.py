"""Single-query probabilistic simulation of a fractional query.

One ancilla (the most significant qubit of the joint register) is prepared
by R1, used as the control of a single full query, rotated by R2, and
measured.  Outcome 0 leaves the system acted on by the fractional query at
angle +theta (forward) or -theta (reverse); outcome 1 leaves a known
quarter-turn error behind.  The global phases e^{+-i*theta/2} on success and
e^{-+i*pi/4} on failure are kept attached to the state so that inverse
products cancel exactly.

Also here: the deterministic two-query circuit that realizes any fractional
query exactly by conjugating an ancilla phase rotation with two controlled
full queries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import apply_to_targets
from .oracle import OracleInstance, QueryCounter, controlled_full_query_diag

FORWARD = "forward"
REVERSE = "reverse"

FRAC_PLUS = "frac_plus"
FRAC_MINUS = "frac_minus"
ERR_MINUS_HALF_PI = "err_minus_half_pi"
ERR_PLUS_HALF_PI = "err_plus_half_pi"


@dataclass(frozen=True)
class GadgetOutcome:
    """One simulated gadget shot: measured bit, the branch operator label,
    and the probability of the branch that was taken."""

    measured_bit: int
    applied: str
    probability: float


def _check_angle(theta: float) -> None:
    if not (0 < theta <= np.pi):
        raise ValueError(f"gadget angle must lie in (0, pi], got {theta}")


def _check_direction(direction: str) -> None:
    if direction not in (FORWARD, REVERSE):
        raise ValueError(f"direction must be {FORWARD!r} or {REVERSE!r}, got {direction!r}")


def gadget_success_probability(theta: float) -> float:
    """1/v**2 with v = cos(theta/2) + sin(theta/2); independent of the state."""
    _check_angle(theta)
    v = np.cos(theta / 2) + np.sin(theta / 2)
    return float(1.0 / v**2)


def r1_matrix(theta: float) -> np.ndarray:
    """Control preparation: |0> -> (sqrt(cos t/2)|0> + i sqrt(sin t/2)|1>)/sqrt(v).

    Only the first column is pinned by the construction; the second is the
    orthonormal completion with a real nonnegative leading entry, fixed so
    matrices are reproducible bit for bit.
    """
    _check_angle(theta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    v = c + s
    sv = np.sqrt(v)
    return np.array(
        [
            [np.sqrt(c) / sv, np.sqrt(s) / sv],
            [1j * np.sqrt(s) / sv, -1j * np.sqrt(c) / sv],
        ],
        dtype=complex,
    )


def r1_conjugate_matrix(theta: float) -> np.ndarray:
    """sigma_z * R1; preparing with this runs the gadget at angle -theta."""
    m = r1_matrix(theta).copy()
    m[1, :] *= -1
    return m


def r2_matrix(theta: float) -> np.ndarray:
    """Post-query control rotation; unitary because cos t/2 + sin t/2 = v."""
    _check_angle(theta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    sv = np.sqrt(c + s)
    return np.array(
        [
            [np.sqrt(c) / sv, np.sqrt(s) / sv],
            [np.sqrt(s) / sv, -np.sqrt(c) / sv],
        ],
        dtype=complex,
    )


def ancilla_phase_rotation(theta_prime: float) -> np.ndarray:
    """exp(-i*theta_prime*(1 - sigma_x)/2): phases the |-> state only."""
    e = np.exp(-1j * theta_prime)
    return 0.5 * np.array([[1 + e, 1 - e], [1 - e, 1 + e]], dtype=complex)


def exact_fractional_circuit(
    x: OracleInstance, theta_prime: float, counter: QueryCounter | None = None
) -> np.ndarray:
    """Deterministic fractional query from two full queries.

    An ancilla in |+> controls a full query, is phased on |->, and controls a
    second full query, after which it returns to |+> exactly.  Stripping the
    ancilla leaves precisely the fractional query at angle theta_prime on the
    system.  Costs two full queries.
    """
    if not (-np.pi - 1e-12 < theta_prime <= np.pi + 1e-12):
        raise ValueError(f"theta_prime must lie in (-pi, pi], got {theta_prime}")
    dim = x.n_entries
    cq = controlled_full_query_diag(x)
    ra = np.kron(ancilla_phase_rotation(theta_prime), np.eye(dim))
    u = (cq[:, None] * ra) * cq[None, :]
    sys_op = 0.5 * (u[:dim, :dim] + u[:dim, dim:] + u[dim:, :dim] + u[dim:, dim:])
    if counter is not None:
        counter.add(2)
    return sys_op


def gadget_joint_state(
    psi: np.ndarray, x: OracleInstance, theta: float, direction: str = FORWARD
) -> np.ndarray:
    """Ancilla (x) system state just before the ancilla measurement."""
    _check_direction(direction)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (x.n_entries,):
        raise ValueError("state length does not match oracle dimension")
    prep = r1_matrix(theta) if direction == FORWARD else r1_conjugate_matrix(theta)
    joint = np.kron(np.array([1.0, 0.0], dtype=complex), psi)
    joint = apply_to_targets(joint, prep, [x.n_qubits])
    joint = controlled_full_query_diag(x) * joint
    joint = apply_to_targets(joint, r2_matrix(theta), [x.n_qubits])
    return joint


def apply_gadget(
    psi: np.ndarray,
    x: OracleInstance,
    theta: float,
    direction: str,
    rand: float,
    counter: QueryCounter | None = None,
) -> tuple[GadgetOutcome, np.ndarray]:
    """One gadget shot, branch chosen by the caller-supplied uniform variate.

    Both branch amplitudes come from the simulated circuit, so the returned
    state carries the exact branch phase.  Consumes one full query.
    """
    joint = gadget_joint_state(psi, x, theta, direction)
    dim = x.n_entries
    b0, b1 = joint[:dim], joint[dim:]
    p0 = float(np.vdot(b0, b0).real)
    p1 = float(np.vdot(b1, b1).real)
    if counter is not None:
        counter.add(1)
    if rand < p0:
        label = FRAC_PLUS if direction == FORWARD else FRAC_MINUS
        return GadgetOutcome(0, label, p0), b0 / np.sqrt(p0)
    label = ERR_MINUS_HALF_PI if direction == FORWARD else ERR_PLUS_HALF_PI
    return GadgetOutcome(1, label, p1), b1 / np.sqrt(p1)
