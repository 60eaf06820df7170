"""Uncertainty-relation evaluation, certification, and violation taxonomy.

Relations covered, with lhs/rhs conventions:

* Kennard           σ(Q)σ(P)                            vs ℏ/2
* Robertson         σ(A)σ(B)                            vs ½|⟨[A,B]⟩|
* Heisenberg        ε(Q)η(P)                            vs ℏ/2
* Ozawa             ε(Q)η(P) + ε(Q)σ(P) + σ(Q)η(P)      vs ℏ/2
* TypeI bound       ε(Q)σ(P)                            vs ℏ/2
* TypeII bound      σ(Q)η(P)                            vs ℏ/2
* Commutator identity   Im([N,D] + [N,P(0)] + [Q(0),D]) vs -ℏ

A report is satisfied iff margin >= -tolerance.  Ordering relations use
margin = lhs - rhs; the identity relation uses the signed distance
margin = -|lhs - rhs|, so the same rule reads "within tolerance".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .matrix_oracle import MatrixOperator
from .metrics import disturbance_operator, noise_operator, rms_disturbance, rms_error
from .models import MeasurementModel
from .observables import commutator_scalar, expectation_commutator, std_dev
from .states import JointState, StateVector, momentum_spread, position_spread

KENNARD_TOL = 1e-6
ROBERTSON_TOL = 1e-12
HEISENBERG_TOL = 1e-6
OZAWA_TOL = 1e-6
TYPE_BOUND_TOL = 1e-6
COMMUTATOR_TOL = 1e-12
ZERO_THRESHOLD = 1e-9


class Relation(enum.Enum):
    KENNARD = "kennard"
    ROBERTSON = "robertson"
    HEISENBERG = "heisenberg"
    OZAWA = "ozawa"
    TYPE_I = "type_i"
    TYPE_II = "type_ii"
    COMMUTATOR_IDENTITY = "commutator_identity"


class ViolationClass(enum.Enum):
    NONE = "none"
    TYPE_I = "type_i"
    TYPE_II = "type_ii"


@dataclass(frozen=True)
class InequalityReport:
    relation: Relation
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    tolerance: float

    def __post_init__(self) -> None:
        if self.satisfied != (self.margin >= -self.tolerance):
            raise ValueError("satisfied flag inconsistent with margin and tolerance")


def _bound_report(relation: Relation, lhs: float, rhs: float, tol: float) -> InequalityReport:
    margin = lhs - rhs
    return InequalityReport(relation, lhs, rhs, margin >= -tol, margin, tol)


def _identity_report(relation: Relation, lhs: float, rhs: float, tol: float) -> InequalityReport:
    margin = -abs(lhs - rhs)
    return InequalityReport(relation, lhs, rhs, margin >= -tol, margin, tol)


def check_kennard(state: StateVector, tolerance: float = KENNARD_TOL) -> InequalityReport:
    """σ(Q)σ(P) >= ℏ/2 on a single-system state."""
    lhs = position_spread(state) * momentum_spread(state)
    return _bound_report(Relation.KENNARD, lhs, 0.5 * state.grid.hbar, tolerance)


def check_robertson(
    a: MatrixOperator,
    b: MatrixOperator,
    state: np.ndarray,
    tolerance: float = ROBERTSON_TOL,
) -> InequalityReport:
    """σ(A)σ(B) >= ½|⟨[A,B]⟩| on the finite-dimensional oracle."""
    a.require_hermitian(tol=1e-10)
    b.require_hermitian(tol=1e-10)
    v = np.asarray(state, dtype=complex)
    v = v / np.linalg.norm(v)
    av = a.entries @ v
    bv = b.entries @ v
    mean_a = float(np.real(np.vdot(v, av)))
    mean_b = float(np.real(np.vdot(v, bv)))
    var_a = max(float(np.real(np.vdot(av, av))) - mean_a**2, 0.0)
    var_b = max(float(np.real(np.vdot(bv, bv))) - mean_b**2, 0.0)
    lhs = float(np.sqrt(var_a * var_b))
    comm_mean = np.vdot(av, bv) - np.vdot(bv, av)
    rhs = 0.5 * abs(comm_mean)
    return _bound_report(Relation.ROBERTSON, lhs, rhs, tolerance)


def check_heisenberg(
    model: MeasurementModel,
    state: StateVector | JointState | None = None,
    tolerance: float = HEISENBERG_TOL,
) -> InequalityReport:
    """ε(Q)η(P) >= ℏ/2; a negative verdict is a physics finding, not an error."""
    lhs = rms_error(model, state) * rms_disturbance(model, state)
    return _bound_report(Relation.HEISENBERG, lhs, 0.5 * model.hbar, tolerance)


def check_ozawa(
    model: MeasurementModel,
    state: StateVector | JointState | None = None,
    tolerance: float = OZAWA_TOL,
) -> InequalityReport:
    """The universally valid bound ε·η + ε·σ(P) + σ(Q)·η >= ℏ/2."""
    joint = model.joint_state(state)
    eps = rms_error(model, joint if model.object_arity == 2 else state)
    eta = rms_disturbance(model, joint if model.object_arity == 2 else state)
    sigma_q = std_dev(model.measured, joint)
    sigma_p = std_dev(model.momentum_in, joint)
    lhs = eps * eta + eps * sigma_p + sigma_q * eta
    return _bound_report(Relation.OZAWA, lhs, 0.5 * model.hbar, tolerance)


@dataclass(frozen=True)
class TypeBoundReports:
    """The two compensating reciprocal bounds, with the binding one flagged."""

    type_i: InequalityReport
    type_ii: InequalityReport
    applicable: ViolationClass


def check_type_bounds(
    model: MeasurementModel,
    state: StateVector | JointState | None = None,
    zero_threshold: float = ZERO_THRESHOLD,
    tolerance: float = TYPE_BOUND_TOL,
) -> TypeBoundReports:
    """Evaluate ε·σ(P) and σ(Q)·η against ℏ/2.

    The bound corresponding to the vanishing metric is flagged applicable;
    when neither metric is near zero both reports are returned but marked
    non-applicable through ``applicable = NONE``.
    """
    joint = model.joint_state(state)
    eps = rms_error(model, joint if model.object_arity == 2 else state)
    eta = rms_disturbance(model, joint if model.object_arity == 2 else state)
    sigma_q = std_dev(model.measured, joint)
    sigma_p = std_dev(model.momentum_in, joint)
    half = 0.5 * model.hbar
    report_i = _bound_report(Relation.TYPE_I, eps * sigma_p, half, tolerance)
    report_ii = _bound_report(Relation.TYPE_II, sigma_q * eta, half, tolerance)
    if eta <= zero_threshold and eps > zero_threshold:
        applicable = ViolationClass.TYPE_I
    elif eps <= zero_threshold and eta > zero_threshold:
        applicable = ViolationClass.TYPE_II
    else:
        applicable = ViolationClass.NONE
    return TypeBoundReports(report_i, report_ii, applicable)


def commutator_identity_sum(model: MeasurementModel) -> complex:
    """[N(Q), D(P)] + [N(Q), P(0)] + [Q(0), D(P)] in exact coefficient algebra."""
    n = noise_operator(model)
    d = disturbance_operator(model)
    h = model.hbar
    return (
        commutator_scalar(n, d, h)
        + commutator_scalar(n, model.momentum_in, h)
        + commutator_scalar(model.measured, d, h)
    )


def check_commutator_identity(
    model: MeasurementModel, tolerance: float = COMMUTATOR_TOL
) -> InequalityReport:
    """The commutator sum must equal -iℏ exactly in coefficient algebra.

    lhs and rhs are the imaginary parts (the real parts vanish
    structurally for first-degree rows).
    """
    total = commutator_identity_sum(model)
    return _identity_report(
        Relation.COMMUTATOR_IDENTITY, float(total.imag), -model.hbar, tolerance
    )


def commutator_identity_grid(
    model: MeasurementModel, state: StateVector | JointState | None = None
) -> complex:
    """Grid-path expectation of the commutator sum on a concrete state."""
    joint = model.joint_state(state)
    n = noise_operator(model)
    d = disturbance_operator(model)
    return (
        expectation_commutator(n, d, joint)
        + expectation_commutator(n, model.momentum_in, joint)
        + expectation_commutator(model.measured, d, joint)
    )


def check_independent_intervention(
    model: MeasurementModel, tolerance: float = COMMUTATOR_TOL
) -> tuple[bool, InequalityReport]:
    """Detect whether N(Q) and D(P) act on the apparatus factor alone.

    When they do, the cross commutators [N(Q), P(0)] and [Q(0), D(P)]
    vanish, [N, -D] = iℏ follows exactly, and the Heisenberg bound holds
    for every input and probe state.  The returned report certifies the
    [N, -D] = iℏ identity (imaginary parts; rhs = +ℏ).
    """
    n = noise_operator(model)
    d = disturbance_operator(model)
    independent = not (n.acts_on_first_factor() or d.acts_on_first_factor())
    if independent:
        h = model.hbar
        if commutator_scalar(n, model.momentum_in, h) != 0:
            raise AssertionError("[N(Q), P(0)] must vanish for independent intervention")
        if commutator_scalar(model.measured, d, h) != 0:
            raise AssertionError("[Q(0), D(P)] must vanish for independent intervention")
        lhs = float(commutator_scalar(n, -d, h).imag)
    else:
        lhs = float(commutator_scalar(n, -d, model.hbar).imag)
    report = _identity_report(
        Relation.COMMUTATOR_IDENTITY, lhs, model.hbar, tolerance
    )
    return independent, report


def classify_violation(
    epsilon: float, eta: float, zero_threshold: float = ZERO_THRESHOLD
) -> ViolationClass:
    """Uniform-violation taxonomy from the two metrics.

    Both metrics vanishing together is impossible for finitely accessible
    input states (the universal bound excludes it), so that input is
    rejected.
    """
    if epsilon < 0 or eta < 0:
        raise ValueError("metrics must be non-negative")
    eps_zero = epsilon <= zero_threshold
    eta_zero = eta <= zero_threshold
    if eps_zero and eta_zero:
        raise ValueError(
            "epsilon and eta cannot both vanish: the universal bound "
            "ε·η + ε·σ(P) + σ(Q)·η >= ℏ/2 "
            "excludes it for finitely accessible states"
        )
    if eta_zero:
        return ViolationClass.TYPE_I
    if eps_zero:
        return ViolationClass.TYPE_II
    return ViolationClass.NONE


@dataclass(frozen=True)
class DerivationLinks:
    """Margins of each Robertson-type link in the universal-bound proof.

    Links: ε·η >= ½|⟨[N,D]⟩|, ε·σ(P) >= ½|⟨[N,P(0)]⟩|,
    σ(Q)·η >= ½|⟨[Q(0),D]⟩|, and the triangle step
    ½(|⟨[N,D]⟩| + |⟨[N,P(0)]⟩| + |⟨[Q(0),D]⟩|) >= ℏ/2 up to the grid
    residual of ⟨[Q,P]⟩.
    """

    link_noise_disturbance: float
    link_noise_momentum: float
    link_position_disturbance: float
    triangle_lhs: float
    half_hbar: float


def derivation_links(
    model: MeasurementModel, state: StateVector | JointState | None = None
) -> DerivationLinks:
    joint = model.joint_state(state)
    n = noise_operator(model)
    d = disturbance_operator(model)
    eps = rms_error(model, joint if model.object_arity == 2 else state)
    eta = rms_disturbance(model, joint if model.object_arity == 2 else state)
    sigma_q = std_dev(model.measured, joint)
    sigma_p = std_dev(model.momentum_in, joint)
    c_nd = 0.5 * abs(expectation_commutator(n, d, joint)) if not (n.is_zero() or d.is_zero()) else 0.0
    c_np = 0.5 * abs(expectation_commutator(n, model.momentum_in, joint)) if not n.is_zero() else 0.0
    c_qd = 0.5 * abs(expectation_commutator(model.measured, d, joint)) if not d.is_zero() else 0.0
    return DerivationLinks(
        link_noise_disturbance=eps * eta - c_nd,
        link_noise_momentum=eps * sigma_p - c_np,
        link_position_disturbance=sigma_q * eta - c_qd,
        triangle_lhs=c_nd + c_np + c_qd,
        half_hbar=0.5 * model.hbar,
    )
