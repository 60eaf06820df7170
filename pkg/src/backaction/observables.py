"""First-degree polynomials in the canonical quadruple (Q, P, Q₀, P₀).

A LinearObservable represents

    c_q·Q⊗I + c_p·P⊗I + c_q0·I⊗Q₀ + c_p0·I⊗P₀ + c_const·I,

which is Hermitian by construction for real coefficients.  Commutators of
two such observables are exact scalars,

    [A, B] = iℏ (c_q c_p' - c_p c_q' + c_q0 c_p0' - c_p0 c_q0'),

computed in coefficient algebra with no grid involved.  Grid realizations
apply position terms diagonally and momentum terms pseudospectrally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, SlotMismatchError
from .states import OBJECT_PROBE, JointState

IMAG_RESIDUE_TOL = 1e-10
VARIANCE_CLAMP = 1e-10
PATH_AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class LinearObservable:
    """Hermitian first-degree polynomial in (Q, P, Q₀, P₀) on two tensor slots."""

    c_q: float = 0.0
    c_p: float = 0.0
    c_q0: float = 0.0
    c_p0: float = 0.0
    c_const: float = 0.0
    slots: tuple[str, str] = OBJECT_PROBE

    def coefficients(self) -> np.ndarray:
        """Coefficient vector (c_q, c_p, c_q0, c_p0)."""
        return np.array([self.c_q, self.c_p, self.c_q0, self.c_p0])

    def is_zero(self) -> bool:
        return (
            self.c_q == self.c_p == self.c_q0 == self.c_p0 == self.c_const == 0.0
        )

    def acts_on_first_factor(self) -> bool:
        return self.c_q != 0.0 or self.c_p != 0.0

    def acts_on_second_factor(self) -> bool:
        return self.c_q0 != 0.0 or self.c_p0 != 0.0

    def __add__(self, other: "LinearObservable") -> "LinearObservable":
        self._check_slots(other)
        return LinearObservable(
            self.c_q + other.c_q,
            self.c_p + other.c_p,
            self.c_q0 + other.c_q0,
            self.c_p0 + other.c_p0,
            self.c_const + other.c_const,
            self.slots,
        )

    def __sub__(self, other: "LinearObservable") -> "LinearObservable":
        return self + (-other)

    def __neg__(self) -> "LinearObservable":
        return self * (-1.0)

    def __mul__(self, scalar: float) -> "LinearObservable":
        s = float(scalar)
        return LinearObservable(
            self.c_q * s, self.c_p * s, self.c_q0 * s, self.c_p0 * s,
            self.c_const * s, self.slots,
        )

    __rmul__ = __mul__

    def _check_slots(self, other: "LinearObservable") -> None:
        if self.slots != other.slots:
            raise SlotMismatchError(f"slot mismatch: {self.slots} vs {other.slots}")


def q_op(slots: tuple[str, str] = OBJECT_PROBE) -> LinearObservable:
    return LinearObservable(c_q=1.0, slots=slots)


def p_op(slots: tuple[str, str] = OBJECT_PROBE) -> LinearObservable:
    return LinearObservable(c_p=1.0, slots=slots)


def q0_op(slots: tuple[str, str] = OBJECT_PROBE) -> LinearObservable:
    return LinearObservable(c_q0=1.0, slots=slots)


def p0_op(slots: tuple[str, str] = OBJECT_PROBE) -> LinearObservable:
    return LinearObservable(c_p0=1.0, slots=slots)


def const_op(value: float, slots: tuple[str, str] = OBJECT_PROBE) -> LinearObservable:
    return LinearObservable(c_const=value, slots=slots)


def commutator_scalar(
    a: LinearObservable, b: LinearObservable, hbar: float = 1.0
) -> complex:
    """Exact commutator [a, b] as the scalar iℏ·ω(a, b); no grid involved."""
    a._check_slots(b)
    omega = (
        a.c_q * b.c_p - a.c_p * b.c_q + a.c_q0 * b.c_p0 - a.c_p0 * b.c_q0
    )
    return 1j * hbar * omega


def apply_linear(obs: LinearObservable, state: JointState) -> np.ndarray:
    """Amplitudes of (obs Ψ); generally unnormalized.

    Position terms multiply diagonally; momentum terms act through the
    transform on the corresponding axis.
    """
    if obs.slots != state.labels:
        raise SlotMismatchError(
            f"observable slots {obs.slots} do not match state factors {state.labels}"
        )
    psi = state.amplitudes
    out = np.zeros_like(psi)
    if obs.c_q != 0.0:
        out += obs.c_q * state.grid_a.positions[:, None] * psi
    if obs.c_q0 != 0.0:
        out += obs.c_q0 * state.grid_b.positions[None, :] * psi
    if obs.c_p != 0.0:
        out += obs.c_p * np.fft.ifft(
            state.grid_a.fft_momenta[:, None] * np.fft.fft(psi, axis=0), axis=0
        )
    if obs.c_p0 != 0.0:
        out += obs.c_p0 * np.fft.ifft(
            state.grid_b.fft_momenta[None, :] * np.fft.fft(psi, axis=1), axis=1
        )
    if obs.c_const != 0.0:
        out += obs.c_const * psi
    return out


def expectation(obs: LinearObservable, state: JointState) -> float:
    """⟨Ψ| obs |Ψ⟩, validated to be real within the Hermiticity residue."""
    value = np.vdot(state.amplitudes, apply_linear(obs, state)) * state.measure()
    if abs(value.imag) > IMAG_RESIDUE_TOL:
        raise ConsistencyError(
            f"expectation of Hermitian observable has imaginary residue {value.imag!r}"
        )
    return float(value.real)


def std_dev(obs: LinearObservable, state: JointState) -> float:
    """σ(obs) = (⟨obs²⟩ - ⟨obs⟩²)^{1/2}, cross-checked against ‖obsΨ - ⟨obs⟩Ψ‖.

    The two paths must agree within 1e-8; variances in [-1e-10, 0) are
    clamped to zero, anything more negative is an internal failure.
    """
    applied = apply_linear(obs, state)
    w = state.measure()
    mean_c = np.vdot(state.amplitudes, applied) * w
    if abs(mean_c.imag) > IMAG_RESIDUE_TOL:
        raise ConsistencyError(
            f"expectation of Hermitian observable has imaginary residue {mean_c.imag!r}"
        )
    mean = mean_c.real
    second = float(np.real(np.vdot(applied, applied)) * w)
    variance = second - mean**2
    if variance < -VARIANCE_CLAMP:
        raise ConsistencyError(f"variance {variance!r} below -{VARIANCE_CLAMP:g}")
    moment_path = float(np.sqrt(max(variance, 0.0)))
    centered = applied - mean * state.amplitudes
    geometric_path = float(np.sqrt(np.real(np.vdot(centered, centered)) * w))
    if abs(moment_path - geometric_path) > PATH_AGREEMENT_TOL:
        raise ConsistencyError(
            f"std_dev paths disagree: moment {moment_path!r} vs geometric {geometric_path!r}"
        )
    return moment_path


def expectation_commutator(
    a: LinearObservable, b: LinearObservable, state: JointState
) -> complex:
    """Grid-path ⟨[a, b]⟩ = 2i·Im⟨aΨ, bΨ⟩ (exact for Hermitian a, b)."""
    fa = apply_linear(a, state)
    fb = apply_linear(b, state)
    return 2j * float(np.imag(np.vdot(fa, fb))) * state.measure()
