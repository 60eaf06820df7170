"""Normalized wavefunctions on one grid or a tensor product of two grids.

States carry the quadrature convention Σ|ψ|²Δq = 1.  All state objects are
immutable value types: amplitude arrays are copied on construction and
marked read-only, so any number of operations may share them concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import LocalizationError
from .grid import GridSpec

NORM_TOL = 1e-12
MARGINAL_TOL = 1e-10

OBJECT_PROBE = ("object", "probe")
PARTICLE_PAIR = ("particle1", "particle2")


def _prepare(amplitudes: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    a = np.array(amplitudes, dtype=complex, copy=True)
    if a.shape != shape:
        raise ValueError(f"amplitudes shape {a.shape} does not match grid shape {shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """A normalized wavefunction ψ on a single grid."""

    grid: GridSpec
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "amplitudes", _prepare(self.amplitudes, (self.grid.n_points,))
        )
        if abs(self.norm_squared() - 1.0) > NORM_TOL:
            raise ValueError(
                f"state not normalized: Σ|ψ|²Δq = {self.norm_squared()!r}"
            )

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.spacing)

    def position_density(self) -> np.ndarray:
        """|ψ(q)|², normalized so that Σ ρ Δq = 1."""
        return np.abs(self.amplitudes) ** 2

    def momentum_density(self) -> np.ndarray:
        """|ψ̃(p)|² on the FFT-ordered momentum grid, Σ ρ̃ Δp = 1."""
        tilde = np.fft.fft(self.amplitudes)
        dens = np.abs(tilde) ** 2
        return dens * self.grid.spacing**2 / (2.0 * np.pi * self.grid.hbar)


@dataclass(frozen=True, eq=False)
class JointState:
    """A normalized wavefunction Ψ(q_a, q_b) on a tensor product of two grids.

    Amplitudes have shape (n_a, n_b).  ``labels`` names the two tensor
    factors — ("object", "probe") for single-object measurement models,
    ("particle1", "particle2") for two-particle objects.
    """

    grid_a: GridSpec
    grid_b: GridSpec
    amplitudes: np.ndarray
    labels: tuple[str, str] = OBJECT_PROBE

    def __post_init__(self) -> None:
        if self.grid_a.hbar != self.grid_b.hbar:
            raise ValueError("tensor factors must share the same hbar")
        object.__setattr__(
            self,
            "amplitudes",
            _prepare(self.amplitudes, (self.grid_a.n_points, self.grid_b.n_points)),
        )
        if abs(self.norm_squared() - 1.0) > NORM_TOL:
            raise ValueError(
                f"joint state not normalized: ‖Ψ‖² = {self.norm_squared()!r}"
            )
        for axis in (0, 1):
            total = float(np.sum(self.marginal_density(axis)) * self._spacing(axis))
            if abs(total - 1.0) > MARGINAL_TOL:
                raise ValueError(f"marginal on axis {axis} sums to {total!r}, not 1")

    @property
    def hbar(self) -> float:
        return self.grid_a.hbar

    def _spacing(self, axis: int) -> float:
        return (self.grid_a if axis == 0 else self.grid_b).spacing

    def measure(self) -> float:
        """The 2D quadrature weight Δq_a Δq_b."""
        return self.grid_a.spacing * self.grid_b.spacing

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.measure())

    def marginal_density(self, axis: int) -> np.ndarray:
        """Reduced probability density for one factor (axis 0 = a, 1 = b)."""
        other = 1 - axis
        dens = np.sum(np.abs(self.amplitudes) ** 2, axis=other)
        return dens * self._spacing(other)


def gaussian_state(
    grid: GridSpec, mean_q: float, mean_p: float, sigma_q: float
) -> StateVector:
    """Minimum-uncertainty Gaussian wave packet.

    Produces ⟨Q⟩ = mean_q, ⟨P⟩ = mean_p, σ(Q) = sigma_q and
    σ(P) = ℏ/(2 sigma_q).  Raises LocalizationError when the packet is
    under-resolved or too close to a grid edge.
    """
    grid.check_localization(mean_q, sigma_q, mean_p)
    q = grid.positions
    psi = np.exp(
        -((q - mean_q) ** 2) / (4.0 * sigma_q**2)
        + 1j * mean_p * (q - mean_q) / grid.hbar
    )
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.spacing)
    return StateVector(grid, psi)


def superposition(states: list[StateVector], weights: list[complex]) -> StateVector:
    """Normalized complex-weighted superposition of states on one grid."""
    if not states or len(states) != len(weights):
        raise ValueError("need equally many states and weights")
    grid = states[0].grid
    if any(s.grid != grid for s in states):
        raise ValueError("superposed states must share one grid")
    acc = np.zeros(grid.n_points, dtype=complex)
    for s, w in zip(states, weights):
        acc += w * s.amplitudes
    nrm = np.sqrt(np.sum(np.abs(acc) ** 2) * grid.spacing)
    if nrm < 1e-12:
        raise ValueError("superposition has vanishing norm")
    return StateVector(grid, acc / nrm)


def momentum_eigenstate_approx(grid: GridSpec, momentum_width: float) -> StateVector:
    """Near-eigenstate of P with eigenvalue 0: a Gaussian of σ(P) = momentum_width."""
    if momentum_width <= 0:
        raise ValueError("momentum_width must be positive")
    return gaussian_state(grid, 0.0, 0.0, 0.5 * grid.hbar / momentum_width)


def tensor(
    a: StateVector, b: StateVector, labels: tuple[str, str] = OBJECT_PROBE
) -> JointState:
    """Product state a ⊗ b."""
    return JointState(a.grid, b.grid, np.outer(a.amplitudes, b.amplitudes), labels)


def correlated_gaussian_pair(
    grid_1: GridSpec,
    grid_2: GridSpec,
    relative_sigma: float,
    cm_sigma: float,
    mean_q: float = 0.0,
    mean_p: float = 0.0,
) -> JointState:
    """Two-particle Gaussian with tunable relative-coordinate spread.

    The wavefunction factorizes in the relative coordinate r = q₁ - q₂
    (Gaussian of standard deviation ``relative_sigma``, so that
    ⟨(Q₁-Q₂)²⟩ = relative_sigma²) and the center of mass c = (q₁+q₂)/2
    (Gaussian of standard deviation ``cm_sigma`` centered at ``mean_q``
    and boosted to total momentum 2·``mean_p``).
    """
    if relative_sigma <= 0 or cm_sigma <= 0:
        raise ValueError("relative_sigma and cm_sigma must be positive")
    if grid_1.hbar != grid_2.hbar:
        raise ValueError("particle grids must share the same hbar")
    # Per-particle spread; both particles must individually fit their grids.
    sigma_single = np.sqrt(cm_sigma**2 + 0.25 * relative_sigma**2)
    for g in (grid_1, grid_2):
        if relative_sigma < 4.0 * g.spacing:
            raise LocalizationError(
                f"relative_sigma={relative_sigma:g} under-resolved: requires at "
                f"least 4 grid spacings ({4.0 * g.spacing:g})"
            )
        g.check_localization(mean_q, sigma_single, mean_p)
    q1 = grid_1.positions[:, None]
    q2 = grid_2.positions[None, :]
    r = q1 - q2
    c = 0.5 * (q1 + q2) - mean_q
    hbar = grid_1.hbar
    psi = np.exp(
        -(r**2) / (4.0 * relative_sigma**2)
        - (c**2) / (4.0 * cm_sigma**2)
        + 2j * mean_p * c / hbar
    )
    nrm = np.sqrt(np.sum(np.abs(psi) ** 2) * grid_1.spacing * grid_2.spacing)
    return JointState(grid_1, grid_2, psi / nrm, PARTICLE_PAIR)


# ---------------------------------------------------------------------------
# Single-state moments (momentum side realized by the transform convention).


def _momentum_apply(state: StateVector) -> np.ndarray:
    return np.fft.ifft(state.grid.fft_momenta * np.fft.fft(state.amplitudes))


def mean_position(state: StateVector) -> float:
    return float(np.sum(state.grid.positions * state.position_density()) * state.grid.spacing)


def position_spread(state: StateVector) -> float:
    q = state.grid.positions
    dens = state.position_density()
    m = np.sum(q * dens) * state.grid.spacing
    m2 = np.sum(q**2 * dens) * state.grid.spacing
    return float(np.sqrt(max(m2 - m**2, 0.0)))


def mean_momentum(state: StateVector) -> float:
    pv = _momentum_apply(state)
    return float(np.real(np.vdot(state.amplitudes, pv)) * state.grid.spacing)


def momentum_spread(state: StateVector) -> float:
    pv = _momentum_apply(state)
    dx = state.grid.spacing
    m = np.real(np.vdot(state.amplitudes, pv)) * dx
    m2 = np.real(np.vdot(pv, pv)) * dx
    return float(np.sqrt(max(m2 - m**2, 0.0)))


# ---------------------------------------------------------------------------
# Debug dumps.


def state_to_csv(state: StateVector, stream: IO[str]) -> None:
    """Write columns position, re, im."""
    writer = csv.writer(stream)
    writer.writerow(["position", "re", "im"])
    for q, a in zip(state.grid.positions, state.amplitudes):
        writer.writerow([repr(float(q)), repr(float(a.real)), repr(float(a.imag))])


def joint_to_csv(state: JointState, stream: IO[str]) -> None:
    """Write columns q_a, q_b, re, im (row-major over the grid)."""
    writer = csv.writer(stream)
    writer.writerow(["q_a", "q_b", "re", "im"])
    qa = state.grid_a.positions
    qb = state.grid_b.positions
    for i in range(state.grid_a.n_points):
        for j in range(state.grid_b.n_points):
            a = state.amplitudes[i, j]
            writer.writerow(
                [repr(float(qa[i])), repr(float(qb[j])), repr(float(a.real)), repr(float(a.imag))]
            )
