"""Dense-matrix oracle for small Hilbert-space dimensions.

This module deliberately avoids the transform-based fast paths used by the
rest of the package: operators are explicit dense matrices in the plain ℓ²
convention (unit-norm coefficient vectors, no quadrature weights), so its
results are an independent route for cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .errors import ConsistencyError, DimensionError
from .grid import GridSpec
from .states import JointState, StateVector

MAX_EVOLVE_DIM = 4096
MAX_PROPAGATOR_DIM = 1024
HERMITICITY_TOL = 1e-12
NORM_PRESERVATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MatrixOperator:
    """A dense complex matrix acting on a small Hilbert space."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=complex, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"entries must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def require_hermitian(self, tol: float = HERMITICITY_TOL) -> None:
        r = self.hermiticity_residual()
        if r > tol:
            raise ConsistencyError(f"matrix not Hermitian: max |A - A†| = {r!r}")

    def __matmul__(self, other: "MatrixOperator") -> "MatrixOperator":
        return MatrixOperator(self.entries @ other.entries)

    def __add__(self, other: "MatrixOperator") -> "MatrixOperator":
        return MatrixOperator(self.entries + other.entries)

    def __sub__(self, other: "MatrixOperator") -> "MatrixOperator":
        return MatrixOperator(self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "MatrixOperator":
        return MatrixOperator(self.entries * scalar)

    __rmul__ = __mul__


def position_matrix(grid: GridSpec) -> MatrixOperator:
    """Q as a diagonal matrix over the grid points."""
    return MatrixOperator(np.diag(grid.positions.astype(complex)))


def momentum_matrix(grid: GridSpec) -> MatrixOperator:
    """P = F† diag(ℏk) F as an explicitly Hermitian dense matrix."""
    n = grid.n_points
    f = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    p = f.conj().T @ (grid.fft_momenta[:, None] * f)
    return MatrixOperator(0.5 * (p + p.conj().T))


def identity_matrix(dim: int) -> MatrixOperator:
    return MatrixOperator(np.eye(dim, dtype=complex))


def commutator(a: MatrixOperator, b: MatrixOperator) -> MatrixOperator:
    return MatrixOperator(a.entries @ b.entries - b.entries @ a.entries)


def matrix_oracle_evolve(
    h: MatrixOperator, duration: float, state: np.ndarray, hbar: float = 1.0
) -> np.ndarray:
    """exp(-i·duration·H/ℏ) applied to an ℓ² coefficient vector.

    Uses scipy's Krylov/Taylor evaluation of the matrix exponential action,
    which never materializes the propagator; norm preservation is asserted
    to 1e-9.
    """
    if h.dimension > MAX_EVOLVE_DIM:
        raise DimensionError(
            f"dimension {h.dimension} exceeds the oracle guard {MAX_EVOLVE_DIM}"
        )
    h.require_hermitian(tol=1e-10)
    v = np.asarray(state, dtype=complex)
    if v.shape != (h.dimension,):
        raise ValueError(f"state shape {v.shape} does not match dimension {h.dimension}")
    out = expm_multiply((-1j * duration / hbar) * h.entries, v)
    n_in = float(np.linalg.norm(v))
    n_out = float(np.linalg.norm(out))
    if abs(n_out - n_in) > NORM_PRESERVATION_TOL * max(1.0, n_in):
        raise ConsistencyError(
            f"evolution changed the norm: {n_in!r} -> {n_out!r}"
        )
    return out


def dense_propagator(
    h: MatrixOperator, duration: float, hbar: float = 1.0
) -> MatrixOperator:
    """The unitary exp(-i·duration·H/ℏ) as an explicit dense matrix."""
    if h.dimension > MAX_PROPAGATOR_DIM:
        raise DimensionError(
            f"dimension {h.dimension} exceeds the dense-propagator guard "
            f"{MAX_PROPAGATOR_DIM}"
        )
    h.require_hermitian(tol=1e-10)
    return MatrixOperator(expm((-1j * duration / hbar) * h.entries))


def unitarity_residual(u: MatrixOperator) -> float:
    """max |U†U - I|, for on-demand verification of a propagator."""
    d = u.dimension
    return float(np.abs(u.entries.conj().T @ u.entries - np.eye(d)).max())


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> MatrixOperator:
    """A Hermitian matrix with Gaussian entries (GUE-like), for property suites."""
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return MatrixOperator(0.5 * scale * (m + m.conj().T))


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# Conversions between quadrature-weighted states and ℓ² coefficient vectors.


def state_to_l2(state: StateVector) -> np.ndarray:
    return state.amplitudes * np.sqrt(state.grid.spacing)


def joint_to_l2(state: JointState) -> np.ndarray:
    return (state.amplitudes * np.sqrt(state.measure())).ravel()


def l2_to_joint(
    vec: np.ndarray, grid_a: GridSpec, grid_b: GridSpec, labels: tuple[str, str]
) -> JointState:
    amps = vec.reshape(grid_a.n_points, grid_b.n_points) / np.sqrt(
        grid_a.spacing * grid_b.spacing
    )
    return JointState(grid_a, grid_b, amps, labels)
