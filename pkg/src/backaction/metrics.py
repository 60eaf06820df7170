"""Noise and disturbance metrics, post-measurement ensembles, and POVMs.

The root-mean-square error of a measurement scheme is
ε(Q) = ⟨N(Q)²⟩^{1/2} with noise operator N(Q) = M(Δt) - Q(0); the
root-mean-square momentum disturbance is η(P) = ⟨D(P)²⟩^{1/2} with
D(P) = P(Δt) - P(0).  Both are evaluated through two redundant routes
(moment form and geometric norm form) that must agree to 1e-8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DimensionError
from .grid import GridSpec
from .matrix_oracle import MatrixOperator
from .models import MAX_JOINT_DIM, MeasurementModel
from .observables import (
    LinearObservable,
    apply_linear,
    commutator_scalar,
    expectation,
    std_dev,
)
from .states import JointState, StateVector, tensor

RMS_PATH_TOL = 1e-8
DEVIATION_BOUND_SLACK = 1e-8
POVM_PSD_TOL = 1e-10
POVM_COMPLETENESS_TOL = 1e-8


def noise_operator(model: MeasurementModel) -> LinearObservable:
    """N(Q) = M(Δt) - Q(0), in exact coefficient algebra."""
    return model.io_map.meter_out - model.measured


def disturbance_operator(model: MeasurementModel) -> LinearObservable:
    """D(P) = P(Δt) - P(0), in exact coefficient algebra."""
    return model.io_map.momentum_out - model.momentum_in


def _rms_two_path(
    out_row: LinearObservable,
    in_row: LinearObservable,
    joint: JointState,
) -> float:
    diff = out_row - in_row
    if diff.is_zero():
        return 0.0
    w = joint.measure()
    applied_diff = apply_linear(diff, joint)
    moment = float(np.sqrt(np.real(np.vdot(applied_diff, applied_diff)) * w))
    geo_vec = apply_linear(out_row, joint) - apply_linear(in_row, joint)
    geometric = float(np.sqrt(np.real(np.vdot(geo_vec, geo_vec)) * w))
    if abs(moment - geometric) > RMS_PATH_TOL:
        raise ConsistencyError(
            f"rms paths disagree: moment {moment!r} vs geometric {geometric!r}"
        )
    return moment


def rms_error(
    model: MeasurementModel, state: StateVector | JointState | None = None
) -> float:
    """ε(Q) on the given input state (exact zero when N(Q) ≡ 0)."""
    return _rms_two_path(
        model.io_map.meter_out, model.measured, model.joint_state(state)
    )


def rms_disturbance(
    model: MeasurementModel, state: StateVector | JointState | None = None
) -> float:
    """η(P) on the given input state (exact zero when D(P) ≡ 0)."""
    return _rms_two_path(
        model.io_map.momentum_out, model.momentum_in, model.joint_state(state)
    )


@dataclass(frozen=True)
class NoiseDisturbanceReport:
    """Evaluated error/disturbance metrics for one (model, state) pair.

    The standard-deviation changes are bounded by the metrics up to the
    mean shifts, |σ_out - σ_in| <= metric + |mean shift|; both bounds are
    asserted at construction within 1e-8 slack.
    """

    epsilon: float
    eta: float
    sigma_q_in: float
    sigma_p_in: float
    mean_shift_m: float
    mean_shift_p: float
    sigma_m_out: float
    sigma_p_out: float

    def __post_init__(self) -> None:
        if abs(self.sigma_p_out - self.sigma_p_in) > self.eta + abs(self.mean_shift_p) + DEVIATION_BOUND_SLACK:
            raise ConsistencyError(
                "momentum deviation bound violated: "
                f"|{self.sigma_p_out!r} - {self.sigma_p_in!r}| > "
                f"{self.eta!r} + |{self.mean_shift_p!r}|"
            )
        if abs(self.sigma_m_out - self.sigma_q_in) > self.epsilon + abs(self.mean_shift_m) + DEVIATION_BOUND_SLACK:
            raise ConsistencyError(
                "meter deviation bound violated: "
                f"|{self.sigma_m_out!r} - {self.sigma_q_in!r}| > "
                f"{self.epsilon!r} + |{self.mean_shift_m!r}|"
            )


def noise_disturbance_report(
    model: MeasurementModel, state: StateVector | JointState | None = None
) -> NoiseDisturbanceReport:
    """Evaluate ε, η, input spreads, output spreads and biases in one pass."""
    joint = model.joint_state(state)
    io = model.io_map
    return NoiseDisturbanceReport(
        epsilon=_rms_two_path(io.meter_out, model.measured, joint),
        eta=_rms_two_path(io.momentum_out, model.momentum_in, joint),
        sigma_q_in=std_dev(model.measured, joint),
        sigma_p_in=std_dev(model.momentum_in, joint),
        mean_shift_m=expectation(io.meter_out, joint) - expectation(model.measured, joint),
        mean_shift_p=expectation(io.momentum_out, joint) - expectation(model.momentum_in, joint),
        sigma_m_out=std_dev(io.meter_out, joint),
        sigma_p_out=std_dev(io.momentum_out, joint),
    )


def rest_mass_disturbance_identity(
    model: MeasurementModel, state: StateVector | JointState | None = None
) -> tuple[float, float]:
    """Both sides of η(P)² = ⟨P(Δt)²⟩ for a near-rest input.

    For an exact zero-momentum eigenstate the two sides coincide; the
    caller controls the input's momentum width and reads the residual.
    """
    joint = model.joint_state(state)
    w = joint.measure()
    diff = disturbance_operator(model)
    if diff.is_zero():
        eta_sq = 0.0
    else:
        vec = apply_linear(diff, joint)
        eta_sq = float(np.real(np.vdot(vec, vec)) * w)
    out_vec = apply_linear(model.io_map.momentum_out, joint)
    p_out_sq = float(np.real(np.vdot(out_vec, out_vec)) * w)
    return eta_sq, p_out_sq


# ---------------------------------------------------------------------------
# Post-measurement ensembles.


@dataclass(frozen=True, eq=False)
class OutcomeEnsemble:
    """Meter-outcome decomposition of the propagated joint state.

    ``outcomes`` are the meter grid points (atomic bins of width
    ``bin_width``), ``weights`` the outcome probabilities, and ``states``
    the normalized conditional object states (None for bins below the
    weight floor).  Conditional states are StateVectors except for the
    finite-width pair readout, where they are two-particle JointStates.
    """

    outcomes: np.ndarray
    weights: np.ndarray
    states: tuple[object, ...]
    bin_width: float
    weight_floor: float

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float, copy=True)
        if w.min() < -1e-12:
            raise ConsistencyError(f"negative outcome weight {w.min()!r}")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-10:
            raise ConsistencyError(f"outcome weights sum to {total!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        o = np.array(self.outcomes, dtype=float, copy=True)
        o.setflags(write=False)
        object.__setattr__(self, "outcomes", o)


def outcome_ensemble(
    model: MeasurementModel,
    state: StateVector | JointState | None = None,
    weight_floor: float = 1e-12,
) -> OutcomeEnsemble:
    """Read the meter in its eigenbasis after the exact propagator.

    Models without an exact propagator are rejected; drive those through
    ``hamiltonian_matrix`` and the matrix oracle instead.
    """
    joint = model.joint_state(state)
    if not model.has_propagator:
        raise ValueError(
            f"model {model.name!r} has no exact propagator; propagate with "
            "hamiltonian_matrix + matrix_oracle_evolve and bin the result"
        )
    if model.object_arity == 2 and model.readout_sigma is not None:
        return _finite_width_pair_ensemble(model, joint, weight_floor)
    propagated = model.propagate(joint)
    psi = propagated.amplitudes
    dx_a = propagated.grid_a.spacing
    dy = propagated.grid_b.spacing
    weights = np.sum(np.abs(psi) ** 2, axis=0) * dx_a * dy
    states: list[object] = []
    for j, w in enumerate(weights):
        if w > weight_floor:
            col = psi[:, j] / np.sqrt(np.sum(np.abs(psi[:, j]) ** 2) * dx_a)
            states.append(StateVector(propagated.grid_a, col))
        else:
            states.append(None)
    return OutcomeEnsemble(
        outcomes=propagated.grid_b.positions,
        weights=weights,
        states=tuple(states),
        bin_width=dy,
        weight_floor=weight_floor,
    )


def _finite_width_pair_ensemble(
    model: MeasurementModel, joint: JointState, weight_floor: float
) -> OutcomeEnsemble:
    """Gaussian-smoothed Q₂ readout; conditional states stay pure pair states."""
    s = model.readout_sigma
    y = joint.grid_b.positions
    # Row-normalized Gaussian response: each grid point's readout
    # probabilities over outcome bins sum to one exactly.
    response = np.exp(-((y[None, :] - y[:, None]) ** 2) / (2.0 * s**2))
    response /= response.sum(axis=1, keepdims=True)
    psi = joint.amplitudes
    dens_b = joint.marginal_density(1) * joint.grid_b.spacing
    weights = dens_b @ response
    states: list[object] = []
    for j, w in enumerate(weights):
        if w > weight_floor:
            kraus = np.sqrt(response[:, j])
            cond = psi * kraus[None, :]
            nrm = np.sqrt(np.sum(np.abs(cond) ** 2) * joint.measure())
            states.append(
                JointState(joint.grid_a, joint.grid_b, cond / nrm, joint.labels)
            )
        else:
            states.append(None)
    return OutcomeEnsemble(
        outcomes=y,
        weights=weights,
        states=tuple(states),
        bin_width=joint.grid_b.spacing,
        weight_floor=weight_floor,
    )


@dataclass(frozen=True)
class MixtureIdentityResult:
    """Both routes to the post-measurement mean-square momentum.

    ``mean_sq_io`` evaluates ⟨P(Δt)²⟩ through the Heisenberg rows on the
    pre-measurement state; ``mean_sq_ensemble`` integrates ⟨ψ_x|P²|ψ_x⟩
    over the outcome distribution of the propagated state.  The mixture
    bound ⟨P(Δt)²⟩ >= ∫σ_x(P)² π(dx) and the positive-probability witness
    (some bin with σ_x(P)² <= ⟨P(Δt)²⟩) are evaluated alongside.
    """

    mean_sq_io: float
    mean_sq_ensemble: float
    variance_integral: float
    mixture_bound_margin: float
    witness_exists: bool


def verify_mixture_identity(
    model: MeasurementModel,
    state: StateVector | JointState | None = None,
    weight_floor: float = 1e-12,
) -> MixtureIdentityResult:
    """Cross-check the outcome-ensemble decomposition of ⟨P(Δt)²⟩."""
    comm = commutator_scalar(
        model.io_map.meter_out, model.io_map.momentum_out, model.hbar
    )
    if comm != 0:
        raise ConsistencyError(
            "meter readout does not commute with the output momentum; the "
            "mixture decomposition is not applicable"
        )
    joint = model.joint_state(state)
    w = joint.measure()
    out_vec = apply_linear(model.io_map.momentum_out, joint)
    mean_sq_io = float(np.real(np.vdot(out_vec, out_vec)) * w)

    propagated = model.propagate(joint)
    # P acts on the object factor (axis 0) of the propagated state; summing
    # |Pψ_x|² over all bins is the exact ensemble integral with no floor.
    pk = propagated.grid_a.fft_momenta
    p_cols = np.fft.ifft(pk[:, None] * np.fft.fft(propagated.amplitudes, axis=0), axis=0)
    col_mean_sq = np.sum(np.abs(p_cols) ** 2, axis=0) * propagated.grid_a.spacing
    col_weights = (
        np.sum(np.abs(propagated.amplitudes) ** 2, axis=0)
        * propagated.grid_a.spacing
    )
    dy = propagated.grid_b.spacing
    mean_sq_ensemble = float(np.sum(col_mean_sq) * dy)

    # Per-bin variances need normalized conditionals; below the floor a
    # bin's contribution is dropped, which can only lower the integral.
    col_mean = np.zeros_like(col_weights)
    kept = col_weights > weight_floor
    if np.any(kept):
        overlaps = (
            np.sum(np.conj(propagated.amplitudes) * p_cols, axis=0).real
            * propagated.grid_a.spacing
        )
        col_mean[kept] = overlaps[kept] / col_weights[kept]
    variances = np.where(
        kept, col_mean_sq / np.maximum(col_weights, 1e-300) - col_mean**2, 0.0
    )
    variance_integral = float(np.sum(variances[kept] * col_weights[kept]) * dy)
    margin = mean_sq_ensemble - variance_integral
    witness = bool(np.any(variances[kept] <= mean_sq_ensemble + DEVIATION_BOUND_SLACK))
    return MixtureIdentityResult(
        mean_sq_io=mean_sq_io,
        mean_sq_ensemble=mean_sq_ensemble,
        variance_integral=variance_integral,
        mixture_bound_margin=margin,
        witness_exists=witness,
    )


@dataclass(frozen=True)
class EquipredictivityWitness:
    """Whether the scheme leaves the object no wider in Q than its error."""

    epsilon: float
    weight_fraction_ok: float
    holds_everywhere: bool


def equipredictivity_witness(
    model: MeasurementModel,
    state: StateVector | JointState | None = None,
    weight_floor: float = 1e-9,
    slack: float = 1e-8,
) -> EquipredictivityWitness:
    """Check σ_x(Q) <= ε(Q) + slack across outcome bins.

    Reported, never asserted: schemes with ε(Q) = 0 and nonzero meter
    width legitimately fail this premise of the 1927-style argument.
    """
    eps = rms_error(model, state)
    ens = outcome_ensemble(model, state, weight_floor=weight_floor)
    ok_weight = 0.0
    total = 0.0
    for w, cond in zip(ens.weights, ens.states):
        if cond is None:
            continue
        total += w
        if isinstance(cond, StateVector):
            q = cond.grid.positions
            dens = cond.position_density() * cond.grid.spacing
            m = float(np.sum(q * dens))
            s = float(np.sqrt(max(np.sum(q**2 * dens) - m**2, 0.0)))
        else:
            s = std_dev(
                LinearObservable(c_q=1.0, slots=cond.labels), cond
            )
        if s <= eps + slack:
            ok_weight += w
    fraction = ok_weight / total if total > 0 else 0.0
    return EquipredictivityWitness(
        epsilon=eps,
        weight_fraction_ok=fraction,
        holds_everywhere=bool(abs(fraction - 1.0) < 1e-12),
    )


# ---------------------------------------------------------------------------
# POVMs.


@dataclass(frozen=True, eq=False)
class PovmBin:
    lower: float
    upper: float
    operator: MatrixOperator

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators over outcome intervals on the object space."""

    bins: tuple[PovmBin, ...]

    @property
    def dimension(self) -> int:
        return self.bins[0].operator.dimension

    def outcomes(self) -> np.ndarray:
        return np.array([b.midpoint for b in self.bins])

    def completeness_residual(self) -> float:
        total = sum(b.operator.entries for b in self.bins)
        return float(np.abs(total - np.eye(self.dimension)).max())

    def min_eigenvalue(self) -> float:
        return min(
            float(np.linalg.eigvalsh(b.operator.entries)[0]) for b in self.bins
        )

    def first_moment(self) -> np.ndarray:
        return sum(b.midpoint * b.operator.entries for b in self.bins)

    def second_moment(self) -> np.ndarray:
        return sum(b.midpoint**2 * b.operator.entries for b in self.bins)

    def validate(
        self,
        psd_tol: float = POVM_PSD_TOL,
        completeness_tol: float = POVM_COMPLETENESS_TOL,
    ) -> None:
        herm = max(b.operator.hermiticity_residual() for b in self.bins)
        if herm > 1e-10:
            raise ConsistencyError(f"POVM bin not Hermitian: residual {herm!r}")
        low = self.min_eigenvalue()
        if low < -psd_tol:
            raise ConsistencyError(f"POVM bin not positive: min eigenvalue {low!r}")
        res = self.completeness_residual()
        if res > completeness_tol:
            raise ConsistencyError(f"POVM completeness residual {res!r}")


def extract_povm(model: MeasurementModel, object_grid: GridSpec) -> Povm:
    """Marginalize the probe out of the propagated dynamics.

    Implements Π(Δ) = ⟨ξ|U†(I⊗E^M(Δ))U|ξ⟩ with atomic meter bins (one per
    meter grid point), applying the model's exact propagator to the object
    position basis column by column.  Dense construction; the joint
    dimension guard is 4096.
    """
    if model.object_arity == 2:
        return _pair_readout_povm(model, object_grid)
    probe = model.probe_state
    grid_b = probe.grid
    n_a, n_b = object_grid.n_points, grid_b.n_points
    if n_a * n_b > MAX_JOINT_DIM:
        raise DimensionError(
            f"joint dimension {n_a * n_b} exceeds the guard {MAX_JOINT_DIM}"
        )
    if not model.has_propagator:
        raise ValueError(
            f"model {model.name!r} has no exact propagator for the POVM construction"
        )
    dx_a = object_grid.spacing
    dy = grid_b.spacing
    basis = np.zeros(n_a, dtype=complex)
    propagated = np.empty((n_a, n_a, n_b), dtype=complex)
    for i in range(n_a):
        basis[:] = 0.0
        basis[i] = 1.0 / np.sqrt(dx_a)
        joint = tensor(StateVector(object_grid, basis), probe, model.slots)
        propagated[i] = model.propagate(joint).amplitudes
    ops = np.einsum("iaj,kaj->jik", propagated.conj(), propagated) * (dx_a * dy)
    half = 0.5 * dy
    bins = tuple(
        PovmBin(y - half, y + half, MatrixOperator(ops[j]))
        for j, y in enumerate(grid_b.positions)
    )
    povm = Povm(bins)
    res = povm.completeness_residual()
    if res > POVM_COMPLETENESS_TOL:
        raise ConsistencyError(f"POVM construction failed completeness: {res!r}")
    return povm


def _pair_readout_povm(model: MeasurementModel, object_grid: GridSpec) -> Povm:
    """POVM of the precise Q₂ readout: Π(Δ) = I ⊗ E^{Q₂}(Δ) on the pair space."""
    pair = model.object_state
    if object_grid != pair.grid_a:
        raise ValueError("object_grid must match the stored pair's particle-1 grid")
    n1, n2 = pair.grid_a.n_points, pair.grid_b.n_points
    if n1 * n2 > MAX_JOINT_DIM:
        raise DimensionError(
            f"joint dimension {n1 * n2} exceeds the guard {MAX_JOINT_DIM}"
        )
    dy = pair.grid_b.spacing
    half = 0.5 * dy
    eye1 = np.eye(n1, dtype=complex)
    bins = []
    for j, y in enumerate(pair.grid_b.positions):
        proj = np.zeros((n2, n2), dtype=complex)
        proj[j, j] = 1.0
        bins.append(PovmBin(y - half, y + half, MatrixOperator(np.kron(eye1, proj))))
    povm = Povm(tuple(bins))
    res = povm.completeness_residual()
    if res > POVM_COMPLETENESS_TOL:
        raise ConsistencyError(f"POVM construction failed completeness: {res!r}")
    return povm


def povm_distance(
    povm: Povm,
    observable: MatrixOperator,
    state: StateVector | JointState | np.ndarray,
) -> float:
    """Distance d(Π, A) between a POVM and a sharp observable on a state.

    d² = ⟨ψ| ∫x²Π(dx) - [∫xΠ(dx)]² |ψ⟩ + ‖∫xΠ(dx)ψ - Aψ‖², evaluated on
    ℓ²-normalized coefficients.  The first term is clamped at zero;
    anything below -1e-10 is an internal failure.
    """
    if isinstance(state, StateVector):
        vec = state.amplitudes * np.sqrt(state.grid.spacing)
    elif isinstance(state, JointState):
        vec = (state.amplitudes * np.sqrt(state.measure())).ravel()
    else:
        vec = np.asarray(state, dtype=complex)
    if vec.shape != (povm.dimension,):
        raise ValueError(
            f"state dimension {vec.shape} does not match POVM dimension {povm.dimension}"
        )
    o1 = povm.first_moment()
    o2 = povm.second_moment()
    first = float(np.real(np.vdot(vec, (o2 - o1 @ o1) @ vec)))
    if first < -POVM_PSD_TOL:
        raise ConsistencyError(f"POVM variance-excess term is negative: {first!r}")
    first = max(first, 0.0)
    resid = o1 @ vec - observable.entries @ vec
    second = float(np.real(np.vdot(resid, resid)))
    return float(np.sqrt(first + second))
