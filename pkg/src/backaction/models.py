"""Measurement models: probe + input-output map + meter + exact propagator.

Three builders are provided.

* ``build_von_neumann`` — position meter coupled through H = K·(Q⊗P₀) with
  K·Δt = 1 by default, meter M = Q₀.  Input-output map
  M(Δt) = Q(0) + Q₀(0), P(Δt) = P(0) - P₀(0); the exact Schrödinger
  propagator is the translation kernel Ψ(q, y) → Ψ(q, y - κq).
* ``build_ozawa_contractive`` — the contractive-state measurement whose
  input-output map is M(Δt) = Q(0), P(Δt) = P₀(0) (so the position error
  vanishes identically).  The map is the perfect exchange of object and
  probe quadratures, realized exactly on matched grids by
  Ψ(q, y) → Ψ(y, q).
* ``build_epr_indirect`` — indirect position measurement of particle 1 of
  a correlated pair by a precise Q₂ readout; the object pair itself does
  not evolve, so the momentum disturbance on particle 1 vanishes.

Every model's Heisenberg-picture rows live in exact coefficient algebra
(LinearObservable); [M(Δt), P(Δt)] = 0 is enforced at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import CompletionError, ConfigError, ConsistencyError, DimensionError
from .grid import GridSpec
from .matrix_oracle import MatrixOperator, momentum_matrix, position_matrix
from .observables import (
    LinearObservable,
    commutator_scalar,
    expectation,
    std_dev,
)
from .states import (
    OBJECT_PROBE,
    PARTICLE_PAIR,
    JointState,
    StateVector,
    correlated_gaussian_pair,
    gaussian_state,
    mean_momentum,
    mean_position,
    position_spread,
    tensor,
)

MAX_JOINT_DIM = 4096
SYMPLECTIC_TOL = 1e-12

#: Canonical symplectic form on rows ordered (Q, P, Q0, P0).
SYMPLECTIC_FORM = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


@dataclass(frozen=True)
class IOMap:
    """Heisenberg-picture output rows M(Δt) and P(Δt) in input operators."""

    meter_out: LinearObservable
    momentum_out: LinearObservable


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """Linear Heisenberg dynamics on (Q, P, Q₀, P₀): A'_i = Σ_j S_ij A_j + shift_i."""

    matrix: np.ndarray
    shift: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float, copy=True)
        s = np.array(self.shift, dtype=float, copy=True)
        if m.shape != (4, 4) or s.shape != (4,):
            raise ValueError("matrix must be 4x4 and shift length 4")
        m.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "shift", s)

    def symplectic_residual(self) -> float:
        j = SYMPLECTIC_FORM
        return float(np.abs(self.matrix @ j @ self.matrix.T - j).max())

    def validate(self, tol: float = SYMPLECTIC_TOL) -> None:
        r = self.symplectic_residual()
        if r > tol:
            raise ConsistencyError(f"map is not symplectic: max |SJSᵀ - J| = {r!r}")


def _row_of(obs: LinearObservable) -> np.ndarray:
    return obs.coefficients()


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """An immutable measurement scheme for the object position.

    ``measured`` and ``momentum_in`` are the t=0 object rows Q(0), P(0);
    ``io_map`` holds the t=Δt rows; ``meter`` names the probe observable
    that is read out.  ``propagator_kind`` selects the exact joint-state
    map ("translation", "swap", "identity") when one exists.
    """

    name: str
    meter: str
    io_map: IOMap
    measured: LinearObservable
    momentum_in: LinearObservable
    hbar: float
    object_arity: int = 1
    slots: tuple[str, str] = OBJECT_PROBE
    probe_state: StateVector | None = None
    propagator_kind: str | None = None
    symplectic: SymplecticMap | None = None
    coupling: float = 1.0
    object_state: JointState | None = None
    readout_sigma: float | None = None

    def __post_init__(self) -> None:
        comm = commutator_scalar(self.io_map.meter_out, self.io_map.momentum_out, self.hbar)
        if comm != 0:
            raise ConsistencyError(
                f"meter and momentum output rows do not commute: [M, P(Δt)] = {comm!r}"
            )
        if self.object_arity == 1 and self.probe_state is None:
            raise ValueError("single-object models require a probe state")
        if self.object_arity == 2 and self.object_state is None:
            raise ValueError("two-particle models require a default object state")

    # -- state plumbing ----------------------------------------------------

    def joint_state(self, state: StateVector | JointState | None = None) -> JointState:
        """The full pre-measurement state the Heisenberg rows act on."""
        if self.object_arity == 2:
            joint = self.object_state if state is None else state
            if not isinstance(joint, JointState) or joint.labels != self.slots:
                raise ValueError(
                    f"{self.name} expects a two-particle JointState with factors {self.slots}"
                )
            return joint
        if not isinstance(state, StateVector):
            raise ValueError(f"{self.name} expects a StateVector input")
        return tensor(state, self.probe_state, self.slots)

    @property
    def has_propagator(self) -> bool:
        return self.propagator_kind is not None

    def propagate(self, joint: JointState) -> JointState:
        """Apply the exact Schrödinger propagator to a joint state."""
        if self.propagator_kind == "translation":
            return _translate_second_factor(joint, self.coupling)
        if self.propagator_kind == "swap":
            if joint.grid_a != joint.grid_b:
                raise ValueError("the exchange propagator requires identical grids")
            return JointState(joint.grid_a, joint.grid_b, joint.amplitudes.T, joint.labels)
        if self.propagator_kind == "identity":
            return joint
        raise ValueError(
            f"model {self.name!r} has no exact propagator; use hamiltonian_matrix "
            "with matrix_oracle_evolve instead"
        )


def _translate_second_factor(joint: JointState, coupling: float) -> JointState:
    """Ψ(q, y) → Ψ(q, y - κq), per-row translation along the second axis.

    Shifts landing on grid points are index rolls; anything else is the
    band-limited (transform phase) translation.
    """
    shifts = coupling * joint.grid_a.positions
    dy = joint.grid_b.spacing
    steps = shifts / dy
    steps_int = np.rint(steps)
    psi = joint.amplitudes
    if np.abs(steps - steps_int).max() < 1e-9:
        n_b = joint.grid_b.n_points
        cols = (np.arange(n_b)[None, :] - steps_int[:, None].astype(int)) % n_b
        out = psi[np.arange(psi.shape[0])[:, None], cols]
    else:
        k = joint.grid_b.fft_momenta / joint.hbar
        phase = np.exp(-1j * k[None, :] * shifts[:, None])
        out = np.fft.ifft(phase * np.fft.fft(psi, axis=1), axis=1)
    return JointState(joint.grid_a, joint.grid_b, out, joint.labels)


# ---------------------------------------------------------------------------
# Builders.


def build_von_neumann(probe: StateVector, coupling: float = 1.0) -> MeasurementModel:
    """Position meter via H = K(Q⊗P₀), K·Δt = ``coupling`` (default 1)."""
    _check_probe(probe)
    k = float(coupling)
    slots = OBJECT_PROBE
    io = IOMap(
        meter_out=LinearObservable(c_q=k, c_q0=1.0, slots=slots),
        momentum_out=LinearObservable(c_p=1.0, c_p0=-k, slots=slots),
    )
    sym = SymplecticMap(
        np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, -k],
                [k, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    )
    return MeasurementModel(
        name="von-neumann",
        meter="Q0",
        io_map=io,
        measured=LinearObservable(c_q=1.0, slots=slots),
        momentum_in=LinearObservable(c_p=1.0, slots=slots),
        hbar=probe.grid.hbar,
        probe_state=probe,
        propagator_kind="translation",
        symplectic=sym,
        coupling=k,
    )


def build_ozawa_contractive(probe: StateVector, coupling: float = 1.0) -> MeasurementModel:
    """Contractive-state measurement: M(Δt) = Q(0), P(Δt) = P₀(0).

    Only the designed coupling K·Δt = 1 is supported; the input-output map
    is then the exact exchange of object and probe quadratures.
    """
    _check_probe(probe)
    if coupling != 1.0:
        raise ValueError("the contractive model is defined at coupling K·Δt = 1")
    slots = OBJECT_PROBE
    io = IOMap(
        meter_out=LinearObservable(c_q=1.0, slots=slots),
        momentum_out=LinearObservable(c_p0=1.0, slots=slots),
    )
    sym = SymplecticMap(
        np.array(
            [
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
            ]
        )
    )
    return MeasurementModel(
        name="ozawa-contractive",
        meter="Q0",
        io_map=io,
        measured=LinearObservable(c_q=1.0, slots=slots),
        momentum_in=LinearObservable(c_p=1.0, slots=slots),
        hbar=probe.grid.hbar,
        probe_state=probe,
        propagator_kind="swap",
        symplectic=sym,
        coupling=1.0,
    )


def build_epr_indirect(
    joint_object: JointState, readout_sigma: float | None = None
) -> MeasurementModel:
    """Indirect Q₁ measurement through a precise Q₂ readout on particle 2.

    The zero-error readout limit is the default; ``readout_sigma`` enables
    a finite-resolution meter (Gaussian-smoothed Q₂ readout) for
    continuity checks of ensemble-level quantities.
    """
    if joint_object.labels != PARTICLE_PAIR:
        raise ValueError(f"EPR object must carry factors {PARTICLE_PAIR}")
    slots = PARTICLE_PAIR
    rel = LinearObservable(c_q=1.0, c_q0=-1.0, slots=slots)
    mean_sq = std_dev(rel, joint_object) ** 2 + expectation(rel, joint_object) ** 2
    if not np.isfinite(mean_sq) or mean_sq > 1e12:
        raise ValueError(
            f"non-normalizable correlation: ⟨(Q₁-Q₂)²⟩ = {mean_sq!r}"
        )
    if readout_sigma is not None and readout_sigma <= 0:
        raise ValueError("readout_sigma must be positive when given")
    io = IOMap(
        meter_out=LinearObservable(c_q0=1.0, slots=slots),
        momentum_out=LinearObservable(c_p=1.0, slots=slots),
    )
    return MeasurementModel(
        name="epr-indirect",
        meter="Q2",
        io_map=io,
        measured=LinearObservable(c_q=1.0, slots=slots),
        momentum_in=LinearObservable(c_p=1.0, slots=slots),
        hbar=joint_object.hbar,
        object_arity=2,
        slots=slots,
        propagator_kind="identity",
        symplectic=SymplecticMap(np.eye(4)),
        object_state=joint_object,
        readout_sigma=readout_sigma,
    )


def _check_probe(probe: StateVector) -> None:
    # Probe states must be comfortably localized; Gaussian moments are the
    # guard's reference scale even for non-Gaussian probes.
    probe.grid.check_localization(
        mean_position(probe), position_spread(probe), mean_momentum(probe)
    )


# ---------------------------------------------------------------------------
# Symplectic completion.


def symplectic_map(model: MeasurementModel) -> SymplecticMap:
    """The model's full linear Heisenberg dynamics.

    Returns the stored map after validating that it is symplectic and that
    its meter and momentum rows reproduce the io_map coefficients exactly.
    Models without a stored map get a generic completion; failure to
    complete signals an inconsistent custom model.
    """
    sym = model.symplectic
    if sym is None:
        sym = _complete_from_io(model)
    sym.validate()
    meter_row = _row_of(model.io_map.meter_out)
    mom_row = _row_of(model.io_map.momentum_out)
    if not (
        np.array_equal(sym.matrix[2], meter_row)
        and np.array_equal(sym.matrix[1], mom_row)
        and sym.shift[2] == model.io_map.meter_out.c_const
        and sym.shift[1] == model.io_map.momentum_out.c_const
    ):
        raise CompletionError(
            "stored symplectic map does not reproduce the io_map rows"
        )
    return sym


def _omega(u: np.ndarray, v: np.ndarray) -> float:
    return float(u @ SYMPLECTIC_FORM @ v)


def _complete_from_io(model: MeasurementModel) -> SymplecticMap:
    """Find rows Q', P₀' completing (meter, momentum) rows symplectically."""
    a = _row_of(model.io_map.meter_out)        # candidate Q0' row
    b = _row_of(model.io_map.momentum_out)     # candidate P' row
    if abs(_omega(a, b)) > 1e-12:
        raise CompletionError("meter and momentum rows are not symplectically compatible")
    j = SYMPLECTIC_FORM
    # c solves omega(c, b) = 1, omega(c, a) = 0.
    m1 = np.vstack([(j @ b), (j @ a)])
    c, res1, rank1, _ = np.linalg.lstsq(m1, np.array([1.0, 0.0]), rcond=None)
    # d solves omega(a, d) = 1, omega(b, d) = 0, omega(c, d) = 0.
    m2 = np.vstack([(a @ j), (b @ j), (c @ j)])
    d, res2, rank2, _ = np.linalg.lstsq(m2, np.array([1.0, 0.0, 0.0]), rcond=None)
    sym = SymplecticMap(
        np.vstack([c, b, a, d]),
        np.array([0.0, model.io_map.momentum_out.c_const, model.io_map.meter_out.c_const, 0.0]),
    )
    if sym.symplectic_residual() > 1e-9:
        raise CompletionError(
            "no symplectic completion consistent with the io_map rows exists"
        )
    return sym


# ---------------------------------------------------------------------------
# Dense Hamiltonians for the matrix oracle.


def hamiltonian_matrix(
    model: MeasurementModel, grid_a: GridSpec, grid_b: GridSpec
) -> MatrixOperator:
    """The model's interaction Hamiltonian on the discretized joint space.

    Units are chosen so that evolving for duration 1 realizes the model's
    designed coupling.  The result is validated Hermitian to 1e-10.
    """
    dim = grid_a.n_points * grid_b.n_points
    if dim > MAX_JOINT_DIM:
        raise DimensionError(f"joint dimension {dim} exceeds the guard {MAX_JOINT_DIM}")
    if model.name == "von-neumann":
        q_a = position_matrix(grid_a).entries
        p_b = momentum_matrix(grid_b).entries
        h = MatrixOperator(model.coupling * np.kron(q_a, p_b))
    elif model.name == "ozawa-contractive":
        if grid_a != grid_b:
            raise ValueError("the contractive Hamiltonian requires identical grids")
        h = MatrixOperator(_contractive_hamiltonian(grid_a, model.coupling))
    elif model.name == "epr-indirect":
        h = MatrixOperator(np.zeros((dim, dim), dtype=complex))
    else:
        raise ValueError(f"no Hamiltonian construction for model {model.name!r}")
    residual = h.hermiticity_residual()
    if residual > 1e-10:
        raise ConsistencyError(
            f"Hamiltonian construction failed Hermiticity: residual {residual!r}"
        )
    return h


def _contractive_hamiltonian(grid: GridSpec, coupling: float) -> np.ndarray:
    """g·{2(Q⊗P₀ - P⊗Q₀) + QP⊗I - I⊗Q₀P₀} with g = κπ/(3√3).

    The non-Hermitian product QP is discretized with its canonical
    anomaly carried exactly: QP = (QP + PQ)/2 + iℏ/2.  The grid matrix
    commutator's boundary artifact would otherwise leak into the
    anti-Hermitian part; the two anomaly scalars cancel between the
    object and probe factors, which is asserted downstream.
    """
    n = grid.n_points
    q = position_matrix(grid).entries
    p = momentum_matrix(grid).entries
    eye = np.eye(n, dtype=complex)
    qp = 0.5 * (q @ p + p @ q) + 0.5j * grid.hbar * eye
    g = coupling * np.pi / (3.0 * np.sqrt(3.0))
    h = 2.0 * (np.kron(q, p) - np.kron(p, q))
    h += np.kron(qp, eye)
    h -= np.kron(eye, qp)
    return g * h


# ---------------------------------------------------------------------------
# Serialization.


def model_summary(model: MeasurementModel) -> dict[str, Any]:
    """JSON-ready description: name, probe parameters, io_map coefficients."""
    def row(obs: LinearObservable) -> dict[str, float]:
        return {
            "c_q": obs.c_q, "c_p": obs.c_p, "c_q0": obs.c_q0,
            "c_p0": obs.c_p0, "c_const": obs.c_const,
        }

    out: dict[str, Any] = {
        "name": model.name,
        "meter": model.meter,
        "object_arity": model.object_arity,
        "coupling": model.coupling,
        "hbar": model.hbar,
        "slots": list(model.slots),
        "io_map": {
            "meter_out": row(model.io_map.meter_out),
            "momentum_out": row(model.io_map.momentum_out),
        },
    }
    if model.probe_state is not None:
        g = model.probe_state.grid
        out["probe"] = {
            "grid": {"n_points": g.n_points, "length": g.length, "hbar": g.hbar},
            "mean_q": mean_position(model.probe_state),
            "mean_p": mean_momentum(model.probe_state),
            "sigma_q": position_spread(model.probe_state),
        }
    if model.object_state is not None:
        pair = model.object_state
        rel = LinearObservable(c_q=1.0, c_q0=-1.0, slots=model.slots)
        com = LinearObservable(c_q=0.5, c_q0=0.5, slots=model.slots)
        ptot = LinearObservable(c_p=1.0, c_p0=1.0, slots=model.slots)
        out["pair"] = {
            "grid_1": {
                "n_points": pair.grid_a.n_points,
                "length": pair.grid_a.length,
                "hbar": pair.grid_a.hbar,
            },
            "grid_2": {
                "n_points": pair.grid_b.n_points,
                "length": pair.grid_b.length,
                "hbar": pair.grid_b.hbar,
            },
            "relative_sigma": std_dev(rel, pair),
            "cm_sigma": std_dev(com, pair),
            "mean_q": expectation(com, pair),
            "mean_p": 0.5 * expectation(ptot, pair),
        }
        out["readout_sigma"] = model.readout_sigma
    return out


def rebuild_model(summary: dict[str, Any]) -> MeasurementModel:
    """Reconstruct a builder model from ``model_summary`` output.

    The rebuilt model's io_map coefficients must match the document
    exactly; probe/pair states are rebuilt from their Gaussian parameters.
    """
    name = summary.get("name")
    if name == "von-neumann" or name == "ozawa-contractive":
        p = summary["probe"]
        g = GridSpec(p["grid"]["n_points"], p["grid"]["length"], p["grid"]["hbar"])
        probe = gaussian_state(g, p["mean_q"], p["mean_p"], p["sigma_q"])
        if name == "von-neumann":
            model = build_von_neumann(probe, coupling=summary.get("coupling", 1.0))
        else:
            model = build_ozawa_contractive(probe, coupling=summary.get("coupling", 1.0))
    elif name == "epr-indirect":
        p = summary["pair"]
        g1 = GridSpec(p["grid_1"]["n_points"], p["grid_1"]["length"], p["grid_1"]["hbar"])
        g2 = GridSpec(p["grid_2"]["n_points"], p["grid_2"]["length"], p["grid_2"]["hbar"])
        pair = correlated_gaussian_pair(
            g1, g2, p["relative_sigma"], p["cm_sigma"], p["mean_q"], p["mean_p"]
        )
        model = build_epr_indirect(pair, readout_sigma=summary.get("readout_sigma"))
    else:
        raise ConfigError(f"unknown model name {name!r}")
    rebuilt = model_summary(model)
    if rebuilt["io_map"] != summary["io_map"]:
        raise ConfigError("rebuilt model io_map does not match the document")
    return model
