"""Named scenarios, parameter sweeps, and deterministic random-state suites.

A scenario is a JSON-serializable configuration selecting one of the
measurement-model builders, its grid, its probe (or pair correlations),
and the object input state.  Evaluation emits the noise/disturbance
metrics, every applicable relation report, and the violation class.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError
from .grid import GridSpec
from .metrics import NoiseDisturbanceReport, noise_disturbance_report
from .models import (
    MeasurementModel,
    build_epr_indirect,
    build_ozawa_contractive,
    build_von_neumann,
    model_summary,
)
from .relations import (
    InequalityReport,
    ViolationClass,
    check_commutator_identity,
    check_heisenberg,
    check_kennard,
    check_ozawa,
    check_type_bounds,
    classify_violation,
)
from .reporting import (
    SCHEMA_VERSION,
    monotonicity,
    noise_disturbance_dict,
    relation_dict,
)
from .states import (
    JointState,
    StateVector,
    correlated_gaussian_pair,
    gaussian_state,
    superposition,
)

SCENARIO_NAMES = ("von-neumann", "ozawa", "epr")

SWEEPABLE = ("probe_sigma", "input_sigma", "alpha")

_DEFAULTS = {
    "von-neumann": {"grid_length": 40.0, "probe_sigma": 0.5},
    "ozawa": {"grid_length": 40.0, "probe_sigma": 1.0},
    "epr": {"grid_length": 10.0},
}


@dataclass
class SweepSpec:
    parameter: str
    values: list[float]

    @staticmethod
    def from_dict(d: dict[str, Any], path: str) -> "SweepSpec":
        _reject_unknown(d, {"parameter", "values"}, path)
        param = d.get("parameter")
        if param not in SWEEPABLE:
            raise ConfigError(f"{path}.parameter: expected one of {SWEEPABLE}, got {param!r}")
        values = d.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{path}.values: expected a non-empty list")
        try:
            vals = [float(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}.values: non-numeric entry ({exc})") from None
        return SweepSpec(param, vals)


@dataclass
class ScenarioConfig:
    """Validated scenario description; unknown keys are rejected."""

    scenario: str
    grid_n: int = 512
    grid_length: float = 40.0
    hbar: float = 1.0
    probe_sigma: float = 0.5
    alpha: float = 0.2
    cm_sigma: float = 0.5
    coupling: float = 1.0
    input_state: dict[str, Any] = field(
        default_factory=lambda: {"kind": "gaussian", "mean_q": 0.0, "mean_p": 0.0, "sigma_q": 1.0}
    )
    sweep: SweepSpec | None = None
    format: str = "json"
    out: str | None = None
    seed: int = 0
    workers: int = 1

    _KEYS = {
        "scenario", "grid_n", "grid_length", "hbar", "probe_sigma", "alpha",
        "cm_sigma", "coupling", "input_state", "sweep", "format", "out",
        "seed", "workers",
    }

    @staticmethod
    def from_dict(raw: dict[str, Any]) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config root: expected an object, got {type(raw).__name__}")
        _reject_unknown(raw, ScenarioConfig._KEYS, "config")
        scenario = raw.get("scenario")
        if scenario not in SCENARIO_NAMES:
            raise ConfigError(
                f"config.scenario: expected one of {SCENARIO_NAMES}, got {scenario!r}"
            )
        merged: dict[str, Any] = dict(_DEFAULTS[scenario])
        merged.update({k: v for k, v in raw.items() if v is not None})
        cfg = ScenarioConfig(scenario=scenario)
        cfg.grid_n = _expect_int(merged, "grid_n", cfg.grid_n)
        cfg.grid_length = _expect_pos(merged, "grid_length", cfg.grid_length)
        cfg.hbar = _expect_pos(merged, "hbar", cfg.hbar)
        cfg.probe_sigma = _expect_pos(merged, "probe_sigma", cfg.probe_sigma)
        cfg.alpha = _expect_pos(merged, "alpha", cfg.alpha)
        cfg.cm_sigma = _expect_pos(merged, "cm_sigma", cfg.cm_sigma)
        cfg.coupling = _expect_num(merged, "coupling", cfg.coupling)
        cfg.seed = _expect_int(merged, "seed", cfg.seed, minimum=0)
        cfg.workers = _expect_int(merged, "workers", cfg.workers, minimum=1)
        fmt = merged.get("format", cfg.format)
        if fmt not in ("json", "csv"):
            raise ConfigError(f"config.format: expected 'json' or 'csv', got {fmt!r}")
        cfg.format = fmt
        out = merged.get("out", None)
        if out is not None and not isinstance(out, str):
            raise ConfigError(f"config.out: expected a path string, got {out!r}")
        cfg.out = out
        if "input_state" in merged:
            cfg.input_state = _validate_state_spec(merged["input_state"], "config.input_state")
        if merged.get("sweep") is not None:
            cfg.sweep = SweepSpec.from_dict(merged["sweep"], "config.sweep")
        return cfg

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "scenario": self.scenario,
            "grid_n": self.grid_n,
            "grid_length": self.grid_length,
            "hbar": self.hbar,
            "probe_sigma": self.probe_sigma,
            "alpha": self.alpha,
            "cm_sigma": self.cm_sigma,
            "coupling": self.coupling,
            "input_state": self.input_state,
            "format": self.format,
            "out": self.out,
            "seed": self.seed,
            "workers": self.workers,
        }
        if self.sweep is not None:
            d["sweep"] = {"parameter": self.sweep.parameter, "values": self.sweep.values}
        return d


def _reject_unknown(d: dict[str, Any], allowed: set[str], path: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}")


def _expect_int(d: dict[str, Any], key: str, default: int, minimum: int | None = None) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config.{key}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"config.{key}: must be >= {minimum}, got {v}")
    return v


def _expect_num(d: dict[str, Any], key: str, default: float) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config.{key}: expected a number, got {v!r}")
    return float(v)


def _expect_pos(d: dict[str, Any], key: str, default: float) -> float:
    v = _expect_num(d, key, default)
    if v <= 0:
        raise ConfigError(f"config.{key}: must be positive, got {v}")
    return v


def _validate_state_spec(spec: Any, path: str) -> dict[str, Any]:
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        _reject_unknown(spec, {"kind", "mean_q", "mean_p", "sigma_q"}, path)
        out = {"kind": "gaussian"}
        for key, default in (("mean_q", 0.0), ("mean_p", 0.0), ("sigma_q", 1.0)):
            v = spec.get(key, default)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
            out[key] = float(v)
        if out["sigma_q"] <= 0:
            raise ConfigError(f"{path}.sigma_q: must be positive")
        return out
    if kind == "superposition":
        _reject_unknown(spec, {"kind", "components"}, path)
        comps = spec.get("components")
        if not isinstance(comps, list) or len(comps) < 2:
            raise ConfigError(f"{path}.components: expected a list of >= 2 components")
        out_comps = []
        for i, comp in enumerate(comps):
            cpath = f"{path}.components[{i}]"
            if not isinstance(comp, dict):
                raise ConfigError(f"{cpath}: expected an object")
            _reject_unknown(
                comp, {"mean_q", "mean_p", "sigma_q", "weight_re", "weight_im"}, cpath
            )
            entry = {}
            for key, default in (
                ("mean_q", 0.0), ("mean_p", 0.0), ("sigma_q", 1.0),
                ("weight_re", 1.0), ("weight_im", 0.0),
            ):
                v = comp.get(key, default)
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{cpath}.{key}: expected a number, got {v!r}")
                entry[key] = float(v)
            out_comps.append(entry)
        return {"kind": "superposition", "components": out_comps}
    raise ConfigError(f"{path}.kind: expected 'gaussian' or 'superposition', got {kind!r}")


# ---------------------------------------------------------------------------
# Construction.


def _build_input(grid: GridSpec, spec: dict[str, Any]) -> StateVector:
    if spec["kind"] == "gaussian":
        return gaussian_state(grid, spec["mean_q"], spec["mean_p"], spec["sigma_q"])
    parts = [
        gaussian_state(grid, c["mean_q"], c["mean_p"], c["sigma_q"])
        for c in spec["components"]
    ]
    weights = [complex(c["weight_re"], c["weight_im"]) for c in spec["components"]]
    return superposition(parts, weights)


def build_scenario(
    config: ScenarioConfig,
) -> tuple[MeasurementModel, StateVector | JointState | None]:
    """Instantiate (model, input state) for a validated configuration."""
    grid = GridSpec(config.grid_n, config.grid_length, config.hbar)
    if config.scenario == "epr":
        pair = correlated_gaussian_pair(grid, grid, config.alpha, config.cm_sigma)
        return build_epr_indirect(pair), None
    probe = gaussian_state(grid, 0.0, 0.0, config.probe_sigma)
    state = _build_input(grid, config.input_state)
    if config.scenario == "von-neumann":
        return build_von_neumann(probe, coupling=config.coupling), state
    return build_ozawa_contractive(probe, coupling=config.coupling), state


def _state_id(config: ScenarioConfig) -> str:
    if config.scenario == "epr":
        return f"pair(alpha={config.alpha:g},cm={config.cm_sigma:g})"
    s = config.input_state
    if s["kind"] == "gaussian":
        return f"gaussian(q={s['mean_q']:g},p={s['mean_p']:g},sigma={s['sigma_q']:g})"
    return f"superposition({len(s['components'])})"


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    model: MeasurementModel
    nd: NoiseDisturbanceReport
    relations: tuple[InequalityReport, ...]
    classification: ViolationClass
    state_id: str

    def payload(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.config.to_dict(),
            "model": model_summary(self.model),
            "state": self.state_id,
            "noise_disturbance": noise_disturbance_dict(self.nd),
            "relations": [relation_dict(r) for r in self.relations],
            "classification": self.classification.value,
        }


def evaluate_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Evaluate every relation on the configured (model, state)."""
    model, state = build_scenario(config)
    nd = noise_disturbance_report(model, state)
    relations: list[InequalityReport] = []
    if model.object_arity == 1:
        relations.append(check_kennard(state))
    relations.append(check_heisenberg(model, state))
    relations.append(check_ozawa(model, state))
    bounds = check_type_bounds(model, state)
    relations.extend([bounds.type_i, bounds.type_ii])
    relations.append(check_commutator_identity(model))
    classification = classify_violation(nd.epsilon, nd.eta)
    return ScenarioResult(
        config=config,
        model=model,
        nd=nd,
        relations=tuple(relations),
        classification=classification,
        state_id=_state_id(config),
    )


# ---------------------------------------------------------------------------
# Sweeps.


def _point_config(config: ScenarioConfig, value: float) -> ScenarioConfig:
    d = config.to_dict()
    d.pop("sweep", None)
    param = config.sweep.parameter
    if param == "input_sigma":
        if config.scenario == "epr":
            raise ConfigError("config.sweep.parameter: input_sigma does not apply to epr")
        state = dict(d["input_state"])
        if state["kind"] != "gaussian":
            raise ConfigError("config.sweep.parameter: input_sigma requires a gaussian input")
        state["sigma_q"] = value
        d["input_state"] = state
    elif param == "probe_sigma":
        if config.scenario == "epr":
            raise ConfigError("config.sweep.parameter: probe_sigma does not apply to epr")
        d["probe_sigma"] = value
    else:
        if config.scenario != "epr":
            raise ConfigError("config.sweep.parameter: alpha applies to the epr scenario only")
        d["alpha"] = value
    return ScenarioConfig.from_dict(d)


@dataclass(frozen=True)
class SweepResult:
    config: ScenarioConfig
    points: tuple[ScenarioResult, ...]

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for value, res in zip(self.config.sweep.values, self.points):
            rel = {r.relation.value: r for r in res.relations}
            out.append(
                {
                    "value": value,
                    "epsilon": res.nd.epsilon,
                    "eta": res.nd.eta,
                    "sigma_q_in": res.nd.sigma_q_in,
                    "sigma_p_in": res.nd.sigma_p_in,
                    "heisenberg_lhs": rel["heisenberg"].lhs,
                    "ozawa_lhs": rel["ozawa"].lhs,
                    "type_i_lhs": rel["type_i"].lhs,
                    "type_ii_lhs": rel["type_ii"].lhs,
                    "classification": res.classification.value,
                }
            )
        return out

    def summaries(self) -> dict[str, str]:
        rows = self.rows()
        out = {}
        for column in ("epsilon", "eta", "sigma_q_in", "sigma_p_in", "ozawa_lhs"):
            out[column] = monotonicity([row[column] for row in rows])
        return out

    def payload(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.config.to_dict(),
            "sweep": {
                "parameter": self.config.sweep.parameter,
                "values": self.config.sweep.values,
            },
            "points": [p.payload() for p in self.points],
            "summaries": self.summaries(),
        }


def run_sweep(config: ScenarioConfig) -> SweepResult:
    """Evaluate each sweep point; results ordered by sweep index."""
    if config.sweep is None:
        raise ConfigError("config.sweep: required for a sweep run")
    configs = [_point_config(config, v) for v in config.sweep.values]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            points = tuple(pool.map(evaluate_scenario, configs))
    else:
        points = tuple(evaluate_scenario(c) for c in configs)
    return SweepResult(config=config, points=points)


# ---------------------------------------------------------------------------
# Deterministic random-state suites.


def random_localized_state(grid: GridSpec, rng: np.random.Generator) -> StateVector:
    """A random Gaussian comfortably inside the localization guards.

    Ranges scale with the grid: σ ∈ [0.015 L, 0.04 L], |mean_q| <= 0.075 L,
    |mean_p| <= 0.05 p_max.  Requires n_points >= 267 so that the smallest
    σ stays resolved.
    """
    length = grid.length
    sigma = rng.uniform(0.015 * length, 0.04 * length)
    mean_q = rng.uniform(-0.075 * length, 0.075 * length)
    mean_p = rng.uniform(-0.05, 0.05) * grid.momentum_extent
    return gaussian_state(grid, mean_q, mean_p, sigma)


def random_pair_state(
    grid_1: GridSpec, grid_2: GridSpec, rng: np.random.Generator
) -> JointState:
    """A random correlated pair inside the localization guards."""
    length = grid_1.length
    alpha = rng.uniform(max(4.0 * grid_1.spacing, 0.01 * length), 0.05 * length)
    cm = rng.uniform(0.04 * length, 0.06 * length)
    mean_q = rng.uniform(-0.02, 0.02) * length
    mean_p = rng.uniform(-1.0, 1.0)
    return correlated_gaussian_pair(grid_1, grid_2, alpha, cm, mean_q, mean_p)
