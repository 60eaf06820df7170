"""Frozen JSON/CSV report schema shared by the metrics and relation tables.

Schema version "1".  JSON documents embed ``schema_version`` at top level.
CSV files carry the version in the first column of every row so that a
single row remains self-describing.  Floats are serialized with ``repr``
(shortest round-trip form), which makes byte-identical output a pure
function of the computed values.
"""

from __future__ import annotations

import json
from typing import Any, Sequence

from .metrics import NoiseDisturbanceReport
from .relations import InequalityReport

SCHEMA_VERSION = "1"

NOISE_DISTURBANCE_FIELDS = (
    "epsilon",
    "eta",
    "sigma_q_in",
    "sigma_p_in",
    "mean_shift_m",
    "mean_shift_p",
    "sigma_m_out",
    "sigma_p_out",
)

RELATION_TABLE_COLUMNS = (
    "schema_version",
    "model",
    "state",
    "relation",
    "lhs",
    "rhs",
    "margin",
    "satisfied",
    "tolerance",
) + NOISE_DISTURBANCE_FIELDS

SWEEP_TABLE_COLUMNS = (
    "schema_version",
    "parameter",
    "value",
    "epsilon",
    "eta",
    "sigma_q_in",
    "sigma_p_in",
    "heisenberg_lhs",
    "ozawa_lhs",
    "type_i_lhs",
    "type_ii_lhs",
    "classification",
)


def noise_disturbance_dict(report: NoiseDisturbanceReport) -> dict[str, float]:
    return {name: getattr(report, name) for name in NOISE_DISTURBANCE_FIELDS}


def relation_dict(report: InequalityReport) -> dict[str, Any]:
    return {
        "relation": report.relation.value,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "satisfied": report.satisfied,
        "margin": report.margin,
        "tolerance": report.tolerance,
    }


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def relation_table_csv(
    model_name: str,
    state_id: str,
    relations: Sequence[InequalityReport],
    nd: NoiseDisturbanceReport,
) -> str:
    """One row per (model, state, relation) with the metric columns repeated."""
    lines = [",".join(RELATION_TABLE_COLUMNS)]
    nd_cells = [_cell(getattr(nd, name)) for name in NOISE_DISTURBANCE_FIELDS]
    for rep in relations:
        cells = [
            SCHEMA_VERSION,
            model_name,
            state_id,
            rep.relation.value,
            _cell(rep.lhs),
            _cell(rep.rhs),
            _cell(rep.margin),
            _cell(rep.satisfied),
            _cell(rep.tolerance),
        ] + nd_cells
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def sweep_table_csv(
    parameter: str,
    rows: Sequence[dict[str, Any]],
    summaries: dict[str, str],
) -> str:
    """One row per sweep point; monotonicity summaries appended as comments."""
    lines = [",".join(SWEEP_TABLE_COLUMNS)]
    for row in rows:
        cells = [SCHEMA_VERSION, parameter] + [
            _cell(row[name]) for name in SWEEP_TABLE_COLUMNS[2:]
        ]
        lines.append(",".join(cells))
    for key in sorted(summaries):
        lines.append(f"# summary: {key}={summaries[key]}")
    return "\n".join(lines) + "\n"


def to_json(payload: dict[str, Any]) -> str:
    return json.dumps(payload, indent=2) + "\n"


def monotonicity(values: Sequence[float]) -> str:
    """Classify a sweep column as increasing/decreasing/constant/mixed."""
    if len(values) < 2:
        return "constant"
    diffs = [b - a for a, b in zip(values, values[1:])]
    if all(d == 0 for d in diffs):
        return "constant"
    if all(d > 0 for d in diffs):
        return "increasing"
    if all(d < 0 for d in diffs):
        return "decreasing"
    return "mixed"
