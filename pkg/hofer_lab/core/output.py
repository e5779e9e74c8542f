"""CSV tables with `#` metadata headers and JSON summaries.

Column schemas are fixed per experiment; floats are written with 17 significant digits
and nothing time-dependent enters a file, so identical inputs give identical bytes.
"""

import csv
import hashlib
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from pydantic import Field

from .ak_forge import AKBuildResult
from .models import (
    AtlasConstants,
    EntropyFit,
    HarnessReport,
    HoferConvergenceRow,
    InequalityConstants,
    LabModel,
    LiouvilleCertificate,
    NormEstimate,
    RecurrenceReport,
    RigidityReport,
    fraction_to_str,
)

logger = logging.getLogger(__name__)

CONSTANTS_COLUMNS = ["manifold", "epsilon", "L", "delta", "C", "C_local", "diameter", "raised"]
HARNESS_COLUMNS = [
    "index", "gamma_ub", "bound_kind", "lhs_lower", "rhs", "slack_ratio", "deriv_upper",
    "c0_method", "regime", "chain_rhs", "violation", "witness_radius", "witness_found",
]
RIGIDITY_COLUMNS = [
    "n", "torus_dist_lo", "torus_dist_hi", "hofer_ub", "c0_lower", "c0_upper", "c0_method",
    "deriv_lower", "deriv_upper", "holder_rhs", "exp_envelope", "exp_chain_ok",
]
AK_COLUMNS = [
    "stage", "q", "alpha", "tolerance", "c0_gap_lower", "c0_gap_upper", "c1_gap",
    "commutation_residual", "consistency_residual", "collar_residual", "deriv_h_upper", "accepted", "note",
]
RECURRENCE_COLUMNS = [
    "alpha", "set", "N", "density", "threshold", "e_lower", "bound", "C_double_prime",
    "C_prime", "d", "slack", "policy", "passed",
]
ENTROPY_COLUMNS = ["n", "log_norm", "in_fit"]
CONVERGENCE_COLUMNS = ["m", "j", "difference", "lipschitz_bound", "within_bound"]
LIOUVILLE_COLUMNS = ["k", "dist_num", "dist_den_log2", "bound_log"]
NORM_COLUMNS = ["quantity", "lower", "upper", "method", "mesh"]


class RunMetadata(LabModel):
    """What a CSV header records about the run that produced it."""

    command: str
    config_sha256: str
    seed: int = 0
    grid: str = ""
    meshes: List[float] = Field(default_factory=list)
    tolerance_policy: str = ""


def config_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_cell(value: Any) -> str:
    """CSV rendering: 17 significant digits for floats, p/q for rationals, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if isinstance(value, Fraction):
        return fraction_to_str(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]], metadata: RunMetadata) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(f"# command: {metadata.command}\n")
        handle.write(f"# config_sha256: {metadata.config_sha256}\n")
        handle.write(f"# seed: {metadata.seed}\n")
        handle.write(f"# grid: {metadata.grid}\n")
        handle.write(f"# meshes: {' '.join(format_cell(m) for m in metadata.meshes)}\n")
        handle.write(f"# tolerance_policy: {metadata.tolerance_policy}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} cells for {len(columns)} columns")
            writer.writerow([format_cell(cell) for cell in row])
    logger.info("wrote %s", path)
    return path


def write_summary(path: Path, summary: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=format_cell) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


# ============================================================================
# Row Extractors
# ============================================================================


def constants_rows(manifold: str, sampled: AtlasConstants, constants: InequalityConstants) -> List[List[Any]]:
    return [
        [
            manifold, sampled.epsilon, sampled.lipschitz_L, constants.delta, constants.C,
            constants.C_local, constants.diameter, constants.raised,
        ]
    ]


def harness_rows(report: HarnessReport) -> List[List[Any]]:
    return [
        [
            s.index, s.gamma_ub, s.check.bound_kind, s.check.lhs_lower, s.check.rhs, s.check.slack_ratio,
            s.check.derivative.upper, s.check.c0.method, s.check.regime, s.check.chain_rhs,
            s.check.violation, s.witness_radius, s.witness_found,
        ]
        for s in report.samples
    ]


def rigidity_rows(report: RigidityReport) -> List[List[Any]]:
    return [
        [
            r.n, r.torus_dist_lo, r.torus_dist_hi, r.hofer_ub, r.c0.lower, r.c0.upper, r.c0.method,
            r.deriv.lower, r.deriv.upper, r.holder_rhs, r.exp_envelope, r.exp_chain_ok,
        ]
        for r in report.rows
    ]


def ak_rows(result: AKBuildResult) -> List[List[Any]]:
    rows = []
    for approximant in result.approximants:
        d = approximant.diagnostics
        rows.append(
            [
                d.stage, d.q, d.alpha, d.tolerance, d.c0_gap.lower, d.c0_gap.upper, d.c1_gap,
                d.commutation_residual, d.consistency_residual, d.collar_residual, d.deriv_h.upper,
                d.accepted, d.note,
            ]
        )
    return rows


def recurrence_rows(reports: Sequence[RecurrenceReport]) -> List[List[Any]]:
    return [
        [
            r.alpha, r.set_descriptor, r.N, r.density, r.threshold, r.e_lower, r.bound,
            r.C_double_prime, r.C_prime, r.d, r.slack, r.policy, r.passed,
        ]
        for r in reports
    ]


def entropy_rows(fit: EntropyFit) -> List[List[Any]]:
    start, end = fit.n_used
    return [[n, value, start <= n <= end] for n, value in enumerate(fit.log_norms, start=1)]


def convergence_rows(rows: Sequence[HoferConvergenceRow]) -> List[List[Any]]:
    return [[r.m, r.j, r.difference, r.lipschitz_bound, r.within_bound] for r in rows]


def liouville_rows(certificate: LiouvilleCertificate) -> List[List[Any]]:
    return [[w.k, w.dist_num, w.dist_den_log2, w.bound_log] for w in certificate.witnesses]


def norm_rows(estimates: Iterable[NormEstimate]) -> List[List[Any]]:
    return [[e.quantity, e.lower, e.upper, e.method, e.mesh] for e in estimates]


def harness_estimates(report: HarnessReport) -> List[NormEstimate]:
    """c0 and derivative estimates of every harness sample, labelled by sample index."""
    estimates = []
    for s in report.samples:
        estimates.append(s.check.c0.named(f"c0[{s.index}]"))
        estimates.append(s.check.derivative.named(f"deriv[{s.index}]"))
    return estimates


def rigidity_estimates(report: RigidityReport) -> List[NormEstimate]:
    """c0 and derivative estimates of every iterate, labelled by n."""
    estimates = []
    for r in report.rows:
        estimates.append(r.c0.named(f"c0[n={r.n}]"))
        estimates.append(r.deriv.named(f"deriv[n={r.n}]"))
    return estimates
