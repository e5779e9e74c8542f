"""Pydantic models for type-safe lab records and reports."""

import math
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    WithJsonSchema,
    field_validator,
    model_validator,
)
from typing_extensions import Annotated


def to_fraction(value: Any) -> Fraction:
    """Convert config input to an exact rational.

    Floats go through their shortest decimal repr so that 0.1 means 1/10.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rational numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not a finite number: {value}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational literal: {value!r}") from e
    raise ValueError(f"cannot interpret {type(value).__name__} as a rational number")


def fraction_to_str(value: Fraction) -> str:
    """Render a rational as 'p/q' (or 'p' for integers)."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


ExactRational = Annotated[
    Fraction,
    PlainValidator(to_fraction),
    PlainSerializer(fraction_to_str, return_type=str),
    WithJsonSchema({"type": "string", "description": "rational literal such as '3/7' or '0.25'"}),
]


class LabModel(BaseModel):
    """Base for immutable lab records: unknown keys are rejected."""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)


# ============================================================================
# Sampling and Integration Parameters
# ============================================================================


class GridSpec(LabModel):
    """Sample counts per coordinate plus the number of nested refinement levels."""

    counts: Tuple[int, int] = Field(
        default=(64, 65), description="Samples per coordinate (annulus θ×I, sphere z×φ, plane x×y)"
    )
    levels: int = Field(
        default=1, ge=1, le=6, description="Refinement levels; level j doubles the coarse mesh j times"
    )

    @field_validator("counts")
    @classmethod
    def _counts_at_least_two(cls, counts: Tuple[int, int]) -> Tuple[int, int]:
        if any(c < 2 for c in counts):
            raise ValueError(f"all grid counts must be >= 2, got {counts}")
        return counts

    @classmethod
    def parse(cls, text: str, levels: int = 1) -> "GridSpec":
        """Parse the command-line form 'NxM'."""
        try:
            first, second = text.lower().split("x")
            return cls(counts=(int(first), int(second)), levels=levels)
        except ValueError as e:
            raise ValueError(f"grid must look like 'NxM', got {text!r}") from e


class IntegratorParams(LabModel):
    """Implicit midpoint settings."""

    step: float = Field(default=1e-2, gt=0.0, le=1e-2, description="Time step")
    scheme: Literal["implicit-midpoint"] = Field(default="implicit-midpoint")
    tolerance: float = Field(default=1e-13, gt=0.0, le=1e-12, description="Fixed-point tolerance")
    max_iterations: int = Field(default=60, ge=2, description="Fixed-point iteration cap per step")


# ============================================================================
# Norm Estimates
# ============================================================================


class NormEstimate(LabModel):
    """A certified interval for a norm, with the method that produced it."""

    quantity: str = Field(default="", description="What was estimated")
    lower: float = Field(..., ge=0.0, description="Lower estimate")
    upper: float = Field(..., description="Upper estimate (may be +inf without a certificate)")
    method: str = Field(..., description="Method tag")
    mesh: float = Field(default=0.0, ge=0.0, description="Covering radius of the sample grid")
    lipschitz: Optional[float] = Field(default=None, description="Lipschitz bound used, if any")

    @model_validator(mode="after")
    def _ordered(self) -> "NormEstimate":
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        return self

    @property
    def margin(self) -> float:
        return self.upper - self.lower

    def named(self, quantity: str) -> "NormEstimate":
        return self.model_copy(update={"quantity": quantity})


class SpectralEstimate(LabModel):
    """Value returned by the C²-small spectral norm evaluation."""

    value: float = Field(..., ge=0.0, description="osc(H) when exact, else a Hofer upper bound")
    exact: bool = Field(..., description="True when the C²-smallness policy was met")
    hessian_sup: float = Field(..., ge=0.0, description="Sampled sup of the Hessian norm")
    threshold: float = Field(..., gt=0.0, description="Smallness threshold used")
    method: str = Field(...)


class HoferRotationBound(LabModel):
    """Hofer bounds for a rotation of the torus action."""

    tight: float = Field(..., ge=0.0, description="Σ |α_i|·osc(H_i)")
    stated: float = Field(..., ge=0.0, description="2k·‖α‖·max ‖H_i‖_∞")
    k: int


class DisplacementBounds(LabModel):
    """Energy-capacity lower bound and an explicit displacing upper bound."""

    lower: float = Field(..., ge=0.0)
    upper: float = Field(..., ge=0.0)
    radius: float = Field(..., ge=0.0)
    hamiltonian: Optional[Dict[str, Any]] = Field(default=None, description="Displacing Hamiltonian")
    method: str = Field(...)


class WitnessResult(LabModel):
    """Outcome of the non-displacement search (NotFound is a search failure, not a disproof)."""

    found: bool
    witness: Optional[Tuple[float, ...]] = None
    preimage_distance: float = Field(..., description="Smallest d(f⁻¹(y), x) seen over the search")
    radius: float
    samples: int
    mesh: float


class HolderCheck(LabModel):
    """Report of a single Hölder-type inequality check."""

    lhs_lower: float
    rhs: float
    gamma_ub: float
    bound_kind: Literal["gamma", "hofer"] = "gamma"
    constant: float
    refined: bool = False
    c0: NormEstimate
    derivative: NormEstimate
    chain_rhs: Optional[float] = Field(default=None, description="4L·sqrt(γ/π)·(1+‖Dφ‖) when L is known")
    regime: Literal["local", "global", "unknown"] = "unknown"
    violation: bool
    slack_ratio: float = Field(..., description="rhs / lhs_lower (inf when lhs is 0)")


# ============================================================================
# Phase Space Constants
# ============================================================================


class AtlasConstants(LabModel):
    """Sampled Darboux atlas constants."""

    epsilon: float = Field(..., gt=0.0)
    lipschitz_L: float = Field(..., ge=1.0)
    mesh: float = Field(..., ge=0.0, description="Chart-coordinate spacing used")
    boundary_samples: int


class InequalityConstants(LabModel):
    """δ and C of the inequality, with the diameter adjustment recorded."""

    delta: float = Field(..., gt=0.0)
    C: float = Field(..., gt=0.0)
    C_local: float = Field(..., gt=0.0, description="8L/sqrt(π) before the diameter adjustment")
    diameter: Optional[float] = None
    raised: bool = False


# ============================================================================
# Diophantine Records
# ============================================================================


class LiouvilleWitness(LabModel):
    """One certified k with 0 < ‖kα‖ < e^{-ck}."""

    k: int
    dist_num: int = Field(..., description="‖kα‖ ≤ dist_num / 2^dist_den_log2")
    dist_den_log2: int
    bound_log: float = Field(..., description="log of the bound, i.e. -c·k")


class LiouvilleCertificate(LabModel):
    """Certified exponential-Liouville witnesses for a rotation number."""

    c: ExactRational
    k_max: int
    witnesses: List[LiouvilleWitness] = Field(default_factory=list)
    undecided: List[int] = Field(default_factory=list, description="Candidates exact arithmetic could not settle")
    scan: str = Field(default="convergents+full", description="Candidate set description")

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "c": fraction_to_str(self.c),
            "k_max": self.k_max,
            "witnesses": [w.model_dump() for w in self.witnesses],
            "undecided": list(self.undecided),
            "scan": self.scan,
        }


# ============================================================================
# Experiment Rows and Reports
# ============================================================================


class RigidityRow(LabModel):
    """One iterate of a rigidity scan."""

    n: int
    torus_dist_lo: ExactRational
    torus_dist_hi: ExactRational
    hofer_ub: float
    c0: NormEstimate
    deriv: NormEstimate
    holder_rhs: float
    exp_envelope: Optional[float] = Field(default=None, description="None when the premise c > log‖Dφ‖ fails")
    exp_chain_ok: Optional[bool] = Field(default=None, description="hofer_ub ≤ 2k‖μ‖e^{-c_n q_n}, when a schedule is known")

    @property
    def holder_ok(self) -> bool:
        return self.c0.lower <= self.holder_rhs


class RecurrenceReport(LabModel):
    """Measured return density against the recurrence lower bound."""

    alpha: str
    set_descriptor: str
    N: int
    density: float
    threshold: float = Field(..., description="C''·e_lower(A)")
    e_lower: float
    bound: float
    C_double_prime: float
    C_prime: float
    d: int
    slack: float
    policy: str
    passed: bool


class HarnessSample(LabModel):
    """One sample of the inequality harness."""

    index: int
    gamma_ub: float
    check: HolderCheck
    witness_radius: Optional[float] = None
    witness_found: Optional[bool] = None


class HarnessReport(LabModel):
    """Inequality harness summary."""

    family: str
    count: int
    seed: int
    delta: float
    C: float
    violations: int
    min_slack_ratio: float
    witness_attempts: int
    witness_successes: int
    samples: List[HarnessSample] = Field(default_factory=list)
    partial: bool = False


class EntropyFit(LabModel):
    """Least-squares growth slope of log‖Dfⁿ‖ and the resulting entropy bound."""

    slope: float
    bound: float
    n_used: Tuple[int, int]
    log_norms: List[float]
    partial: bool = False


class HoferConvergenceRow(LabModel):
    """|bound(jα_m) - bound(jα)| for one (m, j)."""

    m: int
    j: int
    difference: float
    lipschitz_bound: float
    within_bound: bool


class FastConvergenceRow(LabModel):
    """sqrt(bound)·‖Dφ‖ next to the measured C⁰ distance for one map of a sequence."""

    index: int
    bound: float
    derivative: NormEstimate
    product: float
    c0: NormEstimate


class DichotomyReport(LabModel):
    """Rationality checks for a pair of rotation-number candidates."""

    alpha: str
    alpha_prime: str
    difference_rational: Optional[str] = None
    sum_rational: Optional[str] = None
    alpha_rational: Optional[str] = None
    alpha_prime_rational: Optional[str] = None
    q_max: int
    tol: float

    @property
    def dichotomy_holds(self) -> bool:
        return self.difference_rational is not None or self.sum_rational is not None

    @property
    def has_irrational_coordinate(self) -> bool:
        return self.alpha_rational is None or self.alpha_prime_rational is None


class AKStageDiagnostics(LabModel):
    """Per-stage measurements of the Anosov-Katok scheme."""

    stage: int
    q: int
    alpha: ExactRational
    c0_gap: NormEstimate
    c1_gap: float
    commutation_residual: float
    consistency_residual: Optional[float] = None
    collar_residual: float = Field(default=0.0, description="Largest displacement of h_m on the boundary collars")
    deriv_h: NormEstimate
    tolerance: float
    accepted: bool
    note: str = ""


class RigidityReport(LabModel):
    """Rows of a rigidity scan with the sequence-level checks."""

    rows: List[RigidityRow] = Field(default_factory=list)
    alpha_representative: str = Field(..., description="Exact rational used for the rotation part")
    studies_approximant: bool = Field(default=False, description="True when α is a finite-stage rational")
    c: Optional[ExactRational] = None
    hofer_decreasing: bool
    c0_decreasing: bool
    holder_ok: bool
    envelope_ok: Optional[bool] = None
    chain_ok: Optional[bool] = None


class FastConvergenceReport(LabModel):
    rows: List[FastConvergenceRow] = Field(default_factory=list)
    product_decays: bool
    c0_follows: bool
