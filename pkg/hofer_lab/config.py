"""Configuration management for hofer-lab."""

import json
import os
from fractions import Fraction
from pathlib import Path
from typing import List, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError
from typing_extensions import Annotated

from .core.ak_forge import AKSchedule
from .core.diophantine import (
    ContinuedFraction,
    GrowthSchedule,
    PeriodicRule,
    QuadraticIrrational,
    cf_expand,
    construct_exp_liouville,
)
from .core.errors import ConfigurationError
from .core.experiments import MapFamily, RecurrenceSet
from .core.maps import IDENTITY, MapExpr
from .core.models import ExactRational, GridSpec, IntegratorParams, LabModel
from .core.phase_space import ANNULUS, AtlasSpec, Manifold

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class LabSettings(BaseModel):
    """Runtime settings shared by every subcommand."""

    out_dir: str = Field("results", description="Default output directory")
    threads: int = Field(1, ge=1, description="Default sweep worker count")
    log_level: str = Field("WARNING", description="Default log level")

    @classmethod
    def from_env(cls) -> "LabSettings":
        """Load settings from environment variables."""
        # Try to load from .env file if it exists
        load_dotenv()

        out_dir = os.getenv("HOFER_LAB_OUT_DIR", "results")
        threads = os.getenv("HOFER_LAB_THREADS", "1")
        log_level = os.getenv("HOFER_LAB_LOG_LEVEL", "WARNING").upper()

        if log_level not in LOG_LEVELS:
            raise ConfigurationError(f"HOFER_LAB_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {log_level!r}")
        try:
            return cls(out_dir=out_dir, threads=int(threads), log_level=log_level)
        except (ValueError, ValidationError) as e:
            raise ConfigurationError(f"Invalid HOFER_LAB_THREADS value {threads!r}: {e}") from e


def get_lab_settings() -> LabSettings:
    """Get runtime settings from environment."""
    return LabSettings.from_env()


# ============================================================================
# Rotation Numbers
# ============================================================================


class RationalAlpha(LabModel):
    kind: Literal["rational"] = "rational"
    value: ExactRational

    def build(self) -> Fraction:
        return self.value


class QuadraticAlpha(LabModel):
    """(P + sqrt(D))/Q; `golden` fills in the golden-ratio conjugate."""

    kind: Literal["quadratic"] = "quadratic"
    number: QuadraticIrrational = Field(default_factory=QuadraticIrrational.golden)
    depth: int = Field(default=48, ge=1)

    def build(self) -> ContinuedFraction:
        return cf_expand(self.number, depth=self.depth)


class PeriodicAlpha(LabModel):
    kind: Literal["periodic"] = "periodic"
    prefix: List[int] = Field(default_factory=lambda: [0])
    period: List[int] = Field(..., min_length=1)

    def build(self) -> ContinuedFraction:
        return ContinuedFraction(self.prefix, PeriodicRule(period=self.period))


class ExpLiouvilleAlpha(LabModel):
    kind: Literal["exp-liouville"] = "exp-liouville"
    schedule: str = "c_n=n"
    stages: int = Field(default=4, ge=0)
    prefix: List[int] = Field(default_factory=lambda: [0, 2])

    @property
    def growth(self) -> GrowthSchedule:
        return GrowthSchedule.parse(self.schedule)

    def build(self) -> ContinuedFraction:
        return construct_exp_liouville(self.growth, self.stages, self.prefix)


AlphaSpec = Annotated[
    Union[RationalAlpha, QuadraticAlpha, PeriodicAlpha, ExpLiouvilleAlpha],
    Field(discriminator="kind"),
]


# ============================================================================
# Experiment Sections
# ============================================================================


class HarnessSection(LabModel):
    family: MapFamily = Field(default_factory=MapFamily)
    count: int = Field(default=200, ge=0)


class RigiditySection(LabModel):
    conjugator: MapExpr = Field(default=IDENTITY, description="h in h⁻¹∘R_α∘h")
    alpha: AlphaSpec = Field(default_factory=QuadraticAlpha)
    approximant_stage: Optional[int] = Field(default=None, ge=1, description="Scan an AK approximant instead")
    c: Optional[ExactRational] = None
    q_limit: Optional[int] = Field(default=None, ge=1)
    iterates: Optional[List[int]] = None


class AKSection(LabModel):
    stages: int = Field(default=4, ge=1)
    base_peak: float = Field(default=0.05, gt=0.0)
    schedule: Optional[AKSchedule] = Field(default=None, description="Explicit schedule; planned when omitted")


class RecurrenceSection(LabModel):
    alpha: AlphaSpec = Field(default_factory=QuadraticAlpha)
    region: RecurrenceSet = Field(default_factory=RecurrenceSet)
    N: int = Field(default=100_000, ge=1)
    pairs: int = Field(default=0, ge=0, description="Extra seeded (α, r) pairs")
    pairs_N: int = Field(default=10_000, ge=1)


class EntropySection(LabModel):
    map: MapExpr
    n_max: int = Field(default=64, ge=8)
    max_slope: Optional[float] = Field(default=None, description="Invariant: fail when the slope exceeds this")


class DiophantineSection(LabModel):
    alpha: AlphaSpec = Field(default_factory=ExpLiouvilleAlpha)
    c: ExactRational = Fraction(1)
    k_max: int = Field(default=10_000, ge=1)
    expect_witness: bool = True


class ConvergenceSection(LabModel):
    alpha: AlphaSpec = Field(default_factory=QuadraticAlpha)
    terms: int = Field(default=12, ge=1, description="Number of convergents α_m")
    j_list: List[int] = Field(default_factory=lambda: [1, 5])


class ExperimentConfig(LabModel):
    """A JSON experiment config; unknown keys are rejected everywhere."""

    manifold: Manifold = ANNULUS
    atlas: AtlasSpec = Field(default_factory=AtlasSpec)
    grid: GridSpec = Field(default_factory=lambda: GridSpec(counts=(32, 17), levels=2))
    integrator: IntegratorParams = Field(default_factory=IntegratorParams)
    seed: int = 0
    output_dir: Optional[str] = None
    harness: Optional[HarnessSection] = None
    rigidity: Optional[RigiditySection] = None
    ak: Optional[AKSection] = None
    recurrence: Optional[RecurrenceSection] = None
    entropy: Optional[EntropySection] = None
    diophantine: Optional[DiophantineSection] = None
    convergence: Optional[ConvergenceSection] = None


def load_experiment_config(path: Union[str, Path, None]) -> ExperimentConfig:
    """Read and validate a JSON experiment config (defaults when path is None).

    Raises:
        ConfigurationError: If the file is missing, not JSON, or fails validation
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config {path} is not valid JSON: {e}") from e
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(
            f"config {path} failed validation",
            {"errors": json.loads(e.json(include_url=False))},
        ) from e
