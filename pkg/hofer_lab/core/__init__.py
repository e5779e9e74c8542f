"""Core hofer-lab functionality."""

from .errors import ConfigurationError, DomainError, IntegrationError, LabError, PrecisionError, ScheduleError
from .phase_space import (
    ANNULUS,
    PLANE,
    SPHERE,
    Atlas,
    AtlasSpec,
    Manifold,
    ManifoldKind,
    Point,
    atlas_constants,
    build_atlas,
    inequality_constants,
    riemannian_distance,
)
from .hamiltonians import (
    ActionHamiltonian,
    AmplitudeProfile,
    BandHamiltonian,
    BumpHamiltonian,
    ConjugatorHamiltonian,
    HamiltonianSpec,
    QuadraticHamiltonian,
    ScheduledHamiltonian,
    SumHamiltonian,
)
from .maps import (
    IDENTITY,
    Compose,
    HamFlow,
    Inverse,
    Iterate,
    Linear,
    MapExpr,
    Rotation,
    Twist,
    conjugate,
    evaluate,
    jacobian,
    symplecticity_defect,
)
from .sweep import configure_workers
from .norms import (
    c0_distance,
    check_holder_inequality,
    derivative_norm,
    displacement_energy_bounds,
    gamma_exact_small,
    hofer_bound,
    hofer_rotation_bound,
    hofer_small_rotation,
    hofer_upper,
    nondisplacement_witness,
)
from .diophantine import (
    ContinuedFraction,
    GrowthSchedule,
    QuadraticIrrational,
    TorusVector,
    cf_expand,
    construct_exp_liouville,
    discrepancy_bound,
    equidistribution_density,
    exp_bounds,
    exp_liouville_witnesses,
    is_rational_within,
    torus_norm,
    verify_certificate,
)
from .ak_forge import (
    AKApproximant,
    AKBuildResult,
    AKSchedule,
    AKStage,
    ConjugatorSpec,
    ak_build,
    ak_next_alpha,
    commutation_check,
    plan_schedule,
)
from .experiments import (
    MapFamily,
    RecurrenceSet,
    columns_converge,
    entropy_slope,
    fast_convergence_check,
    hofer_convergence_diagnostic,
    inequality_harness,
    lab_constants,
    recurrence_experiment,
    recurrence_pairs,
    rigidity_scan,
    rotation_dichotomy,
)
from .models import (
    # Parameters
    GridSpec,
    IntegratorParams,
    # Estimates
    NormEstimate,
    SpectralEstimate,
    HoferRotationBound,
    DisplacementBounds,
    WitnessResult,
    HolderCheck,
    # Constants
    AtlasConstants,
    InequalityConstants,
    # Diophantine records
    LiouvilleWitness,
    LiouvilleCertificate,
    # Reports
    RigidityRow,
    RigidityReport,
    RecurrenceReport,
    HarnessSample,
    HarnessReport,
    EntropyFit,
    HoferConvergenceRow,
    FastConvergenceRow,
    FastConvergenceReport,
    DichotomyReport,
    AKStageDiagnostics,
)

__all__ = [
    # Errors
    "LabError",
    "DomainError",
    "ConfigurationError",
    "IntegrationError",
    "ScheduleError",
    "PrecisionError",
    # Phase space
    "ANNULUS",
    "SPHERE",
    "PLANE",
    "Manifold",
    "ManifoldKind",
    "Point",
    "Atlas",
    "AtlasSpec",
    "build_atlas",
    "atlas_constants",
    "inequality_constants",
    "riemannian_distance",
    # Hamiltonians
    "HamiltonianSpec",
    "ActionHamiltonian",
    "AmplitudeProfile",
    "ConjugatorHamiltonian",
    "BumpHamiltonian",
    "BandHamiltonian",
    "QuadraticHamiltonian",
    "SumHamiltonian",
    "ScheduledHamiltonian",
    # Maps
    "MapExpr",
    "IDENTITY",
    "Rotation",
    "HamFlow",
    "Twist",
    "Linear",
    "Compose",
    "Inverse",
    "Iterate",
    "conjugate",
    "evaluate",
    "jacobian",
    "symplecticity_defect",
    "configure_workers",
    # Norms
    "c0_distance",
    "derivative_norm",
    "hofer_upper",
    "hofer_bound",
    "hofer_rotation_bound",
    "hofer_small_rotation",
    "gamma_exact_small",
    "displacement_energy_bounds",
    "nondisplacement_witness",
    "check_holder_inequality",
    # Diophantine
    "ContinuedFraction",
    "GrowthSchedule",
    "QuadraticIrrational",
    "TorusVector",
    "cf_expand",
    "construct_exp_liouville",
    "exp_bounds",
    "exp_liouville_witnesses",
    "verify_certificate",
    "torus_norm",
    "equidistribution_density",
    "discrepancy_bound",
    "is_rational_within",
    # Anosov-Katok
    "AKStage",
    "AKSchedule",
    "AKApproximant",
    "AKBuildResult",
    "ConjugatorSpec",
    "ak_next_alpha",
    "ak_build",
    "commutation_check",
    "plan_schedule",
    # Experiments
    "MapFamily",
    "RecurrenceSet",
    "lab_constants",
    "inequality_harness",
    "rigidity_scan",
    "recurrence_experiment",
    "recurrence_pairs",
    "entropy_slope",
    "hofer_convergence_diagnostic",
    "columns_converge",
    "fast_convergence_check",
    "rotation_dichotomy",
    # Models - Parameters
    "GridSpec",
    "IntegratorParams",
    # Models - Estimates
    "NormEstimate",
    "SpectralEstimate",
    "HoferRotationBound",
    "DisplacementBounds",
    "WitnessResult",
    "HolderCheck",
    # Models - Constants
    "AtlasConstants",
    "InequalityConstants",
    # Models - Diophantine
    "LiouvilleWitness",
    "LiouvilleCertificate",
    # Models - Reports
    "RigidityRow",
    "RigidityReport",
    "RecurrenceReport",
    "HarnessSample",
    "HarnessReport",
    "EntropyFit",
    "HoferConvergenceRow",
    "FastConvergenceRow",
    "FastConvergenceReport",
    "DichotomyReport",
    "AKStageDiagnostics",
]
