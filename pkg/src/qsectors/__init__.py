"""Sector structure of infinite tensor products, computably.

States are a finite prefix of explicit factors plus a symbolic tail rule;
everything downstream (product convergence, sector tests, truncated
overlaps, operator sweeps, decoherence horizons) works off that finite
description and reports verdicts with re-checkable certificates.
"""

from .decoherence import (
    MeasurementModel,
    TruncatedDensityMatrix,
    collapse,
    decoherence_horizon,
    premeasurement_state,
    sample_outcome,
    sample_outcomes,
    truncated_density,
)
from .errors import (
    DimensionBudgetExceeded,
    InconclusiveSector,
    IndexOutOfRange,
    InvalidAmplitude,
    IoError,
    NonFactorizableGenerator,
    NonHermitianGenerator,
    NonIntegralFraction,
    NotQuasiConvergent,
    PreconditionViolated,
    QsectorsError,
    ShapeMismatch,
    UndeclaredTailClass,
    UsageError,
    ZeroNormFactor,
)
from .operators import (
    ConstantOperatorTail,
    EvolutionResult,
    FactoredOperator,
    FactorOperator,
    IdentityTail,
    OperatorTerm,
    SectorActionVerdict,
    apply_operator,
    evolve,
    expectation_sweep,
    identity_operator,
    sector_action,
)
from .overlaps import (
    OverlapSweep,
    asymptotic_overlap,
    composite_overlap,
    overlap_sweep,
    truncated_overlap,
)
from .products import (
    ClosedFormTail,
    ComplexSequenceSpec,
    ConstantValue,
    ConvergenceVerdict,
    ProductDiagnostics,
    classify_product,
    quasi_convergence_value,
)
from .scenarios import (
    CascadeResult,
    CascadeSpec,
    CascadeStage,
    SpinChainScenario,
    StageSpec,
    build_spin_pair,
    cascade_stage_report,
    default_cascade,
    run_cascade,
)
from .sectors import (
    SectorVerdict,
    SequenceClass,
    apply_finite_change,
    classify_sequence,
    normed_representative,
    same_sector,
)
from .states import (
    CompositeState,
    ConstantTail,
    DecaySpec,
    FactorVector,
    ParametricTail,
    ProductState,
    basis_vector,
    distance,
    ensure_same_shape,
    factor_overlap,
    make_product_state,
    shapes_match,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # states
    "FactorVector",
    "basis_vector",
    "factor_overlap",
    "DecaySpec",
    "ConstantTail",
    "ParametricTail",
    "ProductState",
    "CompositeState",
    "make_product_state",
    "shapes_match",
    "ensure_same_shape",
    "distance",
    # products
    "ConstantValue",
    "ClosedFormTail",
    "ComplexSequenceSpec",
    "ProductDiagnostics",
    "ConvergenceVerdict",
    "classify_product",
    "quasi_convergence_value",
    # sectors
    "SequenceClass",
    "SectorVerdict",
    "classify_sequence",
    "same_sector",
    "normed_representative",
    "apply_finite_change",
    # overlaps
    "OverlapSweep",
    "truncated_overlap",
    "composite_overlap",
    "overlap_sweep",
    "asymptotic_overlap",
    # operators
    "FactorOperator",
    "identity_operator",
    "IdentityTail",
    "ConstantOperatorTail",
    "OperatorTerm",
    "FactoredOperator",
    "SectorActionVerdict",
    "EvolutionResult",
    "apply_operator",
    "sector_action",
    "expectation_sweep",
    "evolve",
    # decoherence
    "MeasurementModel",
    "TruncatedDensityMatrix",
    "premeasurement_state",
    "truncated_density",
    "decoherence_horizon",
    "sample_outcome",
    "sample_outcomes",
    "collapse",
    # scenarios
    "SpinChainScenario",
    "build_spin_pair",
    "StageSpec",
    "CascadeSpec",
    "CascadeStage",
    "CascadeResult",
    "default_cascade",
    "run_cascade",
    "cascade_stage_report",
    # errors
    "QsectorsError",
    "ShapeMismatch",
    "InvalidAmplitude",
    "UndeclaredTailClass",
    "NotQuasiConvergent",
    "PreconditionViolated",
    "ZeroNormFactor",
    "InconclusiveSector",
    "NonHermitianGenerator",
    "NonFactorizableGenerator",
    "IndexOutOfRange",
    "DimensionBudgetExceeded",
    "NonIntegralFraction",
    "UsageError",
    "IoError",
]
