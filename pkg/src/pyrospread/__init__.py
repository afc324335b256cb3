"""Physics-driven fire-spread prior masks and evaluation metrics."""

from .errors import (
    BadHeader,
    BadMagic,
    BadRange,
    CflViolation,
    EmptyInput,
    EmptyVector,
    FireModelError,
    FormatError,
    GridTooSmall,
    ManifestMismatch,
    MissingComponent,
    MissingManifest,
    NegativeFuel,
    NoPositives,
    NonBinaryPixel,
    NonFinite,
    SpecMismatch,
    SpecMismatchAcrossFrames,
    TooFewFrames,
    TruncatedPayload,
    UnknownKind,
    ValidationError,
    WindFrameCountMismatch,
)
from .fields import (
    GridSpec,
    MaskFrame,
    MaskSequence,
    ScalarField,
    VectorField,
    field_from_mask,
    field_map2,
    mask_from_field,
)
from .pde import (
    PhysicalParams,
    advection,
    diffusion,
    gradient,
    reaction_rate,
    source_term,
)
from .simulator import (
    Environment,
    Scenario,
    SimConfig,
    SimState,
    gated_source,
    physical_source,
    run_prior,
    run_simulation,
    step,
    synth_scenario,
)
from .source_fit import (
    FitReport,
    SimplexWeights,
    estimate_observed_source,
    estimate_observed_source_series,
    fit_source_weights,
    project_simplex,
)

__version__ = "0.1.0"
