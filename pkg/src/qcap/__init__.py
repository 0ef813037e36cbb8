"""Desk-scale numerics for quantum channel information quantities.

The package covers labeled tensor spaces and states, channels in Kraus form,
coherent/Holevo/generalized information, Koashi-Imoto decompositions of
bipartite states, finite-level classical/quantum trade-off curves, the
generalized capacity with block planning, variational converse estimators,
and strong-typicality utilities.  See the README for a tour.
"""
from .spaces import TensorSpace
from .states import (
    DensityMatrix,
    PureState,
    basis_state,
    conditional_entropy,
    entropy,
    fidelity,
    maximally_entangled,
    maximally_mixed,
    mutual_information,
    partial_trace,
    permute_subsystems,
    purify,
    tensor,
    trace_distance,
)
from .channels import (
    QuantumChannel,
    amplitude_damping_channel,
    apply_channel,
    channel_from_name,
    channel_power,
    compose,
    dephasing_channel,
    depolarizing_channel,
    erasure_channel,
    identity_channel,
    stinespring,
    tensor_channels,
)
from .errors import (
    DimensionMismatchError,
    LabelCollisionError,
    NumericalFailureError,
    QcapError,
    ResourceLimitError,
    UnknownLabelError,
    ValidationError,
)
from .information import (
    CQEnsemble,
    GeneralizedInfo,
    coherent_information,
    generalized_information,
    holevo_information,
)
from .sampling import (
    random_channel,
    random_isometry,
    random_pure,
    random_state,
    random_unitary,
    seed_rng,
)
from .ki import (
    KIBlock,
    KIDecomposition,
    ki_decompose,
    ki_state,
    reverse_ki_channel,
)
from .tradeoff import (
    CurvePoint,
    OptimizerOptions,
    TradeoffCurve,
    compute_curve,
    default_t_grid,
    evaluate_point,
    optimize_scalarized,
    validate_envelope,
)
from .capacity import (
    BlockPlan,
    CapacityReport,
    Slope,
    capacity_from_curve,
    generalized_capacity,
    intersect,
    plan_block,
    slope_of,
)
from .converse import (
    ConverseOptions,
    ExtendedSource,
    GadgetEstimate,
    estimate_W,
    estimate_Y,
    evaluate_isometry,
    extend_source,
    gadget_grid,
)
from .typicality import (
    ProjectedSource,
    TypicalSpec,
    conditional_typical_count,
    conditional_typical_mass,
    conditional_typical_projector,
    dimension_constant,
    enumerate_typical,
    is_conditionally_typical,
    is_typical,
    project_and_renormalize,
    sample_typical_fraction,
    typical_count,
    typical_mass,
    typical_projector,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
