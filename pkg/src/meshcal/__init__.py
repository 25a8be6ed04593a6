"""Reconstruction of programmable multiport interferometer models."""

from .bench import (
    BenchmarkReport,
    CampaignSpec,
    GridPoint,
    TrialOutcome,
    delta_t_max,
    fidelity_percentile,
    output_phase_fidelity,
    run_campaign,
    transfer_fidelity,
)
from .errors import (
    BranchCut,
    CombinationDivergence,
    DimensionMismatch,
    DisconnectedSupport,
    IndexOutOfRange,
    PlanMismatch,
    RankDeficient,
    ReconstructionError,
    SortingAmbiguity,
    ValidationError,
    ZeroFirstColumnEntry,
    ZeroMatrix,
)
from .linalg import (
    circular_distance,
    matrix_geometric_mean,
    phase_sorted_eigencolumns,
    principal_sqrt,
    project_unitary,
    rank1_phase_factor,
)
from .model import (
    InterferometerModel,
    cumulative_matrix,
    load_model,
    random_model,
    save_model,
    standard_mixer,
    transfer_matrix,
)
from .reconstruct import (
    CumulativeEstimate,
    ReconstructionResult,
    extract_mixing_layers,
    reconstruct,
    recover_relative_phases,
    solve_cumulative_full,
    solve_cumulative_intensity,
)
from .tomography import (
    Configuration,
    MeasurementPlan,
    TomographyMode,
    TomographyRecord,
    plan_measurements,
    simulate_plan,
    simulate_tomography,
    strip_output_phases,
)

__version__ = "0.1.0"
