"""Desk-scale toolkit for fair-sampling-free Bell tests on the Eberhard inequality.

Predicts and Monte Carlo-generates detection data for lossy polarization
measurements on non-maximally entangled photon pairs, computes the J statistic
exactly from counts, estimates its significance by blocking, and finds optimal
states and settings for given arm efficiencies.
"""

__version__ = "0.1.0"

from .counting import (
    FullCounts,
    ReducedCounts,
    eberhard_j_full,
    eberhard_j_reduced,
    estimate_produced_pairs,
    measure_arm_efficiency,
    normalized_j,
    reduced_from_full,
    undetected_from_singles,
)
from .errors import (
    InconsistentCountsError,
    InvalidStreamError,
    ParameterError,
    ThresholdBracketError,
)
from .events import (
    CoincidenceResult,
    EventStream,
    RunConfig,
    accumulate_counts,
    blocked_counts,
    find_coincidences,
    simulate_run,
    simulate_setting,
    split_into_blocks,
)
from .model import (
    AnalyzerAngle,
    ArmParams,
    DensityMatrix,
    NoiseModel,
    OutcomeDistribution,
    PureState,
    SettingsQuad,
    SourceParams,
    apply_noise,
    expected_counts,
    joint_outcome_distribution,
    make_state,
    singles_probability,
)
from .optimize import (
    OptimizationProblem,
    OptimizationResult,
    critical_efficiency,
    optimize,
    predicted_jn,
)
from .qkd import Basis, FeasibilityReport, basis_visibility, feasibility
from .significance import (
    BlockSeries,
    SignificanceReport,
    blocked_significance,
    blocks_from_counts,
)
