"""Desk-scale verification lab for the hidden-partition communication game.

Enumerable labeled-matching spaces, the planted and uniform input
distributions, density globalness with greedy decomposition, protocol trees
and their global refinement, Fourier calculus on the matching space and on
constraint subspaces, and the stream reduction with exact cut values.
"""

from .matchings import (
    EMPTY_RESTRICTION,
    EnumerationCapError,
    GroundSet,
    LabeledMatching,
    MatchingSpace,
    SignedEdges,
    count_matchings,
    edge,
    enumerate_space,
    ground,
    neighborhood,
    restricted_space,
    sample_uniform,
    space,
    subsumes,
)
from .distributions import (
    AffineSubspace,
    DihpInstance,
    advantage_reference,
    conditional_counts,
    conditional_probability,
    sample_no,
    sample_yes,
    subspace_membership,
)
from .globalness import (
    OmegaSubset,
    Rectangle,
    decompose,
    is_global,
    potential,
    rectangle_is_global,
)
from .protocol import (
    GlobalTrace,
    ProtocolTree,
    TreeNode,
    advantage,
    bad_rectangle,
    cycle_event_mass,
    discrepancy_sum,
    leaf_rectangles,
    random_tree,
    refine,
    trace_advantage,
    verify_global_trace,
    yes_mass_pair,
)
from .fourier_omega import (
    OmegaFunction,
    approximate_product_report,
    character_function,
    correlation,
    derivative,
    hypercontractivity_report,
    inner_product,
    is_derivative_global,
    level_d_report,
    project_level,
    psi,
)
from .fourier_cube import (
    CubeFunction,
    CycleError,
    PartitionSubspace,
    coefficient_bridge_check,
    degree_part,
    envelope,
    f_from_conditional,
    fourier,
    h_from_conditional,
    is_decaying,
    k_norm,
    subspace_from_constraint,
    unrefinement_check,
)
from .streaming import (
    EdgeStream,
    KEEP_CROSSING,
    KEEP_POSITIVE,
    StreamingAlgorithm,
    build_stream,
    gap_experiment,
    max_cut_exact,
    protocol_from_streaming,
    trivial_half_approx,
)

__version__ = "0.1.0"
