"""Exact and Monte Carlo estimands for experiments with network interference."""

from .biclique import (
    BicliqueSpec,
    avg_po_closed_form,
    difference_sign,
    efao_by_exposure_closed_form,
    exposure_matching_curve,
    f_binom,
    joint_matching_residual,
)
from .engine import EXACT, MONTE_CARLO, EngineSettings, EstimandResult, Functional, expectation
from .errors import EnumerationTooLarge, InconsistentExposure, UnattainableLevel, ZeroProbabilityEvent
from .estimands import (
    FULL_POPULATION,
    TREATED,
    UNTREATED,
    FocalMapping,
    avg_direct_effect,
    avg_indirect_effect,
    avg_po_by_exposure,
    by_exposure,
    eao,
    eao_decomposition,
    eate,
    efao,
    efao_contrast,
    equivalence_report,
    gate,
    neighbor_union,
    non_neighbor_intersection,
    select_policy,
    welfare,
)
from .exposure import (
    NeighborCountCapped,
    OwnAndAnyNeighbor,
    OwnTreatmentExposure,
    check_consistency,
    exposure_distribution,
)
from .graph import Graph, NeighborhoodStructure, biclique, disjoint_copies, empty_graph, unique_pairs
from .policy import AllOrNone, CompletelyRandomized, HeterogeneousBernoulli, HomogeneousBernoulli
from .science import (
    ConstantBaseline,
    ExplicitTable,
    ExposureResponse,
    OneTreatedNeighborIndicator,
    OwnTreatment,
    ScienceTable,
    TreatedNeighborCount,
    explicit_table,
    random_table,
    tabulate,
)

__version__ = "0.1.0"
