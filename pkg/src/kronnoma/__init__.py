"""Design and simulation toolkit for Kronecker-factorized code-domain NOMA.

Builds overloaded binary pattern matrices as factor chains G = F (x) P^(x)r,
searches exhaustively for square inner factors with per-class combining
vectors maximizing the per-step SNR gains, detects all users with a
recursive combining cascade plus small exhaustive MAP sets (operation counts
checked against closed-form bounds on every run), and evaluates closed-form
per-resource-element sum rates against orthogonal and single-shot baselines.
"""

from .combiner import (
    CapExceeded,
    CombinerDesign,
    CombinerInfeasible,
    CombiningContractError,
    EnumerationCapExceeded,
    ScoredDesign,
    ScorerSpec,
    coefficient_vectors,
    enumerate_square_candidates,
    find_combiners,
    gain_of,
    run_algorithm1,
)
from .detector import (
    DetectionConfig,
    DetectionError,
    DetectionResult,
    DetectionTrace,
    FinalSet,
    HypothesisCapExceeded,
    OpCountBounds,
    OpCounters,
    OpCountReport,
    RecursionRecord,
    SicPredecessorError,
    brute_force_map_oracle,
    combining_matrix,
    coupled_sums,
    final_stage_costs,
    final_stage_map,
    op_count_bounds,
    path_users,
    recursive_detect,
    sic_enhanced_final,
)
from .pattern import (
    ChannelRealization,
    ColumnCheck,
    DimensionOverflowError,
    FactorChain,
    PatternMatrix,
    build_chain,
    dump_chain,
    kronecker,
    load_chain,
    pattern_groups,
    search_space_size,
    validate_distinct_nonzero_columns,
)
from .rate import (
    compositions,
    multinomial,
    multinomial_weight_check,
    sum_rate_oma,
    sum_rate_pdma,
    sum_rate_recursive,
    sum_rate_sic_reference,
)
from .simkit import (
    BPSK,
    QPSK,
    Constellation,
    MonteCarloPoint,
    PathGain,
    TrialRecord,
    estimate_gain,
    run_monte_carlo,
    synthesize_rx,
    trial_rng,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "BPSK",
    "QPSK",
    "CapExceeded",
    "ChannelRealization",
    "ColumnCheck",
    "CombinerDesign",
    "CombinerInfeasible",
    "CombiningContractError",
    "Constellation",
    "DetectionConfig",
    "DetectionError",
    "DetectionResult",
    "DetectionTrace",
    "DimensionOverflowError",
    "EnumerationCapExceeded",
    "FactorChain",
    "FinalSet",
    "HypothesisCapExceeded",
    "MonteCarloPoint",
    "OpCountBounds",
    "OpCounters",
    "OpCountReport",
    "PathGain",
    "PatternMatrix",
    "RecursionRecord",
    "ScoredDesign",
    "ScorerSpec",
    "SicPredecessorError",
    "TrialRecord",
    "brute_force_map_oracle",
    "build_chain",
    "coefficient_vectors",
    "combining_matrix",
    "compositions",
    "coupled_sums",
    "dump_chain",
    "enumerate_square_candidates",
    "estimate_gain",
    "final_stage_costs",
    "final_stage_map",
    "find_combiners",
    "gain_of",
    "kronecker",
    "load_chain",
    "multinomial",
    "multinomial_weight_check",
    "op_count_bounds",
    "path_users",
    "pattern_groups",
    "recursive_detect",
    "run_algorithm1",
    "run_monte_carlo",
    "search_space_size",
    "sic_enhanced_final",
    "sum_rate_oma",
    "sum_rate_pdma",
    "sum_rate_recursive",
    "sum_rate_sic_reference",
    "synthesize_rx",
    "trial_rng",
    "validate_distinct_nonzero_columns",
    "wilson_interval",
]
