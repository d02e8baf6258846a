"""Tuple-level Shapley and Banzhaf attribution for join-aggregate queries.

Exact brute-force oracles plus five sampling estimators (Monte Carlo,
size-stratified, adaptive size-stratified, relation-stratified, adaptive
relation-stratified), accelerated by compiled witness views, coalition
caching, static stratum pruning, and quantile binning.
"""

from .accel import (
    CoalitionCache,
    CompiledView,
    StratumGroup,
    bin_strata,
    cached_eval,
    compile_view,
    eval_compiled,
    prune_strata,
)
from .errors import (
    CapacityError,
    DataError,
    DomainError,
    QueryError,
    RelShapError,
    SchemaError,
)
from .game import (
    GameContext,
    exact_banzhaf,
    exact_shapley,
    exact_shapley_perm,
    marginal,
    shapley_weight,
)
from .harness import BenchSpec, example1, gen_instance, mre, run_bench
from .kernels import active_backend
from .provenance import EndogenousPartition, compute_lineage, is_endogenous
from .relcore import (
    DatabaseInstance,
    QuerySpec,
    evaluate,
    instance_from_tables,
    load_instance,
)
from .samplers import (
    METHODS,
    EstimateReport,
    EstimatorConfig,
    StratumStats,
    enumerate_strata,
    estimate,
    merge_stats,
    neyman_allocation,
    proportional_allocation,
    run_arss,
    run_ass,
    run_mcs,
    run_rss,
    run_ss,
    sample_coalition,
    stratum_card,
    stratum_prob,
)

__version__ = "0.1.0"
