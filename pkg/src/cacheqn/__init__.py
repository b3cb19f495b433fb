"""Queueing-network analysis of software-cache eviction policies.

Three prongs: analytic throughput upper bounds over closed queueing
networks (`network`, `policies`), an event-driven simulator of those
networks (`simulate`), and a concurrent in-memory cache prototype
(`bench`).  `tracelab` supplies trace-level policy references, Zipfian
workloads, and the empirical routing fractions the segmented policies
need.  `cli` ties everything into sweep/report commands.
"""

from .network import (
    BOTTLENECK_LIMITED,
    POPULATION_LIMITED,
    BoundResult,
    ClosedNetwork,
    DemandProfile,
    PathBranch,
    ServiceDist,
    Visit,
    device_demands,
    mean_think_time,
    sample_service,
    throughput_upper_bound,
)
from .policies import (
    CLOCK,
    FIFO,
    FIFO_LIKE,
    LRU,
    LRU_LIKE,
    S3FIFO,
    SLRU,
    BoundCurve,
    Classification,
    FractionTable,
    KneeResult,
    Policy,
    ProbLRU,
    ServiceParams,
    bound_curve,
    build_network,
    classify,
    clock_g,
    closed_form_bound,
    default_p_grid,
    default_params,
    hit_ratio_knee,
    policy_from_name,
)
from .simulate import (
    SimConfig,
    SimResult,
    SimSummary,
    replicate,
    simulate,
    verify_response_time_law,
)
from .tracelab import (
    TraceStats,
    Workload,
    calibrate_capacity,
    run_policy,
    zipf_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BOTTLENECK_LIMITED",
    "POPULATION_LIMITED",
    "BoundCurve",
    "BoundResult",
    "CLOCK",
    "Classification",
    "ClosedNetwork",
    "DemandProfile",
    "FIFO",
    "FIFO_LIKE",
    "FractionTable",
    "KneeResult",
    "LRU",
    "LRU_LIKE",
    "PathBranch",
    "Policy",
    "ProbLRU",
    "S3FIFO",
    "SLRU",
    "ServiceDist",
    "ServiceParams",
    "Visit",
    "SimConfig",
    "SimResult",
    "SimSummary",
    "TraceStats",
    "Workload",
    "bound_curve",
    "build_network",
    "calibrate_capacity",
    "classify",
    "clock_g",
    "closed_form_bound",
    "default_p_grid",
    "default_params",
    "device_demands",
    "hit_ratio_knee",
    "mean_think_time",
    "policy_from_name",
    "replicate",
    "run_policy",
    "sample_service",
    "simulate",
    "throughput_upper_bound",
    "verify_response_time_law",
    "zipf_trace",
]
