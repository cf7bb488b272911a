"""Planner and simulator for splitting LLM MLP/MoE weights across CPU and
GPU executors so compute, kernel launches, and PCIe transfers overlap.

Layers are sliced into CPU-resident/CPU-executed, CPU-resident/GPU-executed,
and GPU-resident partitions. Fitted linear cost models feed a four-stream
completion-time recurrence; edge-point solvers pick slicing rates, a greedy
sweep spends the GPU-memory budget, and a token assigner rebalances long
prompts against rates frozen from decode.
"""

from .errors import (
    DegenerateSamples,
    EmptySamples,
    MixedOpClass,
    NonIncreasingStep,
    SchemaViolation,
    ShapeMismatch,
    TokenCountOutOfRange,
)
from .memory_assigner import MemoryPlan, PlanStep, greedy_assign, importance
from .perf_model import (
    GemmCoeffs,
    HardwareProfile,
    OpClass,
    PerfCoeffs,
    Precision,
    ProfileSample,
    fit_launch,
    fit_linear,
    fit_profile,
    generate_samples,
    load_profile,
    predict,
    profile_from_dict,
    profile_to_dict,
    read_samples_csv,
    save_profile,
    write_samples_csv,
)
from .pipeline import (
    CaseLabel,
    LayerSpec,
    Phase,
    SlicingRates,
    StageTimes,
    Timeline,
    Workload,
    cc_result_transfer_time,
    classify_case,
    evaluate_recurrence,
    simulate_streams,
    stage_times_generation,
    stage_times_prompt,
    timeline_records,
)
from .rate_solver import (
    RateSolution,
    edge_points,
    grid_scan,
    lipschitz_bound,
    solve_rates_grid,
    solve_rcg,
)
from .slicing_kernel import (
    Activation,
    SlicedWeights,
    execution_tags,
    max_recombination_error,
    mlp_forward_reference,
    mlp_forward_sliced,
    slice_weights,
)
from .token_assigner import TokenPlan, prompt_speedup, solve_ng

__version__ = "0.1.0"
