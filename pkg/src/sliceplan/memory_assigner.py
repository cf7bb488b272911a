"""Greedy GPU-memory budgeting across layers.

Raising a layer's GPU-resident fraction buys finish time with bytes. Each
candidate step is scored by seconds saved per byte, and the best-scoring
step is taken until the budget is exhausted or no step helps. Resident
fractions move on a fixed grid {i / n_steps}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import NonIncreasingStep
from .perf_model import HardwareProfile
from .pipeline import LayerSpec, Workload
from .rate_solver import solve_rcg


@dataclass(frozen=True)
class PlanStep:
    iteration: int
    layer_index: int
    rgg: float
    importance: float


@dataclass(frozen=True)
class MemoryPlan:
    per_layer_rgg: tuple[float, ...]
    bytes_used: float
    budget: float
    iterations: int
    trace: tuple[PlanStep, ...]


def importance(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    v_prev: float,
    v_i: float,
) -> float:
    """Seconds saved per byte when raising the resident fraction.

    Finish times on both sides come from the rate solver, so the score
    reflects the best achievable overlap at each fraction. Negative scores
    mean the extra residency actually hurts.
    """
    if not 0.0 <= v_prev <= 1.0 or not 0.0 <= v_i <= 1.0:
        raise ValueError("resident fractions must lie in [0, 1]")
    if v_i <= v_prev:
        raise NonIncreasingStep(f"v_i must exceed v_prev, got {v_i} <= {v_prev}")
    before = solve_rcg(profile, layer, workload, v_prev).t_fin
    after = solve_rcg(profile, layer, workload, v_i).t_fin
    return (before - after) / ((v_i - v_prev) * layer.layer_bytes)


def greedy_assign(
    profile: HardwareProfile,
    layers: Sequence[LayerSpec],
    workload: Workload,
    budget: float,
    n_steps: int = 16,
) -> MemoryPlan:
    """Spend a byte budget on per-layer resident fractions, best saving first.

    A candidate must fit the remaining budget and strictly improve its
    layer's finish time. Ties break to the lowest layer index, then the
    smallest fraction, so plans are deterministic. A zero budget is a valid
    plan with everything CPU-resident.
    """
    if budget < 0.0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")

    v_prev = [0.0] * len(layers)
    bytes_used = 0.0
    trace: list[PlanStep] = []

    # Identical layer shapes share solves.
    tfin_cache: dict[tuple, float] = {}

    def tfin(layer: LayerSpec, v: float) -> float:
        key = (layer.model_dim, layer.hidden_dim, layer.n_gemms, layer.precision, v)
        if key not in tfin_cache:
            tfin_cache[key] = solve_rcg(profile, layer, workload, v).t_fin
        return tfin_cache[key]

    iteration = 0
    while True:
        best_score = 0.0
        best: tuple[int, float, float] | None = None  # (layer index, fraction, incremental bytes)
        for j, layer in enumerate(layers):
            base = tfin(layer, v_prev[j])
            for i in range(1, n_steps + 1):
                v = i / n_steps
                if v <= v_prev[j]:
                    continue
                incr = (v - v_prev[j]) * layer.layer_bytes
                if bytes_used + incr > budget:
                    continue
                score = (base - tfin(layer, v)) / incr
                if score > best_score:
                    best_score = score
                    best = (j, v, incr)
        if best is None:
            break
        iteration += 1
        j, v, incr = best
        v_prev[j] = v
        bytes_used += incr
        trace.append(PlanStep(iteration=iteration, layer_index=j, rgg=v, importance=best_score))

    return MemoryPlan(
        per_layer_rgg=tuple(v_prev),
        bytes_used=bytes_used,
        budget=budget,
        iterations=iteration,
        trace=tuple(trace),
    )
