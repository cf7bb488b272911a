"""Prompt-token diversion with rates frozen from the decode solution.

Long prompts leave the CPU slice as the straggler when rates were tuned for
decode. Diverting ``n_g`` of the prompt tokens to the GPU (against the same
CPU-resident columns) rebalances the overlap. The finish time is piecewise
linear in ``n_g``, so the integer optimum sits next to an affine-boundary
root or at the domain ends; every surviving candidate is scored with the
full recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._piecewise import Affine, boundary_roots
from .perf_model import HardwareProfile
from .pipeline import (
    SGN_EPS,
    TRANSFER_LITERAL,
    TRANSFER_RATE_SCALED,
    LayerSpec,
    Phase,
    SlicingRates,
    Workload,
    evaluate_recurrence,
    stage_times_prompt,
)

__all__ = ["TokenPlan", "solve_ng", "prompt_speedup"]


@dataclass(frozen=True)
class TokenPlan:
    n_g: int
    t_fin_prompt: float
    baseline_t_fin: float
    candidates: tuple[tuple[int, float], ...]

    @property
    def speedup(self) -> float:
        if self.t_fin_prompt <= 0.0:
            return 1.0
        return self.baseline_t_fin / self.t_fin_prompt


def _prompt_affines(
    profile: HardwareProfile,
    layer: LayerSpec,
    tokens: int,
    rates: SlicingRates,
    transfer_model: str,
) -> tuple[Affine, Affine, Affine, Affine]:
    """Interior stage times as affines in n_g (0 < n_g < T)."""
    mh = float(layer.model_dim) * layer.hidden_dim
    gemm = profile.gemm_for(layer.precision)
    pcie = profile.require_pcie()
    launch = profile.require_launch()

    cc = rates.cc if rates.cc > SGN_EPS else 0.0
    cg = rates.cg if rates.cg > SGN_EPS else 0.0
    gg = rates.gg if rates.gg > SGN_EPS else 0.0
    cc_on, cg_on, gg_on = (1.0 if r > 0.0 else 0.0 for r in (cc, cg, gg))

    t_l = Affine((2.0 * cg_on + 2.0 * cc_on + gg_on) * launch.alpha, 0.0)
    if transfer_model == TRANSFER_LITERAL:
        t_c2g = Affine(pcie.alpha * (cg_on + cc_on) + layer.weight_bytes * pcie.beta, 0.0)
    elif transfer_model == TRANSFER_RATE_SCALED:
        t_c2g = Affine(
            pcie.alpha * (cg_on + cc_on) + (cg + cc) * layer.weight_bytes * pcie.beta, 0.0
        )
    else:
        raise ValueError(f"unknown transfer_model '{transfer_model}'")
    t_g = Affine(
        gemm.gpu.alpha * (cg_on + gg_on + cc_on) + tokens * (cg + gg) * mh * gemm.gpu.beta,
        cc * mh * gemm.gpu.beta,
    )
    t_c = Affine(
        gemm.cpu.alpha * cc_on + tokens * cc * mh * gemm.cpu.beta,
        -cc * mh * gemm.cpu.beta,
    )
    return t_l, t_c2g, t_g, t_c


def _integer_candidates(
    profile: HardwareProfile,
    layer: LayerSpec,
    tokens: int,
    rates: SlicingRates,
    transfer_model: str,
) -> list[int]:
    # Domain ends, the point just left of the CPU-term sign jump at n_g = T,
    # and both integers around every affine-boundary root.
    candidates = {0, tokens, max(tokens - 1, 0)}
    affines = _prompt_affines(profile, layer, tokens, rates, transfer_model)
    hi = float(tokens)
    for root, _name in boundary_roots(*affines, layer.n_gemms, 0.0, hi):
        for v in (math.floor(root), math.ceil(root)):
            if 0 <= v <= tokens:
                candidates.add(int(v))
    return sorted(candidates)


def solve_ng(
    profile: HardwareProfile,
    layer: LayerSpec,
    tokens: int,
    rates: SlicingRates,
    transfer_model: str = TRANSFER_LITERAL,
) -> TokenPlan:
    """Best diverted-token count for one layer shape at frozen rates.

    Ties break to the smaller count; the input rates are never modified.
    The plan's finish time can never exceed the keep-everything-on-CPU
    baseline because zero diversion is always a candidate.
    """
    workload = Workload(tokens=tokens, phase=Phase.PROMPT)
    evaluated: list[tuple[int, float]] = []
    best_ng = 0
    best_t = float("inf")
    baseline = None
    for ng in _integer_candidates(profile, layer, tokens, rates, transfer_model):
        stage = stage_times_prompt(profile, layer, workload, rates, ng, transfer_model)
        t_fin = evaluate_recurrence(stage, layer.n_gemms).t_fin
        evaluated.append((ng, t_fin))
        if ng == 0:
            baseline = t_fin
        if t_fin < best_t:
            best_t = t_fin
            best_ng = ng
    assert baseline is not None
    return TokenPlan(
        n_g=best_ng,
        t_fin_prompt=best_t,
        baseline_t_fin=baseline,
        candidates=tuple(evaluated),
    )


def prompt_speedup(
    profile: HardwareProfile,
    layer: LayerSpec,
    tokens: int,
    rates: SlicingRates,
    transfer_model: str = TRANSFER_LITERAL,
) -> float:
    """Baseline-over-optimized finish ratio; 1.0 when diversion cannot help."""
    return solve_ng(profile, layer, tokens, rates, transfer_model).speedup
