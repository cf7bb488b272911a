"""Optimal CG rate for a fixed GPU-resident fraction.

With the GPU-resident rate pinned, the layer finish time is piecewise linear
in the CG rate, so the minimum lies on an edge point: a stage-time crossing,
the GPU-chain/CPU-chain crossing, a domain end, or just past the jump where
the CG slice first becomes nonempty. The solver evaluates the recurrence at
every edge point; a uniform-grid scan is provided as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._piecewise import Affine, boundary_roots, dedupe_sorted
from .perf_model import HardwareProfile
from .pipeline import (
    SGN_EPS,
    LayerSpec,
    SlicingRates,
    Workload,
    _recurrence_tfin_vec,
    _stage_arrays_generation,
    evaluate_recurrence,
    stage_times_generation,
)

#: One-sided probe just past the sign jump at a zero CG rate.
EDGE_EPS = 1e-9


@dataclass(frozen=True)
class RateSolution:
    rates: SlicingRates
    t_fin: float
    candidates: tuple[tuple[float, float], ...]


def _generation_affines(
    profile: HardwareProfile, layer: LayerSpec, workload: Workload, r_gg: float
) -> tuple[Affine, Affine, Affine, Affine]:
    """Interior stage times as affines in the CG rate (CG and CC both live)."""
    units = layer.gemm_units(workload.tokens)
    gemm = profile.gemm_for(layer.precision)
    pcie = profile.require_pcie()
    launch = profile.require_launch()
    gg = r_gg if r_gg > SGN_EPS else 0.0
    gg_on = 1.0 if gg > 0.0 else 0.0

    t_l = Affine((2.0 + gg_on) * launch.alpha, 0.0)
    t_c2g = Affine(pcie.alpha, layer.weight_bytes * pcie.beta)
    t_g = Affine(gemm.gpu.alpha * (1.0 + gg_on) + gg * units * gemm.gpu.beta, units * gemm.gpu.beta)
    t_c = Affine(gemm.cpu.alpha + (1.0 - gg) * units * gemm.cpu.beta, -units * gemm.cpu.beta)
    return t_l, t_c2g, t_g, t_c


def edge_candidates(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    r_gg: float,
    eps: float = EDGE_EPS,
) -> list[tuple[float, str]]:
    """Edge points with the boundary equation that produced each of them."""
    if not 0.0 <= r_gg <= 1.0:
        raise ValueError(f"r_gg must lie in [0, 1], got {r_gg}")
    hi = 1.0 - r_gg
    labeled: list[tuple[float, str]] = [(0.0, "endpoint"), (hi, "endpoint")]
    if 0.0 < eps < hi:
        labeled.append((eps, "zero-jump probe"))
    if hi > 0.0:
        affines = _generation_affines(profile, layer, workload, r_gg)
        labeled.extend(boundary_roots(*affines, layer.n_gemms, 0.0, hi))
    return sorted(labeled, key=lambda item: item[0])


def edge_points(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    r_gg: float,
    eps: float = EDGE_EPS,
) -> list[float]:
    """Candidate CG rates, sorted ascending and deduplicated."""
    values = [v for v, _ in edge_candidates(profile, layer, workload, r_gg, eps)]
    return dedupe_sorted(values)


def solve_rcg(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    r_gg: float,
) -> RateSolution:
    """Minimize the layer finish time over the CG rate at a fixed GG rate.

    Every candidate is scored with the full recurrence, so mislabeling a
    pacing regime cannot produce a wrong time; ties go to the smaller CG rate
    (less PCIe pressure).
    """
    evaluated: list[tuple[float, float]] = []
    best_cg = 0.0
    best_t = float("inf")
    for cg in edge_points(profile, layer, workload, r_gg):
        rates = SlicingRates.from_cg(cg, r_gg)
        stage = stage_times_generation(profile, layer, workload, rates)
        t_fin = evaluate_recurrence(stage, layer.n_gemms).t_fin
        evaluated.append((cg, t_fin))
        if t_fin < best_t:
            best_t = t_fin
            best_cg = cg
    return RateSolution(
        rates=SlicingRates.from_cg(best_cg, r_gg),
        t_fin=best_t,
        candidates=tuple(evaluated),
    )


def grid_scan(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    r_gg: float,
    grid_n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Finish time over a uniform CG-rate grid (vectorized recurrence)."""
    if grid_n < 2:
        raise ValueError(f"grid_n must be >= 2, got {grid_n}")
    if not 0.0 <= r_gg <= 1.0:
        raise ValueError(f"r_gg must lie in [0, 1], got {r_gg}")
    cg_values = np.linspace(0.0, 1.0 - r_gg, grid_n)
    stage_arrays = _stage_arrays_generation(profile, layer, workload, cg_values, r_gg)
    t_fin = _recurrence_tfin_vec(*stage_arrays, layer.n_gemms)
    return cg_values, t_fin


def solve_rates_grid(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    r_gg: float,
    grid_n: int,
) -> RateSolution:
    """Exhaustive grid minimizer; a brute-force cross-check for solve_rcg."""
    cg_values, t_fin = grid_scan(profile, layer, workload, r_gg, grid_n)
    idx = int(np.argmin(t_fin))
    rates = SlicingRates.from_cg(float(cg_values[idx]), r_gg)
    stage = stage_times_generation(profile, layer, workload, rates)
    exact = evaluate_recurrence(stage, layer.n_gemms).t_fin
    return RateSolution(
        rates=rates,
        t_fin=exact,
        candidates=tuple(zip(cg_values.tolist(), t_fin.tolist())),
    )


def lipschitz_bound(profile: HardwareProfile, layer: LayerSpec, workload: Workload) -> float:
    """Upper bound on |d t_fin / d r_CG|, used to turn grid spacing into a
    finish-time tolerance."""
    units = layer.gemm_units(workload.tokens)
    gemm = profile.gemm_for(layer.precision)
    pcie = profile.require_pcie()
    return layer.n_gemms * (
        units * (gemm.gpu.beta + gemm.cpu.beta) + layer.weight_bytes * pcie.beta
    )
