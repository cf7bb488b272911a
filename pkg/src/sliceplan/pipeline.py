"""Per-GEMM stage times and the four-stream completion pipeline.

A layer runs ``n_gemms`` GEMMs through four serial resources: CPU compute,
kernel launch, CPU-to-GPU transfer, and GPU compute. Launches gate both the
transfer and the GPU kernel of the same GEMM, and the transfer gates the GPU
kernel. Completion timestamps follow a recurrence that a discrete-event
simulation of the same streams reproduces exactly; the layer finishes when
both the GPU chain and the CPU chain have drained.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass

import numpy as np

from .errors import TokenCountOutOfRange
from .perf_model import HardwareProfile, Precision

# Rates at or below this threshold are treated as exactly zero so vanishing
# slices never pay startup or launch costs.
SGN_EPS = 1e-12

#: Simulator/recurrence agreement required before a deviation counts as a bug.
TFIN_EQUIV_TOL = 1e-12

TRANSFER_LITERAL = "literal"
TRANSFER_RATE_SCALED = "rate_scaled"
_TRANSFER_MODELS = (TRANSFER_LITERAL, TRANSFER_RATE_SCALED)


class Phase(enum.Enum):
    PROMPT = "prompt"
    GENERATION = "generation"


class CaseLabel(enum.Enum):
    CASE1 = "case1"  # transfer-dominated GPU chain
    CASE2 = "case2"  # GPU-compute-dominated
    CASE3 = "case3"  # launch-dominated
    CPU_BOUND = "cpu_bound"  # the CPU chain finishes last
    DEGENERATE = "degenerate"  # nothing flows through the GPU chain


@dataclass(frozen=True)
class LayerSpec:
    """Shape of one MLP/MoE layer's sliced GEMMs."""

    model_dim: int
    hidden_dim: int
    n_gemms: int
    precision: Precision

    def __post_init__(self) -> None:
        if self.model_dim < 1 or self.hidden_dim < 1 or self.n_gemms < 1:
            raise ValueError("model_dim, hidden_dim and n_gemms must all be >= 1")

    @property
    def weight_bytes(self) -> float:
        """Bytes of one GEMM's weight tensor."""
        return self.model_dim * self.hidden_dim * self.precision.bytes_per_param

    @property
    def layer_bytes(self) -> float:
        """Bytes of all sliced weights in the layer."""
        return self.n_gemms * self.weight_bytes

    def gemm_units(self, tokens: int) -> float:
        """GEMM work measure: tokens * model_dim * hidden_dim."""
        return float(tokens) * self.model_dim * self.hidden_dim


@dataclass(frozen=True)
class Workload:
    tokens: int
    phase: Phase

    def __post_init__(self) -> None:
        if self.tokens < 1:
            raise ValueError(f"tokens must be >= 1, got {self.tokens}")


@dataclass(frozen=True)
class SlicingRates:
    """Fractions of a GEMM's weight columns per placement; sums to 1."""

    cc: float
    cg: float
    gg: float

    def __post_init__(self) -> None:
        for name, value in (("cc", self.cc), ("cg", self.cg), ("gg", self.gg)):
            if -SGN_EPS <= value < 0.0:
                object.__setattr__(self, name, 0.0)
            elif value < 0.0:
                raise ValueError(f"rate {name} must be >= 0, got {value}")
        total = self.cc + self.cg + self.gg
        if abs(total - 1.0) > SGN_EPS:
            raise ValueError(f"rates must sum to 1 within {SGN_EPS}, got {total}")

    @classmethod
    def from_cg(cls, cg: float, gg: float) -> "SlicingRates":
        return cls(cc=1.0 - cg - gg, cg=cg, gg=gg)


@dataclass(frozen=True)
class StageTimes:
    """Durations of one GEMM's launch, transfer, GPU, and CPU tasks."""

    launch_s: float
    transfer_s: float
    gpu_s: float
    cpu_s: float

    def __post_init__(self) -> None:
        for name in ("launch_s", "transfer_s", "gpu_s", "cpu_s"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class Timeline:
    """Completion timestamps per stream, index 0 being the time origin."""

    launch_done: np.ndarray
    transfer_done: np.ndarray
    gpu_done: np.ndarray
    cpu_done: np.ndarray
    t_fin: float
    case_label: CaseLabel


def _sgn(x: float) -> float:
    return 1.0 if x > SGN_EPS else 0.0


def _eff(x: float) -> float:
    return x if x > SGN_EPS else 0.0


def stage_times_generation(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    rates: SlicingRates,
) -> StageTimes:
    """Stage times for an intact input tensor (no token diversion).

    A CG slice needs one launch for its transfer and one for its kernel; a
    GG slice needs one kernel launch. Transferring nothing costs nothing, so
    the transfer term is gated on the CG slice being present.
    """
    units = layer.gemm_units(workload.tokens)
    gemm = profile.gemm_for(layer.precision)
    pcie = profile.require_pcie()
    launch = profile.require_launch()

    cc, cg, gg = _eff(rates.cc), _eff(rates.cg), _eff(rates.gg)
    cc_on, cg_on, gg_on = _sgn(cc), _sgn(cg), _sgn(gg)

    gpu_s = gemm.gpu.alpha * (cg_on + gg_on) + (cg + gg) * units * gemm.gpu.beta
    cpu_s = gemm.cpu.alpha * cc_on + cc * units * gemm.cpu.beta
    transfer_s = cg_on * (pcie.alpha + cg * layer.weight_bytes * pcie.beta)
    launch_s = (2.0 * cg_on + gg_on) * launch.alpha
    return StageTimes(launch_s=launch_s, transfer_s=transfer_s, gpu_s=gpu_s, cpu_s=cpu_s)


def stage_times_prompt(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    rates: SlicingRates,
    n_g: int,
    transfer_model: str = TRANSFER_LITERAL,
) -> StageTimes:
    """Stage times when ``n_g`` of the prompt tokens run on the GPU against
    CPU-resident weights.

    The diverted tokens reuse the CC columns (executed on the GPU), so the
    transfer covers CPU-resident weights and the GPU picks up ``n_g`` tokens
    of the CC work while the CPU keeps the remaining ``T - n_g``. The default
    ``literal`` transfer model charges the full weight tensor per GEMM; the
    ``rate_scaled`` alternative charges only the CPU-resident fraction.
    """
    if workload.phase is not Phase.PROMPT:
        raise ValueError("stage_times_prompt requires a prompt-phase workload")
    if transfer_model not in _TRANSFER_MODELS:
        raise ValueError(f"transfer_model must be one of {_TRANSFER_MODELS}")
    tokens = workload.tokens
    if not 0 <= n_g <= tokens:
        raise TokenCountOutOfRange(f"n_g must lie in [0, {tokens}], got {n_g}")

    mh = float(layer.model_dim) * layer.hidden_dim
    gemm = profile.gemm_for(layer.precision)
    pcie = profile.require_pcie()
    launch = profile.require_launch()

    cc, cg, gg = _eff(rates.cc), _eff(rates.cg), _eff(rates.gg)
    cc_on, cg_on, gg_on = _sgn(cc), _sgn(cg), _sgn(gg)

    launch_s = (2.0 * cg_on + 2.0 * cc_on + gg_on) * launch.alpha
    if transfer_model == TRANSFER_LITERAL:
        transfer_s = pcie.alpha * (cg_on + cc_on) + layer.weight_bytes * pcie.beta
    else:
        transfer_s = pcie.alpha * (cg_on + cc_on) + (cg + cc) * layer.weight_bytes * pcie.beta
    gpu_s = gemm.gpu.alpha * (cg_on + gg_on + cc_on) + (
        tokens * (cg + gg) + n_g * cc
    ) * mh * gemm.gpu.beta
    cpu_s = gemm.cpu.alpha * _sgn(cc * (tokens - n_g)) + (tokens - n_g) * cc * mh * gemm.cpu.beta
    return StageTimes(launch_s=launch_s, transfer_s=transfer_s, gpu_s=gpu_s, cpu_s=cpu_s)


def classify_case(stage: StageTimes) -> CaseLabel:
    """Which stage paces the GPU chain.

    Ties between stage times fall through to the later case, so the labeling
    is deterministic; t_fin never depends on the label.
    """
    t_l, t_c2g, t_g = stage.launch_s, stage.transfer_s, stage.gpu_s
    if t_l < t_c2g and t_g < t_c2g:
        return CaseLabel.CASE1
    if (t_l < t_c2g and t_g >= t_c2g) or (t_l >= t_c2g and t_l < t_g):
        return CaseLabel.CASE2
    return CaseLabel.CASE3


def _label(stage: StageTimes, gpu_final: float, cpu_final: float) -> CaseLabel:
    if stage.launch_s == 0.0 and stage.transfer_s == 0.0 and stage.gpu_s == 0.0:
        return CaseLabel.DEGENERATE
    if cpu_final > gpu_final:
        return CaseLabel.CPU_BOUND
    return classify_case(stage)


def evaluate_recurrence(stage: StageTimes, n_gemms: int) -> Timeline:
    """Chain the per-GEMM completion timestamps through the four streams."""
    if n_gemms < 1:
        raise ValueError(f"n_gemms must be >= 1, got {n_gemms}")
    launch_done = np.zeros(n_gemms + 1)
    transfer_done = np.zeros(n_gemms + 1)
    gpu_done = np.zeros(n_gemms + 1)
    cpu_done = np.zeros(n_gemms + 1)
    t_l, t_c2g, t_g, t_c = stage.launch_s, stage.transfer_s, stage.gpu_s, stage.cpu_s
    for i in range(1, n_gemms + 1):
        launch_done[i] = launch_done[i - 1] + t_l
        transfer_done[i] = max(launch_done[i], transfer_done[i - 1]) + t_c2g
        gpu_done[i] = max(transfer_done[i], gpu_done[i - 1]) + t_g
        cpu_done[i] = cpu_done[i - 1] + t_c
    gpu_final = float(gpu_done[n_gemms])
    cpu_final = float(cpu_done[n_gemms])
    return Timeline(
        launch_done=launch_done,
        transfer_done=transfer_done,
        gpu_done=gpu_done,
        cpu_done=cpu_done,
        t_fin=max(gpu_final, cpu_final),
        case_label=_label(stage, gpu_final, cpu_final),
    )


# Stream indices: task id 4*i + s encodes the GEMM index and the stream.
_S_LAUNCH, _S_TRANSFER, _S_GPU, _S_CPU = 0, 1, 2, 3
STREAM_NAMES = ("launch", "transfer", "gpu", "cpu")


def simulate_streams(stage: StageTimes, n_gemms: int) -> Timeline:
    """Discrete-event simulation of the four serial streams.

    Tasks are queued FIFO per stream; a stream blocks on its head task until
    that task's upstream dependencies complete (launch before transfer and
    GPU kernel of the same GEMM, transfer before the kernel). This is an
    independent executor for the same dependency graph the recurrence folds.
    """
    if n_gemms < 1:
        raise ValueError(f"n_gemms must be >= 1, got {n_gemms}")
    durs = (stage.launch_s, stage.transfer_s, stage.gpu_s, stage.cpu_s)
    n_tasks = 4 * n_gemms
    unmet = [0] * n_tasks
    ready = [0.0] * n_tasks
    dependents: list[tuple[int, ...]] = [()] * n_tasks
    for i in range(n_gemms):
        b = 4 * i
        dependents[b + _S_LAUNCH] = (b + _S_TRANSFER, b + _S_GPU)
        dependents[b + _S_TRANSFER] = (b + _S_GPU,)
        unmet[b + _S_TRANSFER] = 1
        unmet[b + _S_GPU] = 2

    queues = [[4 * i + s for i in range(n_gemms)] for s in range(4)]
    qpos = [0, 0, 0, 0]
    busy = [False] * 4
    clock = [0.0] * 4
    done = [0.0] * n_tasks
    heap: list[tuple[float, int, int]] = []
    seq = 0

    def try_start(s: int) -> None:
        nonlocal seq
        if busy[s] or qpos[s] >= n_gemms:
            return
        task = queues[s][qpos[s]]
        if unmet[task]:
            return
        start = clock[s]
        if ready[task] > start:
            start = ready[task]
        finish = start + durs[s]
        clock[s] = finish
        busy[s] = True
        qpos[s] += 1
        heapq.heappush(heap, (finish, seq, task))
        seq += 1

    for s in range(4):
        try_start(s)
    while heap:
        finish, _, task = heapq.heappop(heap)
        done[task] = finish
        stream = task & 3
        busy[stream] = False
        for dep in dependents[task]:
            unmet[dep] -= 1
            if finish > ready[dep]:
                ready[dep] = finish
        try_start(stream)
        for dep in dependents[task]:
            if not unmet[dep]:
                try_start(dep & 3)

    arrays = [np.zeros(n_gemms + 1) for _ in range(4)]
    for i in range(n_gemms):
        for s in range(4):
            arrays[s][i + 1] = done[4 * i + s]
    gpu_final = float(arrays[_S_GPU][n_gemms])
    cpu_final = float(arrays[_S_CPU][n_gemms])
    return Timeline(
        launch_done=arrays[_S_LAUNCH],
        transfer_done=arrays[_S_TRANSFER],
        gpu_done=arrays[_S_GPU],
        cpu_done=arrays[_S_CPU],
        t_fin=max(gpu_final, cpu_final),
        case_label=_label(stage, gpu_final, cpu_final),
    )


def timeline_records(stage: StageTimes, timeline: Timeline) -> list[dict]:
    """Flatten a timeline into per-GEMM Gantt records.

    Each record carries ``gemm_index`` (1-based), ``stream``, ``start_s`` and
    ``end_s``; starts are completion minus duration, which matches the
    max-based queueing exactly.
    """
    durs = (stage.launch_s, stage.transfer_s, stage.gpu_s, stage.cpu_s)
    arrays = (timeline.launch_done, timeline.transfer_done, timeline.gpu_done, timeline.cpu_done)
    records = []
    n_gemms = len(timeline.launch_done) - 1
    for s, name in enumerate(STREAM_NAMES):
        for i in range(1, n_gemms + 1):
            end = float(arrays[s][i])
            records.append(
                {"gemm_index": i, "stream": name, "start_s": end - durs[s], "end_s": end}
            )
    return records


def cc_result_transfer_time(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    rates: SlicingRates,
    bytes_per_activation: float = 2.0,
) -> float:
    """Cost of shipping the CPU partial result back to the GPU at layer end.

    This happens after the pipeline drains and is excluded from t_fin; report
    it separately when an end-to-end figure is wanted.
    """
    if _sgn(rates.cc) == 0.0:
        return 0.0
    pcie = profile.require_pcie()
    result_bytes = workload.tokens * layer.model_dim * bytes_per_activation
    return pcie.alpha + result_bytes * pcie.beta


# ---------------------------------------------------------------------------
# Vectorized internals used by grid oracles. Expressions mirror the scalar
# stage-time functions term for term so both paths round identically.


def _recurrence_tfin_vec(
    t_l: np.ndarray, t_c2g: np.ndarray, t_g: np.ndarray, t_c: np.ndarray, n_gemms: int
) -> np.ndarray:
    launch_done = np.zeros_like(t_l)
    transfer_done = np.zeros_like(t_l)
    gpu_done = np.zeros_like(t_l)
    for _ in range(n_gemms):
        launch_done = launch_done + t_l
        transfer_done = np.maximum(launch_done, transfer_done) + t_c2g
        gpu_done = np.maximum(transfer_done, gpu_done) + t_g
    return np.maximum(gpu_done, n_gemms * t_c)


def _stage_arrays_generation(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    cg_values: np.ndarray,
    r_gg: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    units = layer.gemm_units(workload.tokens)
    gemm = profile.gemm_for(layer.precision)
    pcie = profile.require_pcie()
    launch = profile.require_launch()

    gg = _eff(r_gg)
    gg_on = _sgn(gg)
    cc_values = 1.0 - cg_values - r_gg
    cg = np.where(cg_values > SGN_EPS, cg_values, 0.0)
    cc = np.where(cc_values > SGN_EPS, cc_values, 0.0)
    cg_on = np.where(cg > SGN_EPS, 1.0, 0.0)
    cc_on = np.where(cc > SGN_EPS, 1.0, 0.0)

    gpu = gemm.gpu.alpha * (cg_on + gg_on) + (cg + gg) * units * gemm.gpu.beta
    cpu = gemm.cpu.alpha * cc_on + cc * units * gemm.cpu.beta
    transfer = cg_on * (pcie.alpha + cg * layer.weight_bytes * pcie.beta)
    launch_t = (2.0 * cg_on + gg_on) * launch.alpha
    return launch_t, transfer, gpu, cpu


def _stage_arrays_prompt(
    profile: HardwareProfile,
    layer: LayerSpec,
    workload: Workload,
    rates: SlicingRates,
    ng_values: np.ndarray,
    transfer_model: str = TRANSFER_LITERAL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    tokens = workload.tokens
    mh = float(layer.model_dim) * layer.hidden_dim
    gemm = profile.gemm_for(layer.precision)
    pcie = profile.require_pcie()
    launch = profile.require_launch()

    cc, cg, gg = _eff(rates.cc), _eff(rates.cg), _eff(rates.gg)
    cc_on, cg_on, gg_on = _sgn(cc), _sgn(cg), _sgn(gg)
    ones = np.ones_like(ng_values, dtype=float)

    launch_t = ((2.0 * cg_on + 2.0 * cc_on + gg_on) * launch.alpha) * ones
    if transfer_model == TRANSFER_LITERAL:
        transfer = (pcie.alpha * (cg_on + cc_on) + layer.weight_bytes * pcie.beta) * ones
    else:
        transfer = (
            pcie.alpha * (cg_on + cc_on) + (cg + cc) * layer.weight_bytes * pcie.beta
        ) * ones
    gpu = gemm.gpu.alpha * (cg_on + gg_on + cc_on) + (
        tokens * (cg + gg) + ng_values * cc
    ) * mh * gemm.gpu.beta
    cpu_on = np.where(cc * (tokens - ng_values) > SGN_EPS, 1.0, 0.0)
    cpu = gemm.cpu.alpha * cpu_on + (tokens - ng_values) * cc * mh * gemm.cpu.beta
    return launch_t, transfer, gpu, cpu
