"""Linear cost models for the planner's four operation classes.

GPU GEMM, CPU GEMM, and CPU-to-GPU transfers are modeled as
``alpha + n * beta`` over a workload measure ``n`` (GEMM work units for
compute, bytes for transfers); kernel launches are a fitted constant.
Coefficient sets for one machine are bundled into a :class:`HardwareProfile`
that serializes to a small JSON document, and profiling samples round-trip
through a three-column CSV.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import DegenerateSamples, EmptySamples, MixedOpClass, SchemaViolation

SCHEMA_VERSION = 1

# Grid used by generate_samples: two decades around the knee n = alpha/beta
# where startup and streaming costs balance. Plain least squares cannot
# recover a small intercept from samples whose beta*n term dwarfs it, so the
# grid must straddle the knee and stay close enough that large-workload
# noise does not leak into the intercept.
_GRID_LO_FACTOR = 0.1
_GRID_HI_FACTOR = 10.0
_FALLBACK_PIVOT = 1.0e6


class OpClass(enum.Enum):
    GPU_GEMM = "gpu_gemm"
    CPU_GEMM = "cpu_gemm"
    C2G = "c2g"
    LAUNCH = "launch"


class Precision(enum.Enum):
    FP16 = "fp16"
    INT4 = "int4"

    @property
    def bytes_per_param(self) -> float:
        return 2.0 if self is Precision.FP16 else 0.5


@dataclass(frozen=True)
class ProfileSample:
    """One timed observation of a single operation class."""

    op_class: OpClass
    workload_n: float
    elapsed_s: float
    precision: Precision | None = None

    def __post_init__(self) -> None:
        if self.elapsed_s <= 0.0:
            raise ValueError(f"elapsed_s must be > 0, got {self.elapsed_s}")
        if self.workload_n < 0.0:
            raise ValueError(f"workload_n must be >= 0, got {self.workload_n}")
        if self.op_class is OpClass.LAUNCH and self.workload_n != 1:
            raise ValueError("launch samples carry workload_n = 1")


@dataclass(frozen=True)
class PerfCoeffs:
    """Startup/slope pair for one operation class.

    ``fit_quality`` holds r-squared for regressions and the sample variance
    for the launch constant.
    """

    alpha: float
    beta: float
    fit_quality: float

    def __post_init__(self) -> None:
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.fit_quality < 0.0:
            raise ValueError(f"fit_quality must be >= 0, got {self.fit_quality}")


@dataclass(frozen=True)
class GemmCoeffs:
    gpu: PerfCoeffs
    cpu: PerfCoeffs


@dataclass(frozen=True)
class HardwareProfile:
    """Fitted coefficients for one machine, keyed by precision where needed.

    Sections may be absent on partially profiled machines; accessors raise
    when a missing section is actually needed.
    """

    testbed: str
    gemm: Mapping[Precision, GemmCoeffs]
    pcie: PerfCoeffs | None = None
    launch: PerfCoeffs | None = None

    def gemm_for(self, precision: Precision) -> GemmCoeffs:
        try:
            return self.gemm[precision]
        except KeyError:
            raise ValueError(
                f"profile '{self.testbed}' has no GEMM coefficients for {precision.value}"
            ) from None

    def require_pcie(self) -> PerfCoeffs:
        if self.pcie is None:
            raise ValueError(f"profile '{self.testbed}' has no PCIe coefficients")
        return self.pcie

    def require_launch(self) -> PerfCoeffs:
        if self.launch is None:
            raise ValueError(f"profile '{self.testbed}' has no launch coefficients")
        return self.launch


def predict(coeffs: PerfCoeffs, workload_n: float) -> float:
    """Evaluate the model at one workload size."""
    if workload_n < 0.0:
        raise ValueError(f"workload_n must be >= 0, got {workload_n}")
    return coeffs.alpha + workload_n * coeffs.beta


def fit_linear(samples: Sequence[ProfileSample]) -> PerfCoeffs:
    """Ordinary least squares over (workload_n, elapsed_s).

    Negative fitted coefficients are clamped to zero (time cannot be
    negative) and r-squared is recomputed against the clamped model. A
    degenerate zero-spread response yields r-squared 1 when the constant
    model reproduces it exactly, else 0.
    """
    _check_homogeneous(samples)
    (cls,) = {s.op_class for s in samples}
    if cls is OpClass.LAUNCH:
        raise MixedOpClass("launch times are fit as a constant; use fit_launch")

    x = np.array([s.workload_n for s in samples], dtype=float)
    y = np.array([s.elapsed_s for s in samples], dtype=float)
    if np.unique(x).size < 2:
        raise DegenerateSamples("all samples share one workload_n; slope is unidentifiable")

    xm = float(x.mean())
    ym = float(y.mean())
    sxx = float(((x - xm) ** 2).sum())
    sxy = float(((x - xm) * (y - ym)).sum())
    beta = sxy / sxx
    alpha = ym - beta * xm
    if beta < 0.0:
        beta = 0.0
        alpha = ym
    if alpha < 0.0:
        alpha = 0.0

    resid = y - (alpha + beta * x)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    if ss_tot > 0.0:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    else:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    return PerfCoeffs(alpha=alpha, beta=beta, fit_quality=r2)


def fit_launch(samples: Sequence[ProfileSample]) -> PerfCoeffs:
    """Fit the launch constant: mean elapsed time, variance as fit quality."""
    if len(samples) < 3:
        raise EmptySamples(f"need >= 3 launch samples, got {len(samples)}")
    if any(s.op_class is not OpClass.LAUNCH for s in samples):
        raise MixedOpClass("fit_launch accepts launch samples only")
    y = np.array([s.elapsed_s for s in samples], dtype=float)
    return PerfCoeffs(alpha=float(y.mean()), beta=0.0, fit_quality=float(y.var(ddof=1)))


def _check_homogeneous(samples: Sequence[ProfileSample]) -> None:
    if len(samples) < 3:
        raise EmptySamples(f"need >= 3 samples, got {len(samples)}")
    if len({s.op_class for s in samples}) > 1:
        raise MixedOpClass("samples mix operation classes")
    if len({s.precision for s in samples}) > 1:
        raise MixedOpClass("samples mix precisions")


# ---------------------------------------------------------------------------
# Profile JSON


def _coeffs_to_dict(c: PerfCoeffs, quality_key: str) -> dict:
    if quality_key == "sigma2":
        return {"alpha": c.alpha, "sigma2": c.fit_quality}
    return {"alpha": c.alpha, "beta": c.beta, quality_key: c.fit_quality}


def profile_to_dict(profile: HardwareProfile) -> dict:
    doc: dict = {"schema_version": SCHEMA_VERSION, "testbed": profile.testbed}
    if profile.launch is not None:
        doc["launch"] = _coeffs_to_dict(profile.launch, "sigma2")
    if profile.pcie is not None:
        doc["pcie"] = _coeffs_to_dict(profile.pcie, "r2")
    if profile.gemm:
        gemm: dict = {}
        for precision, pair in profile.gemm.items():
            gemm[precision.value] = {
                "gpu": _coeffs_to_dict(pair.gpu, "r2"),
                "cpu": _coeffs_to_dict(pair.cpu, "r2"),
            }
        doc["gemm"] = gemm
    return doc


def _want_number(d: dict, path: str, key: str) -> float:
    if key not in d:
        raise SchemaViolation(f"{path}.{key}", "missing required field")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaViolation(f"{path}.{key}", f"expected a number, got {type(v).__name__}")
    return float(v)


def _linear_coeffs_from(d: object, path: str) -> PerfCoeffs:
    if not isinstance(d, dict):
        raise SchemaViolation(path, "expected an object with alpha/beta/r2")
    alpha = _want_number(d, path, "alpha")
    beta = _want_number(d, path, "beta")
    r2 = _want_number(d, path, "r2")
    if alpha < 0.0 or beta < 0.0:
        raise SchemaViolation(path, "alpha and beta must be >= 0")
    if not 0.0 <= r2 <= 1.0:
        raise SchemaViolation(f"{path}.r2", f"r2 must lie in [0, 1], got {r2}")
    return PerfCoeffs(alpha=alpha, beta=beta, fit_quality=r2)


def profile_from_dict(doc: object) -> HardwareProfile:
    if not isinstance(doc, dict):
        raise SchemaViolation("$", "profile document must be a JSON object")
    testbed = doc.get("testbed")
    if not isinstance(testbed, str):
        raise SchemaViolation("testbed", "expected a string label")

    launch = None
    if "launch" in doc:
        node = doc["launch"]
        if not isinstance(node, dict):
            raise SchemaViolation("launch", "expected an object with alpha/sigma2")
        alpha = _want_number(node, "launch", "alpha")
        sigma2 = _want_number(node, "launch", "sigma2")
        if alpha < 0.0 or sigma2 < 0.0:
            raise SchemaViolation("launch", "alpha and sigma2 must be >= 0")
        launch = PerfCoeffs(alpha=alpha, beta=0.0, fit_quality=sigma2)

    pcie = _linear_coeffs_from(doc["pcie"], "pcie") if "pcie" in doc else None

    gemm: dict[Precision, GemmCoeffs] = {}
    if "gemm" in doc:
        node = doc["gemm"]
        if not isinstance(node, dict):
            raise SchemaViolation("gemm", "expected an object keyed by precision")
        for key, entry in node.items():
            try:
                precision = Precision(key)
            except ValueError:
                raise SchemaViolation(f"gemm.{key}", "unknown precision") from None
            if not isinstance(entry, dict):
                raise SchemaViolation(f"gemm.{key}", "expected an object with gpu/cpu")
            if "gpu" not in entry or "cpu" not in entry:
                raise SchemaViolation(f"gemm.{key}", "needs both gpu and cpu coefficient sets")
            gemm[precision] = GemmCoeffs(
                gpu=_linear_coeffs_from(entry["gpu"], f"gemm.{key}.gpu"),
                cpu=_linear_coeffs_from(entry["cpu"], f"gemm.{key}.cpu"),
            )

    return HardwareProfile(testbed=testbed, gemm=gemm, pcie=pcie, launch=launch)


def save_profile(profile: HardwareProfile) -> bytes:
    """Serialize to UTF-8 JSON; floats use shortest round-trip decimals."""
    return (json.dumps(profile_to_dict(profile), indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_profile(source: Union[str, Path, IO[str], IO[bytes], bytes]) -> HardwareProfile:
    """Load a profile from a path, open stream, or raw JSON bytes."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"not valid JSON: {exc}") from None
    return profile_from_dict(doc)


# ---------------------------------------------------------------------------
# Sample CSV

CSV_HEADER = ("op_class", "workload_n", "elapsed_s")

_CSV_TOKENS: dict[str, tuple[OpClass, Precision | None]] = {
    "c2g": (OpClass.C2G, None),
    "launch": (OpClass.LAUNCH, None),
}
for _op in (OpClass.GPU_GEMM, OpClass.CPU_GEMM):
    for _p in Precision:
        _CSV_TOKENS[f"{_op.value}_{_p.value}"] = (_op, _p)


def sample_token(sample: ProfileSample) -> str:
    if sample.op_class in (OpClass.GPU_GEMM, OpClass.CPU_GEMM):
        if sample.precision is None:
            raise ValueError("GEMM samples need a precision for CSV serialization")
        return f"{sample.op_class.value}_{sample.precision.value}"
    return sample.op_class.value


def write_samples_csv(samples: Iterable[ProfileSample], dest: Union[str, Path, IO[str]]) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_samples_csv(samples, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in samples:
        n = s.workload_n
        writer.writerow([sample_token(s), int(n) if float(n).is_integer() else repr(n), repr(s.elapsed_s)])


def read_samples_csv(source: Union[str, Path, IO[str]]) -> list[ProfileSample]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return read_samples_csv(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaViolation("header", f"empty file; expected header '{','.join(CSV_HEADER)}'") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise SchemaViolation("header", f"expected header '{','.join(CSV_HEADER)}', got '{','.join(header)}'")
    samples = []
    for i, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise SchemaViolation(f"line {i}", f"expected 3 columns, got {len(row)}")
        token = row[0].strip()
        if token not in _CSV_TOKENS:
            raise SchemaViolation(f"line {i}.op_class", f"unknown op_class '{token}'")
        op_class, precision = _CSV_TOKENS[token]
        try:
            n = float(row[1])
            elapsed = float(row[2])
        except ValueError as exc:
            raise SchemaViolation(f"line {i}", str(exc)) from None
        try:
            samples.append(ProfileSample(op_class, n, elapsed, precision))
        except ValueError as exc:
            raise SchemaViolation(f"line {i}", str(exc)) from None
    return samples


# ---------------------------------------------------------------------------
# Synthetic samples


def _sample_grid(coeffs: PerfCoeffs, points: int) -> np.ndarray:
    if coeffs.beta <= 0.0:
        return np.ones(points)
    pivot = coeffs.alpha / coeffs.beta if coeffs.alpha > 0.0 else _FALLBACK_PIVOT
    return np.geomspace(_GRID_LO_FACTOR * pivot, _GRID_HI_FACTOR * pivot, points)


def generate_samples(
    profile: HardwareProfile,
    points: int = 20,
    noise: float = 0.0,
    seed: int = 0,
) -> list[ProfileSample]:
    """Synthesize profiling samples from fitted coefficients.

    ``noise`` is the relative standard deviation of multiplicative Gaussian
    noise. Workloads for linear classes follow a two-decade grid around each
    model's alpha/beta knee so that refitting can identify both coefficients.
    """
    if points < 3:
        raise ValueError("need at least 3 points per class")
    rng = np.random.default_rng(seed)
    out: list[ProfileSample] = []

    def emit(op: OpClass, coeffs: PerfCoeffs, precision: Precision | None) -> None:
        grid = _sample_grid(coeffs, points)
        preds = coeffs.alpha + grid * coeffs.beta
        if noise > 0.0:
            vals = preds * (1.0 + noise * rng.standard_normal(points))
            vals = np.maximum(vals, preds * 0.01)
        else:
            vals = preds
        if op is OpClass.LAUNCH:
            grid = np.ones(points)
        for n, v in zip(grid, vals):
            out.append(ProfileSample(op, float(n), float(v), precision))

    for precision in (Precision.FP16, Precision.INT4):
        if precision in profile.gemm:
            pair = profile.gemm[precision]
            emit(OpClass.GPU_GEMM, pair.gpu, precision)
            emit(OpClass.CPU_GEMM, pair.cpu, precision)
    if profile.pcie is not None:
        emit(OpClass.C2G, profile.pcie, None)
    if profile.launch is not None:
        emit(OpClass.LAUNCH, profile.launch, None)
    return out


def fit_profile(samples: Sequence[ProfileSample], testbed: str) -> tuple[HardwareProfile, list[str]]:
    """Group samples by class and fit whatever is present.

    Returns the (possibly partial) profile plus a list of human-readable
    warnings naming the classes that had no samples.
    """
    groups: dict[tuple[OpClass, Precision | None], list[ProfileSample]] = {}
    for s in samples:
        groups.setdefault((s.op_class, s.precision), []).append(s)

    gemm: dict[Precision, GemmCoeffs] = {}
    warnings: list[str] = []
    for precision in (Precision.FP16, Precision.INT4):
        gpu = groups.get((OpClass.GPU_GEMM, precision))
        cpu = groups.get((OpClass.CPU_GEMM, precision))
        if gpu and cpu:
            gemm[precision] = GemmCoeffs(gpu=fit_linear(gpu), cpu=fit_linear(cpu))
        elif gpu or cpu:
            have, miss = ("gpu", "cpu") if gpu else ("cpu", "gpu")
            warnings.append(
                f"gemm {precision.value}: only {have} samples present; "
                f"dropping the precision (missing {miss})"
            )
        else:
            warnings.append(f"no gemm samples for {precision.value}")

    pcie = None
    if (OpClass.C2G, None) in groups:
        pcie = fit_linear(groups[(OpClass.C2G, None)])
    else:
        warnings.append("no c2g samples; profile lacks pcie coefficients")
    launch = None
    if (OpClass.LAUNCH, None) in groups:
        launch = fit_launch(groups[(OpClass.LAUNCH, None)])
    else:
        warnings.append("no launch samples; profile lacks the launch constant")

    return HardwareProfile(testbed=testbed, gemm=gemm, pcie=pcie, launch=launch), warnings
