import copy

import numpy as np
import pytest

from sliceplan.perf_model import HardwareProfile, Precision, profile_from_dict
from sliceplan.pipeline import LayerSpec, Phase, Workload
from sliceplan.testbeds import ALL_TESTBEDS, TESTBED_A, testbed_a


@pytest.fixture(scope="session")
def profile_a() -> HardwareProfile:
    return testbed_a()


@pytest.fixture(scope="session")
def layer_4096() -> LayerSpec:
    # The canonical desk-scale layer used throughout: 4096 x 14336, two GEMMs.
    return LayerSpec(model_dim=4096, hidden_dim=14336, n_gemms=2, precision=Precision.FP16)


@pytest.fixture(scope="session")
def decode_workload() -> Workload:
    return Workload(tokens=1, phase=Phase.GENERATION)


def scaled_profile(base_doc: dict, **factors: float) -> HardwareProfile:
    """Scale coefficient groups of a profile dict.

    Recognized factors: cpu_alpha, cpu_beta, gpu_alpha, gpu_beta,
    pcie_alpha, pcie_beta, launch_alpha.
    """
    doc = copy.deepcopy(base_doc)
    for prec in doc.get("gemm", {}).values():
        prec["cpu"]["alpha"] *= factors.get("cpu_alpha", 1.0)
        prec["cpu"]["beta"] *= factors.get("cpu_beta", 1.0)
        prec["gpu"]["alpha"] *= factors.get("gpu_alpha", 1.0)
        prec["gpu"]["beta"] *= factors.get("gpu_beta", 1.0)
    if "pcie" in doc:
        doc["pcie"]["alpha"] *= factors.get("pcie_alpha", 1.0)
        doc["pcie"]["beta"] *= factors.get("pcie_beta", 1.0)
    if "launch" in doc:
        doc["launch"]["alpha"] *= factors.get("launch_alpha", 1.0)
    return profile_from_dict(doc)


def random_profile(rng: np.random.Generator, base_doc: dict | None = None) -> HardwareProfile:
    """Every coefficient scaled log-uniformly within x0.1 to x10."""
    if base_doc is None:
        base_doc = list(ALL_TESTBEDS.values())[int(rng.integers(0, len(ALL_TESTBEDS)))]
    doc = copy.deepcopy(base_doc)

    def jitter(value: float) -> float:
        return value * float(10.0 ** rng.uniform(-1.0, 1.0))

    for prec in doc["gemm"].values():
        for side in ("gpu", "cpu"):
            prec[side]["alpha"] = jitter(prec[side]["alpha"])
            prec[side]["beta"] = jitter(prec[side]["beta"])
    doc["pcie"]["alpha"] = jitter(doc["pcie"]["alpha"])
    doc["pcie"]["beta"] = jitter(doc["pcie"]["beta"])
    doc["launch"]["alpha"] = jitter(doc["launch"]["alpha"])
    return profile_from_dict(doc)


def flat_profile(alpha: float = 0.0, beta: float = 0.0, launch: float = 0.0) -> HardwareProfile:
    """Uniform coefficients everywhere, handy for degenerate cases."""
    coeffs = {"alpha": alpha, "beta": beta, "r2": 1.0}
    return profile_from_dict(
        {
            "testbed": "flat",
            "launch": {"alpha": launch, "sigma2": 0.0},
            "pcie": dict(coeffs),
            "gemm": {
                "fp16": {"gpu": dict(coeffs), "cpu": dict(coeffs)},
                "int4": {"gpu": dict(coeffs), "cpu": dict(coeffs)},
            },
        }
    )


@pytest.fixture(scope="session")
def testbed_a_doc() -> dict:
    return TESTBED_A
