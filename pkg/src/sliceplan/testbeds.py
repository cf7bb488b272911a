"""Bundled coefficient sets for three reference desktop machines.

The three profiles span a fast workstation (a), a mid-range box (b), and an
older machine on a slower interconnect (c). Units are seconds throughout;
GEMM workloads count tokens * model_dim * hidden_dim and transfers count
bytes. The dictionaries follow the profile JSON schema, so they double as
serialization fixtures.
"""

from __future__ import annotations

from .perf_model import HardwareProfile, profile_from_dict

TESTBED_A: dict = {
    "testbed": "testbed-a",
    "launch": {"alpha": 4.4e-5, "sigma2": 3.4e-6},
    "pcie": {"alpha": 3.0e-6, "beta": 2.6e-11, "r2": 0.985},
    "gemm": {
        "fp16": {
            "gpu": {"alpha": 1.0e-7, "beta": 3.2e-12, "r2": 0.997},
            "cpu": {"alpha": 7.4e-7, "beta": 1.6e-11, "r2": 0.988},
        },
        "int4": {
            "gpu": {"alpha": 4.7e-6, "beta": 8.1e-13, "r2": 0.999},
            "cpu": {"alpha": 1.1e-5, "beta": 5.4e-12, "r2": 0.998},
        },
    },
}

TESTBED_B: dict = {
    "testbed": "testbed-b",
    "launch": {"alpha": 5.7e-5, "sigma2": 5.9e-6},
    "pcie": {"alpha": 5.8e-6, "beta": 2.5e-11, "r2": 0.994},
    "gemm": {
        "fp16": {
            "gpu": {"alpha": 1.9e-7, "beta": 2.6e-12, "r2": 0.997},
            "cpu": {"alpha": 3.4e-6, "beta": 1.5e-11, "r2": 0.995},
        },
        "int4": {
            "gpu": {"alpha": 4.6e-6, "beta": 6.5e-13, "r2": 0.996},
            "cpu": {"alpha": 1.3e-5, "beta": 6.5e-12, "r2": 0.998},
        },
    },
}

TESTBED_C: dict = {
    "testbed": "testbed-c",
    "launch": {"alpha": 5.2e-5, "sigma2": 6.0e-6},
    "pcie": {"alpha": 3.7e-6, "beta": 4.1e-11, "r2": 0.999},
    "gemm": {
        "fp16": {
            "gpu": {"alpha": 1.4e-7, "beta": 3.6e-12, "r2": 0.988},
            "cpu": {"alpha": 1.8e-6, "beta": 2.5e-11, "r2": 0.993},
        },
        "int4": {
            "gpu": {"alpha": 6.4e-6, "beta": 9.2e-13, "r2": 0.989},
            "cpu": {"alpha": 5.6e-7, "beta": 8.4e-12, "r2": 0.992},
        },
    },
}

ALL_TESTBEDS: dict[str, dict] = {"a": TESTBED_A, "b": TESTBED_B, "c": TESTBED_C}


def testbed_a() -> HardwareProfile:
    return profile_from_dict(TESTBED_A)


def testbed_b() -> HardwareProfile:
    return profile_from_dict(TESTBED_B)


def testbed_c() -> HardwareProfile:
    return profile_from_dict(TESTBED_C)
