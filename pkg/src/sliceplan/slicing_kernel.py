"""Numeric check that column/row weight slicing recombines exactly.

The first GEMM's weight is split column-wise into CPU-resident/CPU-executed,
CPU-resident/GPU-executed, and GPU-resident blocks; the second GEMM's weight
is split row-wise at the same boundaries. Because the activation is applied
elementwise to disjoint column slices of the intermediate, summing the block
partial products reproduces the unsliced forward pass. Executor tags (which
device runs which block, and the relabeling of diverted prompt rows) are
metadata and never touch the numbers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import ShapeMismatch, TokenCountOutOfRange
from .pipeline import SlicingRates

_BLOCK_NAMES = ("cc", "cg", "gg")


class Activation(enum.Enum):
    IDENTITY = "identity"
    SILU = "silu"
    GELU = "gelu"


def _activate(activation: Activation, z: np.ndarray) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return z
    if activation is Activation.SILU:
        return z / (1.0 + np.exp(-z))
    return 0.5 * z * (1.0 + erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class SlicedWeights:
    """Column blocks of the first weight and matching row blocks of the second."""

    w1_blocks: tuple[np.ndarray, np.ndarray, np.ndarray]
    w2_blocks: tuple[np.ndarray, np.ndarray, np.ndarray]
    rates: SlicingRates
    boundaries: tuple[int, int]

    @property
    def block_widths(self) -> tuple[int, int, int]:
        b1, b2 = self.boundaries
        h = self.w1_blocks[0].shape[1] + self.w1_blocks[1].shape[1] + self.w1_blocks[2].shape[1]
        return (b1, b2 - b1, h - b2)


def slice_weights(w1: np.ndarray, w2: np.ndarray, rates: SlicingRates) -> SlicedWeights:
    """Partition w1 columns and w2 rows at floor(rate * H) boundaries.

    Rounding remainders land in the GPU-resident block.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if w1.ndim != 2 or w2.ndim != 2:
        raise ShapeMismatch("w1 and w2 must be 2-D matrices")
    hidden = w1.shape[1]
    if w2.shape[0] != hidden:
        raise ShapeMismatch(
            f"w1 has {hidden} columns but w2 has {w2.shape[0]} rows; the hidden dim must match"
        )
    b1 = int(math.floor(rates.cc * hidden))
    b2 = int(math.floor((rates.cc + rates.cg) * hidden))
    b1 = min(b1, hidden)
    b2 = min(max(b2, b1), hidden)
    return SlicedWeights(
        w1_blocks=(w1[:, :b1], w1[:, b1:b2], w1[:, b2:]),
        w2_blocks=(w2[:b1, :], w2[b1:b2, :], w2[b2:, :]),
        rates=rates,
        boundaries=(b1, b2),
    )


def mlp_forward_reference(
    x: np.ndarray, w1: np.ndarray, w2: np.ndarray, activation: Activation
) -> np.ndarray:
    """Plain dense two-GEMM forward pass."""
    x = np.asarray(x, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if x.ndim != 2 or x.shape[1] != w1.shape[0]:
        raise ShapeMismatch(f"input is {x.shape} but w1 expects {w1.shape[0]} features")
    if w1.shape[1] != w2.shape[0]:
        raise ShapeMismatch("w1 columns must match w2 rows")
    return _activate(activation, x @ w1) @ w2


def mlp_forward_sliced(
    x: np.ndarray,
    sliced: SlicedWeights,
    activation: Activation,
    n_g: int = 0,
) -> np.ndarray:
    """Forward pass summed over the three blocks.

    Row blocks of the input are independent under GEMM, so computing the
    whole input against each weight block equals computing the kept and
    diverted token groups separately and restacking them; ``n_g`` only
    affects executor tags.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != sliced.w1_blocks[0].shape[0]:
        raise ShapeMismatch(
            f"input is {x.shape} but the sliced weights expect "
            f"{sliced.w1_blocks[0].shape[0]} features"
        )
    tokens = x.shape[0]
    if not 0 <= n_g <= tokens:
        raise TokenCountOutOfRange(f"n_g must lie in [0, {tokens}], got {n_g}")
    out = np.zeros((tokens, sliced.w2_blocks[0].shape[1]))
    for w1_block, w2_block in zip(sliced.w1_blocks, sliced.w2_blocks):
        if w1_block.shape[1] == 0:
            continue
        out = out + _activate(activation, x @ w1_block) @ w2_block
    return out


@dataclass(frozen=True)
class ExecutorTask:
    """Who computes which block for which token rows; metadata only."""

    block: str
    executor: str
    row_start: int
    row_stop: int


def execution_tags(sliced: SlicedWeights, tokens: int, n_g: int) -> list[ExecutorTask]:
    """Task list for one forward pass.

    Kept rows of the CC block run on the CPU; diverted rows reuse the same
    columns on the GPU (the prompt-phase alias). CG and GG blocks always run
    on the GPU over all rows.
    """
    if not 0 <= n_g <= tokens:
        raise TokenCountOutOfRange(f"n_g must lie in [0, {tokens}], got {n_g}")
    widths = sliced.block_widths
    split = tokens - n_g
    tasks: list[ExecutorTask] = []
    if widths[0]:
        if split:
            tasks.append(ExecutorTask("cc", "cpu", 0, split))
        if n_g:
            tasks.append(ExecutorTask("cg_prime", "gpu", split, tokens))
    if widths[1]:
        tasks.append(ExecutorTask("cg", "gpu", 0, tokens))
    if widths[2]:
        tasks.append(ExecutorTask("gg", "gpu", 0, tokens))
    return tasks


def max_recombination_error(
    seed: int,
    trials: int,
    max_dim: int = 64,
    max_tokens: int = 8,
) -> float:
    """Worst absolute deviation between sliced and reference forwards over
    random instances, rate triples, and all activations."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        tokens = int(rng.integers(1, max_tokens + 1))
        m = int(rng.integers(2, max_dim + 1))
        h = int(rng.integers(2, max_dim + 1))
        out_dim = int(rng.integers(2, max_dim + 1))
        x = rng.uniform(-1.0, 1.0, size=(tokens, m))
        w1 = rng.uniform(-1.0, 1.0, size=(m, h))
        w2 = rng.uniform(-1.0, 1.0, size=(h, out_dim))
        raw = rng.uniform(0.0, 1.0, size=3)
        raw /= raw.sum()
        rates = SlicingRates(cc=raw[0], cg=raw[1], gg=1.0 - raw[0] - raw[1])
        n_g = int(rng.integers(0, tokens + 1))
        sliced = slice_weights(w1, w2, rates)
        for activation in Activation:
            ref = mlp_forward_reference(x, w1, w2, activation)
            got = mlp_forward_sliced(x, sliced, activation, n_g)
            err = float(np.max(np.abs(got - ref)))
            if err > worst:
                worst = err
    return worst
