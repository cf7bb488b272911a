"""Affine bookkeeping for edge-point searches.

Over a region where no sign term flips, every stage time is affine in the
decision variable (a slicing rate or a diverted-token count), so candidate
minimizers sit where two affine expressions intersect or at the domain ends.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Affine:
    a: float
    b: float

    def at(self, u: float) -> float:
        return self.a + self.b * u

    def __add__(self, other: "Affine") -> "Affine":
        return Affine(self.a + other.a, self.b + other.b)

    def scaled(self, k: float) -> "Affine":
        return Affine(k * self.a, k * self.b)


def intersect(p: Affine, q: Affine) -> float | None:
    """Root of p(u) = q(u); None when the lines are parallel."""
    db = p.b - q.b
    if db == 0.0:
        return None
    return (q.a - p.a) / db


def gpu_finish_affine(case: int, t_l: Affine, t_c2g: Affine, t_g: Affine, n_gemms: int) -> Affine:
    """GPU-chain finish under one pacing regime, as an affine in u.

    The chain drains in sum-of-stages plus (n_gemms - 1) repeats of the
    pacing stage: the transfer (case 1), the GPU kernel (case 2), or the
    launch (case 3).
    """
    if case == 1:
        return t_l + t_c2g.scaled(float(n_gemms)) + t_g
    if case == 2:
        return t_l + t_c2g + t_g.scaled(float(n_gemms))
    if case == 3:
        return t_l.scaled(float(n_gemms)) + t_c2g + t_g
    raise ValueError(f"case must be 1, 2 or 3, got {case}")


def boundary_roots(
    t_l: Affine,
    t_c2g: Affine,
    t_g: Affine,
    t_c: Affine,
    n_gemms: int,
    lo: float,
    hi: float,
    tol: float = 1e-12,
) -> list[tuple[float, str]]:
    """All in-range roots where the piecewise structure can bend.

    Covers stage-time crossings (regime changes of the GPU chain) and the
    GPU-chain-equals-CPU-chain crossing under each regime closed form.
    Parallel boundaries contribute nothing.
    """
    cpu_finish = t_c.scaled(float(n_gemms))
    equations: list[tuple[str, Affine, Affine]] = [
        ("launch=transfer", t_l, t_c2g),
        ("gpu=transfer", t_g, t_c2g),
        ("launch=gpu", t_l, t_g),
        ("gpu_finish[case1]=cpu_finish", gpu_finish_affine(1, t_l, t_c2g, t_g, n_gemms), cpu_finish),
        ("gpu_finish[case2]=cpu_finish", gpu_finish_affine(2, t_l, t_c2g, t_g, n_gemms), cpu_finish),
        ("gpu_finish[case3]=cpu_finish", gpu_finish_affine(3, t_l, t_c2g, t_g, n_gemms), cpu_finish),
    ]
    roots: list[tuple[float, str]] = []
    for name, p, q in equations:
        u = intersect(p, q)
        if u is None:
            continue
        if lo - tol <= u <= hi + tol:
            roots.append((min(max(u, lo), hi), name))
    return roots


def dedupe_sorted(values: list[float], tol: float = 1e-12) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out
