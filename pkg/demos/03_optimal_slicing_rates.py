"""Find the CG rate that balances the GPU chain against the CPU chain.

With the GPU-resident fraction fixed, the layer finish time is piecewise
linear in the CG rate, so the whole search reduces to a handful of edge
points. This script sweeps the rate on a grid for one decode step, overlays
the solver's edge points, and then slows the CPU down to show the optimum
migrating toward the GPU.
"""

import numpy as np

from sliceplan.perf_model import Precision, profile_from_dict
from sliceplan.pipeline import LayerSpec, Phase, Workload
from sliceplan.rate_solver import grid_scan, solve_rcg
from sliceplan.testbeds import TESTBED_A
import copy

layer = LayerSpec(model_dim=4096, hidden_dim=14336, n_gemms=2, precision=Precision.FP16)
decode = Workload(tokens=1, phase=Phase.GENERATION)
profile = profile_from_dict(TESTBED_A)

print("=== finish time vs CG rate (testbed-a, decode, r_gg = 0) ===")
xs, ts = grid_scan(profile, layer, decode, 0.0, 101)
lo, hi = float(ts.min()), float(ts.max())
for x, t in zip(xs[::5], ts[::5]):
    bar = "#" * int(1 + 40 * (t - lo) / (hi - lo))
    print(f"  r_cg={x:4.2f}  {t * 1e3:7.4f} ms  {bar}")

solution = solve_rcg(profile, layer, decode, 0.0)
print(f"\nedge points evaluated: {[round(c, 6) for c, _ in solution.candidates]}")
print(f"optimum: r_cg* = {solution.rates.cg:.4f} "
      f"(cc={solution.rates.cc:.4f}), t_fin = {solution.t_fin * 1e3:.4f} ms")
print(f"all-CPU endpoint: {ts[0] * 1e3:.4f} ms -> "
      f"{ts[0] / solution.t_fin:.2f}x slower than the balanced split")

print("\n=== the optimum migrates as the CPU slows (fewer threads) ===")
for factor in (1, 2, 4, 8):
    doc = copy.deepcopy(TESTBED_A)
    for prec in doc["gemm"].values():
        prec["cpu"]["beta"] *= factor
    slowed = profile_from_dict(doc)
    sol = solve_rcg(slowed, layer, decode, 0.0)
    print(f"  beta_C x{factor}: r_cg* = {sol.rates.cg:.3f}, t_fin = {sol.t_fin * 1e3:.4f} ms")
print("\nA slower CPU shifts more columns onto the PCIe+GPU path, which is")
print("why the best split is machine-specific and has to be solved, not set.")
