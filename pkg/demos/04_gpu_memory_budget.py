"""Spend a GPU-memory budget greedily on per-layer resident fractions.

Each candidate step (layer j from fraction v_prev to v_i) is scored in
seconds saved per byte; the best-scoring step is taken until nothing fits or
nothing helps. More residency is not automatically better: once the GPU
chain dominates a layer, extra bytes stop paying.
"""

from sliceplan.memory_assigner import greedy_assign
from sliceplan.perf_model import Precision
from sliceplan.pipeline import LayerSpec, Phase, Workload
from sliceplan.rate_solver import solve_rcg
from sliceplan.testbeds import testbed_a

profile = testbed_a()
decode = Workload(tokens=1, phase=Phase.GENERATION)
# A small mixed model: two big layers, two small ones.
layers = (
    [LayerSpec(4096, 14336, 2, Precision.FP16)] * 2
    + [LayerSpec(2048, 8192, 2, Precision.FP16)] * 2
)
total_bytes = sum(l.layer_bytes for l in layers)
print(f"model: {len(layers)} layers, {total_bytes / 2**20:.0f} MiB of sliced weights\n")

print(f"{'budget':>10} {'used':>10} {'steps':>6}  per-layer r_gg        decode t_fin")
for fraction in (0.0, 0.25, 0.5, 0.75, 1.0):
    budget = fraction * total_bytes
    plan = greedy_assign(profile, layers, decode, budget, n_steps=8)
    total = sum(
        solve_rcg(profile, layer, decode, v).t_fin
        for layer, v in zip(layers, plan.per_layer_rgg)
    )
    rggs = " ".join(f"{v:5.3f}" for v in plan.per_layer_rgg)
    print(f"{budget / 2**20:8.0f}Mi {plan.bytes_used / 2**20:8.0f}Mi {plan.iterations:>6}  "
          f"[{rggs}]  {total * 1e3:8.4f} ms")

print("\n=== trace of the half-budget run ===")
plan = greedy_assign(profile, layers, decode, 0.5 * total_bytes, n_steps=8)
for step in plan.trace:
    print(f"  step {step.iteration}: layer {step.layer_index} -> r_gg {step.rgg:.3f} "
          f"(importance {step.importance:.3e} s/byte)")
print("\nBig layers win early steps because a byte there removes more transfer")
print("and CPU time; the sweep stops by itself when importance goes nonpositive.")
