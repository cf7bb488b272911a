"""End-to-end plan for a small model: memory budget, rates, token diversion.

The pipeline is: (1) spend the GPU-memory budget greedily on per-layer
resident fractions, (2) solve the CG rate per layer at those fractions,
(3) freeze the rates and pick per-layer prompt diversion counts. The same
flow is available from the command line:

    sliceplan plan --profile profile.json --model model.json \
        --budget-bytes 3e8 --prompt-tokens 1024 --gen-tokens 1
"""

from sliceplan.memory_assigner import greedy_assign
from sliceplan.perf_model import Precision
from sliceplan.pipeline import LayerSpec, Phase, Workload
from sliceplan.rate_solver import solve_rcg
from sliceplan.token_assigner import solve_ng
from sliceplan.testbeds import testbed_a

profile = testbed_a()
layers = [LayerSpec(4096, 14336, 2, Precision.FP16)] * 4
decode = Workload(tokens=1, phase=Phase.GENERATION)
budget = 1.5 * layers[0].layer_bytes
prompt_tokens = 1024

memory = greedy_assign(profile, layers, decode, budget, n_steps=8)
print(f"budget {budget / 2**20:.0f} MiB -> used {memory.bytes_used / 2**20:.0f} MiB "
      f"in {memory.iterations} steps; r_gg per layer: "
      f"{[round(v, 3) for v in memory.per_layer_rgg]}\n")

print(f"{'layer':>5} {'r_gg':>6} {'cc':>6} {'cg':>6} {'decode t_fin':>13} "
      f"{'n_g':>5} {'prompt t_fin':>13} {'speedup':>8}")
decode_total = prompt_total = baseline_total = 0.0
for i, (layer, r_gg) in enumerate(zip(layers, memory.per_layer_rgg)):
    solution = solve_rcg(profile, layer, decode, r_gg)
    tokens = solve_ng(profile, layer, prompt_tokens, solution.rates)
    decode_total += solution.t_fin
    prompt_total += tokens.t_fin_prompt
    baseline_total += tokens.baseline_t_fin
    print(f"{i:>5} {r_gg:>6.3f} {solution.rates.cc:>6.3f} {solution.rates.cg:>6.3f} "
          f"{solution.t_fin * 1e3:>10.4f} ms {tokens.n_g:>5} "
          f"{tokens.t_fin_prompt * 1e3:>10.3f} ms {tokens.speedup:>7.2f}x")

print(f"\nper decode step: {decode_total * 1e3:.4f} ms across the sliced layers")
print(f"prompt pass:     {prompt_total * 1e3:.3f} ms "
      f"(vs {baseline_total * 1e3:.3f} ms without diversion)")
