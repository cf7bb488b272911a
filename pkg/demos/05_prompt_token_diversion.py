"""Rebalance long prompts by running some tokens on the GPU against
CPU-resident columns.

Rates are frozen to the decode optimum (repacking weights between phases
would cost a full transfer), which leaves the CPU slice as the prompt-phase
straggler. Diverting n_g of the T prompt tokens to the GPU shrinks the CPU
chain linearly while growing the GPU chain; the best n_g sits where the
chains cross, and the search over edge points matches an exhaustive sweep.
"""

from sliceplan.perf_model import Precision, profile_from_dict
from sliceplan.pipeline import (
    LayerSpec,
    Phase,
    Workload,
    evaluate_recurrence,
    stage_times_prompt,
)
from sliceplan.rate_solver import solve_rcg
from sliceplan.token_assigner import solve_ng
from sliceplan.testbeds import TESTBED_A

layer = LayerSpec(model_dim=4096, hidden_dim=14336, n_gemms=2, precision=Precision.FP16)
profile = profile_from_dict(TESTBED_A)
decode_rates = solve_rcg(profile, layer, Workload(1, Phase.GENERATION), 0.0).rates
print(f"decode-optimal rates: cc={decode_rates.cc:.3f} cg={decode_rates.cg:.3f} "
      f"gg={decode_rates.gg:.3f}\n")

T = 1024
workload = Workload(tokens=T, phase=Phase.PROMPT)
print(f"=== prompt finish time vs diverted tokens (T = {T}) ===")
for n_g in range(0, T + 1, 128):
    stage = stage_times_prompt(profile, layer, workload, decode_rates, n_g)
    timeline = evaluate_recurrence(stage, layer.n_gemms)
    marker = "cpu chain" if timeline.cpu_done[-1] > timeline.gpu_done[-1] else "gpu chain"
    print(f"  n_g={n_g:5d}  t_fin = {timeline.t_fin * 1e3:9.3f} ms  (bound by {marker})")

plan = solve_ng(profile, layer, T, decode_rates)
print(f"\nsolver: n_g* = {plan.n_g}, t_fin = {plan.t_fin_prompt * 1e3:.3f} ms, "
      f"baseline (n_g=0) = {plan.baseline_t_fin * 1e3:.3f} ms, "
      f"speedup x{plan.speedup:.2f}")

print("\n=== speedup grows with prompt length ===")
for tokens in (64, 256, 1024, 4096):
    p = solve_ng(profile, layer, tokens, decode_rates)
    print(f"  T={tokens:5d}: n_g*={p.n_g:5d}  x{p.speedup:.2f}")
print("\nLonger prompts make the fixed transfer cost easier to amortize, so")
print("the gain from diverting the CPU's share keeps climbing with T.")
