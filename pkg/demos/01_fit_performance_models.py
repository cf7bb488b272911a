"""Fit the linear cost models from (synthetic) profiling samples.

Every operation the planner schedules is priced by a two-coefficient model:
a startup time plus a per-unit slope. GEMMs count tokens * model_dim *
hidden_dim, transfers count bytes, and kernel launches are a constant. This
script synthesizes noisy samples from the bundled testbed-a coefficients,
refits them, and compares against the generating model.
"""

from sliceplan.perf_model import OpClass, Precision, fit_profile, generate_samples, predict
from sliceplan.testbeds import testbed_a

profile = testbed_a()

print("=== generating 1%-noise samples from testbed-a ===")
samples = generate_samples(profile, points=20, noise=0.01, seed=42)
print(f"{len(samples)} samples across "
      f"{len({(s.op_class, s.precision) for s in samples})} operation classes\n")

refit, warnings = fit_profile(samples, testbed="testbed-a-refit")
assert not warnings

print(f"{'class':<16}{'alpha (true)':>14}{'alpha (fit)':>14}{'beta (true)':>14}"
      f"{'beta (fit)':>14}{'r2/s2':>8}")
rows = [
    ("gpu gemm fp16", profile.gemm[Precision.FP16].gpu, refit.gemm[Precision.FP16].gpu),
    ("cpu gemm fp16", profile.gemm[Precision.FP16].cpu, refit.gemm[Precision.FP16].cpu),
    ("gpu gemm int4", profile.gemm[Precision.INT4].gpu, refit.gemm[Precision.INT4].gpu),
    ("cpu gemm int4", profile.gemm[Precision.INT4].cpu, refit.gemm[Precision.INT4].cpu),
    ("pcie", profile.pcie, refit.pcie),
    ("launch", profile.launch, refit.launch),
]
for name, true, fit in rows:
    print(f"{name:<16}{true.alpha:>14.3e}{fit.alpha:>14.3e}"
          f"{true.beta:>14.3e}{fit.beta:>14.3e}{fit.fit_quality:>8.3f}")

print("\n=== what the models predict for one decode GEMM (4096 x 14336) ===")
units = 1 * 4096 * 14336
weight_bytes = 4096 * 14336 * 2
print(f"gpu gemm:  {predict(profile.gemm[Precision.FP16].gpu, units) * 1e3:8.4f} ms")
print(f"cpu gemm:  {predict(profile.gemm[Precision.FP16].cpu, units) * 1e3:8.4f} ms")
print(f"transfer:  {predict(profile.pcie, weight_bytes) * 1e3:8.4f} ms  (full weight tensor)")
print(f"launch:    {profile.launch.alpha * 1e3:8.4f} ms")
print("\nMoving weight over PCIe costs ~3x one CPU GEMM, but transfers overlap")
print("CPU compute, which is exactly the slack the rate solver exploits.")
