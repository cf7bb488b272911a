"""Command-line front end: fit profiles, solve plans, simulate timelines.

Exit codes: 0 on success, 1 on an internal inconsistency (the recurrence and
the event simulator disagree, or a verification sweep fails), 2 on bad input
files or arguments. Set SLICEPLAN_SEED to override any --seed flag.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

from .errors import (
    DegenerateSamples,
    EmptySamples,
    MixedOpClass,
    SchemaViolation,
    ShapeMismatch,
    TokenCountOutOfRange,
)
from .memory_assigner import greedy_assign
from .perf_model import (
    SCHEMA_VERSION,
    HardwareProfile,
    Precision,
    fit_profile,
    generate_samples,
    load_profile,
    read_samples_csv,
    sample_token,
    save_profile,
    write_samples_csv,
)
from .pipeline import (
    TFIN_EQUIV_TOL,
    TRANSFER_LITERAL,
    TRANSFER_RATE_SCALED,
    LayerSpec,
    Phase,
    SlicingRates,
    Workload,
    evaluate_recurrence,
    simulate_streams,
    stage_times_generation,
    stage_times_prompt,
    timeline_records,
)
from .rate_solver import solve_rcg
from .slicing_kernel import max_recombination_error
from .token_assigner import solve_ng

#: Recurrence/simulator deviation beyond this is treated as a bug, not noise.
SIM_DEVIATION_LIMIT = 1e-9

_PHASES = {"gen": Phase.GENERATION, "prompt": Phase.PROMPT}
_TRANSFER_FLAGS = {"literal": TRANSFER_LITERAL, "rate-scaled": TRANSFER_RATE_SCALED}


def _seed(flag_value: int) -> int:
    env = os.environ.get("SLICEPLAN_SEED")
    return int(env) if env else flag_value


def _dump_json(doc: object) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_model(path: str | Path) -> tuple[str, Precision, list[LayerSpec]]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaViolation("$", "model document must be a JSON object")
    name = doc.get("name", "unnamed")
    try:
        precision = Precision(doc.get("precision", "fp16"))
    except ValueError:
        raise SchemaViolation("precision", f"unknown precision '{doc.get('precision')}'") from None
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise SchemaViolation("layers", "expected a non-empty list")
    layers: list[LayerSpec] = []
    for i, entry in enumerate(raw_layers):
        if not isinstance(entry, dict):
            raise SchemaViolation(f"layers[{i}]", "expected an object")

        def grab(short: str, long: str) -> int:
            value = entry.get(short, entry.get(long))
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise SchemaViolation(f"layers[{i}].{short}", "expected an integer >= 1")
            return value

        spec = LayerSpec(
            model_dim=grab("M", "model_dim"),
            hidden_dim=grab("H", "hidden_dim"),
            n_gemms=grab("n_l", "n_gemms"),
            precision=precision,
        )
        count = entry.get("count", 1)
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise SchemaViolation(f"layers[{i}].count", "expected an integer >= 1")
        layers.extend([spec] * count)
    return name, precision, layers


def _rates_from_obj(obj: object, path: str) -> SlicingRates:
    if not isinstance(obj, dict):
        raise SchemaViolation(path, "expected an object with cc/cg/gg")
    vals = {}
    for key in ("cc", "cg", "gg"):
        value = obj.get(key, obj.get(f"r_{key}"))
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaViolation(f"{path}.{key}", "expected a number")
        vals[key] = float(value)
    try:
        return SlicingRates(**vals)
    except ValueError as exc:
        raise SchemaViolation(path, str(exc)) from None


def _load_rates(path: str | Path, n_layers: int) -> list[SlicingRates]:
    """Accept a bare rates object, a list of them, or a solver/plan report."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"rates file is not valid JSON: {exc}") from None
    if isinstance(doc, dict) and "generation" in doc:
        doc = doc["generation"]
    if isinstance(doc, dict) and "per_layer" in doc:
        doc = [entry.get("rates") for entry in doc["per_layer"]]
    elif isinstance(doc, dict) and "layers" in doc and isinstance(doc["layers"], list):
        doc = [entry.get("rates") for entry in doc["layers"]]
    if isinstance(doc, dict):
        rates = _rates_from_obj(doc, "$")
        return [rates] * n_layers
    if isinstance(doc, list):
        if len(doc) != n_layers:
            raise SchemaViolation("$", f"expected {n_layers} rate entries, got {len(doc)}")
        return [_rates_from_obj(entry, f"$[{i}]") for i, entry in enumerate(doc)]
    raise SchemaViolation("$", "unrecognized rates document")


def _rates_dict(rates: SlicingRates) -> dict:
    return {"cc": rates.cc, "cg": rates.cg, "gg": rates.gg}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# fit


def _fit_table(profile: HardwareProfile) -> str:
    columns = [
        ("gpu fp16", lambda p: p.gemm[Precision.FP16].gpu if Precision.FP16 in p.gemm else None),
        ("gpu int4", lambda p: p.gemm[Precision.INT4].gpu if Precision.INT4 in p.gemm else None),
        ("cpu fp16", lambda p: p.gemm[Precision.FP16].cpu if Precision.FP16 in p.gemm else None),
        ("cpu int4", lambda p: p.gemm[Precision.INT4].cpu if Precision.INT4 in p.gemm else None),
        ("pcie", lambda p: p.pcie),
        ("launch", lambda p: p.launch),
    ]
    cells = [(name, getter(profile)) for name, getter in columns]

    def fmt(value: float | None) -> str:
        return "-" if value is None else f"{value:.3g}"

    lines = [f"profile '{profile.testbed}' (seconds)"]
    header = f"{'':<8}" + "".join(f"{name:>12}" for name, _ in cells)
    lines.append(header)
    for label, attr in (("alpha", "alpha"), ("beta", "beta"), ("r2/s2", "fit_quality")):
        row = f"{label:<8}"
        for name, coeffs in cells:
            if coeffs is None:
                row += f"{'-':>12}"
            elif label == "beta" and name == "launch":
                row += f"{'-':>12}"
            else:
                row += f"{fmt(getattr(coeffs, attr)):>12}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def _cmd_fit(args: argparse.Namespace) -> int:
    samples = read_samples_csv(args.samples)
    if not samples:
        raise SchemaViolation("$", "sample file contains a header but no rows")
    profile, warnings = fit_profile(samples, testbed=args.testbed)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    Path(args.out).write_bytes(save_profile(profile))
    if args.format == "json":
        sys.stdout.write(save_profile(profile).decode("utf-8"))
    elif args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["op_class", "alpha", "beta", "fit_quality"])
        for precision, pair in profile.gemm.items():
            writer.writerow([f"gpu_gemm_{precision.value}", pair.gpu.alpha, pair.gpu.beta, pair.gpu.fit_quality])
            writer.writerow([f"cpu_gemm_{precision.value}", pair.cpu.alpha, pair.cpu.beta, pair.cpu.fit_quality])
        if profile.pcie:
            writer.writerow(["c2g", profile.pcie.alpha, profile.pcie.beta, profile.pcie.fit_quality])
        if profile.launch:
            writer.writerow(["launch", profile.launch.alpha, 0.0, profile.launch.fit_quality])
    else:
        sys.stdout.write(_fit_table(profile))
    return 0


def _cmd_gen_samples(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    samples = generate_samples(profile, points=args.points, noise=args.noise, seed=_seed(args.seed))
    if args.format == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "samples": [
                {"op_class": sample_token(s), "workload_n": s.workload_n, "elapsed_s": s.elapsed_s}
                for s in samples
            ],
        }
        Path(args.out).write_text(_dump_json(doc), encoding="utf-8")
    else:
        write_samples_csv(samples, args.out)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# solvers


def _auto_rgg(profile, layers, workload, n_steps: int) -> list[float]:
    # Unlimited budget: the greedy sweep stops only when more residency
    # stops helping, which lands each layer on its best grid fraction.
    budget = sum(layer.layer_bytes for layer in layers)
    plan = greedy_assign(profile, layers, workload, budget=budget, n_steps=n_steps)
    return list(plan.per_layer_rgg)


def _solve_layers(profile, layers, workload, rgg_values):
    results = []
    for layer, r_gg in zip(layers, rgg_values):
        solution = solve_rcg(profile, layer, workload, r_gg)
        stage = stage_times_generation(profile, layer, workload, solution.rates)
        timeline = evaluate_recurrence(stage, layer.n_gemms)
        results.append((layer, solution, timeline))
    return results


def _cmd_solve_rates(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    _, _, layers = _load_model(args.model)
    workload = Workload(tokens=args.tokens, phase=_PHASES[args.phase])
    if args.rgg == "auto":
        rgg_values = _auto_rgg(profile, layers, workload, args.steps)
    else:
        try:
            rgg = float(args.rgg)
        except ValueError:
            raise SchemaViolation("--rgg", f"expected a number or 'auto', got '{args.rgg}'") from None
        if not 0.0 <= rgg <= 1.0:
            raise SchemaViolation("--rgg", "must lie in [0, 1]")
        rgg_values = [rgg] * len(layers)

    results = _solve_layers(profile, layers, workload, rgg_values)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "profile_sha256": _sha256(args.profile),
        "phase": args.phase,
        "tokens": args.tokens,
        "layers": [
            {
                "index": i,
                "model_dim": layer.model_dim,
                "hidden_dim": layer.hidden_dim,
                "n_gemms": layer.n_gemms,
                "r_gg": rgg_values[i],
                "rates": _rates_dict(solution.rates),
                "t_fin_s": solution.t_fin,
                "case": timeline.case_label.value,
                "candidates": [[cg, t] for cg, t in solution.candidates],
            }
            for i, (layer, solution, timeline) in enumerate(results)
        ],
        "total_t_fin_s": sum(solution.t_fin for _, solution, _ in results),
    }
    if args.format == "text":
        lines = [f"{'layer':>5} {'cc':>10} {'cg':>10} {'gg':>10} {'t_fin_s':>12} case"]
        for entry in doc["layers"]:
            r = entry["rates"]
            lines.append(
                f"{entry['index']:>5} {r['cc']:>10.4f} {r['cg']:>10.4f} {r['gg']:>10.4f} "
                f"{entry['t_fin_s']:>12.6e} {entry['case']}"
            )
        lines.append(f"total t_fin: {doc['total_t_fin_s']:.6e} s")
        _emit("\n".join(lines) + "\n", args.out)
    elif args.format == "csv":
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["layer", "cc", "cg", "gg", "t_fin_s", "case"])
        for entry in doc["layers"]:
            r = entry["rates"]
            writer.writerow([entry["index"], r["cc"], r["cg"], r["gg"], entry["t_fin_s"], entry["case"]])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(_dump_json(doc), args.out)
    return 0


def _cmd_assign_memory(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    _, _, layers = _load_model(args.model)
    workload = Workload(tokens=args.tokens, phase=Phase.GENERATION)
    plan = greedy_assign(profile, layers, workload, budget=args.budget_bytes, n_steps=args.steps)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "profile_sha256": _sha256(args.profile),
        "budget_bytes": plan.budget,
        "bytes_used": plan.bytes_used,
        "iterations": plan.iterations,
        "n_steps": args.steps,
        "per_layer_rgg": list(plan.per_layer_rgg),
        "trace": [
            {
                "iteration": step.iteration,
                "layer": step.layer_index,
                "rgg": step.rgg,
                "importance": step.importance,
            }
            for step in plan.trace
        ],
    }
    if args.format == "csv":
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "layer", "rgg", "importance"])
        for step in plan.trace:
            writer.writerow([step.iteration, step.layer_index, step.rgg, step.importance])
        _emit(buf.getvalue(), args.out)
    elif args.format == "text":
        lines = [
            f"budget {plan.budget:.0f} bytes, used {plan.bytes_used:.0f} "
            f"({plan.iterations} iterations)"
        ]
        for i, rgg in enumerate(plan.per_layer_rgg):
            lines.append(f"layer {i}: r_gg = {rgg:.4f}")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(_dump_json(doc), args.out)
    return 0


def _cmd_assign_tokens(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    _, _, layers = _load_model(args.model)
    rates = _load_rates(args.rates, len(layers))
    transfer_model = _TRANSFER_FLAGS[args.transfer_model]

    cache: dict[tuple, object] = {}
    plans = []
    for layer, layer_rates in zip(layers, rates):
        key = (
            layer.model_dim,
            layer.hidden_dim,
            layer.n_gemms,
            layer.precision,
            layer_rates.cc,
            layer_rates.cg,
            layer_rates.gg,
        )
        if key not in cache:
            cache[key] = solve_ng(profile, layer, args.tokens, layer_rates, transfer_model)
        plans.append(cache[key])

    doc = {
        "schema_version": SCHEMA_VERSION,
        "profile_sha256": _sha256(args.profile),
        "tokens": args.tokens,
        "transfer_model": transfer_model,
        "layers": [
            {
                "index": i,
                "n_g": plan.n_g,
                "t_fin_prompt_s": plan.t_fin_prompt,
                "baseline_t_fin_s": plan.baseline_t_fin,
                "speedup": plan.speedup,
            }
            for i, plan in enumerate(plans)
        ],
        "total_t_fin_prompt_s": sum(p.t_fin_prompt for p in plans),
        "total_baseline_t_fin_s": sum(p.baseline_t_fin for p in plans),
    }
    if args.format == "text":
        lines = [f"{'layer':>5} {'n_g':>6} {'t_fin_s':>12} {'baseline_s':>12} {'speedup':>8}"]
        for entry in doc["layers"]:
            lines.append(
                f"{entry['index']:>5} {entry['n_g']:>6} {entry['t_fin_prompt_s']:>12.6e} "
                f"{entry['baseline_t_fin_s']:>12.6e} {entry['speedup']:>8.2f}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    elif args.format == "csv":
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["layer", "n_g", "t_fin_prompt_s", "baseline_t_fin_s", "speedup"])
        for entry in doc["layers"]:
            writer.writerow(
                [entry["index"], entry["n_g"], entry["t_fin_prompt_s"],
                 entry["baseline_t_fin_s"], entry["speedup"]]
            )
        _emit(buf.getvalue(), args.out)
    else:
        _emit(_dump_json(doc), args.out)
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    name, precision, layers = _load_model(args.model)
    gen_workload = Workload(tokens=args.gen_tokens, phase=Phase.GENERATION)

    memory_plan = greedy_assign(
        profile, layers, gen_workload, budget=args.budget_bytes, n_steps=args.steps
    )
    results = _solve_layers(profile, layers, gen_workload, memory_plan.per_layer_rgg)

    transfer_model = _TRANSFER_FLAGS[args.transfer_model]
    token_cache: dict[tuple, object] = {}
    token_plans = []
    for (layer, solution, _), r_gg in zip(results, memory_plan.per_layer_rgg):
        key = (layer.model_dim, layer.hidden_dim, layer.n_gemms, layer.precision,
               solution.rates.cc, solution.rates.cg, solution.rates.gg)
        if key not in token_cache:
            token_cache[key] = solve_ng(
                profile, layer, args.prompt_tokens, solution.rates, transfer_model
            )
        token_plans.append(token_cache[key])

    timeline_path = None
    if args.timeline:
        layers_doc = []
        for i, (layer, solution, timeline) in enumerate(results):
            stage = stage_times_generation(profile, layer, gen_workload, solution.rates)
            layers_doc.append(
                {
                    "index": i,
                    "t_fin_s": timeline.t_fin,
                    "case": timeline.case_label.value,
                    "records": timeline_records(stage, timeline),
                }
            )
        Path(args.timeline).write_text(
            _dump_json({"schema_version": SCHEMA_VERSION, "layers": layers_doc}),
            encoding="utf-8",
        )
        timeline_path = args.timeline

    doc = {
        "schema_version": SCHEMA_VERSION,
        "profile": {"testbed": profile.testbed, "sha256": _sha256(args.profile)},
        "model": {"name": name, "precision": precision.value, "layer_count": len(layers)},
        "budget_bytes": args.budget_bytes,
        "memory_plan": {
            "bytes_used": memory_plan.bytes_used,
            "iterations": memory_plan.iterations,
            "n_steps": args.steps,
            "per_layer_rgg": list(memory_plan.per_layer_rgg),
            "trace": [
                {
                    "iteration": s.iteration,
                    "layer": s.layer_index,
                    "rgg": s.rgg,
                    "importance": s.importance,
                }
                for s in memory_plan.trace
            ],
        },
        "generation": {
            "tokens": args.gen_tokens,
            "total_t_fin_s": sum(solution.t_fin for _, solution, _ in results),
            "per_layer": [
                {
                    "index": i,
                    "rates": _rates_dict(solution.rates),
                    "t_fin_s": solution.t_fin,
                    "case": timeline.case_label.value,
                }
                for i, (_, solution, timeline) in enumerate(results)
            ],
        },
        "prompt": {
            "tokens": args.prompt_tokens,
            "transfer_model": transfer_model,
            "total_t_fin_s": sum(p.t_fin_prompt for p in token_plans),
            "total_baseline_t_fin_s": sum(p.baseline_t_fin for p in token_plans),
            "per_layer": [
                {
                    "index": i,
                    "n_g": plan.n_g,
                    "t_fin_s": plan.t_fin_prompt,
                    "baseline_t_fin_s": plan.baseline_t_fin,
                    "speedup": plan.speedup,
                }
                for i, plan in enumerate(token_plans)
            ],
        },
        "timeline_path": timeline_path,
    }
    text = _plan_summary(doc)
    if args.out:
        Path(args.out).write_text(_dump_json(doc), encoding="utf-8")
        sys.stdout.write(text)
    elif args.format == "text":
        sys.stdout.write(text)
    else:
        sys.stdout.write(_dump_json(doc))
    return 0


def _plan_summary(doc: dict) -> str:
    mem = doc["memory_plan"]
    gen = doc["generation"]
    prompt = doc["prompt"]
    lines = [
        f"plan for {doc['model']['name']} ({doc['model']['precision']}, "
        f"{doc['model']['layer_count']} layers) on {doc['profile']['testbed']}",
        f"memory: used {mem['bytes_used']:.3e} of {doc['budget_bytes']:.3e} bytes "
        f"in {mem['iterations']} steps",
        f"{'layer':>5} {'r_gg':>7} {'cc':>7} {'cg':>7} {'gg':>7} "
        f"{'gen t_fin':>12} {'n_g':>6} {'prompt t_fin':>13}",
    ]
    for gl, pl, rgg in zip(gen["per_layer"], prompt["per_layer"], mem["per_layer_rgg"]):
        r = gl["rates"]
        lines.append(
            f"{gl['index']:>5} {rgg:>7.3f} {r['cc']:>7.3f} {r['cg']:>7.3f} {r['gg']:>7.3f} "
            f"{gl['t_fin_s']:>12.4e} {pl['n_g']:>6} {pl['t_fin_s']:>13.4e}"
        )
    lines.append(
        f"totals: generation {gen['total_t_fin_s']:.6e} s/step, "
        f"prompt {prompt['total_t_fin_s']:.6e} s "
        f"(baseline {prompt['total_baseline_t_fin_s']:.6e} s)"
    )
    return "\n".join(lines) + "\n"


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"plan file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "generation" not in doc or "prompt" not in doc:
        raise SchemaViolation("$", "not a plan report (missing generation/prompt sections)")
    if args.format == "json":
        sys.stdout.write(_dump_json(doc))
    elif args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["layer", "r_gg", "cc", "cg", "gg", "gen_t_fin_s", "n_g", "prompt_t_fin_s"])
        mem = doc["memory_plan"]
        for gl, pl, rgg in zip(
            doc["generation"]["per_layer"], doc["prompt"]["per_layer"], mem["per_layer_rgg"]
        ):
            r = gl["rates"]
            writer.writerow([gl["index"], rgg, r["cc"], r["cg"], r["gg"], gl["t_fin_s"], pl["n_g"], pl["t_fin_s"]])
    else:
        sys.stdout.write(_plan_summary(doc))
    return 0


# ---------------------------------------------------------------------------
# simulate / verify


def _cmd_simulate(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    _, _, layers = _load_model(args.model)
    rates = _load_rates(args.rates, len(layers))
    phase = _PHASES[args.phase]
    workload = Workload(tokens=args.tokens, phase=phase)

    recurrence_doc = []
    simulator_doc = []
    deviation = 0.0
    for i, (layer, layer_rates) in enumerate(zip(layers, rates)):
        if phase is Phase.PROMPT:
            stage = stage_times_prompt(
                profile, layer, workload, layer_rates, args.ng,
                _TRANSFER_FLAGS[args.transfer_model],
            )
        else:
            stage = stage_times_generation(profile, layer, workload, layer_rates)
        rec = evaluate_recurrence(stage, layer.n_gemms)
        sim = simulate_streams(stage, layer.n_gemms)
        deviation = max(deviation, abs(rec.t_fin - sim.t_fin))
        recurrence_doc.append(
            {"index": i, "t_fin_s": rec.t_fin, "case": rec.case_label.value,
             "records": timeline_records(stage, rec)}
        )
        simulator_doc.append(
            {"index": i, "t_fin_s": sim.t_fin, "case": sim.case_label.value,
             "records": timeline_records(stage, sim)}
        )

    prefix = args.out_prefix
    if args.format == "csv":
        for suffix, docs in (("recurrence", recurrence_doc), ("simulator", simulator_doc)):
            with open(f"{prefix}_{suffix}.csv", "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["layer", "gemm_index", "stream", "start_s", "end_s"])
                for entry in docs:
                    for record in entry["records"]:
                        writer.writerow(
                            [entry["index"], record["gemm_index"], record["stream"],
                             record["start_s"], record["end_s"]]
                        )
    else:
        for suffix, docs in (("recurrence", recurrence_doc), ("simulator", simulator_doc)):
            Path(f"{prefix}_{suffix}.json").write_text(
                _dump_json({"schema_version": SCHEMA_VERSION, "layers": docs}),
                encoding="utf-8",
            )
    print(f"max |t_fin(recurrence) - t_fin(simulator)| = {deviation:.3e} s")
    if deviation > SIM_DEVIATION_LIMIT:
        print(
            f"error: deviation exceeds {SIM_DEVIATION_LIMIT:.0e}; "
            "the recurrence and the event simulator disagree",
            file=sys.stderr,
        )
        return 1
    return 0


def _cmd_verify_slicing(args: argparse.Namespace) -> int:
    worst = max_recombination_error(_seed(args.seed), args.trials, args.max_dim)
    ok = worst <= 1e-10
    if args.format == "json":
        sys.stdout.write(
            _dump_json(
                {"schema_version": SCHEMA_VERSION, "trials": args.trials,
                 "max_abs_error": worst, "pass": ok}
            )
        )
    else:
        print(f"max abs error over {args.trials} trials: {worst:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def _add_format(parser: argparse.ArgumentParser, default: str = "json") -> None:
    parser.add_argument("--format", choices=("json", "csv", "text"), default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sliceplan",
        description="Plan CPU/GPU weight slicing and token diversion from fitted cost models.",
    )
    sub = parser.add_subparsers(
        dest="command",
        required=True,
        metavar="{fit,solve-rates,assign-memory,assign-tokens,plan,simulate,verify-slicing,report}",
    )

    p = sub.add_parser("fit", help="fit a hardware profile from a sample CSV")
    p.add_argument("samples", help="profile-sample CSV (op_class,workload_n,elapsed_s)")
    p.add_argument("out", help="output profile JSON path")
    p.add_argument("--testbed", default="unnamed", help="label stored in the profile")
    _add_format(p, default="text")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("gen-samples")  # synthetic-sample helper for tests and demos
    p.add_argument("--profile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    _add_format(p, default="csv")
    p.set_defaults(func=_cmd_gen_samples)

    p = sub.add_parser("solve-rates", help="optimal CG rate per layer at a fixed GG rate")
    p.add_argument("--profile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--tokens", type=int, required=True)
    p.add_argument("--phase", choices=tuple(_PHASES), default="gen")
    p.add_argument("--rgg", default="0", help="GPU-resident rate in [0,1], or 'auto'")
    p.add_argument("--steps", type=int, default=16, help="grid steps for --rgg auto")
    p.add_argument("--out", help="write the report here instead of stdout")
    _add_format(p)
    p.set_defaults(func=_cmd_solve_rates)

    p = sub.add_parser("assign-memory", help="greedy GPU-memory assignment across layers")
    p.add_argument("--profile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--budget-bytes", type=float, required=True)
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--tokens", type=int, default=1, help="decode batch size")
    p.add_argument("--out")
    _add_format(p)
    p.set_defaults(func=_cmd_assign_memory)

    p = sub.add_parser("assign-tokens", help="prompt-token diversion at frozen rates")
    p.add_argument("--profile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--tokens", type=int, required=True)
    p.add_argument("--rates", required=True, help="rates JSON (bare, list, or solver report)")
    p.add_argument("--transfer-model", choices=tuple(_TRANSFER_FLAGS), default="literal")
    p.add_argument("--out")
    _add_format(p)
    p.set_defaults(func=_cmd_assign_tokens)

    p = sub.add_parser("plan", help="full plan: memory, rates, and token diversion")
    p.add_argument("--profile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--budget-bytes", type=float, required=True)
    p.add_argument("--prompt-tokens", type=int, required=True)
    p.add_argument("--gen-tokens", type=int, default=1)
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--transfer-model", choices=tuple(_TRANSFER_FLAGS), default="literal")
    p.add_argument("--out", help="write the plan report JSON here")
    p.add_argument("--timeline", help="also export per-layer generation timelines")
    _add_format(p, default="text")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("simulate", help="cross-check the recurrence against the event simulator")
    p.add_argument("--profile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--rates", required=True)
    p.add_argument("--tokens", type=int, required=True)
    p.add_argument("--phase", choices=tuple(_PHASES), default="gen")
    p.add_argument("--ng", type=int, default=0, help="diverted tokens (prompt phase)")
    p.add_argument("--transfer-model", choices=tuple(_TRANSFER_FLAGS), default="literal")
    p.add_argument("--out-prefix", default="timeline")
    _add_format(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify-slicing", help="randomized slicing-recombination check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-dim", type=int, default=64)
    _add_format(p, default="text")
    p.set_defaults(func=_cmd_verify_slicing)

    p = sub.add_parser("report", help="render a plan report")
    p.add_argument("--plan", required=True)
    _add_format(p, default="text")
    p.set_defaults(func=_cmd_report)

    return parser


_INPUT_ERRORS = (
    SchemaViolation,
    EmptySamples,
    DegenerateSamples,
    MixedOpClass,
    ShapeMismatch,
    TokenCountOutOfRange,
    FileNotFoundError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
