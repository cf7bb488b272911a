import json

import pytest

from sliceplan.cli import main
from sliceplan.pipeline import LayerSpec, Phase, SlicingRates, Workload
from sliceplan.perf_model import Precision, load_profile
from sliceplan.rate_solver import solve_rcg
from sliceplan.testbeds import TESTBED_A


@pytest.fixture()
def profile_path(tmp_path):
    path = tmp_path / "profile.json"
    path.write_text(json.dumps(TESTBED_A), encoding="utf-8")
    return path


def model_file(tmp_path, layers, precision="fp16", name="toy"):
    path = tmp_path / "model.json"
    path.write_text(
        json.dumps({"name": name, "precision": precision, "layers": layers}),
        encoding="utf-8",
    )
    return path


@pytest.fixture()
def model_path(tmp_path):
    return model_file(tmp_path, [{"M": 4096, "H": 14336, "n_l": 2, "count": 1}])


class TestFit:
    def test_round_trip_table(self, tmp_path, profile_path, capsys):
        samples = tmp_path / "samples.csv"
        out = tmp_path / "fitted.json"
        assert main(["gen-samples", "--profile", str(profile_path), "--out", str(samples)]) == 0
        assert main(["fit", str(samples), str(out), "--testbed", "refit"]) == 0
        text = capsys.readouterr().out
        # Noise-free samples reproduce the generating coefficients to 3
        # significant figures in the printed table.
        for expected in ("1e-07", "3.2e-12", "7.4e-07", "1.6e-11", "3e-06", "2.6e-11", "4.4e-05"):
            assert expected in text
        fitted = load_profile(out)
        assert fitted.pcie.alpha == pytest.approx(3.0e-6, rel=1e-6)

    def test_empty_csv_exit_2_names_header(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("", encoding="utf-8")
        out = tmp_path / "out.json"
        assert main(["fit", str(empty), str(out)]) == 2
        assert "op_class,workload_n,elapsed_s" in capsys.readouterr().err

    def test_single_class_warns_but_fits(self, tmp_path, capsys):
        csv_path = tmp_path / "one.csv"
        rows = ["op_class,workload_n,elapsed_s"]
        rows += [f"c2g,{n},{3.0e-6 + n * 2.6e-11!r}" for n in (1e5, 1e6, 1e7)]
        csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        out = tmp_path / "out.json"
        assert main(["fit", str(csv_path), str(out), "--testbed", "partial"]) == 0
        err = capsys.readouterr().err
        assert "launch" in err and "warning" in err
        fitted = load_profile(out)
        assert fitted.pcie.beta == pytest.approx(2.6e-11, rel=1e-9)
        assert fitted.launch is None


class TestGenSamples:
    def test_env_seed_overrides_flag(self, tmp_path, profile_path, monkeypatch, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        monkeypatch.setenv("SLICEPLAN_SEED", "99")
        main(["gen-samples", "--profile", str(profile_path), "--out", str(a),
              "--noise", "0.01", "--seed", "1"])
        main(["gen-samples", "--profile", str(profile_path), "--out", str(b),
              "--noise", "0.01", "--seed", "2"])
        assert a.read_bytes() == b.read_bytes()
        monkeypatch.delenv("SLICEPLAN_SEED")
        c = tmp_path / "c.csv"
        main(["gen-samples", "--profile", str(profile_path), "--out", str(c),
              "--noise", "0.01", "--seed", "1"])
        assert c.read_bytes() != a.read_bytes()


class TestSolveRates:
    def test_report_matches_library(self, tmp_path, profile_path, model_path, capsys):
        assert main([
            "solve-rates", "--profile", str(profile_path), "--model", str(model_path),
            "--tokens", "1", "--rgg", "0",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        layer = LayerSpec(4096, 14336, 2, Precision.FP16)
        expected = solve_rcg(
            load_profile(profile_path), layer, Workload(1, Phase.GENERATION), 0.0
        )
        entry = doc["layers"][0]
        assert entry["rates"]["cg"] == expected.rates.cg
        assert entry["t_fin_s"] == expected.t_fin
        assert doc["total_t_fin_s"] == expected.t_fin
        assert entry["case"] in ("case1", "case2", "case3", "cpu_bound", "degenerate")
        assert [c for c, _ in expected.candidates] == [c for c, _ in entry["candidates"]]

    def test_auto_rgg(self, tmp_path, profile_path, model_path, capsys):
        assert main([
            "solve-rates", "--profile", str(profile_path), "--model", str(model_path),
            "--tokens", "1", "--rgg", "auto", "--steps", "4",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        # Unlimited-budget residency lands on the per-layer best fraction.
        assert doc["layers"][0]["r_gg"] == 1.0

    def test_bad_rgg_is_input_error(self, profile_path, model_path, capsys):
        assert main([
            "solve-rates", "--profile", str(profile_path), "--model", str(model_path),
            "--tokens", "1", "--rgg", "fast",
        ]) == 2


class TestAssignMemory:
    def test_zero_budget(self, profile_path, model_path, capsys):
        assert main([
            "assign-memory", "--profile", str(profile_path), "--model", str(model_path),
            "--budget-bytes", "0",
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["per_layer_rgg"] == [0.0]
        assert doc["iterations"] == 0


class TestAssignTokens:
    def test_accepts_solver_report(self, tmp_path, profile_path, model_path, capsys):
        rates_path = tmp_path / "rates.json"
        assert main([
            "solve-rates", "--profile", str(profile_path), "--model", str(model_path),
            "--tokens", "1", "--rgg", "0", "--out", str(rates_path),
        ]) == 0
        assert main([
            "assign-tokens", "--profile", str(profile_path), "--model", str(model_path),
            "--tokens", "64", "--rates", str(rates_path),
        ]) == 0
        doc = json.loads(capsys.readouterr().out)
        entry = doc["layers"][0]
        assert 0 <= entry["n_g"] <= 64
        assert entry["t_fin_prompt_s"] <= entry["baseline_t_fin_s"]
        assert entry["speedup"] >= 1.0

    def test_accepts_bare_rates(self, tmp_path, profile_path, model_path, capsys):
        rates_path = tmp_path / "bare.json"
        rates_path.write_text(json.dumps({"cc": 1.0, "cg": 0.0, "gg": 0.0}), encoding="utf-8")
        assert main([
            "assign-tokens", "--profile", str(profile_path), "--model", str(model_path),
            "--tokens", "32", "--rates", str(rates_path),
        ]) == 0


class TestPlan:
    def test_budget_zero_equals_solver(self, tmp_path, profile_path, model_path, capsys):
        out = tmp_path / "plan.json"
        assert main([
            "plan", "--profile", str(profile_path), "--model", str(model_path),
            "--budget-bytes", "0", "--prompt-tokens", "64", "--gen-tokens", "1",
            "--out", str(out),
        ]) == 0
        doc = json.loads(out.read_text())
        layer = LayerSpec(4096, 14336, 2, Precision.FP16)
        expected = solve_rcg(load_profile(profile_path), layer, Workload(1, Phase.GENERATION), 0.0)
        assert doc["generation"]["per_layer"][0]["t_fin_s"] == expected.t_fin
        assert doc["memory_plan"]["per_layer_rgg"] == [0.0]
        assert doc["schema_version"] == 1
        assert doc["profile"]["sha256"]

    def test_reports_are_byte_identical(self, tmp_path, profile_path, capsys):
        model = model_file(tmp_path, [{"M": 1024, "H": 4096, "n_l": 2, "count": 2}])
        out1 = tmp_path / "p1.json"
        out2 = tmp_path / "p2.json"
        for out in (out1, out2):
            assert main([
                "plan", "--profile", str(profile_path), "--model", str(model),
                "--budget-bytes", "16777216", "--prompt-tokens", "32",
                "--steps", "4", "--out", str(out),
            ]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_timeline_export(self, tmp_path, profile_path, model_path, capsys):
        out = tmp_path / "plan.json"
        timeline = tmp_path / "timeline.json"
        assert main([
            "plan", "--profile", str(profile_path), "--model", str(model_path),
            "--budget-bytes", "0", "--prompt-tokens", "16",
            "--out", str(out), "--timeline", str(timeline),
        ]) == 0
        doc = json.loads(timeline.read_text())
        records = doc["layers"][0]["records"]
        assert {r["stream"] for r in records} == {"launch", "transfer", "gpu", "cpu"}
        assert all(r["end_s"] >= r["start_s"] for r in records)
        assert json.loads(out.read_text())["timeline_path"] == str(timeline)


class TestSimulate:
    def test_plan_feeds_back_into_simulate(self, tmp_path, profile_path, model_path, capsys):
        plan_path = tmp_path / "plan.json"
        main([
            "plan", "--profile", str(profile_path), "--model", str(model_path),
            "--budget-bytes", "0", "--prompt-tokens", "64", "--gen-tokens", "1",
            "--out", str(plan_path),
        ])
        prefix = str(tmp_path / "tl")
        assert main([
            "simulate", "--profile", str(profile_path), "--model", str(model_path),
            "--rates", str(plan_path), "--tokens", "1", "--phase", "gen",
            "--out-prefix", prefix,
        ]) == 0
        rec = json.loads((tmp_path / "tl_recurrence.json").read_text())
        sim = json.loads((tmp_path / "tl_simulator.json").read_text())
        plan_doc = json.loads(plan_path.read_text())
        assert rec["layers"][0]["t_fin_s"] == plan_doc["generation"]["per_layer"][0]["t_fin_s"]
        assert sim["layers"][0]["t_fin_s"] == rec["layers"][0]["t_fin_s"]

    def test_csv_output(self, tmp_path, profile_path, model_path, capsys):
        rates_path = tmp_path / "rates.json"
        rates_path.write_text(json.dumps({"cc": 0.5, "cg": 0.25, "gg": 0.25}), encoding="utf-8")
        prefix = str(tmp_path / "tl")
        assert main([
            "simulate", "--profile", str(profile_path), "--model", str(model_path),
            "--rates", str(rates_path), "--tokens", "1", "--format", "csv",
            "--out-prefix", prefix,
        ]) == 0
        lines = (tmp_path / "tl_recurrence.csv").read_text().splitlines()
        assert lines[0] == "layer,gemm_index,stream,start_s,end_s"
        assert len(lines) == 1 + 4 * 2


class TestVerifySlicing:
    def test_passes(self, capsys):
        assert main(["verify-slicing", "--seed", "3", "--trials", "10", "--max-dim", "24"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out


class TestReport:
    def test_text_render(self, tmp_path, profile_path, model_path, capsys):
        plan_path = tmp_path / "plan.json"
        main([
            "plan", "--profile", str(profile_path), "--model", str(model_path),
            "--budget-bytes", "0", "--prompt-tokens", "16", "--out", str(plan_path),
        ])
        capsys.readouterr()
        assert main(["report", "--plan", str(plan_path)]) == 0
        assert "totals:" in capsys.readouterr().out

    def test_junk_plan_is_input_error(self, tmp_path, capsys):
        junk = tmp_path / "junk.json"
        junk.write_text("{}", encoding="utf-8")
        assert main(["report", "--plan", str(junk)]) == 2


class TestModelSchema:
    def test_bad_layer_field_path(self, tmp_path, profile_path, capsys):
        model = model_file(tmp_path, [{"M": 0, "H": 4, "n_l": 1}])
        assert main([
            "solve-rates", "--profile", str(profile_path), "--model", str(model),
            "--tokens", "1",
        ]) == 2
        assert "layers[0].M" in capsys.readouterr().err

    def test_missing_profile_file(self, tmp_path, model_path, capsys):
        assert main([
            "solve-rates", "--profile", str(tmp_path / "nope.json"),
            "--model", str(model_path), "--tokens", "1",
        ]) == 2
