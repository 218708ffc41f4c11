"""Command line interface: config loading, overrides, outputs, exit codes."""
from __future__ import annotations

import json

import numpy as np
import pytest

from stabledrift.cli import main


def write_config(tmp_path, payload, name="config.json"):
    target = tmp_path / name
    target.write_text(json.dumps(payload))
    return str(target)


BASE = {
    "model": "ou_linear",
    "model_params": {"gamma": 0.0, "lam": 1.0, "sigma": 1.0},
    "alpha": 1.5,
    "n": 2000,
    "delta": 0.01,
    "h": 0.4,
    "burn_in": 500,
    "seed": 321,
}


class TestSimulate:
    def test_writes_path_and_diagnostics(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE)
        out_dir = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out-dir", str(out_dir)]) == 0
        printed = capsys.readouterr().out
        assert "jump diagnostics" in printed
        target = out_dir / "path.csv"
        lines = target.read_text().strip().split("\n")
        assert lines[0] == "i,t,x"
        assert len(lines) == BASE["n"] + 2

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE)
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--out-dir", str(a)]) == 0
        assert main(["simulate", "--config", cfg, "--out-dir", str(b)]) == 0
        capsys.readouterr()
        assert (a / "path.csv").read_bytes() == (b / "path.csv").read_bytes()

    def test_seed_flag_changes_output(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE)
        a = tmp_path / "a"
        b = tmp_path / "b"
        main(["simulate", "--config", cfg, "--out-dir", str(a)])
        main(["simulate", "--config", cfg, "--out-dir", str(b), "--seed", "999"])
        capsys.readouterr()
        assert (a / "path.csv").read_bytes() != (b / "path.csv").read_bytes()


class TestEstimate:
    def test_both_methods_over_grid(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "x_points": [-0.5, 0.0, 0.5]})
        out_dir = tmp_path / "out"
        code = main(["estimate", "--config", cfg, "--out-dir", str(out_dir)])
        capsys.readouterr()
        assert code == 0
        lines = (out_dir / "estimates.csv").read_text().strip().split("\n")
        assert lines[0] == "x,estimate,method,h,degenerate,denominator"
        assert len(lines) == 1 + 2 * 3
        methods = {line.split(",")[2] for line in lines[1:]}
        assert methods == {"local_linear", "nadaraya_watson"}

    def test_single_method_and_h_override(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "x_points": [0.0]})
        out_dir = tmp_path / "out"
        code = main(["estimate", "--config", cfg, "--out-dir", str(out_dir),
                     "--method", "local_linear", "--h", "0.55"])
        capsys.readouterr()
        assert code == 0
        rows = (out_dir / "estimates.csv").read_text().strip().split("\n")[1:]
        assert len(rows) == 1
        assert float(rows[0].split(",")[3]) == 0.55

    def test_estimate_from_csv_matches_inline(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "x_points": [0.0, 0.3]})
        sim_dir = tmp_path / "sim"
        inline_dir = tmp_path / "inline"
        file_dir = tmp_path / "fromfile"
        main(["simulate", "--config", cfg, "--out-dir", str(sim_dir)])
        main(["estimate", "--config", cfg, "--out-dir", str(inline_dir)])
        main(["estimate", "--config", cfg, "--out-dir", str(file_dir),
              "--path-csv", str(sim_dir / "path.csv")])
        capsys.readouterr()
        assert (inline_dir / "estimates.csv").read_bytes() == (
            file_dir / "estimates.csv").read_bytes()

    def test_estimates_track_linear_drift(self, tmp_path, capsys):
        # light-tail endpoint keeps the five pointwise errors small enough
        # for a straight-line read of the drift
        cfg = write_config(tmp_path, {
            **BASE, "alpha": 2.0, "n": 50_000, "burn_in": 10_000, "seed": 2_024_111,
            "x_points": [-1.0, -0.5, 0.0, 0.5, 1.0],
        })
        out_dir = tmp_path / "out"
        assert main(["estimate", "--config", cfg, "--out-dir", str(out_dir),
                     "--method", "local_linear"]) == 0
        capsys.readouterr()
        rows = (out_dir / "estimates.csv").read_text().strip().split("\n")[1:]
        xs = np.array([float(r.split(",")[0]) for r in rows])
        values = np.array([float(r.split(",")[1]) for r in rows])
        slope = np.polyfit(xs, values, 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.25)

    def test_unknown_method_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE)
        code = main(["estimate", "--config", cfg, "--out-dir", str(tmp_path / "o"),
                     "--method", "spline"])
        err = capsys.readouterr().err
        assert code == 2
        assert "method" in err


class TestConfigErrors:
    def test_missing_model(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"n": 100})
        code = main(["simulate", "--config", cfg])
        err = capsys.readouterr().err
        assert code == 2
        assert "missing required field: model" in err

    def test_unknown_field(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "bandwidth": 0.3})
        code = main(["simulate", "--config", cfg])
        err = capsys.readouterr().err
        assert code == 2
        assert "bandwidth" in err

    def test_malformed_json_reports_position(self, tmp_path, capsys):
        target = tmp_path / "broken.json"
        target.write_text('{"model": "ou_linear",}')
        code = main(["simulate", "--config", str(target)])
        err = capsys.readouterr().err
        assert code == 2
        assert "broken.json" in err
        assert "line" in err

    def test_wrong_type_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "n": "many"})
        code = main(["simulate", "--config", cfg])
        assert code == 2
        capsys.readouterr()

    def test_missing_file(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(tmp_path / "absent.json")])
        assert code == 2
        capsys.readouterr()

    def test_model_flag_without_config(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main(["simulate", "--model", "ou_linear", "--n", "500",
                     "--burn-in", "100", "--out-dir", str(out_dir)])
        capsys.readouterr()
        assert code == 0
        assert (out_dir / "path.csv").exists()


class TestExperiment:
    def test_schedule_kind_prints_diagnostics(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "n": 100_000, "h": 0.3, "kind": "schedule"})
        code = main(["experiment", "--config", cfg])
        out = capsys.readouterr().out
        assert code == 0
        assert "classification" in out
        assert "both" in out

    def test_lln_passing_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            **BASE, "n": 30_000, "burn_in": 6_000, "kind": "lln",
            "replicates": 6, "k_values": [1], "seed": 515,
        })
        out_dir = tmp_path / "out"
        code = main(["experiment", "--config", cfg, "--out-dir", str(out_dir)])
        out = capsys.readouterr().out
        assert code == 0
        assert "CHECK lln-moment-k1: PASS" in out
        assert (out_dir / "lln_records.csv").exists()
        assert (out_dir / "lln_summary.csv").exists()
        assert (out_dir / "lln_manifest.json").exists()

    def test_lln_failing_config_exits_one(self, tmp_path, capsys):
        # h far beyond the support of the stationary mass oversmooths
        # k=0 deterministically: the moment sum lands near the window
        # average of f, a ~70% relative error
        cfg = write_config(tmp_path, {
            **BASE, "n": 5_000, "burn_in": 1_000, "h": 5.0, "kind": "lln",
            "replicates": 4, "k_values": [0], "seed": 516,
        })
        code = main(["experiment", "--config", cfg, "--out-dir", str(tmp_path / "out")])
        out = capsys.readouterr().out
        assert code == 1
        assert "CHECK lln-moment-k0: FAIL" in out

    def test_lln_schedule_flag_overrides_top_level(self, tmp_path, capsys):
        # the --schedule entry, not the top-level n/delta/h, must drive
        # single-schedule kinds; h=5.0 oversmooths k=0 so the check fails
        cfg = write_config(tmp_path, {
            **BASE, "n": 30_000, "burn_in": 1_000, "kind": "lln",
            "replicates": 4, "k_values": [0], "seed": 516,
        })
        out_dir = tmp_path / "out"
        code = main(["experiment", "--config", cfg, "--out-dir", str(out_dir),
                     "--schedule", "5000,0.01,5.0"])
        out = capsys.readouterr().out
        assert code == 1
        assert "CHECK lln-moment-k0: FAIL" in out
        manifest = json.loads((out_dir / "lln_manifest.json").read_text())
        assert manifest["config"]["schedule"]["n"] == 5000
        assert manifest["config"]["schedule"]["h"] == 5.0

    def test_lln_rejects_multiple_schedules(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            **BASE, "kind": "lln", "replicates": 4,
            "schedules": [
                {"n": 2000, "delta": 0.01, "h": 0.4},
                {"n": 4000, "delta": 0.01, "h": 0.4},
            ],
        })
        code = main(["experiment", "--config", cfg, "--out-dir", str(tmp_path / "out")])
        err = capsys.readouterr().err
        assert code == 2
        assert "exactly one schedule" in err

    def test_consistency_requires_schedules(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "kind": "consistency", "replicates": 4})
        code = main(["experiment", "--config", cfg, "--out-dir", str(tmp_path / "out")])
        err = capsys.readouterr().err
        assert code == 2
        assert "schedule" in err

    def test_consistency_schedule_flags(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            **BASE, "kind": "consistency", "replicates": 4, "burn_in": 1_000, "seed": 99,
        })
        out_dir = tmp_path / "out"
        code = main(["experiment", "--config", cfg, "--out-dir", str(out_dir),
                     "--schedule", "1500,0.02,0.5", "--schedule", "6000,0.015,0.4"])
        capsys.readouterr()
        assert code in (0, 1)
        assert (out_dir / "consistency_records.csv").exists()

    def test_worker_flag_reproducibility(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            **BASE, "n": 8_000, "burn_in": 2_000, "kind": "lln",
            "replicates": 5, "k_values": [0, 2], "seed": 517,
        })
        a = tmp_path / "a"
        b = tmp_path / "b"
        main(["experiment", "--config", cfg, "--out-dir", str(a), "--workers", "1"])
        main(["experiment", "--config", cfg, "--out-dir", str(b), "--workers", "4"])
        capsys.readouterr()
        for name in ("lln_records.csv", "lln_summary.csv", "lln_manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_unknown_kind(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**BASE, "kind": "bootstrap"})
        code = main(["experiment", "--config", cfg])
        err = capsys.readouterr().err
        assert code == 2
        assert "bootstrap" in err

    def test_clt_small_run_writes_report(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            **BASE, "n": 15_000, "burn_in": 3_000, "kind": "clt",
            "replicates": 40, "reference_size": 10_000, "seed": 518,
            "tail_fraction": 0.2,
        })
        out_dir = tmp_path / "out"
        code = main(["experiment", "--config", cfg, "--out-dir", str(out_dir)])
        out = capsys.readouterr().out
        assert code in (0, 1)
        assert "clt-ks-vs-stable" in out
        assert (out_dir / "clt_manifest.json").exists()


def test_bad_subcommand_exits_two(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["transmogrify"])
    capsys.readouterr()
    assert excinfo.value.code == 2
