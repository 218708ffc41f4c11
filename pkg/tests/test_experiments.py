"""Experiment harness: schedule diagnostics, report structure, integrity
verification, CSV round trips, and worker-count independence."""
from __future__ import annotations

import json
import math

import numpy as np
import pytest

from stabledrift import (
    ConfigurationError,
    ParameterError,
    Schedule,
    StableParams,
    builtin_kernel,
    builtin_model,
    config_hash,
    read_records_csv,
    run_bias_comparison,
    run_clt,
    run_consistency,
    run_lln_check,
    validate_schedule,
    write_report,
)


@pytest.fixture(scope="module")
def ou():
    return builtin_model("ou_linear", {"gamma": 0.0, "lam": 1.0, "sigma": 1.0})


@pytest.fixture(scope="module")
def noise():
    return StableParams(1.5, 0.0)


@pytest.fixture(scope="module")
def epan():
    return builtin_kernel("epanechnikov")


@pytest.fixture(scope="module")
def lln_report(ou, noise, epan):
    sched = Schedule(n=20_000, delta=0.01, h=0.4, alpha=1.5, kappa=2.0)
    return run_lln_check(ou, noise, epan, sched, 0.0, k_values=[0, 1, 2],
                         replicates=6, master_seed=501, burn_in=5_000, workers=1)


class TestSchedule:
    def test_validation(self):
        with pytest.raises(ParameterError):
            Schedule(n=0, delta=0.01, h=0.3, alpha=1.5)
        with pytest.raises(ParameterError):
            Schedule(n=100, delta=-0.01, h=0.3, alpha=1.5)
        with pytest.raises(ParameterError):
            Schedule(n=100, delta=0.01, h=0.0, alpha=1.5)
        with pytest.raises(ParameterError):
            Schedule(n=100, delta=0.01, h=0.3, alpha=2.5)
        with pytest.raises(ParameterError):
            Schedule(n=100, delta=0.01, h=0.3, alpha=1.5, kappa=1.5)

    def test_diagnostic_values(self):
        sched = Schedule(n=100_000, delta=0.01, h=0.3, alpha=1.5, kappa=2.0)
        diag = validate_schedule(sched)
        assert diag.n_delta_h == pytest.approx(300.0, rel=1e-12)
        assert diag.rate == pytest.approx(300.0 ** (1.0 / 3.0), rel=1e-12)
        assert diag.proxy_centering == pytest.approx(diag.rate * 0.3, rel=1e-12)
        assert diag.proxy_bias == pytest.approx(diag.rate * 0.09, rel=1e-12)
        assert diag.proxy_bias == pytest.approx(0.602489655, rel=1e-8)
        assert diag.proxy_discretization == pytest.approx(diag.rate * 0.1, rel=1e-12)
        assert diag.scheme_i and diag.scheme_ii
        assert diag.classification == "both"
        assert diag.lines()

    def test_classification_thresholds(self):
        # enormous bandwidth pushes both proxies past the O(1) threshold
        diag = validate_schedule(Schedule(n=10 ** 9, delta=0.01, h=0.9, alpha=1.5))
        assert diag.classification in ("scheme (ii)", "neither")
        small = validate_schedule(Schedule(n=50, delta=0.01, h=0.1, alpha=1.5))
        assert any("nDh" in note or "n*delta*h" in note or "small" in note.lower()
                   for note in small.notes)

    def test_unit_alpha_note(self):
        diag = validate_schedule(Schedule(n=1000, delta=0.01, h=0.3, alpha=1.0, kappa=2.0))
        assert diag.rate == 1.0
        assert any("alpha" in note.lower() for note in diag.notes)


class TestLlnReport:
    def test_structure(self, lln_report):
        rep = lln_report
        assert rep.kind == "lln"
        assert len(rep.records) == 6 * 3
        methods = {r.method for r in rep.records}
        assert methods == {"moment_k0", "moment_k1", "moment_k2"}
        assert {s["k"] for s in rep.summaries} == {0, 1, 2}
        assert {c.name for c in rep.checks} >= {"lln-moment-k0", "lln-moment-k1", "lln-moment-k2"}
        for record in rep.records:
            assert math.isfinite(record.estimate)

    def test_seed_layout(self, lln_report):
        seeds = [r.seed for r in lln_report.records if r.method == "moment_k0"]
        assert len(set(seeds)) == 6

    def test_integrity_and_recompute(self, lln_report):
        assert lln_report.verify_integrity()
        summaries, checks = lln_report.recompute_summaries()
        assert summaries == lln_report.summaries
        assert [c.name for c in checks] == [c.name for c in lln_report.checks]

    def test_write_read_round_trip(self, lln_report, tmp_path):
        paths = write_report(lln_report, tmp_path)
        assert {p.name for p in paths.values()} == {
            "lln_records.csv", "lln_summary.csv", "lln_manifest.json"}
        records = read_records_csv(paths["records"])
        assert len(records) == len(lln_report.records)
        for got, want in zip(records, lln_report.records):
            assert (got.replicate, got.seed, got.x, got.method) == (
                want.replicate, want.seed, want.x, want.method)
            assert got.estimate == want.estimate
            assert math.isnan(got.error) == math.isnan(want.error)
            assert got.degenerate == want.degenerate
        manifest = json.loads(paths["manifest"].read_text())
        assert manifest["config_hash"] == config_hash(lln_report.config)
        assert manifest["checks"]

    def test_worker_count_does_not_change_bytes(self, ou, noise, epan, lln_report, tmp_path):
        sched = Schedule(n=20_000, delta=0.01, h=0.4, alpha=1.5, kappa=2.0)
        other = run_lln_check(ou, noise, epan, sched, 0.0, k_values=[0, 1, 2],
                              replicates=6, master_seed=501, burn_in=5_000, workers=3)
        assert other.records == lln_report.records
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        write_report(lln_report, a_dir)
        write_report(other, b_dir)
        for name in ("lln_records.csv", "lln_summary.csv", "lln_manifest.json"):
            assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()


class TestConsistency:
    def test_ladder_structure(self, ou, noise, epan):
        schedules = [
            Schedule(n=1500, delta=0.02, h=0.5, alpha=1.5, kappa=2.0),
            Schedule(n=6000, delta=0.015, h=0.4, alpha=1.5, kappa=2.0),
        ]
        rep = run_consistency(ou, noise, epan, schedules, [0.0], replicates=4,
                              master_seed=77, burn_in=2_000, workers=1)
        assert rep.kind == "consistency"
        assert len(rep.records) == 2 * 4
        assert len(rep.summaries) == 2
        assert all(math.isfinite(s["rmse"]) for s in rep.summaries)
        names = {c.name for c in rep.checks}
        assert "rmse-strictly-decreasing-x0" in names
        assert "final-rmse-below-half-x0" in names
        assert rep.verify_integrity()

    def test_ladder_violation_rejected(self, ou, noise, epan):
        schedules = [
            Schedule(n=6000, delta=0.01, h=0.3, alpha=1.5),
            Schedule(n=1500, delta=0.02, h=0.5, alpha=1.5),
        ]
        with pytest.raises(ParameterError):
            run_consistency(ou, noise, epan, schedules, [0.0], replicates=4,
                            master_seed=77, burn_in=1_000, workers=1)

    def test_alpha_mismatch_rejected(self, ou, epan):
        schedules = [Schedule(n=1500, delta=0.02, h=0.5, alpha=1.8, kappa=2.0)]
        with pytest.raises(ConfigurationError):
            run_consistency(ou, StableParams(1.5, 0.0), epan, schedules, [0.0],
                            replicates=4, master_seed=77, burn_in=1_000, workers=1)


class TestBiasComparison:
    def test_structure_and_theory_columns(self, ou, epan):
        noise = StableParams(1.8, 0.0)
        sched = Schedule(n=8_000, delta=0.01, h=0.4, alpha=1.8, kappa=2.0)
        rep = run_bias_comparison(ou, noise, builtin_kernel("uniform_right"), sched,
                                  [0.0, 0.5], replicates=6, master_seed=900,
                                  burn_in=2_000, workers=1)
        assert len(rep.records) == 2 * 2 * 6
        assert {r.method for r in rep.records} == {"local_linear", "nadaraya_watson"}
        for s in rep.summaries:
            if s["method"] == "local_linear":
                assert s["theory_first_order"] == 0.0
                # linear drift has no curvature bias
                assert s["theory_bias_h2"] == 0.0
            else:
                assert s["theory_first_order"] == pytest.approx(0.4 * 0.5)
            assert s["replicates"] == 6
            assert math.isfinite(s["mean_error"])
            assert math.isfinite(s["mc_se"])
        assert rep.verify_integrity()

    def test_symmetric_kernel_zero_first_order(self, ou, noise, epan):
        sched = Schedule(n=8_000, delta=0.01, h=0.4, alpha=1.5, kappa=2.0)
        rep = run_bias_comparison(ou, noise, epan, sched, [0.0], replicates=4,
                                  master_seed=901, burn_in=2_000, workers=1)
        for s in rep.summaries:
            assert s["theory_first_order"] == 0.0


@pytest.fixture(scope="module")
def clt_report(ou, noise, epan):
    sched = Schedule(n=20_000, delta=0.01, h=0.4, alpha=1.5, kappa=2.0)
    return run_clt(ou, noise, epan, sched, 0.0, replicates=60, master_seed=606,
                   burn_in=5_000, reference_size=20_000, workers=1)


class TestClt:
    def test_structure(self, clt_report):
        rep = clt_report
        assert rep.kind == "clt"
        ll = [r for r in rep.records if r.method == "local_linear"]
        fhat = [r for r in rep.records if r.method == "local_linear_fhat"]
        assert len(ll) == 60 and len(fhat) == 60
        for r in ll + fhat:
            if not r.degenerate:
                assert math.isfinite(r.std_error)
        summary = [s for s in rep.summaries if s["method"] == "local_linear"][0]
        for key in ("ks_vs_stable", "ks_critical", "ks_symmetry", "tail_index", "scale_ratio"):
            assert math.isfinite(summary[key])
        names = {c.name for c in rep.checks}
        assert {"clt-ks-vs-stable", "clt-symmetry", "clt-tail-index"} <= names

    def test_plugin_rows_share_seeds(self, clt_report):
        ll = {r.replicate: r.seed for r in clt_report.records if r.method == "local_linear"}
        fhat = {r.replicate: r.seed for r in clt_report.records if r.method == "local_linear_fhat"}
        assert ll == fhat

    def test_integrity_regenerates_reference(self, clt_report):
        assert clt_report.verify_integrity()

    def test_gaussian_control_skips_tail_window(self, ou, epan):
        sched = Schedule(n=15_000, delta=0.01, h=0.4, alpha=2.0, kappa=3.0)
        rep = run_clt(ou, StableParams(2.0, 0.0), epan, sched, 0.0, replicates=40,
                      master_seed=607, burn_in=4_000, reference_size=15_000, workers=1)
        names = {c.name for c in rep.checks}
        assert "clt-tail-index" not in names
        assert "clt-ks-vs-stable" in names

    def test_replicate_floor(self, ou, noise, epan):
        sched = Schedule(n=2_000, delta=0.01, h=0.4, alpha=1.5, kappa=2.0)
        with pytest.raises(ParameterError):
            run_clt(ou, noise, epan, sched, 0.0, replicates=1, master_seed=1,
                    burn_in=500, reference_size=1_000, workers=1)


class TestConfigHash:
    def test_key_order_invariance(self):
        a = {"b": 1, "a": [1, 2, {"z": True}]}
        b = {"a": [1, 2, {"z": True}], "b": 1}
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash({"b": 2, "a": [1, 2, {"z": True}]})

    def test_read_records_rejects_wrong_header(self, tmp_path):
        bad = tmp_path / "records.csv"
        bad.write_text("foo,bar\n1,2\n")
        with pytest.raises(ParameterError):
            read_records_csv(bad)
