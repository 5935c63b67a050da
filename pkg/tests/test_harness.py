import json
import os
import warnings

import numpy as np
import pytest

from debiaslr.data import CovarianceSpec, NoiseSpec
from debiaslr.engine import EtaConfig
from debiaslr.estimators import FitConfig
from debiaslr.harness import (
    ExperimentConfig,
    build_beta_star,
    emit_report,
    run_experiment,
    run_rep,
    ROW_FIELDS,
)


def _small_config(**kw):
    base = dict(
        scenario="nonneg",
        n=60,
        p=8,
        covariance=CovarianceSpec(kind="identity", p=8),
        noise=NoiseSpec(sigma=0.5),
        reps=4,
        seed=3,
        eta=EtaConfig(max_iters=600),
        fit=FitConfig(max_iters=20_000, tol=1e-10),
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestBuildBetaStar:
    def test_monotone_split(self):
        np.testing.assert_array_equal(
            build_beta_star("monotone", 10), np.array([-1.0] * 7 + [1.0] * 3)
        )

    def test_positive_monotone_split(self):
        np.testing.assert_array_equal(
            build_beta_star("positive_monotone", 10), np.array([0.0] * 7 + [1.0] * 3)
        )

    def test_lasso_sparsity(self):
        b = build_beta_star("lasso", 1000)
        assert np.count_nonzero(b) == 5
        np.testing.assert_array_equal(b[995:], np.ones(5))

    def test_slope_integers(self):
        b = build_beta_star("slope", 1000)
        np.testing.assert_array_equal(b[995:], [1.0, 2.0, 3.0, 4.0, 5.0])
        assert np.count_nonzero(b[:995]) == 0

    def test_nonneg_draws(self):
        b = build_beta_star("nonneg", 500, seed=5)
        assert np.all(b >= 0)
        assert 0 < np.count_nonzero(b) < 500  # roughly half clipped
        np.testing.assert_array_equal(b, build_beta_star("nonneg", 500, seed=5))

    def test_rounding_down(self):
        b = build_beta_star("monotone", 9)  # 0.7 * 9 = 6.3 -> 6
        assert np.sum(b < 0) == 6


class TestRunExperiment:
    def test_noiseless_pipeline_recovers_truth(self):
        cfg = _small_config(noise=NoiseSpec(sigma=0.0), reps=1, n=80)
        report = run_experiment(cfg)
        row = report.rows[0]
        assert not row.failed
        assert abs(row.beta_d - row.beta_star_j) < 1e-6
        assert row.covered

    def test_row_count_and_summary(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(_small_config())
        assert len(report.rows) == 4
        assert report.summary["n_ok"] + report.summary["n_failed"] == 4
        ok = [r for r in report.rows if not r.failed]
        assert report.summary["coverage"] == pytest.approx(
            np.mean([r.covered for r in ok])
        )

    def test_deterministic_across_worker_counts(self, tmp_path):
        cfg = _small_config()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            os.environ["DEBIAS_THREADS"] = "1"
            try:
                serial = run_experiment(cfg)
            finally:
                os.environ.pop("DEBIAS_THREADS")
            os.environ["DEBIAS_THREADS"] = "2"
            try:
                parallel = run_experiment(cfg)
            finally:
                os.environ.pop("DEBIAS_THREADS")
        d1 = emit_report(serial, tmp_path / "a")
        d2 = emit_report(parallel, tmp_path / "b")
        for key in ("rows", "summary", "qq"):
            assert open(d1[key], "rb").read() == open(d2[key], "rb").read()

    def test_same_seed_identical_bytes(self, tmp_path):
        cfg = _small_config()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            a = emit_report(run_experiment(cfg), tmp_path / "a")
            b = emit_report(run_experiment(cfg), tmp_path / "b")
        assert open(a["rows"], "rb").read() == open(b["rows"], "rb").read()

    def test_failed_rep_is_flagged_not_fatal(self):
        # an eta budget of 1 iteration with a far-off constraint fails fast
        cfg = _small_config(
            eta=EtaConfig(max_iters=1, feasibility_patience=1, rho_cap=1.0),
            noise=NoiseSpec(sigma=3.0),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(cfg)
        assert len(report.rows) == cfg.reps
        failed = [r for r in report.rows if r.failed]
        assert failed, "expected at least one flagged replication"
        assert all("EtaInfeasibleError" in r.error for r in failed)

    def test_contrast_target(self):
        gamma = np.zeros(8)
        gamma[0], gamma[-1] = 0.5, 0.5
        cfg = _small_config(contrast=gamma, reps=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(cfg)
        bs = build_beta_star("nonneg", 8, 3)
        for row in report.rows:
            if not row.failed:
                assert row.beta_star_j == pytest.approx(float(gamma @ bs))

    def test_delta_bound_when_in_cone(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(_small_config(reps=6))
        for row in report.rows:
            if not row.failed and row.delta_in_cone:
                assert abs(row.delta) <= row.delta_bound + 1e-8


class TestEmitReport:
    def test_files_and_columns(self, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(_small_config())
        paths = emit_report(report, tmp_path / "out")
        header = open(paths["rows"]).readline().strip().split(",")
        assert tuple(header) == ROW_FIELDS
        summary = json.load(open(paths["summary"]))
        assert summary["coverage"] == pytest.approx(report.summary["coverage"])
        qq_lines = open(paths["qq"]).read().splitlines()
        assert qq_lines[0] == "theoretical,stat_half,stat_full"
        assert len(qq_lines) - 1 == report.summary["n_ok"]

    def test_qq_quantiles_for_three_reps(self, tmp_path):
        from scipy.stats import norm

        cfg = _small_config(reps=3, noise=NoiseSpec(sigma=0.1))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(cfg)
        assert report.summary["n_ok"] == 3
        paths = emit_report(report, tmp_path / "out")
        rows = open(paths["qq"]).read().splitlines()[1:]
        theo = [float(r.split(",")[0]) for r in rows]
        np.testing.assert_allclose(theo, norm.ppf([1 / 6, 3 / 6, 5 / 6]), atol=1e-9)
        assert abs(theo[0] + 0.9674) < 1e-4

    def test_qq_sorted_ascending(self, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(_small_config(reps=6))
        paths = emit_report(report, tmp_path / "out")
        rows = [line.split(",") for line in open(paths["qq"]).read().splitlines()[1:]]
        for col in range(3):
            vals = [float(r[col]) for r in rows]
            assert vals == sorted(vals)

    def test_empty_report_headers_only(self, tmp_path):
        cfg = _small_config(
            reps=2, eta=EtaConfig(max_iters=1, feasibility_patience=1, rho_cap=1.0),
            noise=NoiseSpec(sigma=5.0),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(cfg)
        if report.summary["n_ok"] == 0:
            paths = emit_report(report, tmp_path / "out")
            assert open(paths["qq"]).read().splitlines() == ["theoretical,stat_half,stat_full"]


class TestSubgaussianMode:
    def test_rademacher_run(self):
        cfg = _small_config(
            noise=NoiseSpec(kind="rademacher", sigma=0.5),
            sub_gaussian=True,
            reps=3,
            eta=EtaConfig(max_iters=800, rho_prime=4.0),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_experiment(cfg)
        ok = [r for r in report.rows if not r.failed]
        assert ok
        assert report.summary["sub_gaussian"] is True


class TestConfigValidation:
    def test_bad_scenario(self):
        with pytest.raises(ValueError):
            _small_config(scenario="huh")

    def test_target_index_range(self):
        with pytest.raises(ValueError):
            _small_config(target_index=9)

    def test_covariance_dim_mismatch(self):
        with pytest.raises(ValueError):
            _small_config(covariance=CovarianceSpec(kind="identity", p=5))

    def test_rep_seed_independence_of_order(self):
        cfg = _small_config(reps=3)
        bs = build_beta_star(cfg.scenario, cfg.p, cfg.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out_of_order = [run_rep(cfg, bs, r) for r in (2, 0, 1)]
            in_order = [run_rep(cfg, bs, r) for r in (0, 1, 2)]
        by_rep = {r.rep: r for r in out_of_order}
        for row in in_order:
            assert by_rep[row.rep].beta_d == row.beta_d
