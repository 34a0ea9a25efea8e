"""Simulation bench: instance generation, metrics, determinism, reporting."""

import json

import numpy as np
import pytest

from cocolasso.simbench import (
    AdditiveGaussian,
    ARDesign,
    CSDesign,
    MissingBernoulli,
    MultiplicativeLognormal,
    SimConfig,
    condition_diagnostics,
    default_beta_star,
    generate_instance,
    metrics,
    recovery_frequency,
    run_experiment,
    run_replication,
    signed_support_recovered,
)

SMALL = dict(n=40, p=20, replications=3, grid_size=10, cv_folds=3,
             bootstrap_samples=50)


class TestDesigns:
    def test_ar_covariance(self):
        cov = ARDesign(0.5).covariance(4)
        np.testing.assert_allclose(cov[0], [1.0, 0.5, 0.25, 0.125])
        np.testing.assert_array_equal(cov, cov.T)

    def test_cs_covariance(self):
        cov = CSDesign(0.5).covariance(3)
        assert cov[0, 0] == 1.0
        assert cov[0, 1] == 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            ARDesign(1.0)
        with pytest.raises(ValueError):
            CSDesign(1.0)
        with pytest.raises(ValueError):
            AdditiveGaussian(-0.1)
        with pytest.raises(ValueError):
            MultiplicativeLognormal(0.0)
        with pytest.raises(ValueError):
            MissingBernoulli(1.0)


class TestBetaStar:
    def test_default_pattern(self):
        beta = default_beta_star(8)
        np.testing.assert_array_equal(beta, [3, 1.5, 0, 0, 2, 0, 0, 0])

    def test_needs_five_coordinates(self):
        with pytest.raises(ValueError):
            default_beta_star(4)


class TestSimConfig:
    def test_signal_to_noise(self):
        cfg = SimConfig(**SMALL)
        # beta' Sigma beta / sigma^2 with the AR(0.5) design
        sig = ARDesign(0.5).covariance(20)
        beta = default_beta_star(20)
        want = beta @ sig @ beta / 9.0
        assert cfg.signal_to_noise() == pytest.approx(want)

    def test_beta_star_length_checked(self):
        with pytest.raises(ValueError):
            SimConfig(n=10, p=10, beta_star=np.ones(3))


class TestGenerateInstance:
    def test_additive_model_attached(self):
        cfg = SimConfig(**SMALL, corruption=AdditiveGaussian(0.75))
        inst = generate_instance(cfg, 0)
        np.testing.assert_allclose(np.diag(inst.model.sigma_a), 0.75**2)
        assert inst.data.mask.all()

    def test_zero_tau_is_clean(self):
        cfg = SimConfig(**SMALL, corruption=AdditiveGaussian(0.0))
        inst = generate_instance(cfg, 0)
        np.testing.assert_array_equal(inst.data.z, inst.x)

    def test_multiplicative_moments(self):
        tau = 0.5
        cfg = SimConfig(**SMALL, corruption=MultiplicativeLognormal(tau))
        inst = generate_instance(cfg, 0)
        t2 = tau**2
        np.testing.assert_allclose(inst.model.mu_m, np.exp(t2 / 2))
        np.testing.assert_allclose(
            np.diag(inst.model.sigma_m), np.exp(2 * t2) - np.exp(t2)
        )

    def test_missing_mask_consistency(self):
        cfg = SimConfig(**SMALL, corruption=MissingBernoulli(0.3))
        inst = generate_instance(cfg, 0)
        assert np.all(inst.data.z[~inst.data.mask] == 0)
        assert 0.1 < (~inst.data.mask).mean() < 0.5

    def test_replications_are_independent_and_reproducible(self):
        cfg = SimConfig(**SMALL)
        a0 = generate_instance(cfg, 0)
        a0_again = generate_instance(cfg, 0)
        a1 = generate_instance(cfg, 1)
        np.testing.assert_array_equal(a0.x, a0_again.x)
        assert not np.array_equal(a0.x, a1.x)

    def test_seed_changes_draws(self):
        cfg_a = SimConfig(**SMALL, seed=0)
        cfg_b = SimConfig(**SMALL, seed=1)
        assert not np.array_equal(
            generate_instance(cfg_a, 0).x, generate_instance(cfg_b, 0).x
        )


class TestMetrics:
    def test_perfect_estimate(self):
        beta = np.array([1.0, 0.0, -2.0])
        pe, mse, c, ic = metrics(beta, beta, np.eye(3))
        assert pe == 0.0 and mse == 0.0
        assert c == 2 and ic == 0

    def test_counts(self):
        star = np.array([1.0, 0.0, 2.0, 0.0])
        hat = np.array([0.5, 0.3, 0.0, 0.0])
        _, _, c, ic = metrics(hat, star, np.eye(4))
        assert c == 1 and ic == 1

    def test_pe_uses_design_covariance(self):
        star = np.array([1.0, 0.0])
        hat = np.array([0.0, 0.0])
        sig = np.array([[4.0, 0.0], [0.0, 1.0]])
        pe, mse, _, _ = metrics(hat, star, sig)
        assert pe == 4.0 and mse == 1.0

    def test_null_estimate_against_default_coefficients(self):
        star = default_beta_star(10)
        pe, mse, c, ic = metrics(np.zeros(10), star, np.eye(10))
        assert mse == pytest.approx(3**2 + 1.5**2 + 2**2)
        assert pe == mse  # identity quadratic form
        assert c == 0 and ic == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            metrics(np.ones(2), np.ones(3), np.eye(3))


class TestConditionDiagnostics:
    def test_identity_design(self):
        diag = condition_diagnostics(np.eye(5), np.array([0, 2]))
        assert diag.gamma == 1.0
        assert diag.c_min == pytest.approx(1.0)

    def test_ar_design_margin(self):
        sig = ARDesign(0.5).covariance(6)
        diag = condition_diagnostics(sig, np.array([0, 1, 4]))
        assert 0 < diag.gamma < 1
        assert diag.c_min > 0

    @pytest.mark.parametrize("design", [ARDesign(0.5), CSDesign(0.5)])
    def test_matches_dense_inverse_oracle(self, design):
        sig = design.covariance(5)
        support = np.array([0, 1, 4])
        comp = np.array([2, 3])
        got = condition_diagnostics(sig, support)
        inv = np.linalg.inv(sig[np.ix_(support, support)])
        g = sig[np.ix_(comp, support)] @ inv
        want_gamma = 1.0 - np.abs(g).sum(axis=1).max()
        want_cmin = np.linalg.eigvalsh(sig[np.ix_(support, support)])[0]
        assert got.gamma == pytest.approx(want_gamma, abs=1e-12)
        assert got.c_min == pytest.approx(want_cmin, abs=1e-12)


class TestRunReplication:
    def test_record_fields_and_determinism(self):
        cfg = SimConfig(**SMALL)
        rec, path = run_replication(cfg, 0)
        rec2, _ = run_replication(cfg, 0)
        assert rec == rec2
        for key in ("pe", "mse", "c", "ic", "lambda_selected",
                    "sigma_tilde_dev", "sigma_hat_dev"):
            assert np.isfinite(rec[key])
        assert rec["projection_converged"]
        assert path.betas.shape == (cfg.grid_size, cfg.p)

    def test_projection_factor_two_bound(self):
        cfg = SimConfig(**SMALL, corruption=AdditiveGaussian(1.0))
        rec, _ = run_replication(cfg, 1)
        assert rec["sigma_tilde_dev"] <= 2 * rec["sigma_hat_dev"] + 1e-6


class TestRunExperiment:
    def test_report_structure(self):
        cfg = SimConfig(**SMALL)
        report = run_experiment(cfg)
        assert len(report.records) == 3
        assert set(report.medians) == {"pe", "mse", "c", "ic"}
        assert all(v >= 0 for v in report.bootstrap_se.values())
        assert report.failures == 0
        payload = json.loads(report.to_json())
        assert payload["schema_version"] == 1
        assert payload["config"]["p"] == 20
        s = np.count_nonzero(default_beta_star(20))
        for rec in report.records:
            assert 0 <= rec["c"] <= s
            assert 0 <= rec["ic"] <= 20 - s
            assert rec["pe"] >= 0 and rec["mse"] >= 0

    def test_records_csv_round_trip(self):
        cfg = SimConfig(**SMALL)
        report = run_experiment(cfg)
        lines = report.records_csv().strip().split("\n")
        assert len(lines) == 4
        header = lines[0].split(",")
        assert header[0] == "replication"
        first = dict(zip(header, lines[1].split(",")))
        assert float(first["pe"]) == report.records[0]["pe"]

    def test_experiment_determinism(self):
        cfg = SimConfig(**SMALL)
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        assert a.records == b.records
        assert a.medians == b.medians
        assert a.bootstrap_se == b.bootstrap_se


class TestSupportRecovery:
    def test_signed_support_detection(self):
        star = np.array([2.0, 0.0, -1.0])
        path = np.array([
            [0.0, 0.0, 0.0],
            [1.0, 0.0, -0.5],  # matching signs
            [1.0, 0.5, -0.5],
        ])
        assert signed_support_recovered(path, star)
        assert not signed_support_recovered(path[[0, 2]], star)

    def test_recovery_frequency_clean_easy_case(self):
        cfg = SimConfig(n=80, p=10, replications=5, grid_size=30,
                        corruption=AdditiveGaussian(0.0), sigma_noise=0.5)
        freq = recovery_frequency(cfg)
        assert freq == 1.0
