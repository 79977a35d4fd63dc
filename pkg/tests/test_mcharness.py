import numpy as np
import pytest

from llrlab import (
    ExperimentConfig,
    SeededRng,
    asymptotic_auc,
    calibrate_c,
    learning_curve,
    mahalanobis_sq,
    run_trial,
    variance_study,
)
from llrlab.errors import ConditioningError, ContractError
from llrlab import mcharness


class TestCalibrateC:
    def test_eleven_dimensions(self):
        # published operating point: c rounds to 0.27 at p=11
        assert calibrate_c(11, 0.8) == pytest.approx(0.26967994498529685, rel=1e-12)
        assert round(calibrate_c(11, 0.8), 2) == 0.27

    def test_one_dimension(self):
        assert calibrate_c(1, 0.8) == pytest.approx(np.sqrt(0.8), rel=1e-15)

    def test_round_trip_through_mahalanobis(self):
        for p in (3, 7, 11):
            c = calibrate_c(p, 0.8)
            dsq = mahalanobis_sq(np.zeros(p), np.full(p, c), np.eye(p))
            assert dsq == pytest.approx(0.8, abs=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ContractError):
            calibrate_c(0, 0.8)
        with pytest.raises(ContractError):
            calibrate_c(3, 0.0)


class TestAsymptoticAuc:
    def test_published_operating_point(self):
        # c = 0.27 at p = 11 gives delta^2 = 0.8019 and AUC ~ 0.74
        assert asymptotic_auc(0.8019) == pytest.approx(0.7367, abs=1e-4)
        assert round(asymptotic_auc(0.8019), 2) == 0.74

    def test_vanishing_separation(self):
        assert asymptotic_auc(1e-12) == pytest.approx(0.5, abs=1e-6)

    def test_large_sample_simulation_oracle(self):
        result = run_trial(p=3, n=100_000, c=calibrate_c(3, 0.8), test_size=100_000,
                           rng=SeededRng(1234).derive(3, 100_000, 0))
        assert result.auc_true == pytest.approx(asymptotic_auc(0.8), abs=0.005)


class TestRunTrial:
    def test_bit_identical_repeats(self):
        rng = SeededRng(9).derive(5, 30, 0)
        a = run_trial(5, 30, calibrate_c(5, 0.8), 200, rng)
        b = run_trial(5, 30, calibrate_c(5, 0.8), 200, rng)
        assert a == b

    def test_minimal_training_size(self):
        result = run_trial(4, 6, calibrate_c(4, 0.8), 50, SeededRng(11).derive(4, 6, 0))
        assert 0.0 <= result.auc_true <= 1.0
        assert 0.0 <= result.auc_apparent <= 1.0

    def test_large_n_approaches_asymptote(self):
        result = run_trial(3, 10_000, calibrate_c(3, 0.8), 10_000, SeededRng(12).derive(0))
        assert result.auc_true == pytest.approx(asymptotic_auc(0.8), abs=0.01)

    def test_n_not_exceeding_p_rejected(self):
        with pytest.raises(ContractError):
            run_trial(5, 5, 0.4, 100, SeededRng(1))

    def test_retry_uses_fresh_substream_then_succeeds(self, monkeypatch):
        calls = []
        real = mcharness.estimate_params

        def flaky(samples):
            calls.append(len(calls))
            if len(calls) <= 3:
                raise ConditioningError("forced failure")
            return real(samples)

        monkeypatch.setattr(mcharness, "estimate_params", flaky)
        result = run_trial(3, 20, 0.5, 50, SeededRng(77).derive(1))
        assert result.auc_true >= 0.0
        assert len(calls) >= 4

    def test_retry_budget_exhausted_surfaces_error(self, monkeypatch):
        def always_fail(samples):
            raise ConditioningError("forced failure")

        monkeypatch.setattr(mcharness, "estimate_params", always_fail)
        with pytest.raises(ConditioningError, match="p=3, n=20"):
            run_trial(3, 20, 0.5, 50, SeededRng(78).derive(1))


SMALL = dict(dims=(2, 3), train_sizes=(8, 25), n_trials=6, test_size=40, base_seed=77)


class TestLearningCurve:
    def test_row_order_and_shape(self):
        summary = learning_curve(ExperimentConfig(**SMALL))
        assert [(r.p, r.n) for r in summary.rows] == [(2, 8), (2, 25), (3, 8), (3, 25)]
        assert all(r.n_trials == 6 for r in summary.rows)

    def test_single_trial_variances_are_nan(self):
        cfg = ExperimentConfig(dims=(2,), train_sizes=(10,), n_trials=1, test_size=30, base_seed=5)
        summary = learning_curve(cfg)
        row = summary.rows[0]
        assert np.isnan(row.var_auc_true) and np.isnan(row.var_auc_apparent)
        trial = run_trial(2, 10, calibrate_c(2, 0.8), 30, cfg.rng().derive(2, 10, 0))
        assert row.mean_auc_true == trial.auc_true

    def test_parallel_schedule_is_bitwise_identical(self):
        cfg = ExperimentConfig(**SMALL)
        serial = learning_curve(cfg)
        parallel = learning_curve(cfg, max_workers=4)
        assert serial.to_csv() == parallel.to_csv()

    def test_bias_and_dimensionality_direction_moderate_scale(self):
        cfg = ExperimentConfig(
            dims=(3, 7), train_sizes=(20, 100), n_trials=40, test_size=300, base_seed=13
        )
        summary = learning_curve(cfg)
        for r in summary.rows:
            se = np.sqrt((r.var_auc_true + r.var_auc_apparent) / r.n_trials)
            assert r.mean_auc_apparent >= r.mean_auc_true - 2 * se
        # more parameters hurt at fixed small n
        lo = summary.cell(3, 20)
        hi = summary.cell(7, 20)
        se = np.sqrt(lo.var_auc_true / 40 + hi.var_auc_true / 40)
        assert hi.mean_auc_true <= lo.mean_auc_true + 2 * se
        # true AUC improves with training size
        for p in (3, 7):
            small = summary.cell(p, 20)
            big = summary.cell(p, 100)
            se = np.sqrt(small.var_auc_true / 40 + big.var_auc_true / 40)
            assert big.mean_auc_true >= small.mean_auc_true - 2 * se

    def test_invalid_config(self):
        with pytest.raises(ContractError):
            ExperimentConfig(dims=(3,), train_sizes=(3,))
        with pytest.raises(ContractError):
            ExperimentConfig(dims=(), train_sizes=(10,))
        with pytest.raises(ContractError):
            ExperimentConfig(target_delta_sq=-1.0)


class TestVarianceStudy:
    def test_requires_single_dimensionality(self):
        with pytest.raises(ContractError):
            variance_study(ExperimentConfig(**SMALL))

    def test_variances_nonnegative_and_reported(self):
        cfg = ExperimentConfig(dims=(3,), train_sizes=(10, 60), n_trials=12, test_size=60, base_seed=3)
        summary = variance_study(cfg)
        assert all(r.var_auc_true >= 0 for r in summary.rows)
        assert [r.n for r in summary.rows] == [10, 60]

    def test_doubling_trials_is_stable(self):
        base = ExperimentConfig(dims=(3,), train_sizes=(30,), n_trials=30, test_size=200, base_seed=8)
        double = ExperimentConfig(dims=(3,), train_sizes=(30,), n_trials=60, test_size=200, base_seed=8)
        a = variance_study(base).rows[0]
        b = variance_study(double).rows[0]
        se = np.sqrt(a.var_auc_true / a.n_trials + b.var_auc_true / b.n_trials)
        assert abs(a.mean_auc_true - b.mean_auc_true) <= 3 * se


class TestCurveSummaryCsv:
    def test_schema_and_round_trip(self):
        summary = learning_curve(ExperimentConfig(**SMALL))
        text = summary.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "p,n,mean_auc_true,mean_auc_apparent,var_auc_true,var_auc_apparent,n_trials"
        assert len(lines) == 1 + len(summary.rows)
        for line, row in zip(lines[1:], summary.rows):
            p, n, mt, ma, vt, va, k = line.split(",")
            assert (int(p), int(n), int(k)) == (row.p, row.n, row.n_trials)
            assert float(mt) == row.mean_auc_true
            assert float(ma) == row.mean_auc_apparent
            assert float(vt) == row.var_auc_true
            assert float(va) == row.var_auc_apparent
