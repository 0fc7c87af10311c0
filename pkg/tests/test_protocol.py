import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfim_gyro import ChainSpec, ConfigError, FlatScanError, ProtocolConfig
from tfim_gyro.protocol import (
    mfc_window,
    pmg_sample,
    run_trials,
    scan_and_estimate,
    trial_rngs,
)


def small_config(**kw):
    base = dict(spec=ChainSpec(200), true_omega=2.0, sigma=0.5, delta=0.05, scan_points=401, trials=20, seed=11)
    base.update(kw)
    return ProtocolConfig(**base)


class TestPmgSample:
    def test_tiny_sigma(self):
        rng = np.random.default_rng(0)
        assert pmg_sample(2.0, 1e-12, "uniform", rng) == pytest.approx(2.0, abs=1e-12)

    def test_uniform_mean(self):
        rng = np.random.default_rng(123)
        sigma = 0.5
        draws = np.array([pmg_sample(2.0, sigma, "uniform", rng) for _ in range(100_000)])
        assert abs(draws.mean() - 2.0) < 3 * sigma / math.sqrt(3 * 100_000)

    @pytest.mark.parametrize("model", ["uniform", "gaussian"])
    def test_deterministic(self, model):
        a = [pmg_sample(1.0, 0.3, model, r) for r in trial_rngs(5, 10)]
        b = [pmg_sample(1.0, 0.3, model, r) for r in trial_rngs(5, 10)]
        assert a == b

    @given(st.floats(-10, 10), st.floats(1e-6, 5), st.integers(0, 2**32), st.sampled_from(["uniform", "gaussian"]))
    def test_within_interval(self, omega, sigma, seed, model):
        x = pmg_sample(omega, sigma, model, np.random.default_rng(seed))
        assert omega - sigma <= x <= omega + sigma

    def test_gaussian_spread(self):
        rng = np.random.default_rng(9)
        draws = np.array([pmg_sample(0.0, 1.0, "gaussian", rng) for _ in range(20_000)])
        # N(0, 0.5^2) truncated at two standard deviations
        assert draws.std() == pytest.approx(0.440, abs=0.01)

    def test_rejects(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            pmg_sample(1.0, 0.0, "uniform", rng)
        with pytest.raises(ConfigError):
            pmg_sample(1.0, 0.1, "cauchy", rng)


class TestMfcWindow:
    def test_examples(self):
        assert mfc_window(2.0, 0.1, ChainSpec(4)) == pytest.approx((1.95, 2.05))
        assert mfc_window(0.0, 0.1, ChainSpec(4)) == pytest.approx((0.95, 1.05))

    @given(st.floats(-10, 10), st.floats(1e-3, 5), st.floats(0.1, 5), st.floats(0.1, 5))
    def test_contains_midpoint(self, omega0, sigma, j, hbar):
        lo, hi = mfc_window(omega0, sigma, ChainSpec(4, coupling=j, hbar=hbar))
        assert lo <= 1 + hbar * omega0 / (2 * j) <= hi


class TestScan:
    def test_flat(self):
        with pytest.raises(FlatScanError, match="flat scan"):
            scan_and_estimate(small_config(delta=0.0), 2.0)

    def test_estimate_near_truth(self):
        cfg = ProtocolConfig(ChainSpec(2000), true_omega=2.0, sigma=0.5, delta=0.01)
        trial = scan_and_estimate(cfg, 2.0)
        assert trial.lambda_window == pytest.approx((1.75, 2.25))
        assert trial.abs_error < cfg.delta_omega
        assert trial.omega1 == 2 * (trial.lambda0 - 1)
        # the echo minimum sits between lambda_tilde = 1 - delta and 1
        assert 1.0 - 0.01 <= trial.lambda0 - 1.0 <= 1.0

    def test_repeatable(self):
        cfg = small_config()
        assert scan_and_estimate(cfg, 2.1) == scan_and_estimate(cfg, 2.1)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            small_config(scan_points=50)
        with pytest.raises(ConfigError):
            small_config(sigma=-1)
        with pytest.raises(ConfigError):
            small_config(noise_model="cauchy")
        with pytest.raises(ConfigError):
            small_config(trials=0)


class TestRunTrials:
    def test_deterministic(self):
        assert run_trials(small_config()) == run_trials(small_config())
        a = run_trials(small_config())
        assert a.records == run_trials(small_config()).records

    def test_estimate_identity_and_window(self):
        cfg = small_config(noise_model="gaussian")
        summary = run_trials(cfg)
        margin = cfg.sigma - cfg.delta * 2 * cfg.spec.coupling / cfg.spec.hbar
        for rec in summary.records:
            t = rec.trial
            assert t.omega1 - 2 * (t.lambda0 - 1) == 0.0
            if abs(rec.omega0 - cfg.true_omega) <= margin:
                assert t.critical_in_window

    def test_single_trial_offset(self):
        cfg = ProtocolConfig(ChainSpec(2000), true_omega=2.0, sigma=0.2, delta=0.01, trials=1, seed=3)
        summary = run_trials(cfg)
        t = summary.records[0].trial
        assert summary.mean_abs_error == abs(t.omega1 - cfg.true_omega)
        assert summary.mean_error == t.omega1 - cfg.true_omega
        # the minimum lies between the two candidate centers
        assert -2 * cfg.delta <= summary.mean_error <= 0.0

    def test_window_too_narrow_is_flat(self):
        summary = run_trials(small_config(sigma=1e-9, trials=1, scan_points=101))
        assert summary.records[0].status == "flat scan"

    def test_infeasible_flag(self):
        summary = run_trials(small_config(delta=0.1, sigma=0.5, trials=2))
        assert summary.resolution_delta_omega > 0.5
        assert not summary.feasible

    def test_all_flat(self):
        summary = run_trials(small_config(delta=0.0, trials=3))
        assert summary.completed == 0
        assert [r.status for r in summary.records] == ["flat scan"] * 3
        assert math.isnan(summary.mean_abs_error)

    def test_finer_scan_stabilizes(self):
        coarse = run_trials(small_config(scan_points=201, trials=5))
        fine = run_trials(small_config(scan_points=3201, trials=5))
        for a, b in zip(coarse.records, fine.records):
            assert abs(a.trial.lambda0 - b.trial.lambda0) < 2 * (0.5 / 200)
