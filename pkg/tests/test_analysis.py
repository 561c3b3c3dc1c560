"""Decomposition, ADF stationarity, and the smoothing recursions."""

import numpy as np
import pytest
from statsmodels.tsa.stattools import adfuller as sm_adfuller

from flowcast.analysis import (
    SmoothingParams,
    adf_test,
    decompose,
    difference,
    mackinnon_pvalue,
    smooth_des,
    smooth_hw,
    smooth_ma,
    smooth_ses,
)
from flowcast.errors import FlowcastError
from flowcast.rng import make_rng
from smoothing_reference import des_unrolled, hw_unrolled, ses_unrolled


class TestDecompose:
    def test_constant_series(self):
        d = decompose(np.full(20, 5.0), 4)
        defined = ~np.isnan(d.trend)
        assert np.allclose(d.trend[defined], 5.0)
        assert np.allclose(d.seasonal, 0.0)
        assert np.allclose(d.residual[defined], 0.0)

    def test_pure_line(self):
        d = decompose(np.arange(24, dtype=float), 4)
        defined = ~np.isnan(d.trend)
        assert np.max(np.abs(d.seasonal)) <= 1e-9
        assert np.nanmax(np.abs(d.residual[defined])) <= 1e-9

    def test_line_plus_square_wave(self):
        # Hand oracle: the half-weighted window spans one full cycle, so the
        # centered MA reproduces the line exactly and the phase means
        # recover s = (2,-2,2,-2).
        s = np.array([2.0, -2.0, 2.0, -2.0])
        n = 40
        x = np.arange(n, dtype=float) + s[np.arange(n) % 4]
        d = decompose(x, 4)
        assert np.max(np.abs(d.seasonal[:4] - s)) <= 1e-9
        defined = ~np.isnan(d.trend)
        assert np.max(np.abs(d.trend[defined] - np.arange(n)[defined])) <= 1e-9

    def test_additivity_exact(self):
        rng = make_rng(8)
        x = rng.standard_normal(50) * 10 + 100
        d = decompose(x, 5)
        recon = d.trend + d.seasonal + d.residual
        defined = ~np.isnan(d.trend)
        scale = np.max(np.abs(x))
        assert np.max(np.abs(recon[defined] - x[defined])) <= 1e-9 * scale

    def test_seasonal_mean_zero(self):
        rng = make_rng(9)
        x = rng.standard_normal(60) * 5 + 50
        d = decompose(x, 6)
        assert abs(d.seasonal[:6].mean()) <= 1e-9 * max(1.0, np.max(np.abs(x)))

    def test_margins_marked(self):
        d = decompose(np.arange(20, dtype=float), 4)
        assert np.isnan(d.trend[:2]).all() and np.isnan(d.trend[-2:]).all()
        assert not np.isnan(d.trend[2:-2]).any()
        d_odd = decompose(np.arange(20, dtype=float), 5)
        assert np.isnan(d_odd.trend[:2]).all() and np.isnan(d_odd.trend[-2:]).all()

    def test_too_short(self):
        with pytest.raises(FlowcastError) as err:
            decompose(np.arange(7, dtype=float), 4)
        assert err.value.code == "insufficient-data"


class TestAdf:
    def test_alternating_series_strongly_stationary(self):
        y = np.array([(-1.0) ** t for t in range(200)])
        res = adf_test(y)
        assert res.statistic < -10
        assert res.reject_at[0.01] is True
        assert res.p_value < 0.01

    def test_constant_series_degenerate(self):
        with pytest.raises(FlowcastError) as err:
            adf_test(np.full(50, 3.0))
        assert err.value.code == "degenerate-series"

    def test_against_statsmodels_reference(self):
        # same specification (constant-only, AIC lag selection, fixed maxlag)
        rng = make_rng(123)
        for _ in range(5):
            y = np.cumsum(rng.standard_normal(300)) + rng.standard_normal(300)
            ours = adf_test(y, max_lag=6)
            stat, pval, lags, *_ = sm_adfuller(y, maxlag=6, regression="c", autolag="AIC")
            assert ours.lags_used == lags
            assert ours.statistic == pytest.approx(stat, abs=1e-8)
            assert ours.p_value == pytest.approx(pval, abs=1e-8)

    def test_random_walks_mostly_fail_to_reject(self):
        rejections = 0
        for seed in range(25):
            w = np.cumsum(make_rng(seed).standard_normal(500))
            if adf_test(w).reject_at[0.05]:
                rejections += 1
        assert rejections <= 2

    def test_affine_invariance(self):
        rng = make_rng(55)
        y = rng.standard_normal(150)
        base = adf_test(y)
        scaled = adf_test(3.7 * y + 11.0)
        assert scaled.statistic == pytest.approx(base.statistic, abs=1e-9)
        assert scaled.lags_used == base.lags_used

    def test_mackinnon_bounds(self):
        assert mackinnon_pvalue(5.0) == 1.0
        assert mackinnon_pvalue(-50.0) == 0.0
        assert 0.0 < mackinnon_pvalue(-2.0) < 1.0

    def test_reject_map_consistency(self):
        y = make_rng(2).standard_normal(200)
        res = adf_test(y)
        for level in (0.01, 0.05, 0.10):
            assert res.reject_at[level] == (res.p_value < level)


class TestMovingAverage:
    def test_constant_fixed_point(self):
        assert smooth_ma([2.0, 2.0, 2.0], 2).tolist() == [2.0, 2.0, 2.0]

    def test_hand_values(self):
        assert smooth_ma([1.0, 3.0, 5.0, 7.0], 2).tolist() == [1.0, 2.0, 4.0, 6.0]

    def test_identity_window(self):
        x = [4.0, 9.0, 1.0]
        assert smooth_ma(x, 1).tolist() == x

    def test_bad_window(self):
        with pytest.raises(FlowcastError) as err:
            smooth_ma([1.0, 2.0], 0)
        assert err.value.code == "bad-window"
        with pytest.raises(FlowcastError):
            smooth_ma([1.0, 2.0], 3)


class TestSes:
    def test_constant_fixed_point(self):
        assert smooth_ses([7.0] * 5, 0.3).tolist() == [7.0] * 5

    def test_one_step_by_hand(self):
        assert smooth_ses([0.0, 1.0], 0.5).tolist() == [0.0, 0.5]

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_open_interval_bounds(self, alpha):
        with pytest.raises(FlowcastError) as err:
            smooth_ses([1.0, 2.0], alpha)
        assert err.value.code == "bad-parameter"

    def test_convex_combination_bounds(self):
        rng = make_rng(6)
        for _ in range(20):
            x = rng.standard_normal(int(rng.integers(2, 80))) * 50
            alpha = float(rng.uniform(0.01, 0.99))
            out = smooth_ses(x, alpha)
            assert out.min() >= x.min() - 1e-12
            assert out.max() <= x.max() + 1e-12

    def test_matches_unrolled(self):
        rng = make_rng(7)
        x = rng.standard_normal(40)
        assert np.allclose(smooth_ses(x, 0.37), ses_unrolled(x, 0.37), rtol=1e-12)


class TestDes:
    def test_exact_line(self):
        x = 3.0 + 0.5 * np.arange(30)
        res = smooth_des(x, 0.4, 0.2)
        assert np.max(np.abs(res.level - x)) <= 1e-9
        assert np.max(np.abs(res.trend[1:] - 0.5)) <= 1e-9

    def test_constant_series(self):
        res = smooth_des(np.full(20, 4.0), 0.5, 0.5)
        assert np.allclose(res.level, 4.0)
        assert abs(res.trend[-1]) <= 1e-12

    def test_hand_unrolled_example(self):
        res = smooth_des([0.0, 2.0, 4.0], 0.5, 0.5)
        assert res.level.tolist() == [0.0, 2.0, 4.0]
        assert res.trend.tolist() == [2.0, 2.0, 2.0]

    def test_too_short(self):
        with pytest.raises(FlowcastError) as err:
            smooth_des([1.0], 0.5, 0.5)
        assert err.value.code == "insufficient-data"

    def test_forecast_from_final_state(self):
        res = smooth_des([0.0, 2.0, 4.0], 0.5, 0.5)
        assert res.forecast(3).tolist() == [6.0, 8.0, 10.0]

    def test_matches_unrolled(self):
        rng = make_rng(11)
        x = rng.standard_normal(35) * 4
        s, b = des_unrolled(x, 0.3, 0.6)
        res = smooth_des(x, 0.3, 0.6)
        assert np.allclose(res.level, s, rtol=1e-12)
        assert np.allclose(res.trend, b, rtol=1e-12)


class TestHoltWinters:
    def test_line_is_fixed_point_with_unit_season(self):
        # L=1 makes the initial seasonal exactly zero, so a pure line is an
        # exact fixed point of the recursion and forecasts extend it.
        x = 2.0 + 0.5 * np.arange(60)
        p = SmoothingParams(alpha=0.5, beta=0.5, gamma=0.25, L=1, m=4, phi=1.0)
        res = smooth_hw(x, p)
        truth = 2.0 + 0.5 * np.arange(60, 64)
        assert np.max(np.abs(res.forecast - truth)) <= 1e-6
        assert np.max(np.abs(res.fitted[16:] - x[16:])) <= 1e-6

    def test_constant_series_forecasts_constant(self):
        p = SmoothingParams(alpha=0.3, beta=0.3, gamma=0.3, L=4, m=6, phi=0.9)
        res = smooth_hw(np.full(24, 9.0), p)
        assert np.max(np.abs(res.forecast - 9.0)) <= 1e-9

    def test_exact_seasonal_series_forecast(self):
        s = np.array([1.0, -1.0, 2.0, -2.0])
        x = 10.0 + s[np.arange(40) % 4]
        p = SmoothingParams(alpha=0.5, beta=0.5, gamma=0.5, L=4, m=4, phi=1.0)
        res = smooth_hw(x, p)
        truth = 10.0 + s[np.arange(40, 44) % 4]
        assert np.mean(np.abs(res.forecast - truth)) <= 0.05

    def test_too_short(self):
        p = SmoothingParams(alpha=0.5, beta=0.5, gamma=0.5, L=4, m=1)
        with pytest.raises(FlowcastError) as err:
            smooth_hw(np.arange(7, dtype=float), p)
        assert err.value.code == "insufficient-data"

    def test_param_bounds(self):
        with pytest.raises(FlowcastError):
            SmoothingParams(alpha=1.0, beta=0.5, gamma=0.5, L=4, m=1)
        with pytest.raises(FlowcastError):
            SmoothingParams(alpha=0.5, beta=0.5, gamma=0.5, L=4, m=1, phi=0.0)
        with pytest.raises(FlowcastError):
            SmoothingParams(alpha=0.5, beta=0.5, gamma=0.5, L=4, m=1, phi=1.2)

    def test_seasonal_disabled_reproduces_des_bitwise(self):
        rng = make_rng(13)
        x = rng.standard_normal(50) * 3 + 10
        des = smooth_des(x, 0.37, 0.21)
        p = SmoothingParams(alpha=0.37, beta=0.21, gamma=0.5, L=1, m=1, phi=1.0)
        hw = smooth_hw(x, p, seasonal=False)
        assert np.array_equal(des.level, hw.level)
        assert np.array_equal(des.trend, hw.trend)

    def test_matches_unrolled(self):
        rng = make_rng(14)
        for _ in range(5):
            L = int(rng.integers(1, 7))
            n = int(rng.integers(2 * L, 60))
            x = rng.standard_normal(n) * 5 + 20
            alpha, beta, gamma = rng.uniform(0.05, 0.95, 3)
            phi = float(rng.uniform(0.5, 1.0))
            p = SmoothingParams(alpha=float(alpha), beta=float(beta),
                                gamma=float(gamma), L=L, m=3, phi=phi)
            res = smooth_hw(x, p)
            s, b, seas, fitted, fc = hw_unrolled(x, float(alpha), float(beta),
                                                 float(gamma), phi, L, 3)
            assert np.allclose(res.level, s, rtol=1e-12)
            assert np.allclose(res.trend, b, rtol=1e-12)
            assert np.allclose(res.fitted, fitted, rtol=1e-12)
            assert np.allclose(res.forecast, fc, rtol=1e-12)


class TestDifference:
    def test_first_difference(self):
        assert difference([1.0, 4.0, 9.0]).tolist() == [3.0, 5.0]

    def test_too_short(self):
        with pytest.raises(FlowcastError):
            difference([1.0], 1)
