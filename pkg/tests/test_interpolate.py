import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interprisk.estimators import LocalPolyConfig, fit_knn, fit_local_polynomial, fit_zero
from interprisk.geometry import BoxDomain, Dataset
from interprisk.interpolate import (
    InterpolationConfig,
    max_admissible_tau,
    soft_threshold,
    verify_membership,
    wrap_interpolator,
)

DOMAIN = BoxDomain.symmetric(2.0, 1)

finite_floats = st.floats(-1e6, 1e6, allow_nan=False)
deltas = st.floats(0.0, 1e3, allow_nan=False)


def make_data(xs, ys, domain=DOMAIN):
    return Dataset(np.asarray(xs, dtype=float).reshape(-1, 1), ys, domain)


def noisy_case(seed, n=40, sigma=0.6):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-2, 2, size=n)
    ys = np.sin(2 * xs) + sigma * rng.standard_normal(n)
    return make_data(xs, ys)


class TestSoftThreshold:
    @given(finite_floats, deltas)
    def test_shrinks_toward_zero(self, t, delta):
        out = soft_threshold(t, delta)
        assert abs(out) <= abs(t)
        assert out * t >= 0.0

    @given(finite_floats, deltas)
    def test_dead_zone_and_shift(self, t, delta):
        out = soft_threshold(t, delta)
        if abs(t) <= delta:
            assert out == 0.0
        else:
            assert out == pytest.approx(math.copysign(abs(t) - delta, t))

    def test_vectorized(self):
        out = soft_threshold(np.array([-2.0, -0.5, 0.0, 0.5, 2.0]), 1.0)
        np.testing.assert_allclose(out, [-1.0, 0.0, 0.0, 0.0, 1.0])

    def test_rejects_negative_delta(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)


class TestWrapperAtTrainingPoints:
    def test_exact_interpolation_at_delta_zero(self):
        data = noisy_case(0)
        base = fit_local_polynomial(data, LocalPolyConfig(bandwidth=1.0, degree=3))
        wrapped = wrap_interpolator(base, data, InterpolationConfig(delta=0.0))
        np.testing.assert_allclose(wrapped.predict_batch(data.xs), data.ys, atol=1e-9)

    @pytest.mark.parametrize("delta", [0.0, 0.1, 0.5, 2.0])
    def test_residual_is_clipped_base_residual(self, delta):
        # |Y_i - wrapped(X_i)| = min(delta, |Y_i - base(X_i)|), exactly
        data = noisy_case(1)
        base = fit_knn(data, 5)
        wrapped = wrap_interpolator(base, data, InterpolationConfig(delta=delta))
        got = np.abs(data.ys - wrapped.predict_batch(data.xs))
        expect = np.minimum(np.abs(data.ys - base.predict_batch(data.xs)), delta)
        np.testing.assert_allclose(got, expect, atol=1e-12)

    def test_membership(self):
        data = noisy_case(2)
        base = fit_zero()
        for delta in (0.0, 0.3, 1.0):
            wrapped = wrap_interpolator(base, data, InterpolationConfig(delta=delta))
            ok, worst = verify_membership(wrapped, data, delta)
            assert ok, f"violation at index {worst}"

    def test_base_itself_fails_membership(self):
        data = noisy_case(3)
        ok, worst = verify_membership(fit_zero(), data, 0.0)
        assert not ok
        assert worst == int(np.argmax(np.abs(data.ys)))

    def test_membership_monotone_in_delta(self):
        data = noisy_case(4)
        base = fit_knn(data, 7)
        wrapped = wrap_interpolator(base, data, InterpolationConfig(delta=0.4))
        assert verify_membership(wrapped, data, 0.4)[0]
        assert verify_membership(wrapped, data, 1.0)[0]
        assert not verify_membership(wrapped, data, 0.01)[0]


class TestLocality:
    def test_far_queries_identical_to_base(self):
        data = noisy_case(5)
        base = fit_knn(data, 3)
        cfg = InterpolationConfig(delta=0.2, tau=0.05)
        wrapped = wrap_interpolator(base, data, cfg)
        rng = np.random.default_rng(6)
        qs = rng.uniform(-2, 2, size=(500, 1))
        dist = np.abs(qs - data.xs[:, 0]).min(axis=1)
        far = dist > cfg.tau
        assert far.sum() > 100
        base_preds = base.predict_batch(qs)
        wrapped_preds = wrapped.predict_batch(qs)
        assert np.array_equal(wrapped_preds[far], base_preds[far])

    def test_tau_zero_touches_only_training_points(self):
        data = noisy_case(7)
        base = fit_knn(data, 3)
        wrapped = wrap_interpolator(base, data, InterpolationConfig(delta=0.0, tau=0.0))
        qs = data.xs + 1e-4  # just off every training point
        np.testing.assert_array_equal(
            wrapped.predict_batch(qs), base.predict_batch(qs)
        )


class TestConnector:
    def test_tent_profile_single_point(self):
        # one isolated training point: the correction decays linearly over tau
        data = make_data([0.0], [2.0])
        base = fit_zero()
        cfg = InterpolationConfig(delta=0.5, tau=0.8)
        wrapped = wrap_interpolator(base, data, cfg)
        shift = soft_threshold(2.0, 0.5)  # 1.5
        for s in (0.0, 0.2, 0.5, 0.79):
            got = wrapped.predict(np.array([s]))
            assert got == pytest.approx((1.0 - s / 0.8) * shift if s else shift)
        assert wrapped.predict(np.array([0.81])) == 0.0

    def test_deviation_bounded_by_ball_residuals(self):
        # inside any tau-ball the wrapper moves the base by at most the largest
        # thresholded residual present in that ball
        for seed in range(8):
            data = noisy_case(20 + seed, n=60)
            base = fit_knn(data, 4)
            cfg = InterpolationConfig(delta=0.15, tau=0.3)
            wrapped = wrap_interpolator(base, data, cfg)
            rng = np.random.default_rng(seed)
            qs = rng.uniform(-2, 2, size=(400, 1))
            base_preds = base.predict_batch(qs)
            wrapped_preds = wrapped.predict_batch(qs)
            res = data.ys - base.predict_batch(data.xs)
            excess = np.maximum(np.abs(res) - cfg.delta, 0.0)
            for qi in range(qs.shape[0]):
                inball = np.abs(data.xs[:, 0] - qs[qi, 0]) <= cfg.tau
                bound = excess[inball].max() if inball.any() else 0.0
                dev = abs(wrapped_preds[qi] - base_preds[qi])
                assert dev <= bound + 1e-10

    def test_clamp_engages_against_neighbor(self):
        # large residual at 0, small at 0.25; query near the small one is
        # clamped by the small excess even though the tent of the large one
        # would reach it unclamped through the nearest-point rule
        data = make_data([0.0, 0.25], [4.0, 0.1])
        base = fit_zero()
        cfg = InterpolationConfig(delta=0.05, tau=0.2)
        wrapped = wrap_interpolator(base, data, cfg)
        got = wrapped.predict(np.array([0.24]))
        # nearest is 0.25 (dist 0.01), ball only holds 0.25: bound = 0.05
        assert got == pytest.approx((1.0 - 0.01 / 0.2) * 0.05, abs=1e-12)

    def test_nearest_tie_prefers_lowest_index(self):
        data = make_data([-0.1, 0.1], [3.0, -3.0])
        base = fit_zero()
        wrapped = wrap_interpolator(base, data, InterpolationConfig(delta=0.0, tau=0.5))
        got = wrapped.predict(np.array([0.0]))
        expect = (1.0 - 0.1 / 0.5) * 3.0
        assert got == pytest.approx(min(expect, 3.0))


class TestMultivariateWrapper:
    def test_coincident_and_tent(self):
        dom = BoxDomain.symmetric(1.0, 2)
        xs = np.array([[0.0, 0.0], [0.5, 0.5]])
        ys = np.array([1.0, -2.0])
        data = Dataset(xs, ys, dom)
        base = fit_zero()
        cfg = InterpolationConfig(delta=0.25, tau=0.2)
        wrapped = wrap_interpolator(base, data, cfg)
        assert wrapped.predict(np.array([0.0, 0.0])) == pytest.approx(0.75)
        # l_inf distance 0.1 from the second point
        got = wrapped.predict(np.array([0.5, 0.4]))
        assert got == pytest.approx((1.0 - 0.1 / 0.2) * soft_threshold(-2.0, 0.25))
        # far from both
        assert wrapped.predict(np.array([-0.9, 0.9])) == 0.0

    def test_membership_d2(self):
        rng = np.random.default_rng(17)
        dom = BoxDomain.symmetric(1.0, 2)
        xs = rng.uniform(-1, 1, size=(30, 2))
        ys = rng.standard_normal(30)
        data = Dataset(xs, ys, dom)
        wrapped = wrap_interpolator(fit_knn(data, 5), data, InterpolationConfig(0.1))
        assert verify_membership(wrapped, data, 0.1)[0]


class TestConfigAndTau:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            InterpolationConfig(delta=-0.1)
        with pytest.raises(ValueError):
            InterpolationConfig(delta=0.1, tau=-1.0)
        with pytest.raises(ValueError):
            InterpolationConfig(delta=0.1, p=3.0)

    def test_max_admissible_tau_reference(self):
        # beta=1, d=1: exponent max(1/3, 5/3) = 5/3
        assert max_admissible_tau(100, 1.0, 1) == pytest.approx(100.0 ** (-5.0 / 3.0))
        assert max_admissible_tau(1000, 2.0, 1) == pytest.approx(1000.0 ** (-9.0 / 5.0))

    def test_max_admissible_tau_decreasing_in_n(self):
        vals = [max_admissible_tau(n, 1.5, 2) for n in (10, 100, 1000, 10_000)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_max_admissible_tau_validation(self):
        with pytest.raises(ValueError):
            max_admissible_tau(0, 1.0, 1)
        with pytest.raises(ValueError):
            max_admissible_tau(10, 0.0, 1)
        with pytest.raises(ValueError):
            max_admissible_tau(10, 1.0, 0)
