import numpy as np
import pytest

from rzk import history as hist


def test_from_constant_covers_delay_horizon():
    w = hist.from_constant(np.array([1.0, 2.0]), 0.3)
    assert w.span_ok()
    assert np.allclose(hist.interpolate(w, -0.3), [1.0, 2.0])
    assert np.allclose(hist.interpolate(w, -0.17), [1.0, 2.0])
    assert np.allclose(hist.interpolate(w, 0.0), [1.0, 2.0])


def test_interpolate_rejects_theta_outside_window():
    w = hist.from_constant(np.array([1.0]), 0.3)
    with pytest.raises(ValueError):
        hist.interpolate(w, -0.31)
    with pytest.raises(ValueError):
        hist.interpolate(w, 0.1)


def test_push_requires_increasing_times_and_matching_dimension():
    w = hist.from_constant(np.zeros(2), 0.3)
    w.push(0.1, np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        w.push(0.1, np.array([2.0, 2.0]))
    with pytest.raises(ValueError):
        w.push(0.05, np.array([2.0, 2.0]))
    with pytest.raises(ValueError):
        w.push(0.2, np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        w.push(0.2, np.array([np.nan, 0.0]))


def test_cubic_hermite_reproduces_cubic_polynomials(rng):
    # degree-3 data with exact slopes interpolates exactly
    c = rng.standard_normal(4)
    p = np.polynomial.Polynomial(c)
    dp = p.deriv()
    w = hist.HistoryWindow(1, 1.0)
    ts = np.linspace(0.0, 1.0, 6)
    for t in ts:
        w.push(t, np.array([p(t)]), np.array([dp(t)]))
    tq = rng.uniform(0.0, 1.0, size=50)
    got = w.interp_times(tq)[:, 0]
    assert np.max(np.abs(got - p(tq))) < 1e-12


def test_finite_difference_slope_fallback_is_linear_exact():
    # seed the first slope; the secant fallback then keeps linear data exact
    w = hist.HistoryWindow(1, 1.0)
    w.push(0.0, np.array([1.0]), np.array([2.0]))
    for t in (0.25, 0.5, 0.75, 1.0):
        w.push(t, np.array([2.0 * t + 1.0]))
    tq = np.linspace(0.0, 1.0, 21)
    assert np.max(np.abs(w.interp_times(tq)[:, 0] - (2.0 * tq + 1.0))) < 1e-12


def test_scratch_push_pop_restores_state():
    w = hist.from_constant(np.array([1.0]), 0.3)
    w.push(0.1, np.array([2.0]), np.array([0.5]))
    before = (w.count, w.latest_time, float(w.latest_state[0]))
    w.push_scratch(0.15, np.array([3.0]), np.array([0.5]))
    assert w.latest_time == pytest.approx(0.15)
    w.pop_scratch()
    assert (w.count, w.latest_time, float(w.latest_state[0])) == before


def test_theta_grid_endpoints_and_size():
    g = hist.theta_grid(0.3, 66)
    assert g.shape == (66,)
    assert g[0] == pytest.approx(-0.3)
    assert g[-1] == 0.0
    assert np.all(np.diff(g) > 0)


def test_weighted_sup_constant_window_is_field_value():
    w = hist.from_constant(np.array([3.0, 4.0]), 0.3)

    class Norm2:
        n = 2

        @staticmethod
        def value_many(X):
            return np.sum(X * X, axis=-1)

    assert hist.weighted_sup(w, Norm2, 0.0) == pytest.approx(25.0)
    # negative mu weights e^{mu theta} <= 1, sup still at theta = 0 here
    assert hist.weighted_sup(w, Norm2, 1.0) == pytest.approx(25.0)


def test_weighted_sup_ramp_oracle():
    # value along the window is 1 - theta; weight e^{theta} makes the
    # weighted profile e^{theta}(1 - theta) with max exactly 1 at theta = 0
    class Ident:
        n = 1

        @staticmethod
        def value_many(X):
            return X[..., 0]

    w = hist.from_constant(np.array([1.3]), 0.3)
    for t in np.linspace(0.05, 0.3, 6):
        w.push(t, np.array([1.3 - t]), np.array([-1.0]))
    assert hist.weighted_sup(w, Ident, 1.0) == pytest.approx(1.0, abs=1e-9)
    # unweighted sup picks the oldest (largest) value 1 - (-0.3)
    assert hist.weighted_sup(w, Ident, 0.0) == pytest.approx(1.3, abs=1e-9)


def test_weighted_sup_is_signed_not_absolute():
    class Ident:
        n = 1

        @staticmethod
        def value_many(X):
            return X[..., 0]

    w = hist.from_constant(np.array([-5.0]), 0.3)
    assert hist.weighted_sup(w, Ident, 0.0) == pytest.approx(-5.0)


def test_sup_norm_of_window():
    w = hist.from_constant(np.array([3.0, 4.0]), 0.3)
    assert hist.sup_norm(w) == pytest.approx(5.0)
    w.push(0.2, np.array([6.0, 8.0]))
    assert hist.sup_norm(w) == pytest.approx(10.0)


def test_copy_is_independent():
    w = hist.from_constant(np.array([1.0]), 0.3)
    c = w.copy()
    w.push(0.1, np.array([9.0]))
    assert c.count == 1
    assert c.latest_time == 0.0


def test_push_sample_alias_returns_window():
    w = hist.from_constant(np.array([0.0]), 0.3)
    out = hist.push_sample(w, 0.1, np.array([1.0]))
    assert out is w
    assert w.count == 2
