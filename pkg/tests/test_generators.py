from __future__ import annotations

import json
import math

import numpy as np
import pytest

from hpdual.errors import ConfigError, OrderUnavailable
from hpdual.generators import (
    ANALYZER,
    SYNTHESIZER,
    bandlimited_orthonormal_pair,
    calderon_sum,
    check_hypotheses,
    difference,
    dilated,
    from_samples,
    linear_combination,
    load_generator,
    load_generator_json,
    mexican_hat,
    meyer,
    moment,
    n_of_p,
    scaled,
    time_eval,
    time_values,
    zero_generator,
)


def test_n_of_p():
    assert [n_of_p(p) for p in (1.0, 0.8, 0.51, 0.5, 0.4, 1 / 3, 0.3)] == [0, 0, 0, 1, 1, 2, 2]


def test_mexican_hat_transform_closed_form():
    mh = mexican_hat()
    xi = np.array([0.0, 0.1, 0.25, 0.7])
    expected = 4 * math.pi**2 * math.sqrt(2 * math.pi) * xi**2 * np.exp(-2 * math.pi**2 * xi**2)
    assert np.allclose(mh(xi), expected, rtol=1e-14, atol=0)
    assert mh(0.0) == 0


def test_mexican_hat_transform_matches_riemann_oracle():
    # dense rectangle sum of (1 - x^2) e^{-x^2/2} e^{-2 pi i x xi}; the integrand is negligible beyond |x| = 40
    x = np.arange(-40, 40, 1 / 64)
    oracle = np.sum((1 - x**2) * np.exp(-x**2 / 2) * np.exp(-2j * math.pi * x * 0.25)) / 64
    assert abs(mexican_hat()(0.25) - oracle) <= 1e-6


@pytest.mark.parametrize("beta, expected", [(0, 0.0), (1, 0.0), (2, -2 * math.sqrt(2 * math.pi))])
def test_mexican_hat_moments(beta, expected):
    m = moment(mexican_hat(), beta)
    assert m.value == pytest.approx(expected, abs=1e-12)
    assert m.error_bound == 0.0


def test_mexican_hat_moment_zero_quadrature_oracle():
    x = np.linspace(-40, 40, 400001)
    vals = (1 - x**2) * np.exp(-x**2 / 2)
    assert abs(np.trapezoid(vals, x)) < 1e-9


def test_moment_order_unavailable():
    with pytest.raises(OrderUnavailable):
        moment(meyer(), 50)


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (1.0, 0.0), (2.0, -3 * math.exp(-2))])
def test_time_eval_mexican_hat(x, expected):
    r = time_eval(mexican_hat(), x)
    assert abs(r.value - expected) <= max(r.error_bound, 1e-12)
    assert r.value == pytest.approx(expected, abs=1e-8)


def test_time_values_table_matches_inversion_for_meyer():
    g = meyer()
    xs = np.array([-3.3, -0.5, 0.2, 1.7, 6.0])
    vals, errs = time_values(g, xs)
    for x, v, e in zip(xs, vals, errs):
        ref = time_eval(g, float(x))
        assert abs(v - ref.value) <= e + ref.error_bound + 1e-12


def test_meyer_partition_of_unity():
    g = bandlimited_orthonormal_pair().psi_star
    assert calderon_sum(g, 1.0)[0] == pytest.approx(1.0, abs=1e-10)
    xi = np.concatenate([np.geomspace(1e-3, 1e3, 200), -np.geomspace(0.01, 50, 50)])
    assert np.max(np.abs(calderon_sum(g, xi) - 1)) <= 1e-10


def test_meyer_vanishes_near_origin():
    q = bandlimited_orthonormal_pair()
    assert q.exact_dual_declared
    g = q.psi_star
    assert g(0.0) == 0
    for beta in range(g.max_order + 1):
        assert moment(g, beta).value == 0.0


@pytest.mark.parametrize("g", [mexican_hat(), meyer()], ids=["mexican_hat", "meyer"])
def test_real_generators_have_hermitian_transforms(g):
    xi = np.linspace(0.01, 2.0, 57)
    assert np.allclose(g(-xi), np.conj(g(xi)), atol=1e-14)


def test_mexican_hat_transform_is_real_even():
    xi = np.linspace(-2, 2, 41)
    v = mexican_hat()(xi)
    assert np.all(v.imag == 0)
    assert np.allclose(v, v[::-1])


def _central_difference_ok(g, order, xs, h=1e-3):
    # Richardson-extrapolated central difference, truncation error O(h^4)
    d = lambda s: (g(xs + s, order) - g(xs - s, order)) / (2 * s)  # noqa: E731
    num = (4 * d(h / 2) - d(h)) / 3
    ana = g(xs, order + 1)
    return np.abs(num - ana) <= 1e-3 * np.maximum(1.0, np.abs(ana))


def test_mexican_hat_derivative_oracles():
    g = mexican_hat()
    xs = np.random.default_rng(1).uniform(-1.5, 1.5, 100)
    for order in range(6):
        assert np.all(_central_difference_ok(g, order, xs))


def test_meyer_derivative_oracles_away_from_breakpoints():
    g = meyer()
    rng = np.random.default_rng(2)
    xs = rng.uniform(0.34, 1.32, 400)
    xs = xs[np.min(np.abs(xs[:, None] - np.array([1 / 3, 2 / 3, 4 / 3])), axis=1) > 2e-3][:100]
    xs = np.concatenate([xs, -xs])
    # order max_order - 1 -> max_order is only piecewise smooth at 2/3; stop one short
    for order in range(g.max_order - 1):
        assert np.all(_central_difference_ok(g, order, xs))


def test_order_unavailable():
    with pytest.raises(OrderUnavailable):
        meyer()(0.5, 99)


@pytest.mark.parametrize("p", [1.0, 0.6])
def test_mexican_hat_hypotheses_as_synthesizer(p):
    rep = check_hypotheses(mexican_hat(), p, SYNTHESIZER)
    assert rep.passed, rep.failing()
    assert rep.n == 0
    assert rep.xi_sobolev_flag


def test_mexican_hat_second_moment_fails_at_small_p():
    rep = check_hypotheses(mexican_hat(), 0.3, SYNTHESIZER)
    assert not rep.passed
    assert [c.name for c in rep.failing()] == ["moment2"]


@pytest.mark.parametrize("p", [1.0, 0.6, 0.4])
def test_zero_generator_hypotheses(p):
    for role in (SYNTHESIZER, ANALYZER):
        assert check_hypotheses(zero_generator(), p, role).passed


def test_meyer_hypotheses_as_analyzer():
    assert check_hypotheses(meyer(), 0.6, ANALYZER).passed


def test_hypotheses_need_enough_orders():
    g = from_samples(np.linspace(0.2, 2, 40), np.sin(np.linspace(0, math.pi, 40)))
    with pytest.raises(OrderUnavailable):
        check_hypotheses(g, 0.3, SYNTHESIZER)


def test_envelope_holds_on_samples():
    for g in (mexican_hat(), meyer()):
        for order in range(min(g.max_order, 4) + 1):
            env = g.envelope(order)
            xi = np.concatenate([np.geomspace(1e-6, 1e6, 400), -np.geomspace(1e-6, 1e6, 400)])
            assert np.all(np.abs(g(xi, order)) <= env(xi) * (1 + 1e-9) + 1e-300)


def test_linear_combinations_cancel_and_scale():
    m, mh = meyer(), mexican_hat()
    assert difference(m, m).is_zero
    s = linear_combination([(1.0, m), (1e-3, mh)])
    d = difference(s, m)
    xi = np.linspace(-2, 2, 33)
    assert np.allclose(d(xi), 1e-3 * mh(xi), rtol=1e-12, atol=1e-18)
    assert np.allclose(scaled(mh, 2.5)(xi, 1), 2.5 * mh(xi, 1))


def test_dilation_rescales_transform():
    mh = mexican_hat()
    g = dilated(mh, 2.0)
    xi = np.linspace(-1, 1, 11)
    assert np.allclose(g(xi), mh(2.0 * xi), rtol=1e-14, atol=0)
    # L1 normalised: x -> mh(x/2)/2
    assert time_eval(g, 1.0).value == pytest.approx(0.5 * 0.75 * math.exp(-1 / 8), abs=1e-9)


def test_load_generator_forms():
    g = load_generator({"builtin": "mexican_hat", "params": {"scale": 2.0}})
    assert g(0.3) == pytest.approx(2 * mexican_hat()(0.3))
    c = load_generator({"combination": [[1.0, {"builtin": "meyer"}], [-1.0, {"builtin": "meyer"}]]})
    assert c.is_zero
    grid = np.linspace(0.25, 1.5, 50)
    s = load_generator({"samples": {"grid": grid.tolist(), "values": np.sin(grid).tolist()}})
    assert s(0.8).real == pytest.approx(math.sin(0.8), abs=1e-7)


def test_load_generator_errors():
    with pytest.raises(ConfigError):
        load_generator({"builtin": "nope"})
    with pytest.raises(ConfigError):
        load_generator_json("{not json")
    with pytest.raises(ConfigError):
        load_generator({"samples": {"grid": [0, 1], "values": [0, 1]}})
    assert load_generator_json(json.dumps({"builtin": "zero"})).is_zero
