from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpdual.errors import InvalidDilation
from hpdual.czkernel import (
    KernelGrid,
    auto_level_range,
    cz_constant,
    cz_from_values,
    eval_K0_partial,
    kappa_alpha,
    level_tails,
    product_derivative,
    random_kernel_grid,
    sigma_alpha,
    tau_alpha,
    verify_kernel_bounds,
)
from hpdual.generators import dilated, meyer, mexican_hat, scaled, zero_generator

MEYER = meyer()


@pytest.mark.parametrize("A, alpha, expected", [(2.0, 0, 4.0), (2.0, 1, 10 / 3), (2.0, 2, 22 / 7), (3.0, 0, 3.0)])
def test_kappa_values(A, alpha, expected):
    assert kappa_alpha(A, alpha) == pytest.approx(expected, rel=1e-15)


def test_kappa_rejects_nonexpanding_dilation():
    with pytest.raises(InvalidDilation):
        kappa_alpha(1.0, 0)


def test_external_constants_give_small_cz_constant():
    cz = cz_from_values([0.000045, 0.00022], [0.00086, 0.036], 2.0)
    c0 = 4 * math.sqrt(0.000045 * 0.00086)
    c1 = 10 / 3 * (0.00022 * 0.036**2) ** (1 / 3)
    assert cz.c_alpha[0].value == pytest.approx(c0, rel=1e-14)
    assert cz.c_alpha[1].value == pytest.approx(c1, rel=1e-14)
    assert cz.argmax == 1
    assert cz.cz_constant.value == pytest.approx(0.02193922620973048, rel=1e-14)
    assert cz.cz_constant.value < 0.022
    assert cz.provenance == "external"


def test_zero_generator_has_zero_constants():
    cz = cz_constant(zero_generator(), MEYER, 1.0, 2.0)
    assert cz.cz_constant.value == 0.0 and cz.cz_constant.error_bound == 0.0
    assert all(s.value == 0 for s in cz.sigma) and all(t.value == 0 for t in cz.tau)


def _riemann(psi, phi, alpha, order, h):
    """Midpoint sum over the compact support of the lattice-summed L1 norm."""
    xi = np.arange(-3.0, 3.0, h) + h / 2

    def f(t, l):
        return t**alpha * np.conj(phi(t)) * psi(t + l)

    stencils = {
        0: lambda l: f(xi, l),
        2: lambda l: (f(xi + h, l) - 2 * f(xi, l) + f(xi - h, l)) / h**2,
        3: lambda l: (f(xi + 2 * h, l) - 2 * f(xi + h, l) + 2 * f(xi - h, l) - f(xi - 2 * h, l)) / (2 * h**3),
    }
    return sum(np.sum(np.abs(stencils[order](l))) * h for l in range(-6, 7))


PAIRS = {
    "meyer_meyer": (MEYER, MEYER),
    "meyer_dilated": (MEYER, dilated(MEYER, 0.5)),
}


@pytest.mark.parametrize("pair", sorted(PAIRS))
@pytest.mark.parametrize("alpha", [0, 1])
def test_sigma_tau_match_dense_riemann_oracle(pair, alpha):
    psi, phi = PAIRS[pair]
    s = sigma_alpha(psi, phi, alpha)
    t = tau_alpha(psi, phi, alpha)
    coarse, fine = 1e-3, 5e-4
    so = [(2 * math.pi) ** alpha * _riemann(psi, phi, alpha, 0, h) for h in (coarse, fine)]
    to = [_riemann(psi, phi, alpha, alpha + 2, h) / (4 * math.pi**2) for h in (coarse, fine)]
    # the finer Riemann value is trusted to within the change between resolutions
    assert abs(s.value - so[1]) <= s.error_bound + abs(so[0] - so[1]) + 1e-12
    assert abs(t.value - to[1]) <= t.error_bound + abs(to[0] - to[1]) + 1e-12


def test_product_derivative_matches_richardson_differences():
    psi, phi = PAIRS["meyer_dilated"]
    xi = np.array([0.7, 0.9, 1.1, -0.8])
    for alpha in (0, 1):
        for order in range(3):
            d = lambda h: (product_derivative(psi, phi, alpha, -1, xi + h, order)  # noqa: E731
                           - product_derivative(psi, phi, alpha, -1, xi - h, order)) / (2 * h)
            num = (4 * d(5e-4) - d(1e-3)) / 3
            ana = product_derivative(psi, phi, alpha, -1, xi, order + 1)
            assert np.all(np.abs(num - ana) <= 1e-5 * np.maximum(1, np.abs(ana)))


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_constants_are_homogeneous_in_the_synthesizer(c):
    base = cz_constant(MEYER, MEYER, 1.0, 2.0)
    sc = cz_constant(scaled(MEYER, c), MEYER, 1.0, 2.0)
    for a in range(2):
        assert sc.sigma[a].value == pytest.approx(c * base.sigma[a].value, rel=1e-8)
        assert sc.tau[a].value == pytest.approx(c * base.tau[a].value, rel=1e-8)
        assert sc.c_alpha[a].value == pytest.approx(c * base.c_alpha[a].value, rel=1e-8)
    assert sc.cz_constant.value == pytest.approx(c * base.cz_constant.value, rel=1e-8)


def test_c_alpha_formula_and_alpha_range():
    cz = cz_constant(MEYER, MEYER, 0.6, 2.0)
    assert cz.alpha_max == 1
    for a in range(2):
        expect = cz.kappa[a] * cz.sigma[a].value ** (1 / (a + 2)) * cz.tau[a].value ** ((a + 1) / (a + 2))
        assert cz.c_alpha[a].value == pytest.approx(expect, rel=1e-14)
    assert cz.cz_constant.value == max(c.value for c in cz.c_alpha)


def test_sigma_is_invariant_under_swapping_a_real_even_pair():
    mh = mexican_hat()
    g = dilated(mh, 1.5)
    a, b = sigma_alpha(mh, g, 0, 1e-8), sigma_alpha(g, mh, 0, 1e-8)
    # for real even transforms the l-sum is symmetric in the two generators
    assert abs(a.value - b.value) <= a.error_bound + b.error_bound + 1e-9 * a.value


def _meyer_time_oracle(x):
    """Dense midpoint Fourier inversion over the band of the Meyer wavelet."""
    h = 1 / 4096
    xi = np.arange(-4 / 3, 4 / 3, h) + h / 2
    vals = MEYER(xi)
    return np.real(np.exp(2j * math.pi * np.outer(x, xi)) @ vals) * h


def test_K0_matches_brute_force_sum():
    x, y = 0.3, -1.7
    ks = np.arange(-300, 301, dtype=float)
    oracle = float(np.sum(_meyer_time_oracle(x - ks) * _meyer_time_oracle(y - ks)))
    k0 = eval_K0_partial(MEYER, MEYER, 0, x, y)
    assert abs(k0.value - oracle) <= k0.error_bound + 1e-8


def test_K0_symmetry_and_periodicity():
    a = eval_K0_partial(MEYER, MEYER, 0, 0.4, 2.1)
    b = eval_K0_partial(MEYER, MEYER, 0, 2.1, 0.4)
    c = eval_K0_partial(MEYER, MEYER, 0, 1.4, 3.1)
    assert abs(a.value - b.value) <= a.error_bound + b.error_bound
    assert abs(a.value - c.value) <= a.error_bound + c.error_bound


def test_level_range_makes_tails_small():
    lr = auto_level_range(1.3, 4.9, 0, 2.0, 0.7, 1e-10)
    small, large = level_tails(1.3, 4.9, 0, 2.0, 0.7, lr)
    assert small <= 5e-11 and large <= 5e-11


def test_grid_rejects_diagonal_points():
    with pytest.raises(ValueError):
        KernelGrid(((1.0, 1.0),))


@pytest.mark.parametrize("p", [1.0, 0.6])
def test_kernel_bounds_hold_for_meyer(p):
    rep = verify_kernel_bounds(MEYER, MEYER, p, 2.0, random_kernel_grid(6, seed=3))
    assert rep.passed, [r for r in rep.rows if not r.passed]
    assert {r.alpha for r in rep.rows} == {0, 1}
    assert rep.to_dict()["budgets"]["absolute"] > 0


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 3))
def test_K0_bound_property(x, gap):
    rep = verify_kernel_bounds(MEYER, MEYER, 1.0, 2.0, KernelGrid(((x, x + gap),)), alphas=[0])
    assert rep.passed
