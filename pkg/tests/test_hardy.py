from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpdual.errors import InvalidB, InvalidParameter
from hpdual.generators import GeneratorQuadruple, linear_combination, mexican_hat, meyer
from hpdual.hardy import (
    CertificateInputs,
    HardyParams,
    c2_value,
    certify,
    certify_from_constants,
    closed_form_norm_bound_n0,
    constants_c1_c4,
    delta_of_b,
    hp_bound,
    moment_polynomials,
    mp_bound,
)

U_EXT = 0.00026
C_EXT = 10 / 3 * (0.00022 * 0.036**2) ** (1 / 3)


@pytest.mark.parametrize("b", [2.5, 10.0, 250.0, 1e4])
def test_delta_n0_closed_form(b):
    assert delta_of_b(b, 0) == pytest.approx(3 / (4 * b) + math.sqrt(1 + 9 / (16 * b * b)), rel=1e-14)


def test_delta_value_at_250():
    # 3/1000 + sqrt(1 + 9/1e6)
    assert delta_of_b(250.0, 0) == pytest.approx(1.0030045, abs=1e-7)


def test_delta_solves_its_quadratic():
    for n in range(4):
        for b in (3.0, 17.0, 400.0):
            d = delta_of_b(b, n)
            assert d > 1
            assert d * d - (2 * n + 3) / (2 * b) * d - 1 == pytest.approx(0.0, abs=1e-12)


def test_delta_rejects_nonpositive_b():
    with pytest.raises(InvalidB):
        delta_of_b(0.0, 0)


@pytest.mark.parametrize("r", [0.5, 1.0, 10.0])
def test_moment_polynomials_n1(r):
    s = moment_polynomials(1, r)
    assert s.calG == pytest.approx(3.0, rel=1e-12)
    assert np.allclose(s.coeffs(0, 0), [1.0, 0.0], atol=1e-12)
    assert np.allclose(s.coeffs(1, 0), [0.0, 3 / r**2], rtol=1e-12, atol=1e-12)
    for k in (1, 2, 5):
        assert np.allclose(s.coeffs(0, k), [1.0, 0.0], atol=1e-12)
        assert np.allclose(s.coeffs(1, k), [0.0, 12 / (7 * (2**k * r) ** 2)], rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_moment_round_trip(n):
    s = moment_polynomials(n, 0.7)
    for k in range(4):
        pieces = s.region(k)
        x, w = np.polynomial.legendre.leggauss(n + 2)
        for alpha in range(n + 1):
            for beta in range(n + 1):
                total = 0.0
                for a, b in pieces:
                    xs = 0.5 * (b - a) * x + 0.5 * (a + b)
                    total += 0.5 * (b - a) * np.sum(w * s.g(alpha, k, xs) * xs**beta)
                assert total / s.measure(k) == pytest.approx(float(alpha == beta), abs=1e-10)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_calG_is_dilation_invariant(n):
    vals = [moment_polynomials(n, r).calG for r in (0.5, 1.0, 10.0)]
    assert max(vals) - min(vals) <= 1e-12 * max(vals)


def test_calG_n0_is_one():
    assert moment_polynomials(0, 1.0).calG == 1.0


def test_c2_n0_specialization():
    # (1/2)((z+1)^-3 + (z-1)^-3) = z (z^2+3) / (z^2-1)^3
    p, b = 0.75, 50.0
    for z in (1.5, 5.0, 40.0):
        bracket = 2 * (2 * b - 1) ** (-p / 2) * 2**p + 3 * (3 / (b - 1)) ** p
        special = (8 / math.sqrt(3)) ** p * (z ** (2 / p) * (z * z + 3) / (z * z - 1) ** 3) ** (p / 2) * bracket
        assert c2_value(p, 0, 1.0, b, z) == pytest.approx(special, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(1.05, 50.0), st.sampled_from([1.0, 2.5, 3.0]), st.floats(7.0, 900.0))
def test_c2_equals_c3p_c4(p, zeta_rel, calG, b):
    from hpdual.generators import n_of_p
    n = n_of_p(p)
    d = delta_of_b(b, n)
    hp = HardyParams(p, n, b, d * zeta_rel, d * zeta_rel, d, calG)
    c = constants_c1_c4(hp)
    assert p * c.log_c3 + c.log_c4 == pytest.approx(math.log(c.c2), rel=1e-12, abs=1e-12)


def test_c2_decreases_in_b():
    z = 5.0
    vals = [c2_value(0.5, 0, 1.0, b, z) for b in (5.0, 10.0, 50.0, 250.0, 1000.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def _log_profile(s, n, b):
    e = 2 * n + 3
    return 2 * b * np.log(s) + np.log((s + 1.0) ** (-e) + (s - 1.0) ** (-e)) - np.log(2 * s)


@pytest.mark.parametrize("n, b", [(0, 10.0), (1, 7.0), (2, 40.0), (0, 250.0)])
def test_decay_profile_turns_back_up_after_delta(n, b):
    # s -> s^(2b) g(s) decreases from delta only up to an interior minimum s* and
    # grows like s^(2b - 2n - 4) afterwards, so it is not decreasing on [delta, 1e4]
    d = delta_of_b(b, n)
    s = np.geomspace(d, 1e4, 20001)
    logs = _log_profile(s, n, b)
    i = int(np.argmin(logs))
    assert s[i] > d
    assert np.all(np.diff(logs[: i + 1]) <= 1e-12)
    assert np.all(np.diff(logs[i:]) >= -1e-12)
    assert logs[-1] > logs[0]


def test_hardy_params_validation():
    with pytest.raises(InvalidB):
        HardyParams.make(0.5, 3.0)
    with pytest.raises(InvalidParameter):
        HardyParams.make(0.5, 250.0, zeta=1.0, n=0)
    with pytest.raises(InvalidParameter):
        HardyParams.make(1.5, 250.0)
    with pytest.raises(InvalidParameter):
        HardyParams(0.6, 1, 250.0, 5.0, 5.0, delta_of_b(250.0, 1), 3.0)


def test_reference_configuration():
    r = mp_bound({"U1": U_EXT, "C1": C_EXT}, 0.5, 0, 1.0, 250.0, zeta=5.0)
    assert r.mp_bound == pytest.approx(0.3895037144, rel=1e-8)
    assert r.certified
    # the norm-level display evaluated with C rounded up to its stated bound 0.022
    display = closed_form_norm_bound_n0(U_EXT, 0.022, 0.5, 5.0, 250.0)
    assert display == pytest.approx(0.8767175312597855, rel=1e-6)
    assert closed_form_norm_bound_n0(U_EXT, C_EXT, 0.5, 5.0, 250.0) < display < 1
    assert r.mp_bound ** 2 <= display


def test_hp_bound_matches_single_term():
    hp = HardyParams.make(0.5, 250.0, zeta=5.0, n=0, calG=1.0)
    r = mp_bound({"U1": U_EXT, "C1": C_EXT}, 0.5, 0, 1.0, 250.0, zeta=5.0)
    assert hp_bound(U_EXT, C_EXT, hp) == pytest.approx(r.term1[1], rel=1e-14)


def test_free_zeta_is_no_worse_than_fixed():
    fixed = mp_bound({"U1": U_EXT, "C1": C_EXT}, 0.5, 0, 1.0, 250.0, zeta=5.0)
    free = mp_bound({"U1": U_EXT, "C1": C_EXT}, 0.5, 0, 1.0, 250.0)
    assert free.mp_bound <= fixed.mp_bound
    assert free.term1[0] >= free.delta


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 0.01), st.floats(0, 0.01), st.floats(0, 0.01), st.floats(0, 0.05))
def test_mp_bound_monotone_in_inputs(u1, c1, du, dc):
    a = mp_bound({"U1": u1, "C1": c1}, 0.8, None, None, 50.0)
    b = mp_bound({"U1": u1 + du, "C1": c1 + dc}, 0.8, None, None, 50.0)
    assert b.mp_bound >= a.mp_bound * (1 - 1e-9) - 1e-15


def test_zero_inputs_give_zero_bound():
    r = mp_bound({}, 1.0, None, None, 10.0)
    assert r.mp_bound == 0.0 and r.certified


def test_inputs_validation():
    with pytest.raises(InvalidParameter):
        CertificateInputs(-1.0, 0.0)
    with pytest.raises(InvalidParameter):
        CertificateInputs(math.inf, 0.0)


def test_certify_from_constants_picks_best_b():
    r = certify_from_constants({"U1": U_EXT, "C1": C_EXT}, 0.6)
    for b in (10.0, 50.0, 250.0, 1000.0):
        assert r.mp_bound <= mp_bound({"U1": U_EXT, "C1": C_EXT}, 0.6, None, None, b).mp_bound
    assert r.inputs.provenance["U1"] == "external"


def test_certify_exact_pair_is_zero():
    m = meyer()
    r = certify(GeneratorQuadruple(m, m, m, m, 2.0), 1.0)
    assert r.mp_bound == 0.0 and r.certified


def _perturbed(eps):
    m = meyer()
    psi = linear_combination([(1.0, m), (eps, mexican_hat())])
    return GeneratorQuadruple(psi, m, m, m, 2.0)


def test_certify_perturbed_pair():
    r = certify(_perturbed(1e-3), 1.0)
    assert r.certified
    assert r.inputs.u2 == 0.0 and r.inputs.c2 == 0.0
    assert r.inputs.provenance["U1"] == "computed-empirical"
    assert r.notes


def test_certify_scales_with_perturbation():
    a = certify(_perturbed(1e-4), 1.0, b_grid=[1000.0])
    b = certify(_perturbed(2e-4), 1.0, b_grid=[1000.0])
    assert b.mp_bound / a.mp_bound == pytest.approx(2.0, rel=1e-6)
