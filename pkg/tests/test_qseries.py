from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dvafermion.coeff import ONE, XLaurent
from dvafermion.qseries import (
    DivergentProductError,
    ZSeries,
    central_const,
    eta_family,
    f_series,
    geometric,
    identity_213,
    identity_eta_product,
    qpoch,
    rho_series,
    theta,
)
from oracles import factor_exponents, geometric as geo_dict, linear, mul2, structure_function, theta_sum


def terms_below(a: XLaurent, P: int) -> dict:
    return {e: v for e, v in a.terms().items() if e < P}


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_structure_function_matches_product_oracle(r):
    L, P = 4, 16
    f = f_series(r, L, P)
    ref = structure_function(r, L, P)
    for l in range(L + 1):
        assert terms_below(f.coeff(l), P) == ref[l], l


@pytest.mark.parametrize("r", [2, 3, 4, 5, 7])
def test_f0_is_one(r):
    assert f_series(r, 3, 20).coeff(0).agrees_with(ONE, 19)


def test_f_at_r2_is_rational():
    # f = (1 - x^-2 z)(1 - x^2 z) / (1 - z)^2 at r = 2
    f = f_series(2, 6, 20)
    for l in range(1, 7):
        want = XLaurent([2 * l]) - XLaurent.monomial(-2, l) - XLaurent.monomial(2, l)
        assert f.coeff(l).agrees_with(want, 19)


@settings(max_examples=25, deadline=None)
@given(st.integers(-6, 6), st.integers(1, 5), st.integers(1, 4))
def test_qpoch_matches_dict_product(c, d, L):
    P = 14
    keep = P + L * abs(min(c, 0)) + 4
    ref = {(0, 0): 1}
    for e in factor_exponents(c, d, keep):
        ref = mul2(ref, linear(e), L, keep)
    got = qpoch(c, [d], L, P)
    for l in range(L + 1):
        want = {e: v for (e, z), v in ref.items() if z == l and e < P}
        assert terms_below(got.coeff(l), P) == want


def test_qpoch_two_bases():
    P, L = 14, 3
    got = qpoch(1, [2, 3], L, P)
    keep = P + 2
    ref = {(0, 0): 1}
    for a in range(0, keep // 2 + 1):
        for b in range(0, keep // 3 + 1):
            e = 1 + 2 * a + 3 * b
            if e <= keep:
                ref = mul2(ref, linear(e), L, keep)
    for l in range(L + 1):
        want = {e: v for (e, z), v in ref.items() if z == l and e < P}
        assert terms_below(got.coeff(l), P) == want


def test_nonpositive_base_rejected():
    with pytest.raises(DivergentProductError):
        qpoch(1, [0], 3, 10)


def test_geometric_inverts_linear():
    a = XLaurent.monomial(3)
    prod = ZSeries.linear(a, 5) * geometric(3, 5)
    assert prod == ZSeries.one(5)


@pytest.mark.parametrize("c,p", [(2, 6), (1, 4), (3, 8), (-2, 6)])
def test_theta_matches_triple_product_sum(c, p):
    P = 30
    assert terms_below(theta(c, p, P), P) == theta_sum(c, p, P)


def test_theta_vanishes_at_base():
    assert theta(6, 6, 20).is_zero


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_identities_vanish(r):
    assert identity_213(r, 6, 20).zero_through(19)
    assert identity_eta_product(r, 6, 20).zero_through(19)


def test_identity_detects_wrong_f():
    f = f_series(4, 4, 80)
    bad = ZSeries({j: f.coeff(j) + (XLaurent.monomial(5) if j == 2 else XLaurent()) for j in range(5)}, 4)
    assert not identity_213(4, 4, 20, f=bad).zero_through(19)


@pytest.mark.parametrize("r", [3, 4])
def test_eta_family_consistent(r):
    assert eta_family(r, 4, 20).consistent(19)


def test_rho_prefactor():
    rho = rho_series(4, 3, 3, 16)
    assert rho.frac_exp == Fraction(4, 6)
    assert (rho * rho.mirror()).frac_exp == Fraction(4, 3)


@pytest.mark.parametrize("r,expected", [(2, {-2: -1, 2: 1}), (4, {-6: -1, -4: -1, -2: -1, 2: 1, 4: 1, 6: 1})])
def test_central_constant(r, expected):
    c = central_const(r)
    assert dict(c.terms()) == expected
    m = XLaurent.monomial
    assert c * (m(1) - m(-1)) == (m(r - 1) - m(1 - r)) * (m(r) - m(-r))
