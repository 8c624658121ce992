import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dvafermion.coeff import Window, XLaurent
from dvafermion.dva import ANTICOMMUTING, COMMUTING, elliptic_current, trig_current
from dvafermion.fock import NS, R, FockSpace, ParityError, default_contraction
from dvafermion.qseries import central_const
from dvafermion.verify import (
    ELLIPTIC_DELTAS,
    FAIL,
    PASS,
    SKIPPED,
    anticommutator_suite,
    delta_combination,
    dva_residual,
    elliptic_residual,
    l_max,
    reliable_states,
    rhs_coefficient,
    vacuum_residual,
)

m = XLaurent.monomial
W = Window(-24, 16)


@settings(max_examples=30, deadline=None)
@given(st.integers(-12, 12))
def test_four_delta_coefficient(j):
    got = delta_combination(ELLIPTIC_DELTAS, j)
    if j % 2 == 0:
        assert got.is_zero
    else:
        assert got == (m(j) - m(-j)) * XLaurent([2])


def test_trig_rhs():
    c = central_const(4)
    assert rhs_coefficient("TRIG", 4, 2) == c * (m(-2) - m(2))
    assert rhs_coefficient("TRIG", 4, 0).is_zero


def test_elliptic_rhs():
    c = central_const(2)
    assert rhs_coefficient("ELLIPTIC", 2, 1) == c * (m(1) - m(-1))


def test_reliable_band_and_lmax():
    sp = FockSpace(NS, 4)
    assert l_max(sp, 2, -2) == 5
    rel = reliable_states(sp, 4, -2)
    assert rel == [i for i, s in enumerate(sp.basis) if s.level2 <= 6]
    strict = reliable_states(sp, 4, -2, conservative=True)
    assert set(strict) <= set(rel)
    assert all(sp.basis[i].level2 + 4 <= 8 for i in strict)
    # raising by 3 twice needs e + 6 <= 8; the conservative rule also adds 3
    assert reliable_states(FockSpace(R, 8), -6, -6, conservative=True) == []
    assert len(reliable_states(FockSpace(R, 8), -6, -6)) == 6  # levels 0, 1, 2


def test_conservative_and_tight_bands_agree():
    cur = trig_current(R, 6)
    for mn in [(-2, -1), (1, -2), (2, -2)]:
        a = dva_residual(*mn, cur, W)
        b = dva_residual(*mn, cur, W, conservative=True)
        assert a.status == b.status == PASS
        keep = set(b.columns)
        assert {k: v for k, v in a.lhs.items() if k[1] in keep} == b.lhs


@pytest.mark.parametrize("sector", [NS, R])
@pytest.mark.parametrize("mn", [(0, 0), (1, -1), (2, 1), (-2, 1), (2, -2)])
def test_trig_relation_small(sector, mn):
    rep = dva_residual(*mn, trig_current(sector, 5), W)
    assert rep.status == PASS, rep.residual
    if mn[0] + mn[1] == 0:
        assert rep.delta_matches


def test_empty_subspace_is_skipped():
    rep = dva_residual(-3, -3, trig_current(NS, 2), W)
    assert rep.status == SKIPPED and rep.reliable_dim == 0


def test_wrong_current_kind_rejected():
    with pytest.raises(ValueError):
        dva_residual(0, 0, elliptic_current(2), W)
    with pytest.raises(ParityError):
        elliptic_residual(1, -1, elliptic_current(2), W)


def test_elliptic_conventions_differ():
    good = elliptic_residual("1/2", "-1/2", elliptic_current(4, COMMUTING), W)
    bad = elliptic_residual("1/2", "-1/2", elliptic_current(4, ANTICOMMUTING), W)
    assert good.status == PASS and good.delta_matches
    assert bad.status == FAIL


def test_elliptic_relation_fails_at_wrong_r():
    cur = elliptic_current(4, COMMUTING, r=3)
    assert elliptic_residual("1/2", "-1/2", cur, W).status == FAIL


@pytest.mark.parametrize("x0", ["1/3", "7/10"])
def test_float_backend(x0):
    rep = dva_residual(1, -1, trig_current(R, 4), backend="float", x0=x0)
    assert rep.status == PASS
    assert float(rep.norm) <= 1e-25


def test_perturbed_f_detected():
    cur = trig_current(NS, 5)
    rep = dva_residual(1, -1, cur, W, f_shift={1: m(8)})
    assert rep.status == FAIL and rep.nonzero_entries > 0


def test_perturbed_kappa_detected():
    cur = trig_current(NS, 5, kappa_shift=m(8))
    assert dva_residual(1, -1, cur, W).status == FAIL


def test_perturbed_contraction_detected():
    def twisted(m2):
        return default_contraction(m2) + (m(8) if m2 == 1 else XLaurent())

    cur = trig_current(NS, 5, contraction=twisted)
    assert dva_residual(1, -1, cur, W).status == FAIL
    assert not anticommutator_suite(FockSpace(NS, 3), 2, twisted).passed


def test_report_serialization():
    rep = dva_residual(1, -1, trig_current(NS, 4), W)
    d = rep.to_dict()
    assert d["pass"] and d["window"] == [-24, 16] and d["sector"] == "NS"
    assert "lhs" not in d


@pytest.mark.parametrize("sector", [NS, R])
def test_vacuum_residual_exact(sector):
    out = vacuum_residual(trig_current(sector, 3), Window(-24, 20))
    assert out["pass"]
    assert out["vacua"] == (1 if sector == NS else 2)


def test_anticommutator_suite():
    rep = anticommutator_suite(FockSpace(R, 4), 3)
    assert rep.passed
    pairs = {(r.m, r.n) for r in rep.results}
    assert ("0", "0") in pairs and ("-3", "3") in pairs
    with pytest.raises(ValueError):
        anticommutator_suite(FockSpace(R, 2), 3)


@pytest.mark.parametrize("x0", ["1/3", "1/2", "7/10"])
def test_float_backend_grid(x0):
    cur = trig_current(NS, 5)
    worst = 0.0
    for a in range(-2, 3):
        for b in range(-2, 3):
            rep = dva_residual(a, b, cur, backend="float", x0=x0)
            assert rep.status == PASS, (a, b, rep.norm)
            worst = max(worst, float(rep.norm))
    ell = elliptic_current(4, COMMUTING)
    for a, b in (("1/2", "-1/2"), ("3/2", "-3/2"), ("-1/2", "3/2")):
        rep = elliptic_residual(a, b, ell, backend="float", x0=x0)
        assert rep.status == PASS
        worst = max(worst, float(rep.norm))
    assert worst <= 1e-25
