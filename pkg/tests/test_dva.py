from fractions import Fraction

import pytest

from dvafermion.coeff import XLaurent
from dvafermion.dva import (
    ANTICOMMUTING,
    COMMUTING,
    CurrentSpec,
    PairedFockSpace,
    PairedState,
    elliptic_current,
    elliptic_t_mode,
    kappa_trig,
    normal_ordering_constant,
    t_mode,
    trig_current,
)
from dvafermion.fock import NS, R, FockSpace, ParityError

m = XLaurent.monomial


def test_kappa_series():
    k = kappa_trig(20)
    assert (k * (m(2) + m(4))).agrees_with(XLaurent([1]) - m(6), 19)


@pytest.mark.parametrize("sector,l", [(NS, 1), (R, 2)])
def test_vacuum_shift_closed_form(sector, l):
    cur = trig_current(sector, 2)
    eps = cur.vacuum_shift(30)
    assert eps.agrees_with(m(l) + m(-l), 29)


def test_normal_ordering_constant_by_direct_sum():
    # sum over positive modes of x^{6m} + x^{2m}, summed term by term
    P = 30
    for sector, start in ((NS, 1), (R, 2)):
        direct = XLaurent()
        for k in range(start, P, 2):
            direct = direct + m(3 * k) + m(k)
        got = normal_ordering_constant(sector, P)
        assert got.agrees_with(direct, P - 1)


@pytest.mark.parametrize("sector", [NS, R])
def test_vacuum_eigenvalue(sector):
    spec = CurrentSpec.trig(sector)
    sp = FockSpace(sector, 3)
    t0 = t_mode(0, spec, sp, prec=24)
    l = 1 if sector == NS else 2
    for v in sp.indices_at(0):
        col = t0.cols[v]
        assert set(col) == {v}
        assert col[v].agrees_with(m(l) + m(-l), 23)


@pytest.mark.parametrize("sector", [NS, R])
def test_positive_modes_kill_vacuum(sector):
    cur = trig_current(sector, 4)
    for k in range(1, 5):
        op = cur.bare(k)
        for v in cur.space.indices_at(0):
            assert v not in op.cols


def test_t_minus_one_on_ns_vacuum_vanishes():
    cur = trig_current(NS, 4)
    assert cur.space.vacuum() not in cur.bare(-1).cols


@pytest.mark.parametrize("sector", [NS, R])
def test_modes_are_graded(sector):
    cur = trig_current(sector, 4)
    for k in range(-4, 5):
        op = cur.bare(k)
        assert op.check_grading() and op.degree == -k


@pytest.mark.parametrize("sector", [NS, R])
def test_matrix_elements_stable_under_cutoff_growth(sector):
    small, big = trig_current(sector, 4), trig_current(sector, 6)
    for k in range(-3, 4):
        a, b = small.bare(k), big.bare(k)
        lim = 2 * (4 - abs(k) - 1)
        for j, st in enumerate(small.space.basis):
            if st.level2 > lim:
                continue
            jb = big.space.index[st]
            col_a = {str(small.space.basis[i]): c for i, c in a.cols.get(j, {}).items()}
            col_b = {str(big.space.basis[i]): c for i, c in b.cols.get(jb, {}).items()}
            assert col_a == col_b


def test_trig_rejects_half_integer_modes():
    with pytest.raises(ParityError):
        trig_current(NS, 2).bare("1/2")


def test_elliptic_rejects_integer_modes():
    cur = elliptic_current(2)
    with pytest.raises(ParityError):
        cur.bare(1)


@pytest.mark.parametrize("sign", [COMMUTING, ANTICOMMUTING])
def test_elliptic_lowering_kills_vacuum(sign):
    cur = elliptic_current(3, sign)
    vac = cur.space.vacuum()
    for s in ("1/2", "3/2", "5/2"):
        assert vac not in cur.bare(s).cols


@pytest.mark.parametrize("sign", [COMMUTING, ANTICOMMUTING])
def test_elliptic_first_excitation(sign):
    spec = CurrentSpec.elliptic(sign)
    sp = PairedFockSpace(2, sign)
    op = elliptic_t_mode("-1/2", spec, sp)
    col = op.cols[sp.vacuum()]
    target = sp.index[PairedState((1,), (0,))]
    assert col == {target: m(1) - m(-1)}


def test_paired_space_dimension():
    # total level <= 1: NS parts {1/2} and R parts {0, 1}
    sp = PairedFockSpace(1)
    ns_counts = {0: 1, 1: 1, 2: 0}
    r_counts = {0: 2, 2: 2}
    want = sum(ns_counts[a] * r_counts.get(b, 0) for a in ns_counts for b in r_counts if a + b <= 2)
    assert len(sp) == want


def test_spec_validation():
    with pytest.raises(ValueError):
        CurrentSpec("OTHER", 4)
    with pytest.raises(ValueError):
        CurrentSpec.elliptic("sideways")
    with pytest.raises(ValueError):
        trig_current(NS, 2).__class__(CurrentSpec.trig(R), FockSpace(NS, 2))
