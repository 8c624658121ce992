"""q-series kernel: Pochhammer products, the structure function, eta/rho, theta.

Everything here is a formal power series in a spectral variable z whose
coefficients are ``XLaurent`` values in x.  Truncation in z is explicit
(``lpos``); truncation in x is carried by each coefficient's precision and
is managed automatically: a function asked for precision ``prec`` keeps
raising its internal working precision until every returned coefficient is
certified below x^prec, then truncates to exactly that precision so that
results do not depend on how much work was needed to get there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels
from .coeff import ONE, X, ZERO, Monomial, PrecisionError, XLaurent, parse_rational, xl_divexact

DEFAULT_PREC = 25


class DivergentProductError(ValueError):
    pass


def _mono(m) -> Monomial:
    if isinstance(m, Monomial):
        return m
    return Monomial(int(m))


class ZSeries:
    """Truncated series in z over XLaurent coefficients.

    ``terms`` maps z-exponents in ``[-lneg, lpos]`` to coefficients; absent
    exponents are exact zeros.  ``frac_exp`` is a symbolic prefactor
    z^frac_exp that is carried along but never expanded.
    """

    def __init__(self, terms: dict, lpos: int, lneg: int = 0, frac_exp=Fraction(0)):
        self.terms = {j: c for j, c in terms.items() if -lneg <= j <= lpos and not (c.is_zero and c.is_exact)}
        self.lpos = lpos
        self.lneg = lneg
        self.frac_exp = Fraction(frac_exp)

    @classmethod
    def from_list(cls, coeffs, lneg: int = 0, frac_exp=Fraction(0)) -> ZSeries:
        coeffs = [XLaurent.coerce(c) for c in coeffs]
        return cls({j - lneg: c for j, c in enumerate(coeffs)}, len(coeffs) - 1 - lneg, lneg, frac_exp)

    @classmethod
    def one(cls, lpos: int) -> ZSeries:
        return cls({0: ONE}, lpos)

    @classmethod
    def linear(cls, a: XLaurent, lpos: int) -> ZSeries:
        """1 - a z."""
        return cls({0: ONE, 1: -a}, lpos)

    def coeff(self, j: int) -> XLaurent:
        if j > self.lpos or j < -self.lneg:
            raise IndexError(f"z^{j} outside the truncation range [-{self.lneg}, {self.lpos}]")
        return self.terms.get(j, ZERO)

    def __getitem__(self, j):
        return self.coeff(j)

    def coefficients(self) -> list:
        return [self.coeff(j) for j in range(-self.lneg, self.lpos + 1)]

    @property
    def xprec(self):
        precs = [c.prec for c in self.terms.values() if c.prec is not None]
        return min(precs) if precs else None

    def truncate_x(self, prec: int) -> ZSeries:
        return ZSeries({j: c.truncate(prec) for j, c in self.terms.items()}, self.lpos, self.lneg, self.frac_exp)

    def truncate_z(self, lpos: int) -> ZSeries:
        return ZSeries(self.terms, min(lpos, self.lpos), self.lneg, self.frac_exp)

    def _check_compatible(self, other: ZSeries):
        if self.frac_exp != other.frac_exp:
            raise ValueError("fractional prefactors differ")

    def __add__(self, other: ZSeries) -> ZSeries:
        self._check_compatible(other)
        lpos, lneg = min(self.lpos, other.lpos), min(self.lneg, other.lneg)
        keys = set(self.terms) | set(other.terms)
        return ZSeries({j: self.coeff(j) + other.coeff(j) for j in keys if -lneg <= j <= lpos}, lpos, lneg, self.frac_exp)

    def __neg__(self) -> ZSeries:
        return ZSeries({j: -c for j, c in self.terms.items()}, self.lpos, self.lneg, self.frac_exp)

    def __sub__(self, other: ZSeries) -> ZSeries:
        return self + (-other)

    def scale(self, a) -> ZSeries:
        a = XLaurent.coerce(a)
        return ZSeries({j: a * c for j, c in self.terms.items()}, self.lpos, self.lneg, self.frac_exp)

    def __mul__(self, other) -> ZSeries:
        if not isinstance(other, ZSeries):
            return self.scale(other)
        if self.lneg or other.lneg:
            raise ValueError("products of bilateral series are not defined formally")
        lpos = min(self.lpos, other.lpos)
        out = {}
        for i, a in self.terms.items():
            for j, b in other.terms.items():
                if i + j <= lpos:
                    t = a * b
                    out[i + j] = out[i + j] + t if i + j in out else t
        return ZSeries(out, lpos, 0, self.frac_exp + other.frac_exp)

    def inv(self) -> ZSeries:
        """Inverse of a power series whose z^0 coefficient is invertible."""
        if self.lneg:
            raise ValueError("inverse of a bilateral series")
        a0 = self.coeff(0)
        a0inv = ONE if a0 == ONE else a0.inv()
        out = {0: a0inv}
        items = sorted(self.terms.items())
        for j in range(1, self.lpos + 1):
            acc = None
            for i, a in items:
                if i == 0:
                    continue
                if i > j:
                    break
                b = out.get(j - i)
                if b is None or (b.is_zero and b.is_exact):
                    continue
                t = a * b
                acc = t if acc is None else acc + t
            if acc is not None:
                out[j] = -(acc if a0inv == ONE else acc * a0inv)
        return ZSeries(out, self.lpos, 0, -self.frac_exp)

    def subs_scale(self, c: Monomial) -> ZSeries:
        """z -> c z."""
        c = _mono(c)
        return ZSeries(
            {j: (c**j).as_xl() * a if j >= 0 else (Monomial(-c.exp * j, 1 / Fraction(c.coef) ** j)).as_xl() * a
             for j, a in self.terms.items()},
            self.lpos, self.lneg, self.frac_exp,
        )

    def zero_through(self, hi: int) -> bool:
        return all(c.zero_through(hi) for c in self.terms.values())

    def __eq__(self, other):
        if not isinstance(other, ZSeries):
            return NotImplemented
        return (
            self.lpos == other.lpos and self.lneg == other.lneg and self.frac_exp == other.frac_exp
            and all(self.coeff(j) == other.coeff(j) for j in range(-self.lneg, self.lpos + 1))
        )

    def __repr__(self):
        body = ", ".join(f"z^{j}: {c}" for j, c in sorted(self.terms.items()))
        pre = f"z^({self.frac_exp}) * " if self.frac_exp else ""
        return f"ZSeries({pre}{{{body}}}, lpos={self.lpos}, lneg={self.lneg})"


def _auto(build, prec: int, slack: int = 8, max_rounds: int = 12):
    """Run ``build(work_prec)`` until its result is reliable below x^prec."""
    work = prec + slack
    for _ in range(max_rounds):
        out = build(work)
        got = out.xprec
        if got is None or got >= prec:
            return out.truncate_x(prec)
        work += (prec - got) + slack
    raise PrecisionError(f"could not reach x-precision {prec}")


# --------------------------------------------------------------------------
# Pochhammer products


def _factor_list(c: Monomial, bases, e_cut: int):
    """All factors c*p1^n1*...*pk^nk with exponent below e_cut, sorted by exponent."""
    out = []

    def rec(i, exp, coef):
        if exp >= e_cut:
            return
        if i == len(bases):
            out.append((exp, coef))
            return
        b = bases[i]
        while exp < e_cut:
            rec(i + 1, exp, coef)
            exp += b.exp
            coef *= b.coef

    rec(0, c.exp, Fraction(c.coef))
    out.sort(key=lambda t: t[0])
    return out


def _qpoch_raw(c: Monomial, bases, lpos: int, prec: int) -> ZSeries:
    dmin = min(c.exp, 0)
    e_cut = prec - (lpos - 1) * dmin if lpos >= 1 else c.exp
    factors = _factor_list(c, bases, e_cut) if lpos >= 1 else []
    lo = lpos * dmin
    store_hi = prec - lpos * dmin
    width = store_hi - lo
    shifts = [e for e, _ in factors]
    coefs = [f for _, f in factors]
    integral = all(f.denominator == 1 for f in coefs)
    S = None
    if integral and width > 0:
        S = np.zeros((lpos + 1, width), dtype=np.int64)
        S[0, -lo] = 1
        ok = _kernels.poch_expand(S, shifts, [int(f) for f in coefs])
        if not ok:
            S = None
    if S is None:
        S = np.empty((lpos + 1, max(width, 1)), dtype=object)
        S[:] = 0
        S[0, -lo] = 1
        for e, f in zip(shifts, coefs):
            f = f.numerator if f.denominator == 1 else f
            for j in range(lpos, 0, -1):
                if e >= 0:
                    if e < width:
                        S[j, e:] = S[j, e:] - f * S[j - 1, : width - e]
                elif -e < width:
                    S[j, : width + e] = S[j, : width + e] - f * S[j - 1, -e:]
    return ZSeries({j: XLaurent(S[j], lo, prec) for j in range(lpos + 1)}, lpos)


def qpoch(c, bases, lpos: int, prec: int = DEFAULT_PREC) -> ZSeries:
    """Expansion of (c z; p_1, ..., p_k)_inf in z through z^lpos.

    ``c`` and the bases are monomials in x (or bare integer exponents).  Every
    base must have positive x-degree.  Factors whose contribution provably
    lies at or above x^prec are skipped.
    """
    c = _mono(c)
    bases = [_mono(b) for b in bases]
    for b in bases:
        if b.exp <= 0:
            raise DivergentProductError(f"base x^{b.exp} has nonpositive degree")
    return _qpoch_raw(c, bases, lpos, prec)


def geometric(a: Monomial, lpos: int) -> ZSeries:
    """1/(1 - a z) = sum a^j z^j, exact."""
    a = _mono(a)
    return ZSeries({j: (a**j).as_xl() for j in range(lpos + 1)}, lpos)


# --------------------------------------------------------------------------
# structure function, eta family, rho


@lru_cache(maxsize=256)
def f_series(r: int, lpos: int, prec: int = DEFAULT_PREC) -> ZSeries:
    """Structure function f(z) of the deformed Virasoro algebra, through z^lpos."""
    if r < 2:
        raise ValueError("r must be >= 2")

    def build(work):
        num = qpoch(2 * r, [4], lpos, work) * qpoch(2 - 2 * r, [4], lpos, work)
        den = qpoch(2 * r + 2, [4], lpos, work) * qpoch(4 - 2 * r, [4], lpos, work)
        return geometric(0, lpos) * num * den.inv()

    return _auto(build, prec)


def pstar_exp(r: int) -> int:
    return 2 * (r - 1)


def brace(r: int, c, lpos: int, prec: int) -> ZSeries:
    """{c z} = (c z; x^4, p*)_inf with p* = x^(2r-2)."""
    return qpoch(c, [4, pstar_exp(r)], lpos, prec)


def eta_closed(r: int, lpos: int, prec: int = DEFAULT_PREC, c=0) -> ZSeries:
    """eta(c z) from the closed form {x^2 w}{p* x^2 w} / ({w}{p* x^4 w}), w = c z."""
    c = _mono(c)
    ps = pstar_exp(r)

    def build(work):
        num = brace(r, c * Monomial(2), lpos, work) * brace(r, c * Monomial(ps + 2), lpos, work)
        den = brace(r, c, lpos, work) * brace(r, c * Monomial(ps + 4), lpos, work)
        return num * den.inv()

    return _auto(build, prec)


@dataclass
class EtaFamily:
    eta_I: ZSeries
    eta_II: ZSeries
    eta: ZSeries
    eta_closed: ZSeries

    def consistent(self, hi: int) -> bool:
        return (self.eta - self.eta_closed).zero_through(hi)


def eta_family(r: int, lpos: int, prec: int = DEFAULT_PREC) -> EtaFamily:
    ps = pstar_exp(r)

    def build_I(work):
        num = brace(r, ps + 2, lpos, work)
        return num * num * (brace(r, ps + 4, lpos, work) * brace(r, ps, lpos, work)).inv()

    def build_II(work):
        return qpoch(2, [4], lpos, work) * qpoch(0, [4], lpos, work).inv()

    eta_I = _auto(build_I, prec)
    eta_II = _auto(build_II, prec)
    eta = _auto(lambda work: _auto(build_I, work) * _auto(build_II, work), prec)
    return EtaFamily(eta_I, eta_II, eta, eta_closed(r, lpos, prec))


@dataclass
class RhoSeries:
    """z^frac_exp * pos(z) * neg(1/z), kept factored.

    ``pos`` is eta(z) as a power series in z and ``neg`` is 1/eta(w) as a
    power series in w = 1/z.  The bilateral expansion is only available as a
    truncated convolution (see ``bilateral``).
    """

    frac_exp: Fraction
    pos: ZSeries
    neg: ZSeries

    def mirror(self) -> RhoSeries:
        """Series part with z -> 1/z; the prefactor is kept as is."""
        return RhoSeries(self.frac_exp, self.neg, self.pos)

    def __mul__(self, other: RhoSeries) -> RhoSeries:
        return RhoSeries(self.frac_exp + other.frac_exp, self.pos * other.pos, self.neg * other.neg)

    def bilateral(self) -> ZSeries:
        """Coefficients of z^k, -lneg <= k <= lpos, from the retained terms only."""
        lpos, lneg = self.pos.lpos, self.neg.lpos
        out = {}
        for k in range(-lneg, lpos + 1):
            acc = ZERO
            for j in range(0, lneg + 1):
                i = k + j
                if 0 <= i <= lpos:
                    acc = acc + self.pos.coeff(i) * self.neg.coeff(j)
            out[k] = acc
        return ZSeries(out, lpos, lneg, self.frac_exp)


def rho_series(r: int, lpos: int, lneg: int, prec: int = DEFAULT_PREC) -> RhoSeries:
    eta = eta_closed(r, max(lpos, lneg), prec)
    return RhoSeries(Fraction(r, 2 * r - 2), eta.truncate_z(lpos), eta.truncate_z(lneg).inv())


# --------------------------------------------------------------------------
# scalar products


def _xpoch(c: Monomial, p: Monomial, prec: int) -> XLaurent:
    """(c; p)_inf as an x-series (z set to 1)."""
    if p.exp <= 0:
        raise DivergentProductError("theta base must have positive degree")
    factors = []
    exp, coef, neg = c.exp, Fraction(c.coef), 0
    while exp < 0:
        factors.append((exp, coef))
        neg += exp
        exp, coef = exp + p.exp, coef * p.coef
    bound = prec - neg
    while exp < bound:
        factors.append((exp, coef))
        exp, coef = exp + p.exp, coef * p.coef
    out = ONE.truncate(bound)
    for e, f in factors:
        if e == 0 and f == 1:
            return ZERO
        out = (out * (ONE - XLaurent.monomial(e, f))).truncate(bound)
    return out


def theta(c, p, prec: int = DEFAULT_PREC) -> XLaurent:
    """Theta_p(c) = (p;p)_inf (c;p)_inf (p/c;p)_inf truncated below x^prec."""
    c, p = _mono(c), _mono(p)
    neg = -min(c.exp, (p / c).exp, 0)
    work = prec + 2 * neg
    a = _xpoch(p, p, work)
    b = _xpoch(c, p, work)
    d = _xpoch(p / c, p, work)
    if (b.is_zero and b.is_exact) or (d.is_zero and d.is_exact):
        return ZERO
    return (a * b * d).require(prec - 1).truncate(prec)


def central_const(r: int) -> XLaurent:
    """(x^(r-1) - x^(1-r)) (x^r - x^-r) / (x - 1/x), an exact Laurent polynomial."""
    if r < 2:
        raise ValueError("r must be >= 2")
    m = XLaurent.monomial
    num = (m(r - 1) - m(1 - r)) * (m(r) - m(-r))
    return xl_divexact(num, m(1) - m(-1))


def conformal_weight(l: int, k: int) -> Fraction:
    if not 1 <= l <= k + 2:
        raise ValueError("need 1 <= l <= k+2")
    return Fraction(l * l - 1, 4 * (k + 2))


# --------------------------------------------------------------------------
# identities (residuals must vanish)


def identity_213(r: int, lpos: int, prec: int = DEFAULT_PREC, f: ZSeries | None = None) -> ZSeries:
    """LHS - RHS of the eta-quotient form of the structure function."""
    ps = pstar_exp(r)

    def build(work):
        ff = f if f is not None else f_series(r, lpos, work)
        lhs = eta_closed(r, lpos, work, ps - 2) * eta_closed(r, lpos, work, 2 - ps)
        lhs = lhs * (eta_closed(r, lpos, work, -2) * eta_closed(r, lpos, work, 2)).inv()
        rhs = ZSeries.linear(XLaurent.monomial(-2), lpos) * ZSeries.linear(XLaurent.monomial(2), lpos)
        rhs = rhs * geometric(-ps, lpos) * geometric(ps, lpos) * ff
        return lhs - rhs

    if f is not None:
        out = build(prec + 16)
        return out.truncate_x(min(prec, out.xprec or prec))
    return _auto(build, prec)


def identity_eta_product(r: int, lpos: int, prec: int = DEFAULT_PREC, eta: ZSeries | None = None) -> ZSeries:
    """eta(z) eta(x^2 z) - (p* x^2 z; p*)_inf / (z; p*)_inf."""
    ps = pstar_exp(r)

    def build(work):
        e = eta if eta is not None else eta_closed(r, lpos, work)
        lhs = e * e.subs_scale(Monomial(2))
        rhs = qpoch(ps + 2, [ps], lpos, work) * qpoch(0, [ps], lpos, work).inv()
        return lhs - rhs

    if eta is not None:
        out = build(prec + 16)
        return out.truncate_x(min(prec, out.xprec or prec))
    return _auto(build, prec)
