"""Deformed Virasoro currents built from the deformed fermions.

Two realizations:

* TRIG (r=4): T(z) = kappa psi(x^-2 z) psi(x^2 z) on a single NS or R space,
  kappa = (1 - x^6) / (x^2 (1 + x^2)).  In modes
  T_k = kappa * sum_m x^(4m-2k) :psi_m psi_{k-m}: + delta_{k,0} * eps,
  where the normal-ordering constant is summed in closed form:
  eps = kappa * (sum_{m>0} (x^{6m} + x^{2m}) + [R] 1).
* ELLIPTIC (r=2): T(zeta) = (x - 1/x) psi^NS(zeta^2) psi^R(zeta^2) on the
  graded product of an NS family and an R family.  Only half-integer modes
  T_s (coefficient of zeta^{-2s}) exist.

A ``Current`` keeps every mode factored as kappa * P_k + delta_{k,0} eps with
exact Laurent-polynomial matrices P_k ("bare" modes).  Only kappa and eps are
genuine series, so the verifier can postpone all truncated arithmetic to a
final scalar combination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .coeff import ONE, ZERO, X, XLaurent, parse_rational
from .fock import (
    NS,
    R,
    FockSpace,
    GradedOperator,
    ParityError,
    _act,
    default_contraction,
    identity,
    mode2,
    op_add,
    op_scale,
    sector_of,
)

TRIG, ELLIPTIC = "TRIG", "ELLIPTIC"
ANTICOMMUTING, COMMUTING = "anticommuting", "commuting"
SIGN_CONVENTIONS = (ANTICOMMUTING, COMMUTING)


def kappa_trig(prec: int) -> XLaurent:
    m = XLaurent.monomial
    return (ONE - m(6)) * (m(2) + m(4)).inv(prec)


def kappa_elliptic() -> XLaurent:
    return X - XLaurent.monomial(-1)


def normal_ordering_constant(sector: str, prec: int) -> XLaurent:
    """sum over positive modes m of x^{4m}(x^{2m} + x^{-2m}), as two geometric series."""
    m = XLaurent.monomial
    if sector == NS:
        return m(3) * (ONE - m(6)).inv(prec) + m(1) * (ONE - m(2)).inv(prec)
    return m(6) * (ONE - m(6)).inv(prec) + m(2) * (ONE - m(2)).inv(prec)


@dataclass(frozen=True)
class CurrentSpec:
    kind: str
    r: int
    sector: str | None = None
    sign: str | None = None
    kappa_shift: XLaurent | None = None

    def __post_init__(self):
        if self.kind == TRIG:
            if self.sector not in (NS, R):
                raise ValueError("TRIG current needs a sector")
        elif self.kind == ELLIPTIC:
            if self.sign not in SIGN_CONVENTIONS:
                raise ValueError(f"sign convention must be one of {SIGN_CONVENTIONS}")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def trig(cls, sector: str, r: int = 4, kappa_shift=None) -> CurrentSpec:
        return cls(TRIG, r, sector=sector_of(sector), kappa_shift=kappa_shift)

    @classmethod
    def elliptic(cls, sign: str = COMMUTING, r: int = 2, kappa_shift=None) -> CurrentSpec:
        return cls(ELLIPTIC, r, sign=sign, kappa_shift=kappa_shift)

    def kappa(self, prec: int) -> XLaurent:
        k = kappa_trig(prec) if self.kind == TRIG else kappa_elliptic()
        if self.kappa_shift is not None:
            k = k + self.kappa_shift
        return k

    @property
    def integer_modes(self) -> bool:
        return self.kind == TRIG


@dataclass(frozen=True)
class PairedState:
    ns: tuple
    r: tuple

    @property
    def level2(self) -> int:
        return sum(self.ns) + sum(self.r)

    @property
    def level(self) -> Fraction:
        return Fraction(self.level2, 2)

    def __str__(self):
        a = ",".join(str(Fraction(m, 2)) for m in self.ns)
        b = ",".join(str(Fraction(m, 2)) for m in self.r)
        return f"|{a}>_NS (x) |{b}>_R"


class PairedFockSpace:
    """NS-family and R-family occupations fused into one space graded by total level.

    With the anticommuting convention an R-family mode acting on a state picks
    up (-1)^(number of NS fermions), so the two families anticommute; with the
    commuting convention there is no such sign.
    """

    def __init__(self, cutoff, sign: str = COMMUTING):
        if sign not in SIGN_CONVENTIONS:
            raise ValueError(f"sign convention must be one of {SIGN_CONVENTIONS}")
        self.cutoff = parse_rational(cutoff)
        self.cutoff2 = int(self.cutoff * 2)
        self.sign = sign
        ns_space = FockSpace(NS, self.cutoff)
        r_space = FockSpace(R, self.cutoff)
        states = [
            PairedState(a.occupied, b.occupied)
            for a in ns_space.basis
            for b in r_space.basis
            if a.level2 + b.level2 <= self.cutoff2
        ]
        states.sort(key=lambda s: (s.level2, s.ns, s.r))
        self.basis = tuple(states)
        self.index = {s: i for i, s in enumerate(self.basis)}

    def __len__(self):
        return len(self.basis)

    def level2_of(self, idx: int) -> int:
        return self.basis[idx].level2

    def vacuum(self) -> int:
        return self.index[PairedState((), ())]

    def act(self, family: str, m2: int, idx: int, contraction=default_contraction):
        st = self.basis[idx]
        res = self.act_raw(family, m2, st)
        if res is None:
            return None
        sign, ann, new = res
        if new.level2 > self.cutoff2:
            return None
        coef = contraction(ann) if ann else ONE
        return (coef if sign > 0 else -coef), self.index[new]

    def act_raw(self, family: str, m2: int, st: PairedState):
        if family == NS:
            if m2 % 2 != 1:
                raise ParityError("NS-family modes are half-integers")
            res = _act(m2, st.ns)
            if res is None:
                return None
            sign, ann, occ = res
            return sign, ann, PairedState(occ, st.r)
        if m2 % 2 != 0:
            raise ParityError("R-family modes are integers")
        res = _act(m2, st.r)
        if res is None:
            return None
        sign, ann, occ = res
        if self.sign == ANTICOMMUTING and len(st.ns) % 2:
            sign = -sign
        return sign, ann, PairedState(st.ns, occ)

    def __eq__(self, other):
        return isinstance(other, PairedFockSpace) and (self.cutoff, self.sign) == (other.cutoff, other.sign)

    def __hash__(self):
        return hash((self.cutoff, self.sign))

    def __repr__(self):
        return f"PairedFockSpace(cutoff={self.cutoff}, sign={self.sign}, dim={len(self)})"


def _poly_add(acc: dict, row: int, value: XLaurent):
    acc[row] = acc[row] + value if row in acc else value


class Current:
    """Modes of a DVA current on a truncated space, kept in factored form."""

    def __init__(self, spec: CurrentSpec, space, contraction: Callable = default_contraction, cache=None):
        self.spec = spec
        self.space = space
        self.contraction = contraction
        self.cache = cache
        self._bare = {}
        self._mono = {}
        if spec.kind == TRIG:
            if not isinstance(space, FockSpace) or space.sector != spec.sector:
                raise ValueError("TRIG current needs a FockSpace of the matching sector")
        elif not isinstance(space, PairedFockSpace) or space.sign != spec.sign:
            raise ValueError("ELLIPTIC current needs a PairedFockSpace with the same sign convention")

    # ---- scalars ----------------------------------------------------------

    def kappa(self, prec: int) -> XLaurent:
        return self.spec.kappa(prec)

    def vacuum_shift(self, prec: int) -> XLaurent | None:
        """eps: the scalar added to T_0, known below x^prec (None for the elliptic current)."""
        if self.spec.kind != TRIG:
            return None
        work = prec + 4  # kappa has valuation -2
        const = normal_ordering_constant(self.space.sector, work)
        if self.space.sector == R:
            const = const + ONE
        return (self.kappa(work) * const).truncate(prec)

    # ---- bare modes -------------------------------------------------------

    def check_mode(self, k2: int):
        if self.spec.kind == TRIG and k2 % 2:
            raise ParityError("the trigonometric current has integer modes only")
        if self.spec.kind == ELLIPTIC and k2 % 2 == 0:
            raise ParityError("the elliptic current is odd in zeta: only half-integer modes exist")

    def bare(self, k) -> GradedOperator:
        """P_k as an exact operator (k is the ordinary, not doubled, mode)."""
        return self.bare2(mode2(k))

    def bare2(self, k2: int) -> GradedOperator:
        self.check_mode(k2)
        op = self._bare.get(k2)
        if op is None:
            if self.cache is not None:
                op = self.cache.get_or_build(self, k2, lambda: self._build(k2))
            else:
                op = self._build(k2)
            self._bare[k2] = op
        return op

    def _term(self, exp: int, anns: tuple) -> XLaurent:
        key = (exp, anns)
        v = self._mono.get(key)
        if v is None:
            v = XLaurent.monomial(exp)
            for a in anns:
                if a:
                    v = v * self.contraction(a)
            self._mono[key] = v
        return v

    def _build(self, k2: int) -> GradedOperator:
        if self.spec.kind == TRIG:
            return self._build_trig(k2)
        return self._build_elliptic(k2)

    def _build_trig(self, k2: int) -> GradedOperator:
        space = self.space
        rmode = space.sector == R
        span = space.cutoff2 + abs(k2) + 1
        parity = 1 if space.sector == NS else 0
        cols = {}
        for j, st in enumerate(space.basis):
            acc = {}
            for m in range(-span, span + 1):
                if m % 2 != parity:
                    continue
                n = k2 - m
                if rmode and m == 0 and n == 0:
                    continue  # psi_0 psi_0 = 1 lives in eps
                if m > 0 and n < 0:
                    first, second, sign = m, n, -1
                else:
                    first, second, sign = n, m, 1
                r1 = _act(first, st.occupied)
                if r1 is None:
                    continue
                r2 = _act(second, r1[2])
                if r2 is None:
                    continue
                occ = r2[2]
                if sum(occ) > space.cutoff2:
                    continue
                s = sign * r1[0] * r2[0]
                # coefficient x^{4m-2k} in doubled units
                t = self._term(2 * m - k2, (r1[1], r2[1]))
                i = space.index[type(st)(space.sector, occ)]
                _poly_add(acc, i, t if s > 0 else -t)
            cols[j] = acc
        return GradedOperator(space, space, -Fraction(k2, 2), cols)

    def _build_elliptic(self, k2: int) -> GradedOperator:
        space = self.space
        span = space.cutoff2 + abs(k2) + 1
        cols = {}
        for j, st in enumerate(space.basis):
            acc = {}
            for a in range(-span, span + 1):
                if a % 2 != 1:
                    continue
                b = k2 - a
                r1 = space.act_raw(R, b, st)
                if r1 is None:
                    continue
                r2 = space.act_raw(NS, a, r1[2])
                if r2 is None:
                    continue
                new = r2[2]
                if new.level2 > space.cutoff2:
                    continue
                s = r1[0] * r2[0]
                t = self._term(0, (r1[1], r2[1]))
                _poly_add(acc, space.index[new], t if s > 0 else -t)
            cols[j] = acc
        return GradedOperator(space, space, -Fraction(k2, 2), cols)

    # ---- full modes -------------------------------------------------------

    def mode(self, k, prec: int) -> GradedOperator:
        """T_k with series entries reliable below x^prec (up to valuation shifts)."""
        k2 = mode2(k)
        op = op_scale(self.bare2(k2), self.kappa(prec))
        eps = self.vacuum_shift(prec)
        if k2 == 0 and eps is not None:
            op = op_add(op, op_scale(identity(self.space), eps))
        return op


def trig_current(sector: str, cutoff, r: int = 4, **kw) -> Current:
    spec = CurrentSpec.trig(sector, r=r, kappa_shift=kw.pop("kappa_shift", None))
    return Current(spec, FockSpace(sector, cutoff), **kw)


def elliptic_current(cutoff, sign: str = COMMUTING, r: int = 2, **kw) -> Current:
    spec = CurrentSpec.elliptic(sign, r=r, kappa_shift=kw.pop("kappa_shift", None))
    return Current(spec, PairedFockSpace(cutoff, sign), **kw)


def t_mode(k, spec: CurrentSpec, space: FockSpace, prec: int = 25, **kw) -> GradedOperator:
    if spec.kind != TRIG:
        raise ValueError("t_mode builds the trigonometric current")
    return Current(spec, space, **kw).mode(k, prec)


def elliptic_t_mode(s, spec: CurrentSpec, space: PairedFockSpace, **kw) -> GradedOperator:
    if spec.kind != ELLIPTIC:
        raise ValueError("elliptic_t_mode builds the elliptic current")
    return Current(spec, space, **kw).mode(s, 0)
