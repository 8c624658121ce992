"""Coefficient rings: truncated Laurent series in x and a float backend.

``XLaurent`` is the exact ring every higher module works over.  A value is
``x^val * (c_0 + c_1 x + ...) + O(x^prec)``; ``prec=None`` marks an exact
Laurent polynomial.  Precision follows the usual valuation rules, so a
result never claims more reliable coefficients than its inputs justify.

``XFloat`` is an arbitrary-precision float with a certified absolute error
bound, produced by evaluating an ``XLaurent`` at a rational point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import mpmath
import numpy as np

from . import _kernels

__all__ = [
    "PrecisionError",
    "NotInvertibleError",
    "XLaurent",
    "XFloat",
    "Window",
    "Params",
    "Monomial",
    "X",
    "ONE",
    "ZERO",
    "xl_add",
    "xl_mul",
    "xl_inv",
    "xl_divexact",
    "xl_eval_float",
    "parse_rational",
]


class PrecisionError(ArithmeticError):
    """A value is not reliable on the exponent range that was asked for."""


class NotInvertibleError(ArithmeticError):
    pass


def parse_rational(value) -> Fraction:
    """Accept ints, Fractions, and strings such as ``"1/2"`` or ``"-3"``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    raise TypeError(f"not a rational: {value!r}")


def _clean_scalar(v):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _as_array(values) -> np.ndarray:
    """int64 when every entry is a small integer, object dtype otherwise."""
    if isinstance(values, np.ndarray) and values.dtype == np.int64:
        return values
    vals = [_clean_scalar(v) for v in values]
    if all(isinstance(v, int) and -_kernels.INT_LIMIT < v < _kernels.INT_LIMIT for v in vals):
        return np.array(vals, dtype=np.int64)
    out = np.empty(len(vals), dtype=object)
    out[:] = vals
    return out


def _to_object(a: np.ndarray) -> np.ndarray:
    if a.dtype == object:
        return a
    out = np.empty(len(a), dtype=object)
    out[:] = [int(v) for v in a]
    return out


def _min_prec(*ps):
    known = [p for p in ps if p is not None]
    return min(known) if known else None


class XLaurent:
    """Truncated Laurent series in x with exact rational coefficients.

    Immutable.  ``coeffs[j]`` is the coefficient of ``x^(val+j)``; the value
    is certified for every exponent below ``prec`` (all exponents when
    ``prec`` is None).  Stored coefficients are normalized: the first one is
    nonzero and nothing is kept at or above ``prec``.
    """

    __slots__ = ("val", "coeffs", "prec")

    def __init__(self, coeffs=(), val: int = 0, prec: int | None = None):
        arr = _as_array(coeffs)
        nz = np.flatnonzero(arr != 0) if len(arr) else np.zeros(0, dtype=np.int64)
        if len(nz) == 0:
            arr = arr[:0]
            val = 0 if prec is None else prec
        else:
            first, last = int(nz[0]), int(nz[-1])
            arr = arr[first : last + 1]
            val = val + first
            if prec is not None:
                keep = prec - val
                if keep <= 0:
                    arr = arr[:0]
                    val = prec
                else:
                    arr = arr[:keep]
                    nz = np.flatnonzero(arr != 0)
                    arr = arr[: int(nz[-1]) + 1] if len(nz) else arr[:0]
                    if len(arr) == 0:
                        val = prec
        self.val = int(val)
        self.coeffs = arr
        self.prec = None if prec is None else int(prec)

    # ---- constructors -----------------------------------------------------

    @classmethod
    def monomial(cls, exp: int, coef=1) -> XLaurent:
        return cls([coef], val=exp)

    @classmethod
    def from_dict(cls, terms: dict, prec: int | None = None) -> XLaurent:
        terms = {int(e): c for e, c in terms.items() if c != 0}
        if not terms:
            return cls((), prec=prec)
        lo, hi = min(terms), max(terms)
        vals = [0] * (hi - lo + 1)
        for e, c in terms.items():
            vals[e - lo] = c
        return cls(vals, val=lo, prec=prec)

    @classmethod
    def coerce(cls, value) -> XLaurent:
        if isinstance(value, XLaurent):
            return value
        return cls([parse_rational(value)])

    # ---- basic properties -------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.prec is None

    @property
    def is_zero(self) -> bool:
        """True when no nonzero coefficient is stored (exact zero or O(x^prec))."""
        return len(self.coeffs) == 0

    @property
    def valuation(self):
        if len(self.coeffs):
            return self.val
        return math.inf if self.prec is None else self.prec

    @property
    def min_exp(self) -> int:
        return self.val

    @property
    def max_exp(self):
        return self.val + len(self.coeffs) - 1 if len(self.coeffs) else None

    @property
    def reliable_lo(self):
        return -math.inf

    @property
    def reliable_hi(self):
        return math.inf if self.prec is None else self.prec - 1

    def coeff(self, exp: int):
        if self.prec is not None and exp >= self.prec:
            raise PrecisionError(f"x^{exp} is beyond the reliable window (< {self.prec})")
        j = exp - self.val
        if 0 <= j < len(self.coeffs):
            return _clean_scalar(self.coeffs[j])
        return 0

    def window(self, lo: int, hi: int) -> list:
        """Coefficients of x^lo .. x^hi; raises if hi is not reliable."""
        if self.prec is not None and hi >= self.prec:
            raise PrecisionError(f"window [{lo}, {hi}] exceeds reliable range (< {self.prec})")
        return [self.coeff(e) for e in range(lo, hi + 1)]

    def terms(self) -> dict:
        return {self.val + j: _clean_scalar(c) for j, c in enumerate(self.coeffs) if c != 0}

    def require(self, hi: int) -> XLaurent:
        if self.prec is not None and self.prec <= hi:
            raise PrecisionError(f"value reliable only below x^{self.prec}, need through x^{hi}")
        return self

    def zero_through(self, hi: int) -> bool:
        """Certified vanishing of every coefficient of exponent <= hi."""
        if self.prec is not None and self.prec <= hi:
            raise PrecisionError(f"cannot certify through x^{hi}: reliable only below x^{self.prec}")
        return self.is_zero or self.val > hi

    def truncate(self, prec: int) -> XLaurent:
        new = prec if self.prec is None else min(prec, self.prec)
        return XLaurent(self.coeffs, self.val, new)

    def agrees_with(self, other: XLaurent, hi: int) -> bool:
        """Same coefficients for every exponent <= hi (both must be reliable there)."""
        return (self - other).zero_through(hi)

    # ---- arithmetic -------------------------------------------------------

    def __neg__(self):
        return XLaurent(-self.coeffs, self.val, self.prec)

    def __add__(self, other):
        if not isinstance(other, XLaurent):
            other = XLaurent.coerce(other)
        prec = _min_prec(self.prec, other.prec)
        if other.is_zero:
            return XLaurent(self.coeffs, self.val, prec)
        if self.is_zero:
            return XLaurent(other.coeffs, other.val, prec)
        lo = min(self.val, other.val)
        hi = max(self.val + len(self.coeffs), other.val + len(other.coeffs))
        if prec is not None:
            hi = min(hi, prec)
        if hi <= lo:
            return XLaurent((), prec=prec)
        a, b = self.coeffs, other.coeffs
        dtype = object if (a.dtype == object or b.dtype == object) else np.int64
        if dtype == np.int64:
            if np.abs(a).max() >= _kernels.INT_LIMIT // 2 or np.abs(b).max() >= _kernels.INT_LIMIT // 2:
                dtype = object
        out = np.zeros(hi - lo, dtype=np.int64) if dtype == np.int64 else np.array([0] * (hi - lo), dtype=object)
        sa = a if dtype == np.int64 else _to_object(a)
        sb = b if dtype == np.int64 else _to_object(b)
        ia, ib = self.val - lo, other.val - lo
        na, nb = min(len(a), hi - self.val), min(len(b), hi - other.val)
        if na > 0:
            out[ia : ia + na] += sa[:na]
        if nb > 0:
            out[ib : ib + nb] += sb[:nb]
        return XLaurent(out, lo, prec)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, XLaurent):
            other = XLaurent.coerce(other)
        return self + (-other)

    def __rsub__(self, other):
        return XLaurent.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, XLaurent):
            s = _clean_scalar(parse_rational(other))
            if s == 0:
                return XLaurent((), prec=self.prec)
            if isinstance(s, int) and self.coeffs.dtype == np.int64 and len(self.coeffs) and (
                abs(s) * int(np.abs(self.coeffs).max()) < _kernels.INT_LIMIT
            ):
                return XLaurent(self.coeffs * s, self.val, self.prec)
            return XLaurent(_to_object(self.coeffs) * s, self.val, self.prec)
        # exact zero is absorbing
        if (self.is_zero and self.prec is None) or (other.is_zero and other.prec is None):
            return XLaurent()
        va, vb = self.valuation, other.valuation
        cands = []
        if self.prec is not None:
            cands.append(self.prec + vb)
        if other.prec is not None:
            cands.append(other.prec + va)
        prec = min(cands) if cands else None
        if self.is_zero or other.is_zero:
            return XLaurent((), prec=prec)
        val = self.val + other.val
        n = len(self.coeffs) + len(other.coeffs) - 1
        if prec is not None:
            n = min(n, prec - val)
        if n <= 0:
            return XLaurent((), prec=prec)
        return XLaurent(_conv(self.coeffs, other.coeffs, n), val, prec)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("use inv() for negative powers")
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, k: int) -> XLaurent:
        """Multiply by x^k."""
        return XLaurent(self.coeffs, self.val + k, None if self.prec is None else self.prec + k)

    def inv(self, prec: int | None = None) -> XLaurent:
        """Multiplicative inverse.

        For a truncated value the relative precision carries over.  For an
        exact non-monomial the caller must say where to stop (``prec``).
        """
        if self.is_zero:
            raise NotInvertibleError("zero (or unknown) leading coefficient")
        v = self.val
        if self.prec is None and len(self.coeffs) == 1:
            c = Fraction(1) / parse_rational(_clean_scalar(self.coeffs[0]))
            return XLaurent([c], -v)
        cands = []
        if self.prec is not None:
            cands.append(self.prec - 2 * v)
        if prec is not None:
            cands.append(prec)
        if not cands:
            raise PrecisionError("inverse of an exact series needs a precision")
        rprec = min(cands)
        n = rprec + v
        if n <= 0:
            return XLaurent((), prec=rprec)
        return XLaurent(_inv(self.coeffs, n), -v, rprec)

    def __truediv__(self, other):
        if isinstance(other, XLaurent):
            return self * other.inv()
        s = parse_rational(other)
        if s == 0:
            raise ZeroDivisionError
        return self * (1 / s)

    # ---- comparison / display --------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, XLaurent):
            try:
                other = XLaurent.coerce(other)
            except TypeError:
                return NotImplemented
        return (
            self.prec == other.prec
            and self.val == other.val
            and len(self.coeffs) == len(other.coeffs)
            and all(_clean_scalar(a) == _clean_scalar(b) for a, b in zip(self.coeffs, other.coeffs))
        )

    def __hash__(self):
        return hash((self.val, self.prec, tuple(_clean_scalar(c) for c in self.coeffs)))

    def __repr__(self):
        return f"XLaurent({self})"

    def __str__(self):
        parts = []
        for e, c in self.terms().items():
            mono = "" if e == 0 else ("x" if e == 1 else f"x^{e}")
            if mono and c == 1:
                s = mono
            elif mono and c == -1:
                s = "-" + mono
            else:
                s = str(c) + ("*" + mono if mono else "")
            parts.append(s)
        body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        if self.prec is not None:
            body += f" + O(x^{self.prec})"
        return body

    def to_json(self) -> dict:
        return {
            "val": self.val,
            "coeffs": [str(_clean_scalar(c)) for c in self.coeffs],
            "prec": self.prec,
        }

    @classmethod
    def from_json(cls, data: dict) -> XLaurent:
        return cls([Fraction(c) for c in data["coeffs"]], data["val"], data["prec"])


def _conv(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    if a.dtype == np.int64 and b.dtype == np.int64:
        out = _kernels.conv_trunc(a, b, n)
        if out is not None:
            return out
    full = np.convolve(_to_object(a[:n]), _to_object(b[:n]))
    if len(full) < n:
        full = np.concatenate([full, np.array([0] * (n - len(full)), dtype=object)])
    return full[:n]


def _inv(a: np.ndarray, n: int) -> np.ndarray:
    a0 = _clean_scalar(a[0])
    if a.dtype == np.int64 and a0 in (1, -1):
        out = _kernels.series_inv(a, n)
        if out is not None:
            return out
    obj = [parse_rational(_clean_scalar(c)) for c in a]
    inv0 = 1 / obj[0]
    out = [Fraction(0)] * n
    out[0] = inv0
    for j in range(1, n):
        acc = Fraction(0)
        for i in range(1, min(j, len(obj) - 1) + 1):
            if obj[i]:
                acc += obj[i] * out[j - i]
        out[j] = -acc * inv0
    return np.array([_clean_scalar(v) for v in out], dtype=object)


ONE = XLaurent([1])
ZERO = XLaurent()
X = XLaurent.monomial(1)


def xl_add(a: XLaurent, b: XLaurent) -> XLaurent:
    return a + b


def xl_mul(a: XLaurent, b: XLaurent) -> XLaurent:
    return a * b


def xl_inv(a: XLaurent, prec: int | None = None) -> XLaurent:
    return a.inv(prec)


def xl_divexact(a: XLaurent, b: XLaurent) -> XLaurent:
    """Exact quotient of Laurent polynomials; raises if the division leaves a remainder."""
    if not (a.is_exact and b.is_exact):
        raise ValueError("exact division needs exact operands")
    if b.is_zero:
        raise ZeroDivisionError
    num = {e: Fraction(c) for e, c in a.terms().items()}
    den = b.terms()
    dlo, dhi = min(den), max(den)
    lead = Fraction(den[dhi])
    qmin = (min(num) - dlo) if num else 0
    quot = {}
    while num:
        shift = max(num) - dhi
        if shift < qmin:
            break
        q = num[max(num)] / lead
        quot[shift] = q
        for e, c in den.items():
            k = e + shift
            num[k] = num.get(k, 0) - q * c
            if num[k] == 0:
                del num[k]
    if num:
        raise ArithmeticError(f"division leaves remainder {XLaurent.from_dict(num)}")
    return XLaurent.from_dict(quot)


# --------------------------------------------------------------------------
# float backend


@lru_cache(maxsize=None)
def _ctx(prec: int) -> mpmath.ctx_mp.MPContext:
    ctx = mpmath.MPContext()
    ctx.prec = prec
    return ctx


@dataclass(frozen=True)
class XFloat:
    """Float value at a fixed numeric x, with a certified absolute error bound."""

    x0: Fraction
    value: mpmath.mpf
    err: mpmath.mpf
    prec: int = 128

    @property
    def ctx(self):
        return _ctx(self.prec)

    def _round(self, v):
        return abs(v) * self.ctx.mpf(2) ** (1 - self.prec)

    def _check(self, other):
        if not isinstance(other, XFloat):
            ctx = self.ctx
            v = ctx.mpf(parse_rational(other).numerator) / parse_rational(other).denominator
            other = XFloat(self.x0, v, self._round(v), self.prec)
        if other.x0 != self.x0:
            raise ValueError("XFloat values at different x0")
        return other

    def __add__(self, other):
        other = self._check(other)
        v = self.value + other.value
        return XFloat(self.x0, v, self.err + other.err + self._round(v), self.prec)

    __radd__ = __add__

    def __neg__(self):
        return XFloat(self.x0, -self.value, self.err, self.prec)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        v = self.value * other.value
        err = abs(self.value) * other.err + abs(other.value) * self.err + self.err * other.err
        return XFloat(self.x0, v, err + self._round(v), self.prec)

    __rmul__ = __mul__

    def brackets(self, exact) -> bool:
        ctx = self.ctx
        q = parse_rational(exact)
        return abs(self.value - ctx.mpf(q.numerator) / q.denominator) <= self.err

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return f"XFloat({mpmath.nstr(self.value, 20)} ± {mpmath.nstr(self.err, 3)} at x={self.x0})"


def xl_eval_float(a: XLaurent, x0, prec: int = 128, coeff_bound=None) -> XFloat:
    """Evaluate at x = x0 in (0, 1).

    The error bound covers rounding and the unknown tail.  The tail is bounded
    geometrically: coefficients beyond ``prec`` are assumed no larger than
    ``coeff_bound`` (default: the largest stored coefficient magnitude).
    """
    x0 = parse_rational(x0)
    if not 0 < x0 < 1:
        raise ValueError("x0 must lie in (0, 1)")
    ctx = _ctx(prec + 32)
    xv = ctx.mpf(x0.numerator) / x0.denominator
    acc = ctx.mpf(0)
    absacc = ctx.mpf(0)
    for c in reversed(list(a.coeffs)):
        c = parse_rational(_clean_scalar(c))
        cv = ctx.mpf(c.numerator) / c.denominator
        acc = acc * xv + cv
        absacc = absacc * xv + abs(cv)
    scale = xv ** a.val
    value = acc * scale
    n = len(a.coeffs) + 2
    err = absacc * scale * n * ctx.mpf(2) ** (2 - prec)
    if a.prec is not None:
        if coeff_bound is None:
            coeff_bound = max((abs(parse_rational(_clean_scalar(c))) for c in a.coeffs), default=1)
            coeff_bound = max(coeff_bound, 1)
        cb = parse_rational(coeff_bound)
        err += (ctx.mpf(cb.numerator) / cb.denominator) * xv ** a.prec / (1 - xv)
    out_ctx = _ctx(prec)
    return XFloat(x0, out_ctx.mpf(value), out_ctx.mpf(err), prec)


def float_monomial(x0, exp: int, prec: int = 128) -> XFloat:
    return xl_eval_float(XLaurent.monomial(exp), x0, prec)


# --------------------------------------------------------------------------
# parameters and windows


@dataclass(frozen=True)
class Window:
    """Exponent range [lo, hi] on which identities are asserted."""

    lo: int = -24
    hi: int = 24

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty window [{self.lo}, {self.hi}]")

    @property
    def prec(self) -> int:
        return self.hi + 1

    def widened(self, by: int) -> Window:
        return Window(self.lo - by, self.hi + by)

    @classmethod
    def parse(cls, text: str) -> Window:
        lo, _, hi = text.partition(":")
        return cls(int(lo), int(hi))

    @classmethod
    def default_for(cls, max_mode, hi: int = 24) -> Window:
        return cls(-(4 * math.ceil(max_mode) + 8), hi)

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


@dataclass(frozen=True)
class Params:
    r: int
    k: int = 1
    l: int = 1
    i: int = 0

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("r must be >= 2")
        if not 1 <= self.l <= self.k + 1:
            raise ValueError("need 1 <= l <= k+1")
        if self.i not in (0, 1):
            raise ValueError("i must be 0 or 1")

    @property
    def l_i(self) -> int:
        return self.l if self.i == 0 else self.r - 1 - self.l

    @property
    def pstar_exp(self) -> int:
        return 2 * (self.r - 1)

    @property
    def p_exp(self) -> int:
        return 2 * self.r


@dataclass(frozen=True)
class Monomial:
    """coef * x^exp with a rational coefficient."""

    exp: int
    coef: Fraction = Fraction(1)

    def __mul__(self, other: Monomial) -> Monomial:
        return Monomial(self.exp + other.exp, Fraction(self.coef) * other.coef)

    def __truediv__(self, other: Monomial) -> Monomial:
        return Monomial(self.exp - other.exp, Fraction(self.coef) / other.coef)

    def __pow__(self, k: int) -> Monomial:
        return Monomial(self.exp * k, Fraction(self.coef) ** k)

    def as_xl(self) -> XLaurent:
        return XLaurent.monomial(self.exp, self.coef)


def xmono(exp: int, coef=1) -> Monomial:
    return Monomial(exp, Fraction(coef))
