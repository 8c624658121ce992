"""Mode-level checks of the deformed Virasoro exchange relation.

For modes m, n the relation reads

    sum_{l=0}^{L} f_l (T_{m-l} T_{n+l} - T_{n-l} T_{m+l}) = delta_{m+n,0} * RHS(m)

where RHS comes from a combination of formal delta functions.  The sum is
finite on a truncated space: once n+l and m+l both exceed the cutoff, the
lowering operators T_{n+l}, T_{m+l} kill every state, so L = cutoff - min(m,n)
loses nothing.

Each mode is kappa * P_k (+ eps on T_0) with P_k exact, so products are
tracked as exact Laurent polynomials tagged by the powers of kappa and eps
they carry.  The truncated series f_l, kappa, eps only enter in the final
scalar combination, at a working precision raised until every entry is
known through the top of the requested window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath

from .coeff import ONE, XLaurent, Window, _ctx, parse_rational, xl_eval_float
from .dva import ELLIPTIC, TRIG, Current
from .fock import FockSpace, ParityError, default_contraction, mode2, op_compose, operator_matrix
from .qseries import central_const, f_series

PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"

TRIG_DELTAS = ((1, 1, -2), (-1, 1, 2))
ELLIPTIC_DELTAS = ((1, -1, -1), (-1, 1, -1), (-1, -1, 1), (1, 1, 1))


class EmptySubspaceError(ValueError):
    """No state of the truncated space is reliable for the requested modes."""


def delta_combination(terms, j: int) -> XLaurent:
    """Coefficient of u^j in sum w * delta(s x^e u) for terms (w, s, e)."""
    out = XLaurent()
    for w, s, e in terms:
        out = out + XLaurent.monomial(e * j, w * s**j if j >= 0 else w * s ** (-j))
    return out


def rhs_coefficient(kind: str, r: int, m2: int) -> XLaurent:
    """Scalar multiplying the identity on the right-hand side when m + n = 0.

    ``m2`` is twice the first mode.  For the trigonometric relation the delta
    argument is z2/z1 and the exponent is m; for the elliptic relation it is
    zeta2/zeta1 and the exponent is 2m.
    """
    c = central_const(r)
    if kind == TRIG:
        return c * delta_combination(TRIG_DELTAS, m2 // 2)
    return c * delta_combination(ELLIPTIC_DELTAS, m2) / 2


def reliable_states(space, m2: int, n2: int, conservative: bool = False) -> list:
    """States on which both orderings are computed without touching the cutoff.

    Starting from level e, the intermediate states sit at e - n - l and
    e - m - l (l >= 0) and the result at e - m - n, so every state involved
    has level at most e + max(0, -m, -n, -m-n).  Keeping that below the
    cutoff makes the truncated computation exact.  ``conservative`` applies
    the stricter e + max(|m|,|n|) <= cutoff and e - (m+n) + max(|m|,|n|) <= cutoff.
    """
    lim = space.cutoff2
    if conservative:
        top = max(abs(m2), abs(n2))
        return [
            i
            for i, st in enumerate(space.basis)
            if st.level2 + top <= lim and st.level2 - (m2 + n2) + top <= lim
        ]
    rise = max(0, -m2, -n2, -m2 - n2)
    return [i for i, st in enumerate(space.basis) if st.level2 + rise <= lim]


def l_max(space, m2: int, n2: int) -> int:
    return max((space.cutoff2 - min(m2, n2)) // 2, 0)


@dataclass
class RelationReport:
    kind: str
    r: int
    m: str
    n: str
    cutoff: str
    window: Window
    l_max: int
    reliable_dim: int
    status: str
    backend: str = "exact"
    sector: str | None = None
    convention: str | None = None
    residual: str = "0"
    nonzero_entries: int = 0
    rhs: str = "0"
    delta_observed: str | None = None
    delta_matches: bool | None = None
    working_prec: int | None = None
    x0: str | None = None
    bits: int | None = None
    norm: str | None = None
    tol: str | None = None
    perturbation: str | None = None
    lhs: dict = field(default_factory=dict, repr=False)
    columns: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "r": self.r,
            "m": self.m,
            "n": self.n,
            "lambda": self.cutoff,
            "window": [self.window.lo, self.window.hi],
            "L": self.l_max,
            "reliable_dim": self.reliable_dim,
            "backend": self.backend,
            "status": self.status,
            "pass": self.passed,
            "residual": self.residual,
            "nonzero_entries": self.nonzero_entries,
            "rhs": self.rhs,
        }
        for key in ("sector", "convention", "delta_observed", "delta_matches", "working_prec",
                    "x0", "bits", "norm", "tol", "perturbation"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        return d


# --------------------------------------------------------------------------
# factored products


def _acc(out: dict, key, value: XLaurent):
    if key in out:
        value = out[key] + value
        if value.is_zero:
            del out[key]
            return
        out[key] = value
    elif not value.is_zero:
        out[key] = value


def _apply_mode(current: Current, k2: int, vec: dict) -> dict:
    """T_k on a factored vector {(row, i, j): poly} meaning sum kappa^i eps^j poly e_row."""
    out = {}
    if not vec:
        return out
    cols = current.bare2(k2).cols
    with_eps = k2 == 0 and current.spec.kind == TRIG
    for (row, i, j), poly in vec.items():
        col = cols.get(row)
        if col:
            for r2, c in col.items():
                _acc(out, (r2, i + 1, j), c * poly)
        if with_eps:
            _acc(out, (row, i, j + 1), poly)
    return out


def _lhs_parts(current: Current, m2: int, n2: int, L: int, cols: list) -> dict:
    """{(row, col, i, j): {l: poly}} for the bracket at each l."""
    parts = {}
    for v in cols:
        start = {(v, 0, 0): ONE}
        for l in range(L + 1):
            a = _apply_mode(current, m2 - 2 * l, _apply_mode(current, n2 + 2 * l, start))
            b = _apply_mode(current, n2 - 2 * l, _apply_mode(current, m2 + 2 * l, start))
            for (row, i, j), p in b.items():
                _acc(a, (row, i, j), -p)
            for (row, i, j), p in a.items():
                parts.setdefault((row, v, i, j), {})[l] = p
    return parts


def _f_coeffs(r: int, L: int, prec: int, f_shift: dict | None):
    f = f_series(r, max(L, 1), prec)
    coeffs = [f.coeff(l) for l in range(L + 1)]
    for l, s in (f_shift or {}).items():
        if l <= L:
            coeffs[l] = coeffs[l] + s
    return coeffs


def _combine_exact(current: Current, parts: dict, r: int, L: int, target: int, f_shift):
    """Entries of the left-hand side as series, each known through x^(target-1)."""
    work = target + 8
    for _ in range(16):
        f = _f_coeffs(r, L, work, f_shift)
        kappa = current.kappa(work)
        eps = current.vacuum_shift(work)
        powers = {}
        out = {}
        low = None
        for (row, col, i, j), by_l in parts.items():
            s = XLaurent()
            for l, p in by_l.items():
                s = s + f[l] * p
            key = (i, j)
            if key not in powers:
                powers[key] = (kappa**i) * (eps**j if j else ONE)
            term = powers[key] * s
            _acc_series(out, (row, col), term)
        for v in out.values():
            if v.prec is not None and (low is None or v.prec < low):
                low = v.prec
        if low is None or low >= target:
            return {k: v.truncate(target) for k, v in out.items()}, work
        work += target - low + 8
    raise ArithmeticError("working precision did not converge")


def _acc_series(out: dict, key, value: XLaurent):
    out[key] = out[key] + value if key in out else value


def _label(space, idx: int) -> str:
    return str(space.basis[idx])


# --------------------------------------------------------------------------
# exact and float residuals


def _relation(current: Current, m2: int, n2: int, window: Window, *, backend="exact", x0=None,
              bits: int = 128, tol="1e-25", f_shift=None, perturbation=None,
              conservative: bool = False) -> RelationReport:
    spec = current.spec
    space = current.space
    current.check_mode(m2)
    current.check_mode(n2)
    cols = reliable_states(space, m2, n2, conservative)
    L = l_max(space, m2, n2)
    rhs = rhs_coefficient(spec.kind, spec.r, m2) if m2 + n2 == 0 else XLaurent()
    report = RelationReport(
        kind=spec.kind,
        r=spec.r,
        m=str(Fraction(m2, 2)),
        n=str(Fraction(n2, 2)),
        cutoff=str(space.cutoff),
        window=window,
        l_max=L,
        reliable_dim=len(cols),
        status=SKIPPED,
        backend=backend,
        sector=getattr(space, "sector", None),
        convention=spec.sign,
        rhs=str(rhs),
        perturbation=perturbation,
    )
    if not cols:
        return report
    parts = _lhs_parts(current, m2, n2, L, cols)
    if backend == "exact":
        _finish_exact(report, current, parts, cols, rhs, L, window, f_shift, m2 + n2 == 0)
    elif backend == "float":
        _finish_float(report, current, parts, cols, rhs, L, x0, bits, tol, f_shift)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return report


def _finish_exact(report, current, parts, cols, rhs, L, window, f_shift, diagonal):
    space = current.space
    target = window.prec
    lhs, work = _combine_exact(current, parts, current.spec.r, L, target, f_shift)
    report.working_prec = work
    rhs_t = rhs.truncate(target)
    bad = []
    for v in cols:
        if not rhs.is_zero:
            lhs.setdefault((v, v), XLaurent(prec=target))
    for (row, col), val in lhs.items():
        res = val - rhs_t if row == col else val
        if not res.zero_through(window.hi):
            bad.append(res)
    report.lhs = {(_label(space, r), _label(space, c)): v for (r, c), v in lhs.items()}
    report.columns = [_label(space, v) for v in cols]
    report.nonzero_entries = len(bad)
    if bad:
        worst = min(bad, key=lambda x: x.valuation)
        report.residual = str(worst)
    if diagonal:
        v0 = cols[0]
        obs = lhs.get((v0, v0), XLaurent(prec=target))
        report.delta_observed = str(obs)
        report.delta_matches = obs.agrees_with(rhs_t, window.hi)
    report.status = FAIL if bad else PASS


def _float_series(a: XLaurent, x0, bits: int):
    return xl_eval_float(a, x0, bits)


def float_prec_for(x0, bits: int, extra: int = 64) -> int:
    """x-adic working precision making x0^prec negligible at ``bits`` bits."""
    x0 = parse_rational(x0)
    return int(math.ceil((bits + extra) / -math.log2(x0)))


def _finish_float(report, current, parts, cols, rhs, L, x0, bits, tol, f_shift):
    if x0 is None:
        raise ValueError("float backend needs x0")
    x0 = parse_rational(x0)
    ctx = _ctx(bits)
    work = float_prec_for(x0, bits)
    f = [_float_series(c, x0, bits) for c in _f_coeffs(current.spec.r, L, work, f_shift)]
    kappa = _float_series(current.kappa(work), x0, bits)
    eps = current.vacuum_shift(work)
    eps = _float_series(eps, x0, bits) if eps is not None else None
    rhs_f = xl_eval_float(rhs, x0, bits)
    vals = {}
    scale = {}
    for (row, col, i, j), by_l in parts.items():
        pre = None
        for base, k in ((kappa, i), (eps, j)):
            for _ in range(k):
                pre = base if pre is None else pre * base
        for l, p in by_l.items():
            t = pre * f[l] * xl_eval_float(p, x0, bits)
            key = (row, col)
            vals[key] = vals[key] + t if key in vals else t
            scale[key] = scale.get(key, ctx.mpf(0)) + abs(t.value)
    norm = ctx.mpf(0)
    errb = ctx.mpf(0)
    for v in cols:
        if not rhs.is_zero:
            key = (v, v)
            vals[key] = (vals[key] - rhs_f) if key in vals else -rhs_f
            scale[key] = scale.get(key, ctx.mpf(0)) + abs(rhs_f.value)
    for key, val in vals.items():
        s = max(scale[key], ctx.mpf(1))
        norm = max(norm, abs(val.value) / s)
        errb = max(errb, val.err / s)
    tolv = ctx.mpf(tol)
    report.working_prec = work
    report.x0 = str(x0)
    report.bits = bits
    report.norm = mpmath.nstr(norm, 6)
    report.tol = str(tol)
    report.residual = mpmath.nstr(norm, 6)
    report.status = PASS if norm <= tolv else FAIL


def dva_residual(m, n, current: Current, window: Window = Window(-24, 24), **kw) -> RelationReport:
    """Trigonometric relation for integer modes m, n (see module docstring)."""
    if current.spec.kind != TRIG:
        raise ValueError("dva_residual expects a trigonometric current")
    return _relation(current, mode2(m), mode2(n), window, **kw)


def elliptic_residual(m, n, current: Current, window: Window = Window(-24, 24), **kw) -> RelationReport:
    """Elliptic relation for half-integer modes m, n."""
    if current.spec.kind != ELLIPTIC:
        raise ValueError("elliptic_residual expects an elliptic current")
    m2, n2 = mode2(m), mode2(n)
    if m2 % 2 == 0 or n2 % 2 == 0:
        raise ParityError("elliptic modes are half-integers")
    return _relation(current, m2, n2, window, **kw)


# --------------------------------------------------------------------------
# vacuum eigenvalue


def vacuum_value(sector: str) -> XLaurent:
    """x^l + x^-l with l = 1 (NS) or 2 (R)."""
    l = 1 if sector == "NS" else 2
    return XLaurent.monomial(l) + XLaurent.monomial(-l)


def vacuum_residual(current: Current, window: Window = Window(-24, 24), *, backend="exact", x0=None,
                    bits: int = 128, tol="1e-25") -> dict:
    """T_0 on every level-0 state minus the expected eigenvalue."""
    if current.spec.kind != TRIG:
        raise ValueError("vacuum eigenvalues are defined for the trigonometric current")
    space = current.space
    expected = vacuum_value(space.sector)
    vacua = space.indices_at(0)
    out = {"sector": space.sector, "lambda": str(space.cutoff), "backend": backend,
           "expected": str(expected), "vacua": len(vacua)}
    if backend == "exact":
        target = window.prec
        work = target + 8
        while True:
            t0 = current.mode(0, work)
            vals = {(i, v): c for v in vacua for i, c in t0.cols.get(v, {}).items()}
            if all(c.prec is None or c.prec >= target for c in vals.values()):
                break
            work += 8
        values = {}
        ok = True
        for v in vacua:
            for i in range(len(space)):
                c = vals.get((i, v), XLaurent()).truncate(target)
                exp = expected.truncate(target) if i == v else XLaurent()
                if not (c - exp).zero_through(window.hi):
                    ok = False
                if i == v:
                    values[str(space.basis[v])] = c
        out["values"] = {k: str(v) for k, v in values.items()}
        out["exact_values"] = values
        out["window"] = [window.lo, window.hi]
        out["pass"] = ok
        return out
    x0 = parse_rational(x0)
    work = float_prec_for(x0, bits)
    t0 = current.mode(0, work)
    exp_f = xl_eval_float(expected, x0, bits)
    ctx = _ctx(bits)
    worst = ctx.mpf(0)
    values = {}
    for v in vacua:
        for i, c in t0.cols.get(v, {}).items():
            val = xl_eval_float(c, x0, bits)
            diff = val - exp_f if i == v else val
            worst = max(worst, abs(diff.value))
            if i == v:
                values[str(space.basis[v])] = mpmath.nstr(val.value, 30)
    out.update({"x0": str(x0), "bits": bits, "values": values, "norm": mpmath.nstr(worst, 6),
                "tol": str(tol), "pass": bool(worst <= ctx.mpf(tol))})
    return out


# --------------------------------------------------------------------------
# fermion algebra


@dataclass
class AnticommResult:
    m: str
    n: str
    band_dim: int
    anticommutator: bool
    antisymmetry: bool | None

    @property
    def passed(self) -> bool:
        return self.anticommutator and self.antisymmetry is not False


@dataclass
class AnticommReport:
    sector: str
    cutoff: str
    mmax: str
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "sector": self.sector,
            "lambda": self.cutoff,
            "mmax": self.mmax,
            "pass": self.passed,
            "checked": len(self.results),
            "failures": [f"({r.m},{r.n})" for r in self.results if not r.passed],
        }


def anticommutator_suite(space: FockSpace, mmax, contraction: Callable = default_contraction) -> AnticommReport:
    """Check psi_m psi_n + psi_n psi_m = delta_{m+n,0}(x^{2m} + x^{-2m}) for |m|, |n| <= mmax.

    The relation is evaluated state by state through the wedge calculus; for
    m + n != 0 the antisymmetry psi_m psi_n = -psi_n psi_m is re-checked with
    composed operator matrices.
    """
    top = mode2(mmax)
    if parse_rational(mmax) > space.cutoff:
        raise ValueError("mmax must not exceed the cutoff")
    start = 1 if space.sector == "NS" else 0
    modes = [k for k in range(-top, top + 1) if abs(k) % 2 == start]
    mats = {}
    results = []
    for i, a in enumerate(modes):
        for b in modes[i:]:
            lim = space.cutoff2 - max(0, -a, -b, -a - b)
            band = [j for j, st in enumerate(space.basis) if st.level2 <= lim]
            expect = default_contraction(abs(a)) if a + b == 0 and a else None
            if a + b == 0 and a == 0:
                expect = XLaurent([2])
            ok = True
            for j in band:
                acc = {}
                for x, y in ((a, b), (b, a)):
                    r1 = space.act(y, j, contraction)
                    if r1 is None:
                        continue
                    r2 = space.act(x, r1[1], contraction)
                    if r2 is None:
                        continue
                    _acc_series(acc, r2[1], r1[0] * r2[0])
                for row, val in acc.items():
                    want = expect if (expect is not None and row == j) else XLaurent()
                    if val != want:
                        ok = False
                if expect is not None and j not in acc:
                    ok = False
            anti = None
            if a + b != 0:
                for k in (a, b):
                    if k not in mats:
                        mats[k] = operator_matrix(Fraction(k, 2), space, contraction)
                ab = op_compose(mats[a], mats[b]).restrict_columns(band)
                ba = op_compose(mats[b], mats[a]).restrict_columns(band)
                anti = not (ab + ba).cols
            results.append(AnticommResult(str(Fraction(a, 2)), str(Fraction(b, 2)), len(band), ok, anti))
    return AnticommReport(space.sector, str(space.cutoff), str(parse_rational(mmax)), results)
