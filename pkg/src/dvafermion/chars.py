"""Graded dimensions, T_0 block spectra and highest-weight scans.

T_0 preserves the level, so its matrix splits into one block per level.
Eigenvalues are computed numerically at a rational x0 (they live in field
extensions in general); the exact backend is used for traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .coeff import XLaurent, _ctx, parse_rational, xl_eval_float
from .dva import trig_current
from .fock import NS, FockSpace, mode2, sector_of
from .verify import float_prec_for

SCAN_POINTS = (Fraction(3, 7), Fraction(5, 11), Fraction(2, 13))


def graded_dimension(sector: str, nmax) -> list:
    """[(level, dimension)] for every allowed level up to nmax, by enumerating states."""
    sector = sector_of(sector)
    space = FockSpace(sector, nmax)
    step = 1 if sector == NS else 2
    counts = {}
    for st in space.basis:
        counts[st.level2] = counts.get(st.level2, 0) + 1
    return [(Fraction(l2, 2), counts.get(l2, 0)) for l2 in range(0, space.cutoff2 + 1, step)]


def euler_product_dims(sector: str, nmax) -> list:
    """Same table from prod (1 + q^{j+1/2}) (NS) or 2 prod (1 + q^n) (R)."""
    sector = sector_of(sector)
    top = mode2(nmax)
    poly = np.zeros(top + 1, dtype=object)
    poly[0] = 1
    start = 1 if sector == NS else 2
    for e in range(start, top + 1, 2):
        shifted = np.zeros_like(poly)
        shifted[e:] = poly[: top + 1 - e]
        poly = poly + shifted
    if sector != NS:
        poly = poly * 2
    step = 1 if sector == NS else 2
    return [(Fraction(l2, 2), int(poly[l2])) for l2 in range(0, top + 1, step)]


@dataclass
class SpectrumReport:
    sector: str
    level: str
    x0: str
    bits: int
    dimension: int
    eigenvalues: list  # (value, error bar) as mpf
    multiplicities: list
    trace: mpmath.mpf
    trace_err: mpmath.mpf
    extras: dict = field(default_factory=dict)

    @property
    def trace_consistent(self) -> bool:
        ctx = _ctx(self.bits)
        pairs = list(zip(self.eigenvalues, self.multiplicities))
        total = sum((v * m for (v, _), m in pairs), ctx.mpf(0))
        slack = sum((e * m for (_, e), m in pairs), ctx.mpf(0)) + self.trace_err
        return abs(total - self.trace) <= slack

    def to_dict(self, digits: int = 25) -> dict:
        return {
            "sector": self.sector,
            "level": self.level,
            "x0": self.x0,
            "bits": self.bits,
            "dimension": self.dimension,
            "eigenvalues": [
                {"value": mpmath.nstr(v, digits), "err": mpmath.nstr(e, 3), "multiplicity": m}
                for (v, e), m in zip(self.eigenvalues, self.multiplicities)
            ],
            "trace": mpmath.nstr(self.trace, digits),
            "trace_consistent": self.trace_consistent,
        }


def t0_block_spectrum(sector: str, level, x0, prec: int = 128, cutoff=None) -> SpectrumReport:
    """Eigenvalues of T_0 on one level of the NS or R space at x = x0.

    Error bars combine the entry errors (scaled by the eigenvector condition
    number, Bauer-Fike) with the residual of each computed eigenpair.
    """
    sector = sector_of(sector)
    x0 = parse_rational(x0)
    lvl = parse_rational(level)
    cur = trig_current(sector, cutoff if cutoff is not None else lvl)
    space = cur.space
    idx = space.indices_at(lvl)
    if not idx:
        raise ValueError(f"no states at level {lvl} in the {sector} sector")
    work = float_prec_for(x0, prec)
    t0 = cur.mode(0, work)
    ctx = _ctx(prec)
    n = len(idx)
    A = ctx.matrix(n, n)
    E = ctx.matrix(n, n)
    trace = XLaurent()
    for b, j in enumerate(idx):
        col = t0.cols.get(j, {})
        for a, i in enumerate(idx):
            c = col.get(i)
            if c is None:
                continue
            v = xl_eval_float(c, x0, prec)
            A[a, b] = v.value
            E[a, b] = v.err
            if a == b:
                trace = trace + c
    tr = xl_eval_float(trace, x0, prec)
    vals, vecs = ctx.eig(A)
    vals = [ctx.re(v) if abs(ctx.im(v)) <= ctx.eps * max(1, abs(v)) * 16 else v for v in vals]
    cond = _condition(ctx, vecs)
    enorm = ctx.mnorm(E, 1)
    bars = []
    for k, lam in enumerate(vals):
        vk = vecs[:, k]
        res = ctx.norm(A * vk - lam * vk) / max(ctx.norm(vk), ctx.eps)
        bars.append(cond * enorm + res + ctx.eps * abs(lam) * 8)
    order = sorted(range(n), key=lambda k: (ctx.re(vals[k]), ctx.im(vals[k])))
    pairs = [(vals[k], bars[k]) for k in order]
    grouped, mult = [], []
    for v, e in pairs:
        if grouped and abs(v - grouped[-1][0]) <= e + grouped[-1][1]:
            mult[-1] += 1
            continue
        grouped.append((v, e))
        mult.append(1)
    return SpectrumReport(sector, str(lvl), str(x0), prec, n, grouped, mult, tr.value, tr.err)


def _condition(ctx, V):
    try:
        return ctx.mnorm(V, 1) * ctx.mnorm(ctx.inverse(V), 1)
    except ZeroDivisionError:
        return ctx.inf


def _rank_at(block: list, x0: Fraction) -> int:
    """Rank of a matrix of exact Laurent polynomials evaluated at a rational point."""
    rows = len(block)
    cols = len(block[0]) if rows else 0
    if rows == 0 or cols == 0:
        return 0
    data = [[QQ(*_eval_exact(c, x0)) for c in row] for row in block]
    return DomainMatrix(data, (rows, cols), QQ).rank()


def _eval_exact(c: XLaurent, x0: Fraction):
    v = Fraction(0)
    for e, a in c.terms().items():
        v += Fraction(a) * x0**e
    return v.numerator, v.denominator


def highest_weight_scan(sector: str, kmax: int, nmax, cutoff=None, points=SCAN_POINTS) -> list:
    """[(level, states, joint-kernel dimension of T_1 .. T_kmax)] up to level nmax.

    T_k = kappa P_k for k > 0, so the kernel is that of the exact matrices P_k.
    Their rank over Q(x) is the largest rank found at a few rational points.
    """
    sector = sector_of(sector)
    top = parse_rational(nmax)
    cut = cutoff if cutoff is not None else top + kmax
    cur = trig_current(sector, cut)
    space = cur.space
    ops = [cur.bare(k) for k in range(1, kmax + 1)]
    step = 1 if sector == NS else 2
    out = []
    for l2 in range(0, mode2(top) + 1, step):
        idx = space.indices_at(Fraction(l2, 2))
        if not idx:
            out.append((Fraction(l2, 2), 0, 0))
            continue
        block = []
        for op in ops:
            rows = sorted({i for j in idx for i in op.cols.get(j, {})})
            for i in rows:
                block.append([op.cols.get(j, {}).get(i, XLaurent()) for j in idx])
        rank = max((_rank_at(block, p) for p in points), default=0) if block else 0
        out.append((Fraction(l2, 2), len(idx), len(idx) - rank))
    return out
