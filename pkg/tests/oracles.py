"""Slow, independent reference computations used by the tests.

Everything here works on plain dicts of python ints and avoids the package's
series machinery, so agreement is a genuine cross-check.
"""

from fractions import Fraction
from itertools import combinations


def mul2(a: dict, b: dict, zmax: int, xmax: int) -> dict:
    """Product of {(xexp, zexp): coef} dicts, dropping z > zmax and x > xmax."""
    out = {}
    for (ea, za), ca in a.items():
        for (eb, zb), cb in b.items():
            z, e = za + zb, ea + eb
            if z > zmax or e > xmax:
                continue
            out[(e, z)] = out.get((e, z), 0) + ca * cb
    return {k: v for k, v in out.items() if v}


def linear(e: int, sign: int = -1) -> dict:
    """1 + sign * x^e z."""
    return {(0, 0): 1, (e, 1): sign}


def geometric(e: int, zmax: int) -> dict:
    """1 / (1 - x^e z)."""
    return {(e * j, j): 1 for j in range(zmax + 1)}


def factor_exponents(c: int, d: int, bound: int) -> list:
    out, e = [], c
    while e <= bound:
        out.append(e)
        e += d
    return out


def structure_function(r: int, L: int, P: int) -> dict:
    """{l: {xexp: coef}} for xexp < P, by multiplying the defining products factor by factor."""
    dmin = min(2 - 2 * r, 4 - 2 * r, 0)
    keep = P + L * abs(dmin) + 4
    acc = geometric(0, L)
    for c in (2 * r, 2 - 2 * r):
        for e in factor_exponents(c, 4, keep):
            acc = mul2(acc, linear(e), L, keep)
    for c in (2 * r + 2, 4 - 2 * r):
        for e in factor_exponents(c, 4, keep):
            acc = mul2(acc, geometric(e, L), L, keep)
    out = {l: {} for l in range(L + 1)}
    for (e, z), v in acc.items():
        if e < P:
            out[z][e] = v
    return {l: {e: v for e, v in d.items() if v} for l, d in out.items()}


def theta_sum(c_exp: int, p_exp: int, P: int) -> dict:
    """Theta_p(c) through the triple-product sum: sum_n (-1)^n p^{n(n-1)/2} c^n."""
    out = {}
    n = -200
    while n <= 200:
        e = p_exp * n * (n - 1) // 2 + c_exp * n
        if e < P:
            out[e] = out.get(e, 0) + (-1) ** (n % 2)
        n += 1
    return {e: v for e, v in out.items() if v}


def distinct_part_counts(parts: list, top: int) -> list:
    """Number of subsets of ``parts`` with each possible sum 0..top (brute force)."""
    counts = [0] * (top + 1)
    usable = [p for p in parts if p <= top]
    for k in range(len(usable) + 1):
        for combo in combinations(usable, k):
            s = sum(combo)
            if s <= top:
                counts[s] += 1
    return counts


def laurent_eval(terms: dict, x0: Fraction) -> Fraction:
    return sum((Fraction(v) * x0**e for e, v in terms.items()), Fraction(0))
