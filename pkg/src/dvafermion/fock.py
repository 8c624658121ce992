"""Truncated Fock spaces of deformed free fermions and their mode operators.

Modes are stored internally in doubled units (``2*m``) so that NS modes are
odd integers and R modes even integers; the public functions accept and
return ordinary rationals.

The fermions obey psi_m psi_n + psi_n psi_m = delta_{m+n,0} (x^{2m} + x^{-2m}).
States are wedges psi_{-a_1} psi_{-a_2} ... |0> with a_1 > a_2 > ...; creation
carries no factor, annihilation carries the full contraction factor, and the
R zero mode toggles occupancy of the level-0 slot with factor 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .coeff import ONE, XLaurent, parse_rational

NS, R = "NS", "R"

__all__ = [
    "NS",
    "R",
    "FockState",
    "FockSpace",
    "GradedOperator",
    "ParityError",
    "ShapeError",
    "default_contraction",
    "enumerate_basis",
    "psi_apply",
    "operator_matrix",
    "op_compose",
    "op_add",
    "op_scale",
    "identity",
    "sector_of",
    "mode2",
]


class ParityError(ValueError):
    """Mode does not belong to the sector's mode lattice."""


class ShapeError(ValueError):
    """Operators with incompatible spaces or degrees."""


def sector_of(name: str) -> str:
    s = name.strip().upper()
    if s not in (NS, R):
        raise ValueError(f"unknown sector {name!r}")
    return s


def mode2(m) -> int:
    """Doubled mode 2*m as an int; m must be a half-integer or integer."""
    q = parse_rational(m) * 2
    if q.denominator != 1:
        raise ParityError(f"{m} is not a half-integer")
    return q.numerator


def check_parity(sector: str, m2: int):
    if (m2 % 2 == 1) != (sector == NS):
        raise ParityError(f"mode {Fraction(m2, 2)} not allowed in the {sector} sector")


@lru_cache(maxsize=None)
def default_contraction(m2: int) -> XLaurent:
    """x^{2m} + x^{-2m} for m = m2/2 > 0 (the R zero mode is handled separately)."""
    return XLaurent.monomial(m2) + XLaurent.monomial(-m2)


@dataclass(frozen=True, order=True)
class FockState:
    sector: str
    occupied: tuple  # doubled modes, strictly decreasing

    def __post_init__(self):
        occ = self.occupied
        if any(a <= b for a, b in zip(occ, occ[1:])):
            raise ValueError("occupied modes must be strictly decreasing")
        for a in occ:
            if a < 0:
                raise ValueError("occupied modes are nonnegative")
            check_parity(self.sector, a)

    @classmethod
    def from_modes(cls, sector: str, modes=()) -> FockState:
        sector = sector_of(sector)
        return cls(sector, tuple(sorted((mode2(m) for m in modes), reverse=True)))

    @property
    def level2(self) -> int:
        return sum(self.occupied)

    @property
    def level(self) -> Fraction:
        return Fraction(self.level2, 2)

    @property
    def modes(self) -> tuple:
        return tuple(Fraction(a, 2) for a in self.occupied)

    def __str__(self):
        inner = ",".join(str(m) for m in self.modes)
        return f"|{inner}>_{self.sector}"


def _distinct_sets(allowed: list, budget: int, start: int = 0):
    """Strictly decreasing tuples from ``allowed`` (ascending) with sum <= budget."""
    out = [()]
    for i in range(start, len(allowed)):
        a = allowed[i]
        if a > budget:
            break
        for rest in _distinct_sets(allowed, budget - a, i + 1):
            out.append(rest + (a,))
    return out


class FockSpace:
    """All states of one sector with level <= cutoff, ordered by level then occupation."""

    def __init__(self, sector: str, cutoff):
        self.sector = sector_of(sector)
        self.cutoff = parse_rational(cutoff)
        if self.cutoff < 0:
            raise ValueError("cutoff must be nonnegative")
        self.cutoff2 = int(self.cutoff * 2)
        start = 1 if self.sector == NS else 0
        allowed = list(range(start, self.cutoff2 + 1, 2))
        sets = _distinct_sets(allowed, self.cutoff2)
        states = [FockState(self.sector, s) for s in sets]
        states.sort(key=lambda s: (s.level2, s.occupied))
        self.basis = tuple(states)
        self.index = {s: i for i, s in enumerate(self.basis)}

    def __len__(self):
        return len(self.basis)

    def level2_of(self, idx: int) -> int:
        return self.basis[idx].level2

    def indices_at(self, level) -> list:
        l2 = mode2(level)
        return [i for i, s in enumerate(self.basis) if s.level2 == l2]

    def indices_upto(self, level) -> list:
        l2 = mode2(level)
        return [i for i, s in enumerate(self.basis) if s.level2 <= l2]

    def vacuum(self) -> int:
        return self.index[FockState(self.sector, ())]

    def act(self, m2: int, idx: int, contraction=default_contraction):
        """(coefficient, target index) for psi_m on basis state idx, or None."""
        res = _act(m2, self.basis[idx].occupied)
        if res is None:
            return None
        sign, ann, occ = res
        if sum(occ) > self.cutoff2:
            return None
        coef = contraction(ann) if ann else ONE
        return (coef if sign > 0 else -coef), self.index[FockState(self.sector, occ)]

    def __eq__(self, other):
        return isinstance(other, FockSpace) and (self.sector, self.cutoff) == (other.sector, other.cutoff)

    def __hash__(self):
        return hash((self.sector, self.cutoff))

    def __repr__(self):
        return f"FockSpace({self.sector}, cutoff={self.cutoff}, dim={len(self)})"


def _act(m2: int, occ: tuple):
    """Wedge calculus in doubled units: (sign, annihilated mode or 0, new occupation).

    The annihilated mode is reported so the caller can attach the contraction
    factor; 0 means no factor (creation or the zero-mode toggle).
    """
    if m2 < 0:
        a = -m2
        if a in occ:
            return None
        above = sum(1 for b in occ if b > a)
        new = tuple(sorted(occ + (a,), reverse=True))
        return (-1 if above % 2 else 1), 0, new
    if m2 > 0:
        if m2 not in occ:
            return None
        above = sum(1 for b in occ if b > m2)
        new = tuple(b for b in occ if b != m2)
        return (-1 if above % 2 else 1), m2, new
    above = sum(1 for b in occ if b > 0)
    new = tuple(b for b in occ if b != 0) if 0 in occ else occ + (0,)
    return (-1 if above % 2 else 1), 0, new


def enumerate_basis(sector: str, cutoff) -> FockSpace:
    return FockSpace(sector, cutoff)


def psi_apply(m, state: FockState, contraction: Callable = default_contraction):
    """psi_m |state>: returns (XLaurent coefficient, FockState) or None for zero."""
    m2 = mode2(m)
    check_parity(state.sector, m2)
    res = _act(m2, state.occupied)
    if res is None:
        return None
    sign, ann, occ = res
    coef = contraction(ann) if ann else ONE
    return (coef if sign > 0 else -coef), FockState(state.sector, occ)


class GradedOperator:
    """Sparse level-homogeneous map between truncated spaces.

    Stored column-wise: ``cols[j]`` maps row index to coefficient.  ``degree``
    is the level shift (a state of level e goes to level e + degree).
    """

    def __init__(self, domain, codomain, degree, cols: dict | None = None):
        self.domain = domain
        self.codomain = codomain
        self.degree = parse_rational(degree)
        self.cols = {}
        for j, col in (cols or {}).items():
            col = {i: c for i, c in col.items() if not (c.is_zero and c.is_exact)}
            if col:
                self.cols[j] = col

    @property
    def entries(self) -> dict:
        return {(i, j): c for j, col in self.cols.items() for i, c in col.items()}

    @property
    def shape(self):
        return len(self.codomain), len(self.domain)

    def entry(self, i: int, j: int) -> XLaurent:
        return self.cols.get(j, {}).get(i, XLaurent())

    def apply(self, vec: dict) -> dict:
        """Apply to a sparse vector {index: XLaurent}."""
        out = {}
        for j, v in vec.items():
            for i, c in self.cols.get(j, {}).items():
                t = c * v
                out[i] = out[i] + t if i in out else t
        return out

    def check_grading(self) -> bool:
        d2 = int(self.degree * 2)
        return all(
            self.codomain.level2_of(i) - self.domain.level2_of(j) == d2
            for j, col in self.cols.items()
            for i in col
        )

    def restrict_columns(self, cols) -> GradedOperator:
        keep = set(cols)
        return GradedOperator(self.domain, self.codomain, self.degree, {j: c for j, c in self.cols.items() if j in keep})

    def __matmul__(self, other):
        return op_compose(self, other)

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_add(self, op_scale(other, -1))

    def __repr__(self):
        nnz = sum(len(c) for c in self.cols.values())
        return f"GradedOperator(degree={self.degree}, shape={self.shape}, nnz={nnz})"


def identity(space) -> GradedOperator:
    return GradedOperator(space, space, 0, {i: {i: ONE} for i in range(len(space))})


def operator_matrix(m, space: FockSpace, contraction: Callable = default_contraction) -> GradedOperator:
    """Matrix of psi_m on the truncated space; images above the cutoff are dropped."""
    m2 = mode2(m)
    check_parity(space.sector, m2)
    cols = {}
    for j in range(len(space)):
        res = space.act(m2, j, contraction)
        if res is not None:
            coef, i = res
            cols[j] = {i: coef}
    return GradedOperator(space, space, -Fraction(m2, 2), cols)


def op_compose(a: GradedOperator, b: GradedOperator) -> GradedOperator:
    """a after b."""
    if a.domain != b.codomain:
        raise ShapeError("domain of the left factor must be the codomain of the right")
    cols = {j: a.apply(col) for j, col in b.cols.items()}
    return GradedOperator(b.domain, a.codomain, a.degree + b.degree, cols)


def op_add(a: GradedOperator, b: GradedOperator) -> GradedOperator:
    if a.domain != b.domain or a.codomain != b.codomain:
        raise ShapeError("operators act between different spaces")
    if a.degree != b.degree and a.cols and b.cols:
        raise ShapeError(f"degrees differ: {a.degree} vs {b.degree}")
    cols = {j: dict(col) for j, col in a.cols.items()}
    for j, col in b.cols.items():
        tgt = cols.setdefault(j, {})
        for i, c in col.items():
            tgt[i] = tgt[i] + c if i in tgt else c
    degree = a.degree if a.cols else b.degree
    return GradedOperator(a.domain, a.codomain, degree, cols)


def op_scale(a: GradedOperator, s) -> GradedOperator:
    s = XLaurent.coerce(s)
    return GradedOperator(a.domain, a.codomain, a.degree, {j: {i: s * c for i, c in col.items()} for j, col in a.cols.items()})
