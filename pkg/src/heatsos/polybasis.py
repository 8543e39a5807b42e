"""Monomial bookkeeping and sparse multivariate polynomials.

Exponent tuples are ordered graded-lexicographically: total degree first,
then lexicographically with the first variable most significant, so that
for variables (t, x, y) the degree-<=2 basis reads
``1, t, x, y, t^2, t x, t y, x^2, x y, y^2``.
"""
from __future__ import annotations

import math
import sys
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Iterable, Mapping, Sequence

MultiIndex = tuple  # tuple[int, ...] of nonnegative exponents


def degree(alpha: MultiIndex) -> int:
    return sum(alpha)


def grlex_key(alpha: MultiIndex) -> tuple:
    """Sort key realising the graded-lex order (first variable most significant)."""
    return (sum(alpha), tuple(-a for a in alpha))


def basis_size(n: int, d: int) -> int:
    """Number of monomials in ``n`` variables of degree at most ``d``."""
    if n < 1 or d < 0:
        raise ValueError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    count = math.comb(n + d, d)
    if count > sys.maxsize:
        raise OverflowError(f"basis size C({n + d},{d}) does not fit an index")
    return count


def _compositions(n: int, k: int):
    # exponent tuples of length n summing to k, first variable most significant
    if n == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in _compositions(n - 1, k - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def monomial_list(n: int, d: int) -> tuple:
    """All exponent tuples of degree <= d in graded-lex order."""
    basis_size(n, d)
    return tuple(alpha for k in range(d + 1) for alpha in _compositions(n, k))


@lru_cache(maxsize=None)
def monomial_index(n: int, d: int) -> dict:
    """Inverse of :func:`monomial_list`: exponent tuple -> position."""
    return {alpha: i for i, alpha in enumerate(monomial_list(n, d))}


def add_exponents(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(i + j for i, j in zip(a, b))


def box_moment(exponents: Sequence[int]) -> Fraction:
    """Exact integral of ``prod v_i^{a_i}`` over the unit box ``[0,1]^k``."""
    out = Fraction(1)
    for a in exponents:
        out /= a + 1
    return out


class Polynomial:
    """Sparse polynomial in ``n`` variables; immutable.

    Coefficients may be ints, Fractions or floats; arithmetic keeps
    whatever exactness the inputs carry.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[MultiIndex, Number] | None = None):
        if n < 1:
            raise ValueError("a polynomial needs at least one variable")
        self.n = n
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n or min(alpha) < 0:
                raise ValueError(f"bad exponent {alpha} for {n} variables")
            if c != 0:
                clean[alpha] = clean.get(alpha, 0) + c
        self._terms = {a: c for a, c in clean.items() if c != 0}

    # construction helpers
    @classmethod
    def constant(cls, n: int, c: Number = 1) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def monomial(cls, alpha: MultiIndex, c: Number = 1) -> "Polynomial":
        return cls(len(alpha), {tuple(alpha): c})

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        alpha = [0] * n
        alpha[i] = 1
        return cls(n, {tuple(alpha): 1})

    @classmethod
    def univariate(cls, coeffs: Iterable[Number], n: int = 1, var: int = 0) -> "Polynomial":
        """Polynomial in variable ``var`` from ascending-power coefficients."""
        terms = {}
        for k, c in enumerate(coeffs):
            alpha = [0] * n
            alpha[var] = k
            terms[tuple(alpha)] = c
        return cls(n, terms)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, alpha: MultiIndex) -> Number:
        return self._terms.get(tuple(alpha), 0)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(a) for a in self._terms), default=-1)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Number):
            other = Polynomial.constant(self.n, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"Polynomial({self.n}, 0)"
        parts = [f"{c}*{a}" for a, c in sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]))]
        return f"Polynomial({self.n}, " + " + ".join(parts) + ")"

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValueError(f"variable count mismatch: {self.n} vs {other.n}")
            return other
        if isinstance(other, Number):
            return Polynomial.constant(self.n, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for a, c in other._terms.items():
            terms[a] = terms.get(a, 0) + c
        return Polynomial(self.n, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return Polynomial(self.n, {a: c * other for a, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                ab = add_exponents(a, b)
                terms[ab] = terms.get(ab, 0) + ca * cb
        return Polynomial(self.n, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # calculus and evaluation
    def diff(self, var: int) -> "Polynomial":
        if not 0 <= var < self.n:
            raise IndexError(f"variable {var} out of range for {self.n} variables")
        terms = {}
        for a, c in self._terms.items():
            if a[var]:
                b = list(a)
                b[var] -= 1
                terms[tuple(b)] = c * a[var]
        return Polynomial(self.n, terms)

    def substitute(self, var: int, value: Number) -> "Polynomial":
        """Fix variable ``var`` to ``value``; the variable count is kept."""
        terms: dict = {}
        for a, c in self._terms.items():
            b = list(a)
            e = b[var]
            b[var] = 0
            b = tuple(b)
            terms[b] = terms.get(b, 0) + c * value**e
        return Polynomial(self.n, terms)

    def select(self, keep: Sequence[int]) -> "Polynomial":
        """Re-express over the variables ``keep`` (others must be absent)."""
        keep = list(keep)
        dropped = [i for i in range(self.n) if i not in keep]
        terms = {}
        for a, c in self._terms.items():
            if any(a[i] for i in dropped):
                raise ValueError(f"term {a} uses a dropped variable")
            terms[tuple(a[i] for i in keep)] = c
        return Polynomial(len(keep), terms)

    def embed(self, n: int, positions: Sequence[int]) -> "Polynomial":
        """Inverse of :meth:`select`: place variables at ``positions`` of ``n``."""
        terms = {}
        for a, c in self._terms.items():
            b = [0] * n
            for e, p in zip(a, positions):
                b[p] = e
            terms[tuple(b)] = c
        return Polynomial(n, terms)

    def __call__(self, *point):
        if len(point) == 1 and not isinstance(point[0], Number):
            point = tuple(point[0])
        if len(point) != self.n:
            raise ValueError(f"expected {self.n} coordinates")
        total = 0
        for a, c in self._terms.items():
            term = c
            for v, e in zip(point, a):
                if e:
                    term = term * v**e
            total = total + term
        return total

    def to_float(self) -> "Polynomial":
        return Polynomial(self.n, {a: float(c) for a, c in self._terms.items()})


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def poly_diff(p: Polynomial, var: int) -> Polynomial:
    return p.diff(var)


def affine_substitute(p: Polynomial, shift: Sequence[Number], scale: Sequence[Number]) -> Polynomial:
    """Rewrite ``p(v)`` in new variables ``w`` with ``v_i = shift_i + scale_i * w_i``."""
    n = p.n
    # cache powers of each affine factor
    powers = [[Polynomial.constant(n, 1)] for _ in range(n)]
    out = Polynomial(n)
    for a, c in p.items():
        term = Polynomial.constant(n, c)
        for i, e in enumerate(a):
            if not e:
                continue
            while len(powers[i]) <= e:
                lin = Polynomial(n, {(0,) * n: shift[i]}) + Polynomial.variable(n, i) * scale[i]
                powers[i].append(powers[i][-1] * lin)
            term = term * powers[i][e]
        out = out + term
    return out
