"""Laurent polynomials with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

import numpy as np


class LaurentPolynomial:
    """Finite sum ``sum_e c_e r**e`` over integer (possibly negative) powers."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean = {}
        for power, coeff in (terms or {}).items():
            coeff = Fraction(coeff)
            if coeff != 0:
                clean[int(power)] = coeff
        self.terms: dict[int, Fraction] = dict(sorted(clean.items()))

    @classmethod
    def monomial(cls, power: int, coeff=1) -> "LaurentPolynomial":
        return cls({power: coeff})

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*r^{e}" for e, c in self.terms.items())

    def __eq__(self, other):
        if not isinstance(other, LaurentPolynomial):
            other = LaurentPolynomial({0: other})
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        if not isinstance(other, LaurentPolynomial):
            other = LaurentPolynomial({0: other})
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return LaurentPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolynomial({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentPolynomial):
            other = Fraction(other)
            return LaurentPolynomial({e: c * other for e, c in self.terms.items()})
        out: dict[int, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentPolynomial(out)

    __rmul__ = __mul__

    def derivative(self) -> "LaurentPolynomial":
        return LaurentPolynomial({e - 1: c * e for e, c in self.terms.items() if e != 0})

    @property
    def min_power(self) -> int:
        return min(self.terms) if self.terms else 0

    @property
    def max_power(self) -> int:
        return max(self.terms) if self.terms else 0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for e, c in self.terms.items():
            out = out + float(c) * r**e
        return out
