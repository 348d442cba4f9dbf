"""Truncated Taylor series ("jets") for computing high-order radial derivatives.

A :class:`Jet` holds coefficients ``c[0..P]`` with ``f(a + t) = sum c[n] t**n``.
Coefficients carry trailing batch axes so a single jet can represent the
expansions of one function at many centers at once.

The elementary functions in this module (``exp``, ``sqrt``, ...) dispatch on
their argument: jets go through the series recurrences, anything else goes to
numpy.  Kernel formulas written against these functions therefore work for
plain evaluation and for differentiation alike.
"""

from __future__ import annotations

import math

import numpy as np


class DivisionByZeroSeries(ZeroDivisionError):
    pass


class DomainError(ValueError):
    pass


class Jet:
    __array_priority__ = 100

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)
        if self.c.ndim == 0:
            raise ValueError("a jet needs at least one coefficient")

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def center(self):
        return self.c[0]

    @classmethod
    def variable(cls, a, order: int) -> "Jet":
        """Jet of the identity map at ``a`` (scalar or array of centers)."""
        a = np.asarray(a, dtype=float)
        c = np.zeros((order + 1,) + a.shape)
        c[0] = a
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        return cls(c)

    def derivatives(self) -> np.ndarray:
        """``f^(m)(a) = m! c[m]`` for m = 0..P, stacked along axis 0."""
        fact = np.array([math.factorial(m) for m in range(self.order + 1)], dtype=float)
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def __repr__(self):
        return f"Jet({self.c!r})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other: "Jet") -> "Jet":
        if other.order != self.order:
            raise ValueError("jets of different order")
        return other

    def __neg__(self):
        return Jet(-self.c)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + self._coerce(other).c)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.c.shape[1:], other.shape)
        c = np.broadcast_to(self.c, self.c.shape[:1] + shape).copy()
        c[0] += other
        return Jet(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other, dtype=float))
        other = self._coerce(other)
        a, b = self.c, other.c
        out = np.zeros((a.shape[0],) + np.broadcast_shapes(a.shape[1:], b.shape[1:]))
        for n in range(a.shape[0]):
            out[n] = np.einsum("i...,i...->...", a[: n + 1], b[n::-1])
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Jet":
        a = self.c
        if np.any(a[0] == 0):
            raise DivisionByZeroSeries("series division needs a nonzero constant term")
        out = np.zeros_like(a)
        out[0] = 1.0 / a[0]
        for n in range(1, a.shape[0]):
            s = np.einsum("i...,i...->...", a[1 : n + 1], out[n - 1 :: -1])
            out[n] = -s / a[0]
        return Jet(out)

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            return exp(log(self) * exponent)
        if float(exponent) == int(exponent) and int(exponent) >= 0:
            n = int(exponent)
            result = Jet.constant(np.ones(self.c.shape[1:]), self.order)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        if float(exponent) == int(exponent):
            return (self ** (-int(exponent))).reciprocal()
        return _real_power(self, float(exponent))

    def __rpow__(self, base):
        return exp(self * math.log(base))


def _real_power(x: Jet, alpha: float) -> Jet:
    a = x.c
    if np.any(a[0] <= 0):
        raise DomainError("non-integer power needs a positive constant term")
    out = np.zeros_like(a)
    out[0] = a[0] ** alpha
    for n in range(1, a.shape[0]):
        k = np.arange(1, n + 1, dtype=float).reshape((-1,) + (1,) * (a.ndim - 1))
        w = (alpha + 1.0) * k - n
        out[n] = np.sum(w * a[1 : n + 1] * out[n - 1 :: -1], axis=0) / (n * a[0])
    return Jet(out)


def _weighted(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """sum_{k=1..n} k a_k b_{n-k}."""
    k = np.arange(1, n + 1, dtype=float).reshape((-1,) + (1,) * (a.ndim - 1))
    return np.sum(k * a[1 : n + 1] * b[n - 1 :: -1], axis=0)


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    a = x.c
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for n in range(1, a.shape[0]):
        out[n] = _weighted(a, out, n) / n
    return Jet(out)


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    a = x.c
    if np.any(a[0] <= 0):
        raise DomainError("log needs a positive constant term")
    out = np.zeros_like(a)
    out[0] = np.log(a[0])
    for n in range(1, a.shape[0]):
        # n a_0 l_n = n a_n - sum_{k=1}^{n-1} k l_k a_{n-k}; out[n] is still 0 here
        s = _weighted(out, a, n)
        out[n] = (n * a[n] - s) / (n * a[0])
    return Jet(out)


def sqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    return _real_power(x, 0.5)


def _sincos(x: Jet):
    a = x.c
    s = np.zeros_like(a)
    c = np.zeros_like(a)
    s[0] = np.sin(a[0])
    c[0] = np.cos(a[0])
    for n in range(1, a.shape[0]):
        s[n] = _weighted(a, c, n) / n
        c[n] = -_weighted(a, s, n) / n
    return Jet(s), Jet(c)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    return _sincos(x)[0]


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    return _sincos(x)[1]
