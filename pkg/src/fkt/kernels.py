"""Isotropic kernels K(r) and their radial derivatives.

Each kernel is a formula in ``r`` written against :mod:`fkt.jets`, so the same
expression evaluates numbers and propagates Taylor jets.  Kernels whose
derivative satisfies ``K'(r) = q(r) K(r)`` for a Laurent polynomial ``q``
register ``q`` explicitly; that is what unlocks radial compression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from . import jets as J
from .laurent import LaurentPolynomial


class SingularAtZero(ValueError):
    """K(0) requested from a kernel with no diagonal convention."""


@dataclass(frozen=True)
class IsotropicKernel:
    name: str
    formula: Callable
    params: Mapping[str, float] = field(default_factory=dict)
    recurrence: LaurentPolynomial | None = None
    value_at_zero: float | None = None
    singular: bool = False

    def __call__(self, r):
        return eval_kernel(self, r)

    def jet(self, r, order: int) -> J.Jet:
        return kernel_jet(self, r, order)

    def derivatives(self, r, order: int) -> np.ndarray:
        """Array of K^(m)(r), m = 0..order, stacked along axis 0."""
        return kernel_jet(self, r, order).derivatives()

    def with_diagonal(self, value) -> "IsotropicKernel":
        return replace(self, value_at_zero=None if value is None else float(value))

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.name}({args})"


def eval_kernel(kernel: IsotropicKernel, r):
    """K(r) for scalar or array ``r >= 0``; zero distances use ``value_at_zero``."""
    r = np.asarray(r, dtype=float)
    zero = r == 0
    if not zero.any():
        return kernel.formula(r, kernel.params)
    if kernel.value_at_zero is None:
        raise SingularAtZero(f"{kernel.name} is singular at r=0 and has no value_at_zero")
    out = np.full(r.shape, kernel.value_at_zero)
    if not zero.all():
        out[~zero] = kernel.formula(r[~zero], kernel.params)
    return out if out.ndim else float(out)


def kernel_jet(kernel: IsotropicKernel, r, order: int) -> J.Jet:
    """Taylor jet of K centered at ``r > 0`` (vectorized over ``r``)."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    if np.any(np.asarray(r) <= 0):
        raise ValueError("kernel jets are taken at r > 0")
    return kernel.formula(J.Jet.variable(r, order), kernel.params)


def detect_derivative_recurrence(kernel: IsotropicKernel) -> LaurentPolynomial | None:
    return kernel.recurrence


def _rational(x) -> Fraction:
    # exact decimal reading: 0.1 -> 1/10 rather than the binary expansion
    return Fraction(repr(float(x))) if not isinstance(x, Fraction) else x


# --- catalogue ---------------------------------------------------------------


def exponential(lengthscale=1.0, variance=1.0):
    rho = _rational(lengthscale)
    return IsotropicKernel(
        "exponential",
        lambda r, p: p["variance"] * J.exp(-r / p["lengthscale"]),
        {"lengthscale": float(lengthscale), "variance": float(variance)},
        LaurentPolynomial({0: -1 / rho}),
        value_at_zero=float(variance),
    )


def matern12(lengthscale=1.0, variance=1.0):
    # nu = 1/2 is the exponential kernel
    k = exponential(lengthscale, variance)
    return replace(k, name="matern12")


def matern32(lengthscale=1.0, variance=1.0):
    def f(r, p):
        a = math.sqrt(3.0) / p["lengthscale"]
        return p["variance"] * (1 + a * r) * J.exp(-a * r)

    return IsotropicKernel(
        "matern32",
        f,
        {"lengthscale": float(lengthscale), "variance": float(variance)},
        value_at_zero=float(variance),
    )


def cauchy(sigma=1.0):
    return IsotropicKernel(
        "cauchy",
        lambda r, p: 1 / (1 + r * r / p["sigma"] ** 2),
        {"sigma": float(sigma)},
        value_at_zero=1.0,
    )


def rational_quadratic(sigma=1.0):
    """Rational quadratic with alpha = 1/2."""
    return IsotropicKernel(
        "rational_quadratic",
        lambda r, p: 1 / J.sqrt(1 + r * r / p["sigma"] ** 2),
        {"sigma": float(sigma)},
        value_at_zero=1.0,
    )


def gaussian(lengthscale=1.0, variance=1.0):
    rho = _rational(lengthscale)
    return IsotropicKernel(
        "gaussian",
        lambda r, p: p["variance"] * J.exp(-(r * r) / p["lengthscale"] ** 2),
        {"lengthscale": float(lengthscale), "variance": float(variance)},
        LaurentPolynomial({1: -2 / rho**2}),
        value_at_zero=float(variance),
    )


def electrostatic():
    return IsotropicKernel(
        "electrostatic", lambda r, p: 1 / r, {}, LaurentPolynomial({-1: -1}), 0.0, True
    )


def inverse_square():
    return IsotropicKernel(
        "inverse_square", lambda r, p: 1 / (r * r), {}, LaurentPolynomial({-1: -2}), 0.0, True
    )


def inverse_cube():
    return IsotropicKernel(
        "inverse_cube", lambda r, p: 1 / (r * r * r), {}, LaurentPolynomial({-1: -3}), 0.0, True
    )


def cos_over_r(wavenumber=1.0):
    return IsotropicKernel(
        "cos_over_r",
        lambda r, p: J.cos(p["wavenumber"] * r) / r,
        {"wavenumber": float(wavenumber)},
        value_at_zero=0.0,
        singular=True,
    )


def yukawa(lengthscale=1.0):
    """exp(-r/rho) / r."""
    rho = _rational(lengthscale)
    return IsotropicKernel(
        "yukawa",
        lambda r, p: J.exp(-r / p["lengthscale"]) / r,
        {"lengthscale": float(lengthscale)},
        LaurentPolynomial({0: -1 / rho, -1: -1}),
        0.0,
        True,
    )


def exp_linear():
    """r exp(-r); vanishes on the diagonal."""
    return IsotropicKernel(
        "exp_linear", lambda r, p: r * J.exp(-r), {}, LaurentPolynomial({-1: 1, 0: -1}), 0.0
    )


def exp_inverse():
    """exp(-1/r), extended by its limit 0 at the origin."""
    return IsotropicKernel(
        "exp_inverse", lambda r, p: J.exp(-1 / r), {}, LaurentPolynomial({-2: 1}), 0.0
    )


def exp_inverse_square():
    return IsotropicKernel(
        "exp_inverse_square",
        lambda r, p: J.exp(-1 / (r * r)),
        {},
        LaurentPolynomial({-3: 2}),
        0.0,
    )


KERNELS: dict[str, Callable[..., IsotropicKernel]] = {
    "exponential": exponential,
    "matern12": matern12,
    "matern32": matern32,
    "cauchy": cauchy,
    "rational_quadratic": rational_quadratic,
    "gaussian": gaussian,
    "electrostatic": electrostatic,
    "inverse_square": inverse_square,
    "inverse_cube": inverse_cube,
    "cos_over_r": cos_over_r,
    "yukawa": yukawa,
    "exp_linear": exp_linear,
    "exp_inverse": exp_inverse,
    "exp_inverse_square": exp_inverse_square,
}


def make_kernel(name: str, **params) -> IsotropicKernel:
    try:
        factory = KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None
    return factory(**params)
