"""Scalar special functions used by the closed-form densities.

Thin, validated wrappers over :mod:`scipy.special`. All functions accept
scalars or arrays and are vectorized.
"""

import numpy as np
from scipy import special

__all__ = ["erf", "erfc", "bessel_k0", "bessel_k0e"]


def erf(x):
    """Gaussian error function (2/sqrt(pi)) * int_0^x exp(-t^2) dt."""
    return special.erf(x)


def erfc(x):
    """Complementary error function 1 - erf(x), accurate in the far tail."""
    return special.erfc(x)


def _check_positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("modified Bessel K0 is defined for x > 0 only")
    return arr


def bessel_k0(x):
    """Modified Bessel function of the second kind, order zero.

    Raises ValueError for x <= 0 (K0 has a logarithmic pole at the origin).
    """
    return special.k0(_check_positive(x))


def bessel_k0e(x):
    """Exponentially scaled K0, ``exp(x) * K0(x)``.

    Used where K0 is multiplied by a growing exponential and the naive
    product would overflow or lose all digits.
    """
    return special.k0e(_check_positive(x))
