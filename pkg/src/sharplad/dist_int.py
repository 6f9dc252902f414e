"""Distribution of |X * Y| for standard Gaussians with correlation rho.

One row of ||Ax|^2 - |Ay|^2| / dist_2(x, y) is |<a,u><a,v>| with unit u, v,
so this law drives the intensity balance function.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._quadrature import RadialTable, panel_breaks
from .specfn import bessel_k0e

__all__ = [
    "IntDistParams",
    "pdf_abs_prod",
    "cdf_abs_prod",
    "quantile_abs_prod",
    "partial_first_moment_int",
    "mean_abs_prod_closed_form",
]

DEGENERATE_TOL = 1e-7


@dataclass(frozen=True)
class IntDistParams:
    """Correlation ``rho`` in [0, 1] of the two unit-variance factors."""

    rho: float

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError(f"rho must lie in [0, 1], got {self.rho!r}")
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def degenerate(self):
        """rho = 1: |XY| = X^2 is chi-square with one degree of freedom."""
        return 1.0 - self.rho < DEGENERATE_TOL


def _density(rho):
    if 1.0 - rho < DEGENERATE_TOL:

        def pdf(z):
            z = np.asarray(z, dtype=float)
            return np.exp(-0.5 * z) / np.sqrt(2.0 * math.pi * z)

        return pdf

    q = 1.0 - rho * rho
    norm = 1.0 / (math.pi * math.sqrt(q))

    def pdf(z):
        # cosh(rho z / q) K0(z / q) rewritten with the scaled K0 so that the
        # growing and decaying exponentials cancel analytically:
        # 2 cosh(a) K0(b) = k0e(b) (exp(a - b) + exp(-a - b)),
        # a - b = -z / (1 + rho), -a - b = -z / (1 - rho).
        z = np.asarray(z, dtype=float)
        tail = np.exp(-z / (1.0 + rho)) + np.exp(-z / (1.0 - rho))
        return norm * bessel_k0e(z / q) * tail

    return pdf


def _layout(rho):
    q = 1.0 - rho * rho
    z_max = 60.0 * q + 60.0
    step = z_max / 48.0
    fine = 1.0 if 1.0 - rho < DEGENERATE_TOL else min(1.0 - rho, 1.0)
    return panel_breaks(0.5 * fine, 1.0, step, z_max)


@lru_cache(maxsize=4096)
def _table(rho):
    return RadialTable(_density(rho), _layout(rho))


def table_for(p):
    """Cached cumulative table for ``p``."""
    return _table(p.rho)


def pdf_abs_prod(z, p):
    """Density f_rho(z) of |XY| for z > 0 (vectorized in z)."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(z_arr > 0)) or np.any(~np.isfinite(z_arr)):
        raise ValueError("z must be finite and strictly positive")
    out = _density(p.rho)(z_arr)
    return float(out) if out.ndim == 0 else out


def cdf_abs_prod(t, p):
    """F_rho(t) = P(|XY| <= t)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return min(table_for(p).mass(t), 1.0)


def quantile_abs_prod(prob, p):
    """Inverse of :func:`cdf_abs_prod` on (0, 1)."""
    if not (0.0 < prob < 1.0):
        raise ValueError("prob must lie strictly inside (0, 1)")
    return table_for(p).quantile(prob)


def partial_first_moment_int(t, p):
    """int_0^t z f_rho(z) dz; ``t = math.inf`` returns E|XY|."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return table_for(p).moment(t)


def mean_abs_prod_closed_form(p):
    """E|XY| = (2/pi) (sqrt(1 - rho^2) + rho * arcsin(rho))."""
    r = p.rho
    return 2.0 / math.pi * (math.sqrt(max(1.0 - r * r, 0.0)) + r * math.asin(r))
