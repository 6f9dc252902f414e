"""Distribution of ||X| - |Y|| for correlated Gaussians.

X ~ N(0, 1) and Y ~ N(0, alpha^2) with correlation rho. This is the law of a
single row of ||Ax| - |Ay|| when ||x|| = 1 and ||y|| = alpha, and it drives
the amplitude balance function.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._quadrature import RadialTable, panel_breaks
from .specfn import erfc

__all__ = [
    "AmpDistParams",
    "pdf_abs_diff",
    "cdf_abs_diff",
    "quantile_abs_diff",
    "partial_first_moment_amp",
    "mean_abs_diff_closed_form",
]

DEGENERATE_TOL = 1e-7
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class AmpDistParams:
    """Correlation ``rho`` and norm ratio ``alpha``, both in [0, 1]."""

    rho: float
    alpha: float

    def __post_init__(self):
        for name in ("rho", "alpha"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def degenerate_rho(self):
        return 1.0 - self.rho < DEGENERATE_TOL

    @property
    def degenerate_alpha(self):
        return self.alpha < DEGENERATE_TOL

    @property
    def is_corner(self):
        """(rho, alpha) = (1, 1): |X| = |Y| almost surely, a point mass at 0."""
        return self.degenerate_rho and 1.0 - self.alpha < DEGENERATE_TOL

    @property
    def dist1(self):
        """dist_1 of the underlying pair, sqrt(1 + alpha^2 - 2 alpha rho)."""
        a, r = self.alpha, self.rho
        return math.sqrt(max(1.0 + a * a - 2.0 * a * r, 0.0))

    def check(self):
        if self.is_corner:
            raise ValueError("(rho, alpha) = (1, 1) is a point mass at 0")
        return self


def _density(rho, alpha):
    """Vectorized g_{rho,alpha}(z) for z > 0 with branch selection."""
    if 1.0 - rho < DEGENERATE_TOL or alpha < DEGENERATE_TOL:
        scale = 1.0 - alpha if alpha >= DEGENERATE_TOL else 1.0

        def pdf(z):
            z = np.asarray(z, dtype=float)
            return _SQRT_2_OVER_PI / scale * np.exp(-0.5 * (z / scale) ** 2)

        return pdf

    q = math.sqrt(1.0 - rho * rho)
    terms = []
    for sign in (1.0, -1.0):
        lam = alpha * alpha + 2.0 * sign * rho * alpha + 1.0
        c = (1.0 + sign * rho * alpha) / (alpha * math.sqrt(2.0 * lam) * q)
        d = math.sqrt(lam / 2.0) / (q * alpha)
        terms.append((lam, 1.0 / math.sqrt(2.0 * math.pi * lam), c, d))

    def pdf(z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for lam, norm, c, d in terms:
            # 2 - erf(a) - erf(b) == erfc(a) + erfc(b), without cancellation
            out += norm * np.exp(-z * z / (2.0 * lam)) * (erfc(c * z) + erfc((d - c) * z))
        return out

    return pdf


def _layout(rho, alpha):
    if 1.0 - rho < DEGENERATE_TOL or alpha < DEGENERATE_TOL:
        sigma = 1.0 - alpha if alpha >= DEGENERATE_TOL else 1.0
        fine = sigma
    else:
        sigma = math.sqrt(alpha * alpha + 2.0 * rho * alpha + 1.0)
        lam_minus = alpha * alpha - 2.0 * rho * alpha + 1.0
        fine = min(alpha * math.sqrt(1.0 - rho * rho), math.sqrt(lam_minus), 1.0)
    z_max = 12.0 * sigma
    step = z_max / 24.0
    return panel_breaks(0.5 * fine, min(1.0, step), step, z_max)


@lru_cache(maxsize=4096)
def _table(rho, alpha):
    return RadialTable(_density(rho, alpha), _layout(rho, alpha))


def table_for(p):
    """Cached cumulative table for ``p`` (keyed on the exact float pair)."""
    p.check()
    return _table(p.rho, p.alpha)


def pdf_abs_diff(z, p):
    """Density of ||X| - |Y|| at z >= 0 (vectorized in z)."""
    p.check()
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(~np.isfinite(z_arr)):
        raise ValueError("z must be finite and nonnegative")
    out = _density(p.rho, p.alpha)(z_arr)
    return float(out) if out.ndim == 0 else out


def cdf_abs_diff(t, p):
    """G_{rho,alpha}(t) = P(||X| - |Y|| <= t)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return min(table_for(p).mass(t), 1.0)


def quantile_abs_diff(prob, p):
    """Inverse of :func:`cdf_abs_diff` on (0, 1)."""
    if not (0.0 < prob < 1.0):
        raise ValueError("prob must lie strictly inside (0, 1)")
    return table_for(p).quantile(prob)


def partial_first_moment_amp(t, p):
    """int_0^t z g(z) dz; ``t = math.inf`` returns E||X| - |Y||."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return table_for(p).moment(t)


def mean_abs_diff_closed_form(p):
    """E||X| - |Y|| = sqrt(2/pi) (|x+y| + |x-y| - |x| - |y|) for the pair."""
    a, r = p.alpha, p.rho
    plus = math.sqrt(1.0 + a * a + 2.0 * a * r)
    minus = math.sqrt(max(1.0 + a * a - 2.0 * a * r, 0.0))
    return _SQRT_2_OVER_PI * (plus + minus - 1.0 - a)
