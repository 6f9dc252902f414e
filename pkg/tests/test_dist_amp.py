import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sharplad.dist_amp import (
    AmpDistParams,
    cdf_abs_diff,
    mean_abs_diff_closed_form,
    partial_first_moment_amp,
    pdf_abs_diff,
    quantile_abs_diff,
)

from oracles import bivariate_samples, cdf_abs_diff_oracle, histogram_density

SQ2PI = math.sqrt(2 / math.pi)
params_st = st.tuples(st.floats(0.0, 0.99), st.floats(0.02, 1.0)).map(lambda t: AmpDistParams(*t))


@pytest.fixture(scope="module")
def samples_05_08():
    x, y = bivariate_samples(0.5, 0.8, 10**7, seed=11)
    return np.abs(np.abs(x) - np.abs(y))


def test_density_at_origin_independent_case():
    assert pdf_abs_diff(0.0, AmpDistParams(0.0, 0.0)) == pytest.approx(SQ2PI, abs=1e-12)


def test_density_fully_correlated_branch():
    p = AmpDistParams(1.0, 0.5)
    assert pdf_abs_diff(1.0, p) == pytest.approx(2 * SQ2PI * math.exp(-2.0), abs=1e-12)


def test_density_matches_histogram(samples_05_08):
    est, se = histogram_density(samples_05_08, 0.7, 0.005)
    assert abs(pdf_abs_diff(0.7, AmpDistParams(0.5, 0.8)) - est) < 3 * se


def test_cdf_matches_empirical(samples_05_08):
    n = samples_05_08.size
    eps = math.sqrt(math.log(4e6) / (2 * n))  # DKW band at failure prob 1e-6
    emp = np.mean(samples_05_08 <= 1.0)
    assert abs(cdf_abs_diff(1.0, AmpDistParams(0.5, 0.8)) - emp) <= eps


def test_cdf_endpoints():
    assert cdf_abs_diff(0.0, AmpDistParams(0.3, 0.6)) == 0.0
    assert cdf_abs_diff(50.0, AmpDistParams(0.3, 0.6)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("rho,alpha", [(0.0, 1.0), (0.3, 0.6), (0.5, 0.8), (0.9, 0.95), (0.99, 0.3), (0.2, 0.05)])
@pytest.mark.parametrize("t", [0.01, 0.3, 1.0, 2.5])
def test_cdf_against_conditional_quadrature(rho, alpha, t):
    assert cdf_abs_diff(t, AmpDistParams(rho, alpha)) == pytest.approx(
        cdf_abs_diff_oracle(t, rho, alpha), abs=1e-9
    )


def test_half_normal_median():
    assert quantile_abs_diff(0.5, AmpDistParams(1.0, 0.0)) == pytest.approx(0.6744897501960817, abs=1e-8)


def test_quantile_inside_dkw_band(samples_05_08):
    n = samples_05_08.size
    eps = math.sqrt(math.log(4e6) / (2 * n))
    emp_q = np.quantile(samples_05_08, 0.8)
    p = AmpDistParams(0.5, 0.8)
    assert quantile_abs_diff(0.8 - eps, p) <= emp_q <= quantile_abs_diff(0.8 + eps, p)


def test_total_moment_independent_unit_ratio():
    p = AmpDistParams(0.0, 1.0)
    assert partial_first_moment_amp(math.inf, p) == pytest.approx(SQ2PI * (2 * math.sqrt(2) - 2), abs=1e-9)
    assert partial_first_moment_amp(0.0, p) == 0.0


def test_partial_moment_matches_truncated_mean():
    x, y = bivariate_samples(0.4, 0.7, 4 * 10**6, seed=3)
    w = np.abs(np.abs(x) - np.abs(y))
    v = w * (w <= 1.2)
    got = partial_first_moment_amp(1.2, AmpDistParams(0.4, 0.7))
    assert abs(got - v.mean()) < 3 * v.std() / math.sqrt(v.size)


@pytest.mark.parametrize("rho", np.round(np.linspace(0, 1, 11), 10))
@pytest.mark.parametrize("alpha", np.round(np.linspace(0, 1, 11), 10))
def test_normalization_and_mean_on_grid(rho, alpha):
    if rho == 1.0 and alpha == 1.0:
        pytest.skip("point mass at the corner")
    p = AmpDistParams(rho, alpha)
    assert cdf_abs_diff(math.inf, p) == pytest.approx(1.0, abs=1e-6)
    assert partial_first_moment_amp(math.inf, p) == pytest.approx(mean_abs_diff_closed_form(p), abs=1e-8)


@given(params_st, st.floats(0.001, 0.999))
def test_quantile_round_trip(p, prob):
    t = quantile_abs_diff(prob, p)
    assert abs(cdf_abs_diff(t, p) - prob) <= 2e-9


@given(params_st, st.floats(0.0, 5.0), st.floats(0.001, 1.0))
def test_cdf_monotone(p, t, dt):
    assert cdf_abs_diff(t + dt, p) >= cdf_abs_diff(t, p) - 1e-15


@pytest.mark.parametrize("z", [0.05, 0.5, 1.5])
def test_branch_continuity_in_rho(z):
    near = pdf_abs_diff(z, AmpDistParams(1 - 1e-6, 0.5))
    at = pdf_abs_diff(z, AmpDistParams(1.0, 0.5))
    assert near == pytest.approx(at, abs=1e-4)


@pytest.mark.parametrize("z", [0.05, 0.5, 1.5])
def test_branch_continuity_in_alpha(z):
    near = pdf_abs_diff(z, AmpDistParams(0.4, 1e-6))
    at = pdf_abs_diff(z, AmpDistParams(0.4, 0.0))
    assert near == pytest.approx(at, abs=1e-4)


def test_vectorized_density():
    z = np.array([0.0, 0.5, 1.0])
    p = AmpDistParams(0.5, 0.8)
    out = pdf_abs_diff(z, p)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(pdf_abs_diff(0.5, p))


def test_invalid_arguments():
    with pytest.raises(ValueError):
        AmpDistParams(1.2, 0.5)
    with pytest.raises(ValueError):
        AmpDistParams(0.5, -0.1)
    with pytest.raises(ValueError):
        cdf_abs_diff(1.0, AmpDistParams(1.0, 1.0))
    with pytest.raises(ValueError):
        quantile_abs_diff(1.0, AmpDistParams(0.5, 0.5))
    with pytest.raises(ValueError):
        cdf_abs_diff(-1.0, AmpDistParams(0.5, 0.5))
