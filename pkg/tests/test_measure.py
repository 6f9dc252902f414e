import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sharplad.balance import AMPLITUDE, INTENSITY, sharp_threshold
from sharplad.measure import (
    AdversaryPlan,
    NoiseSpec,
    build_adversary,
    corrupt,
    decoy_signal,
    dist1,
    dist2,
    forward,
    orthogonal_unit,
    random_outliers,
    read_audit,
    sample_ensemble,
    to_audit_record,
    top_fraction_support,
    write_audit,
)
from sharplad.solver import objective

vec = arrays(np.float64, 4, elements=st.floats(-10, 10))


def test_ensemble_deterministic():
    a = sample_ensemble(4, 2, 7).matrix
    b = sample_ensemble(4, 2, 7).matrix
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_ensemble(4, 2, 8).matrix)


def test_ensemble_moments():
    m, n = 10**5, 10
    A = sample_ensemble(m, n, 3)
    assert (A.m, A.n) == (m, n)
    assert np.all(np.abs(A.matrix.mean(axis=0)) <= 4 / math.sqrt(m))
    sq = (A.matrix**2).sum(axis=1)
    assert abs(sq.mean() - n) <= 5 * math.sqrt(2 * n / m)


def test_ensemble_guards():
    with pytest.raises(ValueError):
        sample_ensemble(10**6, 10**4, 0)
    with pytest.raises(ValueError):
        sample_ensemble(0, 3, 0)


def test_forward_basics(rng):
    A = sample_ensemble(50, 4, 1)
    x = rng.standard_normal(4)
    assert np.array_equal(forward(A, np.zeros(4), AMPLITUDE), np.zeros(50))
    assert np.array_equal(forward(A, -x, AMPLITUDE), forward(A, x, AMPLITUDE))
    assert np.allclose(forward(A, x, INTENSITY), forward(A, x, AMPLITUDE) ** 2, rtol=1e-14)
    with pytest.raises(ValueError):
        forward(A, np.ones(3), AMPLITUDE)
    with pytest.raises(ValueError):
        forward(A, x, "phase")


@given(vec, vec)
def test_dist_relations(x, y):
    assert dist1(x, -x) == 0.0 and dist2(x, -x) == 0.0
    assert dist1(x, y) ** 2 <= dist2(x, y) * (1 + 1e-12) + 1e-12
    assert dist1(x, y) == dist1(y, x) == dist1(x, -y)


def test_dist_orthonormal():
    e1, e2 = np.eye(2)
    assert dist1(e1, e2) == pytest.approx(math.sqrt(2))
    assert dist2(e1, e2) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        dist1(np.ones(2), np.ones(3))


@given(arrays(np.float64, 5, elements=st.floats(-5, 5)).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_orthogonal_unit(x):
    u = orthogonal_unit(x)
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert abs(u @ x) <= 1e-10 * np.linalg.norm(x)
    assert np.array_equal(orthogonal_unit(-x), -u)


def test_top_fraction_ties_lower_index():
    assert list(top_fraction_support([1.0, 3.0, 3.0, 2.0, 3.0], 2)) == [1, 2]


def test_support_is_optimal_subset(rng):
    """Top-k selection maximizes the selected sum among all k-subsets."""
    for _ in range(20):
        m = int(rng.integers(5, 13))
        A = rng.standard_normal((m, 3))
        x0 = rng.standard_normal(3)
        s = float(rng.uniform(1.0 / m, 0.5))
        plan = build_adversary(A, x0, s, AMPLITUDE, (0.2, 0.6))
        v = np.abs(forward(A, plan.x_star, AMPLITUDE) - forward(A, x0, AMPLITUDE))
        k = int(math.floor(s * m))
        best = max(itertools.combinations(range(m), k), key=lambda S: v[list(S)].sum())
        assert sorted(best) == list(plan.support)


@pytest.mark.parametrize("params", [(0.0, 0.37), (0.3, 0.6), (0.9, 1.0)])
def test_amplitude_decoy_geometry(rng, params):
    x0 = rng.standard_normal(6)
    xs = decoy_signal(x0, AMPLITUDE, params)
    corr = xs @ x0 / (np.linalg.norm(xs) * np.linalg.norm(x0))
    assert corr == pytest.approx(params[0], abs=1e-10)
    assert np.linalg.norm(xs) / np.linalg.norm(x0) == pytest.approx(params[1], abs=1e-10)


@pytest.mark.parametrize("rho", [0.0, 0.4, 0.8])
def test_intensity_decoy_geometry(rng, rho):
    x0 = rng.standard_normal(6)
    xs = decoy_signal(x0, INTENSITY, (rho,))
    u, v = x0 - xs, x0 + xs
    assert u @ v / (np.linalg.norm(u) * np.linalg.norm(v)) == pytest.approx(rho, abs=1e-10)


@pytest.mark.parametrize("s", [0.05, 0.2])
def test_plan_bookkeeping(s):
    A = sample_ensemble(1000, 5, 2)
    x0 = np.arange(1.0, 6.0)
    plan = build_adversary(A, x0, s, INTENSITY, (0.8,))
    assert plan.support.size == math.floor(s * 1000)
    assert np.count_nonzero(plan.z) == plan.support.size
    diff = forward(A, plan.x_star, INTENSITY) - forward(A, x0, INTENSITY)
    assert np.array_equal(plan.z[plan.support], diff[plan.support])
    off = np.setdiff1d(np.arange(1000), plan.support)
    assert np.all(plan.z[off] == 0.0)


def test_plan_sign_invariance():
    A = sample_ensemble(300, 4, 5)
    x0 = np.array([0.5, -1.0, 2.0, 0.3])
    p1 = build_adversary(A, x0, 0.2, AMPLITUDE, (0.2, 0.5))
    p2 = build_adversary(A, -x0, 0.2, AMPLITUDE, (0.2, 0.5))
    assert dist1(p1.x_star, p2.x_star) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(p1.z, p2.z, atol=1e-12)


def test_plan_errors():
    A = sample_ensemble(10, 2, 0)
    with pytest.raises(ValueError):
        build_adversary(A, np.ones(2), 0.05, AMPLITUDE, (0.0, 1.0))
    with pytest.raises(ValueError):
        build_adversary(A, np.zeros(2), 0.3, AMPLITUDE, (0.0, 1.0))


@pytest.mark.parametrize("kind", [AMPLITUDE, INTENSITY])
def test_decoy_beats_truth_above_threshold(kind):
    res = sharp_threshold(kind)
    s = res.threshold + 0.03
    A = sample_ensemble(2500, 5, 11)
    x0 = np.random.default_rng(11).standard_normal(5)
    plan = build_adversary(A, x0, s, kind, res.argmin_params)
    obs = corrupt(forward(A, x0, kind), kind, outlier=plan)
    assert objective(A, obs.b, plan.x_star, kind) <= objective(A, obs.b, x0, kind)


def test_corrupt_clean_passthrough():
    clean = np.array([1.0, 2.0, 0.5])
    obs = corrupt(clean, AMPLITUDE)
    assert np.array_equal(obs.b, clean) and obs.support.size == 0 and obs.fraction == 0.0


def test_corrupt_reassembles(rng):
    A = sample_ensemble(1000, 5, 9)
    x0 = rng.standard_normal(5)
    plan = build_adversary(A, x0, 0.1, AMPLITUDE, (0.0, 0.4))
    obs = corrupt(forward(A, x0, AMPLITUDE), AMPLITUDE, noise=NoiseSpec("uniform", 0.01), outlier=plan, seed=3)
    assert np.max(np.abs(obs.b - obs.clean - obs.omega - obs.z)) <= 1e-12
    assert np.abs(obs.omega).sum() / 1000 <= 0.01
    assert obs.support.size == 100 and obs.fraction == 0.1


def test_corrupt_random_outliers(rng):
    z = random_outliers(200, 0.1, 5.0, rng)
    assert np.count_nonzero(z) == 20 and np.max(np.abs(z)) <= 5.0
    obs = corrupt(np.ones(200), INTENSITY, outlier=z)
    assert obs.support.size == 20 and obs.fraction == pytest.approx(0.1)


def test_corrupt_errors():
    with pytest.raises(ValueError):
        corrupt(np.array([-1.0, 1.0]), AMPLITUDE)
    with pytest.raises(ValueError):
        corrupt(np.ones(3), AMPLITUDE, noise=np.zeros(2))
    A = sample_ensemble(100, 3, 0)
    plan = build_adversary(A, np.ones(3), 0.1, AMPLITUDE, (0.0, 1.0))
    with pytest.raises(ValueError):
        corrupt(np.ones(100), INTENSITY, outlier=plan)


def test_noise_spec_parse():
    assert NoiseSpec.parse("none") == NoiseSpec()
    assert NoiseSpec.parse("uniform:0.01") == NoiseSpec("uniform", 0.01)
    assert str(NoiseSpec("gaussian", 0.5)) == "gaussian:0.5"
    with pytest.raises(ValueError):
        NoiseSpec.parse("laplace:1")
    with pytest.raises(ValueError):
        NoiseSpec("uniform", -1.0)


def test_audit_round_trip(tmp_path):
    A = sample_ensemble(200, 3, 4)
    x0 = np.array([1.0, -2.0, 0.5])
    plan = build_adversary(A, x0, 0.15, AMPLITUDE, (0.0, 0.37))
    obs = corrupt(forward(A, x0, AMPLITUDE), AMPLITUDE, outlier=plan)
    rec = to_audit_record(obs, ensemble_seed=4)
    path = tmp_path / "audit.jsonl"
    write_audit([rec, rec], path)
    back = read_audit(path)
    assert back == [rec, rec]
    assert back[0]["support"] == [int(i) for i in plan.support]
    assert np.array_equal(np.array(back[0]["decoy"]), plan.x_star)
    # replay from the record alone reproduces the outlier vector
    replay = build_adversary(sample_ensemble(back[0]["m"], 3, back[0]["seed"]), x0, back[0]["s"], AMPLITUDE, tuple(back[0]["params_used"]))
    assert np.array_equal(replay.z, plan.z)
