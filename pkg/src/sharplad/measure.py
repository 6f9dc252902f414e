"""Gaussian ensembles, forward maps, corruption and adversarial outliers.

Signals are plain 1-D float arrays. ``kind`` selects the measurement:
``"amplitude"`` gives |<a_i, x>|, ``"intensity"`` gives <a_i, x>^2.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .balance import AMPLITUDE, INTENSITY, KINDS

__all__ = [
    "GaussianEnsemble",
    "CorruptedObservation",
    "AdversaryPlan",
    "NoiseSpec",
    "sample_ensemble",
    "forward",
    "dist1",
    "dist2",
    "orthogonal_unit",
    "top_fraction_support",
    "build_adversary",
    "random_outliers",
    "corrupt",
    "to_audit_record",
    "write_audit",
    "read_audit",
]

MAX_ENTRIES = 10**9


def _power(kind):
    if kind == AMPLITUDE:
        return 1
    if kind == INTENSITY:
        return 2
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


@dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    """m x n matrix with i.i.d. N(0, 1) entries, reproducible from the seed."""

    matrix: np.ndarray
    seed: int

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]


def sample_ensemble(m, n, seed):
    """Draw an m x n standard Gaussian matrix from a Philox stream.

    Philox is counter-based, so (seed, m, n) fixes the matrix bit-exactly
    on every platform numpy supports.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if m * n > MAX_ENTRIES:
        raise ValueError(f"m * n = {m * n} exceeds the {MAX_ENTRIES} entry guard")
    rng = np.random.Generator(np.random.Philox(seed))
    return GaussianEnsemble(rng.standard_normal((m, n)), int(seed))


def _matrix(A):
    return A.matrix if isinstance(A, GaussianEnsemble) else np.asarray(A, dtype=float)


def forward(A, x, kind):
    """|Ax| (amplitude) or |Ax|^2 (intensity)."""
    M = _matrix(A)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != M.shape[1]:
        raise ValueError(f"signal of shape {x.shape} does not match A of shape {M.shape}")
    return np.abs(M @ x) ** _power(kind)


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def dist1(x, y):
    """min(||x - y||, ||x + y||)."""
    x, y = _pair(x, y)
    return float(min(np.linalg.norm(x - y), np.linalg.norm(x + y)))


def dist2(x, y):
    """||x - y|| * ||x + y||."""
    x, y = _pair(x, y)
    return float(np.linalg.norm(x - y) * np.linalg.norm(x + y))


def dist(x, y, kind):
    return dist1(x, y) if _power(kind) == 1 else dist2(x, y)


def orthogonal_unit(x):
    """Deterministic unit vector orthogonal to ``x``.

    Gram-Schmidt on the first standard basis vector that is not parallel to
    ``x`` (lowest index wins), signed by the first nonzero entry of ``x`` so
    that ``orthogonal_unit(-x) == -orthogonal_unit(x)``.
    """
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise ValueError("x must be nonzero")
    if x.shape[0] < 2:
        raise ValueError("no orthogonal direction exists for n = 1")
    u = x / nx
    sign = np.sign(x[np.flatnonzero(x)[0]])
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = 1.0
        v = e - u[i] * u
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            return sign * v / nv
    raise AssertionError("unreachable for n >= 2")


def top_fraction_support(values, k):
    """Indices of the k largest ``values``, ties broken by lower index."""
    order = np.argsort(-np.asarray(values), kind="stable")
    return np.sort(order[:k])


@dataclass(frozen=True, eq=False)
class AdversaryPlan:
    """Decoy signal plus the outlier vector that makes it look optimal."""

    kind: str
    x_star: np.ndarray
    support: np.ndarray
    z: np.ndarray
    params_used: tuple
    fraction: float


def decoy_signal(x0, kind, params):
    """Decoy x_star for the truth ``x0``.

    amplitude: ``params = (rho, alpha)``; x_star has correlation rho with x0
    and norm alpha * ||x0||.
    intensity: ``params = (rho,)``; x_star = c ||x0|| x0_perp with
    c = sqrt((1 - rho) / (1 + rho)), so the unit vectors along x0 - x_star
    and x0 + x_star have inner product rho.
    """
    x0 = np.asarray(x0, dtype=float)
    nx = np.linalg.norm(x0)
    if nx == 0.0:
        raise ValueError("x0 must be nonzero")
    perp = orthogonal_unit(x0)
    if _power(kind) == 1:
        rho, alpha = params
        return alpha * (rho * x0 + math.sqrt(max(1.0 - rho * rho, 0.0)) * nx * perp)
    (rho,) = params
    if not (0.0 <= rho < 1.0):
        raise ValueError("intensity decoy needs rho in [0, 1)")
    return math.sqrt((1.0 - rho) / (1.0 + rho)) * nx * perp


def build_adversary(A, x0, s, kind, threshold_params):
    """Adaptive outliers that make a decoy at least as good as the truth.

    The support is the floor(s m) rows where the decoy and the truth
    disagree most, and on those rows the observation is replaced by the
    decoy's measurement.
    """
    M = _matrix(A)
    m = M.shape[0]
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie in (0, 1)")
    k = int(math.floor(s * m))
    if k < 1:
        raise ValueError(f"s * m = {s * m:.3g} < 1 leaves no outliers")
    x0 = np.asarray(x0, dtype=float)
    x_star = decoy_signal(x0, kind, tuple(threshold_params))
    diff = forward(M, x_star, kind) - forward(M, x0, kind)
    support = top_fraction_support(np.abs(diff), k)
    z = np.zeros(m)
    z[support] = diff[support]
    return AdversaryPlan(kind, x_star, support, z, tuple(threshold_params), float(s))


@dataclass(frozen=True)
class NoiseSpec:
    """Dense noise model: ``none``, ``uniform`` on [-sigma, sigma] or ``gaussian``."""

    model: str = "none"
    sigma: float = 0.0

    def __post_init__(self):
        if self.model not in ("none", "uniform", "gaussian"):
            raise ValueError(f"unknown noise model {self.model!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @classmethod
    def parse(cls, text):
        """Parse ``none``, ``uniform:0.01`` or ``gaussian:0.01``."""
        if text in (None, "", "none"):
            return cls()
        model, _, sigma = text.partition(":")
        return cls(model, float(sigma or 0.0))

    def sample(self, m, rng):
        if self.model == "none" or self.sigma == 0.0:
            return np.zeros(m)
        if self.model == "uniform":
            return rng.uniform(-self.sigma, self.sigma, size=m)
        return self.sigma * rng.standard_normal(m)

    def __str__(self):
        return "none" if self.model == "none" else f"{self.model}:{self.sigma:g}"


def random_outliers(m, s, scale, rng):
    """Non-adaptive sparse outliers: floor(s m) uniformly chosen rows get
    values uniform on [-scale, scale] (rejected if exactly zero)."""
    if not (0.0 <= s < 1.0):
        raise ValueError("s must lie in [0, 1)")
    k = int(math.floor(s * m))
    z = np.zeros(m)
    idx = rng.choice(m, size=k, replace=False)
    vals = rng.uniform(-scale, scale, size=k)
    vals[vals == 0.0] = scale
    z[idx] = vals
    return z


@dataclass(frozen=True, eq=False)
class CorruptedObservation:
    """b = clean + omega + z, with the decomposition kept for auditing."""

    kind: str
    b: np.ndarray
    clean: np.ndarray
    omega: np.ndarray
    z: np.ndarray
    support: np.ndarray
    fraction: float
    seed: int = None
    plan: AdversaryPlan = field(default=None, repr=False)


def corrupt(clean, kind, noise=None, outlier=None, rng=None, seed=None):
    """Assemble a corrupted observation.

    ``noise`` is a :class:`NoiseSpec` (sampled with ``rng``) or an explicit
    m-vector. ``outlier`` is an :class:`AdversaryPlan`, an explicit sparse
    m-vector, or None.
    """
    clean = np.asarray(clean, dtype=float)
    m = clean.shape[0]
    if np.any(clean < 0):
        raise ValueError("clean measurements must be nonnegative")
    if noise is None:
        omega = np.zeros(m)
    elif isinstance(noise, NoiseSpec):
        if rng is None:
            rng = np.random.default_rng(seed)
        omega = noise.sample(m, rng)
    else:
        omega = np.asarray(noise, dtype=float)
    plan = None
    if outlier is None:
        z = np.zeros(m)
    elif isinstance(outlier, AdversaryPlan):
        if outlier.kind != kind:
            raise ValueError(f"plan kind {outlier.kind!r} does not match {kind!r}")
        plan = outlier
        z = outlier.z
    else:
        z = np.asarray(outlier, dtype=float)
    if omega.shape != (m,) or z.shape != (m,):
        raise ValueError("noise and outlier vectors must have length m")
    support = np.flatnonzero(z) if plan is None else plan.support
    if plan is not None and np.any(z[np.setdiff1d(np.arange(m), support)] != 0):
        raise ValueError("plan outliers leak outside their support")
    fraction = plan.fraction if plan is not None else support.size / m
    return CorruptedObservation(
        kind, clean + omega + z, clean, omega, z, support, fraction, seed, plan
    )


def to_audit_record(obs, ensemble_seed=None):
    """JSON-serializable replay record for an observation."""
    rec = {
        "kind": obs.kind,
        "seed": ensemble_seed if ensemble_seed is not None else obs.seed,
        "s": obs.fraction,
        "m": int(obs.b.shape[0]),
        "support": [int(i) for i in obs.support],
        "z_support_values": [float(v) for v in obs.z[obs.support]],
    }
    if obs.plan is not None:
        rec["decoy"] = [float(v) for v in obs.plan.x_star]
        rec["params_used"] = [float(v) for v in obs.plan.params_used]
    return rec


def write_audit(records, path):
    """Write records as JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_audit(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
