"""Monte Carlo estimates with their standard errors."""

from dataclasses import dataclass, asdict

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo mean with standard error and RNG provenance."""

    value: float
    stderr: float
    n_paths: int
    seed: int | None = None

    def zscore(self, target):
        if self.stderr == 0:
            return 0.0 if self.value == target else np.copysign(np.inf, self.value - target)
        return (self.value - target) / self.stderr

    def within(self, target, k=3.0):
        return abs(self.value - target) <= k * self.stderr

    def as_dict(self):
        return asdict(self)


def mean_estimate(samples, seed=None):
    samples = np.asarray(samples, dtype=float).ravel()
    n = samples.size
    if n == 0:
        raise ValueError("no samples")
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Estimate(mean, se, n, seed)


def variance_estimate(samples, seed=None):
    """Sample variance with the delta-method standard error ``sqrt((m4 - s^4)/N)``."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    d = x - x.mean()
    var = float(np.mean(d * d) * n / (n - 1))
    m4 = float(np.mean(d ** 4))
    return Estimate(var, float(np.sqrt(max(m4 - var * var, 0.0) / n)), n, seed)


def proportion_estimate(hits, seed=None):
    """Binomial proportion with standard error ``sqrt(p (1-p) / N)``."""
    hits = np.asarray(hits, dtype=bool).ravel()
    n = hits.size
    p = float(hits.mean())
    return Estimate(p, float(np.sqrt(p * (1.0 - p) / n)), n, seed)
