"""Shared test utilities: random stable model draws and Monte Carlo SEs."""

from __future__ import annotations

import numpy as np

from armadesign.models import ArmaModel, companion_matrix


def random_stable_arma(
    rng: np.random.Generator,
    p_max: int = 3,
    q_max: int = 3,
    radius: float = 0.95,
    b: float = 0.05,
) -> ArmaModel:
    """Draw an ARMA(p<=p_max, q<=q_max) model with AR spectral radius < radius.

    Coefficients are uniform on (-1, 1) with rejection on the companion
    spectral radius, so every returned model is strictly stationary.
    """
    while True:
        p = int(rng.integers(0, p_max + 1))
        q = int(rng.integers(0, q_max + 1))
        a = rng.uniform(-1.0, 1.0, size=p)
        if p and np.max(np.abs(np.linalg.eigvals(companion_matrix(a)))) >= radius:
            continue
        theta = rng.uniform(-1.0, 1.0, size=q)
        sigma2 = float(rng.uniform(0.25, 4.0))
        mu = float(rng.uniform(-1.0, 1.0))
        return ArmaModel(mu=mu, a=tuple(a), b=b, theta=tuple(theta), sigma2=sigma2)


def batch_se(x: np.ndarray, n_batches: int = 500) -> float:
    """Batch-means standard error of the mean of a (possibly dependent) series."""
    x = np.asarray(x, dtype=float)
    n_batches = min(n_batches, len(x))
    bs = len(x) // n_batches
    means = x[: n_batches * bs].reshape(n_batches, bs).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(n_batches))


def se_of_mean(x) -> float:
    """Plain iid standard error of the mean."""
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1) / np.sqrt(len(x)))
