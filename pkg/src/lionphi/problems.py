"""Test objectives with exact gradients and smoothness constants, plus
seeded stochastic gradient oracles with declared variance.

All randomness flows through numpy's Philox counter-based generator keyed
by explicit 64-bit seeds, so every sampled gradient is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Objective:
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    smoothness_L: float | None = None
    unconstrained_min: np.ndarray | None = None


def quadratic(center, scale=None) -> Objective:
    """f(x) = (x - c)^T A (x - c) for a PSD A.

    `scale` may be None (identity), a vector (diagonal), or a full
    symmetric PSD matrix.  L = 2 * lambda_max(A).
    """
    c = np.asarray(center, dtype=float)
    d = c.shape[0]
    if scale is None:
        A = np.eye(d)
    else:
        A = np.asarray(scale, dtype=float)
        if A.ndim == 1:
            A = np.diag(A)
    if A.shape != (d, d):
        raise ValueError("scale shape mismatch")
    A = 0.5 * (A + A.T)
    lmax = float(np.linalg.eigvalsh(A).max())

    def value(x):
        r = np.asarray(x, dtype=float) - c
        return float(r @ A @ r)

    def gradient(x):
        r = np.asarray(x, dtype=float) - c
        return 2.0 * (A @ r)

    return Objective(dim=d, value=value, gradient=gradient,
                     smoothness_L=2.0 * lmax, unconstrained_min=c.copy())


def _power_iteration_sq_norm(X: np.ndarray, iters: int = 20,
                             tol: float = 1e-8) -> float:
    """Largest eigenvalue of X^T X by power iteration."""
    rng = np.random.Generator(np.random.Philox(key=0))
    v = rng.normal(size=X.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = X.T @ (X @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v_new = w / nw
        lam_new = float(v_new @ (X.T @ (X @ v_new)))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        v, lam = v_new, lam_new
    return lam


def logistic_regression(features, labels, reg: float = 0.0) -> Objective:
    """Mean logistic loss over +-1 labels plus (reg/2)|w|^2."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("features must be (n, d) with matching labels (n,)")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +-1")
    if reg < 0:
        raise ValueError("reg must be >= 0")
    n, d = X.shape

    def value(w):
        z = -y * (X @ np.asarray(w, dtype=float))
        return float(np.mean(np.logaddexp(0.0, z))) + 0.5 * reg * float(w @ w)

    def gradient(w):
        w = np.asarray(w, dtype=float)
        s = 1.0 / (1.0 + np.exp(y * (X @ w)))  # sigmoid(-y Xw)
        return -(X.T @ (y * s)) / n + reg * w

    L = _power_iteration_sq_norm(X) / (4.0 * n) + reg
    return Objective(dim=d, value=value, gradient=gradient, smoothness_L=L)


def load_logistic_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Dataset format: label column first (+-1), then features, no header."""
    raw = np.loadtxt(path, delimiter=",", ndmin=2)
    return raw[:, 1:], raw[:, 0]


def synthetic_logistic(n: int, d: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Separable-ish planted-weight dataset for desk-scale experiments."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    X = rng.normal(size=(n, d))
    w_true = rng.normal(size=d)
    p = 1.0 / (1.0 + np.exp(-X @ w_true))
    y = np.where(rng.uniform(size=n) < p, 1.0, -1.0)
    return X, y


@dataclass(frozen=True)
class GaussianIID:
    sigma: float


@dataclass(frozen=True)
class MinibatchSubset:
    features: np.ndarray
    labels: np.ndarray
    reg: float = 0.0


@dataclass(frozen=True)
class StochasticOracle:
    """Gradient sampler around a base objective.

    GaussianIID adds N(0, sigma^2 / n_batch * I) to the exact gradient;
    MinibatchSubset averages n_batch rows drawn uniformly without
    replacement.  Either way E[g] equals the base gradient.
    """

    base: Objective
    noise_model: GaussianIID | MinibatchSubset = field(default_factory=lambda: GaussianIID(0.0))
    n_batch: int = 1

    def __post_init__(self):
        if self.n_batch < 1:
            raise ValueError("n_batch must be >= 1")
        nm = self.noise_model
        if isinstance(nm, MinibatchSubset) and self.n_batch > len(nm.labels):
            raise ValueError("n_batch exceeds dataset size")


def sample_gradient(oracle: StochasticOracle, x, rng_seed: int) -> np.ndarray:
    """One unbiased gradient draw, bit-reproducible in `rng_seed`."""
    x = np.asarray(x, dtype=float)
    rng = np.random.Generator(np.random.Philox(key=int(rng_seed) & (2**64 - 1)))
    nm = oracle.noise_model
    if isinstance(nm, GaussianIID):
        g = oracle.base.gradient(x)
        if nm.sigma == 0.0:
            return g
        return g + rng.normal(size=x.shape) * (nm.sigma / np.sqrt(oracle.n_batch))
    X, y = nm.features, nm.labels
    idx = rng.choice(len(y), size=oracle.n_batch, replace=False)
    Xb, yb = X[idx], y[idx]
    s = 1.0 / (1.0 + np.exp(yb * (Xb @ x)))
    return -(Xb.T @ (yb * s)) / oracle.n_batch + nm.reg * x
