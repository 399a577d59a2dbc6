"""Numerical verification of the stochastic-gradient analysis.

The central quantity is the noise-update correlation

    V = E[(g - E g) . dphi(beta1 * m + (1 - beta1) * g)]

for independent m and g.  Two candidate upper bounds are implemented:

* ``stein_bound``       eps * L_phi * var(Y) * sqrt(J(X)), which needs phi
                        itself Lipschitz (L_phi from ``value_lipschitz``)
                        and works for discontinuous subgradients via the
                        weak-derivative/Stein route;
* ``lipschitz_grad_bound``  L_dphi * (eps * var(Y) + sqrt(var(X) var(Y))),
                        which needs the subgradient map Lipschitz and so
                        excludes the sign-like kinds.

The source statements disagree on which hypothesis the lemma carries, so
the verification suites evaluate both and report which holds empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DiscreteConfig
from .phi import PhiSpec, phi_subgrad


@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic Gaussian with per-coordinate variance sigma2."""

    mean: np.ndarray
    sigma2: float
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0 for a finite Fisher information")
        if self.mean.shape != (self.dim,):
            raise ValueError("mean shape mismatch")


def covariance_term_stats(spec: PhiSpec, beta1: float, m_dist: GaussianSpec,
                          g_dist: GaussianSpec, samples: int, rng_seed: int,
                          n_groups: int = 100) -> tuple[float, float]:
    """Monte Carlo estimate of V and its standard error (group batching)."""
    if m_dist.dim != g_dist.dim:
        raise ValueError("dims must agree")
    rng = np.random.Generator(np.random.Philox(key=rng_seed))
    d = m_dist.dim
    per = max(1, samples // n_groups)
    means = np.empty(n_groups)
    for k in range(n_groups):
        m = m_dist.mean + rng.normal(size=(per, d)) * math.sqrt(m_dist.sigma2)
        g = g_dist.mean + rng.normal(size=(per, d)) * math.sqrt(g_dist.sigma2)
        u = phi_subgrad(spec, beta1 * m + (1.0 - beta1) * g)
        means[k] = float(((g - g_dist.mean) * u).sum(axis=-1).mean())
    est = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(n_groups))
    return est, se


def covariance_term_mc(spec: PhiSpec, beta1: float, m_dist: GaussianSpec,
                       g_dist: GaussianSpec, samples: int, rng_seed: int) -> float:
    est, _ = covariance_term_stats(spec, beta1, m_dist, g_dist, samples, rng_seed)
    return est


def stein_bound(L_phi: float, eps_coeff: float, var_Y: float, J_X: float) -> float:
    """Stein/Fisher route: eps * L_phi * var(Y) * sqrt(J(X))."""
    if min(L_phi, eps_coeff, var_Y, J_X) < 0:
        raise ValueError("all inputs must be >= 0")
    return eps_coeff * L_phi * var_Y * math.sqrt(J_X)


def lipschitz_grad_bound(L_dphi: float, eps_coeff: float, var_Y: float,
                         var_X: float) -> float:
    """Variance route for Lipschitz subgradient maps:
    L_dphi * (eps * var(Y) + sqrt(var(X) * var(Y)))."""
    if min(L_dphi, eps_coeff, var_Y, var_X) < 0:
        raise ValueError("all inputs must be >= 0")
    return L_dphi * (eps_coeff * var_Y + math.sqrt(var_X * var_Y))


def fisher_gaussian(spec: GaussianSpec) -> float:
    """J(X) = E|d log pi(X)|^2 = dim / sigma2 for the isotropic Gaussian."""
    return spec.dim / spec.sigma2


def ema_fisher_bound(beta2: float, J_max: float) -> float:
    """Fisher information of an exponential moving average of independent
    draws never exceeds ((1 + beta2) / (1 - beta2)) * J_max."""
    if not 0.0 < beta2 < 1.0:
        raise ValueError("beta2 must lie in (0, 1)")
    return (1.0 + beta2) / (1.0 - beta2) * J_max


def gaussian_ema_variance(beta2: float, sigma2_g: float, sigma2_m0: float,
                          t: int) -> float:
    """Exact per-coordinate variance of m_t = beta2*m_{t-1} - (1-beta2)*g_{t-1}
    for iid N(0, sigma2_g) gradients and N(0, sigma2_m0) initialization."""
    if t == 0:
        return sigma2_m0
    geo = (1.0 - beta2**(2 * t)) / (1.0 - beta2**2)
    return (1.0 - beta2) ** 2 * sigma2_g * geo + beta2 ** (2 * t) * sigma2_m0


def gaussian_ema_fisher(beta2: float, sigma2_g: float, sigma2_m0: float,
                        t: int, dim: int) -> float:
    """Exact J(m_t) = dim / Var(m_t) for the Gaussian EMA chain."""
    return dim / gaussian_ema_variance(beta2, sigma2_g, sigma2_m0, t)


def sgd_excess_term(cfg: DiscreteConfig, L_phi: float, J_max: float,
                    v_max: float, n_batch: int) -> float:
    """Per-step additive excess of the stochastic descent bound,

        C / sqrt(n_batch),
        C = L_phi / (beta1 * (1 + lam*lr)) * sqrt((1+beta2)/(1-beta2))
            * sqrt(J_max) * v_max.
    """
    if n_batch < 1:
        raise ValueError("n_batch must be >= 1")
    C = (L_phi / (cfg.beta1 * (1.0 + cfg.lam * cfg.lr))
         * math.sqrt((1.0 + cfg.beta2) / (1.0 - cfg.beta2))
         * math.sqrt(J_max) * v_max)
    return C / math.sqrt(n_batch)
