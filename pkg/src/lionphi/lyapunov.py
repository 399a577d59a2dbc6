"""Descent certificates: Lyapunov values, gap terms, rates, decompositions.

The discrete Lyapunov function used throughout is

    H(x, m) = f(x) + (1/lam) phi*(lam x)
              + (lr * beta1 / D) * (phi*(lam x) + phi(m) - lam * x.m)

with D = lr*lam*(1 - beta1) + (1 - beta2).  Its gap coefficient equals
c / lam where c = a - 1 and a, b are the telescoping coefficients below;
this is the unique scaling for which one implicit step satisfies

    H_{t+1} - H_t <= -lr * (a*D1 + b*D2) + (L*lr^2/2) * |dphi(m~) - lam*x_{t+1}|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ContinuousConfig, DiscreteConfig
from .errors import DomainViolation
from .phi import (TAU_DOM, PhiSpec, dom_distance, phi_conj_subgrad,
                  phi_conj_value, phi_subgrad, phi_value)


@dataclass
class Diagnostics:
    """Per-step record of one optimization trace."""

    step: int
    f: float
    h: float                      # may be inf during Phase 1
    delta1: float                 # nan when not computable (Phase 1)
    delta2: float
    delta_total: float            # a * delta1 + b * delta2
    dist_dom: float
    feasible: bool
    linf_x: float
    phase: int
    descent_residual: float | None = None


@dataclass(frozen=True)
class LyapCoeffs:
    a: float
    b: float
    c: float  # = a - 1 = (a+b)*beta1 - b*beta2


def fenchel_gap(spec: PhiSpec, lam: float, x, m) -> float:
    """phi*(lam x) + phi(m) - lam * x.m >= 0 (Fenchel-Young); inf outside dom."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    return phi_conj_value(spec, lam * x) + phi_value(spec, m) - lam * float(x @ m)


def h_continuous(ccfg: ContinuousConfig, spec: PhiSpec, f_val: float, x, m) -> float:
    """Continuous-time Lyapunov value; inf iff lam*x lies outside dom(phi*)."""
    if ccfg.lam <= 0:
        raise ValueError("h_continuous requires lambda > 0")
    x = np.asarray(x, dtype=float)
    conj = phi_conj_value(spec, ccfg.lam * x)
    if math.isinf(conj):
        return math.inf
    eta = (1.0 - ccfg.epsilon * ccfg.gamma) / (1.0 + ccfg.epsilon * ccfg.lam)
    gap = conj + phi_value(spec, np.asarray(m, dtype=float)) - ccfg.lam * float(x @ np.asarray(m, dtype=float))
    return ccfg.alpha * f_val + (ccfg.gamma / ccfg.lam) * conj + eta * gap


def _gap_coeff(cfg: DiscreteConfig) -> float:
    return cfg.lr * cfg.beta1 / (
        cfg.lr * cfg.lam * (1.0 - cfg.beta1) + (1.0 - cfg.beta2)
    )


def h_discrete(cfg: DiscreteConfig, spec: PhiSpec, f_val: float, x, m) -> float:
    """Discrete Lyapunov value; the lam = 0 limit drops the (1/lam) phi* term."""
    if cfg.beta2 <= cfg.beta1:
        raise ValueError("discrete Lyapunov requires beta2 > beta1")
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    coef = _gap_coeff(cfg)
    if cfg.lam == 0.0:
        return f_val + coef * phi_value(spec, m)
    conj = phi_conj_value(spec, cfg.lam * x)
    if math.isinf(conj):
        return math.inf
    gap = conj + phi_value(spec, m) - cfg.lam * float(x @ m)
    return f_val + conj / cfg.lam + coef * gap


def delta1(spec: PhiSpec, lam: float, x_next, m_tilde,
           tol: float = TAU_DOM) -> float:
    """(dphi(m~) - lam*x) . (m~ - dphi*(lam*x)); nonnegative in Phase 2."""
    x_next = np.asarray(x_next, dtype=float)
    m_tilde = np.asarray(m_tilde, dtype=float)
    lx = lam * x_next
    conj_sub = phi_conj_subgrad(spec, lx, tol=tol)  # raises DomainViolation outside
    return float((phi_subgrad(spec, m_tilde) - lx) @ (m_tilde - conj_sub))


def delta2(spec: PhiSpec, m_tilde, m_next) -> float:
    """(dphi(m~) - dphi(m')) . (m~ - m') >= 0 by subgradient monotonicity."""
    m_tilde = np.asarray(m_tilde, dtype=float)
    m_next = np.asarray(m_next, dtype=float)
    return float((phi_subgrad(spec, m_tilde) - phi_subgrad(spec, m_next))
                 @ (m_tilde - m_next))


def coeffs(cfg: DiscreteConfig) -> LyapCoeffs:
    """Telescoping coefficients of the one-step descent inequality."""
    if cfg.beta2 <= cfg.beta1:
        raise ValueError("coefficients require beta2 > beta1")
    denom = cfg.lr * cfg.lam * (1.0 - cfg.beta1) + (1.0 - cfg.beta2)
    a = cfg.lr * cfg.lam * cfg.beta1 / denom + 1.0
    b = cfg.beta1 * (1.0 - cfg.beta2) / ((cfg.beta2 - cfg.beta1) * denom)
    return LyapCoeffs(a=a, b=b, c=a - 1.0)


def descent_residual(cfg: DiscreteConfig, spec: PhiSpec, L: float,
                     before: tuple, after: tuple, m_tilde,
                     tol: float = TAU_DOM) -> float:
    """Slack of the one-step descent inequality for an implicit step.

    `before` and `after` are (f, x, m) triples around one step; ``L`` is
    the caller-certified smoothness constant of f.  Valid steps satisfy
    residual <= ~1e-9 (float slack); both states must be Phase-2 feasible.
    """
    f0, x0, m0 = before
    f1, x1, m1 = after
    x1 = np.asarray(x1, dtype=float)
    m_tilde = np.asarray(m_tilde, dtype=float)
    for x in (x0, x1):
        if dom_distance(spec, cfg.lam * np.asarray(x, dtype=float)) > tol:
            raise DomainViolation("descent residual requires Phase-2 feasible states")
    h0 = h_discrete(cfg, spec, f0, x0, m0)
    h1 = h_discrete(cfg, spec, f1, x1, m1)
    co = coeffs(cfg)
    d1 = delta1(spec, cfg.lam, x1, m_tilde, tol=tol)
    d2 = delta2(spec, m_tilde, m1)
    vx = phi_subgrad(spec, m_tilde) - cfg.lam * x1
    return (h1 - h0) + cfg.lr * (co.a * d1 + co.b * d2) \
        - 0.5 * L * cfg.lr**2 * float(vx @ vx)


def phase1_rate_check(cfg: DiscreteConfig, spec: PhiSpec,
                      dists: list[float], slack: float = 1e-12) -> bool:
    """Check dist_t <= (1/(1+lr*lam))^(t-s) * dist_s + slack for all s <= t.

    Uses the running minimum of the geometrically-discounted envelope, so
    the check is O(T) and exact.
    """
    factor = 1.0 / (1.0 + cfg.lr * cfg.lam)
    env = math.inf
    for d in dists:
        if d > env * factor + slack:
            return False
        env = min(d, env * factor)
    return True


def decomposition_fields(ccfg: ContinuousConfig, spec: PhiSpec, x, m, grad,
                         tol: float = TAU_DOM) -> dict:
    """The paired fields of the implicit Hamiltonian-plus-descent split.

    Returns Vx, Vm (the dynamics), Vhat_x, Vhat_m (their monotone partners)
    and the scalars eta, eta_prime, satisfying

        grad_x H = -eta_prime * Vhat_x - eta * Vm
        grad_m H = -eta * Vhat_m + eta * Vx
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    grad = np.asarray(grad, dtype=float)
    m_tilde = m - ccfg.epsilon * (ccfg.alpha * grad + ccfg.gamma * m)
    vm = -ccfg.alpha * grad - ccfg.gamma * m
    vx = phi_subgrad(spec, m_tilde) - ccfg.lam * x
    vhat_x = m_tilde - phi_conj_subgrad(spec, ccfg.lam * x, tol=tol)
    vhat_m = phi_subgrad(spec, m_tilde) - phi_subgrad(spec, m)
    return {
        "Vx": vx,
        "Vm": vm,
        "Vhat_x": vhat_x,
        "Vhat_m": vhat_m,
        "m_tilde": m_tilde,
        "eta": (1.0 - ccfg.epsilon * ccfg.gamma) / (1.0 + ccfg.epsilon * ccfg.lam),
        "eta_prime": (ccfg.gamma + ccfg.lam) / (1.0 + ccfg.epsilon * ccfg.lam),
    }


def stationarity_residual(ccfg: ContinuousConfig, spec: PhiSpec, x, grad,
                          tol: float = TAU_DOM) -> float:
    """sup-norm of alpha*grad + gamma*dphi*(lam*x); zero at stationary points
    of the composite objective."""
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    conj_sub = phi_conj_subgrad(spec, ccfg.lam * x, tol=tol)
    return float(np.abs(ccfg.alpha * grad + ccfg.gamma * conj_sub).max())
