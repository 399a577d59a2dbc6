"""Discrete sign-momentum steps, the continuous-time field, and reductions.

The discrete update (explicit weight decay) is

    m_{t+1} = beta2 * m_t - (1 - beta2) * g_t
    x_{t+1} = x_t + lr * (dphi(beta1 * m_t - (1 - beta1) * g_t) - lam * x_t)

and the semi-implicit variant divides the x-update by (1 + lr*lam) instead
of subtracting lr*lam*x_t; the two are algebraically identical after the
learning-rate remap lr -> lr / (1 + lr*lam).

The continuous-time field is

    mdot = -alpha * grad - gamma * m
    xdot = dphi(m + eps * mdot) - lam * x
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericError
from .phi import SMOOTH_KINDS, PhiSpec, phi_subgrad


@dataclass(frozen=True)
class DiscreteConfig:
    lr: float
    lam: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.99

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        for b in (self.beta1, self.beta2):
            if not 0.0 < b < 1.0:
                raise ValueError("betas must lie in (0, 1)")

    def to_json(self) -> dict:
        return {"lr": self.lr, "lambda": self.lam,
                "beta1": self.beta1, "beta2": self.beta2}

    @staticmethod
    def from_json(obj: dict) -> "DiscreteConfig":
        return DiscreteConfig(lr=obj["lr"], lam=obj.get("lambda", 0.0),
                              beta1=obj.get("beta1", 0.9),
                              beta2=obj.get("beta2", 0.99))


@dataclass(frozen=True)
class ContinuousConfig:
    alpha: float
    gamma: float
    lam: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        # gamma = 0 is admitted for the undamped special case
        if self.gamma < 0 or self.lam < 0 or self.epsilon < 0:
            raise ValueError("gamma, lambda, epsilon must be >= 0")
        if self.epsilon * self.gamma > 1.0 + 1e-15:
            raise ValueError("requires epsilon * gamma <= 1")

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "gamma": self.gamma,
                "lambda": self.lam, "epsilon": self.epsilon}

    @staticmethod
    def from_json(obj: dict) -> "ContinuousConfig":
        return ContinuousConfig(alpha=obj["alpha"], gamma=obj["gamma"],
                                lam=obj.get("lambda", 0.0),
                                epsilon=obj.get("epsilon", 0.0))


@dataclass(frozen=True)
class OptState:
    x: np.ndarray
    m: np.ndarray
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float))
        if self.x.shape != self.m.shape:
            raise ValueError("x and m must share a shape")


def mix_momentum(cfg: DiscreteConfig, m: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """The sign argument m~ = beta1 * m - (1 - beta1) * grad."""
    return cfg.beta1 * m - (1.0 - cfg.beta1) * np.asarray(grad, dtype=float)


def _check_grad(grad: np.ndarray, x: np.ndarray):
    grad = np.asarray(grad, dtype=float)
    if grad.shape != x.shape:
        raise ValueError("gradient shape mismatch")
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient")
    return grad


def step_explicit(cfg: DiscreteConfig, spec: PhiSpec, state: OptState,
                  grad) -> OptState:
    """One explicit-decay step; caller supplies grad = df/dx at state.x."""
    g = _check_grad(grad, state.x)
    update = phi_subgrad(spec, mix_momentum(cfg, state.m, g))
    x_next = state.x + cfg.lr * (update - cfg.lam * state.x)
    m_next = cfg.beta2 * state.m - (1.0 - cfg.beta2) * g
    return OptState(x_next, m_next, state.t + 1)


def step_implicit(cfg: DiscreteConfig, spec: PhiSpec, state: OptState,
                  grad) -> OptState:
    """One semi-implicit step: decay is applied at x_{t+1}."""
    g = _check_grad(grad, state.x)
    update = phi_subgrad(spec, mix_momentum(cfg, state.m, g))
    x_next = (state.x + cfg.lr * update) / (1.0 + cfg.lr * cfg.lam)
    m_next = cfg.beta2 * state.m - (1.0 - cfg.beta2) * g
    return OptState(x_next, m_next, state.t + 1)


def explicit_of_implicit(cfg: DiscreteConfig) -> DiscreteConfig:
    """Learning-rate remap under which the explicit step reproduces the
    implicit one: lr -> lr / (1 + lr * lambda)."""
    return replace(cfg, lr=cfg.lr / (1.0 + cfg.lr * cfg.lam))


def ode_rhs(ccfg: ContinuousConfig, spec: PhiSpec, x, m, grad):
    """Right-hand side (xdot, mdot) of the continuous-time dynamics."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    grad = np.asarray(grad, dtype=float)
    mdot = -ccfg.alpha * grad - ccfg.gamma * m
    m_tilde = m + ccfg.epsilon * mdot
    xdot = phi_subgrad(spec, m_tilde) - ccfg.lam * x
    return xdot, mdot


def integrate_rk4(ccfg: ContinuousConfig, spec: PhiSpec, state: OptState,
                  gradfn, h: float, steps: int) -> list[OptState]:
    """Classical fixed-step 4-stage integration of the field.

    Returns the trajectory including the initial state (length steps + 1).
    Nonsmooth reshapers are allowed but a warning is issued since the
    integrator's order guarantees need a smooth field.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    if spec.kind not in SMOOTH_KINDS:
        warnings.warn(
            f"RK4 on nonsmooth reshaper kind={spec.kind!r}; order guarantees do not apply",
            RuntimeWarning,
            stacklevel=2,
        )

    def field(x, m):
        return ode_rhs(ccfg, spec, x, m, gradfn(x))

    traj = [state]
    x, m = state.x.copy(), state.m.copy()
    for i in range(steps):
        k1x, k1m = field(x, m)
        k2x, k2m = field(x + 0.5 * h * k1x, m + 0.5 * h * k1m)
        k3x, k3m = field(x + 0.5 * h * k2x, m + 0.5 * h * k2m)
        k4x, k4m = field(x + h * k3x, m + h * k3m)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        m = m + (h / 6.0) * (k1m + 2 * k2m + 2 * k3m + k4m)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
            raise NumericError(f"non-finite state at integration step {i}")
        traj.append(OptState(x, m, state.t + i + 1))
    return traj


def nesterov_pair_step(beta2: float, b: float, lr: float, y, m, gradfn):
    """One step of the lookahead-momentum recursion

        m' = beta2 * m + (1 - beta2) * grad(y - b * lr * m)
        y' = y - lr * m'

    whose iterates x_t = y_t - b * lr * m_t reproduce the identity-reshaper
    (no-sign) update with beta1 = (1 + b) * beta2 - b.
    """
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    m_next = beta2 * m + (1.0 - beta2) * np.asarray(gradfn(y - b * lr * m), dtype=float)
    return y - lr * m_next, m_next


def frank_wolfe_step(spec: PhiSpec, lam: float, eps0: float, x, grad) -> np.ndarray:
    """Conditional-gradient step toward y* = dphi(-grad) / lam:
    x' = (1 - eps0) * x + eps0 * y*.

    Identical to an Euler step of the eps*gamma = 1, eps*alpha = 1
    reduction of the continuous field with step eps0 / lam.
    """
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if not 0.0 < eps0 <= 1.0:
        raise ValueError("eps0 must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    y_star = phi_subgrad(spec, -np.asarray(grad, dtype=float)) / lam
    return (1.0 - eps0) * x + eps0 * y_star
