"""Single-trace and sweep runners shared by the CLI and the test suites.

The sign dynamics with a constant learning rate settle into a small limit
cycle around the constrained minimizer (amplitude ~ lr/2 per coordinate),
so the reported converged iterate and loss are averages over a trailing
window of the trajectory rather than the raw final step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (DiscreteConfig, OptState, mix_momentum, step_explicit,
                       step_implicit)
from .errors import DomainViolation, NumericError
from .lyapunov import Diagnostics, coeffs, delta1, delta2, h_discrete
from .phi import TAU_DOM, PhiSpec, dom_distance
from .problems import Objective


@dataclass
class TraceResult:
    diagnostics: list[Diagnostics]
    xs: np.ndarray                 # (steps + 1, d) iterates including x0
    converged_x: np.ndarray        # tail-window mean iterate
    converged_f: float             # tail-window mean loss
    final_state: OptState


def _diag_row(step: int, f_val: float, cfg: DiscreteConfig, spec: PhiSpec,
              x: np.ndarray, m: np.ndarray, d1: float, d2: float,
              tau: float, with_h: bool = True) -> Diagnostics:
    dist = float(dom_distance(spec, cfg.lam * x))
    feasible = dist <= tau
    h = math.nan
    if with_h:
        try:
            h = h_discrete(cfg, spec, f_val, x, m)
        except ValueError:
            h = math.nan
    if math.isnan(d1) or math.isnan(d2):
        dtot = math.nan
    else:
        co = coeffs(cfg)
        dtot = co.a * d1 + co.b * d2
    return Diagnostics(step=step, f=f_val, h=h, delta1=d1, delta2=d2,
                       delta_total=dtot, dist_dom=dist, feasible=feasible,
                       linf_x=float(np.abs(x).max()),
                       phase=2 if feasible else 1)


def run_trace(objective: Objective, spec: PhiSpec, cfg: DiscreteConfig,
              x0, steps: int, scheme: str = "explicit",
              diagnostics: bool = True, tail_frac: float = 0.1,
              tau: float = TAU_DOM) -> TraceResult:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if scheme not in ("explicit", "implicit"):
        raise ValueError("scheme must be 'explicit' or 'implicit'")
    step_fn = step_explicit if scheme == "explicit" else step_implicit
    state = OptState(np.asarray(x0, dtype=float),
                     np.zeros(objective.dim), 0)

    xs = [state.x.copy()]
    rows: list[Diagnostics] = [
        _diag_row(0, objective.value(state.x), cfg, spec,
                  state.x, state.m, math.nan, math.nan, tau,
                  with_h=diagnostics)
    ]
    tail = max(1, int(round(steps * tail_frac)))
    acc_x = np.zeros(objective.dim)
    acc_f = 0.0
    for t in range(steps):
        g = objective.gradient(state.x)
        m_tilde = mix_momentum(cfg, state.m, g)
        new = step_fn(cfg, spec, state, g)
        if not np.all(np.isfinite(new.x)):
            raise NumericError(f"non-finite iterate at step {t + 1}")
        f_val = objective.value(new.x)
        d1 = d2 = math.nan
        if diagnostics:
            try:
                d1 = delta1(spec, cfg.lam, new.x, m_tilde, tol=tau)
            except DomainViolation:
                d1 = math.nan
            d2 = delta2(spec, m_tilde, new.m)
        rows.append(_diag_row(t + 1, f_val, cfg, spec, new.x, new.m,
                              d1, d2, tau, with_h=diagnostics))
        state = new
        xs.append(state.x.copy())
        if t >= steps - tail:
            acc_x += state.x
            acc_f += f_val
    return TraceResult(diagnostics=rows, xs=np.array(xs),
                       converged_x=acc_x / tail, converged_f=acc_f / tail,
                       final_state=state)


def sweep_lambda(objective: Objective, spec: PhiSpec, cfg: DiscreteConfig,
                 x0, steps: int, lambdas: list[float],
                 scheme: str = "explicit", tail_frac: float = 0.1,
                 flat_tol: float = 1e-4, threads: int = 1) -> dict:
    """Converged loss per weight decay and the flat-region departure point.

    lambda0 is the midpoint between the last lambda whose converged loss
    sits within `flat_tol` of the sweep minimum and the first that departs.
    """
    if len(lambdas) < 2:
        raise ValueError("need at least two lambdas")

    def one(lam: float):
        c = DiscreteConfig(lr=cfg.lr, lam=lam, beta1=cfg.beta1, beta2=cfg.beta2)
        res = run_trace(objective, spec, c, x0, steps, scheme=scheme,
                        diagnostics=False, tail_frac=tail_frac)
        feas = dom_distance(spec, lam * res.converged_x) <= TAU_DOM
        return res.converged_f, bool(feas)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, lambdas))
    else:
        results = [one(lam) for lam in lambdas]

    losses = np.array([r[0] for r in results])
    base = losses.min()
    departed = losses > base + flat_tol
    lam0 = math.nan
    for i in range(1, len(lambdas)):
        if departed[i] and not departed[i - 1]:
            lam0 = 0.5 * (lambdas[i - 1] + lambdas[i])
            break
    return {
        "lambdas": list(lambdas),
        "losses": [float(v) for v in losses],
        "feasible": [r[1] for r in results],
        "lambda0": lam0,
    }
