"""Deterministic in-process simulation of sign-compressed distributed
training: N workers hold private momenta and gradient oracles, ship
ternary update vectors, and the server aggregates and applies the update
with decoupled decay.

Channel is lossless, ordered and synchronous; byte accounting assumes a
2-bit encoding per ternary coordinate upstream and 64-bit floats for the
uncompressed baseline and the downstream broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DiscreteConfig, mix_momentum
from .errors import DomainViolation
from .lyapunov import delta1, delta2
from .phi import PhiSpec, dom_distance, phi_subgrad, yields_ternary
from .problems import StochasticOracle, sample_gradient

RULES = ("average_signs", "majority_sign", "global_lion")
COMPRESSED_RULES = ("average_signs", "majority_sign")


@dataclass
class WorkerState:
    id: int
    m: np.ndarray
    seed: int

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)


@dataclass(frozen=True)
class CommStats:
    bits_upstream_per_round: int
    bits_downstream_per_round: int
    rounds: int


@dataclass
class DistributedResult:
    trajectory: list[np.ndarray]
    comm: CommStats
    rows: list[dict] = field(default_factory=list)


def _draw(worker: WorkerState, cfg: DiscreteConfig, oracle: StochasticOracle,
          x: np.ndarray, round: int):
    g = sample_gradient(oracle, x, worker.seed ^ round)
    m_tilde = mix_momentum(cfg, worker.m, g)
    m_next = cfg.beta2 * worker.m - (1.0 - cfg.beta2) * g
    return m_tilde, m_next


def worker_round(worker: WorkerState, cfg: DiscreteConfig, spec: PhiSpec,
                 oracle: StochasticOracle, x, round: int,
                 binary_zero_to_one: bool = False):
    """One local round: sample a gradient at the shared iterate, emit the
    compressed update u = dphi(m~), advance the private momentum."""
    x = np.asarray(x, dtype=float)
    m_tilde, m_next = _draw(worker, cfg, oracle, x, round)
    u = phi_subgrad(spec, m_tilde)
    if binary_zero_to_one:
        u = np.where(u == 0.0, 1.0, u)
    return u, WorkerState(worker.id, m_next, worker.seed)


def aggregate(rule: str, updates: list[np.ndarray]) -> np.ndarray:
    """Combine per-worker ternary votes into the server-side direction."""
    if not updates:
        raise ValueError("aggregate needs at least one update")
    if rule == "average_signs":
        return np.mean(updates, axis=0)
    if rule == "majority_sign":
        return np.sign(np.sum(updates, axis=0))
    raise ValueError(f"rule {rule!r} is not an aggregation of update vectors")


def server_round(x, agg, cfg: DiscreteConfig) -> np.ndarray:
    """x' = x + lr * (agg - lam * x): explicit decoupled decay at the server."""
    x = np.asarray(x, dtype=float)
    return x + cfg.lr * (np.asarray(agg, dtype=float) - cfg.lam * x)


def comm_stats(rule: str, n_workers: int, dim: int, rounds: int) -> CommStats:
    if rule in COMPRESSED_RULES:
        up = n_workers * 2 * dim
    else:
        up = n_workers * 64 * dim
    return CommStats(bits_upstream_per_round=up,
                     bits_downstream_per_round=n_workers * 64 * dim,
                     rounds=rounds)


def run_distributed(cfg: DiscreteConfig, spec: PhiSpec, rule: str,
                    oracles: list[StochasticOracle], x0, rounds: int,
                    binary_zero_to_one: bool = False,
                    record: bool = True) -> DistributedResult:
    """Run `rounds` synchronous rounds; deterministic given worker seeds.

    Workers are processed in id order; per-round rows record the loss,
    the constraint distance, cumulative bits, and per-worker gap terms
    (delta1 is NaN while lam*x is infeasible).
    """
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}")
    if not oracles:
        raise ValueError("need at least one worker oracle")
    base = oracles[0].base
    if any(o.base is not base for o in oracles):
        raise ValueError("all workers must share the same base objective")
    if rule in COMPRESSED_RULES and not yields_ternary(spec):
        raise ValueError(f"rule {rule!r} requires a ternary subgradient kind")

    n = len(oracles)
    x = np.asarray(x0, dtype=float)
    d = x.shape[0]
    workers = [WorkerState(i, np.zeros(d), seed=i + 1) for i in range(n)]
    if len({w.seed for w in workers}) != n:
        raise ValueError("worker seeds must be distinct")
    stats = comm_stats(rule, n, d, rounds)
    bits_round = stats.bits_upstream_per_round + stats.bits_downstream_per_round

    traj = [x.copy()]
    rows: list[dict] = []
    for t in range(rounds):
        tilde = []
        nexts = []
        us = []
        for w, o in zip(workers, oracles):
            m_tilde, m_next = _draw(w, cfg, o, x, t)
            tilde.append(m_tilde)
            nexts.append(m_next)
            if rule in COMPRESSED_RULES:
                u = phi_subgrad(spec, m_tilde)
                if binary_zero_to_one:
                    u = np.where(u == 0.0, 1.0, u)
                us.append(u)
        if rule == "global_lion":
            agg = phi_subgrad(spec, np.mean(tilde, axis=0))
        else:
            agg = aggregate(rule, us)
        x = server_round(x, agg, cfg)
        for w, m_next in zip(workers, nexts):
            w.m = m_next
        traj.append(x.copy())
        if record:
            row = {
                "round": t + 1,
                "loss": base.value(x),
                "dist_dom": float(dom_distance(spec, cfg.lam * x)),
                "bits_cum": bits_round * (t + 1),
            }
            for w, m_tilde, m_next in zip(workers, tilde, nexts):
                try:
                    row[f"w{w.id}_delta1"] = delta1(spec, cfg.lam, x, m_tilde)
                except DomainViolation:
                    row[f"w{w.id}_delta1"] = math.nan
                row[f"w{w.id}_delta2"] = delta2(spec, m_tilde, m_next)
            rows.append(row)
    return DistributedResult(trajectory=traj, comm=stats, rows=rows)
