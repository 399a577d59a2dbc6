"""Brute-force oracles for low dimensions, used by tests and `verify`.

These deliberately avoid the analytic catalog: conjugates are grid
suprema of the defining formula, domain membership is decided by a
radius-doubling growth test, and subgradient inequalities are checked by
direct sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .phi import PhiSpec, phi_subgrad, phi_value

GROWTH_THRESHOLD = 0.1  # absolute growth under radius doubling that flags +inf


@dataclass(frozen=True)
class GridSpec:
    radius: float
    step: float
    dim: int

    def __post_init__(self):
        if not (self.radius > 0 and self.step > 0 and self.step < self.radius):
            raise ValueError("need 0 < step < radius")
        if self.dim > 3:
            raise ValueError("grid oracles are restricted to dim <= 3")
        if self.n_points**self.dim > 1e7:
            raise ValueError("grid too large: (2*radius/step)^dim exceeds 1e7")

    @property
    def n_points(self) -> int:
        return int(2 * self.radius / self.step) + 1

    def lattice(self) -> np.ndarray:
        """All grid points, shape (n_points**dim, dim)."""
        axis = np.linspace(-self.radius, self.radius, self.n_points)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@lru_cache(maxsize=16)
def _grid_phi(spec: PhiSpec, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    z = grid.lattice()
    return z, np.asarray(phi_value(spec, z))


def conj_grid_oracle(spec: PhiSpec, y, grid: GridSpec) -> float:
    """max over grid points z of y.z - phi(z); a lower bound of phi*(y)."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != grid.dim:
        raise ValueError("dim(y) must equal grid.dim")
    z, pz = _grid_phi(spec, grid)
    score = z @ y - pz
    return float(score.max())


def _in_dom_growth(spec: PhiSpec, pts: np.ndarray, grid: GridSpec,
                   threshold: float) -> np.ndarray:
    """Growth test: a point is in dom(phi*) iff doubling the sup radius
    changes the grid conjugate by less than `threshold`.

    The radius-r lattice is an exact sub-lattice of the radius-2r one, so
    both suprema come from a single score pass.
    """
    n_inner = min(grid.n_points, 41)
    axis = np.linspace(-2 * grid.radius, 2 * grid.radius, 2 * n_inner - 1)
    mesh = np.meshgrid(*([axis] * grid.dim), indexing="ij")
    z = np.stack([m.ravel() for m in mesh], axis=-1)
    pz = phi_value(spec, z)
    inner = np.abs(z).max(axis=1) <= grid.radius + 1e-12
    chunk = max(1, int(2e6) // max(len(z), 1))
    buf = np.empty((chunk, len(z)))
    val_r = np.empty(len(pts))
    val_2r = np.empty(len(pts))
    for i in range(0, len(pts), chunk):
        k = min(chunk, len(pts) - i)
        np.matmul(pts[i : i + k], z.T, out=buf[:k])
        buf[:k] -= pz
        val_2r[i : i + k] = buf[:k].max(axis=1)
        val_r[i : i + k] = buf[:k, inner].max(axis=1)
    return (val_2r - val_r) < threshold


def dom_projection_oracle(spec: PhiSpec, y, grid: GridSpec,
                          threshold: float = GROWTH_THRESHOLD) -> float:
    """min sup-norm distance from y to a lattice point passing the
    dom(phi*) growth test."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != grid.dim:
        raise ValueError("dim(y) must equal grid.dim")
    pts = grid.lattice()
    member = _in_dom_growth(spec, pts, grid, threshold)
    if not member.any():
        return math.inf
    dist = np.abs(pts[member] - y).max(axis=1)
    return float(dist.min())


def subgrad_inequality_sample(spec: PhiSpec, trials: int, rng_seed: int,
                              dim: int = 2, scale: float = 3.0) -> float:
    """min over sampled (x, y) of phi(y) - phi(x) - dphi(x).(y - x).

    Nonnegative up to float rounding for a valid subgradient selection.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=rng_seed))
    x = rng.normal(scale=scale, size=(trials, dim))
    y = rng.normal(scale=scale, size=(trials, dim))
    if spec.kind == "entropy":
        x = np.clip(x, -50.0, 50.0)
        y = np.clip(y, -50.0, 50.0)
    g = phi_subgrad(spec, x)
    viol = phi_value(spec, y) - phi_value(spec, x) - (g * (y - x)).sum(axis=-1)
    return float(viol.min())


def sample_in_dom(spec: PhiSpec, dim: int, n: int, rng: np.random.Generator,
                  margin: float = 0.0) -> np.ndarray:
    """Sample points of dom(phi*) (shrunk by `margin`), shape (n, dim).

    Used by the mass Delta/Fenchel suites to build Phase-2 states.
    """
    shrink = 1.0 - margin
    k = spec.kind
    if k in ("l1", "truncated_l1", "huber", "entropy", "relativistic"):
        return rng.uniform(-shrink, shrink, size=(n, dim))
    if k in ("lp", "truncated_lp_vec", "group_lp", "sorting_topk"):
        # draw from the box, then shrink into the extra norm constraints
        from .phi import _dual_exponent, _norm_p

        y = rng.uniform(-shrink, shrink, size=(n, dim))
        if k == "sorting_topk":
            l1 = np.abs(y).sum(axis=-1, keepdims=True)
            return y * np.minimum(1.0, shrink * spec.i_cut / np.maximum(l1, 1e-300))
        q = _dual_exponent(spec.p)
        if k == "group_lp":
            for s, e in spec.groups.boundaries:
                nq = _norm_p(y[:, s:e], q)[:, None]
                y[:, s:e] *= np.minimum(1.0, shrink / np.maximum(nq, 1e-300))
            return y
        nq = _norm_p(y, q)[:, None]
        return y * np.minimum(1.0, shrink / np.maximum(nq, 1e-300))
    if k == "half_squared_l2":
        return rng.normal(size=(n, dim))
    raise AssertionError(k)  # pragma: no cover
