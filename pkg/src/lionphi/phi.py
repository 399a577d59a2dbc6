"""Convex reshaper catalog: values, subgradients, conjugates, and domains.

Each reshaper is a convex function ``phi`` on R^d with phi(0) = 0 and
0 in the subdifferential at 0.  For every catalog kind we provide closed
forms for

* ``phi_value``        phi(x)
* ``phi_subgrad``      a documented subgradient selection of phi
* ``phi_conj_value``   the convex conjugate phi*(y) = sup_z (y.z - phi(z)),
                       which may be +inf (returned as ``math.inf``)
* ``phi_conj_subgrad`` a subgradient selection of phi* inside its domain
* ``dom_distance``     distance from y to the effective domain of phi*

All functions accept a single vector of shape (d,) or a batch of shape
(..., d); values are returned as scalars or arrays of the batch shape.

Extended-real convention: conjugate values use plain Python/numpy floats
with ``inf`` as the infinite marker.  ``inf`` compares greater than any
finite value and propagates through arithmetic; NaN is never produced for
finite inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation

TAU_DOM = 1e-9

KINDS = (
    "l1",
    "lp",
    "group_lp",
    "truncated_l1",
    "truncated_lp_vec",
    "sorting_topk",
    "huber",
    "entropy",
    "relativistic",
    "half_squared_l2",
)

# kinds whose subgradient takes values in {-1, 0, +1} (compressible to 2 bits)
TERNARY_KINDS = ("l1", "truncated_l1", "sorting_topk")

# kinds with a continuous (locally Lipschitz) gradient, safe for ODE integration
SMOOTH_KINDS = ("huber", "entropy", "relativistic", "half_squared_l2")


@dataclass(frozen=True)
class GroupPartition:
    """Contiguous index ranges [start, end) covering 0..d-1 exactly once."""

    boundaries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        bounds = tuple((int(s), int(e)) for s, e in self.boundaries)
        object.__setattr__(self, "boundaries", bounds)
        if not bounds:
            raise ValueError("partition must contain at least one group")
        pos = 0
        for s, e in bounds:
            if s != pos or e <= s:
                raise ValueError(
                    f"groups must be contiguous, non-empty and ordered; got {bounds}"
                )
            pos = e

    @property
    def dim(self) -> int:
        return self.boundaries[-1][1]


@dataclass(frozen=True)
class PhiSpec:
    """Tagged description of a convex reshaper; single source of truth for
    phi, its subgradient, the conjugate and the conjugate's domain."""

    kind: str
    p: float | None = None
    e: float | None = None
    i_cut: int | None = None
    a: float | None = None
    groups: GroupPartition | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("lp", "group_lp", "truncated_lp_vec"):
            if self.p is None or self.p < 1:
                raise ValueError(f"{self.kind} requires p >= 1")
        if self.kind in ("truncated_l1", "truncated_lp_vec", "relativistic"):
            if self.e is None or self.e <= 0:
                raise ValueError(f"{self.kind} requires e > 0")
        if self.kind == "sorting_topk":
            if self.i_cut is None or self.i_cut < 1:
                raise ValueError("sorting_topk requires i_cut >= 1")
        if self.kind in ("huber", "entropy"):
            if self.a is None or self.a <= 0:
                raise ValueError(f"{self.kind} requires a > 0")
        if self.kind == "group_lp" and self.groups is None:
            raise ValueError("group_lp requires a partition")

    # -- JSON wire format ---------------------------------------------------
    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.p is not None:
            out["p"] = self.p
        if self.e is not None:
            out["e"] = self.e
        if self.i_cut is not None:
            out["i_cut"] = self.i_cut
        if self.a is not None:
            out["a"] = self.a
        if self.groups is not None:
            out["groups"] = [list(g) for g in self.groups.boundaries]
        return out

    @staticmethod
    def from_json(obj: dict) -> "PhiSpec":
        groups = obj.get("groups")
        part = GroupPartition(tuple(tuple(g) for g in groups)) if groups else None
        return PhiSpec(
            kind=obj["kind"],
            p=obj.get("p"),
            e=obj.get("e"),
            i_cut=obj.get("i_cut"),
            a=obj.get("a"),
            groups=part,
        )


# ---------------------------------------------------------------------------
# helpers


def _as_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        raise ValueError("expected a vector, got a scalar")
    return arr


def _check_dim(spec: PhiSpec, x: np.ndarray):
    if spec.groups is not None and x.shape[-1] != spec.groups.dim:
        raise ValueError(
            f"dimension {x.shape[-1]} does not match partition dim {spec.groups.dim}"
        )
    if spec.kind == "sorting_topk" and spec.i_cut > x.shape[-1]:
        raise ValueError(f"i_cut={spec.i_cut} exceeds dimension {x.shape[-1]}")


def _norm_p(x: np.ndarray, p: float) -> np.ndarray:
    """(sum |x_i|^p)^(1/p) along the last axis, overflow-safe."""
    ax = np.abs(x)
    if p == 1:
        return ax.sum(axis=-1)
    if math.isinf(p):
        return ax.max(axis=-1)
    m = ax.max(axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    out = np.squeeze(safe, -1) * ((ax / safe) ** p).sum(axis=-1) ** (1.0 / p)
    return np.where(np.squeeze(m, -1) > 0, out, 0.0)


def _dual_exponent(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1.0)


def _lp_subgrad(x: np.ndarray, p: float) -> np.ndarray:
    if p == 1:
        return np.sign(x)
    nrm = _norm_p(x, p)[..., None]
    safe = np.where(nrm > 0, nrm, 1.0)
    g = np.sign(x) * (np.abs(x) / safe) ** (p - 1.0)
    return np.where(nrm > 0, g, 0.0)


def _topk_mask(x: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask selecting exactly k coordinates: largest |x_i|, ties
    broken by ascending index (stable)."""
    order = np.argsort(-np.abs(x), axis=-1, kind="stable")
    mask = np.zeros(x.shape, dtype=bool)
    np.put_along_axis(mask, order[..., :k], True, axis=-1)
    return mask


def _xlogx(v: np.ndarray) -> np.ndarray:
    return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)


def _logcosh(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    return at + np.log1p(np.exp(-2.0 * at)) - math.log(2.0)


def _scalarize(v: np.ndarray):
    return float(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------------------
# phi(x)


def phi_value(spec: PhiSpec, x) -> float | np.ndarray:
    """Evaluate phi(x); phi(0) = 0 for every kind."""
    x = _as_array(x)
    _check_dim(spec, x)
    k = spec.kind
    if k == "l1":
        v = np.abs(x).sum(axis=-1)
    elif k == "lp":
        v = _norm_p(x, spec.p)
    elif k == "group_lp":
        v = sum(_norm_p(x[..., s:e], spec.p) for s, e in spec.groups.boundaries)
    elif k == "truncated_l1":
        v = np.maximum(np.abs(x) - spec.e, 0.0).sum(axis=-1)
    elif k == "truncated_lp_vec":
        v = np.maximum(_norm_p(x, spec.p) - spec.e, 0.0)
    elif k == "sorting_topk":
        ax = np.abs(x)
        part = -np.partition(-ax, spec.i_cut - 1, axis=-1)[..., : spec.i_cut]
        v = part.sum(axis=-1)
    elif k == "huber":
        a = spec.a
        ax = np.abs(x)
        v = np.where(ax < a, x * x / (2.0 * a), ax - a / 2.0).sum(axis=-1)
    elif k == "entropy":
        v = _logcosh(spec.a * x).sum(axis=-1) / spec.a
    elif k == "relativistic":
        v = (np.sqrt(x * x + spec.e**2) - spec.e).sum(axis=-1)
    elif k == "half_squared_l2":
        v = 0.5 * (x * x).sum(axis=-1)
    else:  # pragma: no cover
        raise AssertionError(k)
    return _scalarize(v)


# ---------------------------------------------------------------------------
# subgradient of phi


def phi_subgrad(spec: PhiSpec, x) -> np.ndarray:
    """Documented subgradient selection; sign(0) = 0 everywhere, so the
    selection at 0 is always the zero vector."""
    x = _as_array(x)
    _check_dim(spec, x)
    k = spec.kind
    if k == "l1":
        return np.sign(x)
    if k == "lp":
        return _lp_subgrad(x, spec.p)
    if k == "group_lp":
        g = np.empty_like(x)
        for s, e in spec.groups.boundaries:
            g[..., s:e] = _lp_subgrad(x[..., s:e], spec.p)
        return g
    if k == "truncated_l1":
        return np.sign(x) * (np.abs(x) > spec.e)
    if k == "truncated_lp_vec":
        active = (_norm_p(x, spec.p) > spec.e)[..., None]
        return _lp_subgrad(x, spec.p) * active
    if k == "sorting_topk":
        return np.sign(x) * _topk_mask(x, spec.i_cut)
    if k == "huber":
        return np.clip(x, -spec.a, spec.a) / spec.a
    if k == "entropy":
        return np.tanh(spec.a * x)
    if k == "relativistic":
        return x / np.sqrt(x * x + spec.e**2)
    if k == "half_squared_l2":
        return x.copy()
    raise AssertionError(k)  # pragma: no cover


# ---------------------------------------------------------------------------
# conjugate value


def phi_conj_value(spec: PhiSpec, y) -> float | np.ndarray:
    """Analytic conjugate phi*(y); +inf outside the effective domain."""
    y = _as_array(y)
    _check_dim(spec, y)
    k = spec.kind
    if k in ("l1", "lp", "group_lp", "sorting_topk"):
        inside = dom_distance(spec, y) <= 0.0
        v = np.where(inside, 0.0, math.inf)
    elif k == "truncated_l1":
        inside = np.abs(y).max(axis=-1) <= 1.0
        v = np.where(inside, spec.e * np.abs(y).sum(axis=-1), math.inf)
    elif k == "truncated_lp_vec":
        q = _dual_exponent(spec.p)
        nq = _norm_p(y, q)
        v = np.where(nq <= 1.0, spec.e * nq, math.inf)
    elif k == "huber":
        inside = np.abs(y).max(axis=-1) <= 1.0
        v = np.where(inside, 0.5 * spec.a * (y * y).sum(axis=-1), math.inf)
    elif k == "entropy":
        # binary-entropy form; finite limit on the closed box boundary
        inside = np.abs(y).max(axis=-1) <= 1.0
        yc = np.clip(y, -1.0, 1.0)
        val = (_xlogx(1.0 + yc) + _xlogx(1.0 - yc)).sum(axis=-1) / (2.0 * spec.a)
        v = np.where(inside, val, math.inf)
    elif k == "relativistic":
        inside = np.abs(y).max(axis=-1) <= 1.0
        yc = np.clip(y, -1.0, 1.0)
        val = (spec.e * (1.0 - np.sqrt(1.0 - yc * yc))).sum(axis=-1)
        v = np.where(inside, val, math.inf)
    elif k == "half_squared_l2":
        v = 0.5 * (y * y).sum(axis=-1)
    else:  # pragma: no cover
        raise AssertionError(k)
    return _scalarize(v)


# ---------------------------------------------------------------------------
# subgradient of the conjugate


def phi_conj_subgrad(spec: PhiSpec, y, tol: float = TAU_DOM) -> np.ndarray:
    """Subgradient selection of phi* at y.

    Raises DomainViolation if y is farther than ``tol`` from dom(phi*),
    or (entropy / relativistic) closer than ``tol`` to the boundary where
    the slope diverges.
    """
    y = _as_array(y)
    _check_dim(spec, y)
    d = dom_distance(spec, y)
    if np.any(np.asarray(d) > tol):
        raise DomainViolation(f"dist(y, dom phi*) = {np.max(d):.3g} > tol = {tol:.3g}")
    k = spec.kind
    if k in ("l1", "lp", "group_lp", "sorting_topk"):
        # indicator conjugates: 0 is a valid subgradient on the whole domain
        return np.zeros_like(y)
    if k == "truncated_l1":
        return spec.e * np.sign(y)
    if k == "truncated_lp_vec":
        q = _dual_exponent(spec.p)
        return spec.e * (np.sign(y) if math.isinf(q) else _lp_subgrad(y, q))
    if k == "huber":
        return spec.a * y
    if k == "entropy":
        if np.abs(y).max() >= 1.0 - tol:
            raise DomainViolation("entropy conjugate subgradient needs |y_i| < 1")
        return np.log((1.0 + y) / (1.0 - y)) / (2.0 * spec.a)
    if k == "relativistic":
        if np.abs(y).max() >= 1.0 - tol:
            raise DomainViolation("relativistic conjugate subgradient needs |y_i| < 1")
        return spec.e * y / np.sqrt(1.0 - y * y)
    if k == "half_squared_l2":
        return y.copy()
    raise AssertionError(k)  # pragma: no cover


# ---------------------------------------------------------------------------
# distance to dom(phi*)


def _topk_l1_excess_t(ay_sorted_desc: np.ndarray, k: int) -> np.ndarray:
    """Smallest t >= 0 with sum_i max(|y_i| - t, 0) <= k, batched.

    Piecewise-linear in t with breakpoints at the sorted |y_i|; on the
    segment where exactly j coordinates exceed t the sum is S_j - j*t.
    """
    s = ay_sorted_desc
    d = s.shape[-1]
    total = s.sum(axis=-1)
    cum = np.cumsum(s, axis=-1)
    j = np.arange(1, d + 1, dtype=float)
    cand = (cum - k) / j
    lower = np.concatenate([s[..., 1:], np.zeros(s.shape[:-1] + (1,))], axis=-1)
    valid = (cand >= lower) & (cand <= s)
    cand = np.where(valid, cand, -np.inf)
    t = cand.max(axis=-1)
    return np.where(total <= k, 0.0, np.maximum(t, 0.0))


def dom_distance(spec: PhiSpec, y) -> float | np.ndarray:
    """Distance from y to dom(phi*), zero iff y lies in the closure.

    Box-shaped domains use the sup-norm distance; lp-ball domains use the
    dual-norm gauge distance max(0, |y|_q - 1); the top-k sorting kind
    intersects an l1 ball with the unit box and the sup-norm distance is
    solved exactly from the piecewise-linear shrinkage profile.
    """
    y = _as_array(y)
    _check_dim(spec, y)
    k = spec.kind
    if k in ("l1", "truncated_l1", "huber", "entropy", "relativistic"):
        v = np.maximum(np.abs(y).max(axis=-1) - 1.0, 0.0)
    elif k in ("lp", "truncated_lp_vec"):
        q = _dual_exponent(spec.p)
        v = np.maximum(_norm_p(y, q) - 1.0, 0.0)
    elif k == "group_lp":
        q = _dual_exponent(spec.p)
        v = np.maximum.reduce(
            [
                np.maximum(_norm_p(y[..., s:e], q) - 1.0, 0.0)
                for s, e in spec.groups.boundaries
            ]
        )
    elif k == "sorting_topk":
        box = np.maximum(np.abs(y).max(axis=-1) - 1.0, 0.0)
        s = -np.sort(-np.abs(y), axis=-1)
        v = np.maximum(box, _topk_l1_excess_t(s, spec.i_cut))
    elif k == "half_squared_l2":
        v = np.zeros(y.shape[:-1])
    else:  # pragma: no cover
        raise AssertionError(k)
    return _scalarize(v)


def is_in_dom(spec: PhiSpec, y, tol: float) -> bool | np.ndarray:
    """True iff dom_distance(spec, y) <= tol."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    v = dom_distance(spec, y) <= tol
    return bool(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------------------
# Lipschitz constants used by the stochastic analysis


def value_lipschitz(spec: PhiSpec, dim: int) -> float:
    """l2-Lipschitz constant of phi itself (sup-norm of its subgradients);
    inf for the quadratic kind whose gradient is unbounded."""
    k = spec.kind
    if k in ("l1", "truncated_l1", "huber", "entropy", "relativistic"):
        return math.sqrt(dim)
    if k in ("lp", "truncated_lp_vec"):
        return dim ** max(0.0, 1.0 / spec.p - 0.5)
    if k == "group_lp":
        return math.sqrt(
            sum(
                ((e - s) ** max(0.0, 1.0 / spec.p - 0.5)) ** 2
                for s, e in spec.groups.boundaries
            )
        )
    if k == "sorting_topk":
        return math.sqrt(spec.i_cut)
    if k == "half_squared_l2":
        return math.inf
    raise AssertionError(k)  # pragma: no cover


def subgrad_lipschitz(spec: PhiSpec) -> float:
    """Lipschitz constant of the subgradient map; inf for nonsmooth kinds."""
    k = spec.kind
    if k == "huber":
        return 1.0 / spec.a
    if k == "entropy":
        return spec.a
    if k == "relativistic":
        return 1.0 / spec.e
    if k == "half_squared_l2":
        return 1.0
    return math.inf


def yields_ternary(spec: PhiSpec) -> bool:
    """Whether the subgradient values live in {-1, 0, +1} (compressible)."""
    return spec.kind in TERNARY_KINDS or (spec.kind == "lp" and spec.p == 1)
