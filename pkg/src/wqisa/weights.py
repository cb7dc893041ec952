"""Weight families that drive the control-point estimator.

A weight w_u(x) scores cloud point x against an anchor u. Families:

* ``knn``            1/k on the k nearest cloud points of u, else 0
* ``characteristic`` 1 on the closed ball of radius r around u, else 0
* ``gaussian``       exp(-||x-u|| / (2 sigma^2)); an optional switch uses
                     the squared norm in the numerator instead
* ``exponential``    exp(-||x-u|| / (sqrt(2) sigma))
* ``idw``            1/||x-u|| when no cloud point coincides with u,
                     otherwise uniform mass on the coincident points

k-nearest membership is resolved on cloud row indices with ties at the k-th
distance broken by ascending index, so exactly k rows carry weight even
when coordinates repeat.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .kdtree import KdTree

FAMILIES = ("knn", "characteristic", "gaussian", "exponential", "idw")


@dataclass(frozen=True)
class WeightSpec:
    """Declarative choice of weight family plus its parameter."""

    family: str
    k: int | None = None
    r: float | None = None
    sigma: float | None = None
    gaussian_squared_norm: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}; pick one of {FAMILIES}")
        need = {"knn": "k", "characteristic": "r", "gaussian": "sigma",
                "exponential": "sigma", "idw": None}[self.family]
        if need is not None:
            val = getattr(self, need)
            if val is None or val <= 0:
                raise ValueError(f"{self.family} weights need {need} > 0, got {val}")
        if self.family == "knn" and int(self.k) != self.k:
            raise ValueError(f"k must be an integer, got {self.k}")

    @classmethod
    def knn(cls, k: int) -> "WeightSpec":
        return cls("knn", k=k)

    @classmethod
    def characteristic(cls, r: float) -> "WeightSpec":
        return cls("characteristic", r=r)

    @classmethod
    def gaussian(cls, sigma: float, squared_norm: bool = False) -> "WeightSpec":
        return cls("gaussian", sigma=sigma, gaussian_squared_norm=squared_norm)

    @classmethod
    def exponential(cls, sigma: float) -> "WeightSpec":
        return cls("exponential", sigma=sigma)

    @classmethod
    def idw(cls) -> "WeightSpec":
        return cls("idw")

    def label(self) -> str:
        if self.family == "knn":
            return f"knn:k={self.k}"
        if self.family == "characteristic":
            return f"characteristic:r={self.r!r}"
        if self.family in ("gaussian", "exponential"):
            extra = ",squared_norm=1" if self.family == "gaussian" and self.gaussian_squared_norm else ""
            return f"{self.family}:sigma={self.sigma!r}{extra}"
        return "idw"


@dataclass(frozen=True)
class SupportDescriptor:
    """Where a weight window can be nonzero: a ball, a point list, or everywhere."""

    kind: str  # "ball" | "points" | "unbounded"
    radius: float | None = None
    indices: np.ndarray | None = None


class NeighborContext:
    """Read-only predictor view of a cloud plus a lazily built spatial index."""

    def __init__(self, points: np.ndarray):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("need a nonempty (N, d) predictor array")
        pts.setflags(write=False)
        self.points = pts
        self.n, self.d = pts.shape

    @cached_property
    def tree(self) -> KdTree:
        return KdTree(self.points)

    def clamp_k(self, k: int) -> int:
        if k > self.n:
            warnings.warn(
                f"k={k} exceeds cloud size N={self.n}; clamped to {self.n}",
                UserWarning, stacklevel=3,
            )
            return self.n
        return int(k)

    def knn_indices(self, u, k: int) -> np.ndarray:
        return self.tree.knn(u, self.clamp_k(k))

    def radius_indices(self, u, r: float) -> np.ndarray:
        return self.tree.radius_query(u, r)

    def coincident_indices(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float).reshape(-1)
        return np.flatnonzero(np.all(self.points == u, axis=1))

    def distances(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float).reshape(-1)
        return np.sqrt(((self.points - u) ** 2).sum(axis=1))


def _kernel(spec: WeightSpec, dist):
    """Closed-form families as a function of euclidean distance."""
    dist = np.asarray(dist, dtype=float)
    if spec.family == "characteristic":
        return (dist <= spec.r).astype(float)
    if spec.family == "gaussian":
        arg = dist * dist if spec.gaussian_squared_norm else dist
        return np.exp(-arg / (2.0 * spec.sigma**2))
    if spec.family == "exponential":
        return np.exp(-dist / (math.sqrt(2.0) * spec.sigma))
    raise ValueError(f"{spec.family} has no closed-form kernel")


def cloud_weights(spec: WeightSpec, u, ctx: NeighborContext) -> tuple[np.ndarray, np.ndarray]:
    """Per-row weights of the whole cloud against anchor u.

    Returns (indices, weights) where rows not listed carry weight 0. For
    bounded families the index list is the support, so downstream work is
    O(k) for knn and O(|ball|) for characteristic windows.
    """
    if spec.family == "knn":
        k = ctx.clamp_k(spec.k)
        idx = ctx.knn_indices(u, k)
        return idx, np.full(len(idx), 1.0 / k)
    if spec.family == "characteristic":
        idx = ctx.radius_indices(u, spec.r)
        return idx, np.ones(len(idx))
    if spec.family == "idw":
        coincident = ctx.coincident_indices(u)
        if len(coincident):
            return coincident, np.full(len(coincident), 1.0 / len(coincident))
        return np.arange(ctx.n), 1.0 / ctx.distances(u)
    idx = np.arange(ctx.n)
    return idx, _kernel(spec, ctx.distances(u))


def weight_eval(spec: WeightSpec, u, x, ctx: NeighborContext | None = None) -> float:
    """Weight of a single point x against anchor u.

    knn and idw are set-dependent and need a context; membership of x in the
    selected neighbor set is decided by exact coordinate match.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    dist = math.sqrt(float(((x - u) ** 2).sum()))
    if spec.family in ("characteristic", "gaussian", "exponential"):
        return float(_kernel(spec, dist))
    if ctx is None:
        raise ValueError(f"{spec.family} weights need a NeighborContext")
    if spec.family == "knn":
        k = ctx.clamp_k(spec.k)
        neighbors = ctx.points[ctx.knn_indices(u, k)]
        return 1.0 / k if bool(np.any(np.all(neighbors == x, axis=1))) else 0.0
    # idw
    coincident = ctx.coincident_indices(u)
    if len(coincident):
        return 1.0 / len(coincident) if dist == 0.0 else 0.0
    if dist == 0.0:
        # x sits on u but no cloud row does; treat x as its own coincidence set
        return 1.0
    return 1.0 / dist


def weight_support(spec: WeightSpec, u, ctx: NeighborContext | None = None) -> SupportDescriptor:
    """Describe where the weight window of u can be nonzero."""
    if spec.family == "characteristic":
        return SupportDescriptor("ball", radius=float(spec.r))
    if spec.family == "knn":
        if ctx is None:
            raise ValueError("knn support needs a NeighborContext")
        return SupportDescriptor("points", indices=ctx.knn_indices(u, spec.k))
    return SupportDescriptor("unbounded")
