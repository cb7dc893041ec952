"""Fitting spline height fields to scattered noisy data without linear solves.

Each coefficient of the tensor-product spline is a weighted mean of the
response values, anchored at the knot averages of its basis function. This
keeps every coefficient inside [min y, max y], which in turn traps the
whole spline between the data extremes; no system is assembled or solved,
and fitting cost is exactly one estimator call per coefficient.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .constants import EXACT_DIAMETER_LIMIT
from .errors import DomainError, EmptySupportError
from .splines import SplineFunction, TensorSplineSpace, spline_eval
from .weights import NeighborContext, WeightSpec, cloud_weights


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Immutable scattered data: predictors x (N, d) and responses y (N,)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.ndim != 2 or len(x) == 0:
            raise ValueError("need a nonempty (N, d) predictor array")
        if len(y) != len(x):
            raise ValueError(f"got {len(x)} predictors but {len(y)} responses")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("cloud contains non-finite values")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @cached_property
    def records(self) -> np.ndarray:
        """Rows (x_1..x_d, y) as points in R^(d+1)."""
        out = np.hstack([self.x, self.y.reshape(-1, 1)])
        out.setflags(write=False)
        return out

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x.min(axis=0), self.x.max(axis=0)

    @cached_property
    def _diameter_info(self) -> tuple[float, bool]:
        rec = self.records
        if self.n > EXACT_DIAMETER_LIMIT:
            span = rec.max(axis=0) - rec.min(axis=0)
            return float(np.sqrt((span**2).sum())), False
        best = 0.0
        for start in range(0, self.n, 256):
            chunk = rec[start : start + 256]
            d2 = ((chunk[:, None, :] - rec[None, :, :]) ** 2).sum(axis=2)
            best = max(best, float(d2.max()))
        return float(np.sqrt(best)), True

    @property
    def diameter(self) -> float:
        """Max pairwise distance between full records; bbox diagonal above
        the exact-computation size limit."""
        return self._diameter_info[0]

    @property
    def diameter_is_exact(self) -> bool:
        return self._diameter_info[1]

    def subset(self, indices) -> "PointCloud":
        return PointCloud(self.x[indices], self.y[indices])


@dataclass(frozen=True)
class FitPolicy:
    """What to do off the happy path.

    empty_support: "error" aborts the fit naming every starved coefficient,
    "nearest" falls back to the response of the single nearest point.
    drop_outside drops rows outside the space's domain box instead of
    clipping their predictors for weight computation.
    """

    empty_support: str = "error"
    drop_outside: bool = False

    def __post_init__(self):
        if self.empty_support not in ("error", "nearest"):
            raise ValueError(f"empty_support must be 'error' or 'nearest', got {self.empty_support!r}")


@dataclass
class FitDiagnostics:
    """Instrumentation collected during a fit."""

    estimator_calls: int = 0
    weight_lookups: int = 0
    support_sizes: np.ndarray | None = None  # grid-shaped, points per coefficient
    fallback_cells: dict = field(default_factory=dict)  # multi-index -> row used


@dataclass(frozen=True, eq=False)
class WqisaModel:
    """A fitted spline plus everything needed to reason about it."""

    spline: SplineFunction
    weight: WeightSpec
    policy: FitPolicy
    effective_count: int
    diagnostics: FitDiagnostics

    @property
    def space(self) -> TensorSplineSpace:
        return self.spline.space

    def __call__(self, u):
        return spline_eval(self.spline, u)


def _working_points(cloud: PointCloud, space: TensorSplineSpace, policy: FitPolicy):
    """Predictors aligned to the space's domain box.

    Returns (points, row_indices): rows outside the box are either dropped
    or clipped onto it, so weight windows anchored inside the box can see
    them. Row order is preserved.
    """
    lo, hi = space.domain
    if policy.drop_outside:
        keep = np.flatnonzero(np.all((cloud.x >= lo) & (cloud.x <= hi), axis=1))
        if len(keep) == 0:
            raise DomainError("no cloud points inside the domain box")
        return cloud.x[keep], keep
    return np.clip(cloud.x, lo, hi), np.arange(cloud.n)


def build_context(cloud: PointCloud, space: TensorSplineSpace,
                  policy: FitPolicy = FitPolicy()) -> tuple[NeighborContext, np.ndarray]:
    """NeighborContext over the domain-aligned predictors plus kept row ids."""
    pts, rows = _working_points(cloud, space, policy)
    return NeighborContext(pts), rows


def estimate_control_point(cloud: PointCloud, weight: WeightSpec, u,
                           ctx: NeighborContext | None = None,
                           y: np.ndarray | None = None) -> float:
    """Weighted mean of the responses under the weight window anchored at u.

    Always a convex combination of response values, hence never outside
    [min y, max y]. Raises EmptySupportError when every weight vanishes
    (tiny characteristic radii, or gaussian windows collapsing below the
    floating-point floor).
    """
    if ctx is None:
        ctx = NeighborContext(cloud.x)
    if y is None:
        y = cloud.y
    idx, w = cloud_weights(weight, u, ctx)
    total = float(w.sum())
    if len(idx) == 0 or total <= 0.0:
        raise EmptySupportError([(None, np.atleast_1d(np.asarray(u, dtype=float)))])
    return float(np.dot(y[idx], w) / total)


def _worker_count() -> int:
    raw = os.environ.get("WQISA_THREADS")
    if raw is None:
        return 1
    try:
        v = int(raw)
    except ValueError:
        return 1
    if v == 0:
        return os.cpu_count() or 1
    return max(1, v)


def _index_tuple(flat: int, shape: tuple[int, ...]) -> tuple[int, ...]:
    """Unravel to plain-int indices so cell keys stay JSON serializable."""
    return tuple(int(i) for i in np.unravel_index(flat, shape))


def fit(cloud: PointCloud, space: TensorSplineSpace, weight: WeightSpec,
        policy: FitPolicy = FitPolicy()) -> WqisaModel:
    """Fit the spline whose coefficients are control-point estimates.

    One estimator call per coefficient, anchored at the tensor grid of knot
    averages; no linear algebra beyond weighted means. Honors WQISA_THREADS
    (0 = one worker per CPU) for coefficient-parallel evaluation.
    """
    ctx, rows = build_context(cloud, space, policy)
    y = cloud.y[rows]
    grids = space.knot_average_grids
    shape = space.shape
    flat_sites = [tuple(g[i] for g, i in zip(grids, mi)) for mi in np.ndindex(*shape)]

    def solve_range(lo: int, hi: int):
        vals = np.empty(hi - lo)
        sizes = np.empty(hi - lo, dtype=int)
        lookups = 0
        touched: list[np.ndarray] = []
        empties: list[int] = []
        fallbacks: dict[int, int] = {}
        for ofs, flat in enumerate(range(lo, hi)):
            u = np.array(flat_sites[flat])
            idx, w = cloud_weights(weight, u, ctx)
            lookups += len(idx)
            live = idx[w > 0.0]
            total = float(w.sum())
            if len(live) == 0 or total <= 0.0:
                if policy.empty_support == "nearest":
                    near = int(ctx.knn_indices(u, 1)[0])
                    vals[ofs] = y[near]
                    sizes[ofs] = 1
                    touched.append(np.array([near]))
                    fallbacks[flat] = near
                else:
                    empties.append(flat)
                    vals[ofs] = np.nan
                    sizes[ofs] = 0
                continue
            vals[ofs] = np.dot(y[idx], w) / total
            sizes[ofs] = len(live)
            touched.append(live)
        return vals, sizes, lookups, touched, empties, fallbacks

    dim = space.dim
    workers = _worker_count()
    if workers > 1 and dim >= 4 * workers:
        bounds = np.linspace(0, dim, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda se: solve_range(*se),
                                  zip(bounds[:-1], bounds[1:])))
    else:
        parts = [solve_range(0, dim)]

    coeffs = np.concatenate([p[0] for p in parts]).reshape(shape)
    sizes = np.concatenate([p[1] for p in parts]).reshape(shape)
    lookups = sum(p[2] for p in parts)
    empties = [flat for p in parts for flat in p[4]]
    if empties:
        cells = [(_index_tuple(flat, shape), np.array(flat_sites[flat]))
                 for flat in empties]
        raise EmptySupportError(cells)
    touched_all = [t for p in parts for t in p[3]]
    effective = np.unique(np.concatenate(touched_all)) if touched_all else np.empty(0, int)
    fallbacks = {_index_tuple(flat, shape): row
                 for p in parts for flat, row in p[5].items()}
    diag = FitDiagnostics(
        estimator_calls=dim,
        weight_lookups=lookups,
        support_sizes=sizes,
        fallback_cells=fallbacks,
    )
    return WqisaModel(
        spline=SplineFunction(space, coeffs),
        weight=weight,
        policy=policy,
        effective_count=int(len(effective)),
        diagnostics=diag,
    )


def evaluate(model: WqisaModel, u):
    """Spline value(s) at u; accepts single points or (m, d) batches."""
    return spline_eval(model.spline, u)


@dataclass(frozen=True)
class GlobalBounds:
    lo: float
    hi: float
    verified: bool  # every coefficient inside [lo, hi] (1e-12 slack)


def global_bounds(model: WqisaModel, cloud: PointCloud) -> GlobalBounds:
    """Data extremes that trap the whole spline.

    Coefficients are convex combinations of responses and basis rows are
    convex combinations of coefficients, so min y <= spline <= max y holds
    everywhere on the domain.
    """
    lo, hi = float(cloud.y.min()), float(cloud.y.max())
    c = model.spline.coefficients
    ok = bool(np.all(c >= lo - 1e-12) and np.all(c <= hi + 1e-12))
    return GlobalBounds(lo, hi, ok)


def _support_rows(model: WqisaModel, ctx: NeighborContext, multi_index) -> np.ndarray:
    """Cloud rows with positive weight for one coefficient (fallback-aware)."""
    fb = model.diagnostics.fallback_cells
    if multi_index in fb:
        return np.array([fb[multi_index]])
    u = model.space.site(multi_index)
    idx, w = cloud_weights(model.weight, u, ctx)
    return idx[w > 0.0]


def local_bounds(model: WqisaModel, cloud: PointCloud, cell) -> tuple[float, float]:
    """Response extremes over the points feeding one knot-span cell.

    cell names one knot span per axis (0-based span index s_k with
    t[s_k] <= x < t[s_k+1], p_k <= s_k <= n_k-1). On that cell the spline
    only sees the p_k+1 active coefficients per axis, so it is trapped by
    the min/max response over the union of their weight supports.
    """
    space = model.space
    cell = tuple(int(c) for c in cell)
    if len(cell) != space.d:
        raise ValueError(f"cell must have {space.d} span indices")
    for k, (s, kv) in enumerate(zip(cell, space.axes)):
        if not kv.degree <= s <= kv.n - 1:
            raise IndexError(f"axis {k}: span {s} out of range [{kv.degree}, {kv.n - 1}]")
    ctx, rows = build_context(cloud, space, model.policy)
    y = cloud.y[rows]
    ranges = [range(s - kv.degree, s + 1) for s, kv in zip(cell, space.axes)]
    union: list[np.ndarray] = []
    for mi in np.ndindex(*[len(r) for r in ranges]):
        multi = tuple(r[i] for r, i in zip(ranges, mi))
        union.append(_support_rows(model, ctx, multi))
    pts = np.unique(np.concatenate(union)) if union else np.empty(0, int)
    if len(pts) == 0:
        raise EmptySupportError([(cell, np.array([float(kv.knots[s]) for s, kv in zip(cell, space.axes)]))])
    vals = y[pts]
    return float(vals.min()), float(vals.max())


def effective_points(model: WqisaModel, cloud: PointCloud) -> np.ndarray:
    """Sorted cloud rows that influence at least one coefficient.

    Everything outside this set could be deleted without changing the fit;
    it can be a proper subset of the cloud for bounded-support weights.
    """
    ctx, _ = build_context(cloud, model.space, model.policy)
    parts = [_support_rows(model, ctx, mi) for mi in np.ndindex(*model.space.shape)]
    if not parts:
        return np.empty(0, dtype=int)
    return np.unique(np.concatenate(parts))


def iqr_outlier_mask(cloud: PointCloud, space: TensorSplineSpace, weight: WeightSpec,
                     factor: float = 1.5, policy: FitPolicy = FitPolicy()) -> np.ndarray:
    """Boolean mask of rows kept by the interquartile residual rule.

    Residuals come from a pilot fit on the raw cloud with the caller's
    space and weight; rows are kept when the residual falls inside
    [Q1 - factor*IQR, Q3 + factor*IQR]. A zero IQR keeps everything.
    """
    if cloud.n < 4:
        raise ValueError(f"need at least 4 points for quartiles, got {cloud.n}")
    if factor < 0:
        raise ValueError(f"factor must be >= 0, got {factor}")
    pilot = fit(cloud, space, weight, policy)
    res = cloud.y - evaluate(pilot, np.clip(cloud.x, *space.domain))
    q1, q3 = np.percentile(res, [25.0, 75.0])
    iqr = q3 - q1
    if iqr == 0.0:
        return np.ones(cloud.n, dtype=bool)
    return (res >= q1 - factor * iqr) & (res <= q3 + factor * iqr)


def iqr_outlier_filter(cloud: PointCloud, space: TensorSplineSpace, weight: WeightSpec,
                       factor: float = 1.5, policy: FitPolicy = FitPolicy()) -> PointCloud:
    """Cloud with interquartile-rule outliers removed (order preserved)."""
    return cloud.subset(np.flatnonzero(iqr_outlier_mask(cloud, space, weight, factor, policy)))


@dataclass(frozen=True)
class MonotoneResult:
    direction: str  # "increasing" | "decreasing" | "neither"
    constant: bool


@dataclass(frozen=True)
class ConvexityResult:
    shape: str  # "convex" | "concave" | "neither"
    affine: bool


def classify_monotone(values: np.ndarray, axis: int = 0, atol: float | None = None) -> MonotoneResult:
    """Classify a grid of estimator values along one axis.

    Increasing means every 1-d slice along the axis is nondecreasing (up to
    atol); a constant grid reports increasing with the constant flag set.
    The default tolerance absorbs summation-order noise only: 1e-12 times
    the value scale. Pass atol=0 for exact comparisons.
    """
    v = np.asarray(values, dtype=float)
    if atol is None:
        atol = 1e-12 * max(1.0, float(np.abs(v).max()))
    diffs = np.diff(v, axis=axis)
    up = bool(np.all(diffs >= -atol))
    down = bool(np.all(diffs <= atol))
    if up and down:
        return MonotoneResult("increasing", True)
    if up:
        return MonotoneResult("increasing", False)
    if down:
        return MonotoneResult("decreasing", False)
    return MonotoneResult("neither", False)


def w_monotone_check(cloud: PointCloud, space: TensorSplineSpace, weight: WeightSpec,
                     axis: int = 0, policy: FitPolicy = FitPolicy(),
                     atol: float | None = None) -> MonotoneResult:
    """Classify the estimator values at the knot averages along one axis.

    A monotone estimator grid makes the fitted spline monotone the same way
    along that axis, because spline values are local convex combinations of
    consecutive coefficients.
    """
    model = fit(cloud, space, weight, policy)
    return classify_monotone(model.spline.coefficients, axis=axis, atol=atol)


def coefficient_slopes(kv, coeffs: np.ndarray) -> np.ndarray:
    """Normalized consecutive coefficient differences.

    Entry i is (c[i] - c[i-1]) / (t[i+p] - t[i]); when the knot window is
    degenerate the previous slope is carried forward, matching the knot
    averages coinciding there.
    """
    p, t = kv.degree, kv.knots
    c = np.asarray(coeffs, dtype=float)
    out = np.empty(len(c) - 1)
    prev = 0.0
    for j in range(1, len(c)):
        den = t[j + p] - t[j]
        prev = (c[j] - c[j - 1]) / den if den > 0.0 else prev
        out[j - 1] = prev
    return out


def classify_convexity(kv, values: np.ndarray, atol: float | None = None) -> ConvexityResult:
    """Classify estimator values at a knot vector's averages by slope trend.

    Nondecreasing normalized slopes mean convex, nonincreasing mean concave,
    all equal means affine (reported convex with the affine flag). The
    default tolerance absorbs summation-order noise only; pass atol=0 for
    exact comparisons.
    """
    slopes = coefficient_slopes(kv, values)
    if atol is None:
        atol = 1e-12 * max(1.0, float(np.abs(slopes).max()) if len(slopes) else 1.0)
    d = np.diff(slopes)
    up = bool(np.all(d >= -atol))
    down = bool(np.all(d <= atol))
    if up and down:
        return ConvexityResult("convex", True)
    if up:
        return ConvexityResult("convex", False)
    if down:
        return ConvexityResult("concave", False)
    return ConvexityResult("neither", False)


def w_convex_check(cloud: PointCloud, kv, weight: WeightSpec,
                   policy: FitPolicy = FitPolicy(), atol: float | None = None) -> ConvexityResult:
    """Convexity classification of a univariate cloud's estimator values."""
    if cloud.d != 1:
        raise ValueError("convexity check is univariate")
    space = TensorSplineSpace((kv,))
    model = fit(cloud, space, weight, policy)
    return classify_convexity(kv, model.spline.coefficients, atol=atol)
