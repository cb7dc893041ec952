"""Knot vectors, B-spline bases, tensor-product spaces and spline functions.

Everything is 0-indexed. A global knot sequence t[0..n+p] (length n+p+1) of
degree p carries n basis functions; basis i is supported on the closed
interval [t[i], t[i+p+1]]. Basis values follow the half-open interval
convention with the 0/0 := 0 rule, so a clamped basis evaluated naively at
the right end b of its domain would vanish there; the evaluation entry
points special-case x == b to the left limit so clamped bases interpolate
both boundary coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class KnotVector:
    """A polynomial degree plus a nondecreasing global knot sequence.

    The number of basis functions is n = len(knots) - degree - 1 and the
    parametric domain is [knots[degree], knots[n]]. No knot value may occur
    more than degree+1 times. Validity here is weaker than clampedness:
    ``is_regular`` reports whether both domain endpoints carry full
    multiplicity degree+1 and every basis function has nonempty support.
    """

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        object.__setattr__(self, "knots", _readonly(self.knots))
        t = self.knots
        if t.ndim != 1 or len(t) < self.degree + 2:
            raise ValueError(
                f"need at least degree+2 = {self.degree + 2} knots, got {t.shape}"
            )
        if np.any(np.diff(t) < 0):
            raise ValueError("knots must be nondecreasing")
        _, counts = np.unique(t, return_counts=True)
        if np.any(counts > self.degree + 1):
            raise ValueError(
                f"knot multiplicity exceeds degree+1 = {self.degree + 1}"
            )

    @property
    def n(self) -> int:
        """Number of basis functions carried by this vector."""
        return len(self.knots) - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        """Parametric interval [t[p], t[n]]."""
        return float(self.knots[self.degree]), float(self.knots[self.n])

    @cached_property
    def is_regular(self) -> bool:
        """True when the vector is clamped with nonempty basis supports.

        Requires n >= degree+1, full multiplicity degree+1 at both domain
        endpoints, and t[j] < t[j+degree+1] for every basis index j.
        """
        p, t, n = self.degree, self.knots, self.n
        if n < p + 1:
            return False
        if t[0] != t[p] or t[n] != t[n + p]:
            return False
        return bool(np.all(t[: n] < t[p + 1:]))

    def multiplicity(self, z: float) -> int:
        return int(np.count_nonzero(self.knots == z))


def make_uniform_regular(a: float, b: float, n: int, p: int) -> KnotVector:
    """Clamped knot vector on [a, b] with n basis functions of degree p.

    Both endpoints get multiplicity p+1 and the n-p-1 interior knots are
    uniformly spaced.
    """
    if not a < b:
        raise DomainError(f"need a < b, got a={a}, b={b}")
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    if n < p + 1:
        raise ValueError(f"need n >= p+1 = {p + 1} basis functions, got {n}")
    interior = np.linspace(a, b, n - p + 1)[1:-1]
    knots = np.concatenate([np.full(p + 1, float(a)), interior, np.full(p + 1, float(b))])
    return KnotVector(p, knots)


def _find_spans(kv: KnotVector, x: np.ndarray) -> np.ndarray:
    """Half-open span indices: t[s] <= x < t[s+1], x == b mapped to the last span."""
    s = np.searchsorted(kv.knots, x, side="right") - 1
    return np.clip(s, kv.degree, kv.n - 1)


def _check_in_domain(kv: KnotVector, x: np.ndarray) -> None:
    a, b = kv.domain
    if np.any(x < a) or np.any(x > b):
        bad = np.asarray(x)[(np.asarray(x) < a) | (np.asarray(x) > b)]
        raise DomainError(f"point(s) {bad[:4]} outside domain [{a}, {b}]")


def _basis_rows(kv: KnotVector, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero basis block at each point of x.

    Returns (spans, rows) where rows[m, r] is the value of basis function
    spans[m]-p+r at x[m]. Uses the triangular recurrence over the nonzero
    block, which never divides by zero on nonempty spans. Cost O(p^2) per
    point, vectorized across points.
    """
    p, t = kv.degree, kv.knots
    x = np.asarray(x, dtype=float)
    spans = _find_spans(kv, x)
    m = len(x)
    rows = np.zeros((m, p + 1))
    rows[:, 0] = 1.0
    left = np.empty((m, p))
    right = np.empty((m, p))
    for j in range(1, p + 1):
        left[:, j - 1] = x - t[spans + 1 - j]
        right[:, j - 1] = t[spans + j] - x
        saved = np.zeros(m)
        for r in range(j):
            temp = rows[:, r] / (right[:, r] + left[:, j - 1 - r])
            rows[:, r] = saved + right[:, r] * temp
            saved = left[:, j - 1 - r] * temp
        rows[:, j] = saved
    return spans, rows


def bspline_eval(kv: KnotVector, i: int, x: float) -> float:
    """Value of basis function i at x by the two-term degree recursion.

    Base case: indicator of the half-open knot interval. Any 0/0 term is
    taken as 0. Returns 0 for x outside [t[i], t[i+p+1]]. For a regular
    vector, x equal to the right domain end evaluates the left limit so the
    last basis function reaches 1 there.
    """
    if not 0 <= i < kv.n:
        raise IndexError(f"basis index {i} out of range [0, {kv.n})")
    p, t = kv.degree, kv.knots
    x = float(x)
    if kv.is_regular and x == kv.domain[1]:
        span = kv.n - 1
        if not span - p <= i <= span:
            return 0.0
        _, rows = _basis_rows(kv, np.array([x]))
        return float(rows[0, i - (span - p)])
    loc = t[i : i + p + 2]
    vals = np.array([1.0 if loc[j] <= x < loc[j + 1] else 0.0 for j in range(p + 1)])
    for q in range(1, p + 1):
        nxt = np.zeros(p + 1 - q)
        for j in range(p + 1 - q):
            acc = 0.0
            den = loc[j + q] - loc[j]
            if den > 0.0:
                acc += (x - loc[j]) / den * vals[j]
            den = loc[j + q + 1] - loc[j + 1]
            if den > 0.0:
                acc += (loc[j + q + 1] - x) / den * vals[j + 1]
            nxt[j] = acc
        vals = nxt
    return float(vals[0])


def knot_averages(kv: KnotVector) -> np.ndarray:
    """Running means of degree-many consecutive interior knots.

    Entry i averages knots t[i+1..i+p]. For a regular vector the sequence is
    nondecreasing and starts/ends exactly at the domain endpoints. These are
    the abscissae at which control-point estimators are anchored.
    """
    p, t = kv.degree, kv.knots
    if p < 1:
        raise ValueError("knot averages need degree >= 1")
    return np.array([t[i + 1 : i + p + 1].mean() for i in range(kv.n)])


@dataclass(frozen=True, eq=False)
class TensorSplineSpace:
    """Tensor product of regular univariate spline spaces, one per axis."""

    axes: tuple[KnotVector, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        if len(axes) < 1:
            raise ValueError("need at least one axis")
        for k, kv in enumerate(axes):
            if kv.degree < 1:
                raise ValueError(f"axis {k}: degree must be >= 1")
            if not kv.is_regular:
                raise ValueError(f"axis {k}: knot vector is not regular")

    @classmethod
    def from_bounds(cls, lo, hi, n, degrees) -> "TensorSplineSpace":
        lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
        n = np.broadcast_to(np.atleast_1d(n), lo.shape)
        degrees = np.broadcast_to(np.atleast_1d(degrees), lo.shape)
        return cls(tuple(
            make_uniform_regular(lo[k], hi[k], int(n[k]), int(degrees[k]))
            for k in range(len(lo))
        ))

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(kv.degree for kv in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(kv.n for kv in self.axes)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def domain(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([kv.domain[0] for kv in self.axes])
        hi = np.array([kv.domain[1] for kv in self.axes])
        return lo, hi

    @cached_property
    def knot_average_grids(self) -> tuple[np.ndarray, ...]:
        return tuple(knot_averages(kv) for kv in self.axes)

    def site(self, multi_index) -> np.ndarray:
        """Knot-average location of one coefficient."""
        return np.array([
            self.knot_average_grids[k][multi_index[k]] for k in range(self.d)
        ])


@dataclass(frozen=True, eq=False)
class SplineFunction:
    """A tensor-product spline: a space plus its coefficient grid."""

    space: TensorSplineSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = _readonly(self.coefficients)
        if c.shape != self.space.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match space shape {self.space.shape}"
            )
        object.__setattr__(self, "coefficients", c)

    def __call__(self, u):
        return spline_eval(self, u)


def _normalize_points(d: int, u) -> tuple[np.ndarray, bool]:
    """Coerce u to an (m, d) array; second value marks single-point input."""
    arr = np.asarray(u, dtype=float)
    if d == 1:
        if arr.ndim == 0:
            return arr.reshape(1, 1), True
        if arr.ndim == 1:
            return arr.reshape(-1, 1), False
        if arr.ndim == 2 and arr.shape[1] == 1:
            return arr, False
    else:
        if arr.ndim == 1 and arr.shape[0] == d:
            return arr.reshape(1, d), True
        if arr.ndim == 2 and arr.shape[1] == d:
            return arr, False
    raise ValueError(f"cannot interpret input of shape {arr.shape} as points in R^{d}")


def _space_rows(space: TensorSplineSpace, pts: np.ndarray):
    """Per-axis (spans, rows) pairs for a batch of points, domain-checked."""
    out = []
    for k, kv in enumerate(space.axes):
        _check_in_domain(kv, pts[:, k])
        out.append(_basis_rows(kv, pts[:, k]))
    return out


def basis_row(space: TensorSplineSpace, u) -> tuple[tuple[int, ...], np.ndarray]:
    """Nonzero basis block at a single point.

    Returns (first, block): the multi-index of the first active basis
    function per axis, and the dense block of prod(p_k + 1) tensor basis
    values. The block is nonnegative and sums to 1.
    """
    pts, single = _normalize_points(space.d, u)
    if not single and len(pts) != 1:
        raise ValueError("basis_row takes a single point")
    per_axis = _space_rows(space, pts)
    first = tuple(int(spans[0]) - kv.degree for (spans, _), kv in zip(per_axis, space.axes))
    block = per_axis[0][1][0]
    for spans, rows in per_axis[1:]:
        block = np.multiply.outer(block, rows[0])
    return first, block


def spline_eval(f: SplineFunction, u):
    """Evaluate a spline at one point or a batch of points.

    Accepts a scalar (d == 1), a (d,) point, an (m,) batch when d == 1, or
    an (m, d) batch. Each evaluation touches only the local block of
    prod(p_k + 1) coefficients around the containing knot span.
    """
    space = f.space
    pts, single = _normalize_points(space.d, u)
    per_axis = _space_rows(space, pts)
    m = len(pts)
    # gather local coefficient windows with broadcast index arrays
    index_arrays = []
    for k, ((spans, _), kv) in enumerate(zip(per_axis, space.axes)):
        p = kv.degree
        idx = spans[:, None] - p + np.arange(p + 1)[None, :]
        shape = [m] + [1] * space.d
        shape[k + 1] = p + 1
        index_arrays.append(idx.reshape(shape))
    win = f.coefficients[tuple(index_arrays)]
    for k, (_, rows) in enumerate(per_axis):
        shape = [m] + [1] * space.d
        shape[k + 1] = rows.shape[1]
        win = win * rows.reshape(shape)
    vals = win.reshape(m, -1).sum(axis=1)
    return float(vals[0]) if single else vals


def insert_knot(f: SplineFunction, axis: int, z: float) -> SplineFunction:
    """Insert one knot into an axis without changing the spline's values.

    The new coefficient slab along the axis is the usual two-term convex
    blend of neighbouring coefficients; all other axes are untouched. The
    knot must lie strictly inside the domain and its multiplicity after
    insertion may not exceed degree+1.
    """
    space = f.space
    if not 0 <= axis < space.d:
        raise IndexError(f"axis {axis} out of range [0, {space.d})")
    kv = space.axes[axis]
    p, t, n = kv.degree, kv.knots, kv.n
    a, b = kv.domain
    z = float(z)
    if not a < z < b:
        raise DomainError(f"knot {z} not strictly inside ({a}, {b})")
    if kv.multiplicity(z) >= p + 1:
        raise ValueError(f"knot {z} already has multiplicity {p + 1}")
    span = int(np.searchsorted(t, z, side="right") - 1)
    new_knots = np.insert(t, span + 1, z)
    blend = np.zeros((n + 1, n))
    for i in range(n + 1):
        if i <= span - p:
            blend[i, i] = 1.0
        elif i >= span + 1:
            blend[i, i - 1] = 1.0
        else:
            alpha = (z - t[i]) / (t[i + p] - t[i])
            blend[i, i] = alpha
            blend[i, i - 1] = 1.0 - alpha
    coeffs = np.moveaxis(f.coefficients, axis, 0)
    coeffs = np.tensordot(blend, coeffs, axes=(1, 0))
    coeffs = np.moveaxis(coeffs, 0, axis)
    new_axes = list(space.axes)
    new_axes[axis] = KnotVector(p, new_knots)
    return SplineFunction(TensorSplineSpace(tuple(new_axes)), coeffs)
