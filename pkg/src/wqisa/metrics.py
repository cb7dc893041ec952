"""Error reports and set-based comparison metrics."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .fitting import PointCloud, WqisaModel, evaluate
from .inference import CoefficientCovariance, se_band


@dataclass(frozen=True)
class ErrorReport:
    """Dispersion summary of residuals observed - predicted."""

    mse: float
    mae: float
    rmse: float
    min: float
    max: float
    mean: float
    median: float
    std: float

    def to_dict(self) -> dict:
        return asdict(self)


def dispersion(observed, predicted) -> ErrorReport:
    """Residual statistics of two equal-length value sequences."""
    obs = np.asarray(observed, dtype=float).reshape(-1)
    pred = np.asarray(predicted, dtype=float).reshape(-1)
    if len(obs) != len(pred):
        raise ValueError(f"length mismatch: {len(obs)} observed vs {len(pred)} predicted")
    if len(obs) == 0:
        raise ValueError("need at least one value")
    res = obs - pred
    mse = float(np.mean(res**2))
    return ErrorReport(
        mse=mse,
        mae=float(np.mean(np.abs(res))),
        rmse=float(np.sqrt(mse)),
        min=float(res.min()),
        max=float(res.max()),
        mean=float(res.mean()),
        median=float(np.median(res)),
        std=float(res.std()),
    )


def _as_points(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or len(a) == 0:
        raise ValueError("need a nonempty (m, t) point array")
    return a


def directed_hausdorff_normalized(a_points, b_points, ref: PointCloud) -> float:
    """max over a of the distance to b, in units of the reference diameter.

    Asymmetric by construction; 0 when every point of a sits on one of b.
    """
    a = _as_points(a_points)
    b = _as_points(b_points)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    diam = ref.diameter
    if diam == 0.0:
        raise ValueError("reference cloud has zero diameter")
    worst = 0.0
    for start in range(0, len(a), 256):
        chunk = a[start : start + 256]
        d2 = ((chunk[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        worst = max(worst, float(d2.min(axis=1).max()))
    return float(np.sqrt(worst)) / diam


def snap_points(points, cell: float) -> set[tuple[int, ...]]:
    """Quantize points onto a grid of the given cell size."""
    if cell <= 0:
        raise ValueError(f"cell size must be > 0, got {cell}")
    pts = _as_points(points)
    return {tuple(row) for row in np.round(pts / cell).astype(np.int64)}


def jaccard(a_points, b_points, cell: float | None = None) -> float:
    """Intersection-over-union of two point sets after grid snapping.

    Default cell size is 1/512 of the diagonal of the joint bounding box;
    identical sets score 1 regardless of the cell.
    """
    a = _as_points(a_points)
    b = _as_points(b_points)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if cell is None:
        both = np.vstack([a, b])
        diag = float(np.sqrt(((both.max(axis=0) - both.min(axis=0)) ** 2).sum()))
        cell = diag / 512.0 if diag > 0.0 else 1.0
    sa, sb = snap_points(a, cell), snap_points(b, cell)
    union = sa | sb
    if not union:
        raise ValueError("both point sets are empty")
    return len(sa & sb) / len(union)


def band_coverage(cloud: PointCloud, model: WqisaModel,
                  covariance: CoefficientCovariance, alpha: float = 0.05) -> float:
    """Fraction of cloud responses inside the standard-error band."""
    x = np.clip(cloud.x, *model.space.domain)
    lo, hi = se_band(model, covariance, x, alpha=alpha)
    return float(np.mean((cloud.y >= lo) & (cloud.y <= hi)))
