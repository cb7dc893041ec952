"""Run configuration shared by the CLI subcommands."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from .weights import WeightSpec


def parse_weight(text: str) -> WeightSpec:
    """Parse compact weight descriptors like 'knn:k=9' or 'gaussian:sigma=0.5'."""
    family, _, tail = text.strip().partition(":")
    params: dict = {}
    if tail:
        for part in tail.split(","):
            key, _, val = part.partition("=")
            if not _:
                raise ValueError(f"malformed weight parameter {part!r} in {text!r}")
            params[key.strip()] = val.strip()
    family = family.strip()
    if family == "knn":
        return WeightSpec.knn(int(params.pop("k")))
    if family == "characteristic":
        return WeightSpec.characteristic(float(params.pop("r")))
    if family in ("gaussian", "exponential"):
        sigma = float(params.pop("sigma"))
        squared = params.pop("squared_norm", "0") in ("1", "true", "yes")
        if family == "gaussian":
            return WeightSpec.gaussian(sigma, squared_norm=squared)
        return WeightSpec.exponential(sigma)
    if family == "idw":
        return WeightSpec.idw()
    raise ValueError(f"unknown weight family {family!r}")


@dataclass
class FitConfig:
    """Everything a fit/eval/cv run needs, JSON-loadable with CLI overrides."""

    data: str | None = None
    degree: list[int] = field(default_factory=lambda: [2])
    n: list[int] = field(default_factory=lambda: [10])
    weight: str = "knn:k=10"
    policy: str = "error"
    drop_outside: bool = False
    domain: list[list[float]] | None = None  # [[lo, hi], ...] per axis
    seed: int = 0
    alpha: float = 0.05
    sigma_eps: float | None = None
    outlier_filter: bool = False
    outlier_factor: float = 1.5
    folds: int = 5
    repeats: int = 1
    cv_grid: list[int] | None = None
    grid_density: int | None = None
    normalize: str = "none"  # residual scaling in reports: none | max | range
    out: str | None = None

    @classmethod
    def load(cls, path) -> "FitConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        bad = set(raw) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        return cls(**raw)

    def override(self, **kwargs) -> "FitConfig":
        vals = asdict(self)
        for key, val in kwargs.items():
            if val is not None:
                vals[key] = val
        return FitConfig(**vals)

    def to_dict(self) -> dict:
        return asdict(self)

    def weight_spec(self) -> WeightSpec:
        return parse_weight(self.weight)
