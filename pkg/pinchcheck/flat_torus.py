"""Flat n-torus."""
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from .base import AnalyticOracle, DEFAULT_EXCISION_ANGLE, DEFAULT_ISOMETRY_RESOLUTION, Geometry
from .errors import DimensionError, MetricError
from .tensor_core import check_dim


class FlatTorus(Geometry):
    """R^n / (L_1 Z x ... x L_n Z) with the Euclidean metric."""

    name = "flat_torus"
    einstein = True
    parallel_ricci = True

    def __init__(self, n: int = 4, periods: Optional[Sequence[float]] = None,
                 excision_angle: float = DEFAULT_EXCISION_ANGLE,
                 isometry_resolution: int = DEFAULT_ISOMETRY_RESOLUTION):
        super().__init__(excision_angle, isometry_resolution)
        self.n = check_dim(n)
        periods = (2.0 * math.pi,) * self.n if periods is None else tuple(float(p) for p in periods)
        if len(periods) != self.n:
            raise DimensionError(f"Torus needs {self.n} periods; got {len(periods)}")
        if min(periods) <= 0:
            raise MetricError(f"Torus periods must be positive; got {periods}")
        self.periods = periods

    @property
    def dim(self) -> int:
        return self.n

    def extents(self) -> Tuple[Tuple[float, float], ...]:
        return tuple((0.0, p) for p in self.periods)

    def polar_axes(self) -> Tuple[int, ...]:
        return ()

    def isometry_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.n))

    def metric_at(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.eye(self.n), x.shape[:-1] + (self.n, self.n)).copy()

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape[:-1] + (self.n,) * 3)

    def oracle(self) -> AnalyticOracle:
        return AnalyticOracle(self, [])

    def exact_yamabe(self) -> float:
        return 0.0

    @property
    def euler_characteristic(self) -> int:
        return 0
