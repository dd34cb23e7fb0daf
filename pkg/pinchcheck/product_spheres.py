"""Riemannian products of two round spheres."""
import math
from typing import Optional, Tuple

import numpy as np

from .base import (
    AnalyticOracle,
    CurvatureBlock,
    DEFAULT_EXCISION_ANGLE,
    DEFAULT_ISOMETRY_RESOLUTION,
    Geometry,
    diagonal_matrix,
    polar_metric,
    polar_metric_derivative,
    sphere_volume,
)
from .errors import MetricError
from .tensor_core import check_dim

EINSTEIN_TOLERANCE = 1e-12


class ProductSpheres(Geometry):
    """S^p(r1) x S^q(r2); a one-dimensional factor is a circle of that radius.

    Each factor uses its own polar chart; the last angle of each factor is an
    isometry direction.
    """

    name = "product_spheres"
    parallel_ricci = True

    def __init__(self, p: int = 2, q: int = 2, r1: float = 1.0, r2: float = 1.0,
                 excision_angle: float = DEFAULT_EXCISION_ANGLE,
                 isometry_resolution: int = DEFAULT_ISOMETRY_RESOLUTION):
        super().__init__(excision_angle, isometry_resolution)
        if p < 1 or q < 1:
            raise MetricError(f"Sphere factors need dimension >= 1; got p={p}, q={q}")
        check_dim(p + q)
        if not (r1 > 0 and r2 > 0):
            raise MetricError(f"Sphere radii must be positive; got r1={r1}, r2={r2}")
        self.p, self.q = int(p), int(q)
        self.r1, self.r2 = float(r1), float(r2)

    @property
    def dim(self) -> int:
        return self.p + self.q

    @property
    def einstein(self) -> bool:
        k1 = (self.p - 1) / self.r1 ** 2
        k2 = (self.q - 1) / self.r2 ** 2
        return abs(k1 - k2) <= EINSTEIN_TOLERANCE * max(abs(k1), abs(k2), 1.0)

    def _factor_extents(self, k: int) -> Tuple[Tuple[float, float], ...]:
        return ((0.0, math.pi),) * (k - 1) + ((0.0, 2.0 * math.pi),)

    def extents(self) -> Tuple[Tuple[float, float], ...]:
        return self._factor_extents(self.p) + self._factor_extents(self.q)

    def polar_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.p - 1)) + tuple(self.p + a for a in range(self.q - 1))

    def isometry_axes(self) -> Tuple[int, ...]:
        return (self.p - 1, self.dim - 1)

    def _split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return x[..., :self.p], x[..., self.p:]

    def metric_at(self, x: np.ndarray) -> np.ndarray:
        a, b = self._split(x)
        return diagonal_matrix(np.concatenate([polar_metric(a, self.r1), polar_metric(b, self.r2)], axis=-1))

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        a, b = self._split(x)
        n, p = self.dim, self.p
        diag = np.zeros(x.shape + (n,))
        diag[..., :p, :p] = polar_metric_derivative(a, self.r1)
        diag[..., p:, p:] = polar_metric_derivative(b, self.r2)
        return diagonal_matrix(diag)

    def oracle(self) -> AnalyticOracle:
        n, p = self.dim, self.p
        return AnalyticOracle(self, [CurvatureBlock(tuple(range(p)), 1.0 / self.r1 ** 2),
                                     CurvatureBlock(tuple(range(p, n)), 1.0 / self.r2 ** 2)])

    @property
    def scalar_curvature(self) -> float:
        return (self.p * (self.p - 1) / self.r1 ** 2 + self.q * (self.q - 1) / self.r2 ** 2)

    def volume(self) -> float:
        return sphere_volume(self.p, self.r1) * sphere_volume(self.q, self.r2)

    def exact_yamabe(self) -> Optional[float]:
        """R Vol^(2/n) for Einstein products of spheres of dimension >= 2; unknown otherwise."""
        if not self.einstein or self.p < 2 or self.q < 2:
            return None
        return self.scalar_curvature * self.volume() ** (2.0 / self.dim)

    @property
    def euler_characteristic(self) -> int:
        def chi(k: int) -> int:
            return 2 if k % 2 == 0 else 0
        return chi(self.p) * chi(self.q)
