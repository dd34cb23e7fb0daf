"""Round n-sphere in polar angles."""
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


class RoundSphere(Geometry):
    """S^n(r) with coordinates (psi_1, ..., psi_{n-1}, phi).

    The psi axes run over (0, pi) and are excised near both poles; phi is
    periodic and an isometry direction. Quotients of the sphere share its
    local geometry and are represented by the sphere itself.
    """

    name = "round_sphere"
    einstein = True
    parallel_ricci = True

    def __init__(self, n: int = 4, radius: float = 1.0, excision_angle: float = DEFAULT_EXCISION_ANGLE,
                 isometry_resolution: int = DEFAULT_ISOMETRY_RESOLUTION):
        super().__init__(excision_angle, isometry_resolution)
        self.n = check_dim(n)
        if not radius > 0:
            raise MetricError(f"Sphere radius must be positive; got {radius}")
        self.radius = float(radius)

    @property
    def dim(self) -> int:
        return self.n

    def extents(self) -> Tuple[Tuple[float, float], ...]:
        return ((0.0, math.pi),) * (self.n - 1) + ((0.0, 2.0 * math.pi),)

    def polar_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.n - 1))

    def isometry_axes(self) -> Tuple[int, ...]:
        return (self.n - 1,)

    def metric_at(self, x: np.ndarray) -> np.ndarray:
        return diagonal_matrix(polar_metric(x, self.radius))

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        return diagonal_matrix(polar_metric_derivative(x, self.radius))

    @property
    def sectional_curvature(self) -> float:
        return 1.0 / self.radius ** 2

    @property
    def scalar_curvature(self) -> float:
        return self.n * (self.n - 1) * self.sectional_curvature

    def oracle(self) -> AnalyticOracle:
        return AnalyticOracle(self, [CurvatureBlock(tuple(range(self.n)), self.sectional_curvature)])

    def volume(self) -> float:
        return sphere_volume(self.n, self.radius)

    def exact_yamabe(self) -> Optional[float]:
        """R Vol^(2/n), the Yamabe invariant of the round sphere."""
        return self.scalar_curvature * self.volume() ** (2.0 / self.n)

    @property
    def euler_characteristic(self) -> int:
        return 2 if self.n % 2 == 0 else 0
