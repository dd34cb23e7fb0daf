"""Flat torus with a smooth, seeded trigonometric perturbation of the metric."""
import itertools
import logging
import math
from typing import List, Tuple

import numpy as np

from .base import DEFAULT_EXCISION_ANGLE, DEFAULT_ISOMETRY_RESOLUTION, Geometry
from .errors import MetricError
from .tensor_core import check_dim

logger = logging.getLogger(__name__)

DEFAULT_AMPLITUDE = 0.05
DEFAULT_MODE_COUNT = 4


def wave_vectors(n: int) -> List[Tuple[int, ...]]:
    """Nonzero k in {-1, 0, 1}^n, one representative per +/- pair."""
    out = []
    for k in itertools.product((-1, 0, 1), repeat=n):
        first = next((c for c in k if c), 0)
        if first > 0:
            out.append(k)
    return out


class PerturbedTorus(Geometry):
    """g = I + amplitude * sum_m A_m cos(k_m . x + phase_m) / mode_count on [0, 2 pi)^n.

    Each A_m is a random symmetric matrix of unit spectral norm, so the metric
    stays positive definite for amplitude < 1. There is no closed-form oracle.
    """

    name = "perturbed_torus"

    def __init__(self, n: int = 4, amplitude: float = DEFAULT_AMPLITUDE, seed: int = 0,
                 mode_count: int = DEFAULT_MODE_COUNT, excision_angle: float = DEFAULT_EXCISION_ANGLE,
                 isometry_resolution: int = DEFAULT_ISOMETRY_RESOLUTION):
        super().__init__(excision_angle, isometry_resolution)
        self.n = check_dim(n)
        if amplitude < 0:
            raise MetricError(f"Perturbation amplitude must be >= 0; got {amplitude}")
        candidates = wave_vectors(self.n)
        if not 1 <= mode_count <= len(candidates):
            raise MetricError(f"Mode count must be in [1, {len(candidates)}]; got {mode_count}")
        self.amplitude = float(amplitude)
        self.seed = int(seed)
        self.mode_count = int(mode_count)

        rng = np.random.default_rng(self.seed)
        picked = rng.choice(len(candidates), size=self.mode_count, replace=False)
        self.modes = np.array([candidates[i] for i in sorted(picked)], dtype=float)
        raw = rng.standard_normal((self.mode_count, self.n, self.n))
        sym = 0.5 * (raw + np.swapaxes(raw, -1, -2))
        self.coefficients = sym / np.max(np.abs(np.linalg.eigvalsh(sym)), axis=-1)[:, None, None]
        self.phases = rng.uniform(0.0, 2.0 * math.pi, self.mode_count)
        logger.debug("Perturbed torus modes: %s", self.modes.tolist())

    @property
    def dim(self) -> int:
        return self.n

    def extents(self) -> Tuple[Tuple[float, float], ...]:
        return ((0.0, 2.0 * math.pi),) * self.n

    def polar_axes(self) -> Tuple[int, ...]:
        return ()

    @property
    def einstein(self) -> bool:
        return self.amplitude == 0.0

    @property
    def parallel_ricci(self) -> bool:
        return self.amplitude == 0.0

    def isometry_axes(self) -> Tuple[int, ...]:
        # amplitude 0 is the flat torus
        return tuple(range(self.n)) if self.amplitude == 0.0 else ()

    def _arguments(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("...a,ma->...m", x, self.modes) + self.phases

    def metric_at(self, x: np.ndarray) -> np.ndarray:
        waves = np.cos(self._arguments(x))
        perturbation = np.einsum("...m,mij->...ij", waves, self.coefficients) / self.mode_count
        return np.eye(self.n) + self.amplitude * perturbation

    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        waves = -np.sin(self._arguments(x))
        return self.amplitude * np.einsum("...m,ma,mij->...aij", waves, self.modes,
                                          self.coefficients) / self.mode_count

    @property
    def euler_characteristic(self) -> int:
        return 0
