"""Base interface for the built-in example geometries."""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .chart_geometry import Chart, MetricField
from .errors import DimensionError, MetricError
from .tensor_core import Alg4, Sym2, Symmetry, kulkarni_nomizu, tracefree_project, weyl_from_riemann

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 12
DEFAULT_ISOMETRY_RESOLUTION = 8
DEFAULT_EXCISION_ANGLE = math.pi / 4
MIN_EXCISION_CELLS = 3

Resolution = Union[int, Sequence[int]]


@dataclass(frozen=True)
class GeometrySpec:
    """A zoo geometry plus the grid it is sampled on.

    ``resolution`` is either one base count (isometry axes are capped at
    ``isometry_resolution``) or an explicit count per axis.
    """
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    resolution: Tuple[int, ...] = (DEFAULT_RESOLUTION,)
    excision_angle: float = DEFAULT_EXCISION_ANGLE
    isometry_resolution: int = DEFAULT_ISOMETRY_RESOLUTION

    def as_dict(self) -> Dict:
        return {"kind": self.kind, "params": dict(sorted(self.params.items())),
                "resolution": list(self.resolution), "excision_angle": self.excision_angle,
                "isometry_resolution": self.isometry_resolution}


@dataclass(frozen=True)
class CurvatureBlock:
    """Axes of a constant-curvature factor and its sectional curvature."""
    axes: Tuple[int, ...]
    curvature: float


class AnalyticOracle:
    """Closed-form curvature of a product of space forms.

    The Riemann tensor is sum_b K_b/2 (g_b o g_b), where g_b is the metric
    restricted to the axes of block b. Cotton vanishes (the Ricci tensor is
    parallel) and Bach reduces to W_ikjl R^kl / (n-2).
    """

    def __init__(self, geometry: "Geometry", blocks: Sequence[CurvatureBlock] = ()):
        self.geometry = geometry
        self.blocks = tuple(blocks)

    @property
    def dim(self) -> int:
        return self.geometry.dim

    def _block_metrics(self, g: np.ndarray) -> List[Tuple[CurvatureBlock, np.ndarray]]:
        out = []
        for block in self.blocks:
            sel = np.zeros(self.dim, dtype=bool)
            sel[list(block.axes)] = True
            out.append((block, g * (sel[:, None] & sel[None, :])))
        return out

    def metric(self, x: np.ndarray) -> Sym2:
        return Sym2(self.geometry.metric_at(x))

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        """gamma[..., k, i, j] from the exact metric derivatives."""
        g = self.geometry.metric_at(x)
        dg = self.geometry.metric_derivative(x)
        first = np.swapaxes(dg, -3, -2)
        lowered = 0.5 * (first + np.swapaxes(first, -1, -2) - dg)
        return np.einsum("...kl,...lij->...kij", np.linalg.inv(g), lowered)

    def riemann(self, x: np.ndarray) -> Alg4:
        g = self.geometry.metric_at(x)
        values = np.zeros(g.shape[:-2] + (self.dim,) * 4)
        for block, gb in self._block_metrics(g):
            values += 0.5 * block.curvature * kulkarni_nomizu(Sym2(gb), Sym2(gb)).values
        return Alg4(values, Symmetry.riemann())

    def ricci(self, x: np.ndarray) -> Sym2:
        g = self.geometry.metric_at(x)
        values = np.zeros(g.shape)
        for block, gb in self._block_metrics(g):
            values += (len(block.axes) - 1) * block.curvature * gb
        return Sym2(values)

    def scalar(self, x: np.ndarray) -> np.ndarray:
        value = sum(len(b.axes) * (len(b.axes) - 1) * b.curvature for b in self.blocks)
        return np.full(np.shape(x)[:-1], float(value))

    def weyl(self, x: np.ndarray) -> Alg4:
        return weyl_from_riemann(self.riemann(x), self.ricci(x), self.scalar(x), self.metric(x))

    def evaluate(self, chart: Chart) -> Dict[str, np.ndarray]:
        """Coordinate components of every oracle field at the chart's sample points."""
        x = chart.coordinates()
        g = self.metric(x)
        ric = self.ricci(x)
        scalar = self.scalar(x)
        weyl = self.weyl(x)
        ginv = np.linalg.inv(g.values)
        ric_up = np.einsum("...ka,...ab,...lb->...kl", ginv, ric.values, ginv)
        n = self.dim
        return {
            "metric": g.values,
            "gamma": self.christoffel(x),
            "riemann": self.riemann(x).values,
            "ricci": ric.values,
            "scalar": scalar,
            "traceless_ricci": tracefree_project(ric, g).values,
            "weyl": weyl.values,
            "cotton": np.zeros(chart.shape + (n,) * 3),
            "bach": np.einsum("...ikjl,...kl->...ij", weyl.values, ric_up) / (n - 2),
        }


class Geometry(ABC):
    """Base class for example geometries sampled on a single coordinate chart."""

    name: str = ""
    einstein: bool = False
    parallel_ricci: bool = False

    def __init__(self, excision_angle: float = DEFAULT_EXCISION_ANGLE,
                 isometry_resolution: int = DEFAULT_ISOMETRY_RESOLUTION):
        if not 0.0 < excision_angle < math.pi / 2:
            raise MetricError(f"Excision angle must lie in (0, pi/2); got {excision_angle}")
        self.excision_angle = float(excision_angle)
        self.isometry_resolution = int(isometry_resolution)

    @property
    @abstractmethod
    def dim(self) -> int:
        """Manifold dimension."""
        pass

    @abstractmethod
    def extents(self) -> Tuple[Tuple[float, float], ...]:
        """Coordinate range of each axis."""
        pass

    @abstractmethod
    def polar_axes(self) -> Tuple[int, ...]:
        """Axes whose end points are coordinate singularities (excised)."""
        pass

    @abstractmethod
    def metric_at(self, x: np.ndarray) -> np.ndarray:
        """
        Metric components at coordinates x.

        Args:
            x: Coordinates, shape (..., n)

        Returns:
            np.ndarray: g_ij with shape (..., n, n)
        """
        pass

    @abstractmethod
    def metric_derivative(self, x: np.ndarray) -> np.ndarray:
        """
        Exact first derivatives of the metric.

        Args:
            x: Coordinates, shape (..., n)

        Returns:
            np.ndarray: d_a g_ij stored [..., a, i, j]
        """
        pass

    def isometry_axes(self) -> Tuple[int, ...]:
        """Axes along which the metric components are constant."""
        return ()

    def oracle(self) -> Optional[AnalyticOracle]:
        return None

    def exact_yamabe(self) -> Optional[float]:
        """Yamabe invariant when it is known in closed form."""
        return None

    @property
    def euler_characteristic(self) -> Optional[int]:
        return None

    def resolution(self, resolution: Resolution) -> Tuple[int, ...]:
        """Per-axis sample counts for a base count or an explicit tuple."""
        if isinstance(resolution, (int, np.integer)):
            base = int(resolution)
            iso = set(self.isometry_axes())
            return tuple(min(base, self.isometry_resolution) if a in iso else base for a in range(self.dim))
        counts = tuple(int(r) for r in resolution)
        if len(counts) == 1:
            return self.resolution(counts[0])
        if len(counts) != self.dim:
            raise DimensionError(f"Resolution needs 1 or {self.dim} entries; got {len(counts)}")
        return counts

    def chart(self, resolution: Resolution = DEFAULT_RESOLUTION) -> Chart:
        counts = self.resolution(resolution)
        extents = self.extents()
        polar = set(self.polar_axes())
        excision = []
        for axis, ((a, b), res) in enumerate(zip(extents, counts)):
            if axis in polar:
                h = (b - a) / res
                excision.append(max(MIN_EXCISION_CELLS, int(round(self.excision_angle / h))))
            else:
                excision.append(0)
        return Chart(extents, counts, tuple(a not in polar for a in range(self.dim)), tuple(excision))

    def characteristic_spacing(self, chart: Chart) -> float:
        """Largest spacing over the axes the metric actually varies along."""
        iso = set(self.isometry_axes())
        varying = [h for a, h in enumerate(chart.spacing) if a not in iso]
        return max(varying or chart.spacing)

    def build(self, resolution: Resolution = DEFAULT_RESOLUTION, spd_tolerance: float = 1e-10) -> MetricField:
        """Sample the metric on its chart.

        Raises:
            MetricError: If the chart is too coarse or the metric is not positive definite
        """
        chart = self.chart(resolution)
        logger.info("Building %s on grid %s", self.name or type(self).__name__, chart.shape)
        return MetricField(chart, Sym2(self.metric_at(chart.coordinates())), spd_tolerance)

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "dim": self.dim, "einstein": self.einstein,
                "parallel_ricci": self.parallel_ricci, "euler_characteristic": self.euler_characteristic,
                "exact_yamabe": self.exact_yamabe()}


def sphere_volume(p: int, radius: float = 1.0) -> float:
    """Volume of the round p-sphere of the given radius."""
    return 2.0 * math.pi ** ((p + 1) / 2.0) / math.gamma((p + 1) / 2.0) * radius ** p


def polar_metric(x: np.ndarray, radius: float) -> np.ndarray:
    """Diagonal of the round metric in polar angles (psi_1, ..., psi_{p-1}, phi).

    g_kk = r^2 prod_{m<k} sin^2 psi_m.
    """
    p = x.shape[-1]
    diag = np.empty(x.shape)
    running = np.full(x.shape[:-1], radius * radius)
    for k in range(p):
        diag[..., k] = running
        if k < p - 1:
            running = running * np.sin(x[..., k]) ** 2
    return diag


def polar_metric_derivative(x: np.ndarray, radius: float) -> np.ndarray:
    """d_a g_kk = 2 cot(psi_a) g_kk for a < k on the polar axes, stored [..., a, k]."""
    p = x.shape[-1]
    diag = polar_metric(x, radius)
    out = np.zeros(x.shape + (p,))
    for a in range(p - 1):
        cot = np.cos(x[..., a]) / np.sin(x[..., a])
        for k in range(a + 1, p):
            out[..., a, k] = 2.0 * cot * diag[..., k]
    return out


def diagonal_matrix(diag: np.ndarray) -> np.ndarray:
    n = diag.shape[-1]
    out = np.zeros(diag.shape + (n,))
    idx = np.arange(n)
    out[..., idx, idx] = diag
    return out
