"""Central finite-difference stencils on structured grids.

Fields are arrays shaped ``(*grid, *tensor)``; the first ``grid_ndim`` axes are
grid axes and every stencil wraps around them with ``np.roll``. Axes that are
not periodic rely on the chart's excision margin to absorb the wrap seam.
"""
from typing import Dict, Sequence

import numpy as np

from .errors import MetricError

# offset -> weight, to be divided by the grid spacing
CENTRAL_COEFFICIENTS: Dict[int, Dict[int, float]] = {
    2: {-1: -0.5, 1: 0.5},
    4: {-2: 1.0 / 12.0, -1: -2.0 / 3.0, 1: 2.0 / 3.0, 2: -1.0 / 12.0},
}


def check_order(order: int) -> int:
    if order not in CENTRAL_COEFFICIENTS:
        raise MetricError(f"Stencil order must be one of {sorted(CENTRAL_COEFFICIENTS)}; got {order}")
    return order


def stencil_radius(order: int) -> int:
    return check_order(order) // 2


def derivative(field: np.ndarray, axis: int, spacing: float, order: int = 4) -> np.ndarray:
    """First derivative along one grid axis."""
    coeffs = CENTRAL_COEFFICIENTS[check_order(order)]
    out = np.zeros_like(field, dtype=float)
    for offset, weight in coeffs.items():
        if offset < 0:
            continue
        # np.roll(f, -s)[j] == f[j + s]; antisymmetric weights, so constants differentiate to exactly 0
        out += weight * (np.roll(field, -offset, axis=axis) - np.roll(field, offset, axis=axis))
    return out / spacing


def gradient(field: np.ndarray, spacings: Sequence[float], order: int = 4) -> np.ndarray:
    """All first derivatives; the derivative index is inserted as the first tensor axis.

    Args:
        field: Array of shape (*grid, *tensor)
        spacings: Grid spacing per grid axis
        order: Stencil order (2 or 4)

    Returns:
        np.ndarray: Array of shape (*grid, n, *tensor)
    """
    grid_ndim = len(spacings)
    parts = [derivative(field, a, h, order) for a, h in enumerate(spacings)]
    return np.stack(parts, axis=grid_ndim)


def empirical_order(error_coarse: float, error_fine: float, h_coarse: float, h_fine: float) -> float:
    """Observed convergence order log(e1/e2) / log(h1/h2)."""
    if error_coarse <= 0.0 or error_fine <= 0.0 or h_coarse == h_fine:
        return float("nan")
    return float(np.log(error_coarse / error_fine) / np.log(h_coarse / h_fine))
