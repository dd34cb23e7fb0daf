"""Finite-difference curvature against closed-form oracles, with refinement orders."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import stencils
from .base import AnalyticOracle, Geometry
from .chart_geometry import DEPTH, CurvatureBundle, MetricField, curvature_bundle
from .errors import PreconditionError

logger = logging.getLogger(__name__)

COMPARED_FIELDS = ("gamma", "riemann", "ricci", "scalar", "traceless_ricci", "weyl", "cotton", "bach")


@dataclass(frozen=True)
class OracleComparison:
    """Max absolute error per field over each field's retained grid points."""
    errors: Dict[str, float]
    spacing: float

    def as_dict(self) -> Dict:
        return {"errors": dict(sorted(self.errors.items())), "spacing": self.spacing}


def oracle_compare(bundle: CurvatureBundle, m: MetricField, oracle: Optional[AnalyticOracle],
                   spacing: Optional[float] = None) -> OracleComparison:
    """
    Compare every bundle field with the oracle in coordinate components.

    A field with no retained points (for instance Bach on a coarse polar
    chart) is reported as NaN.

    Raises:
        PreconditionError: If no oracle is available
    """
    if oracle is None:
        raise PreconditionError("No analytic oracle is available for this geometry")
    exact = oracle.evaluate(m.chart)
    errors = {}
    for name in COMPARED_FIELDS:
        mask = m.chart.retained_mask(DEPTH[name], bundle.stencil_order)
        if not mask.any():
            errors[name] = float("nan")
            continue
        computed = getattr(bundle, name)
        computed = getattr(computed, "values", computed)
        errors[name] = float(np.max(np.abs(computed - exact[name])[mask]))
    h = max(m.chart.spacing) if spacing is None else spacing
    logger.debug("Oracle errors at h=%.4f: %s", h, errors)
    return OracleComparison(errors, float(h))


def empirical_orders(errors: Sequence[float], spacings: Sequence[float]) -> List[float]:
    """Observed orders between consecutive rungs of a refinement ladder; NaN where undefined."""
    out = []
    for (e1, e2), (h1, h2) in zip(zip(errors, errors[1:]), zip(spacings, spacings[1:])):
        if not (e1 > 0 and e2 > 0 and math.isfinite(e1) and math.isfinite(e2)):
            out.append(float("nan"))
        else:
            out.append(stencils.empirical_order(e1, e2, h1, h2))
    return out


@dataclass
class OracleConvergence:
    """Oracle errors on a ladder of resolutions."""
    resolutions: List[int]
    spacings: List[float] = field(default_factory=list)
    comparisons: List[OracleComparison] = field(default_factory=list)

    def errors(self, name: str) -> List[float]:
        return [c.errors[name] for c in self.comparisons]

    def orders(self) -> Dict[str, List[float]]:
        return {name: empirical_orders(self.errors(name), self.spacings) for name in COMPARED_FIELDS}

    def ratios(self, name: str) -> List[float]:
        e = self.errors(name)
        return [a / b if b > 0 else float("nan") for a, b in zip(e, e[1:])]

    def as_dict(self) -> Dict:
        return {"resolutions": self.resolutions, "spacings": self.spacings,
                "comparisons": [c.as_dict() for c in self.comparisons], "orders": self.orders()}


def oracle_convergence(geometry: Geometry, resolutions: Sequence[int], order: int = 4,
                       spd_tolerance: float = 1e-10) -> OracleConvergence:
    """Build the geometry at each resolution and compare its curvature with the oracle."""
    oracle = geometry.oracle()
    if oracle is None:
        raise PreconditionError(f"Geometry '{geometry.name}' has no analytic oracle")
    out = OracleConvergence(list(resolutions))
    for res in sorted(resolutions):
        m = geometry.build(res, spd_tolerance)
        h = geometry.characteristic_spacing(m.chart)
        out.spacings.append(h)
        out.comparisons.append(oracle_compare(curvature_bundle(m, order), m, oracle, h))
        logger.info("Oracle rung %s finished", m.chart.shape)
    out.resolutions = sorted(out.resolutions)
    return out
