"""Numerical curvature toolkit for Weyl/Ricci pinching hypotheses."""

__version__ = "0.1.0"

from pathlib import Path
from typing import Optional

# Import base classes
from .base import AnalyticOracle, Geometry, GeometrySpec
from .factory import GeometryFactory
from .errors import (
    DimensionError,
    MetricError,
    PinchcheckError,
    PreconditionError,
    SpecParseError,
    SymmetryError,
    ThetaSingularityError,
)

# Import geometry implementations
from .round_sphere import RoundSphere
from .flat_torus import FlatTorus
from .product_spheres import ProductSpheres
from .perturbed_torus import PerturbedTorus

from .chart_geometry import Chart, CurvatureBundle, MetricField, curvature_bundle
from .integral_verifier import CurvatureContext
from .config import RunConfig, Tolerances
from .report import Report


def analyze(spec_path: Path, resolution: Optional[int] = None, out: Optional[Path] = None) -> Report:
    """
    Run the analyze command on a spec file and optionally save the report.

    Args:
        spec_path: Path to the geometry spec file
        resolution: Override of the spec file's resolution
        out: Path of the JSON report

    Returns:
        Report: The analysis report
    """
    from .commands import cmd_analyze
    from .config import DEFAULT_RESOLUTIONS, DEFAULT_STENCIL_ORDER, parse_spec_file

    spec = parse_spec_file(Path(spec_path))
    config = RunConfig(
        "analyze",
        spec_path=str(spec_path),
        geometry=spec.geometry,
        stencil_order=spec.stencil_order or DEFAULT_STENCIL_ORDER,
        resolutions=(resolution,) if resolution else (spec.resolutions or DEFAULT_RESOLUTIONS),
    )
    report = cmd_analyze(config)
    if out is not None:
        report.save(Path(out))
    return report


__all__ = [
    'AnalyticOracle',
    'Chart',
    'CurvatureBundle',
    'CurvatureContext',
    'DimensionError',
    'FlatTorus',
    'Geometry',
    'GeometryFactory',
    'GeometrySpec',
    'MetricError',
    'MetricField',
    'PerturbedTorus',
    'PinchcheckError',
    'PreconditionError',
    'ProductSpheres',
    'Report',
    'RoundSphere',
    'RunConfig',
    'SpecParseError',
    'SymmetryError',
    'ThetaSingularityError',
    'Tolerances',
    'analyze',
    'curvature_bundle',
]
