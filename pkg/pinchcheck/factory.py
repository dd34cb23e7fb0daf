"""Factory for the built-in example geometries."""
from typing import Dict, Optional, Tuple, Type

from .base import AnalyticOracle, Geometry, GeometrySpec
from .chart_geometry import MetricField
from .flat_torus import FlatTorus
from .perturbed_torus import PerturbedTorus
from .product_spheres import ProductSpheres
from .round_sphere import RoundSphere


class GeometryFactory:
    """Factory for creating and managing example geometries."""

    _geometries: Dict[str, Type[Geometry]] = {
        "round_sphere": RoundSphere,
        "flat_torus": FlatTorus,
        "product_spheres": ProductSpheres,
        "perturbed_torus": PerturbedTorus,
    }

    @classmethod
    def get_geometry(cls, kind: str, **kwargs) -> Geometry:
        """
        Get an instance of the specified geometry kind.

        Args:
            kind: Geometry kind ('round_sphere', 'flat_torus', 'product_spheres' or 'perturbed_torus')
            **kwargs: Parameters passed to the geometry constructor

        Returns:
            An instance of the specified geometry

        Raises:
            ValueError: If kind is not recognized
        """
        geometry_class = cls._geometries.get(kind.lower())
        if not geometry_class:
            available = ", ".join(sorted(cls._geometries))
            raise ValueError(f"Unknown geometry kind: {kind}. Available kinds: {available}")
        return geometry_class(**kwargs)

    @classmethod
    def register_geometry(cls, name: str, geometry_class: Type[Geometry]) -> None:
        """
        Register a new geometry kind.

        Raises:
            TypeError: If geometry_class is not a subclass of Geometry
        """
        if not (isinstance(geometry_class, type) and issubclass(geometry_class, Geometry)):
            raise TypeError("Geometry class must be a subclass of Geometry")
        cls._geometries[name.lower()] = geometry_class

    @classmethod
    def available_geometries(cls) -> Dict[str, Type[Geometry]]:
        return cls._geometries.copy()

    @classmethod
    def from_spec(cls, spec: GeometrySpec) -> Geometry:
        return cls.get_geometry(spec.kind, excision_angle=spec.excision_angle,
                                isometry_resolution=spec.isometry_resolution, **spec.params)

    @classmethod
    def build(cls, spec: GeometrySpec, spd_tolerance: float = 1e-10) -> Tuple[MetricField, Optional[AnalyticOracle]]:
        """
        Sample a geometry on its chart in one step.

        Args:
            spec: Geometry kind, parameters and grid
            spd_tolerance: Smallest admissible metric eigenvalue

        Returns:
            Tuple: (metric field, oracle or None when no closed form exists)

        Raises:
            MetricError: If the resolution is too low or the metric is not positive definite
        """
        geometry = cls.from_spec(spec)
        return geometry.build(spec.resolution, spd_tolerance), geometry.oracle()
