"""Shared fixtures: curvature contexts of the example geometries on small grids."""
import pytest

from pinchcheck.factory import GeometryFactory
from pinchcheck.integral_verifier import CurvatureContext


def make_context(kind: str, resolution: int, order: int = 4, **params):
    """Build a geometry, sample it and compute its curvature context."""
    geometry = GeometryFactory.get_geometry(kind, **params)
    m = geometry.build(resolution)
    ctx = CurvatureContext.from_metric(
        m, order,
        einstein=True if geometry.einstein else None,
        parallel_ricci=True if geometry.parallel_ricci else None,
    )
    return geometry, ctx


@pytest.fixture(scope="session")
def sphere():
    """Unit S^4 on a (12, 12, 12, 8) grid."""
    return make_context("round_sphere", 12)


@pytest.fixture(scope="session")
def product():
    """Unit S^2 x S^2 on a (16, 8, 16, 8) grid."""
    return make_context("product_spheres", 16)


@pytest.fixture(scope="session")
def wavy_torus():
    """Perturbed 4-torus on a 12^4 grid."""
    return make_context("perturbed_torus", 12, seed=3)


@pytest.fixture(scope="session")
def flat():
    """Flat 4-torus on an 8^4 grid."""
    return make_context("flat_torus", 8)


@pytest.fixture
def spec_file(tmp_path):
    """Write a spec file and return its path."""
    def write(text: str, name: str = "geometry.spec"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return write
